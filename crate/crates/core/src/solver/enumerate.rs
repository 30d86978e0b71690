//! Gray-code enumeration of spin configurations with O(degree) energy updates.
//!
//! A problem is a list of *variables*, each a group of sites that flip together,
//! plus a starting assignment for every site. Pinned sites simply never appear
//! in a group. Consecutive configurations differ by one variable flip, and the
//! energy change of flipping a group is `2 Σ_{b ∈ ∂group} J_b s_b`.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::field::CouplingField;
use crate::model::geometry::Node;
use crate::numeric::CompensatedSum;

/// Chunks are fixed by problem size alone so results never depend on thread count.
const CHUNK_BITS: u32 = 4;
const CHUNK_THRESHOLD: usize = 14;

#[derive(Debug, Clone, Copy)]
struct Bond {
    weight: f64,
    site: u32,
    other: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub energy: f64,
    pub spins: Vec<i8>,
}

/// Best and second-best configuration of an enumeration.
#[derive(Debug, Clone)]
pub struct Extremes {
    pub best: Candidate,
    pub second: Option<Candidate>,
}

impl Extremes {
    pub fn gap(&self) -> f64 {
        self.second
            .as_ref()
            .map_or(f64::INFINITY, |s| s.energy - self.best.energy)
    }
}

pub(crate) struct Enumerator<'a> {
    field: &'a CouplingField,
    groups: Vec<Vec<usize>>,
    base: Vec<f64>,
    bonds: Vec<Vec<Bond>>,
}

/// Exact energy of a raw ±1.0 assignment, boundary spins +1.
pub(crate) fn raw_energy(field: &CouplingField, spins: &[f64]) -> f64 {
    let g = field.geometry();
    let spin = |n: Node| match n {
        Node::Site(i) => spins[i],
        Node::Boundary(_) => 1.0,
    };
    let mut acc = CompensatedSum::default();
    for (e, j) in g.edges().iter().zip(field.values()) {
        acc.add(-j * spin(e.lo) * spin(e.hi));
    }
    acc.value()
}

fn compare(a: &(f64, Vec<i8>), b: &(f64, Vec<i8>)) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1))
}

impl<'a> Enumerator<'a> {
    fn build(field: &'a CouplingField, groups: Vec<Vec<usize>>, base: Vec<f64>) -> Result<Self> {
        if groups.len() > 62 {
            return Err(Error::TooLarge {
                spins: groups.len(),
                limit: 62,
            });
        }
        let g = field.geometry();
        let mut owner = vec![usize::MAX; g.site_count()];
        for (v, group) in groups.iter().enumerate() {
            for &s in group {
                owner[s] = v;
            }
        }
        let bonds = groups
            .iter()
            .enumerate()
            .map(|(v, group)| {
                let mut list = Vec::new();
                for &s in group {
                    for &(edge, other) in g.incident(s) {
                        let other = match other {
                            Node::Site(o) if owner[o] == v => continue,
                            Node::Site(o) => o as u32,
                            // the slot past the last site permanently holds +1
                            Node::Boundary(_) => owner.len() as u32,
                        };
                        list.push(Bond {
                            weight: field.get(edge),
                            site: s as u32,
                            other,
                        });
                    }
                }
                list
            })
            .collect();
        Ok(Self {
            field,
            groups,
            base,
            bonds,
        })
    }

    /// Every site free, starting from all +1: the full configuration space.
    pub fn full(field: &'a CouplingField) -> Result<Self> {
        let n = field.geometry().site_count();
        Self::build(field, (0..n).map(|s| vec![s]).collect(), vec![1.0; n])
    }

    /// One representative per flip class: site 0 pinned to +1 when the
    /// Hamiltonian has global flip symmetry.
    pub fn canonical(field: &'a CouplingField) -> Result<Self> {
        let g = field.geometry();
        let n = g.site_count();
        let first = usize::from(g.mode().has_flip_symmetry() && n > 0);
        Self::build(field, (first..n).map(|s| vec![s]).collect(), vec![1.0; n])
    }

    /// Configurations with `s_x s_y = sign` on the interior edge `edge`,
    /// canonicalised as in [`Enumerator::canonical`].
    pub fn sector(field: &'a CouplingField, edge: usize, sign: i8) -> Result<Self> {
        let g = field.geometry();
        let e = g.edge(edge);
        let (Node::Site(x), Node::Site(y)) = (e.lo, e.hi) else {
            return Err(Error::InvalidGeometry(format!(
                "edge {edge} is not an interior edge"
            )));
        };
        let n = g.site_count();
        let sign = if sign >= 0 { 1.0 } else { -1.0 };
        let mut base = vec![1.0; n];
        base[y] = sign;
        let symmetric = g.mode().has_flip_symmetry();
        let mut groups = Vec::with_capacity(n);
        if !(symmetric && (x == 0 || y == 0)) {
            groups.push(vec![x, y]);
        }
        for s in 0..n {
            if s == x || s == y || (symmetric && s == 0) {
                continue;
            }
            groups.push(vec![s]);
        }
        if symmetric && y == 0 {
            // site 0 is the canonical +1 site
            base[x] = sign;
            base[y] = 1.0;
        }
        Self::build(field, groups, base)
    }

    #[cfg(test)]
    pub fn variable_count(&self) -> usize {
        self.groups.len()
    }

    /// Spins for the given variable bits, followed by the constant boundary slot.
    fn spins_for(&self, bits: u64) -> Vec<f64> {
        let mut spins = self.base.clone();
        spins.push(1.0);
        for (v, group) in self.groups.iter().enumerate() {
            if bits >> v & 1 == 1 {
                for &s in group {
                    spins[s] = -spins[s];
                }
            }
        }
        spins
    }

    /// Visits every configuration whose high variables are fixed to `high`,
    /// running the low `low_bits` variables through Gray-code order.
    pub fn walk<F: FnMut(u64, &[f64], f64)>(&self, high: u64, low_bits: u32, mut visit: F) {
        let mut bits = high << low_bits;
        let mut spins = self.spins_for(bits);
        let n = self.base.len();
        let mut energy = CompensatedSum::new(raw_energy(self.field, &spins[..n]));
        visit(bits, &spins[..n], energy.value());
        for k in 1..(1u64 << low_bits) {
            let v = k.trailing_zeros() as usize;
            let mut local = 0.0;
            for b in &self.bonds[v] {
                local += b.weight * spins[b.site as usize] * spins[b.other as usize];
            }
            energy.add(2.0 * local);
            for &s in &self.groups[v] {
                spins[s] = -spins[s];
            }
            bits ^= 1 << v;
            visit(bits, &spins[..n], energy.value());
        }
    }

    /// Visits the entire space in one sequential Gray-code sweep.
    pub fn walk_all<F: FnMut(u64, &[f64], f64)>(&self, visit: F) {
        self.walk(0, self.groups.len() as u32, visit)
    }

    pub fn energies(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(1 << self.groups.len());
        self.walk_all(|_, _, e| out.push(e));
        out
    }

    /// Folds every configuration into one accumulator per fixed chunk of the
    /// space. The chunk layout depends only on the variable count, so combining
    /// the returned accumulators in order gives schedule-independent results.
    pub fn fold_chunks<T, I, F>(&self, init: I, visit: F) -> Vec<T>
    where
        T: Send,
        I: Fn() -> T + Sync,
        F: Fn(&mut T, &[f64], f64) + Sync,
    {
        let m = self.groups.len();
        let chunk_bits = if m >= CHUNK_THRESHOLD { CHUNK_BITS } else { 0 };
        let low_bits = m as u32 - chunk_bits;
        (0..1u64 << chunk_bits)
            .into_par_iter()
            .map(|high| {
                let mut acc = init();
                self.walk(high, low_bits, |_, spins, e| visit(&mut acc, spins, e));
                acc
            })
            .collect()
    }

    fn to_spins(&self, bits: u64) -> Vec<i8> {
        let mut spins = self.spins_for(bits);
        spins.pop();
        spins
            .into_iter()
            .map(|s| if s > 0.0 { 1 } else { -1 })
            .collect()
    }

    /// Lowest two configurations, ties broken by lexicographic spin order.
    pub fn extremes(&self) -> Extremes {
        let m = self.groups.len();
        let chunk_bits = if m >= CHUNK_THRESHOLD { CHUNK_BITS } else { 0 };
        let low_bits = m as u32 - chunk_bits;
        let per_chunk: Vec<Vec<(f64, u64)>> = (0..1u64 << chunk_bits)
            .into_par_iter()
            .map(|high| {
                let mut best = (f64::INFINITY, u64::MAX);
                let mut second = (f64::INFINITY, u64::MAX);
                self.walk(high, low_bits, |bits, _, e| {
                    if e < best.0 {
                        second = best;
                        best = (e, bits);
                    } else if e < second.0 {
                        second = (e, bits);
                    }
                });
                [best, second]
                    .into_iter()
                    .filter(|c| c.1 != u64::MAX)
                    .collect()
            })
            .collect();

        let mut candidates: Vec<(f64, Vec<i8>)> = per_chunk
            .into_iter()
            .flatten()
            .map(|(e, bits)| (e, self.to_spins(bits)))
            .collect();
        candidates.sort_by(compare);
        let mut exact = candidates.into_iter().take(2).map(|(_, spins)| {
            let raw: Vec<f64> = spins.iter().map(|&s| f64::from(s)).collect();
            Candidate {
                energy: raw_energy(self.field, &raw),
                spins,
            }
        });
        let best = exact.next().expect("at least one configuration");
        let second = exact.next();
        match second {
            Some(s) if s.energy < best.energy => Extremes {
                best: s,
                second: Some(best),
            },
            second => Extremes { best, second },
        }
    }
}
