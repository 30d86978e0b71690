//! Top-two transfer-matrix dynamic programming for one-dimensional boxes.

use crate::error::{Error, Result};
use crate::model::field::CouplingField;
use crate::model::geometry::Node;

use super::enumerate::{raw_energy, Candidate, Extremes};

#[derive(Debug, Clone, Copy)]
struct Entry {
    energy: f64,
    prev: usize,
    rank: usize,
}

type Layer = [[Option<Entry>; 2]; 2];

const SPIN: [f64; 2] = [1.0, -1.0];

struct Chain {
    field: Vec<f64>,
    bond: Vec<f64>,
    bond_edge: Vec<usize>,
    wrap_edge: Option<usize>,
}

impl Chain {
    fn new(field: &CouplingField) -> Result<Self> {
        let g = field.geometry();
        if g.dim() != 1 {
            return Err(Error::InvalidGeometry(
                "chain dynamic programming needs a one-dimensional box".into(),
            ));
        }
        let n = g.site_count();
        let mut chain = Chain {
            field: vec![0.0; n],
            bond: vec![0.0; n.saturating_sub(1)],
            bond_edge: vec![usize::MAX; n.saturating_sub(1)],
            wrap_edge: None,
        };
        for (id, e) in g.edges().iter().enumerate() {
            let j = field.get(id);
            match (e.lo, e.hi) {
                (Node::Site(a), Node::Site(b)) => {
                    let (a, b) = (a.min(b), a.max(b));
                    if b == a + 1 {
                        chain.bond[a] = j;
                        chain.bond_edge[a] = id;
                    } else {
                        // periodic wrap; site 0 is pinned so it acts as a field on the last site
                        chain.field[b] += j;
                        chain.wrap_edge = Some(id);
                    }
                }
                (Node::Site(a), Node::Boundary(_)) | (Node::Boundary(_), Node::Site(a)) => {
                    chain.field[a] += j;
                }
                _ => unreachable!("edges never join two boundary vertices"),
            }
        }
        Ok(chain)
    }
}

fn push(slot: &mut [Option<Entry>; 2], candidate: Entry) {
    let beats = |e: Option<Entry>| e.is_none_or(|e| candidate.energy < e.energy);
    if beats(slot[0]) {
        slot[1] = slot[0];
        slot[0] = Some(candidate);
    } else if beats(slot[1]) {
        slot[1] = Some(candidate);
    }
}

/// Lowest two configurations of a one-dimensional box, optionally restricted
/// to `s_x s_y = sign` on one interior edge. Under free and periodic modes site
/// 0 is pinned to +1.
pub(crate) fn chain_extremes(field: &CouplingField, constraint: Option<(usize, i8)>) -> Result<Extremes> {
    let chain = Chain::new(field)?;
    let g = field.geometry();
    let n = g.site_count();
    let pinned = g.mode().has_flip_symmetry();

    let mut bond_rule = vec![None; n.saturating_sub(1)];
    let mut last_rule = None;
    if let Some((edge, sign)) = constraint {
        if !g.edge(edge).is_interior() {
            return Err(Error::InvalidGeometry(format!("edge {edge} is not an interior edge")));
        }
        let sign = if sign >= 0 { 1.0 } else { -1.0 };
        if chain.wrap_edge == Some(edge) {
            last_rule = Some(sign);
        } else {
            let pos = chain.bond_edge.iter().position(|&b| b == edge).expect("interior chain edge");
            bond_rule[pos] = Some(sign);
        }
    }
    let allowed_last = |state: usize| last_rule.is_none_or(|s| SPIN[state] == s);

    let mut layers: Vec<Layer> = Vec::with_capacity(n);
    let mut first: Layer = [[None; 2]; 2];
    for state in 0..2 {
        if pinned && state == 1 {
            continue;
        }
        first[state][0] = Some(Entry {
            energy: -chain.field[0] * SPIN[state],
            prev: usize::MAX,
            rank: 0,
        });
    }
    layers.push(first);
    for i in 1..n {
        let mut layer: Layer = [[None; 2]; 2];
        for (state, slot) in layer.iter_mut().enumerate() {
            for prev in 0..2 {
                if let Some(sign) = bond_rule[i - 1] {
                    if SPIN[prev] * SPIN[state] != sign {
                        continue;
                    }
                }
                for rank in 0..2 {
                    let Some(entry) = layers[i - 1][prev][rank] else {
                        continue;
                    };
                    let energy = entry.energy
                        - chain.bond[i - 1] * SPIN[prev] * SPIN[state]
                        - chain.field[i] * SPIN[state];
                    push(slot, Entry { energy, prev, rank });
                }
            }
        }
        layers.push(layer);
    }

    let mut ends: Vec<(f64, usize, usize)> = Vec::new();
    for state in 0..2 {
        if n == 1 && pinned && state == 1 {
            continue;
        }
        if !allowed_last(state) {
            continue;
        }
        for rank in 0..2 {
            if let Some(entry) = layers[n - 1][state][rank] {
                ends.push((entry.energy, state, rank));
            }
        }
    }
    ends.sort_by(|a, b| a.0.total_cmp(&b.0));

    let trace = |mut state: usize, mut rank: usize| -> Vec<i8> {
        let mut spins = vec![0i8; n];
        for i in (0..n).rev() {
            spins[i] = if state == 0 { 1 } else { -1 };
            let entry = layers[i][state][rank].expect("traced entry exists");
            state = entry.prev;
            rank = entry.rank;
        }
        spins
    };
    let mut found = ends.iter().take(2).map(|&(_, state, rank)| {
        let spins = trace(state, rank);
        let raw: Vec<f64> = spins.iter().map(|&s| f64::from(s)).collect();
        Candidate {
            energy: raw_energy(field, &raw),
            spins,
        }
    });
    let best = found
        .next()
        .ok_or_else(|| Error::InvalidGeometry("constraint admits no configuration".into()))?;
    let second = found.next();
    Ok(match second {
        Some(s) if s.energy < best.energy => Extremes {
            best: s,
            second: Some(best),
        },
        second => Extremes { best, second },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BoundaryMode, BoxGeometry, Disorder};
    use crate::solver::enumerate::Enumerator;
    use std::sync::Arc;

    #[test]
    fn matches_enumeration_in_every_mode() {
        for mode in [BoundaryMode::Fixed, BoundaryMode::Free, BoundaryMode::Periodic] {
            for len in 3..10 {
                let g = Arc::new(BoxGeometry::new(1, &[len], mode).unwrap());
                let f = CouplingField::sample(g, &Disorder::standard_gaussian(), len as u64).unwrap();
                let dp = chain_extremes(&f, None).unwrap();
                let en = Enumerator::canonical(&f).unwrap().extremes();
                assert_eq!(dp.best.spins, en.best.spins, "{mode} {len}");
                assert!((dp.gap() - en.gap()).abs() < 1e-12);
                for &edge in f.geometry().interior_edges() {
                    for sign in [1, -1] {
                        let dp = chain_extremes(&f, Some((edge, sign))).unwrap();
                        let en = Enumerator::sector(&f, edge, sign).unwrap().extremes();
                        assert_eq!(dp.best.spins, en.best.spins, "{mode} {len} edge {edge}");
                    }
                }
            }
        }
    }
}
