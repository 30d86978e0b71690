//! Energies, exact ground states, edge-constrained ground states and overlaps.

mod chain;
pub(crate) mod enumerate;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::field::CouplingField;
use crate::model::geometry::{BoxGeometry, Node};
use crate::numeric::CompensatedSum;

pub use enumerate::{Candidate, Extremes};
use enumerate::Enumerator;

/// Largest box solved by exhaustive enumeration.
pub const ENUMERATION_LIMIT: usize = 28;
/// Largest box certified by scanning every subset.
pub const VERIFY_LIMIT: usize = 16;

/// A ±1 assignment on the sites of a box. Boundary vertices carry +1 under
/// fixed mode and do not exist otherwise.
#[derive(Debug, Clone)]
pub struct SpinConfiguration {
    geometry: Arc<BoxGeometry>,
    spins: Vec<i8>,
}

impl PartialEq for SpinConfiguration {
    fn eq(&self, other: &Self) -> bool {
        self.geometry == other.geometry && self.spins == other.spins
    }
}

impl Eq for SpinConfiguration {}

fn same(a: &Arc<BoxGeometry>, b: &Arc<BoxGeometry>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::GeometryMismatch)
    }
}

impl SpinConfiguration {
    pub fn new(geometry: Arc<BoxGeometry>, spins: Vec<i8>) -> Result<Self> {
        if spins.len() != geometry.site_count() {
            return Err(Error::InvalidGeometry(format!(
                "{} spins for a box of {} sites",
                spins.len(),
                geometry.site_count()
            )));
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Parse("spins must be +1 or -1".into()));
        }
        Ok(Self { geometry, spins })
    }

    pub fn all_up(geometry: Arc<BoxGeometry>) -> Self {
        let n = geometry.site_count();
        Self {
            geometry,
            spins: vec![1; n],
        }
    }

    pub fn geometry(&self) -> &BoxGeometry {
        &self.geometry
    }

    pub fn geometry_arc(&self) -> &Arc<BoxGeometry> {
        &self.geometry
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn spin(&self, site: usize) -> i8 {
        self.spins[site]
    }

    pub fn node_spin(&self, node: Node) -> i8 {
        match node {
            Node::Site(s) => self.spins[s],
            Node::Boundary(_) => 1,
        }
    }

    /// `s_x s_y` on edge `edge`.
    pub fn edge_product(&self, edge: usize) -> i8 {
        let e = self.geometry.edge(edge);
        self.node_spin(e.lo) * self.node_spin(e.hi)
    }

    pub fn flipped(&self, sites: &[usize]) -> Self {
        let mut out = self.clone();
        for &s in sites {
            out.spins[s] = -out.spins[s];
        }
        out
    }

    pub fn negated(&self) -> Self {
        Self {
            geometry: Arc::clone(&self.geometry),
            spins: self.spins.iter().map(|s| -s).collect(),
        }
    }

    /// The flip representative with site 0 up when the box has flip symmetry.
    pub fn canonical(&self) -> Self {
        if self.geometry.mode().has_flip_symmetry() && self.spins.first() == Some(&-1) {
            self.negated()
        } else {
            self.clone()
        }
    }

    /// Sites where the two configurations differ.
    pub fn disagreement(&self, other: &SpinConfiguration) -> Result<Vec<usize>> {
        same(&self.geometry, &other.geometry)?;
        Ok((0..self.spins.len())
            .filter(|&i| self.spins[i] != other.spins[i])
            .collect())
    }

    /// `<geometry fingerprint>:<+ and - per site>`.
    pub fn to_text(&self) -> String {
        let body: String = self
            .spins
            .iter()
            .map(|&s| if s > 0 { '+' } else { '-' })
            .collect();
        format!("{}:{body}", self.geometry.fingerprint())
    }

    pub fn from_text(geometry: Arc<BoxGeometry>, text: &str) -> Result<Self> {
        let (fingerprint, body) = text
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("missing geometry prefix in {text:?}")))?;
        if fingerprint != geometry.fingerprint() {
            return Err(Error::GeometryMismatch);
        }
        let spins = body
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(Error::Parse(format!("unexpected spin character {other:?}"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        Self::new(geometry, spins)
    }
}

impl fmt::Display for SpinConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Enumeration,
    ChainDp,
}

impl SolveMethod {
    /// Chain DP for one-dimensional boxes, enumeration otherwise.
    pub fn for_geometry(geometry: &BoxGeometry) -> Self {
        if geometry.dim() == 1 {
            SolveMethod::ChainDp
        } else {
            SolveMethod::Enumeration
        }
    }
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMethod::Enumeration => "enumeration",
            SolveMethod::ChainDp => "chain-dp",
        })
    }
}

#[derive(Debug, Clone)]
pub struct GroundStateSolution {
    pub configuration: SpinConfiguration,
    pub energy: f64,
    pub method: SolveMethod,
    /// Energy gap to the best inequivalent competitor.
    pub margin: f64,
}

/// Gaps at or below this value count as ties.
pub fn tie_tolerance(field: &CouplingField) -> f64 {
    1e-12 * field.abs_sum().max(1.0)
}

pub fn energy(field: &CouplingField, s: &SpinConfiguration) -> Result<f64> {
    same(field.geometry_arc(), &s.geometry)?;
    let mut acc = CompensatedSum::default();
    for (id, j) in field.values().iter().enumerate() {
        acc.add(-j * f64::from(s.edge_product(id)));
    }
    Ok(acc.value())
}

fn checked_set(geometry: &BoxGeometry, sites: &[usize]) -> Result<Vec<bool>> {
    let mut member = vec![false; geometry.site_count()];
    for &s in sites {
        if s >= geometry.site_count() {
            return Err(Error::OutsideBox(format!("site {s}")));
        }
        member[s] = true;
    }
    Ok(member)
}

/// `H(s with the sites flipped) - H(s) = 2 Σ_{b ∈ ∂set} J_b s_b`.
pub fn flip_energy(field: &CouplingField, s: &SpinConfiguration, sites: &[usize]) -> Result<f64> {
    same(field.geometry_arc(), &s.geometry)?;
    let g = field.geometry();
    let member = checked_set(g, sites)?;
    let mut acc = CompensatedSum::default();
    let mut seen = vec![false; g.site_count()];
    for &x in sites {
        if std::mem::replace(&mut seen[x], true) {
            continue;
        }
        for &(edge, other) in g.incident(x) {
            let outside = match other {
                Node::Site(o) => !member[o],
                Node::Boundary(_) => true,
            };
            if outside {
                acc.add(field.get(edge) * f64::from(s.edge_product(edge)));
            }
        }
    }
    Ok(2.0 * acc.value())
}

fn extremes(field: &CouplingField, method: SolveMethod, constraint: Option<(usize, i8)>) -> Result<Extremes> {
    let g = field.geometry();
    if let Some((edge, _)) = constraint {
        if edge >= g.edge_count() || !g.edge(edge).is_interior() {
            return Err(Error::InvalidGeometry(format!("edge {edge} is not an interior edge")));
        }
    }
    match method {
        SolveMethod::ChainDp => chain::chain_extremes(field, constraint),
        SolveMethod::Enumeration => {
            if g.site_count() > ENUMERATION_LIMIT {
                return Err(Error::TooLarge {
                    spins: g.site_count(),
                    limit: ENUMERATION_LIMIT,
                });
            }
            let en = match constraint {
                None => Enumerator::canonical(field)?,
                Some((edge, sign)) => Enumerator::sector(field, edge, sign)?,
            };
            Ok(en.extremes())
        }
    }
}

/// Lowest two energies of the sector `s_x s_y = sign` without any tie check.
pub fn sector_extremes(field: &CouplingField, edge: usize, sign: i8) -> Result<Extremes> {
    extremes(field, SolveMethod::for_geometry(field.geometry()), Some((edge, sign)))
}

fn finish(field: &CouplingField, ext: Extremes, method: SolveMethod) -> Result<GroundStateSolution> {
    let margin = ext.gap();
    let tolerance = tie_tolerance(field);
    if margin <= tolerance {
        return Err(Error::Degenerate {
            gap: margin,
            tolerance,
        });
    }
    Ok(GroundStateSolution {
        configuration: SpinConfiguration::new(Arc::clone(field.geometry_arc()), ext.best.spins)?,
        energy: ext.best.energy,
        method,
        margin,
    })
}

/// Exact ground state, canonical under flip-symmetric modes.
pub fn ground_state(field: &CouplingField) -> Result<GroundStateSolution> {
    ground_state_by(field, SolveMethod::for_geometry(field.geometry()))
}

pub fn ground_state_by(field: &CouplingField, method: SolveMethod) -> Result<GroundStateSolution> {
    finish(field, extremes(field, method, None)?, method)
}

/// Minimiser over configurations with `s_x s_y = sign` on the interior edge `edge`.
pub fn constrained_ground_state(field: &CouplingField, edge: usize, sign: i8) -> Result<GroundStateSolution> {
    let method = SolveMethod::for_geometry(field.geometry());
    finish(field, extremes(field, method, Some((edge, sign)))?, method)
}

/// `(1/|Λ*|) Σ_{e ∈ Λ*} σ_e σ'_e`.
pub fn overlap(a: &SpinConfiguration, b: &SpinConfiguration) -> Result<f64> {
    same(&a.geometry, &b.geometry)?;
    let interior = a.geometry.interior_edges();
    if interior.is_empty() {
        return Err(Error::InvalidGeometry("box has no interior edges".into()));
    }
    let total: i64 = interior
        .iter()
        .map(|&e| i64::from(a.edge_product(e) * b.edge_product(e)))
        .sum();
    Ok(total as f64 / interior.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    /// Every nonempty subset; a complete certificate.
    Exhaustive,
    /// Connected clusters up to the given size.
    Clusters { max_size: usize },
}

#[derive(Debug, Clone)]
pub struct Verification {
    /// True iff every tested flip strictly raised the energy.
    pub certified: bool,
    pub tested: u64,
    pub min_flip_energy: f64,
    /// The tested set with the lowest flip energy, when that energy is not positive.
    pub violation: Option<Vec<usize>>,
}

fn connected_clusters(g: &BoxGeometry, max_size: usize) -> BTreeSet<Vec<usize>> {
    let mut all = BTreeSet::new();
    let mut frontier: BTreeSet<Vec<usize>> = (0..g.site_count()).map(|s| vec![s]).collect();
    for _ in 0..max_size {
        let mut next = BTreeSet::new();
        for set in &frontier {
            all.insert(set.clone());
            for &s in set {
                for &(_, other) in g.incident(s) {
                    if let Node::Site(o) = other {
                        if let Err(pos) = set.binary_search(&o) {
                            let mut grown = set.clone();
                            grown.insert(pos, o);
                            next.insert(grown);
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    all
}

/// Checks that flipping any tested set of sites strictly raises the energy.
/// Under flip-symmetric modes the whole box is never tested.
pub fn verify_ground_state(field: &CouplingField, s: &SpinConfiguration, mode: VerifyMode) -> Result<Verification> {
    same(field.geometry_arc(), &s.geometry)?;
    let g = field.geometry();
    let n = g.site_count();
    let skip_full = g.mode().has_flip_symmetry();
    let mut out = Verification {
        certified: true,
        tested: 0,
        min_flip_energy: f64::INFINITY,
        violation: None,
    };
    let mut record = |value: f64, sites: &dyn Fn() -> Vec<usize>| {
        out.tested += 1;
        if value < out.min_flip_energy {
            out.min_flip_energy = value;
            if value <= 0.0 {
                out.certified = false;
                out.violation = Some(sites());
            }
        }
    };
    match mode {
        VerifyMode::Exhaustive => {
            if n > VERIFY_LIMIT {
                return Err(Error::TooLarge {
                    spins: n,
                    limit: VERIFY_LIMIT,
                });
            }
            let terms: Vec<(u64, u64, f64)> = g
                .edges()
                .iter()
                .enumerate()
                .map(|(id, e)| {
                    let bit = |node: Node| node.site().map_or(0, |i| 1u64 << i);
                    (bit(e.lo), bit(e.hi), field.get(id) * f64::from(s.edge_product(id)))
                })
                .collect();
            let full = (1u64 << n) - 1;
            for mask in 1..=full {
                if skip_full && mask == full {
                    continue;
                }
                let mut acc = CompensatedSum::default();
                for &(a, b, w) in &terms {
                    if (mask & a != 0) != (mask & b != 0) {
                        acc.add(w);
                    }
                }
                record(2.0 * acc.value(), &|| (0..n).filter(|&i| mask >> i & 1 == 1).collect());
            }
        }
        VerifyMode::Clusters { max_size } => {
            for set in connected_clusters(g, max_size.min(n)) {
                if skip_full && set.len() == n {
                    continue;
                }
                record(flip_energy(field, s, &set)?, &|| set.clone());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests;
