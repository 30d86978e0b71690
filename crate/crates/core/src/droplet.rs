//! Critical droplets, flexibility and critical values of single edges.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::field::CouplingField;
use crate::model::geometry::{BoundaryMode, Node};
use crate::solver::{sector_extremes, tie_tolerance, Extremes, SpinConfiguration};

/// Below this flexibility an edge counts as sitting on its kink.
pub const KINK_TOLERANCE: f64 = 1e-8;
/// Step used for finite-difference checks of the gradient.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct DropletReport {
    pub edge: usize,
    /// Sites where the two constrained ground states disagree.
    pub sites: Vec<usize>,
    /// Coupling edges with exactly one endpoint in the droplet.
    pub boundary: Vec<usize>,
    pub flexibility: f64,
    pub critical_value: f64,
    /// The endpoint of the edge inside the droplet.
    pub anchor: usize,
    pub plus: SpinConfiguration,
    pub minus: SpinConfiguration,
    pub plus_energy: f64,
    pub minus_energy: f64,
    /// Gap to the runner-up inside each sector.
    pub plus_gap: f64,
    pub minus_gap: f64,
    pub droplet_connected: bool,
    pub complement_connected: bool,
}

impl DropletReport {
    /// Sign of `σ_e` in the unconstrained ground state.
    pub fn ground_sign(&self) -> i8 {
        if self.plus_energy < self.minus_energy {
            1
        } else {
            -1
        }
    }

    pub fn ground_state(&self) -> &SpinConfiguration {
        if self.ground_sign() > 0 {
            &self.plus
        } else {
            &self.minus
        }
    }

    pub fn connected(&self) -> bool {
        self.droplet_connected && self.complement_connected
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusRow {
    pub edge: String,
    pub droplet_size: usize,
    pub flexibility: f64,
    pub critical_value: f64,
    pub connected: bool,
    pub anchored_endpoint: String,
}

fn sectors(field: &CouplingField, edge: usize) -> Result<(Extremes, Extremes)> {
    let g = field.geometry();
    if edge >= g.edge_count() || !g.edge(edge).is_interior() {
        return Err(Error::InvalidGeometry(format!("edge {edge} is not an interior edge")));
    }
    Ok((sector_extremes(field, edge, 1)?, sector_extremes(field, edge, -1)?))
}

/// `|H(σ^{+,e}) - H(σ^{-,e})|`; defined everywhere, including at ties.
pub fn flexibility(field: &CouplingField, edge: usize) -> Result<f64> {
    let (plus, minus) = sectors(field, edge)?;
    Ok((plus.best.energy - minus.best.energy).abs())
}

/// The value of `J_e` at which the flexibility vanishes, from the two sector minima.
pub fn critical_value(field: &CouplingField, edge: usize) -> Result<f64> {
    let (plus, minus) = sectors(field, edge)?;
    Ok(field.get(edge) + (plus.best.energy - minus.best.energy) / 2.0)
}

/// The critical value recovered as `J_e - sign(∂F/∂J_e) F / 2`, moving off
/// the kink by `FD_STEP` when the flexibility is too small to fix the sign.
pub fn critical_value_from_slope(field: &CouplingField, edge: usize) -> Result<f64> {
    let at = |f: &CouplingField| -> Result<f64> {
        let (plus, minus) = sectors(f, edge)?;
        let flex = (plus.best.energy - minus.best.energy).abs();
        let slope = if plus.best.energy < minus.best.energy { 1.0 } else { -1.0 };
        if flex < KINK_TOLERANCE {
            return Err(Error::NearKink { flexibility: flex });
        }
        Ok(f.get(edge) - slope * flex / 2.0)
    };
    match at(field) {
        Err(Error::NearKink { .. }) => {
            let mut shifted = field.clone();
            shifted.set(edge, field.get(edge) + FD_STEP);
            at(&shifted)
        }
        other => other,
    }
}

/// Both constrained ground states, the droplet they disagree on and its
/// connectivity. Fails when either sector has a tied runner-up.
pub fn critical_droplet(field: &CouplingField, edge: usize) -> Result<DropletReport> {
    let (plus, minus) = sectors(field, edge)?;
    let tolerance = tie_tolerance(field);
    for gap in [plus.gap(), minus.gap()] {
        if gap <= tolerance {
            return Err(Error::Degenerate { gap, tolerance });
        }
    }
    let g = field.geometry_arc();
    let plus_cfg = SpinConfiguration::new(Arc::clone(g), plus.best.spins.clone())?;
    let minus_cfg = SpinConfiguration::new(Arc::clone(g), minus.best.spins.clone())?;
    let sites = plus_cfg.disagreement(&minus_cfg)?;
    let mut member = vec![false; g.site_count()];
    for &s in &sites {
        member[s] = true;
    }
    let e = g.edge(edge);
    let (x, y) = (e.lo.site().expect("interior"), e.hi.site().expect("interior"));
    let anchor = if member[x] { x } else { y };
    debug_assert!(member[x] != member[y]);
    let complement: Vec<bool> = member.iter().map(|m| !m).collect();
    let fixed = g.mode() == BoundaryMode::Fixed;
    Ok(DropletReport {
        edge,
        boundary: g.edge_boundary(&sites)?,
        flexibility: (plus.best.energy - minus.best.energy).abs(),
        critical_value: field.get(edge) + (plus.best.energy - minus.best.energy) / 2.0,
        anchor,
        droplet_connected: g.is_connected(&member, false),
        complement_connected: g.is_connected(&complement, fixed),
        sites,
        plus_energy: plus.best.energy,
        minus_energy: minus.best.energy,
        plus_gap: plus.gap(),
        minus_gap: minus.gap(),
        plus: plus_cfg,
        minus: minus_cfg,
    })
}

/// `2 Σ_{b ∈ ∂D} J_b σ_b` for the ground state σ: the energy paid to flip the
/// droplet out of the ground state. Equals the flexibility.
pub fn boundary_flip_sum(field: &CouplingField, report: &DropletReport) -> f64 {
    let ground = report.ground_state();
    2.0 * report
        .boundary
        .iter()
        .map(|&b| field.get(b) * f64::from(ground.edge_product(b)))
        .sum::<f64>()
}

/// `∂F/∂J_b` for every coupling edge: `2σ_b` on the droplet boundary, zero elsewhere.
pub fn flexibility_gradient(field: &CouplingField, edge: usize) -> Result<Vec<f64>> {
    let report = critical_droplet(field, edge)?;
    gradient_of(&report, field)
}

pub fn gradient_of(report: &DropletReport, field: &CouplingField) -> Result<Vec<f64>> {
    if report.flexibility < KINK_TOLERANCE {
        return Err(Error::NearKink {
            flexibility: report.flexibility,
        });
    }
    let ground = report.ground_state();
    let mut grad = vec![0.0; field.geometry().edge_count()];
    for &b in &report.boundary {
        grad[b] = 2.0 * f64::from(ground.edge_product(b));
    }
    Ok(grad)
}

/// Central differences of the flexibility in every coupling, step `h`.
pub fn flexibility_finite_differences(field: &CouplingField, edge: usize, h: f64) -> Result<Vec<f64>> {
    (0..field.geometry().edge_count())
        .map(|b| {
            let mut up = field.clone();
            let mut down = field.clone();
            up.set(b, field.get(b) + h);
            down.set(b, field.get(b) - h);
            Ok((flexibility(&up, edge)? - flexibility(&down, edge)?) / (2.0 * h))
        })
        .collect()
}

/// Whether the sector minimisers and the ground-state sector stay put when
/// any single coupling moves by at most `h`.
pub fn stable_under(report: &DropletReport, h: f64) -> bool {
    let shift = 2.0 * h;
    report.plus_gap > shift && report.minus_gap > shift && report.flexibility > shift
}

pub fn census_row(field: &CouplingField, report: &DropletReport) -> CensusRow {
    let g = field.geometry();
    let e = g.edge(report.edge);
    let coords = |n: Node| crate::model::geometry::format_coords(g.node_coords(n));
    CensusRow {
        edge: format!("{}-{}", coords(e.lo), coords(e.hi)),
        droplet_size: report.sites.len(),
        flexibility: report.flexibility,
        critical_value: report.critical_value,
        connected: report.connected(),
        anchored_endpoint: crate::model::geometry::format_coords(g.site_coords(report.anchor)),
    }
}
