//! Ferromagnetic-interval blocks: the block radius condition, satisfied-edge
//! density and the fully satisfied modification of a ground state.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::CouplingField;
use crate::numeric::compensated_sum;
use crate::solver::{energy, ground_state, SpinConfiguration};

/// Edges of the ℓ∞ ball of radius `m` in Z^d.
pub fn block_edge_count(dim: usize, m: usize) -> usize {
    dim * 2 * m * (2 * m + 1).pow(dim as u32 - 1)
}

/// Interior edges of a box of side `side` in Z^d, `d (side - 1) side^(d-1)`.
pub fn side_box_edge_count(dim: usize, side: usize) -> usize {
    dim * side.saturating_sub(1) * side.pow(dim as u32 - 1)
}

/// Smallest `M ≥ 1` with `min(|a|,|b|) M^d > 2d (2M+1)^(d-1) max(|a|,|b|)`.
pub fn minimal_block_radius(dim: usize, a: f64, b: f64) -> Result<usize> {
    if dim == 0 || !(a <= b) || (a <= 0.0 && b >= 0.0) {
        return Err(Error::InvalidEvent(format!(
            "need d ≥ 1 and an interval [{a},{b}] excluding 0"
        )));
    }
    let (small, large) = (a.abs().min(b.abs()), a.abs().max(b.abs()));
    let d = dim as i32;
    let mut m = 1usize;
    loop {
        let mf = m as f64;
        if small * mf.powi(d) > 2.0 * f64::from(d) * (2.0 * mf + 1.0).powi(d - 1) * large {
            return Ok(m);
        }
        m += 1;
    }
}

/// Fraction of ball edges `f` with `J_f σ_f > 0` in the ground state.
pub fn block_satisfaction_density(field: &CouplingField, center: usize, radius: usize) -> Result<f64> {
    let ground = ground_state(field)?.configuration;
    satisfaction_density(field, &ground, center, radius)
}

pub fn satisfaction_density(
    field: &CouplingField,
    spins: &SpinConfiguration,
    center: usize,
    radius: usize,
) -> Result<f64> {
    let ball = field.geometry().ball(center, radius)?;
    if ball.edges.is_empty() {
        return Err(Error::InvalidEvent("the block has no edges".into()));
    }
    let satisfied = ball
        .edges
        .iter()
        .filter(|&&f| field.get(f) * f64::from(spins.edge_product(f)) > 0.0)
        .count();
    Ok(satisfied as f64 / ball.edges.len() as f64)
}

/// `spins` with the ball replaced by `sign^{‖x‖₁}`, which satisfies every
/// ball edge whose coupling has sign `sign`.
pub fn satisfied_configuration(
    spins: &SpinConfiguration,
    center: usize,
    radius: usize,
    sign: i8,
) -> Result<SpinConfiguration> {
    let g = spins.geometry_arc();
    let ball = g.ball(center, radius)?;
    let mut values = spins.spins().to_vec();
    for &x in &ball.sites {
        let parity = g.site_coords(x).iter().map(|c| c.unsigned_abs()).sum::<u64>();
        values[x] = if sign < 0 && parity % 2 == 1 { -1 } else { 1 };
    }
    SpinConfiguration::new(Arc::clone(g), values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecomposition {
    /// `H(σ̄) - H(σ)` from two full energy evaluations.
    pub direct: f64,
    /// `-Σ_{f ∈ B*} J_f (σ̄_f - σ_f)`.
    pub inside: f64,
    /// `-Σ_{f ∈ ∂B} J_f (σ̄_f - σ_f)`.
    pub boundary: f64,
    /// `-2 Σ |J_f|` over ball edges unsatisfied by σ.
    pub unsatisfied_weight: f64,
    pub unsatisfied: usize,
    pub boundary_edges: usize,
}

pub fn block_energy_decomposition(
    field: &CouplingField,
    spins: &SpinConfiguration,
    center: usize,
    radius: usize,
    sign: i8,
) -> Result<BlockDecomposition> {
    let modified = satisfied_configuration(spins, center, radius, sign)?;
    let ball = field.geometry().ball(center, radius)?;
    let change = |edges: &[usize]| {
        -compensated_sum(edges.iter().map(|&f| {
            field.get(f) * f64::from(modified.edge_product(f) - spins.edge_product(f))
        }))
    };
    let unsat: Vec<usize> = ball
        .edges
        .iter()
        .copied()
        .filter(|&f| field.get(f) * f64::from(spins.edge_product(f)) < 0.0)
        .collect();
    Ok(BlockDecomposition {
        direct: energy(field, &modified)? - energy(field, spins)?,
        inside: change(&ball.edges),
        boundary: change(&ball.boundary),
        unsatisfied_weight: -2.0 * compensated_sum(unsat.iter().map(|&f| field.get(f).abs())),
        unsatisfied: unsat.len(),
        boundary_edges: ball.boundary.len(),
    })
}
