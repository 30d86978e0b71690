use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::CouplingField;
use crate::solver::ground_state;

/// Exponents of the stability grid `2^k`.
pub const GRID_EXPONENTS: std::ops::RangeInclusive<i32> = -20..=4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    /// Largest `2^k` such that the ground state is unchanged at every grid
    /// point up to it; zero when even the first point moves it.
    pub grid_threshold: f64,
    /// `margin / (2 Σ|ε_e|)`: below it no energy ordering can change.
    pub sufficient_bound: f64,
    pub threshold: f64,
    pub margin: f64,
}

/// How far `J` can move along `ε` before its ground state changes.
pub fn stability_threshold(field: &CouplingField, eps: &CouplingField) -> Result<StabilityReport> {
    field.same_geometry(eps)?;
    let base = ground_state(field)?;
    let mut grid_threshold = 0.0;
    for k in GRID_EXPONENTS {
        let t = 2f64.powi(k);
        match ground_state(&field.perturb(eps, t)?) {
            Ok(moved) if moved.configuration == base.configuration => grid_threshold = t,
            Ok(_) | Err(Error::Degenerate { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    let sufficient_bound = base.margin / (2.0 * eps.abs_sum());
    Ok(StabilityReport {
        grid_threshold,
        sufficient_bound,
        threshold: grid_threshold.max(sufficient_bound),
        margin: base.margin,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{BoundaryMode, BoxGeometry, Disorder, PerturbationPair};

    #[test]
    fn thresholds_are_positive_and_scale() {
        let g = Arc::new(BoxGeometry::cube(2, 4, BoundaryMode::Fixed).unwrap());
        let dist = Disorder::standard_gaussian();
        for seed in 0..200 {
            let j = CouplingField::sample(Arc::clone(&g), &dist, seed).unwrap();
            let p = PerturbationPair::draw(Arc::clone(&g), &dist, seed).unwrap();
            let r = stability_threshold(&j, &p.eps).unwrap();
            assert!(r.threshold > 0.0 && r.sufficient_bound > 0.0);
            assert!(r.threshold >= r.sufficient_bound);
            let below = j.perturb(&p.eps, r.sufficient_bound * (1.0 - 1e-9)).unwrap();
            assert_eq!(ground_state(&below).unwrap().configuration, ground_state(&j).unwrap().configuration);
            if seed % 20 == 0 {
                let double = p.eps.perturb(&p.eps, 1.0).unwrap();
                let r2 = stability_threshold(&j, &double).unwrap();
                let lo = 2f64.powi(*GRID_EXPONENTS.start());
                if r.grid_threshold > lo && r.grid_threshold < 2f64.powi(*GRID_EXPONENTS.end()) {
                    assert_eq!(r2.grid_threshold, r.grid_threshold / 2.0);
                }
                assert!((r2.sufficient_bound - r.sufficient_bound / 2.0).abs() < 1e-15);
            }
        }
    }
}
