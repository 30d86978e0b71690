//! Boxes of Z^d, coupling distributions and coupling fields.

pub mod disorder;
pub mod field;
pub mod geometry;

pub use disorder::Disorder;
pub use field::{CouplingField, PerturbationPair};
pub use geometry::{Ball, BoundaryMode, BoxGeometry, Edge, Node};

use crate::error::{Error, Result};
use crate::solver::enumerate::Enumerator;

/// Largest box accepted by [`degeneracy_margin`].
pub const MARGIN_LIMIT: usize = 24;

/// Smallest energy gap between two inequivalent configurations; zero exactly
/// on the critical set.
pub fn degeneracy_margin(field: &CouplingField) -> Result<f64> {
    let n = field.geometry().site_count();
    if n > MARGIN_LIMIT {
        return Err(Error::TooLarge {
            spins: n,
            limit: MARGIN_LIMIT,
        });
    }
    let mut energies = Enumerator::canonical(field)?.energies();
    energies.sort_by(f64::total_cmp);
    Ok(energies
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min))
}
