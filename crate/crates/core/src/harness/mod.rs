//! Disorder-averaged experiments, configuration, persistence and the
//! acceptance suite behind `selftest`.

pub mod acceptance;
pub mod census;
pub mod chaos;
pub mod config;
pub mod output;
pub mod stability;
pub mod theorem;

use serde::Serialize;

pub use census::{droplet_census, Census};
pub use chaos::{run_chaos_curve, ChaosCurve, ChaosPoint, CurveMode};
pub use config::{ExperimentConfig, PerturbationMode};
pub use stability::{stability_threshold, StabilityReport};
pub use theorem::{theorem_check, TheoremReport};

use crate::error::{Error, Result};
use crate::events::EventSpec;
use crate::model::BoxGeometry;
use crate::seed::derive_seed;

/// Draws allowed per replica before a run of degenerate instances is an error.
pub const REDRAW_CAP: u64 = 1000;

/// A replica draw thrown away because its instance was degenerate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Redraw {
    pub replica: u64,
    pub discarded_seed: u64,
    pub reason: String,
}

/// Runs `draw` on the replica seed, then on fresh sub-seeds for as long as it
/// reports a degenerate instance. Returns the value, the seed that produced it
/// and the discarded draws.
pub(crate) fn with_redraws<T>(
    master: u64,
    label: &str,
    replica: u64,
    draw: impl Fn(u64) -> Result<T>,
) -> Result<(T, u64, Vec<Redraw>)> {
    let first = derive_seed(master, label, replica);
    let mut redraws = Vec::new();
    for attempt in 0..REDRAW_CAP {
        let seed = if attempt == 0 { first } else { derive_seed(first, "attempt", attempt) };
        match draw(seed) {
            Err(e @ Error::Degenerate { .. }) => redraws.push(Redraw {
                replica,
                discarded_seed: seed,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
            Ok(value) => return Ok((value, seed, redraws)),
        }
    }
    Err(Error::TooRare { attempts: REDRAW_CAP })
}

/// A super-satisfied event on the edge leaving the centre site along the
/// last axis; the fallback when a config names no event.
pub fn default_event(geometry: &BoxGeometry) -> Result<EventSpec> {
    let x: Vec<i64> = geometry.sides().iter().map(|&s| (s as i64 - 1) / 2).collect();
    let mut y = x.clone();
    *y.last_mut().ok_or_else(|| Error::InvalidGeometry("zero-dimensional box".into()))? += 1;
    let event = EventSpec::SuperSatisfied { x, y };
    event.layout(geometry)?;
    Ok(event)
}

/// Mean and standard error (sample variance over `n - 1`) of `values`;
/// the error is NaN for a single value.
pub(crate) fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = crate::numeric::compensated_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss = crate::numeric::compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, (ss / (n - 1.0) / n).sqrt())
}
