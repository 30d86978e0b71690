use std::sync::Arc;

use serde::Serialize;

use super::chaos::{ChaosCurve, CurveMode};
use crate::error::{Error, Result};
use crate::events::{estimate_probability, EventSpec, Layout, ProbabilityEstimate};
use crate::model::{BoxGeometry, Disorder};
use crate::oracle::supersat_probability;

#[derive(Debug, Clone, Serialize)]
pub struct EventProbability {
    /// Value used in the threshold: exact when available, otherwise the
    /// upper end of the Monte-Carlo interval.
    pub value: f64,
    pub source: String,
    pub estimate: Option<ProbabilityEstimate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremPoint {
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
    /// `mean - 2 stderr`.
    pub lower: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    pub event: String,
    pub mode: CurveMode,
    pub delta: f64,
    pub probability: EventProbability,
    /// `(1 - δ) P(A)`.
    pub threshold: f64,
    pub points: Vec<TheoremPoint>,
    /// Last grid point of the longest passing prefix.
    pub t0: Option<f64>,
    /// True when `P(A) = 0`, so every point passes trivially.
    pub vacuous: bool,
    pub all_passed: bool,
}

/// `P(A)` in closed form or by quadrature, when the event and law allow it.
pub fn exact_probability(event: &EventSpec, dim: usize, dist: &Disorder) -> Result<Option<(f64, &'static str)>> {
    let (template, local) = match event {
        EventSpec::FlexibleCage { .. } => return Ok(None),
        _ => event.template(dim)?,
    };
    Ok(match local.layout(&template)? {
        Layout::Super { competitors, gap, .. }
            if gap == 0.0
                && dim <= 2
                && competitors.len() == 2 * dim - 1
                && matches!(dist, Disorder::Gaussian { mean, .. } if *mean == 0.0) =>
        {
            Some((supersat_probability(dim)?, "quadrature"))
        }
        Layout::Block { edges, lo, hi } => Some((dist.mass(lo, hi).powi(edges.len() as i32), "interval mass product")),
        _ => None,
    })
}

/// Marks every grid point where `mean - 2 stderr > (1 - δ) P(A)`.
#[allow(clippy::too_many_arguments)]
pub fn theorem_check(
    curve: &ChaosCurve,
    event: &EventSpec,
    geometry: &Arc<BoxGeometry>,
    dist: &Disorder,
    delta: f64,
    samples: u64,
    level: f64,
    seed: u64,
) -> Result<TheoremReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("delta must lie in (0,1), got {delta}")));
    }
    event.layout(geometry)?;
    let probability = match exact_probability(event, geometry.dim(), dist)? {
        Some((value, source)) => EventProbability {
            value,
            source: source.into(),
            estimate: None,
        },
        None => {
            let estimate = estimate_probability(event, geometry, dist, samples, seed, level)?;
            EventProbability {
                value: estimate.ci_hi,
                source: "monte-carlo upper bound".into(),
                estimate: Some(estimate),
            }
        }
    };
    let vacuous = probability.value == 0.0;
    let threshold = (1.0 - delta) * probability.value;
    let points: Vec<TheoremPoint> = curve
        .points
        .iter()
        .map(|p| {
            let lower = p.mean - 2.0 * p.stderr;
            TheoremPoint {
                t: p.t,
                mean: p.mean,
                stderr: p.stderr,
                lower,
                passed: vacuous || lower > threshold,
            }
        })
        .collect();
    let t0 = points.iter().take_while(|p| p.passed).last().map(|p| p.t);
    Ok(TheoremReport {
        event: event.to_string(),
        mode: curve.mode,
        delta,
        all_passed: points.iter().all(|p| p.passed),
        probability,
        threshold,
        points,
        t0,
        vacuous,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_chaos_curve, ExperimentConfig};

    #[test]
    fn exact_probabilities() {
        let gauss = Disorder::standard_gaussian();
        let e: EventSpec = "supersat e=(1,1)-(1,2)".parse().unwrap();
        let (p, source) = exact_probability(&e, 2, &gauss).unwrap().unwrap();
        assert_eq!(source, "quadrature");
        assert!((p - supersat_probability(2).unwrap()).abs() == 0.0);
        let block: EventSpec = "ferroblock v=(3) M=1 I=(1,1.2)".parse().unwrap();
        let (p, _) = exact_probability(&block, 1, &gauss).unwrap().unwrap();
        // the two ball edges and the two edges leaving the ball
        assert!((p - gauss.mass(1.0, 1.2).powi(4)).abs() < 1e-15);
        let uniform = Disorder::Uniform { lo: -1.0, hi: 1.0 };
        assert!(exact_probability(&e, 2, &uniform).unwrap().is_none());
    }

    #[test]
    fn zero_time_passes_and_empty_events_are_vacuous() {
        let cfg = ExperimentConfig::parse("sides = 3,3\nreplicas = 30\nt_grid = 0, 0.01, 2").unwrap();
        let curve = run_chaos_curve(&cfg).unwrap();
        let g = cfg.geometry().unwrap();
        let dist = &cfg.distribution;
        let e: EventSpec = "supersat e=(1,1)-(1,2)".parse().unwrap();
        let report = theorem_check(&curve, &e, &g, dist, 0.5, 1000, 0.95, 1).unwrap();
        assert!(report.points[0].passed && !report.vacuous);
        assert!(report.t0.unwrap() >= 0.0);
        let empty: EventSpec = "ferroblock v=(1,1) M=1 I=(50,51)".parse().unwrap();
        let report = theorem_check(&curve, &empty, &g, dist, 0.5, 1000, 0.95, 1).unwrap();
        assert!(report.vacuous && report.all_passed);
        assert_eq!(report.t0, Some(2.0));
        let uniform = Disorder::Uniform { lo: -1.0, hi: 1.0 };
        let mc = theorem_check(&curve, &e, &g, &uniform, 0.5, 2000, 0.95, 1).unwrap();
        let est = mc.probability.estimate.unwrap();
        assert_eq!(mc.probability.value, est.ci_hi);
    }
}
