use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use super::{cage_field_sign, slack_of, EventSpec, Layout};
use crate::droplet::flexibility;
use crate::error::{Error, Result};
use crate::model::disorder::REJECTION_CAP;
use crate::model::{BoxGeometry, CouplingField, Disorder};
use crate::seed::{derive_seed, rng_from_seed, Rng};

/// Full-box attempts allowed when a flexibility condition is involved.
pub const FLEX_ATTEMPTS: u64 = 20_000;
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Serialize)]
pub struct ProbabilityEstimate {
    pub event: String,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n: u64,
    pub seed: u64,
    pub level: f64,
}

/// Wilson score interval for `successes` out of `n` at two-sided `level`.
pub fn wilson_interval(successes: u64, n: u64, level: f64) -> Result<(f64, f64)> {
    if n == 0 || !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("need n > 0 and level in (0,1), got n={n}, level={level}")));
    }
    let z = Disorder::standard_gaussian().quantile(0.5 + level / 2.0);
    let (k, n) = (successes as f64, n as f64);
    let p = k / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    // clamped to contain the point estimate
    Ok(((center - half).max(0.0).min(p), (center + half).min(1.0).max(p)))
}

fn redraw(field: &mut CouplingField, deps: &[usize], dist: &Disorder, rng: &mut Rng) {
    for &e in deps {
        field.set(e, dist.sample(rng));
    }
}

fn fill_local(layout: &Layout, field: &mut CouplingField, dist: &Disorder, rng: &mut Rng) -> Result<()> {
    match layout {
        Layout::Super { .. } => {
            let deps = layout.dependencies();
            for _ in 0..REJECTION_CAP {
                redraw(field, &deps, dist, rng);
                if slack_of(layout, field)? > 0.0 {
                    return Ok(());
                }
            }
            Err(Error::TooRare {
                attempts: REJECTION_CAP,
            })
        }
        Layout::Block { edges, lo, hi } => {
            for &e in edges {
                field.set(e, dist.sample_within(rng, *lo, *hi)?);
            }
            Ok(())
        }
        Layout::Cage {
            spokes,
            ring,
            outer,
            scale,
            threshold,
            ..
        } => {
            let r = *scale;
            for &e in outer {
                field.set(e, dist.sample_within(rng, -r, r)?);
            }
            let want = cage_field_sign(Some(dist));
            let mut placed = false;
            for _ in 0..REJECTION_CAP {
                for &e in spokes {
                    field.set(e, dist.sample_within(rng, -r, r)?);
                }
                if want * spokes.iter().map(|&e| field.get(e)).sum::<f64>() > 0.0 {
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::TooRare {
                    attempts: REJECTION_CAP,
                });
            }
            let up = dist.mass(*threshold, f64::INFINITY);
            let down = dist.mass(f64::NEG_INFINITY, -threshold);
            if up <= 0.0 && down <= 0.0 {
                return Err(Error::TooRare { attempts: 0 });
            }
            // sign of the whole ring, weighted by the joint mass of each choice
            let k = ring.len() as i32;
            let p_up = if up <= 0.0 {
                0.0
            } else if down <= 0.0 {
                1.0
            } else {
                1.0 / (1.0 + (down / up).powi(k))
            };
            let positive = rng.random::<f64>() < p_up;
            for &e in ring {
                let j = if positive {
                    dist.sample_within(rng, *threshold, f64::INFINITY)?
                } else {
                    dist.sample_within(rng, f64::NEG_INFINITY, -threshold)?
                };
                field.set(e, j);
            }
            Ok(())
        }
        Layout::Flexible { .. } => unreachable!("flexible events are sampled on whole boxes"),
    }
}

/// A coupling field in the event: dependency coordinates are drawn from
/// `dist` conditioned on the event, all others unconditionally.
pub fn sample_witness(
    event: &EventSpec,
    geometry: Arc<BoxGeometry>,
    dist: &Disorder,
    seed: u64,
) -> Result<CouplingField> {
    let layout = event.layout(&geometry)?;
    if let Layout::Flexible { base, edge, threshold } = &layout {
        let EventSpec::FlexibleCage { base: base_spec, .. } = event else {
            unreachable!("layout kind follows the event kind")
        };
        for attempt in 0..FLEX_ATTEMPTS {
            let field = sample_witness(
                base_spec,
                Arc::clone(&geometry),
                dist,
                derive_seed(seed, "flex-attempt", attempt),
            )?;
            if flexibility(&field, *edge)? > *threshold && slack_of(base, &field)? > 0.0 {
                return Ok(field);
            }
        }
        return Err(Error::TooRare {
            attempts: FLEX_ATTEMPTS,
        });
    }
    let mut field = CouplingField::sample(geometry, dist, derive_seed(seed, "background", 0))?;
    let mut rng = rng_from_seed(derive_seed(seed, "witness", 0));
    fill_local(&layout, &mut field, dist, &mut rng)?;
    debug_assert!(slack_of(&layout, &field)? > 0.0);
    Ok(field)
}

/// A field in the event whose dependency coordinates lie within `radius` of
/// `reference`; the remaining coordinates are fresh draws from `dist`.
pub fn sample_in_cylinder(
    event: &EventSpec,
    reference: &CouplingField,
    radius: f64,
    dist: &Disorder,
    seed: u64,
) -> Result<CouplingField> {
    if !(radius > 0.0) {
        return Err(Error::Config(format!("cylinder radius must be positive, got {radius}")));
    }
    let geometry = Arc::clone(reference.geometry_arc());
    let layout = event.layout(&geometry)?;
    let deps = layout.dependencies();
    let cap = match layout {
        Layout::Flexible { .. } => FLEX_ATTEMPTS,
        _ => REJECTION_CAP,
    };
    let mut rng = rng_from_seed(derive_seed(seed, "cylinder", 0));
    for attempt in 0..cap {
        let mut field = CouplingField::sample(Arc::clone(&geometry), dist, derive_seed(seed, "cylinder-outside", attempt))?;
        for &e in &deps {
            field.set(e, reference.get(e) + rng.random_range(-radius..radius));
        }
        if slack_of(&layout, &field)? > 0.0 {
            return Ok(field);
        }
    }
    Err(Error::TooRare { attempts: cap })
}

fn finish(event: &EventSpec, hits: u64, n: u64, seed: u64, level: f64) -> Result<ProbabilityEstimate> {
    let (ci_lo, ci_hi) = wilson_interval(hits, n, level)?;
    Ok(ProbabilityEstimate {
        event: event.to_string(),
        estimate: hits as f64 / n as f64,
        ci_lo,
        ci_hi,
        n,
        seed,
        level,
    })
}

/// Counts successes of `trial` over `n` draws split into fixed chunks, each
/// chunk with its own derived stream, so the total does not depend on scheduling.
fn chunked_count(n: u64, seed: u64, trial: impl Fn(&mut Rng) -> Result<bool> + Sync) -> Result<u64> {
    let chunks = n.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from_seed(derive_seed(seed, "estimate", c));
            let len = CHUNK.min(n - c * CHUNK);
            let mut hits = 0u64;
            for _ in 0..len {
                hits += u64::from(trial(&mut rng)?);
            }
            Ok(hits)
        })
        .collect::<Result<Vec<u64>>>()?;
    Ok(counts.iter().sum())
}

/// Monte-Carlo estimate of `P(J ∈ A)` with a Wilson interval.
///
/// Local events are moved to their template box and only the coordinates
/// they read are drawn, so the result is the same for every box that holds
/// the event. Flexible events are estimated on whole fields of `geometry`.
pub fn estimate_probability(
    event: &EventSpec,
    geometry: &Arc<BoxGeometry>,
    dist: &Disorder,
    n: u64,
    seed: u64,
    level: f64,
) -> Result<ProbabilityEstimate> {
    dist.validate()?;
    event.layout(geometry)?;
    if matches!(event, EventSpec::FlexibleCage { .. }) {
        let hits = (0..n)
            .into_par_iter()
            .map(|i| {
                let field = CouplingField::sample(Arc::clone(geometry), dist, derive_seed(seed, "estimate-field", i))?;
                event.contains(&field)
            })
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .filter(|&hit| hit)
            .count() as u64;
        return finish(event, hits, n, seed, level);
    }
    let (template, local) = event.template(geometry.dim())?;
    let layout = local.layout(&template)?;
    let deps = layout.dependencies();
    let scratch = CouplingField::sample(template, dist, derive_seed(seed, "scratch", 0))?;
    let hits = chunked_count(n, seed, |rng| {
        let mut field = scratch.clone();
        redraw(&mut field, &deps, dist, rng);
        Ok(slack_of(&layout, &field)? > 0.0)
    })?;
    finish(event, hits, n, seed, level)
}

/// Monte-Carlo estimate of `P(J ∈ A, J + tε ∈ A, J + tε' ∈ A)` with `ε, ε'`
/// independent draws from `perturbation`, on the event's template box.
#[allow(clippy::too_many_arguments)]
pub fn estimate_translate_probability(
    event: &EventSpec,
    geometry: &Arc<BoxGeometry>,
    dist: &Disorder,
    perturbation: &Disorder,
    t: f64,
    n: u64,
    seed: u64,
    level: f64,
) -> Result<ProbabilityEstimate> {
    dist.validate()?;
    perturbation.validate()?;
    event.layout(geometry)?;
    let (template, local) = event.template(geometry.dim())?;
    let layout = local.layout(&template)?;
    let deps = layout.dependencies();
    let scratch = CouplingField::sample(template, dist, derive_seed(seed, "scratch", 0))?;
    let hits = chunked_count(n, seed, |rng| {
        let mut base = scratch.clone();
        redraw(&mut base, &deps, dist, rng);
        let mut inside = slack_of(&layout, &base)? > 0.0;
        for _ in 0..2 {
            let mut moved = base.clone();
            for &e in &deps {
                moved.set(e, base.get(e) + t * perturbation.sample(rng));
            }
            inside &= slack_of(&layout, &moved)? > 0.0;
        }
        Ok(inside)
    })?;
    let mut estimate = finish(event, hits, n, seed, level)?;
    estimate.event = format!("{event} translated t={t}");
    Ok(estimate)
}

/// The lower quartile of `F_e` over `samples` witnesses of an edge event.
pub fn default_flex_threshold(
    base: &EventSpec,
    geometry: &Arc<BoxGeometry>,
    dist: &Disorder,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    let layout = base.layout(geometry)?;
    let edge = match layout {
        Layout::Flexible { .. } | Layout::Block { .. } => {
            return Err(Error::InvalidEvent(format!("{base} is not an edge event")))
        }
        _ => layout.edge().expect("edge event"),
    };
    if samples == 0 {
        return Err(Error::Config("need at least one witness".into()));
    }
    let mut values = (0..samples)
        .into_par_iter()
        .map(|i| {
            let w = sample_witness(base, Arc::clone(geometry), dist, derive_seed(seed, "flex-threshold", i))?;
            flexibility(&w, edge)
        })
        .collect::<Result<Vec<f64>>>()?;
    values.sort_by(f64::total_cmp);
    Ok(values[(values.len() - 1) / 4])
}
