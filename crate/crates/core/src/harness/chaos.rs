use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, PerturbationMode};
use super::output::{float, CsvTable};
use super::{mean_and_stderr, with_redraws, Redraw};
use crate::error::Result;
use crate::events::EventSpec;
use crate::gibbs::{thermal_state, EdgeThermalRow};
use crate::model::{BoxGeometry, CouplingField, PerturbationPair};
use crate::numeric::compensated_sum;
use crate::solver::{ground_state, overlap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveMode {
    GroundState,
    Gibbs,
}

/// Event-restricted parts of the observable at one grid point, each summed
/// over all replicas and divided by the replica count, so that
/// `on_event + on_complement == observable_mean` up to rounding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalSplit {
    /// Fraction of replicas with `J`, and both perturbed fields, in the event.
    pub event_fraction: f64,
    pub observable_mean: f64,
    pub on_event: f64,
    pub on_complement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChaosPoint {
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
    pub replicas: usize,
    pub conditional: Option<ConditionalSplit>,
}

/// Per-replica record, kept for the Gibbs curve and for audits.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicaRecord {
    pub replica: u64,
    pub seed: u64,
    pub overlaps: Vec<f64>,
    /// Triple event membership per grid point; empty without an event.
    pub in_event: Vec<bool>,
    /// `σ_e σ'_e` (or `<σ_e><σ'_e>`) on the event edge, or the overlap for block events.
    pub observable: Vec<f64>,
    /// Gibbs mode only: one row set per grid point.
    #[serde(skip)]
    pub thermal_rows: Vec<Vec<EdgeThermalRow>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChaosCurve {
    pub mode: CurveMode,
    pub perturbation_mode: String,
    pub beta: Option<f64>,
    pub geometry: String,
    pub distribution: String,
    pub perturbation: String,
    pub event: Option<String>,
    pub seed: u64,
    pub points: Vec<ChaosPoint>,
    pub redraws: Vec<Redraw>,
    #[serde(skip)]
    pub records: Vec<ReplicaRecord>,
}

fn positions(
    cfg: &ExperimentConfig,
    j: &CouplingField,
    pair: &PerturbationPair,
    t: f64,
) -> Result<(CouplingField, CouplingField)> {
    Ok(match cfg.perturbation_mode {
        PerturbationMode::Additive => (j.perturb(&pair.eps, t)?, j.perturb(&pair.eps_prime, t)?),
        PerturbationMode::OrnsteinUhlenbeck => (
            j.ornstein_uhlenbeck(&pair.eps, t)?,
            j.ornstein_uhlenbeck(&pair.eps_prime, t)?,
        ),
    })
}

fn run_replica(
    cfg: &ExperimentConfig,
    geometry: &Arc<BoxGeometry>,
    event_edge: Option<(&EventSpec, Option<usize>)>,
    index: u64,
    seed: u64,
) -> Result<ReplicaRecord> {
    let j = CouplingField::sample(Arc::clone(geometry), &cfg.distribution, crate::seed::derive_seed(seed, "J", 0))?;
    let pair = PerturbationPair::draw(
        Arc::clone(geometry),
        &cfg.perturbation,
        crate::seed::derive_seed(seed, "perturbation", 0),
    )?;
    let interior = geometry.interior_edges();
    let base_in_event = match event_edge {
        Some((event, _)) => event.contains(&j)?,
        None => false,
    };
    let base_ground = match cfg.beta {
        None => Some(ground_state(&j)?.configuration),
        Some(_) => None,
    };
    let mut record = ReplicaRecord {
        replica: index,
        seed,
        overlaps: Vec::with_capacity(cfg.t_grid.len()),
        in_event: Vec::new(),
        observable: Vec::new(),
        thermal_rows: Vec::new(),
    };
    for &t in &cfg.t_grid {
        let (a, b) = positions(cfg, &j, &pair, t)?;
        let (q, edge_value): (f64, Box<dyn Fn(usize) -> f64>) = match cfg.beta {
            None => {
                let (sa, sb) = if t == 0.0 {
                    let s = base_ground.clone().expect("ground-state mode");
                    (s.clone(), s)
                } else {
                    (ground_state(&a)?.configuration, ground_state(&b)?.configuration)
                };
                let q = overlap(&sa, &sb)?;
                (q, Box::new(move |e| f64::from(sa.edge_product(e) * sb.edge_product(e))))
            }
            Some(beta) => {
                let (ta, tb) = (thermal_state(&a, beta)?, thermal_state(&b, beta)?);
                let rows: Vec<EdgeThermalRow> = interior
                    .iter()
                    .map(|&e| EdgeThermalRow {
                        edge: e,
                        expectation_r1: ta.edge_expectations[e],
                        expectation_r2: tb.edge_expectations[e],
                        product: ta.edge_expectations[e] * tb.edge_expectations[e],
                    })
                    .collect();
                let q = compensated_sum(rows.iter().map(|r| r.product)) / rows.len() as f64;
                record.thermal_rows.push(rows);
                (q, Box::new(move |e| ta.edge_expectations[e] * tb.edge_expectations[e]))
            }
        };
        record.overlaps.push(q);
        if let Some((event, edge)) = event_edge {
            record
                .in_event
                .push(base_in_event && event.contains(&a)? && event.contains(&b)?);
            record.observable.push(edge.map_or(q, &edge_value));
        }
    }
    Ok(record)
}

/// Mean overlap of the two perturbed replicas over `cfg.replicas` disorder
/// draws at every grid point. Replica `i` is driven by seeds derived from
/// `(cfg.seed, "replica", i)`; degenerate draws are replaced and recorded.
pub fn run_chaos_curve(cfg: &ExperimentConfig) -> Result<ChaosCurve> {
    cfg.validate()?;
    let geometry = cfg.geometry()?;
    let layout = cfg.event.as_ref().map(|e| e.layout(&geometry)).transpose()?;
    let event_edge = cfg
        .event
        .as_ref()
        .map(|e| (e, layout.as_ref().and_then(|l| l.edge())));
    let outcomes = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|i| with_redraws(cfg.seed, "replica", i, |seed| run_replica(cfg, &geometry, event_edge, i, seed)))
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::with_capacity(outcomes.len());
    let mut redraws = Vec::new();
    for (record, _, discarded) in outcomes {
        records.push(record);
        redraws.extend(discarded);
    }
    let n = records.len();
    let points = cfg
        .t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let values: Vec<f64> = records.iter().map(|r| r.overlaps[k]).collect();
            let (mean, stderr) = mean_and_stderr(&values);
            let conditional = cfg.event.as_ref().map(|_| {
                let part = |inside: bool| {
                    compensated_sum(
                        records
                            .iter()
                            .filter(|r| r.in_event[k] == inside)
                            .map(|r| r.observable[k]),
                    ) / n as f64
                };
                ConditionalSplit {
                    event_fraction: records.iter().filter(|r| r.in_event[k]).count() as f64 / n as f64,
                    observable_mean: compensated_sum(records.iter().map(|r| r.observable[k])) / n as f64,
                    on_event: part(true),
                    on_complement: part(false),
                }
            });
            ChaosPoint {
                t,
                mean,
                stderr,
                replicas: n,
                conditional,
            }
        })
        .collect();
    Ok(ChaosCurve {
        mode: if cfg.beta.is_some() { CurveMode::Gibbs } else { CurveMode::GroundState },
        perturbation_mode: cfg.perturbation_mode.to_string(),
        beta: cfg.beta,
        geometry: geometry.describe(),
        distribution: cfg.distribution.to_string(),
        perturbation: cfg.perturbation.to_string(),
        event: cfg.event.as_ref().map(|e| e.to_string()),
        seed: cfg.seed,
        points,
        redraws,
        records,
    })
}

impl ChaosCurve {
    /// `t, mean, stderr, replicas`, plus the conditional split when an event is set.
    pub fn table(&self) -> CsvTable {
        let conditional = self.event.is_some();
        let mut header = vec!["t", "mean", "stderr", "replicas"];
        if conditional {
            header.extend(["event_fraction", "observable_mean", "observable_on_event", "observable_on_complement"]);
        }
        let mut table = CsvTable::new(&header);
        for p in &self.points {
            let mut row = vec![float(p.t), float(p.mean), float(p.stderr), p.replicas.to_string()];
            if let Some(c) = &p.conditional {
                row.extend([
                    float(c.event_fraction),
                    float(c.observable_mean),
                    float(c.on_event),
                    float(c.on_complement),
                ]);
            }
            table.push(row);
        }
        table
    }

    /// Gibbs curve rows `(replica, t, beta, edge, expectation_r1, expectation_r2,
    /// product, event_flag)`; empty in ground-state mode.
    pub fn gibbs_table(&self, geometry: &BoxGeometry) -> CsvTable {
        let mut table = CsvTable::new(&[
            "replica",
            "t",
            "beta",
            "edge",
            "expectation_r1",
            "expectation_r2",
            "product",
            "event_flag",
        ]);
        let beta = self.beta.unwrap_or(f64::NAN);
        for r in &self.records {
            for (k, rows) in r.thermal_rows.iter().enumerate() {
                let flag = r.in_event.get(k).map_or(String::new(), |f| f.to_string());
                for row in rows {
                    table.push(vec![
                        r.replica.to_string(),
                        float(self.points[k].t),
                        float(beta),
                        edge_label(geometry, row.edge),
                        float(row.expectation_r1),
                        float(row.expectation_r2),
                        float(row.product),
                        flag.clone(),
                    ]);
                }
            }
        }
        table
    }
}

pub(crate) fn edge_label(g: &BoxGeometry, edge: usize) -> String {
    use crate::model::geometry::format_coords;
    let e = g.edge(edge);
    format!("{}-{}", format_coords(g.node_coords(e.lo)), format_coords(g.node_coords(e.hi)))
}
