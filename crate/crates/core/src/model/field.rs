use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::disorder::Disorder;
use crate::model::geometry::{format_coords, parse_coords, BoundaryMode, BoxGeometry};
use crate::numeric::fmt17;
use crate::seed::{derive_seed, rng_from_seed};

const FIELD_HEADER: &str = "# eachaos coupling field v1";

/// One real coupling per coupling edge of a box, in lexicographic edge order.
#[derive(Debug, Clone)]
pub struct CouplingField {
    geometry: Arc<BoxGeometry>,
    values: Vec<f64>,
    distribution: Option<Disorder>,
    seed: Option<u64>,
}

impl PartialEq for CouplingField {
    fn eq(&self, other: &Self) -> bool {
        self.geometry == other.geometry && self.values == other.values
    }
}

impl CouplingField {
    /// Wraps explicit values. Fails on a length mismatch or non-finite value.
    pub fn from_values(geometry: Arc<BoxGeometry>, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.edge_count() {
            return Err(Error::InvalidGeometry(format!(
                "{} couplings for {} edges",
                values.len(),
                geometry.edge_count()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidDistribution(format!("non-finite coupling {bad}")));
        }
        Ok(Self {
            geometry,
            values,
            distribution: None,
            seed: None,
        })
    }

    pub fn constant(geometry: Arc<BoxGeometry>, value: f64) -> Self {
        let n = geometry.edge_count();
        Self::from_values(geometry, vec![value; n]).expect("length matches")
    }

    /// IID draw from `dist`, one value per edge in lexicographic edge order.
    pub fn sample(geometry: Arc<BoxGeometry>, dist: &Disorder, seed: u64) -> Result<Self> {
        dist.validate()?;
        let mut rng = rng_from_seed(seed);
        let values = (0..geometry.edge_count())
            .map(|_| dist.sample(&mut rng))
            .collect();
        Ok(Self {
            geometry,
            values,
            distribution: Some(dist.clone()),
            seed: Some(seed),
        })
    }

    pub fn geometry(&self) -> &BoxGeometry {
        &self.geometry
    }

    pub fn geometry_arc(&self) -> &Arc<BoxGeometry> {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, edge: usize) -> f64 {
        self.values[edge]
    }

    /// Overwrites one coupling. The distribution tag is kept: it names the
    /// law the field was drawn from, possibly before conditioning.
    pub fn set(&mut self, edge: usize, value: f64) {
        self.values[edge] = value;
    }

    pub fn distribution(&self) -> Option<&Disorder> {
        self.distribution.as_ref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn same_geometry(&self, other: &CouplingField) -> Result<()> {
        if Arc::ptr_eq(&self.geometry, &other.geometry) || *self.geometry == *other.geometry {
            Ok(())
        } else {
            Err(Error::GeometryMismatch)
        }
    }

    /// Edgewise `self + t * eps`, keeping the distribution tag of `self`.
    pub fn perturb(&self, eps: &CouplingField, t: f64) -> Result<CouplingField> {
        self.same_geometry(eps)?;
        if t == 0.0 {
            return Ok(self.clone());
        }
        let values = self
            .values
            .iter()
            .zip(&eps.values)
            .map(|(j, e)| j + t * e)
            .collect();
        let mut moved = CouplingField::from_values(self.geometry.clone(), values)?;
        moved.distribution = self.distribution.clone();
        Ok(moved)
    }

    /// Ornstein-Uhlenbeck position at time `t` started from `self`, driven by the
    /// standard-normal increment `noise`: `e^-t J + sqrt(1 - e^-2t) noise`.
    pub fn ornstein_uhlenbeck(&self, noise: &CouplingField, t: f64) -> Result<CouplingField> {
        self.same_geometry(noise)?;
        if t == 0.0 {
            return Ok(self.clone());
        }
        let decay = (-t).exp();
        let spread = (-(-2.0 * t).exp_m1()).sqrt();
        let values = self
            .values
            .iter()
            .zip(&noise.values)
            .map(|(j, z)| decay * j + spread * z)
            .collect();
        CouplingField::from_values(self.geometry.clone(), values)
    }

    pub fn abs_sum(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    /// Line-oriented text form: a header, then `x-coords y-coords value` per edge.
    pub fn to_text(&self) -> String {
        let g = &self.geometry;
        let mut out = String::new();
        let sides: Vec<String> = g.sides().iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "{FIELD_HEADER}");
        let _ = writeln!(out, "d {}", g.dim());
        let _ = writeln!(out, "sides {}", sides.join(" "));
        let _ = writeln!(out, "boundary {}", g.mode());
        match &self.distribution {
            Some(d) => {
                let _ = writeln!(out, "distribution {d}");
            }
            None => {
                let _ = writeln!(out, "distribution none");
            }
        }
        match self.seed {
            Some(s) => {
                let _ = writeln!(out, "seed {s}");
            }
            None => {
                let _ = writeln!(out, "seed none");
            }
        }
        let _ = writeln!(out, "edges {}", g.edge_count());
        for (e, v) in g.edges().iter().zip(&self.values) {
            let _ = writeln!(
                out,
                "{} {} {}",
                format_coords(g.node_coords(e.lo)),
                format_coords(g.node_coords(e.hi)),
                fmt17(*v)
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some(FIELD_HEADER) {
            return Err(Error::Parse("missing coupling field header".into()));
        }
        let mut field = |key: &str| -> Result<String> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {key} line")))?;
            line.strip_prefix(key)
                .map(|rest| rest.trim().to_string())
                .ok_or_else(|| Error::Parse(format!("expected {key}, got {line:?}")))
        };
        let dim: usize = field("d")?
            .parse()
            .map_err(|e| Error::Parse(format!("d: {e}")))?;
        let sides: Vec<usize> = field("sides")?
            .split_whitespace()
            .map(|s| s.parse().map_err(|e| Error::Parse(format!("sides: {e}"))))
            .collect::<Result<_>>()?;
        let mode: BoundaryMode = field("boundary")?.parse()?;
        let distribution = match field("distribution")?.as_str() {
            "none" => None,
            d => Some(d.parse::<Disorder>()?),
        };
        let seed = match field("seed")?.as_str() {
            "none" => None,
            s => Some(s.parse().map_err(|e| Error::Parse(format!("seed: {e}")))?),
        };
        let count: usize = field("edges")?
            .parse()
            .map_err(|e| Error::Parse(format!("edges: {e}")))?;
        let geometry = Arc::new(BoxGeometry::new(dim, &sides, mode)?);
        if count != geometry.edge_count() {
            return Err(Error::Parse(format!(
                "{count} edges declared, geometry has {}",
                geometry.edge_count()
            )));
        }
        let mut values = vec![f64::NAN; count];
        for _ in 0..count {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse("truncated edge list".into()))?;
            let mut parts = line.split_whitespace();
            let (Some(a), Some(b), Some(v), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::Parse(format!("bad edge line {line:?}")));
            };
            let id = geometry.edge_at(&parse_coords(a)?, &parse_coords(b)?)?;
            values[id] = v
                .parse()
                .map_err(|e| Error::Parse(format!("value {v:?}: {e}")))?;
        }
        let mut out = CouplingField::from_values(geometry, values)?;
        out.distribution = distribution;
        out.seed = seed;
        Ok(out)
    }
}

/// Two independent perturbation fields sharing one master seed.
#[derive(Debug, Clone)]
pub struct PerturbationPair {
    pub eps: CouplingField,
    pub eps_prime: CouplingField,
}

impl PerturbationPair {
    pub fn draw(geometry: Arc<BoxGeometry>, dist: &Disorder, master_seed: u64) -> Result<Self> {
        if !dist.is_mean_zero() {
            return Err(Error::InvalidDistribution(format!(
                "perturbations need a mean-zero distribution, got {dist}"
            )));
        }
        Ok(Self {
            eps: CouplingField::sample(
                geometry.clone(),
                dist,
                derive_seed(master_seed, "epsilon", 0),
            )?,
            eps_prime: CouplingField::sample(
                geometry,
                dist,
                derive_seed(master_seed, "epsilon-prime", 0),
            )?,
        })
    }
}
