use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::events::EventSpec;
use crate::gibbs::GIBBS_LIMIT;
use crate::model::{BoundaryMode, BoxGeometry, Disorder};
use crate::solver::ENUMERATION_LIMIT;

/// How the two replicas are moved away from `J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationMode {
    /// `J + tε` and `J + tε'`.
    Additive,
    /// Ornstein-Uhlenbeck positions `e^{-t} J + sqrt(1 - e^{-2t}) ε`.
    OrnsteinUhlenbeck,
}

impl fmt::Display for PerturbationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PerturbationMode::Additive => "additive",
            PerturbationMode::OrnsteinUhlenbeck => "ou",
        })
    }
}

impl FromStr for PerturbationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "additive" => Ok(PerturbationMode::Additive),
            "ou" => Ok(PerturbationMode::OrnsteinUhlenbeck),
            other => Err(Error::Config(format!("unknown perturbation mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub sides: Vec<usize>,
    pub boundary: BoundaryMode,
    pub distribution: Disorder,
    pub perturbation: Disorder,
    pub perturbation_mode: PerturbationMode,
    pub t_grid: Vec<f64>,
    pub replicas: usize,
    /// Selects Gibbs mode when present.
    pub beta: Option<f64>,
    /// Selects conditional mode when present.
    pub event: Option<EventSpec>,
    pub seed: u64,
    pub delta: f64,
    pub probability_samples: u64,
    pub level: f64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            sides: vec![4, 4],
            boundary: BoundaryMode::Fixed,
            distribution: Disorder::standard_gaussian(),
            perturbation: Disorder::standard_gaussian(),
            perturbation_mode: PerturbationMode::Additive,
            t_grid: vec![0.0, 0.001, 0.01, 0.1, 1.0],
            replicas: 200,
            beta: None,
            event: None,
            seed: 0,
            delta: 0.5,
            probability_samples: 100_000,
            level: 0.95,
            out: PathBuf::from("out"),
        }
    }
}

const KEYS: [&str; 15] = [
    "dim",
    "sides",
    "boundary",
    "distribution",
    "perturbation",
    "perturbation_mode",
    "t_grid",
    "replicas",
    "beta",
    "event",
    "seed",
    "delta",
    "probability_samples",
    "level",
    "out",
];

fn number<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key} = {value:?}: {e}")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(|part| number(key, part.trim()))
        .collect()
}

impl ExperimentConfig {
    /// Reads `key = value` lines; `#` starts a comment. Unknown or repeated
    /// keys are errors, missing keys take their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = BTreeSet::new();
        let mut sides: Option<Vec<usize>> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key {key:?}", lineno + 1)));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: {key} given twice", lineno + 1)));
            }
            match key {
                "dim" => cfg.dim = number(key, value)?,
                "sides" => sides = Some(list(key, value)?),
                "boundary" => cfg.boundary = value.parse()?,
                "distribution" => cfg.distribution = value.parse()?,
                "perturbation" => cfg.perturbation = value.parse()?,
                "perturbation_mode" => cfg.perturbation_mode = value.parse()?,
                "t_grid" => cfg.t_grid = list(key, value)?,
                "replicas" => cfg.replicas = number(key, value)?,
                "beta" => cfg.beta = Some(number(key, value)?),
                "event" => cfg.event = Some(value.parse()?),
                "seed" => cfg.seed = number(key, value)?,
                "delta" => cfg.delta = number(key, value)?,
                "probability_samples" => cfg.probability_samples = number(key, value)?,
                "level" => cfg.level = number(key, value)?,
                "out" => cfg.out = PathBuf::from(value),
                _ => unreachable!("key list checked above"),
            }
        }
        cfg.sides = match sides {
            Some(s) if s.len() == 1 => vec![s[0]; cfg.dim],
            Some(s) => s,
            None if seen.contains("dim") => vec![4; cfg.dim],
            None => cfg.sides,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.sides.len() != self.dim {
            return bad(format!("{} sides given for dimension {}", self.sides.len(), self.dim));
        }
        let g = self.geometry()?;
        if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return bad("t_grid must be nonempty with finite nonnegative entries".into());
        }
        if self.t_grid.windows(2).any(|w| w[0] > w[1]) {
            return bad("t_grid must be sorted ascending".into());
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0,1), got {}", self.delta));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level must lie in (0,1), got {}", self.level));
        }
        if self.probability_samples == 0 {
            return bad("probability_samples must be positive".into());
        }
        if !self.perturbation.is_mean_zero() {
            return bad(format!("perturbation {} is not mean zero", self.perturbation));
        }
        let n = g.site_count();
        if let Some(beta) = self.beta {
            if !(beta > 0.0 && beta.is_finite()) {
                return bad(format!("beta must be positive, got {beta}"));
            }
            if n > GIBBS_LIMIT {
                return bad(format!("{n} spins exceed the Gibbs limit {GIBBS_LIMIT}"));
            }
        } else if self.dim > 1 && n > ENUMERATION_LIMIT {
            return bad(format!("{n} spins exceed the enumeration limit {ENUMERATION_LIMIT}"));
        }
        if let Some(event) = &self.event {
            event.layout(&g)?;
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<Arc<BoxGeometry>> {
        Ok(Arc::new(BoxGeometry::new(self.dim, &self.sides, self.boundary)?))
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let join = |v: &[String]| v.join(",");
        let mut lines = vec![
            format!("dim = {}", self.dim),
            format!("sides = {}", join(&self.sides.iter().map(|s| s.to_string()).collect::<Vec<_>>())),
            format!("boundary = {}", self.boundary),
            format!("distribution = {}", self.distribution),
            format!("perturbation = {}", self.perturbation),
            format!("perturbation_mode = {}", self.perturbation_mode),
            format!("t_grid = {}", join(&self.t_grid.iter().map(|t| t.to_string()).collect::<Vec<_>>())),
            format!("replicas = {}", self.replicas),
        ];
        if let Some(beta) = self.beta {
            lines.push(format!("beta = {beta}"));
        }
        if let Some(event) = &self.event {
            lines.push(format!("event = {event}"));
        }
        lines.extend([
            format!("seed = {}", self.seed),
            format!("delta = {}", self.delta),
            format!("probability_samples = {}", self.probability_samples),
            format!("level = {}", self.level),
            format!("out = {}", self.out.display()),
        ]);
        lines.join("\n") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = ExperimentConfig::parse("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        let cfg = ExperimentConfig::parse(
            "# chain\ndim = 1\nsides = 50\nboundary = free  # trailing\nt_grid = 0, 0.5\n",
        )
        .unwrap();
        assert_eq!((cfg.dim, cfg.sides.clone(), cfg.boundary), (1, vec![50], BoundaryMode::Free));
        assert_eq!(cfg.t_grid, vec![0.0, 0.5]);
        assert_eq!(cfg.beta, None);
        assert_eq!(ExperimentConfig::parse("beta = 2").unwrap().beta, Some(2.0));
        assert!(ExperimentConfig::parse("dim = 1\nsides = 50\nbeta = 2").is_err());
        let cube = ExperimentConfig::parse("dim = 2\nsides = 3").unwrap();
        assert_eq!(cube.sides, vec![3, 3]);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "nonsense",
            "colour = red",
            "seed = 1\nseed = 2",
            "t_grid = 0.1, 0.01",
            "t_grid = -1",
            "replicas = 0",
            "sides = 6,6",
            "delta = 1.5",
            "perturbation = uniform(0,1)",
            "event = cage e=(0,1)-(1,1) r=0.1",
            "dim = 2\nsides = 3,3,3",
        ] {
            assert!(ExperimentConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn text_form_round_trips() {
        let cfg = ExperimentConfig::parse(
            "sides = 4,4\nevent = cage e=(1,1)-(1,2) r=0.1\nbeta = 0.5\nperturbation_mode = ou\nseed = 99",
        )
        .unwrap();
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
}
