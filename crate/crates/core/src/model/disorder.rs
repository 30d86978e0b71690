use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, Normal, Open01};
use statrs::distribution::{ContinuousCDF, Normal as StatrsNormal};

use crate::error::{Error, Result};
use crate::seed::Rng;

/// Attempts allowed when rejection sampling from a restricted distribution.
pub const REJECTION_CAP: u64 = 1_000_000;

/// Continuous single-coupling distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum Disorder {
    Gaussian { mean: f64, std_dev: f64 },
    Uniform { lo: f64, hi: f64 },
    /// `base` conditioned on the open interval `(lo, hi)`.
    Conditioned { base: Box<Disorder>, lo: f64, hi: f64 },
}

impl Default for Disorder {
    fn default() -> Self {
        Disorder::standard_gaussian()
    }
}

impl Disorder {
    pub fn standard_gaussian() -> Self {
        Disorder::Gaussian {
            mean: 0.0,
            std_dev: 1.0,
        }
    }

    pub fn conditioned(base: Disorder, lo: f64, hi: f64) -> Result<Self> {
        let d = Disorder::Conditioned {
            base: Box::new(base),
            lo,
            hi,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |x: f64| x.is_finite();
        match self {
            Disorder::Gaussian { mean, std_dev } => {
                if !finite(*mean) || !finite(*std_dev) || *std_dev <= 0.0 {
                    return Err(Error::InvalidDistribution(format!(
                        "gaussian needs finite mean and std_dev > 0, got ({mean}, {std_dev})"
                    )));
                }
            }
            Disorder::Uniform { lo, hi } => {
                if !finite(*lo) || !finite(*hi) || lo >= hi {
                    return Err(Error::InvalidDistribution(format!(
                        "uniform needs lo < hi, got ({lo}, {hi})"
                    )));
                }
            }
            Disorder::Conditioned { base, lo, hi } => {
                base.validate()?;
                if lo.is_nan() || hi.is_nan() || lo >= hi {
                    return Err(Error::InvalidDistribution(format!(
                        "conditioning interval needs a < b, got ({lo}, {hi})"
                    )));
                }
                if base.mass(*lo, *hi) <= 0.0 {
                    return Err(Error::InvalidDistribution(format!(
                        "{base} puts no mass on ({lo}, {hi})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Smallest interval containing the support.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Disorder::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Disorder::Uniform { lo, hi } => (*lo, *hi),
            Disorder::Conditioned { base, lo, hi } => {
                let (a, b) = base.support();
                (a.max(*lo), b.min(*hi))
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Disorder::Gaussian { mean, std_dev } => std_cdf((x - mean) / std_dev),
            Disorder::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Disorder::Conditioned { base, lo, hi } => {
                let (pa, pb) = (base.cdf(*lo), base.cdf(*hi));
                ((base.cdf(x.clamp(*lo, *hi)) - pa) / (pb - pa)).clamp(0.0, 1.0)
            }
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            Disorder::Gaussian { mean, std_dev } => mean + std_dev * std_quantile(p),
            Disorder::Uniform { lo, hi } => lo + p * (hi - lo),
            Disorder::Conditioned { base, lo, hi } => {
                let (pa, pb) = (base.cdf(*lo), base.cdf(*hi));
                base.quantile(pa + p * (pb - pa))
            }
        }
    }

    /// Probability of the open interval `(lo, hi)`.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        if lo >= hi {
            return 0.0;
        }
        match self {
            Disorder::Gaussian { mean, std_dev } => {
                let (a, b) = ((lo - mean) / std_dev, (hi - mean) / std_dev);
                // subtract on the side where the tail is represented accurately
                if a > 0.0 {
                    std_sf(a) - std_sf(b)
                } else {
                    std_cdf(b) - std_cdf(a)
                }
            }
            _ => (self.cdf(hi) - self.cdf(lo)).max(0.0),
        }
    }

    /// Probability that `|J| > threshold`.
    pub fn mass_abs_above(&self, threshold: f64) -> f64 {
        self.mass(threshold, f64::INFINITY) + self.mass(f64::NEG_INFINITY, -threshold)
    }

    pub fn is_mean_zero(&self) -> bool {
        match self {
            Disorder::Gaussian { mean, .. } => *mean == 0.0,
            Disorder::Uniform { lo, hi } => *lo == -*hi,
            Disorder::Conditioned { base, lo, hi } => base.is_symmetric() && *lo == -*hi,
        }
    }

    fn is_symmetric(&self) -> bool {
        self.is_mean_zero()
    }

    pub fn almost_surely_negative(&self) -> bool {
        self.support().1 <= 0.0
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match self {
            Disorder::Gaussian { mean, std_dev } => Normal::new(*mean, *std_dev)
                .expect("validated gaussian")
                .sample(rng),
            Disorder::Uniform { lo, hi } => {
                let u: f64 = Open01.sample(rng);
                lo + u * (hi - lo)
            }
            Disorder::Conditioned { base, lo, hi } => base
                .sample_within(rng, *lo, *hi)
                .expect("validated conditioning interval"),
        }
    }

    /// Draws from this distribution conditioned on the open interval `(lo, hi)`.
    ///
    /// Inverse-CDF restriction is tried first; draws that round onto an endpoint
    /// fall back to plain rejection.
    pub fn sample_within(&self, rng: &mut Rng, lo: f64, hi: f64) -> Result<f64> {
        if self.mass(lo, hi) <= 0.0 {
            return Err(Error::TooRare { attempts: 0 });
        }
        if let Disorder::Gaussian { mean, std_dev } = self {
            if lo > *mean {
                // upper tail: sample the mirrored lower tail, where cdf values keep precision
                let mirrored = Disorder::Gaussian {
                    mean: -mean,
                    std_dev: *std_dev,
                };
                return mirrored.sample_within(rng, -hi, -lo).map(|x| -x);
            }
        }
        let (pa, pb) = (self.cdf(lo), self.cdf(hi));
        for _ in 0..64 {
            let u: f64 = Open01.sample(rng);
            let x = self.quantile(pa + u * (pb - pa));
            if lo < x && x < hi {
                return Ok(x);
            }
        }
        for _ in 0..REJECTION_CAP {
            let x = self.sample(rng);
            if lo < x && x < hi {
                return Ok(x);
            }
        }
        Err(Error::TooRare {
            attempts: REJECTION_CAP,
        })
    }

    /// Draws conditioned on `|J| > threshold`.
    pub fn sample_abs_above(&self, rng: &mut Rng, threshold: f64) -> Result<f64> {
        let up = self.mass(threshold, f64::INFINITY);
        let down = self.mass(f64::NEG_INFINITY, -threshold);
        if up + down <= 0.0 {
            return Err(Error::TooRare { attempts: 0 });
        }
        if rng.random::<f64>() * (up + down) < up {
            self.sample_within(rng, threshold, f64::INFINITY)
        } else {
            self.sample_within(rng, f64::NEG_INFINITY, -threshold)
        }
    }
}

fn std_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

fn std_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

/// Standard normal quantile, polished by Newton steps against [`std_cdf`].
fn std_quantile(p: f64) -> f64 {
    let mut x = StatrsNormal::standard().inverse_cdf(p);
    for _ in 0..2 {
        let density = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        if !x.is_finite() || density <= 0.0 {
            break;
        }
        x -= (std_cdf(x) - p) / density;
    }
    x
}

impl fmt::Display for Disorder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Disorder::Gaussian { mean, std_dev } => write!(f, "gaussian({mean},{std_dev})"),
            Disorder::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            Disorder::Conditioned { base, lo, hi } => write!(f, "{base}|({lo},{hi})"),
        }
    }
}

pub(crate) fn parse_pair(text: &str) -> Result<(f64, f64)> {
    let inner = text
        .trim()
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| Error::Parse(format!("expected (a,b), got {text:?}")))?;
    let mut parts = inner.split(',').map(|p| {
        p.trim()
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("number {p:?}: {e}")))
    });
    match (parts.next(), parts.next(), parts.next()) {
        (Some(a), Some(b), None) => Ok((a?, b?)),
        _ => Err(Error::Parse(format!("expected two numbers in {text:?}"))),
    }
}

impl FromStr for Disorder {
    type Err = Error;

    /// Accepts `gaussian(m,s)`, `uniform(a,b)` and `<base>|(a,b)` for conditioning.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(pos) = s.rfind('|') {
            let base: Disorder = s[..pos].parse()?;
            let (lo, hi) = parse_pair(&s[pos + 1..])?;
            return Disorder::conditioned(base, lo, hi);
        }
        let d = if let Some(rest) = s.strip_prefix("gaussian") {
            let (mean, std_dev) = parse_pair(rest)?;
            Disorder::Gaussian { mean, std_dev }
        } else if let Some(rest) = s.strip_prefix("uniform") {
            let (lo, hi) = parse_pair(rest)?;
            Disorder::Uniform { lo, hi }
        } else {
            return Err(Error::Parse(format!("unknown distribution {s:?}")));
        };
        d.validate()?;
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn parse_and_display_round_trip() {
        for text in ["gaussian(0,1)", "uniform(1,1.2)", "gaussian(0,1)|(1,1.2)"] {
            let d: Disorder = text.parse().unwrap();
            assert_eq!(d.to_string(), text);
        }
        assert!("gaussian(0,0)".parse::<Disorder>().is_err());
        assert!("uniform(2,1)".parse::<Disorder>().is_err());
        assert!("uniform(0,1)|(2,3)".parse::<Disorder>().is_err());
        assert!("cauchy(0,1)".parse::<Disorder>().is_err());
    }

    #[test]
    fn uniform_draws_stay_inside_open_support() {
        let d = Disorder::Uniform { lo: 1.0, hi: 1.2 };
        let mut rng = rng_from_seed(3);
        for _ in 0..10_000 {
            let x = d.sample(&mut rng);
            assert!(1.0 < x && x < 1.2);
        }
    }

    #[test]
    fn restricted_gaussian_draws_land_in_interval() {
        let d = Disorder::standard_gaussian();
        let mut rng = rng_from_seed(11);
        for &(lo, hi) in &[(1.0, 1.2), (-0.1, 0.1), (6.0, 6.5), (-9.0, -8.0)] {
            for _ in 0..1000 {
                let x = d.sample_within(&mut rng, lo, hi).unwrap();
                assert!(lo < x && x < hi, "{x} outside ({lo},{hi})");
            }
        }
        for _ in 0..1000 {
            assert!(d.sample_abs_above(&mut rng, 1.8).unwrap().abs() > 1.8);
        }
    }

    #[test]
    fn conditioned_mass_and_cdf() {
        let d: Disorder = "uniform(0,2)|(1,1.2)".parse().unwrap();
        assert!((d.cdf(1.1) - 0.5).abs() < 1e-12);
        assert_eq!(d.support(), (1.0, 1.2));
        let g = Disorder::standard_gaussian();
        let m = g.mass(-1.0, 1.0);
        assert!((m - 0.682_689_492_137_085_9).abs() < 1e-12, "{m}");
        assert_eq!(g.mass(1.0, 1.0), 0.0);
        assert!(g.mass(8.0, 9.0) > 0.0);
        assert!(d.sample_within(&mut rng_from_seed(1), 1.5, 1.7).is_err());
    }

    #[test]
    fn mean_zero_and_sign_queries() {
        assert!(Disorder::standard_gaussian().is_mean_zero());
        assert!(Disorder::Uniform { lo: -1.0, hi: 1.0 }.is_mean_zero());
        assert!(!Disorder::Uniform { lo: 0.0, hi: 1.0 }.is_mean_zero());
        assert!(Disorder::Uniform { lo: -2.0, hi: -1.0 }.almost_surely_negative());
        assert!(!Disorder::standard_gaussian().almost_surely_negative());
    }
}
