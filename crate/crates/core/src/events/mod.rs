//! Local coupling events: membership, slack, witnesses and probabilities.
//!
//! Every event is stated in box coordinates. An event is *resolved* against a
//! geometry into a [`Layout`] naming the edges it reads; all predicates are
//! strict inequalities, so each event is an open set of coupling space.

pub mod block;
mod sampling;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::droplet::flexibility;
use crate::error::{Error, Result};
use crate::model::disorder::parse_pair;
use crate::model::field::CouplingField;
use crate::model::geometry::{format_coords, parse_coords, BoundaryMode, BoxGeometry, Node};
use crate::model::Disorder;

pub use sampling::{
    default_flex_threshold, estimate_probability, estimate_translate_probability, sample_in_cylinder,
    sample_witness, wilson_interval, ProbabilityEstimate, FLEX_ATTEMPTS,
};

#[derive(Debug, Clone, PartialEq)]
pub enum EventSpec {
    /// `J_xy > Σ |J_xz|` over the other neighbours z of x.
    SuperSatisfied { x: Vec<i64>, y: Vec<i64> },
    /// `J_xy > Σ |J_xz| + gap`.
    ThermalSuperSatisfied { x: Vec<i64>, y: Vec<i64>, gap: f64 },
    /// Every coupling of the ball `B(center, radius)` and of its edge boundary lies in `(lo, hi)`.
    FerroBlock {
        center: Vec<i64>,
        radius: usize,
        lo: f64,
        hi: f64,
    },
    /// Weak couplings around a strong same-sign ring enclosing x.
    Cage { x: Vec<i64>, y: Vec<i64>, scale: f64 },
    /// A base event intersected with `{F_e > threshold}`.
    FlexibleCage { base: Box<EventSpec>, threshold: f64 },
}

/// An event resolved to edge ids of one geometry.
#[derive(Debug, Clone)]
pub enum Layout {
    Super {
        edge: usize,
        competitors: Vec<usize>,
        gap: f64,
    },
    Block {
        edges: Vec<usize>,
        lo: f64,
        hi: f64,
    },
    Cage {
        edge: usize,
        x: usize,
        spokes: Vec<usize>,
        ring: Vec<usize>,
        outer: Vec<usize>,
        scale: f64,
        threshold: f64,
    },
    Flexible {
        base: Box<Layout>,
        edge: usize,
        threshold: f64,
    },
}

impl Layout {
    /// Edges read by the event, sorted. For the flexible cage these are the
    /// base event's edges; the flexibility term reads further.
    pub fn dependencies(&self) -> Vec<usize> {
        let mut deps = match self {
            Layout::Super {
                edge, competitors, ..
            } => {
                let mut d = competitors.clone();
                d.push(*edge);
                d
            }
            Layout::Block { edges, .. } => edges.clone(),
            Layout::Cage {
                spokes, ring, outer, ..
            } => spokes.iter().chain(ring).chain(outer).copied().collect(),
            Layout::Flexible { base, .. } => base.dependencies(),
        };
        deps.sort_unstable();
        deps.dedup();
        deps
    }

    /// The edge whose spin product the event controls, if any.
    pub fn edge(&self) -> Option<usize> {
        match self {
            Layout::Super { edge, .. } | Layout::Cage { edge, .. } | Layout::Flexible { edge, .. } => Some(*edge),
            Layout::Block { .. } => None,
        }
    }
}

/// Sign required of `Σ_w J_xw` in a cage: negative only for a.s. negative couplings.
pub fn cage_field_sign(dist: Option<&Disorder>) -> f64 {
    if dist.is_some_and(Disorder::almost_surely_negative) {
        -1.0
    } else {
        1.0
    }
}

fn edge_text(x: &[i64], y: &[i64]) -> String {
    format!("{}-{}", format_coords(x), format_coords(y))
}

fn resolve_edge(g: &BoxGeometry, x: &[i64], y: &[i64]) -> Result<(usize, usize, usize)> {
    let edge = g.edge_at(x, y)?;
    match (g.node_at(x), g.node_at(y)) {
        (Some(Node::Site(a)), Some(Node::Site(b))) => Ok((edge, a, b)),
        _ => Err(Error::InvalidEvent(format!(
            "edge {} is not an interior edge",
            edge_text(x, y)
        ))),
    }
}

impl EventSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            EventSpec::SuperSatisfied { .. } => "supersat",
            EventSpec::ThermalSuperSatisfied { .. } => "thermal",
            EventSpec::FerroBlock { .. } => "ferroblock",
            EventSpec::Cage { .. } => "cage",
            EventSpec::FlexibleCage { .. } => "flexcage",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidEvent(m));
        match self {
            EventSpec::ThermalSuperSatisfied { gap, .. } if !(*gap > 0.0) => bad(format!("gap must be positive, got {gap}")),
            EventSpec::FerroBlock { lo, hi, .. } if !(lo < hi) || (*lo <= 0.0 && *hi >= 0.0) => {
                bad(format!("interval ({lo},{hi}) must be nonempty and exclude 0"))
            }
            EventSpec::Cage { scale, .. } if !(*scale > 0.0) => bad(format!("scale must be positive, got {scale}")),
            EventSpec::FlexibleCage { base, threshold } => {
                if !(*threshold > 0.0) {
                    return bad(format!("threshold must be positive, got {threshold}"));
                }
                if matches!(**base, EventSpec::FerroBlock { .. } | EventSpec::FlexibleCage { .. }) {
                    return bad("flexible events need an edge event as base".into());
                }
                base.validate()
            }
            _ => Ok(()),
        }
    }

    /// Resolves the event against a geometry.
    pub fn layout(&self, g: &BoxGeometry) -> Result<Layout> {
        self.validate()?;
        match self {
            EventSpec::SuperSatisfied { x, y } => Self::super_layout(g, x, y, 0.0),
            EventSpec::ThermalSuperSatisfied { x, y, gap } => Self::super_layout(g, x, y, *gap),
            EventSpec::FerroBlock {
                center,
                radius,
                lo,
                hi,
            } => {
                let v = g
                    .site_index(center)
                    .ok_or_else(|| Error::OutsideBox(format_coords(center)))?;
                let ball = g.ball(v, *radius)?;
                let mut edges = ball.edges;
                edges.extend(ball.boundary);
                edges.sort_unstable();
                Ok(Layout::Block {
                    edges,
                    lo: *lo,
                    hi: *hi,
                })
            }
            EventSpec::Cage { x, y, scale } => {
                let (edge, xs, ys) = resolve_edge(g, x, y)?;
                for s in [xs, ys] {
                    let far = match g.mode() {
                        BoundaryMode::Periodic => g.sides().iter().all(|&l| l >= 4),
                        _ => g.boundary_distance(s).is_some_and(|d| d >= 2),
                    };
                    if !far {
                        return Err(Error::InvalidEvent(format!(
                            "cage edge {} needs both endpoints at distance at least 2 from the boundary",
                            edge_text(x, y)
                        )));
                    }
                }
                let ball = g.ball(xs, 1)?;
                let (spokes, ring): (Vec<usize>, Vec<usize>) =
                    ball.edges.iter().partition(|&&e| g.edge(e).touches_site(xs));
                let d = g.dim() as i32;
                Ok(Layout::Cage {
                    edge,
                    x: xs,
                    spokes,
                    ring,
                    outer: ball.boundary,
                    scale: *scale,
                    threshold: f64::from(d) * 3f64.powi(d) * scale,
                })
            }
            EventSpec::FlexibleCage { base, threshold } => {
                let base = base.layout(g)?;
                let edge = base.edge().expect("validated edge event");
                Ok(Layout::Flexible {
                    base: Box::new(base),
                    edge,
                    threshold: *threshold,
                })
            }
        }
    }

    fn super_layout(g: &BoxGeometry, x: &[i64], y: &[i64], gap: f64) -> Result<Layout> {
        let (edge, xs, _) = resolve_edge(g, x, y)?;
        let competitors = g
            .incident(xs)
            .iter()
            .map(|&(e, _)| e)
            .filter(|&e| e != edge)
            .collect();
        Ok(Layout::Super {
            edge,
            competitors,
            gap,
        })
    }

    pub fn dependencies(&self, g: &BoxGeometry) -> Result<Vec<usize>> {
        Ok(self.layout(g)?.dependencies())
    }

    pub fn contains(&self, field: &CouplingField) -> Result<bool> {
        Ok(self.slack(field)? > 0.0)
    }

    /// An ℓ∞ radius such that every coupling field within it stays in the
    /// event; not positive when the field is outside the event.
    pub fn slack(&self, field: &CouplingField) -> Result<f64> {
        let layout = self.layout(field.geometry())?;
        slack_of(&layout, field)
    }

    /// Largest `t` for which `J + tε` is guaranteed to stay in the event.
    pub fn openness_threshold(&self, field: &CouplingField, eps: &CouplingField) -> Result<f64> {
        field.same_geometry(eps)?;
        let slack = self.slack(field)?;
        if slack <= 0.0 {
            return Ok(0.0);
        }
        let layout = self.layout(field.geometry())?;
        let reach: Vec<usize> = match layout {
            Layout::Flexible { .. } => (0..field.geometry().edge_count()).collect(),
            _ => layout.dependencies(),
        };
        let scale = reach.iter().map(|&e| eps.get(e).abs()).fold(0.0, f64::max);
        Ok(if scale == 0.0 { f64::INFINITY } else { slack / scale })
    }

    /// The same event placed in the smallest fixed-boundary box that holds
    /// every edge it reads.
    pub fn template(&self, dim: usize) -> Result<(Arc<BoxGeometry>, EventSpec)> {
        let offset = |x: &[i64], y: &[i64]| -> Result<Vec<i64>> {
            if x.len() != dim || y.len() != dim {
                return Err(Error::InvalidEvent(format!("event coordinates are not {dim}-dimensional")));
            }
            Ok(y.iter().zip(x).map(|(a, b)| a - b).collect())
        };
        let boxed = |side: usize, center: i64| -> Result<(Arc<BoxGeometry>, Vec<i64>)> {
            Ok((
                Arc::new(BoxGeometry::cube(dim, side, BoundaryMode::Fixed)?),
                vec![center; dim],
            ))
        };
        let shift = |c: &[i64], d: &[i64]| c.iter().zip(d).map(|(a, b)| a + b).collect::<Vec<_>>();
        Ok(match self {
            EventSpec::SuperSatisfied { x, y } => {
                let d = offset(x, y)?;
                let (g, c) = boxed(3, 1)?;
                (g, EventSpec::SuperSatisfied { y: shift(&c, &d), x: c })
            }
            EventSpec::ThermalSuperSatisfied { x, y, gap } => {
                let d = offset(x, y)?;
                let (g, c) = boxed(3, 1)?;
                (
                    g,
                    EventSpec::ThermalSuperSatisfied {
                        y: shift(&c, &d),
                        x: c,
                        gap: *gap,
                    },
                )
            }
            EventSpec::Cage { x, y, scale } => {
                let d = offset(x, y)?;
                let (g, c) = boxed(5, 2)?;
                (
                    g,
                    EventSpec::Cage {
                        y: shift(&c, &d),
                        x: c,
                        scale: *scale,
                    },
                )
            }
            EventSpec::FerroBlock { radius, lo, hi, .. } => {
                let (g, c) = boxed(2 * radius + 1, *radius as i64)?;
                (
                    g,
                    EventSpec::FerroBlock {
                        center: c,
                        radius: *radius,
                        lo: *lo,
                        hi: *hi,
                    },
                )
            }
            EventSpec::FlexibleCage { .. } => {
                return Err(Error::InvalidEvent(
                    "the flexibility term reads the whole box; no finite template exists".into(),
                ))
            }
        })
    }
}

pub(crate) fn slack_of(layout: &Layout, field: &CouplingField) -> Result<f64> {
    let j = |e: usize| field.get(e);
    Ok(match layout {
        Layout::Super {
            edge,
            competitors,
            gap,
        } => {
            let load: f64 = competitors.iter().map(|&e| j(e).abs()).sum();
            (j(*edge) - load - gap) / (1 + competitors.len()) as f64
        }
        Layout::Block { edges, lo, hi } => edges
            .iter()
            .map(|&e| (j(e) - lo).min(hi - j(e)))
            .fold(f64::INFINITY, f64::min),
        Layout::Cage {
            spokes,
            ring,
            outer,
            scale,
            threshold,
            ..
        } => {
            let weak = spokes
                .iter()
                .chain(outer)
                .map(|&e| scale - j(e).abs())
                .fold(f64::INFINITY, f64::min);
            let sign = j(ring[0]).signum();
            let strong = ring
                .iter()
                .map(|&e| {
                    if j(e).signum() == sign {
                        j(e).abs() - threshold
                    } else {
                        -j(e).abs()
                    }
                })
                .fold(f64::INFINITY, f64::min);
            let want = cage_field_sign(field.distribution());
            let net: f64 = spokes.iter().map(|&e| j(e)).sum();
            let pull = want * net / spokes.len() as f64;
            weak.min(strong).min(pull)
        }
        Layout::Flexible {
            base,
            edge,
            threshold,
        } => {
            let base_slack = slack_of(base, field)?;
            if base_slack <= 0.0 {
                return Ok(base_slack);
            }
            let flex = flexibility(field, *edge)?;
            let reach = 2.0 * field.geometry().edge_count() as f64;
            base_slack.min((flex - threshold) / reach)
        }
    })
}

impl fmt::Display for EventSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventSpec::SuperSatisfied { x, y } => write!(f, "supersat e={}", edge_text(x, y)),
            EventSpec::ThermalSuperSatisfied { x, y, gap } => {
                write!(f, "thermal e={} a={gap}", edge_text(x, y))
            }
            EventSpec::FerroBlock {
                center,
                radius,
                lo,
                hi,
            } => write!(f, "ferroblock v={} M={radius} I=({lo},{hi})", format_coords(center)),
            EventSpec::Cage { x, y, scale } => write!(f, "cage e={} r={scale}", edge_text(x, y)),
            EventSpec::FlexibleCage { base, threshold } => {
                write!(f, "flexcage base=[{base}] delta={threshold}")
            }
        }
    }
}

fn parse_edge(text: &str) -> Result<(Vec<i64>, Vec<i64>)> {
    let (a, b) = text
        .split_once(")-(")
        .ok_or_else(|| Error::Parse(format!("expected (x..)-(y..), got {text:?}")))?;
    Ok((parse_coords(&format!("{a})"))?, parse_coords(&format!("({b}"))?))
}

fn parse_number(key: &str, text: &str) -> Result<f64> {
    text.parse()
        .map_err(|e| Error::Parse(format!("{key}={text:?}: {e}")))
}

impl FromStr for EventSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s.split_once(char::is_whitespace).unwrap_or((s, ""));
        let rest = rest.trim();
        if kind == "flexcage" {
            let open = rest
                .find("base=[")
                .ok_or_else(|| Error::Parse("flexcage needs base=[...]".into()))?;
            let close = rest
                .rfind(']')
                .ok_or_else(|| Error::Parse("unterminated base=[...]".into()))?;
            let base: EventSpec = rest[open + 6..close].parse()?;
            let tail = format!("{} {}", &rest[..open], &rest[close + 1..]);
            let mut threshold = None;
            for token in tail.split_whitespace() {
                match token.split_once('=') {
                    Some(("delta", v)) => threshold = Some(parse_number("delta", v)?),
                    _ => return Err(Error::Parse(format!("unexpected token {token:?}"))),
                }
            }
            let spec = EventSpec::FlexibleCage {
                base: Box::new(base),
                threshold: threshold.ok_or_else(|| Error::Parse("flexcage needs delta=".into()))?,
            };
            spec.validate()?;
            return Ok(spec);
        }
        let mut edge = None;
        let (mut gap, mut scale, mut center, mut radius, mut interval) = (None, None, None, None, None);
        for token in rest.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {token:?}")))?;
            match key {
                "e" => edge = Some(parse_edge(value)?),
                "a" => gap = Some(parse_number(key, value)?),
                "r" => scale = Some(parse_number(key, value)?),
                "v" => center = Some(parse_coords(value)?),
                "M" => {
                    radius = Some(
                        value
                            .parse::<usize>()
                            .map_err(|e| Error::Parse(format!("M={value:?}: {e}")))?,
                    )
                }
                "I" => interval = Some(parse_pair(value)?),
                _ => return Err(Error::Parse(format!("unknown key {key:?} in {s:?}"))),
            }
        }
        let need = |what: &str| Error::Parse(format!("{kind} event needs {what}"));
        let spec = match kind {
            "supersat" => {
                let (x, y) = edge.ok_or_else(|| need("e="))?;
                EventSpec::SuperSatisfied { x, y }
            }
            "thermal" => {
                let (x, y) = edge.ok_or_else(|| need("e="))?;
                EventSpec::ThermalSuperSatisfied {
                    x,
                    y,
                    gap: gap.ok_or_else(|| need("a="))?,
                }
            }
            "cage" => {
                let (x, y) = edge.ok_or_else(|| need("e="))?;
                EventSpec::Cage {
                    x,
                    y,
                    scale: scale.ok_or_else(|| need("r="))?,
                }
            }
            "ferroblock" => {
                let (lo, hi) = interval.ok_or_else(|| need("I="))?;
                EventSpec::FerroBlock {
                    center: center.ok_or_else(|| need("v="))?,
                    radius: radius.ok_or_else(|| need("M="))?,
                    lo,
                    hi,
                }
            }
            other => return Err(Error::Parse(format!("unknown event kind {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}
