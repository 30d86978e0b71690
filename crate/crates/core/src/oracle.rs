//! Slow reference computations written independently of the fast paths.
//!
//! Everything here evaluates definitions directly: full energy sums for every
//! configuration, explicit subset scans, plain Boltzmann sums. Used by the test
//! suites and the self-test to cross-check the solvers.

use std::f64::consts::{PI, SQRT_2};
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};
use crate::model::field::CouplingField;
use crate::model::geometry::Node;

const NAIVE_LIMIT: usize = 20;

fn guard(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        Err(Error::TooLarge { spins: n, limit })
    } else {
        Ok(())
    }
}

/// Configuration number `k`: site `i` is down iff bit `i` of `k` is set.
pub fn configuration(n: usize, k: u64) -> Vec<i8> {
    (0..n).map(|i| if k >> i & 1 == 1 { -1 } else { 1 }).collect()
}

pub fn naive_energy(field: &CouplingField, spins: &[i8]) -> f64 {
    let spin = |node: Node| match node {
        Node::Site(i) => f64::from(spins[i]),
        Node::Boundary(_) => 1.0,
    };
    field
        .geometry()
        .edges()
        .iter()
        .zip(field.values())
        .map(|(e, j)| -j * spin(e.lo) * spin(e.hi))
        .sum()
}

fn naive_minimum(field: &CouplingField, accept: impl Fn(&[i8]) -> bool) -> Result<(Vec<i8>, f64)> {
    let g = field.geometry();
    let n = g.site_count();
    guard(n, NAIVE_LIMIT)?;
    let symmetric = g.mode().has_flip_symmetry();
    let mut best: Option<(Vec<i8>, f64)> = None;
    for k in 0..1u64 << n {
        let s = configuration(n, k);
        if (symmetric && s[0] == -1) || !accept(&s) {
            continue;
        }
        let e = naive_energy(field, &s);
        let better = match &best {
            None => true,
            Some((b, be)) => e < *be || (e == *be && s < *b),
        };
        if better {
            best = Some((s, e));
        }
    }
    best.ok_or_else(|| Error::InvalidGeometry("no admissible configuration".into()))
}

/// Minimiser by full re-evaluation of every configuration (site 0 up under
/// flip-symmetric modes).
pub fn naive_ground_state(field: &CouplingField) -> Result<(Vec<i8>, f64)> {
    naive_minimum(field, |_| true)
}

pub fn naive_constrained_ground_state(field: &CouplingField, edge: usize, sign: i8) -> Result<(Vec<i8>, f64)> {
    let e = field.geometry().edge(edge);
    let (Node::Site(x), Node::Site(y)) = (e.lo, e.hi) else {
        return Err(Error::InvalidGeometry(format!("edge {edge} is not an interior edge")));
    };
    naive_minimum(field, |s| s[x] * s[y] == sign)
}

/// Smallest pairwise energy gap between inequivalent configurations.
pub fn naive_degeneracy_margin(field: &CouplingField) -> Result<f64> {
    let g = field.geometry();
    let n = g.site_count();
    guard(n, 12)?;
    let symmetric = g.mode().has_flip_symmetry();
    let energies: Vec<f64> = (0..1u64 << n)
        .map(|k| configuration(n, k))
        .filter(|s| !(symmetric && s[0] == -1))
        .map(|s| naive_energy(field, &s))
        .collect();
    let mut margin = f64::INFINITY;
    for i in 0..energies.len() {
        for j in i + 1..energies.len() {
            margin = margin.min((energies[i] - energies[j]).abs());
        }
    }
    Ok(margin)
}

/// Lowest `Σ_{b ∈ ∂B} J_b s_b` over nonempty site sets `B` accepted by the
/// filter, found by scanning every subset. Returns the set and the sum.
pub fn min_boundary_sum(
    field: &CouplingField,
    spins: &[i8],
    accept: impl Fn(&[bool]) -> bool,
) -> Result<Option<(Vec<usize>, f64)>> {
    let g = field.geometry();
    let n = g.site_count();
    guard(n, 16)?;
    let spin = |node: Node| match node {
        Node::Site(i) => f64::from(spins[i]),
        Node::Boundary(_) => 1.0,
    };
    let mut best: Option<(Vec<usize>, f64)> = None;
    for mask in 1..1u64 << n {
        let member: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        if !accept(&member) {
            continue;
        }
        let inside = |node: Node| matches!(node, Node::Site(i) if member[i]);
        let sum: f64 = g
            .edges()
            .iter()
            .zip(field.values())
            .filter(|(e, _)| inside(e.lo) != inside(e.hi))
            .map(|(e, j)| j * spin(e.lo) * spin(e.hi))
            .sum();
        if best.as_ref().is_none_or(|(_, b)| sum < *b) {
            best = Some(((0..n).filter(|&i| member[i]).collect(), sum));
        }
    }
    Ok(best)
}

/// `Σ_s exp(-β H(s))` summed directly, without any shift.
pub fn direct_partition(field: &CouplingField, beta: f64) -> Result<f64> {
    let n = field.geometry().site_count();
    guard(n, 16)?;
    Ok((0..1u64 << n)
        .map(|k| (-beta * naive_energy(field, &configuration(n, k))).exp())
        .sum())
}

/// `<σ_e>` from the plain Boltzmann sum.
pub fn direct_edge_expectation(field: &CouplingField, beta: f64, edge: usize) -> Result<f64> {
    let g = field.geometry();
    let n = g.site_count();
    guard(n, 16)?;
    let e = g.edge(edge);
    let spin = |s: &[i8], node: Node| match node {
        Node::Site(i) => f64::from(s[i]),
        Node::Boundary(_) => 1.0,
    };
    let mut num = 0.0;
    let mut z = 0.0;
    for k in 0..1u64 << n {
        let s = configuration(n, k);
        let w = (-beta * naive_energy(field, &s)).exp();
        num += w * spin(&s, e.lo) * spin(&s, e.hi);
        z += w;
    }
    Ok(num / z)
}

/// `<σ_e σ'_e>` for two independent replicas, summed over all pairs of
/// configurations of the product system.
pub fn double_sum_edge_product(a: &CouplingField, b: &CouplingField, beta: f64, edge: usize) -> Result<f64> {
    a.same_geometry(b)?;
    let g = a.geometry();
    let n = g.site_count();
    guard(n, 9)?;
    let e = g.edge(edge);
    let spin = |s: &[i8], node: Node| match node {
        Node::Site(i) => f64::from(s[i]),
        Node::Boundary(_) => 1.0,
    };
    let configs: Vec<Vec<i8>> = (0..1u64 << n).map(|k| configuration(n, k)).collect();
    let ea: Vec<f64> = configs.iter().map(|s| naive_energy(a, s)).collect();
    let eb: Vec<f64> = configs.iter().map(|s| naive_energy(b, s)).collect();
    let shift = ea.iter().chain(&eb).cloned().fold(f64::INFINITY, f64::min);
    let mut num = 0.0;
    let mut z = 0.0;
    for (s, &hs) in configs.iter().zip(&ea) {
        for (t, &ht) in configs.iter().zip(&eb) {
            let w = (-beta * (hs + ht - 2.0 * shift)).exp();
            num += w * spin(s, e.lo) * spin(s, e.hi) * spin(t, e.lo) * spin(t, e.hi);
            z += w;
        }
    }
    Ok(num / z)
}

fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

/// `P(J_0 > |J_1| + ... + |J_{2d-1}|)` for IID mean-zero Gaussians, by
/// Gauss-Legendre quadrature over the competing magnitudes. Supports d ≤ 2.
pub fn supersat_probability(dim: usize) -> Result<f64> {
    let competitors = 2 * dim - 1;
    if !(1..=3).contains(&competitors) {
        return Err(Error::InvalidGeometry(format!(
            "quadrature supports d = 1 or 2, got {dim}"
        )));
    }
    const CUTOFF: f64 = 9.0;
    let rule = GaussLegendre::new(NonZeroUsize::new(64).expect("nonzero degree"));
    let half_normal = |u: f64| 2.0 * (-0.5 * u * u).exp() / (2.0 * PI).sqrt();
    fn nest(rule: &GaussLegendre, depth: usize, acc: f64, density: &dyn Fn(f64) -> f64) -> f64 {
        if depth == 0 {
            return normal_sf(acc);
        }
        rule.integrate(0.0, CUTOFF, |u| density(u) * nest(rule, depth - 1, acc + u, density))
    }
    Ok(nest(&rule, competitors, 0.0, &half_normal))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_reproduces_the_one_dimensional_symmetry_value() {
        assert!((supersat_probability(1).unwrap() - 0.25).abs() < 1e-12);
        let p2 = supersat_probability(2).unwrap();
        assert!(p2 > 0.0 && p2 < 0.25);
        assert!(supersat_probability(3).is_err());
    }

    #[test]
    fn configurations_follow_bit_order() {
        assert_eq!(configuration(3, 0b101), vec![-1, 1, -1]);
    }
}
