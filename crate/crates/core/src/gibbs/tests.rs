use std::sync::Arc;

use super::*;
use crate::droplet::flexibility;
use crate::events::sample_witness;
use crate::model::{BoundaryMode, Disorder, PerturbationPair};
use crate::oracle;
use crate::seed::derive_seed;
use crate::solver::ground_state;

fn gaussian_field(d: usize, side: usize, mode: BoundaryMode, seed: u64) -> CouplingField {
    let g = Arc::new(BoxGeometry::cube(d, side, mode).unwrap());
    CouplingField::sample(g, &Disorder::standard_gaussian(), seed).unwrap()
}

fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

#[test]
fn single_spin_is_a_two_state_system() {
    let g = Arc::new(BoxGeometry::new(1, &[1], BoundaryMode::Fixed).unwrap());
    let f = CouplingField::from_values(g, vec![0.7, -0.2]).unwrap();
    for beta in [0.3, 1.0, 4.0] {
        let h = 0.5;
        let lz = log_partition(&f, beta).unwrap();
        assert!(close_rel(lz, (2.0 * (beta * h).cosh()).ln(), 1e-14));
        for edge in 0..2 {
            let m = thermal_edge_expectation(&f, beta, edge).unwrap();
            assert!((m - (beta * h).tanh()).abs() < 1e-15);
        }
    }
}

#[test]
fn high_temperature_limit() {
    let f = gaussian_field(2, 3, BoundaryMode::Fixed, 4);
    let lz = log_partition(&f, 1e-9).unwrap();
    assert!((lz - 9.0 * 2f64.ln()).abs() < 1e-6);
}

#[test]
fn partition_function_matches_direct_sum() {
    for mode in [BoundaryMode::Fixed, BoundaryMode::Free] {
        for seed in 0..10 {
            let f = gaussian_field(2, 2, mode, seed);
            for beta in [0.5, 1.0, 3.0] {
                let direct = oracle::direct_partition(&f, beta).unwrap();
                assert!(close_rel(log_partition(&f, beta).unwrap().exp(), direct, 1e-12));
                for e in 0..f.geometry().edge_count() {
                    let a = thermal_edge_expectation(&f, beta, e).unwrap();
                    let b = oracle::direct_edge_expectation(&f, beta, e).unwrap();
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn large_beta_is_finite() {
    let f = gaussian_field(2, 3, BoundaryMode::Fixed, 2);
    let s = thermal_state(&f, 1e4).unwrap();
    assert!(s.log_partition.is_finite());
    assert!((s.log_partition + 1e4 * s.min_energy).abs() < 1.0);
    assert!(s.edge_expectations.iter().all(|m| m.abs() <= 1.0));
}

#[test]
fn pairing_route_matches_the_definition() {
    for seed in 0..10 {
        let f = gaussian_field(2, 3, BoundaryMode::Fixed, 30 + seed);
        let g = f.geometry();
        let state = thermal_state(&f, 1.3).unwrap();
        for e in 0..g.edge_count() {
            let edge = g.edge(e);
            for pivot in [edge.lo.site(), edge.hi.site()].into_iter().flatten() {
                let paired = edge_expectation_by_pairing(&f, 1.3, e, pivot).unwrap();
                assert!((paired - state.edge_expectations[e]).abs() < 1e-12);
            }
        }
    }
    let f = gaussian_field(2, 3, BoundaryMode::Fixed, 0);
    assert!(edge_expectation_by_pairing(&f, 1.0, 0, 8).is_err());
}

#[test]
fn expectations_are_strictly_inside_the_unit_interval() {
    for seed in 0..5 {
        let f = gaussian_field(2, 3, BoundaryMode::Periodic, seed);
        for m in thermal_state(&f, 2.0).unwrap().edge_expectations {
            assert!(m.abs() < 1.0);
        }
    }
}

#[test]
fn low_temperature_recovers_the_ground_state() {
    let mut checked = 0;
    for seed in 0..40 {
        let f = gaussian_field(2, 3, BoundaryMode::Fixed, 100 + seed);
        let gs = ground_state(&f).unwrap().configuration;
        for &e in f.geometry().interior_edges() {
            if flexibility(&f, e).unwrap() < 0.5 {
                continue;
            }
            let target = f64::from(gs.edge_product(e));
            let errors: Vec<f64> = [5.0, 10.0, 50.0]
                .iter()
                .map(|&beta| (thermal_edge_expectation(&f, beta, e).unwrap() - target).abs())
                .collect();
            assert!(errors[2] < 1e-6);
            assert!(errors[0] >= errors[1] && errors[1] >= errors[2]);
            checked += 1;
        }
    }
    assert!(checked > 50);
}

#[test]
fn gauge_flip_changes_the_sign() {
    for seed in 0..10 {
        let f = gaussian_field(2, 3, BoundaryMode::Fixed, seed);
        let g = f.geometry_arc();
        let v = 4;
        let mut gauged = f.clone();
        for &(e, _) in g.incident(v) {
            gauged.set(e, -f.get(e));
        }
        let a = thermal_state(&f, 0.8).unwrap();
        let b = thermal_state(&gauged, 0.8).unwrap();
        for e in 0..g.edge_count() {
            let sign = if g.edge(e).touches_site(v) { -1.0 } else { 1.0 };
            assert!((a.edge_expectations[e] - sign * b.edge_expectations[e]).abs() < 1e-12);
        }
        assert!((a.log_partition - b.log_partition).abs() < 1e-12);
    }
}

#[test]
fn thermal_overlap_limits() {
    let g = Arc::new(BoxGeometry::cube(2, 3, BoundaryMode::Fixed).unwrap());
    let dist = Disorder::standard_gaussian();
    for seed in 0..5 {
        let f = CouplingField::sample(Arc::clone(&g), &dist, seed).unwrap();
        let p = PerturbationPair::draw(Arc::clone(&g), &dist, derive_seed(seed, "pert", 0)).unwrap();
        let zero = thermal_overlap(&f, &p.eps, &p.eps_prime, 0.0, 1.0).unwrap();
        assert!(zero.aggregate >= 0.0);
        let mean = zero.edges.iter().map(|r| r.product).sum::<f64>() / 12.0;
        assert!((zero.aggregate - mean).abs() < 1e-15);
        let cold = thermal_overlap(&f, &p.eps, &p.eps_prime, 0.0, 50.0).unwrap();
        let warm = thermal_overlap(&f, &p.eps, &p.eps_prime, 0.0, 5.0).unwrap();
        assert!(cold.aggregate > 0.9 && cold.aggregate >= warm.aggregate);
        for row in &cold.edges {
            if flexibility(&f, row.edge).unwrap() >= 0.5 {
                assert!(row.product > 1.0 - 1e-6);
            }
        }
        let hot = thermal_overlap(&f, &p.eps, &p.eps_prime, 0.0, 1e-6).unwrap();
        assert!(hot.aggregate.abs() < 1e-9);
        let moved = thermal_overlap(&f, &p.eps, &p.eps_prime, 0.3, 1.0).unwrap();
        assert!(moved.aggregate.abs() <= 1.0);
    }
}

#[test]
fn replica_factorization_matches_the_double_sum() {
    let g = Arc::new(BoxGeometry::cube(2, 3, BoundaryMode::Fixed).unwrap());
    let dist = Disorder::standard_gaussian();
    for seed in 0..3 {
        let f = CouplingField::sample(Arc::clone(&g), &dist, seed).unwrap();
        let p = PerturbationPair::draw(Arc::clone(&g), &dist, seed).unwrap();
        let t = 0.2;
        let report = thermal_overlap(&f, &p.eps, &p.eps_prime, t, 0.9).unwrap();
        let (a, b) = (f.perturb(&p.eps, t).unwrap(), f.perturb(&p.eps_prime, t).unwrap());
        for row in report.edges.iter().step_by(3) {
            let double = oracle::double_sum_edge_product(&a, &b, 0.9, row.edge).unwrap();
            assert!((row.product - double).abs() < 1e-12);
        }
    }
}

#[test]
fn thermal_bounds_on_witnesses() {
    let g = Arc::new(BoxGeometry::cube(2, 3, BoundaryMode::Fixed).unwrap());
    let dist = Disorder::standard_gaussian();
    let event: EventSpec = "thermal e=(1,1)-(1,2) a=0.5".parse().unwrap();
    let mut found = 0;
    for seed in 0..200 {
        let f = sample_witness(&event, Arc::clone(&g), &dist, seed).unwrap();
        let p = PerturbationPair::draw(Arc::clone(&g), &dist, derive_seed(seed, "pert", 0)).unwrap();
        let report = match thermal_bound_check(&f, &p.eps, &p.eps_prime, 0.01, 1.0, &event) {
            Err(Error::NotInEvent(_)) => continue,
            other => other.unwrap(),
        };
        assert!((report.corrected_bound - 0.19673467014368329).abs() < 1e-15);
        assert!(report.corrected_holds && report.corrected_product_holds && report.tanh_holds);
        found += 1;
    }
    assert!(found >= 100);

    let f = sample_witness(&event, Arc::clone(&g), &dist, 0).unwrap();
    let zero = CouplingField::constant(Arc::clone(&g), 0.0);
    let report = thermal_bound_check(&f, &zero, &zero, 0.0, 4.0, &event).unwrap();
    assert!(report.stated_bound > 3.19 && !report.stated_holds);

    let mut outside = f.clone();
    outside.set(g.edge_at(&[1, 1], &[1, 2]).unwrap(), -1.0);
    assert!(matches!(
        thermal_bound_check(&outside, &zero, &zero, 0.0, 1.0, &event),
        Err(Error::NotInEvent(_))
    ));
}

#[test]
fn heat_bath_tracks_exact_averages() {
    let f = gaussian_field(2, 3, BoundaryMode::Fixed, 12);
    let exact = thermal_state(&f, 0.5).unwrap();
    let e = f.geometry().interior_edges()[2];
    let mut chain = HeatBath::new(f, 0.5, 3).unwrap();
    let estimate = chain.edge_average(e, 500, 40_000);
    assert!((estimate - exact.edge_expectations[e]).abs() < 0.05);
    assert_eq!(chain.spins().len(), 9);
}

#[test]
fn size_and_temperature_guards() {
    let f = gaussian_field(2, 5, BoundaryMode::Fixed, 0);
    assert!(matches!(log_partition(&f, 1.0), Err(Error::TooLarge { .. })));
    let small = gaussian_field(2, 2, BoundaryMode::Fixed, 0);
    assert!(log_partition(&small, 0.0).is_err());
    assert!(log_partition(&small, f64::INFINITY).is_err());
}
