use std::sync::Arc;

use super::*;
use crate::model::{BoundaryMode, BoxGeometry, CouplingField, Disorder};
use crate::oracle;
use crate::seed::rng_from_seed;
use rand::Rng as _;

pub(crate) fn chain_instance() -> CouplingField {
    let g = Arc::new(BoxGeometry::new(1, &[3], BoundaryMode::Fixed).unwrap());
    let mut values = vec![0.0; g.edge_count()];
    for (a, b, j) in [(-1, 0, 1.0), (0, 1, -2.0), (1, 2, 0.5), (2, 3, 1.0)] {
        values[g.edge_at(&[a], &[b]).unwrap()] = j;
    }
    CouplingField::from_values(g, values).unwrap()
}

fn gaussian(d: usize, l: usize, mode: BoundaryMode, seed: u64) -> CouplingField {
    let g = Arc::new(BoxGeometry::cube(d, l, mode).unwrap());
    CouplingField::sample(g, &Disorder::standard_gaussian(), seed).unwrap()
}

fn config(field: &CouplingField, spins: &[i8]) -> SpinConfiguration {
    SpinConfiguration::new(Arc::clone(field.geometry_arc()), spins.to_vec()).unwrap()
}

#[test]
fn chain_energy_and_ground_state() {
    let f = chain_instance();
    assert_eq!(energy(&f, &config(&f, &[1, -1, 1])).unwrap(), -3.5);
    for method in [SolveMethod::Enumeration, SolveMethod::ChainDp] {
        let gs = ground_state_by(&f, method).unwrap();
        assert_eq!(gs.configuration.spins(), &[1, -1, 1]);
        assert_eq!(gs.energy, -3.5);
    }
    let (spins, e) = oracle::naive_ground_state(&f).unwrap();
    assert_eq!((spins, e), (vec![1, -1, 1], -3.5));
}

#[test]
fn chain_constrained_ground_states() {
    let f = chain_instance();
    let e = f.geometry().edge_at(&[0], &[1]).unwrap();
    let minus = constrained_ground_state(&f, e, -1).unwrap();
    let plus = constrained_ground_state(&f, e, 1).unwrap();
    assert_eq!(minus.configuration.spins(), &[1, -1, 1]);
    assert_eq!(minus.energy, -3.5);
    assert_eq!(plus.configuration.spins(), &[1, 1, 1]);
    assert_eq!(plus.energy, -0.5);
    assert_eq!(plus.energy.min(minus.energy), ground_state(&f).unwrap().energy);
}

#[test]
fn ferromagnet_energies() {
    let g = Arc::new(BoxGeometry::cube(2, 3, BoundaryMode::Fixed).unwrap());
    let f = CouplingField::constant(Arc::clone(&g), 1.0);
    let up = SpinConfiguration::all_up(Arc::clone(&g));
    assert_eq!(energy(&f, &up).unwrap(), -(g.edge_count() as f64));
    let gs = ground_state(&f).unwrap();
    assert_eq!(gs.configuration, up);

    let free = gaussian(2, 3, BoundaryMode::Free, 5);
    let s = config(&free, &oracle::configuration(9, 0b1_0110_1001));
    assert_eq!(energy(&free, &s).unwrap(), energy(&free, &s.negated()).unwrap());
}

#[test]
fn single_site_follows_its_net_field() {
    let g = Arc::new(BoxGeometry::new(2, &[1, 1], BoundaryMode::Fixed).unwrap());
    for seed in 0..20 {
        let f = CouplingField::sample(Arc::clone(&g), &Disorder::standard_gaussian(), seed).unwrap();
        let h: f64 = f.values().iter().sum();
        let gs = ground_state(&f).unwrap();
        assert_eq!(gs.configuration.spin(0), if h > 0.0 { 1 } else { -1 });
    }
}

#[test]
fn flip_energy_matches_two_evaluations() {
    let mut rng = rng_from_seed(11);
    for seed in 0..30 {
        for mode in [BoundaryMode::Fixed, BoundaryMode::Free, BoundaryMode::Periodic] {
            let f = gaussian(2, 3, mode, seed);
            let s = config(&f, &oracle::configuration(9, rng.random_range(0..512)));
            let set: Vec<usize> = (0..9).filter(|_| rng.random_bool(0.4)).collect();
            let direct = energy(&f, &s.flipped(&set)).unwrap() - energy(&f, &s).unwrap();
            assert!((flip_energy(&f, &s, &set).unwrap() - direct).abs() < 1e-12);
        }
    }
    let f = gaussian(2, 3, BoundaryMode::Free, 1);
    let s = config(&f, &oracle::configuration(9, 77));
    assert_eq!(flip_energy(&f, &s, &[]).unwrap(), 0.0);
    assert!(flip_energy(&f, &s, &(0..9).collect::<Vec<_>>()).unwrap().abs() < 1e-15);
}

#[test]
fn overlap_examples() {
    let f = chain_instance();
    let a = config(&f, &[1, -1, 1]);
    let b = config(&f, &[1, 1, 1]);
    assert_eq!(overlap(&a, &a).unwrap(), 1.0);
    assert_eq!(overlap(&a, &a.negated()).unwrap(), 1.0);
    assert_eq!(overlap(&a, &b).unwrap(), -1.0);
    assert_eq!(overlap(&b, &a).unwrap(), -1.0);
}

#[test]
fn text_round_trip() {
    let f = gaussian(2, 3, BoundaryMode::Fixed, 3);
    let s = config(&f, &oracle::configuration(9, 300));
    let text = s.to_text();
    assert!(text.ends_with(":++--+-++-"), "{text}");
    assert_eq!(SpinConfiguration::from_text(Arc::clone(f.geometry_arc()), &text).unwrap(), s);
    let other = Arc::new(BoxGeometry::cube(2, 3, BoundaryMode::Free).unwrap());
    assert!(SpinConfiguration::from_text(other, &text).is_err());
}

#[test]
fn kernel_matches_naive_reevaluation() {
    let mut count = 0;
    for seed in 0..40 {
        for (d, l) in [(1, 6), (1, 12), (2, 2), (2, 3), (2, 4)] {
            let f = gaussian(d, l, BoundaryMode::Fixed, 1000 + seed);
            let gs = ground_state_by(&f, SolveMethod::Enumeration).unwrap();
            let (spins, e) = oracle::naive_ground_state(&f).unwrap();
            assert_eq!(gs.configuration.spins(), spins.as_slice());
            assert!((gs.energy - e).abs() < 1e-12);
            count += 1;
        }
    }
    assert_eq!(count, 200);
}

#[test]
fn chain_dp_matches_enumeration() {
    for seed in 0..200u64 {
        let len = 2 + (seed % 19) as usize;
        let mode = [BoundaryMode::Fixed, BoundaryMode::Free, BoundaryMode::Periodic][seed as usize % 3];
        let len = if mode == BoundaryMode::Periodic { len.max(3) } else { len };
        let g = Arc::new(BoxGeometry::new(1, &[len], mode).unwrap());
        let f = CouplingField::sample(g, &Disorder::standard_gaussian(), seed).unwrap();
        let dp = ground_state_by(&f, SolveMethod::ChainDp).unwrap();
        let en = ground_state_by(&f, SolveMethod::Enumeration).unwrap();
        assert_eq!(dp.configuration, en.configuration, "seed {seed}");
        assert_eq!(dp.method, SolveMethod::ChainDp);
        assert!((dp.margin - en.margin).abs() < 1e-12);
    }
}

#[test]
fn flip_symmetric_modes_return_the_canonical_representative() {
    for mode in [BoundaryMode::Free, BoundaryMode::Periodic] {
        for seed in 0..10 {
            let f = gaussian(2, 3, mode, seed);
            let gs = ground_state(&f).unwrap();
            assert_eq!(gs.configuration.spin(0), 1);
            assert_eq!(gs.configuration, gs.configuration.canonical());
            let (spins, _) = oracle::naive_ground_state(&f).unwrap();
            assert_eq!(gs.configuration.spins(), spins.as_slice());
        }
    }
}

#[test]
fn gauge_transform_maps_ground_states() {
    // Negating every coupling at v is the same as flipping s_v.
    for seed in 0..20 {
        let f = gaussian(2, 3, BoundaryMode::Fixed, seed);
        let g = f.geometry_arc();
        let v = (seed % 9) as usize;
        let mut gauged = f.clone();
        for &(edge, _) in g.incident(v) {
            gauged.set(edge, -f.get(edge));
        }
        let a = ground_state(&f).unwrap().configuration;
        let b = ground_state(&gauged).unwrap().configuration;
        assert_eq!(b, a.flipped(&[v]));
    }
}

#[test]
fn degenerate_couplings_are_rejected() {
    let g = Arc::new(BoxGeometry::new(1, &[1], BoundaryMode::Fixed).unwrap());
    let f = CouplingField::from_values(g, vec![1.0, -1.0]).unwrap();
    assert!(matches!(ground_state(&f), Err(Error::Degenerate { .. })));
    let free = Arc::new(BoxGeometry::cube(2, 2, BoundaryMode::Free).unwrap());
    let ferro = ground_state(&CouplingField::constant(free, 1.0)).unwrap();
    assert_eq!(ferro.margin, 4.0);
}

#[test]
fn oversized_boxes_are_refused() {
    let f = gaussian(2, 6, BoundaryMode::Fixed, 0);
    assert!(matches!(
        ground_state(&f),
        Err(Error::TooLarge { spins: 36, limit: 28 })
    ));
    let long = gaussian(1, 200, BoundaryMode::Fixed, 0);
    assert_eq!(ground_state(&long).unwrap().method, SolveMethod::ChainDp);
}

#[test]
fn verification_certifies_and_refutes() {
    for seed in 0..10 {
        let f = gaussian(2, 3, BoundaryMode::Fixed, seed);
        let gs = ground_state(&f).unwrap().configuration;
        let ok = verify_ground_state(&f, &gs, VerifyMode::Exhaustive).unwrap();
        assert!(ok.certified && ok.violation.is_none());
        assert_eq!(ok.tested, 511);

        let bad = verify_ground_state(&f, &gs.flipped(&[4]), VerifyMode::Clusters { max_size: 1 }).unwrap();
        assert!(!bad.certified);

        let random = config(&f, &oracle::configuration(9, 0x1a5 ^ seed));
        if random == gs {
            continue;
        }
        let report = verify_ground_state(&f, &random, VerifyMode::Exhaustive).unwrap();
        assert!(!report.certified);
        let set = report.violation.unwrap();
        assert!(flip_energy(&f, &random, &set).unwrap() <= 0.0);
    }
}

#[test]
fn clusters_mode_covers_connected_sets() {
    let f = gaussian(2, 4, BoundaryMode::Fixed, 8);
    let gs = ground_state(&f).unwrap().configuration;
    let report = verify_ground_state(&f, &gs, VerifyMode::Clusters { max_size: 3 }).unwrap();
    assert!(report.certified);
    // 16 singletons, 24 dominoes, 52 trominoes on a 4x4 grid
    assert_eq!(report.tested, 16 + 24 + 52);
}
