use std::sync::Arc;

use proptest::prelude::*;

use eachaos::droplet::{critical_value, flexibility};
use eachaos::events::{wilson_interval, EventSpec};
use eachaos::gibbs::thermal_state;
use eachaos::model::{BoundaryMode, BoxGeometry, CouplingField};
use eachaos::oracle;
use eachaos::seed::derive_seed;
use eachaos::solver::{energy, ground_state, overlap, SpinConfiguration};

fn boxes() -> impl Strategy<Value = Arc<BoxGeometry>> {
    prop_oneof![
        Just((1, vec![7], BoundaryMode::Fixed)),
        Just((2, vec![3, 3], BoundaryMode::Fixed)),
        Just((2, vec![2, 4], BoundaryMode::Free)),
        Just((2, vec![3, 3], BoundaryMode::Periodic)),
    ]
    .prop_map(|(d, sides, mode)| Arc::new(BoxGeometry::new(d, &sides, mode).unwrap()))
}

fn instance() -> impl Strategy<Value = CouplingField> {
    boxes().prop_flat_map(|g| {
        let n = g.edge_count();
        proptest::collection::vec(-3.0..3.0f64, n)
            .prop_map(move |values| CouplingField::from_values(Arc::clone(&g), values).unwrap())
    })
}

fn spins_for(g: &Arc<BoxGeometry>, bits: u64) -> SpinConfiguration {
    SpinConfiguration::new(Arc::clone(g), oracle::configuration(g.site_count(), bits)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ground_state_is_no_worse_than_any_configuration(j in instance(), bits in any::<u64>()) {
        let gs = ground_state(&j).unwrap();
        let s = spins_for(j.geometry_arc(), bits);
        prop_assert!(gs.energy <= energy(&j, &s).unwrap() + 1e-12);
    }

    #[test]
    fn gauge_flip_carries_the_ground_state(j in instance(), bits in any::<u64>()) {
        prop_assume!(j.geometry().mode() == BoundaryMode::Fixed);
        let g = j.geometry_arc();
        let tau = spins_for(g, bits);
        let mut gauged = j.clone();
        for e in 0..g.edge_count() {
            gauged.set(e, j.get(e) * f64::from(tau.edge_product(e)));
        }
        let a = ground_state(&j).unwrap().configuration;
        let b = ground_state(&gauged).unwrap().configuration;
        for e in 0..g.edge_count() {
            prop_assert_eq!(a.edge_product(e), b.edge_product(e) * tau.edge_product(e));
        }
    }

    #[test]
    fn overlap_is_symmetric_and_bounded(j in instance(), x in any::<u64>(), y in any::<u64>()) {
        let g = j.geometry_arc();
        let (a, b) = (spins_for(g, x), spins_for(g, y));
        let q = overlap(&a, &b).unwrap();
        prop_assert_eq!(q, overlap(&b, &a).unwrap());
        prop_assert!((-1.0..=1.0).contains(&q));
        prop_assert_eq!(overlap(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn flexibility_is_twice_the_distance_to_the_critical_value(j in instance(), k in 0usize..64, h in -2.0..2.0f64) {
        let interior = j.geometry().interior_edges().to_vec();
        let e = interior[k % interior.len()];
        let c = critical_value(&j, e).unwrap();
        let mut moved = j.clone();
        moved.set(e, c + h);
        prop_assert!((flexibility(&moved, e).unwrap() - 2.0 * h.abs()).abs() < 1e-9);
        prop_assert!((critical_value(&moved, e).unwrap() - c).abs() < 1e-9);
    }

    #[test]
    fn thermal_expectations_are_strictly_inside(j in instance(), beta in 0.01..1.0f64, cold in 1.0..50.0f64) {
        let state = thermal_state(&j, beta).unwrap();
        prop_assert!(state.log_partition.is_finite());
        for m in state.edge_expectations {
            prop_assert!(m.abs() < 1.0);
        }
        for m in thermal_state(&j, cold).unwrap().edge_expectations {
            prop_assert!(m.abs() <= 1.0);
        }
    }

    #[test]
    fn zero_perturbation_is_the_identity(j in instance(), eps in instance()) {
        prop_assume!(j.same_geometry(&eps).is_ok());
        let (moved, ou) = (j.perturb(&eps, 0.0).unwrap(), j.ornstein_uhlenbeck(&eps, 0.0).unwrap());
        prop_assert_eq!(moved.values(), j.values());
        prop_assert_eq!(ou.values(), j.values());
    }

    #[test]
    fn wilson_interval_holds_the_point_estimate(n in 1u64..100_000, frac in 0.0..=1.0f64, level in 0.5..0.999f64) {
        let k = ((n as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(k, n, level).unwrap();
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }

    #[test]
    fn seeds_are_stable_and_label_sensitive(parent in any::<u64>(), index in any::<u64>()) {
        prop_assert_eq!(derive_seed(parent, "a", index), derive_seed(parent, "a", index));
        prop_assert_ne!(derive_seed(parent, "a", index), derive_seed(parent, "b", index));
    }

    #[test]
    fn event_text_round_trips(x in 1i64..4, y in 1i64..4, r in 0.01..1.0f64, m in 1usize..4) {
        for text in [
            format!("supersat e=({x},{y})-({x},{})", y + 1),
            format!("thermal e=({x},{y})-({},{y}) a={r}", x + 1),
            format!("cage e=({x},{y})-({x},{}) r={r}", y + 1),
            format!("ferroblock v=({x},{y}) M={m} I=({r},{})", r + 1.0),
        ] {
            let event: EventSpec = text.parse().unwrap();
            prop_assert_eq!(event.to_string().parse::<EventSpec>().unwrap(), event);
        }
    }
}
