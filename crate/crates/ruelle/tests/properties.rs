//! Randomized structural invariants. Each property is algebra the modules
//! promise for every input, so the generators range wider than the unit
//! tests bother to.

use proptest::prelude::*;

use ruelle::analysis::MarginalMeasure;
use ruelle::configuration::{word_from_index, word_index, Configuration, CoordView};
use ruelle::kernels::{CylinderSet, KernelOptions, Observable};
use ruelle::potential::Potential;
use ruelle::space::{StateSpace, Weighting};
use ruelle::transfer::CylinderFunction;
use ruelle::kernels::kernel_value;

fn binary() -> StateSpace {
    StateSpace::uniform_binary()
}

prop_compose! {
    fn config(max_len: usize)(prefix in prop::collection::vec(0usize..2, 0..=max_len), pad in 0usize..2) -> Configuration {
        Configuration::from_prefix(prefix, pad)
    }
}

prop_compose! {
    fn table(window: usize)(values in prop::collection::vec(-1.0f64..1.0, 1 << window)) -> Potential {
        Potential::finite_range(2, window, values).unwrap()
    }
}

// Dyadic tables make every Birkhoff partial sum exactly representable, so
// the splitting law can be asserted bitwise there.
prop_compose! {
    fn dyadic_table(window: usize)(values in prop::collection::vec(-8i32..=8, 1 << window)) -> Potential {
        let table = values.into_iter().map(|v| v as f64 / 4.0).collect();
        Potential::finite_range(2, window, table).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn prepend_then_shift_restores_every_coordinate(x in config(8), a in 0usize..2) {
        let there_and_back = x.prepend(a).shift();
        for k in 1..=12 {
            prop_assert_eq!(there_and_back.coord(k), x.coord(k));
        }
        prop_assert_eq!(x.prepend(a).coord(1), a);
    }

    #[test]
    fn shifting_in_steps_matches_shifting_at_once(x in config(8), n in 0usize..6, m in 0usize..6) {
        let stepwise = x.shift_n(n).shift_n(m);
        let at_once = x.shift_n(n + m);
        for k in 1..=12 {
            prop_assert_eq!(stepwise.coord(k), at_once.coord(k));
        }
    }

    #[test]
    fn birkhoff_sums_split_exactly_for_dyadic_tables(
        f in dyadic_table(2),
        x in config(6),
        n in 1usize..6,
        m in 1usize..6,
    ) {
        let space = binary();
        let whole = f.birkhoff_sum(&space, &x, n + m).unwrap();
        let split = f.birkhoff_sum(&space, &x, n).unwrap()
            + f.birkhoff_sum(&space, &x.shift_n(n), m).unwrap();
        prop_assert_eq!(whole.to_bits(), split.to_bits());
    }

    #[test]
    fn birkhoff_sums_split_for_general_tables(
        f in table(3),
        x in config(6),
        n in 1usize..6,
        m in 1usize..6,
    ) {
        let space = binary();
        let whole = f.birkhoff_sum(&space, &x, n + m).unwrap();
        let split = f.birkhoff_sum(&space, &x, n).unwrap()
            + f.birkhoff_sum(&space, &x.shift_n(n), m).unwrap();
        prop_assert!((whole - split).abs() < 1e-10, "{whole} vs {split}");
    }

    #[test]
    fn indicator_kernels_stay_inside_the_unit_interval(
        f in table(2),
        x in config(4),
        n in 1usize..6,
        coord in 1usize..4,
        symbol in 0usize..2,
    ) {
        prop_assume!(coord <= n);
        let space = binary();
        let set = CylinderSet::single(coord, symbol).unwrap();
        let kv = kernel_value(
            &space,
            Weighting::Probability,
            &f,
            n,
            &Observable::Indicator(set),
            &x,
            &KernelOptions::default(),
        ).unwrap();
        prop_assert!(kv.value >= -1e-15 && kv.value <= 1.0 + 1e-15, "{}", kv.value);
    }

    #[test]
    fn grid_kernels_respect_the_observable_bounds(
        f in table(2),
        x in config(4),
        n in 1usize..5,
        values in prop::collection::vec(-2.0f64..2.0, 4),
    ) {
        let space = binary();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let grid = CylinderFunction::from_values(&space, 2, values).unwrap();
        let kv = kernel_value(
            &space,
            Weighting::Counting,
            &f,
            n,
            &Observable::Grid(grid),
            &x,
            &KernelOptions::default(),
        ).unwrap();
        // a convex average of observable values cannot escape their range
        prop_assert!(kv.value >= lo - 1e-12 && kv.value <= hi + 1e-12, "{} not in [{lo}, {hi}]", kv.value);
    }

    #[test]
    fn marginalizing_in_stages_matches_marginalizing_at_once(
        raw in prop::collection::vec(0.01f64..1.0, 8),
    ) {
        let space = binary();
        let sum: f64 = raw.iter().sum();
        let mass: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let mu = MarginalMeasure::new(&space, 3, mass, "test".to_string()).unwrap();
        let two_step = mu.marginalize(2).unwrap().marginalize(1).unwrap();
        let one_step = mu.marginalize(1).unwrap();
        prop_assert!(two_step.tv_distance(&one_step).unwrap() < 1e-14);
        // total mass survives every projection
        let total: f64 = (0..2)
            .map(|a| one_step.probability(&CylinderSet::single(1, a).unwrap()).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_extension_preserves_values(
        values in prop::collection::vec(-3.0f64..3.0, 4),
        word in prop::collection::vec(0usize..2, 5),
    ) {
        let space = binary();
        let coarse = CylinderFunction::from_values(&space, 2, values).unwrap();
        let fine = coarse.extended(&space, 5).unwrap();
        let x = Configuration::from_prefix(word, 0);
        prop_assert_eq!(coarse.eval_view(&x).to_bits(), fine.eval_view(&x).to_bits());
    }

    #[test]
    fn word_indexing_round_trips(len in 1usize..10, idx_seed in any::<u64>()) {
        let total = 1usize << len;
        let idx = (idx_seed as usize) % total;
        let word = word_from_index(2, len, idx);
        prop_assert_eq!(word_index(2, &word), idx);
    }
}
