mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{brute_product_limit, dataset_from, STATUSES};
use crgrf::dataset::{read_csv, write_csv, AnalysisConfig, Dataset, ObservedRecord, ResolvedStrata, Scale, Schema, Status};
use crgrf::effects::fit_two_step;
use crgrf::ipcw::{build_crude_outcomes, build_net_outcomes, fit_competing_km, fit_reverse_km};
use crgrf::simbench::{simulate_dataset, SimDesign};

fn observations() -> impl Strategy<Value = Vec<(f64, Status)>> {
    prop::collection::vec((0u8..6, 0usize..3), 1..40)
        .prop_map(|v| v.into_iter().map(|(t, s)| (f64::from(t) * 0.25, STATUSES[s])).collect())
}

fn small_design(n: usize) -> SimDesign {
    let mut d = SimDesign::builtin().with_n(n);
    d.treatments.truncate(3);
    d
}

fn quick_config(horizon: f64) -> AnalysisConfig {
    let mut c = AnalysisConfig::new(horizon);
    c.trees = 40;
    c.seed = 3;
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn km_curves_equal_product_limit(obs in observations()) {
        let data = dataset_from(&obs);
        let none = ResolvedStrata::unstratified();
        let g = fit_reverse_km(&data, &none).unwrap();
        let g2 = fit_competing_km(&data, &none).unwrap();
        let g = g.curves().values().next().unwrap();
        let g2 = g2.curves().values().next().unwrap();
        for t in [0.0, 0.1, 0.25, 0.5, 0.6, 1.0, 1.25, 2.0] {
            prop_assert_eq!(g.value_at(t), brute_product_limit(&obs, Status::Censored, t));
            prop_assert_eq!(g2.value_at(t), brute_product_limit(&obs, Status::Competing, t));
        }
    }

    #[test]
    fn curves_are_monotone_in_unit_interval(obs in observations()) {
        let data = dataset_from(&obs);
        let g = fit_reverse_km(&data, &ResolvedStrata::unstratified()).unwrap();
        let c = g.curves().values().next().unwrap();
        let mut prev = 1.0;
        for t in (0..30).map(|i| f64::from(i) * 0.05) {
            let v = c.value_at(t);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!(v <= prev);
            prop_assert!(c.left_limit(t) >= v);
            prev = v;
        }
    }

    #[test]
    fn net_outcomes_dominate_crude(obs in observations(), horizon in 0.0f64..1.5, floor in 0.001f64..0.2) {
        let data = dataset_from(&obs);
        let none = ResolvedStrata::unstratified();
        let g = fit_reverse_km(&data, &none).unwrap();
        let g2 = fit_competing_km(&data, &none).unwrap();
        let crude = build_crude_outcomes(&data, &g, horizon, floor);
        let net = build_net_outcomes(&data, &g, &g2, horizon, floor);
        if let (Ok(crude), Ok(net)) = (crude, net) {
            for ((c, n), r) in crude.iter().zip(&net).zip(data.records()) {
                prop_assert!(c.value >= 0.0);
                prop_assert!(n.value >= c.value);
                if r.status != Status::Event || r.time > horizon {
                    prop_assert_eq!(n.value, 0.0);
                }
            }
        }
    }

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(
        (0.0f64..50.0, 0usize..3, 0u8..2, 0u8..2, -5.0f64..5.0, 0u8..4), 1..30)
    ) {
        let records: Vec<ObservedRecord> = rows
            .iter()
            .enumerate()
            .map(|(i, &(time, s, a1, a2, x, c))| ObservedRecord {
                id: format!("id{i}"),
                time,
                status: STATUSES[s],
                treatments: vec![a1, a2],
                covariates: vec![x, f64::from(c)],
            })
            .collect();
        let data = Dataset::new(
            records,
            vec!["a1".into(), "a2".into()],
            vec!["x".into(), "grp".into()],
            vec![false, true],
        ).unwrap();
        let mut buf = Vec::new();
        write_csv(&data, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &Schema::for_dataset(&data)).unwrap();
        prop_assert_eq!(back.records(), data.records());
        prop_assert_eq!(back.categorical_flags(), data.categorical_flags());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn kernel_weights_sum_to_one(seed in 0u64..1000, x1 in 0.0f64..1.0, x4 in 0.0f64..1.0) {
        let data = simulate_dataset(&small_design(300), seed).unwrap();
        let fit = fit_two_step(&data, 0, Scale::Crude, &quick_config(0.5)).unwrap();
        let mut x = fit.model.features.row(0);
        x[0] = x1;
        x[3] = x4;
        let alpha = fit.model.kernel_weights(&x).unwrap();
        prop_assert!(alpha.iter().all(|&w| w >= 0.0));
        prop_assert!((alpha.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn crude_and_net_agree_bitwise_without_competing_events() {
    let mut design = small_design(400);
    design.competing = None;
    for seed in 0..3 {
        let data = simulate_dataset(&design, seed).unwrap();
        assert_eq!(data.event_counts().competing, 0);
        let config = quick_config(0.5);
        for k in 0..3 {
            let crude = fit_two_step(&data, k, Scale::Crude, &config).unwrap();
            let net = fit_two_step(&data, k, Scale::Net, &config).unwrap();
            assert_eq!(crude.estimate.ate.to_bits(), net.estimate.ate.to_bits());
            assert_eq!(crude.estimate.se.to_bits(), net.estimate.se.to_bits());
            for (c, n) in crude.outcomes.iter().zip(&net.outcomes) {
                assert_eq!(c.value.to_bits(), n.value.to_bits());
            }
        }
    }
}

#[test]
fn row_order_does_not_change_the_estimate() {
    let data = simulate_dataset(&small_design(500), 21).unwrap();
    let mut order: Vec<usize> = (0..data.n()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(4));
    let shuffled = data.permuted(&order);
    let config = quick_config(0.5);
    for scale in [Scale::Crude, Scale::Net] {
        let a = fit_two_step(&data, 0, scale, &config).unwrap().estimate;
        let b = fit_two_step(&shuffled, 0, scale, &config).unwrap().estimate;
        assert!((a.ate - b.ate).abs() < 1e-9, "{} vs {}", a.ate, b.ate);
        assert!((a.se - b.se).abs() < 1e-9, "{} vs {}", a.se, b.se);
    }
}

#[test]
fn forest_is_reproducible_from_the_seed() {
    let data = simulate_dataset(&small_design(300), 5).unwrap();
    let config = quick_config(0.5);
    let a = fit_two_step(&data, 1, Scale::Net, &config).unwrap();
    let b = fit_two_step(&data, 1, Scale::Net, &config).unwrap();
    assert_eq!(a.estimate, b.estimate);
    let mut other = config.clone();
    other.seed += 1;
    let c = fit_two_step(&data, 1, Scale::Net, &other).unwrap();
    assert_ne!(a.estimate.ate, c.estimate.ate);
}
