mod support;

use hare_core::stats::{
    compare_metrics, filter_zero_expert, kendall_tau_b, normalize, ols_simple, pearson, spearman, MetricSeries,
    PairedSamples, StatsError,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use support::oracle;

/// Paired series of length 3..=50. With `ties`, values come from a small
/// integer grid so ties are common.
fn arb_pair(ties: bool) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..=50).prop_flat_map(move |n| {
        let v = if ties {
            prop::collection::vec((0i32..6).prop_map(f64::from), n).boxed()
        } else {
            prop::collection::vec(-100.0f64..100.0, n).boxed()
        };
        (v.clone(), v)
    })
}

fn constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

proptest! {
    #[test]
    fn coefficients_match_brute_force((x, y) in prop_oneof![arb_pair(false), arb_pair(true)]) {
        if constant(&x) || constant(&y) {
            prop_assert!(matches!(pearson(&x, &y), Err(StatsError::Degenerate)));
            prop_assert!(matches!(kendall_tau_b(&x, &y), Err(StatsError::Degenerate)));
            return Ok(());
        }
        prop_assert!(close(pearson(&x, &y).unwrap().coefficient, oracle::pearson(&x, &y)));
        prop_assert!(close(spearman(&x, &y).unwrap().coefficient, oracle::spearman(&x, &y)));
        prop_assert!(close(kendall_tau_b(&x, &y).unwrap().coefficient, oracle::kendall_tau_b(&x, &y)));
        let fit = ols_simple(&x, &y).unwrap();
        let (slope, intercept, r2, rmse) = oracle::ols(&x, &y);
        prop_assert!((fit.slope - slope).abs() < 1e-9 * slope.abs().max(1.0));
        prop_assert!((fit.intercept - intercept).abs() < 1e-9 * intercept.abs().max(1.0));
        prop_assert!(close(fit.r2, r2));
        prop_assert!((fit.rmse - rmse).abs() < 1e-9 * rmse.max(1.0));
        let r = pearson(&x, &y).unwrap().coefficient;
        prop_assert!(close(fit.r2, r * r));
    }

    #[test]
    fn p_values_are_probabilities((x, y) in arb_pair(true)) {
        prop_assume!(!constant(&x) && !constant(&y));
        for res in [pearson(&x, &y), spearman(&x, &y), kendall_tau_b(&x, &y)] {
            let res = res.unwrap();
            prop_assert!((0.0..=1.0).contains(&res.p_value));
            prop_assert!((-1.0..=1.0).contains(&res.coefficient));
        }
    }

    #[test]
    fn pearson_is_invariant_to_positive_affine_maps((x, y) in arb_pair(false), a in 0.1f64..10.0, b in -50.0f64..50.0) {
        prop_assume!(!constant(&x) && !constant(&y));
        let r = pearson(&x, &y).unwrap().coefficient;
        let xa: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        prop_assert!((pearson(&xa, &y).unwrap().coefficient - r).abs() < 1e-9);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert!((pearson(&neg, &y).unwrap().coefficient + r).abs() < 1e-9);
    }

    #[test]
    fn rank_statistics_ignore_monotone_maps((x, y) in prop_oneof![arb_pair(false), arb_pair(true)]) {
        prop_assume!(!constant(&x) && !constant(&y));
        let warped: Vec<f64> = x.iter().map(|v| (v / 20.0).exp() + v.powi(3)).collect();
        prop_assert!(close(spearman(&warped, &y).unwrap().coefficient, spearman(&x, &y).unwrap().coefficient));
        prop_assert!(close(kendall_tau_b(&warped, &y).unwrap().coefficient, kendall_tau_b(&x, &y).unwrap().coefficient));
    }

    #[test]
    fn normalize_divides_and_rejects_out_of_range(v in prop::collection::vec(0.0f64..=5.0, 0..20)) {
        let n = normalize(&v, 5.0).unwrap();
        for (a, b) in v.iter().zip(&n) {
            prop_assert!(close(*b, a / 5.0));
        }
        prop_assert!(normalize(&[5.5], 5.0).is_err());
        prop_assert!(normalize(&v, 0.0).is_err());
    }
}

#[test]
fn pearson_p_value_matches_closed_forms() {
    // n = 3 and n = 4 give one and two degrees of freedom.
    let cases: [(&[f64], &[f64]); 4] = [
        (&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]),
        (&[1.0, 2.0, 3.0], &[2.0, 1.0, 7.0]),
        (&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]),
        (&[0.5, 2.0, 3.0, 9.0], &[4.0, 1.0, 2.5, 0.0]),
    ];
    for (x, y) in cases {
        let res = pearson(x, y).unwrap();
        let df = (x.len() - 2) as u32;
        let r = res.coefficient;
        let t = r * (f64::from(df) / (1.0 - r * r)).sqrt();
        let expected = oracle::t_two_sided_p_closed_form(t, df);
        assert!((res.p_value - expected).abs() < 1e-9, "{} vs {}", res.p_value, expected);
    }
}

#[test]
fn zero_expert_pairs_are_dropped() {
    let pairs = PairedSamples {
        ids: vec!["a".into(), "b".into(), "c".into(), "d".into()],
        metric: vec![0.1, 0.2, 0.3, 0.4],
        expert: vec![0.0, 2.0, 0.0, 5.0],
    };
    let (kept, removed) = filter_zero_expert(&pairs);
    assert_eq!(removed, 2);
    assert_eq!(kept.ids, ["b", "d"]);
    assert_eq!(kept.metric, [0.2, 0.4]);
}

#[test]
fn shuffled_metric_is_uncorrelated_on_average() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let n = 200;
    let expert: MetricSeries = MetricSeries {
        name: "expert".into(),
        values: (0..n).map(|i| (format!("r{i:03}"), (i % 6) as f64 / 5.0)).collect(),
    };
    let mut total = 0.0;
    let rounds = 40;
    for _ in 0..rounds {
        let mut vals: Vec<f64> = expert.values.values().copied().collect();
        vals.shuffle(&mut rng);
        let shuffled = MetricSeries {
            name: "shuffled".into(),
            values: expert.values.keys().cloned().zip(vals).collect(),
        };
        let report = compare_metrics(&[shuffled, MetricSeries { name: "same".into(), ..expert.clone() }], &expert).unwrap();
        assert_eq!(report.rows.last().unwrap().metric, "same");
        assert!((report.rows.last().unwrap().r().unwrap() - 1.0).abs() < 1e-12);
        total += report.rows[0].r().unwrap();
    }
    assert!((total / rounds as f64).abs() < 0.05);
}

#[test]
fn misaligned_ids_are_reported() {
    let a = MetricSeries { name: "m".into(), values: [("x".to_string(), 0.1), ("y".to_string(), 0.2)].into() };
    let b = MetricSeries { name: "expert".into(), values: [("x".to_string(), 0.1), ("z".to_string(), 0.2)].into() };
    match a.align(&b) {
        Err(StatsError::Misaligned { missing, unexpected, .. }) => {
            assert_eq!(missing, ["z"]);
            assert_eq!(unexpected, ["y"]);
        }
        other => panic!("unexpected {other:?}"),
    }
}
