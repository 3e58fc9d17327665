use isorecal_core::diagnostics::{loss_improvement_check, reliability_points};
use isorecal_core::simulate::{check_pointwise_monotone, complexity_curve};
use isorecal_core::{recalibrate, NoiseFamily, SimulationConfig, WeightedSample};
use proptest::prelude::*;

fn samples() -> impl Strategy<Value = Vec<WeightedSample>> {
    prop::collection::vec((-5.0..5.0f64, 0.1..3.0f64, (0..40i32).prop_map(|s| f64::from(s) * 0.5)), 1..120)
        .prop_map(|rows| rows.into_iter().map(|(y, w, s)| WeightedSample::new(y, w, s)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn step_prediction_preserves_rank(raw in samples(), queries in prop::collection::vec(-5.0..25.0f64, 2..50)) {
        let model = recalibrate(&raw).unwrap();
        let mut q = queries;
        q.sort_by(f64::total_cmp);
        let preds: Vec<(f64, usize)> = q.iter().map(|&s| model.predict_step(s)).collect();
        for p in preds.windows(2) {
            prop_assert!(p[0].0 <= p[1].0);
            prop_assert!(p[0].1 <= p[1].1);
            if p[0].1 != p[1].1 {
                prop_assert!(p[0].0 < p[1].0);
            }
        }
        for (&s, &(_, k)) in q.iter().zip(&preds) {
            prop_assert!(k < model.complexity());
            prop_assert!(model.predict_midpoint(s).is_finite());
        }
    }

    #[test]
    fn training_scores_reproduce_the_fit(raw in samples()) {
        let model = recalibrate(&raw).unwrap();
        let fitted = model.fit().fitted_values();
        for (i, &bp) in model.breakpoints().iter().enumerate() {
            let (step, k) = model.predict_step(bp);
            prop_assert_eq!(step, fitted[i]);
            prop_assert_eq!(k, model.fit().block_of(i));
            prop_assert_eq!(model.predict_midpoint(bp), fitted[i]);
        }
        // Equal scores always share a label.
        let scores: Vec<f64> = raw.iter().map(|s| s.score).collect();
        let labels = model.assign_partition(&scores).labels;
        for i in 0..raw.len() {
            for j in 0..raw.len() {
                if scores[i] == scores[j] {
                    prop_assert_eq!(labels[i], labels[j]);
                }
            }
        }
    }

    #[test]
    fn recalibration_never_increases_loss(raw in samples()) {
        let shifted: Vec<WeightedSample> = raw
            .iter()
            .map(|s| WeightedSample::new(s.response.abs() + 0.1, s.weight, s.score + 1.0))
            .collect();
        for data in [&raw, &shifted] {
            let model = recalibrate(data).unwrap();
            let y: Vec<f64> = data.iter().map(|s| s.response).collect();
            let w: Vec<f64> = data.iter().map(|s| s.weight).collect();
            let before: Vec<f64> = data.iter().map(|s| s.score).collect();
            let after: Vec<f64> = before.iter().map(|&s| model.predict_step(s).0).collect();
            let report = loss_improvement_check(&y, &w, &before, &after).unwrap();
            prop_assert!(report.all_non_increasing(), "{report:?}");
        }
    }

    #[test]
    fn corp_fixed_point(raw in samples()) {
        let model = recalibrate(&raw).unwrap();
        let preds: Vec<f64> = raw.iter().map(|s| model.predict_step(s.score).0).collect();
        let y: Vec<f64> = raw.iter().map(|s| s.response).collect();
        let w: Vec<f64> = raw.iter().map(|s| s.weight).collect();
        let points = reliability_points(&preds, &y, &w).unwrap();
        prop_assert_eq!(points.len(), model.complexity());
        for p in points {
            prop_assert!((p.prediction - p.conditional_mean).abs() <= 1e-10 * (1.0 + p.prediction.abs()));
        }
    }
}

#[test]
fn coupled_noise_never_increases_complexity() {
    for noise in [NoiseFamily::StandardGaussian, NoiseFamily::StudentT { df: 2.0 }, NoiseFamily::Uniform] {
        let cfg = SimulationConfig::linear(100, vec![0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0], noise, 200, 11);
        assert_eq!(check_pointwise_monotone(&cfg).unwrap(), 0, "{noise:?}");
    }
}

#[test]
fn weighted_simulation_respects_coupling() {
    let mut cfg = SimulationConfig::linear(50, vec![1.0, 3.0, 9.0], NoiseFamily::StandardGaussian, 100, 5);
    cfg.weights = Some((0..50).map(|i| 0.5 + (i % 3) as f64).collect());
    assert_eq!(check_pointwise_monotone(&cfg).unwrap(), 0);
}

#[test]
fn mean_complexity_falls_with_noise() {
    let cfg = SimulationConfig::linear(100, vec![2.0, 20.0], NoiseFamily::StandardGaussian, 300, 2);
    let curve = complexity_curve(&cfg).unwrap();
    assert!(curve.mean_k[0] > curve.mean_k[1]);
    for row in &curve.k {
        assert!(row.iter().all(|&k| (1..=100).contains(&k)));
    }
}
