mod common;

use lionex::baselines::{gradient_x_input_explain, lime_text_explain, LimeConfig};
use lionex::lionets::{explain, first_order_count, LioNets, NeighbourhoodConfig};
use lionex::neural::{Activation, DenseLayer, MlpModel, Task};
use lionex::numerics::{compute_feature_stats, dot, Mat64};
use lionex::Explainer;

#[test]
fn same_seed_same_explanation() {
    let p = common::toy(7);
    let cfg = NeighbourhoodConfig::default().with_size(800).with_seed(5);
    let x = p.test_x.row(3);
    let (a, hood_a) = explain(&p.predictor, &p.decoder, &p.stats, x, &cfg).unwrap();
    let (b, hood_b) = explain(&p.predictor, &p.decoder, &p.stats, x, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(hood_a, hood_b);
    let (c, _) = explain(&p.predictor, &p.decoder, &p.stats, x, &cfg.clone().with_seed(6)).unwrap();
    assert_ne!(a.importances, c.importances);
}

#[test]
fn neighbourhood_shape() {
    let p = common::toy(7);
    let lio = LioNets::new(
        &p.predictor,
        &p.decoder,
        &p.stats,
        NeighbourhoodConfig::default().with_size(300),
    )
    .unwrap();
    let hood = lio.neighbourhood(p.test_x.row(0)).unwrap();
    assert_eq!((hood.latent.rows(), hood.latent.cols()), (300, 4));
    assert_eq!((hood.decoded.rows(), hood.decoded.cols()), (300, 6));
    assert_eq!(hood.first_order_count, first_order_count(4, 300));
    assert!(hood.weights.iter().all(|w| *w > 0.0));
    assert_eq!(hood.predictions, p.predictor.score_rows(&hood.decoded).unwrap());
}

#[test]
fn surrogate_reconstructs_local_prediction() {
    let p = common::toy(7);
    let lio = LioNets::new(&p.predictor, &p.decoder, &p.stats, NeighbourhoodConfig::default()).unwrap();
    for i in 0..5 {
        let x = p.test_x.row(i);
        let e = lio.explain(x, i as u64).unwrap();
        let s = e.surrogate.unwrap();
        assert!((s.intercept + dot(&e.importances, x) - s.local_prediction).abs() < 1e-12);
        assert!(DEFAULT_GRID.contains(&s.alpha));
        assert_eq!(e.model_prediction, p.predictor.score(x).unwrap());
    }
}

const DEFAULT_GRID: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

/// Decoder and predictor that are exactly linear: the surrogate must recover
/// the predictor's weights.
#[test]
fn linear_pipeline_is_explained_exactly() {
    let w = [0.6, -0.4, 0.25];
    let encoder = DenseLayer::new(
        Mat64::new(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap(),
        vec![0.0; 3],
        Activation::Linear,
    )
    .unwrap();
    let head = DenseLayer::new(Mat64::new(1, 3, w.to_vec()).unwrap(), vec![0.1], Activation::Linear).unwrap();
    let predictor = MlpModel::from_layers(3, Task::Regression, vec![encoder.clone(), head]).unwrap();
    let decoder = MlpModel::from_layers(3, Task::Reconstruction, vec![encoder]).unwrap();
    let sample = Mat64::from_rows(&[[0.0, 0.0, 0.0], [1.0, 2.0, -1.0], [-1.0, 0.5, 1.0], [0.3, -1.0, 0.2]]).unwrap();
    let stats = compute_feature_stats(&sample).unwrap();
    let mut cfg = NeighbourhoodConfig::default().with_size(500);
    cfg.alpha_grid = vec![0.0];
    let lio = LioNets::new(&predictor, &decoder, &stats, cfg).unwrap();
    let e = lio.explain(&[0.2, 0.1, -0.3], 1).unwrap();
    for (got, want) in e.importances.iter().zip(w) {
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }
    assert!(e.surrogate.unwrap().fidelity_mae < 1e-6);
}

#[test]
fn lime_ignores_absent_words() {
    let tx = common::text(7);
    let p = &tx.pipeline;
    let x = p.test_x.row(0);
    let e = lime_text_explain(
        &p.predictor,
        x,
        &LimeConfig {
            num_samples: 1000,
            ..LimeConfig::default()
        },
    )
    .unwrap();
    for (v, i) in x.iter().zip(&e.importances) {
        if *v == 0.0 {
            assert_eq!(*i, 0.0);
        }
    }
    assert!(e.nonzero_count() > 0);
}

#[test]
fn gradient_times_input_vanishes_on_absent_features() {
    let tx = common::text(7);
    let p = &tx.pipeline;
    let x = p.test_x.row(1);
    let e = gradient_x_input_explain(&p.predictor, x, 0).unwrap();
    assert!(e.surrogate.is_none());
    assert_eq!(e.nonzero_count(), x.iter().filter(|v| **v != 0.0).count());
}
