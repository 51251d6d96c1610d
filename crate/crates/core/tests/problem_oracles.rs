mod common;

use std::sync::Arc;

use asbox::data_io::{parse_libsvm, synthetic_classification, to_libsvm_string, SparseDataset};
use asbox::geometry::Bounds;
use asbox::problems::{
    logistic_component, nn_component, FiniteSum, LogisticRegression, NeuralNetwork, NnArchitecture, QuadraticSpec,
    QuadraticSuite,
};
use asbox::rng::{stream_rng, Stream};
use asbox::sampling::{minibatch_value, minibatch_value_grad, IndexSampler, SamplePlan};
use common::{fd_gradient, quadratic_minimizer, rel_error};
use proptest::prelude::*;
use rand::Rng;

fn dataset(rows: Vec<Vec<f64>>, labels: Vec<f64>) -> Arc<SparseDataset> {
    let n = rows[0].len();
    let sparse = rows
        .into_iter()
        .map(|r| r.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect())
        .collect();
    Arc::new(SparseDataset::from_rows(sparse, labels, n).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn logistic_gradient_matches_finite_differences(
        rows in prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 1..=5), 1..4)
            .prop_filter("equal rows", |r| r.iter().all(|v| v.len() == r[0].len())),
        signs in prop::collection::vec(prop::bool::ANY, 4),
        x in prop::collection::vec(-1.0..1.0f64, 5),
    ) {
        let labels: Vec<f64> = signs[..rows.len()].iter().map(|&s| if s { 1.0 } else { -1.0 }).collect();
        let n = rows[0].len();
        let p = LogisticRegression::with_unit_box(dataset(rows.clone(), labels)).unwrap();
        let x = &x[..n];
        for i in 0..rows.len() {
            let (_, g) = logistic_component(&p, i, x).unwrap();
            let fd = fd_gradient(|y| p.component_value(i, y), x, 1e-6);
            prop_assert!(rel_error(&g, &fd) <= 1e-6, "{:?} vs {:?}", g, fd);
        }
    }

    #[test]
    fn logistic_value_decreases_with_margin(a in -30.0..30.0f64, b in -30.0..30.0f64) {
        let p = LogisticRegression::with_unit_box(dataset(vec![vec![1.0]], vec![1.0])).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        // margin = x here; x is not constrained by the oracle itself
        prop_assert!(p.component_value(0, &[hi]) <= p.component_value(0, &[lo]));
    }

    #[test]
    fn nn_gradient_matches_finite_differences(
        input in 1usize..4,
        hidden in 1usize..5,
        seed in 0u64..1000,
    ) {
        let arch = NnArchitecture::new(input, hidden);
        prop_assume!(arch.num_params() <= 30);
        let mut rng = stream_rng(seed, Stream::Tuning);
        let rows: Vec<Vec<f64>> = (0..3).map(|_| (0..input).map(|_| rng.random_range(-1.5..1.5)).collect()).collect();
        let labels = vec![1.0, -1.0, 1.0];
        let net = NeuralNetwork::with_unit_box(dataset(rows, labels), hidden).unwrap();
        let params: Vec<f64> = (0..arch.num_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
        for i in 0..3 {
            let (_, g) = nn_component(i, &params, &arch, net.data()).unwrap();
            let fd = fd_gradient(|y| net.component_value(i, y), &params, 1e-6);
            prop_assert!(rel_error(&g, &fd) <= 1e-5, "{:?} vs {:?}", g, fd);
        }
    }

    #[test]
    fn full_plan_is_the_weighted_sum(masses in prop::collection::vec(0.01..1.0f64, 2..6), seed in 0u64..100) {
        let spec = QuadraticSpec { dim: 3, components: masses.len(), weights: Some(masses), seed, ..Default::default() };
        let q = QuadraticSuite::generate(&spec).unwrap();
        let x = [0.3, -0.2, 0.9];
        let direct: f64 = (0..q.num_components()).map(|i| q.weights().as_slice()[i] * q.component_value(i, &x)).sum();
        let via_plan = minibatch_value(&q, &SamplePlan::Full { components: q.num_components() }, &x).unwrap();
        prop_assert!((direct - via_plan).abs() <= 1e-12 * direct.abs().max(1e-300));
    }
}

#[test]
fn minibatch_gradient_is_unbiased() {
    let spec = QuadraticSpec {
        dim: 4,
        components: 5,
        heterogeneity: 1.0,
        weights: Some(vec![0.1, 0.4, 0.2, 0.2, 0.1]),
        ..Default::default()
    };
    let q = QuadraticSuite::generate(&spec).unwrap();
    let x = [0.1, -0.3, 0.5, 0.0];
    let (_, full) = minibatch_value_grad(&q, &SamplePlan::Full { components: 5 }, &x).unwrap();
    let sampler = IndexSampler::new(q.weights()).unwrap();
    let mut rng = stream_rng(11, Stream::Batch);
    let trials = 200_000;
    let mut mean = [0.0; 4];
    let mut sq = [0.0; 4];
    for _ in 0..trials {
        let plan = sampler.draw(3, &mut rng).unwrap();
        let (_, g) = minibatch_value_grad(&q, &plan, &x).unwrap();
        for j in 0..4 {
            mean[j] += g[j];
            sq[j] += g[j] * g[j];
        }
    }
    for j in 0..4 {
        let m = mean[j] / trials as f64;
        let var = sq[j] / trials as f64 - m * m;
        let se = (var / trials as f64).sqrt();
        assert!((m - full[j]).abs() <= 5.0 * se + 1e-12, "coord {j}: {m} vs {}", full[j]);
    }
}

#[test]
fn identical_components_unconstrained_minimizer_is_the_center() {
    let q = QuadraticSuite::generate(&QuadraticSpec {
        heterogeneity: 0.0,
        dim: 5,
        ..Default::default()
    })
    .unwrap();
    let m = q.center(0).to_vec();
    let q = q.with_bounds(Bounds::unbounded(5)).unwrap();
    let x = quadratic_minimizer(&q);
    for (a, b) in x.iter().zip(&m) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn quadratic_reference_matches_kkt_oracle() {
    for seed in 0..3 {
        let q = QuadraticSuite::generate(&QuadraticSpec {
            seed,
            center_spread: 2.5,
            ..Default::default()
        })
        .unwrap();
        let exact = quadratic_minimizer(&q);
        let r = asbox::harness::reference_solution(&q, &[0.0; 10], 1e-10, 200_000).unwrap();
        let err = exact.iter().zip(&r.x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1e-8, "seed {seed}: {err:e}");
    }
}

#[test]
fn separable_logistic_reference_lands_on_the_face() {
    let p = LogisticRegression::with_unit_box(dataset(vec![vec![1.0]], vec![1.0])).unwrap();
    let r = asbox::harness::reference_solution(&p, &[0.0], 1e-10, 1000).unwrap();
    assert_eq!(r.x, vec![1.0]);
    assert!(r.stationarity <= 1e-10);
}

#[test]
fn libsvm_round_trip_on_synthetic_file() {
    let text = "1 1:0.5 3:-2\n-1 2:1e-3\n1 1:1 2:2 3:3\n-1 4:0.25\n1 2:-0.5 4:7\n";
    let a = parse_libsvm(text.as_bytes()).unwrap();
    let b = parse_libsvm(to_libsvm_string(&a).as_bytes()).unwrap();
    assert_eq!(a.len(), 5);
    assert_eq!(a.n_features(), b.n_features());
    assert_eq!(a.labels(), b.labels());
    for i in 0..a.len() {
        assert_eq!(a.row(i), b.row(i));
    }
}

#[test]
fn synthetic_dataset_shape() {
    let d = synthetic_classification(200, 7, 0.1, 1.0, 3).unwrap();
    assert_eq!((d.len(), d.n_features()), (200, 7));
    assert!(d.labels().iter().all(|&b| b == 1.0 || b == -1.0));
}
