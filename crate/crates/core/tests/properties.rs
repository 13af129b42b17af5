use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pignn::gnn::{ActivationVariant, Matrix, Model, ModelOverrides, Propagator};
use pignn::metrics::{self, aggregate, best_of_n, mrr, round_assignment, ResultRow, TieScheme};
use pignn::trainer::{run_portfolio, run_portfolio_sequential};
use pignn::{generate_regular, Graph, QuboInstance, TNorm, TrainConfig, Variant};

fn small_regular() -> impl Strategy<Value = (usize, usize, u64)> {
    (4usize..=10, 2usize..=4, any::<u64>()).prop_filter_map("invalid degree", |(n, d, s)| {
        (d < n && (n * d) % 2 == 0).then_some((n, d, s))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_graphs_are_simple_and_regular((n, d, seed) in small_regular()) {
        let g = generate_regular(n, d, seed).unwrap();
        prop_assert_eq!(g.regular_degree(), Some(d));
        prop_assert_eq!(g.num_edges(), n * d / 2);
        for &(u, v) in g.edges() {
            prop_assert!(u < v);
        }
        let text = g.to_edgelist_string();
        prop_assert_eq!(Graph::read_edgelist(text.as_bytes()).unwrap(), g);
    }

    #[test]
    fn step_outputs_are_binary(x in -50.0f64..50.0) {
        for a in [ActivationVariant::StepSte, ActivationVariant::StepSigmoidBackward] {
            let y = a.forward(x, 1.0);
            prop_assert!(y == 0.0 || y == 1.0);
        }
    }

    #[test]
    fn rounding_is_idempotent(xs in prop::collection::vec(0.0f64..=1.0, 1..40)) {
        let once = round_assignment(&xs).unwrap();
        let back: Vec<f64> = once.iter().map(|&b| b as f64).collect();
        prop_assert_eq!(round_assignment(&back).unwrap(), once);
    }

    #[test]
    fn bon_dominates_avg(xs in prop::collection::vec(-1e3f64..1e3, 1..20)) {
        prop_assert!(best_of_n(&xs).unwrap() >= metrics::avg(&xs).unwrap() - 1e-9);
    }

    #[test]
    fn mrr_ignores_positive_scaling(
        table in prop::collection::vec(prop::collection::vec(0u8..5, 4), 1..6),
        k in 0.1f64..100.0,
    ) {
        let a: Vec<Vec<f64>> = table.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
        let b: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|v| v * k).collect()).collect();
        for scheme in [TieScheme::Competition, TieScheme::BlockAverage] {
            let ra = mrr(&a, scheme).unwrap();
            prop_assert_eq!(&ra, &mrr(&b, scheme).unwrap());
            prop_assert!(ra.iter().all(|&r| r > 0.0 && r <= 1.0));
        }
    }

    #[test]
    fn report_ignores_row_order(values in prop::collection::vec(0u8..20, 24), shuffle_seed in any::<u64>()) {
        let mut rows = Vec::new();
        let mut k = 0;
        for g in 0..2 {
            for v in ["baseline", "bin-ste", "fuzzy-luk"] {
                for s in 0..4 {
                    rows.push(ResultRow {
                        problem: "mis".into(), n: 10, d: 3, graph_id: format!("g{g}"), variant: v.into(), seed: s,
                        objective: values[k] as f64, feasible: values[k] % 3 != 0,
                    });
                    k += 1;
                }
            }
        }
        let before = aggregate(&rows, TieScheme::Competition).unwrap();
        rows.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        prop_assert_eq!(before, aggregate(&rows, TieScheme::Competition).unwrap());
    }
}

#[test]
fn permutation_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..10 {
        let g = generate_regular(8, 3, seed).unwrap();
        let mut perm: Vec<usize> = (0..8).collect();
        perm.shuffle(&mut rng);
        let h = g.permuted(&perm).unwrap();

        let m = Model::init(8, ActivationVariant::Sigmoid, seed, &ModelOverrides::default()).unwrap();
        let mut pm = m.clone();
        let cols = m.embeddings.cols();
        let mut data = vec![0.0; 8 * cols];
        for v in 0..8 {
            data[perm[v] * cols..(perm[v] + 1) * cols].copy_from_slice(m.embeddings.row(v));
        }
        pm.embeddings = Matrix::from_vec(8, cols, data).unwrap();

        let a = m.forward(&Propagator::new(&g), 1.0).unwrap();
        let b = pm.forward(&Propagator::new(&h), 1.0).unwrap();
        for (v, &pv) in perm.iter().enumerate() {
            assert!((a.a_pre[v] - b.a_pre[pv]).abs() < 1e-12);
            assert!((a.a_post[v] - b.a_post[pv]).abs() < 1e-12);
        }
    }
}

#[test]
fn one_tiny_step_barely_moves_the_loss() {
    let g = generate_regular(30, 3, 1).unwrap();
    let q = QuboInstance::encode_maxcut(&g);
    for v in [Variant::Baseline, Variant::TempExp, Variant::FuzzyStd, Variant::FuzzyLuk] {
        let cfg = TrainConfig { lr: 1e-8, max_epochs: 1, es_patience: 1, trace: true, ..Default::default() };
        let r = pignn::train(&g, &q, v, &cfg, 2).unwrap();
        assert_eq!(r.epochs_run, 1);
        assert!((r.relaxed_loss_final - r.trace[0].loss).abs() < 1e-3, "{v}");
    }
}

#[test]
fn early_stopping_bounds() {
    let g = generate_regular(20, 3, 3).unwrap();
    let q = QuboInstance::encode_mis(&g, 2.0).unwrap();
    let cfg = TrainConfig { lr: 1e-2, max_epochs: 2000, es_patience: 100, ..Default::default() };
    for v in Variant::ALL {
        let r = pignn::train(&g, &q, v, &cfg, 0).unwrap();
        assert!(r.epochs_run <= cfg.max_epochs);
        assert!(r.epochs_run >= cfg.es_patience, "{v} stopped after {}", r.epochs_run);
        let x: Vec<f64> = r.assignment.iter().map(|&b| b as f64).collect();
        let h = q.hamiltonian(&x, TNorm::Product).unwrap();
        if r.feasible {
            assert_eq!(-h, r.objective);
        }
    }
}

#[test]
fn parallel_portfolio_matches_sequential() {
    let g = generate_regular(24, 4, 8).unwrap();
    let q = QuboInstance::encode_maxcut(&g);
    let cfg = TrainConfig { lr: 1e-2, max_epochs: 500, es_patience: 50, ..Default::default() };
    let par = run_portfolio(&g, &q, &Variant::ALL, 3, &cfg, 7, "g").unwrap();
    let seq = run_portfolio_sequential(&g, &q, &Variant::ALL, 3, &cfg, 7, "g").unwrap();
    assert_eq!(par.len(), 24);
    assert_eq!(par, seq);
    let single = run_portfolio(&g, &q, &[Variant::BinSig], 1, &cfg, 7, "g").unwrap();
    assert_eq!(single[0].result, pignn::train(&g, &q, Variant::BinSig, &cfg, single[0].seed).unwrap());
}
