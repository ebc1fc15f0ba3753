//! Worked examples on the small fixtures.

use ecoplex_core::cocluster::{
    assign, best_split, embed, fit_gmm_1d, fit_gmm_values, kmeans_baseline, EntityKind, GmmOptions, JointEmbedding, Label,
};
use ecoplex_core::complexity::{eci_pci_svd, method_of_reflections, ScoreOptions};
use ecoplex_core::math::{max_abs_diff, spearman};
use ecoplex_core::specmatrix::{binarize, compute_rca, prune, PrunePolicy, TradeFlow, TradeFlowTable};
use ecoplex_core::synth::{fixture_f1, fixture_f2, latent_instance};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

#[test]
fn f1_from_trade_values() {
    let mut rows = Vec::new();
    for (c, values) in [("c1", [1.0, 1.0, 0.0]), ("c2", [0.0, 1.0, 1.0])] {
        for (p, v) in ["p1", "p2", "p3"].into_iter().zip(values) {
            rows.push(TradeFlow {
                year: 2000,
                country: c.into(),
                product: p.into(),
                value: v,
            });
        }
    }
    let rca = compute_rca(&TradeFlowTable::new(rows).unwrap(), 2000).unwrap();
    assert_eq!(rca.values, vec![2.0, 1.0, 0.0, 0.0, 1.0, 2.0]);
    assert_eq!(binarize(&rca, 1.0).unwrap(), fixture_f1());
}

#[test]
fn symmetric_five_point_tie_keeps_zero_in_a() {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let values = vec![r, 0.5, 0.0, -0.5, -r];
    // Both splits leave the same within-cluster sum of squares.
    let sse = |lo: &[f64], hi: &[f64]| {
        let f = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
        };
        f(lo) + f(hi)
    };
    assert!((sse(&[-r, -0.5], &[0.0, 0.5, r]) - sse(&[-r, -0.5, 0.0], &[0.5, r])).abs() < 1e-15);
    assert_eq!(best_split(&values), 3);
    let z = JointEmbedding {
        values,
        kinds: vec![EntityKind::Country; 5],
        codes: (1..=5).map(|i| format!("e{i}")).collect(),
        n_countries: 5,
    };
    let a = kmeans_baseline(&z).unwrap();
    assert_eq!(a.labels, vec![Label::B, Label::B, Label::A, Label::A, Label::A]);
}

#[test]
fn single_gaussian_fits_are_reported_not_forced() {
    // One Gaussian has no two-cluster structure; EM still converges, and
    // whether the split looks near-empty depends on the sample.
    let mut flagged = 0;
    for seed in 0..10 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..100).map(|_| normal.sample(&mut rng)).collect();
        let model = fit_gmm_values(
            &xs,
            &GmmOptions {
                max_iter: 100_000,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(model.converged, "seed {seed}");
        if model.weights.iter().any(|w| *w < 0.05) {
            flagged += 1;
        }
    }
    assert!(flagged < 10);
}

#[test]
fn f2_mixture_and_two_means_agree() {
    let f2 = fixture_f2();
    let (m, report) = prune(&f2.matrix, PrunePolicy::Component).unwrap();
    assert!(report.is_empty());
    let s = eci_pci_svd(&m, &ScoreOptions::default()).unwrap();
    let z = embed(&m, &s).unwrap();
    let g = assign(&fit_gmm_1d(&z, &GmmOptions::default()).unwrap(), &z);
    let k = kmeans_baseline(&z).unwrap();
    let agree = g.labels.iter().zip(&k.labels).filter(|(a, b)| a == b).count();
    assert!(agree as f64 >= 0.95 * g.labels.len() as f64);
}

#[test]
fn flipping_scores_only_renames_clusters() {
    let f2 = fixture_f2();
    let (m, _) = prune(&f2.matrix, PrunePolicy::Component).unwrap();
    let s = eci_pci_svd(&m, &ScoreOptions::default()).unwrap();
    let z = embed(&m, &s).unwrap();
    let a = assign(&fit_gmm_1d(&z, &GmmOptions::default()).unwrap(), &z);
    let mut flipped = s.clone();
    flipped.negate();
    let zf = embed(&m, &flipped).unwrap();
    let b = assign(&fit_gmm_1d(&zf, &GmmOptions::default()).unwrap(), &zf);
    for (x, y) in a.labels.iter().zip(&b.labels) {
        assert_ne!(x, y);
    }
}

#[test]
fn reflections_rank_agrees_on_nested_instance() {
    let m = latent_instance(25, 40, 20.0, 0.02, 3);
    let s = eci_pci_svd(&m, &ScoreOptions::default()).unwrap();
    let trace = method_of_reflections(&m, 20, true).unwrap();
    assert!(spearman(&trace.countries[20], &s.eci_raw).unwrap() >= 0.99);
    let plain = method_of_reflections(&m, 2, false).unwrap();
    assert!(max_abs_diff(&plain.countries[0], &m.diversity().iter().map(|d| *d as f64).collect::<Vec<_>>()) == 0.0);
}
