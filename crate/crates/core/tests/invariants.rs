use ecoplex_core::cocluster::{assign, embed, fit_gmm_values, kmeans_baseline, GmmOptions, Label};
use ecoplex_core::complexity::{eci_pci_eigen, eci_pci_svd, ScoreOptions};
use ecoplex_core::interpretation::{build_walk, canonical_correlation_check, ncut, Side};
use ecoplex_core::math::{max_abs_diff, mean, pearson, population_sd};
use ecoplex_core::simulate::align_orientation;
use ecoplex_core::specmatrix::{prune, PrunePolicy, SpecializationMatrix};
use ecoplex_core::synth::random_matrix;
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = SpecializationMatrix> {
    (3usize..14, 3usize..20, 0.25f64..0.7, any::<u64>()).prop_filter_map("too small after pruning", |(m, n, d, seed)| {
        let (p, _) = prune(&random_matrix(m, n, d, seed), PrunePolicy::Component).ok()?;
        let s = eci_pci_svd(&p, &ScoreOptions::default()).ok()?;
        (p.n_countries() >= 3 && p.n_products() >= 3 && s.sigma2 < 0.999).then_some(p)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn averaging_identities(m in instance()) {
        let s = eci_pci_svd(&m, &ScoreOptions::default()).unwrap();
        let s2 = s.sigma2 * s.sigma2;
        prop_assert!(max_abs_diff(&m.country_average(&s.pci_raw), &s.eci_raw) < 1e-10);
        let scaled: Vec<f64> = s.pci_raw.iter().map(|p| s2 * p).collect();
        prop_assert!(max_abs_diff(&m.product_average(&s.eci_raw), &scaled) < 1e-10);
        prop_assert!(max_abs_diff(&m.country_average(&s.pci_std), &s.eci_std) < 1e-9);
    }

    #[test]
    fn standardized_moments_and_orientation(m in instance()) {
        let s = eci_pci_svd(&m, &ScoreOptions::default()).unwrap();
        prop_assert!(mean(&s.eci_std).abs() < 1e-10);
        prop_assert!((population_sd(&s.eci_std) - 1.0).abs() < 1e-10);
        let d: Vec<f64> = m.diversity().into_iter().map(|x| x as f64).collect();
        if let Some(c) = pearson(&s.eci_raw, &d) {
            prop_assert!(c >= -1e-12);
        }
    }

    #[test]
    fn routes_agree(m in instance()) {
        let a = eci_pci_svd(&m, &ScoreOptions::default()).unwrap();
        let b = eci_pci_eigen(&m, &ScoreOptions::default()).unwrap();
        prop_assert!(max_abs_diff(&a.eci_raw, &b.eci_raw) < 1e-8);
        prop_assert!(max_abs_diff(&a.pci_raw, &b.pci_raw) < 1e-7);
        prop_assert!((a.sigma2 - b.sigma2).abs() < 1e-10);
    }

    #[test]
    fn walk_blocks_and_edge_correlation(m in instance()) {
        let walk = build_walk(&m).unwrap();
        prop_assert!(walk.stochastic_residual() < 1e-12);
        let r = walk.complementation_residual().unwrap();
        prop_assert!(r.iter().all(|x| *x < 1e-12));
        let s = eci_pci_svd(&m, &ScoreOptions::default()).unwrap();
        prop_assert!((canonical_correlation_check(&m, &s).unwrap() - s.sigma2).abs() < 1e-8);
    }

    #[test]
    fn ncut_is_nonnegative(m in instance(), bits in prop::collection::vec(any::<bool>(), 14)) {
        let labels: Vec<Label> = (0..m.n_countries()).map(|i| if bits[i] { Label::B } else { Label::A }).collect();
        match ncut(&m, Side::Countries, &labels) {
            Ok(v) => prop_assert!((0.0..=2.0 + 1e-12).contains(&v)),
            Err(e) => prop_assert_eq!(e, ecoplex_core::Error::EmptyPartition),
        }
    }

    #[test]
    fn prune_is_idempotent(m in instance()) {
        let (again, report) = prune(&m, PrunePolicy::Strict).unwrap();
        prop_assert_eq!(again, m);
        prop_assert!(report.is_empty());
    }

    #[test]
    fn mixture_fit_properties(xs in prop::collection::vec(-5.0f64..5.0, 8..60)) {
        prop_assume!(population_sd(&xs) > 1e-3);
        if let Ok(model) = fit_gmm_values(&xs, &GmmOptions::default()) {
            for w in model.log_likelihood.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-9);
            }
            for &x in &xs {
                let r = model.responsibilities(x);
                prop_assert!((r[0] + r[1] - 1.0).abs() < 1e-12);
            }
            prop_assert!((model.weights[0] + model.weights[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn labels_follow_threshold(m in instance()) {
        let s = eci_pci_svd(&m, &ScoreOptions::default()).unwrap();
        let z = embed(&m, &s).unwrap();
        if let Ok(model) = ecoplex_core::cocluster::fit_gmm_1d(&z, &GmmOptions::default()) {
            let a = assign(&model, &z);
            for (p, l) in a.prob_b.iter().zip(&a.labels) {
                prop_assert_eq!(*l == Label::B, *p > 0.5);
            }
            let upper = model.upper_component();
            prop_assert_eq!(a.b_component, Some(upper));
        }
        let k = kmeans_baseline(&z).unwrap();
        let min_b = z.values.iter().zip(&k.labels).filter(|(_, l)| **l == Label::B).map(|(v, _)| *v).fold(f64::INFINITY, f64::min);
        let max_a = z.values.iter().zip(&k.labels).filter(|(_, l)| **l == Label::A).map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(max_a <= min_b);
    }

    #[test]
    fn alignment_against_perturbed_instance(m in instance(), pick in any::<prop::sample::Index>()) {
        let base = eci_pci_svd(&m, &ScoreOptions::default()).unwrap();
        let absent: Vec<(usize, usize)> = (0..m.n_countries())
            .flat_map(|c| (0..m.n_products()).map(move |p| (c, p)))
            .filter(|&(c, p)| !m.contains(c, p))
            .collect();
        prop_assume!(!absent.is_empty());
        let (c, p) = absent[pick.index(absent.len())];
        let cf = m.with_entry(c, p).unwrap();
        if let Ok(mut s) = eci_pci_svd(&cf, &ScoreOptions::default()) {
            s.negate();
            let aligned = align_orientation(s, &base).unwrap();
            if let Some(corr) = pearson(&aligned.eci_raw, &base.eci_raw) {
                prop_assert!(corr >= 0.0);
            }
        }
    }
}
