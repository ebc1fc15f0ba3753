//! ECI and PCI by three routes: the second singular triple of `M_sym`, the
//! second eigenvectors of the random-walk similarity matrices, and the
//! Method of Reflections.
//!
//! Raw scores follow `eci = D^-1/2 u₂` and `pci = σ₂⁻¹ U^-1/2 v₂`, which
//! makes `eci = D⁻¹ M pci` and `U⁻¹ Mᵀ eci = σ₂² pci` hold exactly.
//! Standardized PCI reuses the mean and standard deviation of the raw ECI.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{normalize_sym, symmetric_eigen, truncated_svd, DenseMatrix, SvdOptions, SvdWarning};
use crate::math::{mean, pearson, population_sd, sqrt};
use crate::specmatrix::SpecializationMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    #[default]
    Svd,
    Eigen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationRule {
    /// Sign chosen so that `corr(eci_raw, diversity) >= 0`.
    DiversityCorrelation,
    /// Correlation was zero: first non-zero ECI component made positive.
    FirstComponent,
    /// Aligned to a reference score vector (counterfactual runs).
    Baseline,
    /// Baseline correlation was zero; fell back to the diversity rule.
    BaselineFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub rule: OrientationRule,
    /// Whether the last orientation step negated the vectors.
    pub flipped: bool,
    /// Correlation the rule was evaluated on, when defined.
    pub correlation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub route: Route,
    pub iterations: usize,
    pub residual: f64,
    pub warnings: Vec<SvdWarning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityScores {
    pub eci_raw: Vec<f64>,
    pub pci_raw: Vec<f64>,
    pub eci_std: Vec<f64>,
    pub pci_std: Vec<f64>,
    pub sigma2: f64,
    pub lambda2: f64,
    pub orientation: Orientation,
    pub diagnostics: SolverDiagnostics,
}

impl ComplexityScores {
    /// Negates ECI and PCI together (raw and standardized).
    pub fn negate(&mut self) {
        for v in [&mut self.eci_raw, &mut self.pci_raw, &mut self.eci_std, &mut self.pci_std] {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreOptions {
    pub svd: SvdOptions,
    /// σ₂ within this distance of 1, or σ₂² below it, is treated as degenerate.
    pub degeneracy_tol: f64,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            svd: SvdOptions::default(),
            degeneracy_tol: 1e-9,
        }
    }
}

pub fn compute_scores(m: &SpecializationMatrix, route: Route, opts: &ScoreOptions) -> Result<ComplexityScores> {
    match route {
        Route::Svd => eci_pci_svd(m, opts),
        Route::Eigen => eci_pci_eigen(m, opts),
    }
}

fn check_shape(m: &SpecializationMatrix) -> Result<()> {
    if m.n_countries() < 2 || m.n_products() < 2 {
        return Err(Error::Contract(format!(
            "need at least 2 countries and 2 products, got {}x{}",
            m.n_countries(),
            m.n_products()
        )));
    }
    Ok(())
}

fn check_sigma(sigma2: f64, tol: f64) -> Result<()> {
    if (1.0 - sigma2).abs() <= tol || sigma2 * sigma2 <= tol {
        return Err(Error::DegenerateSpectrum { sigma2 });
    }
    Ok(())
}

fn raw_scores(eci: Vec<f64>, pci: Vec<f64>, sigma2: f64, lambda2: f64, diagnostics: SolverDiagnostics) -> ComplexityScores {
    ComplexityScores {
        eci_std: vec![0.0; eci.len()],
        pci_std: vec![0.0; pci.len()],
        eci_raw: eci,
        pci_raw: pci,
        sigma2,
        lambda2,
        orientation: Orientation {
            rule: OrientationRule::DiversityCorrelation,
            flipped: false,
            correlation: None,
        },
        diagnostics,
    }
}

/// SVD route: second singular triple of `D^-1/2 M U^-1/2`.
pub fn eci_pci_svd(m: &SpecializationMatrix, opts: &ScoreOptions) -> Result<ComplexityScores> {
    check_shape(m)?;
    let a = normalize_sym(m)?;
    let svd = truncated_svd(&a, 2, &opts.svd)?;
    let second = &svd.pairs[1];
    let sigma2 = second.sigma;
    check_sigma(sigma2, opts.degeneracy_tol)?;
    let eci: Vec<f64> = second.left.iter().zip(a.diversity()).map(|(u, d)| u / sqrt(*d)).collect();
    let pci: Vec<f64> = second
        .right
        .iter()
        .zip(a.ubiquity())
        .map(|(v, w)| v / (sqrt(*w) * sigma2))
        .collect();
    let diagnostics = SolverDiagnostics {
        route: Route::Svd,
        iterations: svd.iterations,
        residual: svd.residuals[1],
        warnings: svd.warnings,
    };
    let scores = raw_scores(eci, pci, sigma2, second.lambda(), diagnostics);
    standardize(&orient_sign(scores, m))
}

/// `S_c^rw = D⁻¹ M U⁻¹ Mᵀ`, dense `m × m`.
pub fn country_transition(m: &SpecializationMatrix) -> DenseMatrix {
    let k = m.n_countries();
    let mut s = DenseMatrix::zeros(k, k);
    for p in 0..m.n_products() {
        let col = m.col(p);
        let w = 1.0 / col.len() as f64;
        for &c in col {
            for &c2 in col {
                s.set(c, c2, s.get(c, c2) + w);
            }
        }
    }
    for (c, d) in m.diversity().into_iter().enumerate() {
        for c2 in 0..k {
            s.set(c, c2, s.get(c, c2) / d as f64);
        }
    }
    s
}

/// `S_p^rw = U⁻¹ Mᵀ D⁻¹ M`, dense `n × n`.
pub fn product_transition(m: &SpecializationMatrix) -> DenseMatrix {
    let k = m.n_products();
    let mut s = DenseMatrix::zeros(k, k);
    for c in 0..m.n_countries() {
        let row = m.row(c);
        let w = 1.0 / row.len() as f64;
        for &p in row {
            for &p2 in row {
                s.set(p, p2, s.get(p, p2) + w);
            }
        }
    }
    for (p, u) in m.ubiquity().into_iter().enumerate() {
        for p2 in 0..k {
            s.set(p, p2, s.get(p, p2) / u as f64);
        }
    }
    s
}

/// Second eigenpair of a random-walk matrix `W⁻¹ S` via its symmetric
/// similarity transform `W^1/2 (W⁻¹ S) W^-1/2`. Returns `(μ₂, x)` with `x`
/// scaled so that `xᵀ W x = 1`, plus the eigen-residual of `x`.
fn second_rw_eigenvector(transition: &DenseMatrix, weights: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
    let k = weights.len();
    let root: Vec<f64> = weights.iter().map(|w| sqrt(*w)).collect();
    let mut sym = DenseMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            sym.set(i, j, root[i] * transition.get(i, j) / root[j]);
        }
    }
    let eig = symmetric_eigen(&sym)?;
    let mu = eig.values[1];
    let x: Vec<f64> = eig.vector(1).iter().zip(&root).map(|(v, r)| v / r).collect();
    let sx = transition.mul_vec(&x);
    let residual = sx.iter().zip(&x).map(|(a, b)| (a - mu * b).abs()).fold(0.0, f64::max);
    Ok((mu, x, residual))
}

/// Eigen route: second eigenvectors of `S_c^rw` and `S_p^rw`, with the
/// product vector rescaled by `σ₂⁻¹` and signed consistently with the
/// country vector.
pub fn eci_pci_eigen(m: &SpecializationMatrix, opts: &ScoreOptions) -> Result<ComplexityScores> {
    check_shape(m)?;
    // Same positivity contract as the SVD route.
    normalize_sym(m)?;
    let diversity: Vec<f64> = m.diversity().into_iter().map(|d| d as f64).collect();
    let ubiquity: Vec<f64> = m.ubiquity().into_iter().map(|u| u as f64).collect();

    let (mu_c, eci, res_c) = second_rw_eigenvector(&country_transition(m), &diversity)?;
    let sigma2 = sqrt(mu_c.max(0.0));
    check_sigma(sigma2, opts.degeneracy_tol)?;
    let (_, scaled_pci, res_p) = second_rw_eigenvector(&product_transition(m), &ubiquity)?;
    let mut pci: Vec<f64> = scaled_pci.iter().map(|x| x / sigma2).collect();
    let coupling: f64 = m.product_average(&eci).iter().zip(&pci).map(|(a, b)| a * b).sum();
    if coupling < 0.0 {
        pci.iter_mut().for_each(|x| *x = -*x);
    }
    let diagnostics = SolverDiagnostics {
        route: Route::Eigen,
        iterations: 0,
        residual: res_c.max(res_p),
        warnings: Vec::new(),
    };
    let scores = raw_scores(eci, pci, sigma2, 1.0 - mu_c, diagnostics);
    standardize(&orient_sign(scores, m))
}

/// Orients ECI and PCI jointly so that ECI correlates non-negatively with
/// diversity. When that correlation is zero (or undefined, e.g. equal
/// diversities) the first non-zero ECI component is made positive.
pub fn orient_sign(mut scores: ComplexityScores, m: &SpecializationMatrix) -> ComplexityScores {
    let diversity: Vec<f64> = m.diversity().into_iter().map(|d| d as f64).collect();
    let corr = pearson(&scores.eci_raw, &diversity);
    let flip = match corr {
        Some(c) if c.abs() > 1e-12 => {
            scores.orientation.rule = OrientationRule::DiversityCorrelation;
            c < 0.0
        }
        _ => {
            scores.orientation.rule = OrientationRule::FirstComponent;
            first_nonzero_negative(&scores.eci_raw)
        }
    };
    scores.orientation.correlation = corr;
    scores.orientation.flipped = flip;
    if flip {
        scores.negate();
        scores.orientation.correlation = corr.map(|c| -c);
    }
    scores
}

pub(crate) fn first_nonzero_negative(v: &[f64]) -> bool {
    let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    v.iter().find(|x| x.abs() > 1e-12 * scale.max(1e-300)).is_some_and(|x| *x < 0.0)
}

/// Fills `eci_std = (eci - mean)/sd` and `pci_std = (pci - mean_eci)/sd_eci`
/// using the population standard deviation.
pub fn standardize(scores: &ComplexityScores) -> Result<ComplexityScores> {
    let mu = mean(&scores.eci_raw);
    let sd = population_sd(&scores.eci_raw);
    if !(sd > 1e-300) {
        return Err(Error::ZeroVariance("eci_raw"));
    }
    let mut out = scores.clone();
    out.eci_std = scores.eci_raw.iter().map(|x| (x - mu) / sd).collect();
    out.pci_std = scores.pci_raw.iter().map(|x| (x - mu) / sd).collect();
    Ok(out)
}

/// Per-iteration country and product vectors of the Method of Reflections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionsTrace {
    /// `countries[N]` is `k_c,N`; index 0 is diversity.
    pub countries: Vec<Vec<f64>>,
    /// `products[N]` is `k_p,N`; index 0 is ubiquity.
    pub products: Vec<Vec<f64>>,
    pub renormalized: bool,
}

impl ReflectionsTrace {
    pub fn iterations(&self) -> usize {
        self.countries.len() - 1
    }
}

/// `k_c,N = D⁻¹ M k_p,N-1` and `k_p,N = U⁻¹ Mᵀ k_c,N-1`, starting from
/// diversity and ubiquity. With `renormalize`, every iterate after the
/// zeroth is centered and scaled to unit population sd, which keeps it from
/// collapsing onto the constant vector.
pub fn method_of_reflections(m: &SpecializationMatrix, n_iter: usize, renormalize: bool) -> Result<ReflectionsTrace> {
    if n_iter == 0 {
        return Err(Error::InvalidParameter("method of reflections needs n_iter >= 1".into()));
    }
    normalize_sym(m)?;
    let mut countries = vec![m.diversity().into_iter().map(|d| d as f64).collect::<Vec<_>>()];
    let mut products = vec![m.ubiquity().into_iter().map(|u| u as f64).collect::<Vec<_>>()];
    for _ in 0..n_iter {
        let prev_c = countries.last().expect("non-empty");
        let prev_p = products.last().expect("non-empty");
        let mut next_c = m.country_average(prev_p);
        let mut next_p = m.product_average(prev_c);
        if renormalize {
            center_scale(&mut next_c);
            center_scale(&mut next_p);
        }
        countries.push(next_c);
        products.push(next_p);
    }
    Ok(ReflectionsTrace {
        countries,
        products,
        renormalized: renormalize,
    })
}

fn center_scale(v: &mut [f64]) {
    let mu = mean(v);
    let sd = population_sd(v);
    for x in v.iter_mut() {
        *x -= mu;
        if sd > 1e-300 {
            *x /= sd;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::max_abs_diff;
    use crate::synth::fixture_f1;

    #[test]
    fn f1_svd_route() {
        let s = eci_pci_svd(&fixture_f1(), &ScoreOptions::default()).unwrap();
        assert!((s.sigma2 - 1.0 / sqrt(2.0)).abs() < 1e-10);
        assert!((s.lambda2 - 0.5).abs() < 1e-10);
        assert!(max_abs_diff(&s.eci_raw, &[0.5, -0.5]) < 1e-10);
        assert!(max_abs_diff(&s.pci_raw, &[1.0, 0.0, -1.0]) < 1e-10);
        assert!(max_abs_diff(&s.eci_std, &[1.0, -1.0]) < 1e-10);
        assert!(max_abs_diff(&s.pci_std, &[2.0, 0.0, -2.0]) < 1e-10);
        assert_eq!(s.orientation.rule, OrientationRule::FirstComponent);
    }

    #[test]
    fn f1_eigen_route_matches() {
        let s = eci_pci_svd(&fixture_f1(), &ScoreOptions::default()).unwrap();
        let e = eci_pci_eigen(&fixture_f1(), &ScoreOptions::default()).unwrap();
        assert!(max_abs_diff(&s.eci_raw, &e.eci_raw) < 1e-10);
        assert!(max_abs_diff(&s.pci_raw, &e.pci_raw) < 1e-10);
        assert!((s.lambda2 - e.lambda2).abs() < 1e-10);
    }

    #[test]
    fn rank_one_matrix_is_degenerate() {
        let ones = SpecializationMatrix::from_rows(&[vec![1, 1, 1], vec![1, 1, 1]]).unwrap();
        for route in [Route::Svd, Route::Eigen] {
            match compute_scores(&ones, route, &ScoreOptions::default()) {
                Err(Error::DegenerateSpectrum { sigma2 }) => assert!(sigma2 * sigma2 < 1e-9),
                other => panic!("{route:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn disconnected_matrix_is_degenerate() {
        let m = SpecializationMatrix::from_rows(&[vec![1, 1, 0], vec![1, 1, 0], vec![0, 0, 1]]).unwrap();
        assert!(matches!(
            eci_pci_svd(&m, &ScoreOptions::default()),
            Err(Error::DegenerateSpectrum { .. })
        ));
    }

    #[test]
    fn orientation_flips_negative_correlation() {
        let m = SpecializationMatrix::from_rows(&[vec![1, 1, 1], vec![0, 1, 1], vec![0, 0, 1]]).unwrap();
        let mut s = eci_pci_svd(&m, &ScoreOptions::default()).unwrap();
        let original = s.clone();
        s.negate();
        let again = orient_sign(s, &m);
        assert!(again.orientation.flipped);
        assert_eq!(again.eci_raw, original.eci_raw);
        assert_eq!(again.pci_raw, original.pci_raw);
    }

    #[test]
    fn orientation_is_idempotent() {
        let m = crate::synth::random_connected(12, 18, 0.35, 9);
        let s = eci_pci_svd(&m, &ScoreOptions::default()).unwrap();
        let twice = orient_sign(orient_sign(s.clone(), &m), &m);
        assert_eq!(twice.eci_raw, s.eci_raw);
        assert!(!twice.orientation.flipped);
    }

    #[test]
    fn standardize_rejects_zero_variance() {
        let mut s = eci_pci_svd(&fixture_f1(), &ScoreOptions::default()).unwrap();
        s.eci_raw = vec![0.3, 0.3];
        assert_eq!(standardize(&s).unwrap_err(), Error::ZeroVariance("eci_raw"));
    }

    #[test]
    fn reflections_start_and_first_step() {
        let trace = method_of_reflections(&fixture_f1(), 1, false).unwrap();
        assert_eq!(trace.countries[0], vec![2.0, 2.0]);
        assert_eq!(trace.products[0], vec![1.0, 2.0, 1.0]);
        assert_eq!(trace.countries[1], vec![1.5, 1.5]);
        assert_eq!(trace.iterations(), 1);
        assert!(method_of_reflections(&fixture_f1(), 0, true).is_err());
    }

    #[test]
    fn transitions_of_f1() {
        let s = country_transition(&fixture_f1());
        assert!(max_abs_diff(s.as_slice(), &[0.75, 0.25, 0.25, 0.75]) < 1e-15);
        let p = product_transition(&fixture_f1());
        for r in p.row_sums() {
            assert!((r - 1.0).abs() < 1e-15);
        }
    }
}
