use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{symmetric_eigen, CsrMatrix, DenseMatrix};
use crate::error::{Error, Result};
use crate::math::{dot, norm, sqrt, SplitMix64};
use crate::specmatrix::SpecializationMatrix;

/// `M_sym = D^-1/2 M U^-1/2` together with the weights it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMatrix {
    matrix: CsrMatrix,
    diversity: Vec<f64>,
    ubiquity: Vec<f64>,
}

/// Symmetric normalization. Every row and column must be non-empty.
pub fn normalize_sym(m: &SpecializationMatrix) -> Result<NormalizedMatrix> {
    let diversity: Vec<f64> = m.diversity().into_iter().map(|d| d as f64).collect();
    let ubiquity: Vec<f64> = m.ubiquity().into_iter().map(|u| u as f64).collect();
    if let Some(c) = diversity.iter().position(|&d| d == 0.0) {
        return Err(Error::Contract(format!(
            "country {} has zero diversity; prune the matrix first",
            m.countries()[c]
        )));
    }
    if let Some(p) = ubiquity.iter().position(|&u| u == 0.0) {
        return Err(Error::Contract(format!(
            "product {} has zero ubiquity; prune the matrix first",
            m.products()[p]
        )));
    }
    let triplets: Vec<_> = m
        .entries()
        .map(|(c, p)| (c, p, 1.0 / sqrt(diversity[c] * ubiquity[p])))
        .collect();
    Ok(NormalizedMatrix {
        matrix: CsrMatrix::from_sorted_triplets(m.n_countries(), m.n_products(), &triplets),
        diversity,
        ubiquity,
    })
}

impl NormalizedMatrix {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.matrix.rows(), self.matrix.cols())
    }

    pub fn diversity(&self) -> &[f64] {
        &self.diversity
    }

    pub fn ubiquity(&self) -> &[f64] {
        &self.ubiquity
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.matrix.to_dense()
    }

    /// Analytic leading pair `(D^1/2 1, U^1/2 1)`, both unit-normalized.
    pub fn leading_pair(&self) -> (Vec<f64>, Vec<f64>) {
        (unit_sqrt(&self.diversity), unit_sqrt(&self.ubiquity))
    }
}

fn unit_sqrt(w: &[f64]) -> Vec<f64> {
    let v: Vec<f64> = w.iter().map(|x| sqrt(*x)).collect();
    let nrm = norm(&v);
    v.into_iter().map(|x| x / nrm).collect()
}

/// One singular triple `(u, v, σ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPair {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub sigma: f64,
}

impl SpectralPair {
    /// Random-walk Laplacian eigenvalue `1 - σ²`.
    pub fn lambda(&self) -> f64 {
        1.0 - self.sigma * self.sigma
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Optional country-side start vector (e.g. a previous `u₂`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warm_start: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            warm_start: None,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SvdWarning {
    /// `σ_k - σ_{k+1}` fell below 1e-12; the k-th vector is not well defined.
    SpectralGapStagnation { index: usize, gap: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSvd {
    pub pairs: Vec<SpectralPair>,
    pub iterations: usize,
    /// `‖A v - σ u‖` per returned pair.
    pub residuals: Vec<f64>,
    pub warnings: Vec<SvdWarning>,
}

/// Which side the Gram operator lives on.
struct Gram<'a> {
    a: &'a CsrMatrix,
    countries: bool,
}

impl Gram<'_> {
    fn dim(&self) -> usize {
        if self.countries {
            self.a.rows()
        } else {
            self.a.cols()
        }
    }

    fn other_dim(&self) -> usize {
        if self.countries {
            self.a.cols()
        } else {
            self.a.rows()
        }
    }

    /// Maps a working-side vector to the other side (`Aᵀx` or `Ax`).
    fn cross(&self, x: &[f64]) -> Vec<f64> {
        if self.countries {
            self.a.mul_t_vec(x)
        } else {
            self.a.mul_vec(x)
        }
    }

    fn apply(&self, x: &[f64], tmp: &mut [f64], out: &mut [f64]) {
        if self.countries {
            self.a.mul_t_vec_into(x, tmp);
            self.a.mul_vec_into(tmp, out);
        } else {
            self.a.mul_vec_into(x, tmp);
            self.a.mul_t_vec_into(tmp, out);
        }
    }
}

/// Top-`k` singular triples of `M_sym`.
///
/// The leading pair is analytic (`σ₁ = 1` for any matrix with positive
/// weights) and is used as a deflation seed. The remaining `k - 1` triples
/// come from orthogonal (subspace) iteration on `M_sym M_symᵀ` or
/// `M_symᵀ M_sym`, whichever is smaller, applied implicitly with two sparse
/// products per step and a Rayleigh–Ritz projection. Converged when every
/// returned pair has `‖A v - σ u‖ < tol`.
pub fn truncated_svd(a: &NormalizedMatrix, k: usize, opts: &SvdOptions) -> Result<TruncatedSvd> {
    let (m, n) = a.shape();
    if k == 0 || k > m.min(n) {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must be in 1..={} for a {m}x{n} matrix",
            m.min(n)
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let gram = Gram {
        a: &a.matrix,
        countries: m <= n,
    };
    let (u1, v1) = a.leading_pair();
    let av1 = a.matrix.mul_vec(&v1);
    let sigma1 = norm(&av1);
    let lead_residual = norm(&av1.iter().zip(&u1).map(|(x, y)| x - sigma1 * y).collect::<Vec<_>>());
    let seed = if gram.countries { u1.clone() } else { v1.clone() };
    let mut out = TruncatedSvd {
        pairs: vec![SpectralPair {
            left: u1,
            right: v1,
            sigma: sigma1,
        }],
        iterations: 0,
        residuals: vec![lead_residual],
        warnings: Vec::new(),
    };
    if k == 1 {
        return Ok(out);
    }

    let dim = gram.dim();
    let rest = k - 1;
    let block = (2 * rest + 6).min(dim - 1);
    let mut rng = SplitMix64::new(opts.seed);

    let mut start: Vec<Vec<f64>> = Vec::with_capacity(block);
    if let Some(w) = &opts.warm_start {
        if w.len() != m {
            return Err(Error::Contract(format!("warm start has length {} instead of {m}", w.len())));
        }
        start.push(if gram.countries { w.clone() } else { a.matrix.mul_t_vec(w) });
    }
    while start.len() < block {
        start.push((0..dim).map(|_| rng.next_signed()).collect());
    }
    let mut q = orthonormalize(start, &seed, &mut rng);

    let mut tmp = vec![0.0; gram.other_dim()];
    let mut worst = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(block);
        for qj in &q {
            let mut zj = vec![0.0; dim];
            gram.apply(qj, &mut tmp, &mut zj);
            project_out(&mut zj, &seed);
            z.push(zj);
        }
        let mut h = DenseMatrix::zeros(block, block);
        for i in 0..block {
            for j in 0..=i {
                let v = 0.5 * (dot(&q[i], &z[j]) + dot(&q[j], &z[i]));
                h.set(i, j, v);
                h.set(j, i, v);
            }
        }
        let eig = symmetric_eigen(&h)?;
        let ritz = combine(&q, &eig.vectors);
        let image = combine(&z, &eig.vectors);

        worst = 0.0;
        let mut residuals = Vec::with_capacity(rest);
        for i in 0..rest {
            let theta = eig.values[i].max(0.0);
            let r: Vec<f64> = image[i].iter().zip(&ritz[i]).map(|(b, x)| b - theta * x).collect();
            let res = norm(&r) / sqrt(theta).max(1e-3);
            worst = worst.max(res);
            residuals.push(res);
        }
        if worst < opts.tol {
            out.iterations = iter;
            for i in 0..rest {
                let x = normalized(&ritz[i]);
                let mut y = gram.cross(&x);
                let ynorm = norm(&y);
                // Taking σ = ‖A x‖ makes the cross relation exact.
                let sigma = if ynorm > 1e-12 { ynorm } else { sqrt(eig.values[i].max(0.0)) };
                if sigma > 1e-12 && ynorm > 0.0 {
                    y.iter_mut().for_each(|v| *v /= ynorm);
                } else {
                    let mut basis: Vec<Vec<f64>> = Vec::new();
                    for p in &out.pairs {
                        basis.push(if gram.countries { p.right.clone() } else { p.left.clone() });
                    }
                    y = random_orthogonal(&basis, gram.other_dim(), &mut rng);
                }
                let (left, right) = if gram.countries { (x, y) } else { (y, x) };
                out.pairs.push(SpectralPair { left, right, sigma });
                out.residuals.push(residuals[i]);
            }
            if block > rest {
                let gap = sqrt(eig.values[rest - 1].max(0.0)) - sqrt(eig.values[rest].max(0.0));
                if gap < 1e-12 {
                    out.warnings.push(SvdWarning::SpectralGapStagnation { index: k, gap });
                }
            }
            return Ok(out);
        }
        q = orthonormalize(image, &seed, &mut rng);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: worst,
    })
}

fn combine(basis: &[Vec<f64>], coeffs: &DenseMatrix) -> Vec<Vec<f64>> {
    let dim = basis.first().map_or(0, Vec::len);
    (0..coeffs.cols())
        .map(|j| {
            let mut v = vec![0.0; dim];
            for (i, b) in basis.iter().enumerate() {
                let c = coeffs.get(i, j);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi += c * bi;
                }
            }
            v
        })
        .collect()
}

fn project_out(x: &mut [f64], unit: &[f64]) {
    let proj = dot(x, unit);
    for (xi, ui) in x.iter_mut().zip(unit) {
        *xi -= proj * ui;
    }
}

fn normalized(x: &[f64]) -> Vec<f64> {
    let nrm = norm(x);
    x.iter().map(|v| v / nrm).collect()
}

/// Modified Gram–Schmidt (two passes) against `seed` and earlier columns.
/// Columns that vanish are replaced by fresh random directions.
fn orthonormalize(cols: Vec<Vec<f64>>, seed: &[f64], rng: &mut SplitMix64) -> Vec<Vec<f64>> {
    let dim = seed.len();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for c in cols {
        let mut v = c;
        let mut attempts = 0;
        loop {
            let before = norm(&v);
            for _ in 0..2 {
                project_out(&mut v, seed);
                for b in &out {
                    project_out(&mut v, b);
                }
            }
            let after = norm(&v);
            if after > 1e-10 * before.max(f64::MIN_POSITIVE) && after > 1e-300 {
                v.iter_mut().for_each(|x| *x /= after);
                break;
            }
            attempts += 1;
            assert!(attempts < 64, "orthonormalize: cannot extend basis in dimension {dim}");
            v = (0..dim).map(|_| rng.next_signed()).collect();
        }
        out.push(v);
    }
    out
}

fn random_orthogonal(basis: &[Vec<f64>], dim: usize, rng: &mut SplitMix64) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.next_signed()).collect();
        for _ in 0..2 {
            for b in basis {
                project_out(&mut v, b);
            }
        }
        let nrm = norm(&v);
        if nrm > 1e-8 {
            return v.into_iter().map(|x| x / nrm).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense_oracle_svd;

    fn f1() -> SpecializationMatrix {
        SpecializationMatrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 1]]).unwrap()
    }

    #[test]
    fn normalize_f1() {
        let a = normalize_sym(&f1()).unwrap().to_dense();
        let r = 1.0 / sqrt(2.0);
        let expected = [r, 0.5, 0.0, 0.0, 0.5, r];
        assert!(crate::math::max_abs_diff(a.as_slice(), &expected) < 1e-15);
    }

    #[test]
    fn normalize_identity_and_ones() {
        let id = SpecializationMatrix::from_rows(&[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(normalize_sym(&id).unwrap().to_dense().as_slice(), &[1.0, 0.0, 0.0, 1.0]);
        let ones = SpecializationMatrix::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(normalize_sym(&ones).unwrap().to_dense().as_slice(), &[0.5; 4]);
    }

    #[test]
    fn normalize_rejects_empty_row() {
        let m = SpecializationMatrix::from_rows(&[vec![1, 1], vec![0, 0]]).unwrap();
        assert!(matches!(normalize_sym(&m), Err(Error::Contract(_))));
    }

    #[test]
    fn truncated_f1() {
        let a = normalize_sym(&f1()).unwrap();
        let svd = truncated_svd(&a, 2, &SvdOptions::default()).unwrap();
        assert!((svd.pairs[0].sigma - 1.0).abs() < 1e-14);
        assert!((svd.pairs[1].sigma - 1.0 / sqrt(2.0)).abs() < 1e-12);
        let oracle = dense_oracle_svd(&a.to_dense()).unwrap();
        assert!((oracle.sigma[1] - svd.pairs[1].sigma).abs() < 1e-12);
    }

    #[test]
    fn block_diagonal_has_unit_second_singular_value() {
        let m = SpecializationMatrix::from_rows(&[vec![1, 1, 0], vec![1, 1, 0], vec![0, 0, 1]]).unwrap();
        let a = normalize_sym(&m).unwrap();
        let svd = truncated_svd(&a, 2, &SvdOptions::default()).unwrap();
        assert!((svd.pairs[1].sigma - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rank_one_has_zero_second_singular_value() {
        let m = SpecializationMatrix::from_rows(&[vec![1, 1, 1], vec![1, 1, 1]]).unwrap();
        let a = normalize_sym(&m).unwrap();
        let svd = truncated_svd(&a, 2, &SvdOptions::default()).unwrap();
        assert!(svd.pairs[1].sigma.abs() < 1e-12);
        assert!((norm(&svd.pairs[1].right) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_k() {
        let a = normalize_sym(&f1()).unwrap();
        assert!(truncated_svd(&a, 0, &SvdOptions::default()).is_err());
        assert!(truncated_svd(&a, 3, &SvdOptions::default()).is_err());
    }

    #[test]
    fn non_convergence_reports_residual() {
        let m = crate::synth::random_connected(20, 30, 0.3, 5);
        let a = normalize_sym(&m).unwrap();
        let opts = SvdOptions {
            max_iter: 1,
            tol: 1e-14,
            ..SvdOptions::default()
        };
        match truncated_svd(&a, 3, &opts) {
            Err(Error::NoConvergence { iterations: 1, residual }) => assert!(residual > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
