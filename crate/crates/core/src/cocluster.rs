//! Co-clustering of countries and products on the joint embedding
//! `z₂ = [D^-1/2 u₂, U^-1/2 v₂]` with a two-component 1-D Gaussian mixture,
//! plus the exact 1-D 2-means baseline.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complexity::ComplexityScores;
use crate::error::{Error, Result};
use crate::math::{exp, ln, log_add_exp};
use crate::specmatrix::SpecializationMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Country,
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointEmbedding {
    pub values: Vec<f64>,
    pub kinds: Vec<EntityKind>,
    pub codes: Vec<String>,
    pub n_countries: usize,
}

impl JointEmbedding {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn countries(&self) -> &[f64] {
        &self.values[..self.n_countries]
    }

    pub fn products(&self) -> &[f64] {
        &self.values[self.n_countries..]
    }
}

/// Country block is `eci_raw`, product block is `σ₂ · pci_raw`.
pub fn embed(m: &SpecializationMatrix, scores: &ComplexityScores) -> Result<JointEmbedding> {
    let (nc, np) = m.shape();
    if scores.eci_raw.len() != nc || scores.pci_raw.len() != np {
        return Err(Error::Contract(format!(
            "scores have {}+{} entries for a {nc}x{np} matrix",
            scores.eci_raw.len(),
            scores.pci_raw.len()
        )));
    }
    let mut values = scores.eci_raw.clone();
    values.extend(scores.pci_raw.iter().map(|p| scores.sigma2 * p));
    let mut kinds = vec![EntityKind::Country; nc];
    kinds.extend(core::iter::repeat_n(EntityKind::Product, np));
    let mut codes: Vec<String> = m.countries().to_vec();
    codes.extend(m.products().iter().cloned());
    Ok(JointEmbedding {
        values,
        kinds,
        codes,
        n_countries: nc,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmOptions {
    /// Stop when the log-likelihood changes by less than this.
    pub tol: f64,
    pub max_iter: usize,
    /// Total fits; the first is the deterministic median split, the rest
    /// start from random pairs of observations drawn with `seed`.
    pub restarts: usize,
    pub seed: u64,
    pub variance_floor: f64,
}

impl Default for GmmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            restarts: 1,
            seed: 0,
            variance_floor: 1e-12,
        }
    }
}

/// Two-component univariate Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub weights: [f64; 2],
    pub means: [f64; 2],
    pub variances: [f64; 2],
    pub log_likelihood: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

impl GmmModel {
    fn log_joint(&self, x: f64) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate() {
            let d = x - self.means[k];
            *o = ln(self.weights[k]) - 0.5 * (LN_2PI + ln(self.variances[k])) - d * d / (2.0 * self.variances[k]);
        }
        out
    }

    /// Posterior component probabilities for one observation.
    pub fn responsibilities(&self, x: f64) -> [f64; 2] {
        let lj = self.log_joint(x);
        let total = log_add_exp(lj[0], lj[1]);
        let r0 = exp(lj[0] - total);
        [r0, 1.0 - r0]
    }

    pub fn total_log_likelihood(&self, xs: &[f64]) -> f64 {
        xs.iter()
            .map(|&x| {
                let lj = self.log_joint(x);
                log_add_exp(lj[0], lj[1])
            })
            .sum()
    }

    /// Index of the component with the larger mean.
    pub fn upper_component(&self) -> usize {
        usize::from(self.means[1] > self.means[0])
    }

    pub fn final_log_likelihood(&self) -> f64 {
        self.log_likelihood.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

pub fn fit_gmm_1d(z: &JointEmbedding, opts: &GmmOptions) -> Result<GmmModel> {
    fit_gmm_values(&z.values, opts)
}

/// EM for a two-component 1-D mixture with free weights, means and
/// variances. The first fit starts from hard responsibilities given by a
/// median split of the sorted data.
pub fn fit_gmm_values(xs: &[f64], opts: &GmmOptions) -> Result<GmmModel> {
    if xs.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "need at least 4 observations for a two-component mixture, got {}",
            xs.len()
        )));
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidParameter("gmm tol must be positive and max_iter >= 1".into()));
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]).then(i.cmp(&j)));
    let mut resp = vec![[0.0, 1.0]; xs.len()];
    for &i in &order[..xs.len() / 2] {
        resp[i] = [1.0, 0.0];
    }
    let mut best = run_em(xs, resp, opts)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 1..opts.restarts.max(1) {
        let a = xs[rng.random_range(0..xs.len())];
        let b = xs[rng.random_range(0..xs.len())];
        if a == b {
            continue;
        }
        let resp = xs
            .iter()
            .map(|&x| if (x - a).abs() <= (x - b).abs() { [1.0, 0.0] } else { [0.0, 1.0] })
            .collect();
        if let Ok(model) = run_em(xs, resp, opts) {
            if model.final_log_likelihood() > best.final_log_likelihood() {
                best = model;
            }
        }
    }
    Ok(best)
}

fn m_step(xs: &[f64], resp: &[[f64; 2]], floor: f64) -> Result<([f64; 2], [f64; 2], [f64; 2])> {
    let n = xs.len() as f64;
    let mut weights = [0.0; 2];
    let mut means = [0.0; 2];
    let mut variances = [0.0; 2];
    for k in 0..2 {
        let nk: f64 = resp.iter().map(|r| r[k]).sum();
        if !(nk > 1e-300) {
            return Err(Error::DegenerateFit { component: k });
        }
        let mu = resp.iter().zip(xs).map(|(r, x)| r[k] * x).sum::<f64>() / nk;
        let var = resp.iter().zip(xs).map(|(r, x)| r[k] * (x - mu) * (x - mu)).sum::<f64>() / nk;
        if var < floor {
            // Clamping is fine for a tight cluster of several points; a
            // component that sits on a single observation is a singular fit.
            if nk < 2.0 {
                return Err(Error::DegenerateFit { component: k });
            }
        }
        weights[k] = nk / n;
        means[k] = mu;
        variances[k] = var.max(floor);
    }
    Ok((weights, means, variances))
}

fn run_em(xs: &[f64], mut resp: Vec<[f64; 2]>, opts: &GmmOptions) -> Result<GmmModel> {
    let (weights, means, variances) = m_step(xs, &resp, opts.variance_floor)?;
    let mut model = GmmModel {
        weights,
        means,
        variances,
        log_likelihood: Vec::new(),
        converged: false,
        iterations: 0,
    };
    for iter in 1..=opts.max_iter {
        let mut ll = 0.0;
        for (r, &x) in resp.iter_mut().zip(xs) {
            let lj = model.log_joint(x);
            let total = log_add_exp(lj[0], lj[1]);
            ll += total;
            let r0 = exp(lj[0] - total);
            *r = [r0, 1.0 - r0];
        }
        model.iterations = iter;
        let prev = model.log_likelihood.last().copied();
        model.log_likelihood.push(ll);
        if let Some(prev) = prev {
            if (ll - prev).abs() < opts.tol {
                model.converged = true;
                break;
            }
        }
        let (w, mu, var) = m_step(xs, &resp, opts.variance_floor)?;
        model.weights = w;
        model.means = mu;
        model.variances = var;
    }
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AssignmentFlag {
    /// No entity carries this label.
    EmptyCluster { label: Label },
    /// Fewer than 5% of entities, or mixture weight below 0.05.
    NearEmptyCluster { label: Label, count: usize, weight: f64 },
    /// Posterior exactly 0.5; assigned to A.
    Boundary { index: usize },
}

/// Share of entities (or mixture weight) under which a cluster is flagged as
/// near-empty.
pub const NEAR_EMPTY_SHARE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoClusterAssignment {
    pub prob_b: Vec<f64>,
    pub labels: Vec<Label>,
    pub kinds: Vec<EntityKind>,
    pub codes: Vec<String>,
    pub n_countries: usize,
    /// Mixture component aligned to B (the higher mean); `None` for k-means.
    pub b_component: Option<usize>,
    pub flags: Vec<AssignmentFlag>,
}

impl CoClusterAssignment {
    pub fn country_prob_b(&self) -> &[f64] {
        &self.prob_b[..self.n_countries]
    }

    pub fn product_prob_b(&self) -> &[f64] {
        &self.prob_b[self.n_countries..]
    }

    pub fn country_labels(&self) -> &[Label] {
        &self.labels[..self.n_countries]
    }

    pub fn product_labels(&self) -> &[Label] {
        &self.labels[self.n_countries..]
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|l| **l == label).count()
    }

    pub fn has_near_empty_cluster(&self) -> bool {
        self.flags
            .iter()
            .any(|f| matches!(f, AssignmentFlag::EmptyCluster { .. } | AssignmentFlag::NearEmptyCluster { .. }))
    }
}

fn build_assignment(z: &JointEmbedding, prob_b: Vec<f64>, b_component: Option<usize>, weights: Option<[f64; 2]>) -> CoClusterAssignment {
    let mut flags = Vec::new();
    let labels: Vec<Label> = prob_b
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if p == 0.5 {
                flags.push(AssignmentFlag::Boundary { index: i });
            }
            if p > 0.5 {
                Label::B
            } else {
                Label::A
            }
        })
        .collect();
    let total = labels.len();
    for label in [Label::A, Label::B] {
        let count = labels.iter().filter(|l| **l == label).count();
        let weight = match (weights, b_component) {
            (Some(w), Some(b)) => {
                if label == Label::B {
                    w[b]
                } else {
                    w[1 - b]
                }
            }
            _ => count as f64 / total as f64,
        };
        if count == 0 {
            flags.push(AssignmentFlag::EmptyCluster { label });
        } else if (count as f64) < NEAR_EMPTY_SHARE * total as f64 || weight < NEAR_EMPTY_SHARE {
            flags.push(AssignmentFlag::NearEmptyCluster { label, count, weight });
        }
    }
    CoClusterAssignment {
        prob_b,
        labels,
        kinds: z.kinds.clone(),
        codes: z.codes.clone(),
        n_countries: z.n_countries,
        b_component,
        flags,
    }
}

/// Soft assignment: `prob_B` is the responsibility of the higher-mean
/// component; label B iff `prob_B > 0.5`.
pub fn assign(model: &GmmModel, z: &JointEmbedding) -> CoClusterAssignment {
    let b = model.upper_component();
    let prob_b = z.values.iter().map(|&x| model.responsibilities(x)[b]).collect();
    build_assignment(z, prob_b, Some(b), Some(model.weights))
}

/// Exact 2-means on the line: the best split of the sorted values by
/// within-cluster sum of squares. Ties go to the split with the larger A
/// (lower) side.
pub fn kmeans_baseline(z: &JointEmbedding) -> Result<CoClusterAssignment> {
    let n = z.len();
    if n < 2 {
        return Err(Error::InvalidParameter("2-means needs at least 2 observations".into()));
    }
    let split = best_split(&z.values);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| z.values[i].total_cmp(&z.values[j]).then(i.cmp(&j)));
    let mut prob_b = vec![1.0; n];
    for &i in &order[..split] {
        prob_b[i] = 0.0;
    }
    Ok(build_assignment(z, prob_b, None, None))
}

/// Size of the low side of the optimal split of `xs` (sorted internally).
pub fn best_split(xs: &[f64]) -> usize {
    let n = xs.len();
    let mu = crate::math::mean(xs);
    let mut sorted: Vec<f64> = xs.iter().map(|x| x - mu).collect();
    sorted.sort_by(f64::total_cmp);
    let mut prefix = vec![0.0; n + 1];
    let mut prefix_sq = vec![0.0; n + 1];
    for (i, x) in sorted.iter().enumerate() {
        prefix[i + 1] = prefix[i] + x;
        prefix_sq[i + 1] = prefix_sq[i] + x * x;
    }
    let sse = |j: usize| {
        let (lo, lo_sq) = (prefix[j], prefix_sq[j]);
        let (hi, hi_sq) = (prefix[n] - lo, prefix_sq[n] - lo_sq);
        (lo_sq - lo * lo / j as f64) + (hi_sq - hi * hi / (n - j) as f64)
    };
    let mut best = 1;
    let mut best_sse = sse(1);
    let tie = 1e-12 * prefix_sq[n].max(f64::MIN_POSITIVE);
    for j in 2..n {
        let s = sse(j);
        if s <= best_sse + tie {
            if s < best_sse {
                best_sse = s;
            }
            best = j;
        }
    }
    best
}

/// Joint membership under independence: `P(c∈B)·P(p∈B)` and the
/// same-cluster probability `P(c∈B)P(p∈B) + P(c∈A)P(p∈A)`, both row-major
/// `m × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointMembership {
    pub n_countries: usize,
    pub n_products: usize,
    pub joint_b: Vec<f64>,
    pub same_cluster: Vec<f64>,
}

pub fn joint_membership(assignment: &CoClusterAssignment) -> JointMembership {
    let pc = assignment.country_prob_b();
    let pp = assignment.product_prob_b();
    let mut joint_b = Vec::with_capacity(pc.len() * pp.len());
    let mut same = Vec::with_capacity(pc.len() * pp.len());
    for &c in pc {
        for &p in pp {
            joint_b.push(c * p);
            same.push(c * p + (1.0 - c) * (1.0 - p));
        }
    }
    JointMembership {
        n_countries: pc.len(),
        n_products: pp.len(),
        joint_b,
        same_cluster: same,
    }
}
