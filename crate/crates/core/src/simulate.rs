//! Counterfactual specializations: single-entry additions swept over a
//! candidate set, and a greedy search that keeps adding the product that
//! raises one country's ECI the most.
//!
//! Every counterfactual is recomputed from scratch. Scores are sign-aligned
//! to a reference (the baseline for sweeps, the last committed state for the
//! greedy search) and memberships are scored against the baseline mixture
//! unless audit mode refits it.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cocluster::{assign, embed, fit_gmm_1d, CoClusterAssignment, GmmModel, GmmOptions, JointEmbedding, Label};
use crate::complexity::{compute_scores, standardize, ComplexityScores, OrientationRule, Route, ScoreOptions};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::math::{pearson, sqrt};
use crate::specmatrix::SpecializationMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    pub route: Route,
    pub score: ScoreOptions,
    pub gmm: GmmOptions,
    /// Refit the mixture per counterfactual and keep every greedy
    /// candidate evaluation.
    pub audit: bool,
    /// Start the solver from the reference ECI vector.
    pub warm_start: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            route: Route::Svd,
            score: ScoreOptions::default(),
            gmm: GmmOptions::default(),
            audit: false,
            warm_start: true,
        }
    }
}

/// Baseline state shared by all counterfactuals.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub matrix: SpecializationMatrix,
    pub scores: ComplexityScores,
    pub embedding: JointEmbedding,
    pub model: GmmModel,
    pub assignment: CoClusterAssignment,
}

impl Baseline {
    pub fn compute(matrix: SpecializationMatrix, opts: &SimulationOptions) -> Result<Self> {
        let scores = compute_scores(&matrix, opts.route, &opts.score)?;
        let embedding = embed(&matrix, &scores)?;
        let model = fit_gmm_1d(&embedding, &opts.gmm)?;
        let assignment = assign(&model, &embedding);
        Ok(Self {
            matrix,
            scores,
            embedding,
            model,
            assignment,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProductSets {
    pub a_core: Vec<usize>,
    pub b_core: Vec<usize>,
    pub borderline: Vec<usize>,
    pub all_empty: bool,
}

/// Products with `P(A) > high`, `P(B) > high`, and `max(P(A), P(B)) < borderline`.
pub fn select_product_sets(assignment: &CoClusterAssignment, high: f64, borderline: f64) -> Result<ProductSets> {
    if !(0.5 < borderline && borderline < high && high <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0.5 < borderline < high <= 1, got borderline={borderline}, high={high}"
        )));
    }
    let mut sets = ProductSets::default();
    for (p, &pb) in assignment.product_prob_b().iter().enumerate() {
        let pa = 1.0 - pb;
        if pa > high {
            sets.a_core.push(p);
        }
        if pb > high {
            sets.b_core.push(p);
        }
        if pa.max(pb) < borderline {
            sets.borderline.push(p);
        }
    }
    sets.all_empty = sets.a_core.is_empty() && sets.b_core.is_empty() && sets.borderline.is_empty();
    Ok(sets)
}

/// Flips `scores` jointly when its ECI anti-correlates with the reference.
/// A zero or undefined correlation keeps the static orientation and marks
/// the fallback.
pub fn align_orientation(mut scores: ComplexityScores, reference: &ComplexityScores) -> Result<ComplexityScores> {
    if scores.eci_raw.len() != reference.eci_raw.len() {
        return Err(Error::Contract(format!(
            "cannot align {} countries to {}",
            scores.eci_raw.len(),
            reference.eci_raw.len()
        )));
    }
    let corr = pearson(&scores.eci_raw, &reference.eci_raw);
    match corr {
        Some(c) if c.abs() > 1e-12 => {
            let flip = c < 0.0;
            if flip {
                scores.negate();
            }
            scores.orientation.rule = OrientationRule::Baseline;
            scores.orientation.flipped = flip;
            scores.orientation.correlation = Some(c.abs());
        }
        _ => {
            scores.orientation.rule = OrientationRule::BaselineFallback;
            scores.orientation.flipped = false;
            scores.orientation.correlation = corr;
        }
    }
    Ok(scores)
}

/// One recomputed counterfactual.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterfactual {
    pub matrix: SpecializationMatrix,
    pub scores: ComplexityScores,
    pub assignment: CoClusterAssignment,
}

fn score_options(matrix: &SpecializationMatrix, reference: &ComplexityScores, opts: &SimulationOptions) -> ScoreOptions {
    let mut score = opts.score.clone();
    if opts.warm_start && opts.route == Route::Svd {
        let start: Vec<f64> = matrix
            .diversity()
            .iter()
            .zip(&reference.eci_raw)
            .map(|(d, e)| sqrt(*d as f64) * e)
            .collect();
        score.svd.warm_start = Some(start);
    }
    score
}

/// Scores `matrix` aligned to `reference`, with memberships against the
/// baseline mixture (or a refit in audit mode).
pub fn evaluate_matrix(
    baseline: &Baseline,
    matrix: SpecializationMatrix,
    reference: &ComplexityScores,
    opts: &SimulationOptions,
) -> Result<Counterfactual> {
    let score_opts = score_options(&matrix, reference, opts);
    let scores = compute_scores(&matrix, opts.route, &score_opts)?;
    let scores = standardize(&align_orientation(scores, reference)?)?;
    let embedding = embed(&matrix, &scores)?;
    let assignment = if opts.audit {
        assign(&fit_gmm_1d(&embedding, &opts.gmm)?, &embedding)
    } else {
        assign(&baseline.model, &embedding)
    };
    Ok(Counterfactual {
        matrix,
        scores,
        assignment,
    })
}

pub fn evaluate_addition(baseline: &Baseline, country: usize, product: usize, opts: &SimulationOptions) -> Result<Counterfactual> {
    let matrix = baseline.matrix.with_entry(country, product)?;
    evaluate_matrix(baseline, matrix, &baseline.scores, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub country: String,
    pub product: String,
    pub eci_before: f64,
    pub eci_after: f64,
    pub pci_before: f64,
    pub pci_after: f64,
    pub country_prob_b_before: f64,
    pub country_prob_b_after: f64,
    pub product_prob_b_before: f64,
    pub product_prob_b_after: f64,
    pub country_label_before: Label,
    pub country_label_after: Label,
    pub product_label_before: Label,
    pub product_label_after: Label,
    pub sigma2_before: f64,
    pub sigma2_after: f64,
    pub nnz_before: usize,
    pub nnz_after: usize,
    /// Alignment fell back to the static orientation rule.
    pub alignment_fallback: bool,
}

fn record(baseline: &Baseline, c: usize, p: usize, cf: &Counterfactual) -> SimulationRecord {
    let nc = baseline.matrix.n_countries();
    let before = &baseline.assignment;
    let after = &cf.assignment;
    SimulationRecord {
        country: baseline.matrix.countries()[c].clone(),
        product: baseline.matrix.products()[p].clone(),
        eci_before: baseline.scores.eci_raw[c],
        eci_after: cf.scores.eci_raw[c],
        pci_before: baseline.scores.pci_raw[p],
        pci_after: cf.scores.pci_raw[p],
        country_prob_b_before: before.prob_b[c],
        country_prob_b_after: after.prob_b[c],
        product_prob_b_before: before.prob_b[nc + p],
        product_prob_b_after: after.prob_b[nc + p],
        country_label_before: before.labels[c],
        country_label_after: after.labels[c],
        product_label_before: before.labels[nc + p],
        product_label_after: after.labels[nc + p],
        sigma2_before: baseline.scores.sigma2,
        sigma2_after: cf.scores.sigma2,
        nnz_before: baseline.matrix.nnz(),
        nnz_after: cf.matrix.nnz(),
        alignment_fallback: cf.scores.orientation.rule == OrientationRule::BaselineFallback,
    }
}

fn check_absent(m: &SpecializationMatrix, c: usize, p: usize) -> Result<()> {
    let (nc, np) = m.shape();
    if c >= nc || p >= np {
        return Err(Error::Contract(format!("candidate ({c}, {p}) outside a {nc}x{np} matrix")));
    }
    if m.contains(c, p) {
        return Err(Error::EntryPresent {
            country: m.countries()[c].clone(),
            product: m.products()[p].clone(),
        });
    }
    Ok(())
}

/// Evaluates every `(country, product)` candidate against the baseline.
/// All candidates are validated before any work starts.
pub fn sweep_single_additions<E: Executor>(
    baseline: &Baseline,
    candidates: &[(usize, usize)],
    opts: &SimulationOptions,
    exec: &E,
) -> Result<Vec<SimulationRecord>> {
    for &(c, p) in candidates {
        check_absent(&baseline.matrix, c, p)?;
    }
    exec.map(candidates, |&(c, p)| {
        let cf = evaluate_addition(baseline, c, p, opts)?;
        Ok(record(baseline, c, p, &cf))
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The target already exports every product.
    Saturated,
    /// No candidate strictly increases the target's ECI.
    NoImprovement,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCountry {
    pub code: String,
    pub eci_raw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEvaluation {
    pub product: String,
    pub eci_raw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    pub iteration: usize,
    pub product: String,
    /// Position counted from the bottom: 1 is the lowest ECI.
    pub rank: usize,
    pub eci_raw: f64,
    pub target_prob_b: f64,
    /// Membership of the added product in the baseline assignment.
    pub product_prob_b_baseline: f64,
    /// Countries by descending ECI after the commit.
    pub ranking: Vec<RankedCountry>,
    /// Every candidate evaluated at this iteration (audit mode only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<CandidateEvaluation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyTrajectory {
    pub target: String,
    pub initial_rank: usize,
    pub initial_eci_raw: f64,
    pub initial_ranking: Vec<RankedCountry>,
    pub steps: Vec<GreedyStep>,
    pub termination: Termination,
}

/// 1-based position of `target` from the bottom of the ECI ordering.
pub fn rank_from_bottom(eci: &[f64], target: usize) -> usize {
    1 + eci.iter().filter(|&&e| e < eci[target]).count()
}

fn ranking(m: &SpecializationMatrix, eci: &[f64]) -> Vec<RankedCountry> {
    let mut order: Vec<usize> = (0..eci.len()).collect();
    order.sort_by(|&i, &j| eci[j].total_cmp(&eci[i]).then(i.cmp(&j)));
    order
        .into_iter()
        .map(|c| RankedCountry {
            code: m.countries()[c].clone(),
            eci_raw: eci[c],
        })
        .collect()
}

/// Repeatedly adds to `target` the absent product that maximizes its
/// aligned raw ECI (ties to the lowest product code) while that strictly
/// improves on the current value.
pub fn greedy_maximize<E: Executor>(
    baseline: &Baseline,
    target: usize,
    max_iter: usize,
    opts: &SimulationOptions,
    exec: &E,
) -> Result<GreedyTrajectory> {
    let m0 = &baseline.matrix;
    if target >= m0.n_countries() {
        return Err(Error::Contract(format!("target index {target} out of range")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
    }
    let nc = m0.n_countries();
    let mut trajectory = GreedyTrajectory {
        target: m0.countries()[target].clone(),
        initial_rank: rank_from_bottom(&baseline.scores.eci_raw, target),
        initial_eci_raw: baseline.scores.eci_raw[target],
        initial_ranking: ranking(m0, &baseline.scores.eci_raw),
        steps: Vec::new(),
        termination: Termination::MaxIter,
    };
    let mut matrix = m0.clone();
    let mut reference = baseline.scores.clone();
    for iteration in 1..=max_iter {
        let candidates: Vec<usize> = (0..m0.n_products()).filter(|&p| !matrix.contains(target, p)).collect();
        if candidates.is_empty() {
            trajectory.termination = Termination::Saturated;
            return Ok(trajectory);
        }
        let evals: Vec<Result<Counterfactual>> = exec.map(&candidates, |&p| {
            let next = matrix.with_entry(target, p)?;
            evaluate_matrix(baseline, next, &reference, opts)
        });
        let evals: Vec<Counterfactual> = evals.into_iter().collect::<Result<_>>()?;
        let mut best = 0;
        for (i, cf) in evals.iter().enumerate() {
            if cf.scores.eci_raw[target] > evals[best].scores.eci_raw[target] {
                best = i;
            }
        }
        let current = reference.eci_raw[target];
        if !(evals[best].scores.eci_raw[target] > current + 1e-12) {
            trajectory.termination = Termination::NoImprovement;
            return Ok(trajectory);
        }
        let audit: Vec<CandidateEvaluation> = if opts.audit {
            candidates
                .iter()
                .zip(&evals)
                .map(|(&p, cf)| CandidateEvaluation {
                    product: m0.products()[p].clone(),
                    eci_raw: cf.scores.eci_raw[target],
                })
                .collect()
        } else {
            Vec::new()
        };
        let p = candidates[best];
        let chosen = evals.into_iter().nth(best).expect("best index in range");
        trajectory.steps.push(GreedyStep {
            iteration,
            product: m0.products()[p].clone(),
            rank: rank_from_bottom(&chosen.scores.eci_raw, target),
            eci_raw: chosen.scores.eci_raw[target],
            target_prob_b: chosen.assignment.prob_b[target],
            product_prob_b_baseline: baseline.assignment.prob_b[nc + p],
            ranking: ranking(m0, &chosen.scores.eci_raw),
            candidates: audit,
        });
        matrix = chosen.matrix;
        reference = chosen.scores;
    }
    Ok(trajectory)
}
