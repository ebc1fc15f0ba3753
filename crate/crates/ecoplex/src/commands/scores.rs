use ecoplex_core::complexity::{compute_scores, method_of_reflections, ComplexityScores, Route};
use ecoplex_core::interpretation::verify;
use ecoplex_core::math::{max_abs_diff, spearman};
use ecoplex_core::specmatrix::SpecializationMatrix;
use serde::Serialize;

use crate::config::{RouteChoice, RunConfig};
use crate::error::CliResult;
use crate::format::{fmt_num, write_json, write_text};
use crate::io::{read_matrix_artifacts, write_scores, CrossRoute, ScoresEnvelope};

/// Above this many countries plus products the dense cross-check is skipped.
pub const CROSS_CHECK_LIMIT: usize = 3000;

fn route_name(route: Route) -> &'static str {
    match route {
        Route::Svd => "svd",
        Route::Eigen => "eigen",
    }
}

fn cross_route(m: &SpecializationMatrix, scores: &ComplexityScores, route: Route, config: &RunConfig) -> CliResult<CrossRoute> {
    let other = match route {
        Route::Svd => Route::Eigen,
        Route::Eigen => Route::Svd,
    };
    let alt = compute_scores(m, other, &config.score_options())?;
    Ok(CrossRoute {
        other_route: route_name(other).into(),
        max_eci_diff: max_abs_diff(&scores.eci_raw, &alt.eci_raw),
        max_pci_diff: max_abs_diff(&scores.pci_raw, &alt.pci_raw),
        sigma2_diff: (scores.sigma2 - alt.sigma2).abs(),
        lambda_identity: (scores.sigma2 * scores.sigma2 - (1.0 - scores.lambda2)).abs(),
    })
}

#[derive(Serialize)]
struct ReflectionStep {
    iteration: usize,
    spearman_countries: Option<f64>,
    spearman_products: Option<f64>,
}

#[derive(Serialize)]
struct ReflectionSummary {
    iterations: usize,
    renormalized: bool,
    final_spearman_countries: Option<f64>,
    steps: Vec<ReflectionStep>,
}

fn write_reflections(m: &SpecializationMatrix, scores: &ComplexityScores, config: &RunConfig) -> CliResult<()> {
    let trace = method_of_reflections(m, config.mor_iters, true)?;
    let mut csv = String::from("iteration,kind,code,value\n");
    let mut steps = Vec::new();
    for n in 0..=trace.iterations() {
        for (code, v) in m.countries().iter().zip(&trace.countries[n]) {
            csv.push_str(&format!("{n},country,{code},{}\n", fmt_num(*v)));
        }
        for (code, v) in m.products().iter().zip(&trace.products[n]) {
            csv.push_str(&format!("{n},product,{code},{}\n", fmt_num(*v)));
        }
        steps.push(ReflectionStep {
            iteration: n,
            spearman_countries: spearman(&trace.countries[n], &scores.eci_raw),
            spearman_products: spearman(&trace.products[n], &scores.pci_raw),
        });
    }
    write_text(&config.out.join("mor_trace.csv"), &csv)?;
    let summary = ReflectionSummary {
        iterations: trace.iterations(),
        renormalized: trace.renormalized,
        final_spearman_countries: steps.last().and_then(|s| s.spearman_countries),
        steps,
    };
    write_json(&config.out.join("mor.json"), &summary)
}

pub fn run_scores(config: &RunConfig) -> CliResult<()> {
    let (m, _) = read_matrix_artifacts(config.input()?)?;
    super::prepare(config, "scores")?;
    let route = config.route.spectral();
    let scores = compute_scores(&m, route, &config.score_options())?;
    for w in &scores.diagnostics.warnings {
        log::warn!("{w:?}");
    }
    let cross = if m.n_countries() + m.n_products() <= CROSS_CHECK_LIMIT {
        Some(cross_route(&m, &scores, route, config)?)
    } else {
        log::info!("skipping dense cross-route check above {CROSS_CHECK_LIMIT} entities");
        None
    };
    let envelope = ScoresEnvelope {
        route: route_name(route).into(),
        sigma2: scores.sigma2,
        lambda2: scores.lambda2,
        orientation: scores.orientation.clone(),
        diagnostics: scores.diagnostics.clone(),
        cross_route: cross,
    };
    write_scores(&config.out, &m, &scores, &envelope)?;
    if config.route == RouteChoice::Mor {
        write_reflections(&m, &scores, config)?;
    }
    if config.verify {
        let report = verify(&m, &scores)?;
        write_json(&config.out.join(super::verify::REPORT_FILE), &report)?;
    }
    Ok(())
}
