//! Effective run configuration. Every command writes the configuration it
//! ran with to `<out>/<command>.config.json`; passing that file back with
//! `--config` reproduces the run.

use std::path::{Path, PathBuf};

use ecoplex_core::cocluster::GmmOptions;
use ecoplex_core::complexity::{Route, ScoreOptions};
use ecoplex_core::linalg::SvdOptions;
use ecoplex_core::simulate::SimulationOptions;
use ecoplex_core::specmatrix::PrunePolicy;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RouteChoice {
    #[default]
    Svd,
    Eigen,
    Mor,
}

impl RouteChoice {
    /// Spectral route used for scores; reflections report alongside SVD scores.
    pub fn spectral(self) -> Route {
        match self {
            Self::Eigen => Route::Eigen,
            Self::Svd | Self::Mor => Route::Svd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProductSetChoice {
    /// Every product the country does not yet export.
    #[default]
    All,
    ACore,
    BCore,
    Borderline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Target country code (greedy, and sweeps built from a product set).
    pub country: Option<String>,
    /// CSV of `country,product` candidate pairs for sweeps.
    pub candidates: Option<PathBuf>,
    pub product_set: ProductSetChoice,
    pub max_iter: usize,
    pub audit: bool,
    pub high_threshold: f64,
    pub borderline_threshold: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            country: None,
            candidates: None,
            product_set: ProductSetChoice::All,
            max_iter: 200,
            audit: false,
            high_threshold: 0.997,
            borderline_threshold: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Instance shapes as `[countries, products]`.
    pub sizes: Vec<[usize; 2]>,
    pub density: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![[50, 100], [100, 200], [300, 600]],
            density: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub year: Option<i32>,
    pub delimiter: char,
    pub rca_threshold: f64,
    pub prune_policy: PrunePolicy,
    pub route: RouteChoice,
    pub tol: f64,
    pub max_iter: usize,
    pub degeneracy_tol: f64,
    pub seed: u64,
    /// Reflection iterations for `--route mor`.
    pub mor_iters: usize,
    pub verify: bool,
    pub gmm: GmmOptions,
    pub simulation: SimulationConfig,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let svd = SvdOptions::default();
        Self {
            input: None,
            out: PathBuf::from("out"),
            year: None,
            delimiter: ',',
            rca_threshold: 1.0,
            prune_policy: PrunePolicy::Component,
            route: RouteChoice::Svd,
            tol: svd.tol,
            max_iter: svd.max_iter,
            degeneracy_tol: ScoreOptions::default().degeneracy_tol,
            seed: 0,
            mor_iters: 20,
            verify: false,
            gmm: GmmOptions::default(),
            simulation: SimulationConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))
    }

    pub fn input(&self) -> CliResult<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::Usage("--input is required".into()))
    }

    pub fn score_options(&self) -> ScoreOptions {
        ScoreOptions {
            svd: SvdOptions {
                tol: self.tol,
                max_iter: self.max_iter,
                warm_start: None,
                seed: self.seed,
            },
            degeneracy_tol: self.degeneracy_tol,
        }
    }

    pub fn gmm_options(&self) -> GmmOptions {
        GmmOptions {
            seed: self.seed,
            ..self.gmm.clone()
        }
    }

    pub fn simulation_options(&self) -> SimulationOptions {
        SimulationOptions {
            route: self.route.spectral(),
            score: self.score_options(),
            gmm: self.gmm_options(),
            audit: self.simulation.audit,
            warm_start: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_json() {
        let mut c = RunConfig {
            year: Some(2001),
            ..Default::default()
        };
        c.simulation.country = Some("C01".into());
        let text = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_files_fill_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"seed": 7, "route": "eigen"}"#).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.route, RouteChoice::Eigen);
        assert_eq!(c.rca_threshold, 1.0);
        assert!(serde_json::from_str::<RunConfig>(r#"{"sede": 7}"#).is_err());
    }
}
