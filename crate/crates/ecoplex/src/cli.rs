use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ecoplex_core::specmatrix::PrunePolicy;

use crate::config::{ProductSetChoice, RouteChoice, RunConfig};
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "ecoplex", version, about = "Complexity indices and co-clustering of country-product export data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trade CSV -> binary specialization matrix artifacts.
    Ingest(CommonArgs),
    /// ECI/PCI from matrix artifacts.
    Scores(ScoresArgs),
    /// Two-cluster mixture on the joint embedding, plus plot data.
    Cocluster(CommonArgs),
    /// Counterfactual specializations.
    Simulate {
        #[command(subcommand)]
        mode: SimulateMode,
    },
    /// Identity report for a matrix and its scores.
    Verify(CommonArgs),
    /// Timing of the truncated-SVD and dense-eigen routes on synthetic instances.
    Bench(BenchArgs),
}

#[derive(Debug, Subcommand)]
pub enum SimulateMode {
    /// Add single specializations from a candidate set.
    Sweep(SweepArgs),
    /// Keep adding the product that raises one country's ECI the most.
    Greedy(GreedyArgs),
}

fn parse_policy(s: &str) -> Result<PrunePolicy, String> {
    match s {
        "strict" => Ok(PrunePolicy::Strict),
        "component" => Ok(PrunePolicy::Component),
        _ => Err(format!("unknown prune policy {s:?} (strict, component)")),
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Trade CSV for `ingest`, otherwise a directory of artifacts.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub year: Option<i32>,
    #[arg(long)]
    pub rca_threshold: Option<f64>,
    #[arg(long, value_parser = parse_policy)]
    pub prune_policy: Option<PrunePolicy>,
    #[arg(long, value_enum)]
    pub route: Option<RouteChoice>,
    /// Solver tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Field delimiter of the trade CSV.
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Start from a saved configuration; explicit flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScoresArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Reflection iterations for `--route mor`.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Also write the identity report.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// CSV of `country,product` pairs to add.
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    /// Country whose absent products form the candidate set.
    #[arg(long)]
    pub country: Option<String>,
    #[arg(long, value_enum)]
    pub product_set: Option<ProductSetChoice>,
    /// Refit the mixture for every counterfactual.
    #[arg(long)]
    pub audit: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GreedyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub country: Option<String>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Refit the mixture per counterfactual and keep all candidate evaluations.
    #[arg(long)]
    pub audit: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated shapes, e.g. `50x100,300x600`.
    #[arg(long, value_delimiter = ',', value_parser = parse_size)]
    pub sizes: Option<Vec<[usize; 2]>>,
    #[arg(long)]
    pub density: Option<f64>,
}

fn parse_size(s: &str) -> Result<[usize; 2], String> {
    let (m, n) = s.split_once('x').ok_or_else(|| format!("size {s:?} is not MxN"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("size {s:?}: {e}"));
    Ok([parse(m)?, parse(n)?])
}

impl CommonArgs {
    /// Loads `--config` (or defaults) and applies the explicit flags.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.input {
            c.input = Some(v.clone());
        }
        if let Some(v) = self.year {
            c.year = Some(v);
        }
        if let Some(v) = self.rca_threshold {
            c.rca_threshold = v;
        }
        if let Some(v) = self.prune_policy {
            c.prune_policy = v;
        }
        if let Some(v) = self.route {
            c.route = v;
        }
        if let Some(v) = self.tol {
            c.tol = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        if let Some(v) = self.delimiter {
            c.delimiter = v;
        }
        Ok(c)
    }
}

impl ScoresArgs {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut c = self.common.resolve()?;
        if let Some(v) = self.iters {
            c.mor_iters = v;
        }
        c.verify |= self.verify;
        Ok(c)
    }
}

impl SweepArgs {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut c = self.common.resolve()?;
        if let Some(v) = &self.candidates {
            c.simulation.candidates = Some(v.clone());
        }
        if let Some(v) = &self.country {
            c.simulation.country = Some(v.clone());
        }
        if let Some(v) = self.product_set {
            c.simulation.product_set = v;
        }
        c.simulation.audit |= self.audit;
        Ok(c)
    }
}

impl GreedyArgs {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut c = self.common.resolve()?;
        if let Some(v) = &self.country {
            c.simulation.country = Some(v.clone());
        }
        if let Some(v) = self.max_iter {
            c.simulation.max_iter = v;
        }
        c.simulation.audit |= self.audit;
        Ok(c)
    }
}

impl BenchArgs {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut c = self.common.resolve()?;
        if let Some(v) = &self.sizes {
            c.bench.sizes = v.clone();
        }
        if let Some(v) = self.density {
            c.bench.density = v;
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from(["ecoplex", "scores", "--input", "run", "--route", "eigen", "--seed", "3", "--verify"]).unwrap();
        let Command::Scores(args) = cli.command else { panic!() };
        let c = args.resolve().unwrap();
        assert_eq!(c.route, RouteChoice::Eigen);
        assert_eq!(c.seed, 3);
        assert!(c.verify);
        assert_eq!(c.input.as_deref(), Some(std::path::Path::new("run")));
    }

    #[test]
    fn bench_sizes_parse() {
        let cli = Cli::try_parse_from(["ecoplex", "bench", "--sizes", "20x30,5x7"]).unwrap();
        let Command::Bench(args) = cli.command else { panic!() };
        assert_eq!(args.resolve().unwrap().bench.sizes, vec![[20, 30], [5, 7]]);
        assert!(Cli::try_parse_from(["ecoplex", "ingest", "--prune-policy", "loose"]).is_err());
    }
}
