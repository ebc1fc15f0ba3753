use ecoplex_core::complexity::compute_scores;
use ecoplex_core::interpretation::verify;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::format::write_json;
use crate::io::read_matrix_artifacts;

pub const REPORT_FILE: &str = "verification.json";

pub fn run_verify(config: &RunConfig) -> CliResult<()> {
    let (m, _) = read_matrix_artifacts(config.input()?)?;
    super::prepare(config, "verify")?;
    let scores = compute_scores(&m, config.route.spectral(), &config.score_options())?;
    let report = verify(&m, &scores)?;
    write_json(&config.out.join(REPORT_FILE), &report)?;
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| c.expectation == ecoplex_core::interpretation::Expectation::Holds && !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("identity checks failed: {}", failed.join(", "))))
    }
}
