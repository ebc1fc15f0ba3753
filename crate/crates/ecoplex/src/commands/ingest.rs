use ecoplex_core::specmatrix::{binarize, compute_rca, prune};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{read_trade_csv, require_file, write_matrix_artifacts};

pub fn run_ingest(config: &RunConfig) -> CliResult<()> {
    let input = require_file(config.input()?.to_path_buf())?;
    let table = read_trade_csv(&input, config.delimiter)?;
    let year = match config.year {
        Some(y) => y,
        None => match table.years().as_slice() {
            [y] => *y,
            years => {
                return Err(CliError::Usage(format!(
                    "input has {} years ({:?}); pass --year",
                    years.len(),
                    years
                )))
            }
        },
    };
    super::prepare(config, "ingest")?;
    let rca = compute_rca(&table, year)?;
    let binary = binarize(&rca, config.rca_threshold)?;
    let (matrix, report) = prune(&binary, config.prune_policy)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    log::info!(
        "{} countries x {} products, {} entries",
        matrix.n_countries(),
        matrix.n_products(),
        matrix.nnz()
    );
    write_matrix_artifacts(&config.out, &matrix, Some(year), Some(config.rca_threshold), &report)
}
