use std::time::Instant;

use ecoplex_core::complexity::{compute_scores, Route};
use ecoplex_core::math::max_abs_diff;
use ecoplex_core::synth::random_connected;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::format::{fmt_num, write_json, write_text};

#[derive(Serialize)]
struct Agreement {
    m: usize,
    n: usize,
    max_eci_diff: f64,
    max_pci_diff: f64,
}

pub fn run_bench(config: &RunConfig) -> CliResult<()> {
    let density = config.bench.density;
    if !(density > 0.0 && density <= 1.0) {
        return Err(CliError::Usage(format!("density {density} outside (0, 1]")));
    }
    super::prepare(config, "bench")?;
    let mut csv = String::from("m,n,density,route,wall_seconds,residual\n");
    let mut agreement = Vec::new();
    for (i, &[m, n]) in config.bench.sizes.iter().enumerate() {
        let matrix = random_connected(m, n, density, config.seed.wrapping_add(i as u64));
        let mut results = Vec::new();
        for route in [Route::Svd, Route::Eigen] {
            let start = Instant::now();
            let scores = compute_scores(&matrix, route, &config.score_options())?;
            let secs = start.elapsed().as_secs_f64();
            let name = if route == Route::Svd { "svd" } else { "eigen" };
            csv.push_str(&format!(
                "{m},{n},{},{name},{},{}\n",
                fmt_num(density),
                fmt_num(secs),
                fmt_num(scores.diagnostics.residual)
            ));
            log::info!("{m}x{n} {name}: {secs:.4}s");
            results.push(scores);
        }
        agreement.push(Agreement {
            m,
            n,
            max_eci_diff: max_abs_diff(&results[0].eci_raw, &results[1].eci_raw),
            max_pci_diff: max_abs_diff(&results[0].pci_raw, &results[1].pci_raw),
        });
    }
    write_text(&config.out.join("bench.csv"), &csv)?;
    write_json(&config.out.join("bench.json"), &agreement)
}
