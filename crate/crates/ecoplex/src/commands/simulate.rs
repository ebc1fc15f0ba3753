use ecoplex_core::simulate::{greedy_maximize, select_product_sets, sweep_single_additions, Baseline, SimulationRecord};
use ecoplex_core::specmatrix::SpecializationMatrix;

use crate::config::{ProductSetChoice, RunConfig};
use crate::error::{CliError, CliResult};
use crate::exec::RayonExecutor;
use crate::format::{fmt_num, write_json, write_text};
use crate::io::{read_candidates, read_matrix_artifacts};

fn country_index(m: &SpecializationMatrix, config: &RunConfig) -> CliResult<usize> {
    let code = config
        .simulation
        .country
        .as_deref()
        .ok_or_else(|| CliError::Usage("--country is required".into()))?;
    m.country_index(code)
        .ok_or_else(|| ecoplex_core::Error::UnknownCode(code.to_string()).into())
}

fn load_baseline(config: &RunConfig) -> CliResult<Baseline> {
    let (m, _) = read_matrix_artifacts(config.input()?)?;
    Ok(Baseline::compute(m, &config.simulation_options())?)
}

fn sweep_csv(records: &[SimulationRecord]) -> String {
    let mut out = String::from(
        "country,product,eci_before,eci_after,pci_before,pci_after,\
         country_prob_b_before,country_prob_b_after,product_prob_b_before,product_prob_b_after,\
         country_label_before,country_label_after,product_label_before,product_label_after,\
         sigma2_before,sigma2_after,nnz_before,nnz_after,alignment_fallback\n",
    );
    for r in records {
        let nums = [
            r.eci_before,
            r.eci_after,
            r.pci_before,
            r.pci_after,
            r.country_prob_b_before,
            r.country_prob_b_after,
            r.product_prob_b_before,
            r.product_prob_b_after,
        ]
        .map(fmt_num)
        .join(",");
        out.push_str(&format!(
            "{},{},{nums},{:?},{:?},{:?},{:?},{},{},{},{},{}\n",
            r.country,
            r.product,
            r.country_label_before,
            r.country_label_after,
            r.product_label_before,
            r.product_label_after,
            fmt_num(r.sigma2_before),
            fmt_num(r.sigma2_after),
            r.nnz_before,
            r.nnz_after,
            r.alignment_fallback
        ));
    }
    out
}

pub fn run_sweep(config: &RunConfig) -> CliResult<()> {
    let baseline = load_baseline(config)?;
    let m = &baseline.matrix;
    let candidates = match (&config.simulation.candidates, &config.simulation.country) {
        (Some(path), _) => read_candidates(path, m)?,
        (None, Some(_)) => {
            let c = country_index(m, config)?;
            let s = &config.simulation;
            let sets = select_product_sets(&baseline.assignment, s.high_threshold, s.borderline_threshold)?;
            let pool: Vec<usize> = match s.product_set {
                ProductSetChoice::All => (0..m.n_products()).collect(),
                ProductSetChoice::ACore => sets.a_core,
                ProductSetChoice::BCore => sets.b_core,
                ProductSetChoice::Borderline => sets.borderline,
            };
            pool.into_iter().filter(|&p| !m.contains(c, p)).map(|p| (c, p)).collect()
        }
        (None, None) => return Err(CliError::Usage("pass --candidates or --country".into())),
    };
    super::prepare(config, "simulate_sweep")?;
    let exec = RayonExecutor::from_env();
    log::info!("{} candidates on {} threads", candidates.len(), exec.threads());
    let records = sweep_single_additions(&baseline, &candidates, &config.simulation_options(), &exec)?;
    write_text(&config.out.join("sweep.csv"), &sweep_csv(&records))
}

pub fn run_greedy(config: &RunConfig) -> CliResult<()> {
    let baseline = load_baseline(config)?;
    let target = country_index(&baseline.matrix, config)?;
    super::prepare(config, "simulate_greedy")?;
    let exec = RayonExecutor::from_env();
    let trajectory = greedy_maximize(
        &baseline,
        target,
        config.simulation.max_iter,
        &config.simulation_options(),
        &exec,
    )?;
    log::info!("{} steps, {:?}", trajectory.steps.len(), trajectory.termination);
    write_json(&config.out.join("greedy.json"), &trajectory)?;
    let mut csv = String::from("iteration,position,code,eci_raw\n");
    let snapshots = std::iter::once((0, &trajectory.initial_ranking))
        .chain(trajectory.steps.iter().map(|s| (s.iteration, &s.ranking)));
    for (iteration, ranking) in snapshots {
        for (pos, entry) in ranking.iter().enumerate() {
            csv.push_str(&format!("{iteration},{},{},{}\n", pos + 1, entry.code, fmt_num(entry.eci_raw)));
        }
    }
    write_text(&config.out.join("greedy_ranking.csv"), &csv)
}
