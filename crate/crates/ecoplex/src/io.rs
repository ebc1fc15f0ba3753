//! On-disk formats: trade-flow CSV, matrix artifacts and score tables.

use std::path::{Path, PathBuf};

use ecoplex_core::complexity::{ComplexityScores, Orientation, SolverDiagnostics};
use ecoplex_core::specmatrix::{PruneReport, SpecializationMatrix, TradeFlow, TradeFlowTable};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::format::{fmt_num, write_json, write_text};

pub const TRADE_HEADER: [&str; 4] = ["year", "country", "product", "value"];
pub const MATRIX_CSV: &str = "matrix.csv";
pub const MATRIX_JSON: &str = "matrix.json";
pub const PRUNE_JSON: &str = "prune.json";
pub const ECI_CSV: &str = "eci.csv";
pub const PCI_CSV: &str = "pci.csv";
pub const SCORES_JSON: &str = "scores.json";

fn delimiter_byte(delimiter: char) -> CliResult<u8> {
    u8::try_from(delimiter)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| CliError::Usage(format!("delimiter {delimiter:?} must be a single ASCII character")))
}

#[derive(Deserialize)]
struct TradeRow {
    year: i32,
    country: String,
    product: String,
    value: f64,
}

pub fn read_trade_csv(path: &Path, delimiter: char) -> CliResult<TradeFlowTable> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter_byte(delimiter)?)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers().map_err(|e| CliError::format(path, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != TRADE_HEADER {
        return Err(CliError::format(
            path,
            format!("expected header {:?}, found {:?}", TRADE_HEADER.join(","), headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.deserialize::<TradeRow>().enumerate() {
        let r = record.map_err(|e| CliError::format(path, format!("row {}: {e}", i + 1)))?;
        rows.push(TradeFlow {
            year: r.year,
            country: r.country,
            product: r.product,
            value: r.value,
        });
    }
    TradeFlowTable::new(rows).map_err(|e| CliError::format(path, e.to_string()))
}

pub fn write_trade_csv(path: &Path, table: &TradeFlowTable, delimiter: char) -> CliResult<()> {
    let d = delimiter.to_string();
    let mut out = TRADE_HEADER.join(&d);
    out.push('\n');
    for r in table.rows() {
        out.push_str(&[r.year.to_string(), r.country.clone(), r.product.clone(), fmt_num(r.value)].join(&d));
        out.push('\n');
    }
    write_text(path, &out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeCount {
    pub code: String,
    pub count: usize,
}

/// Sidecar describing `matrix.csv`: code order, degrees and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub year: Option<i32>,
    pub rca_threshold: Option<f64>,
    pub n_countries: usize,
    pub n_products: usize,
    pub nnz: usize,
    /// Country codes with diversity.
    pub countries: Vec<CodeCount>,
    /// Product codes with ubiquity.
    pub products: Vec<CodeCount>,
    pub prune: PruneReport,
}

pub fn write_matrix_artifacts(
    dir: &Path,
    m: &SpecializationMatrix,
    year: Option<i32>,
    rca_threshold: Option<f64>,
    prune: &PruneReport,
) -> CliResult<()> {
    ensure_dir(dir)?;
    let mut csv = String::from("country,product\n");
    for (c, p) in m.entries() {
        csv.push_str(&m.countries()[c]);
        csv.push(',');
        csv.push_str(&m.products()[p]);
        csv.push('\n');
    }
    write_text(&dir.join(MATRIX_CSV), &csv)?;
    let counts = |codes: &[String], degrees: Vec<usize>| {
        codes
            .iter()
            .zip(degrees)
            .map(|(code, count)| CodeCount { code: code.clone(), count })
            .collect()
    };
    let sidecar = MatrixSidecar {
        year,
        rca_threshold,
        n_countries: m.n_countries(),
        n_products: m.n_products(),
        nnz: m.nnz(),
        countries: counts(m.countries(), m.diversity()),
        products: counts(m.products(), m.ubiquity()),
        prune: prune.clone(),
    };
    write_json(&dir.join(MATRIX_JSON), &sidecar)?;
    write_json(&dir.join(PRUNE_JSON), prune)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))
}

fn csv_reader(path: &Path) -> CliResult<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

pub fn read_matrix_artifacts(dir: &Path) -> CliResult<(SpecializationMatrix, MatrixSidecar)> {
    let sidecar: MatrixSidecar = read_json(&dir.join(MATRIX_JSON))?;
    let csv_path = dir.join(MATRIX_CSV);
    let mut reader = csv_reader(&csv_path)?;
    let countries: Vec<String> = sidecar.countries.iter().map(|c| c.code.clone()).collect();
    let products: Vec<String> = sidecar.products.iter().map(|c| c.code.clone()).collect();
    let country_pos: std::collections::HashMap<&str, usize> =
        countries.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let product_pos: std::collections::HashMap<&str, usize> =
        products.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let r = record.map_err(|e| CliError::format(&csv_path, e.to_string()))?;
        let (Some(c), Some(p)) = (r.get(0), r.get(1)) else {
            return Err(CliError::format(&csv_path, format!("row {}: expected country,product", i + 1)));
        };
        let ci = *country_pos
            .get(c)
            .ok_or_else(|| CliError::format(&csv_path, format!("row {}: unknown country {c}", i + 1)))?;
        let pi = *product_pos
            .get(p)
            .ok_or_else(|| CliError::format(&csv_path, format!("row {}: unknown product {p}", i + 1)))?;
        entries.push((ci, pi));
    }
    let m = SpecializationMatrix::from_entries(countries, products, entries)
        .map_err(|e| CliError::format(&csv_path, e.to_string()))?;
    let expected: Vec<usize> = sidecar.countries.iter().map(|c| c.count).collect();
    if m.nnz() != sidecar.nnz || m.diversity() != expected {
        return Err(CliError::format(&csv_path, "entries disagree with the sidecar degrees"));
    }
    Ok((m, sidecar))
}

/// Cross-route comparison stored next to the scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossRoute {
    pub other_route: String,
    pub max_eci_diff: f64,
    pub max_pci_diff: f64,
    pub sigma2_diff: f64,
    /// `|σ₂² − (1 − λ₂)|` of the primary route.
    pub lambda_identity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresEnvelope {
    pub route: String,
    pub sigma2: f64,
    pub lambda2: f64,
    pub orientation: Orientation,
    pub diagnostics: SolverDiagnostics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_route: Option<CrossRoute>,
}

fn score_table(header: &str, codes: &[String], raw: &[f64], std: &[f64]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for ((code, r), s) in codes.iter().zip(raw).zip(std) {
        out.push_str(&format!("{code},{},{}\n", fmt_num(*r), fmt_num(*s)));
    }
    out
}

pub fn write_scores(dir: &Path, m: &SpecializationMatrix, scores: &ComplexityScores, envelope: &ScoresEnvelope) -> CliResult<()> {
    ensure_dir(dir)?;
    write_text(
        &dir.join(ECI_CSV),
        &score_table("code,eci_raw,eci_std", m.countries(), &scores.eci_raw, &scores.eci_std),
    )?;
    write_text(
        &dir.join(PCI_CSV),
        &score_table("code,pci_raw,pci_std", m.products(), &scores.pci_raw, &scores.pci_std),
    )?;
    write_json(&dir.join(SCORES_JSON), envelope)
}

fn read_score_table(path: &Path, codes: &[String]) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv_reader(path)?;
    let mut raw = Vec::with_capacity(codes.len());
    let mut std = Vec::with_capacity(codes.len());
    for (i, record) in reader.records().enumerate() {
        let r = record.map_err(|e| CliError::format(path, e.to_string()))?;
        let bad = || CliError::format(path, format!("row {}: expected code,raw,std", i + 1));
        if codes.get(i).map(String::as_str) != r.get(0) {
            return Err(CliError::format(path, format!("row {}: code order differs from the matrix", i + 1)));
        }
        raw.push(r.get(1).and_then(|v| v.parse().ok()).ok_or_else(bad)?);
        std.push(r.get(2).and_then(|v| v.parse().ok()).ok_or_else(bad)?);
    }
    if raw.len() != codes.len() {
        return Err(CliError::format(path, format!("{} rows for {} codes", raw.len(), codes.len())));
    }
    Ok((raw, std))
}

pub fn read_scores(dir: &Path, m: &SpecializationMatrix) -> CliResult<(ComplexityScores, ScoresEnvelope)> {
    let envelope: ScoresEnvelope = read_json(&dir.join(SCORES_JSON))?;
    let (eci_raw, eci_std) = read_score_table(&dir.join(ECI_CSV), m.countries())?;
    let (pci_raw, pci_std) = read_score_table(&dir.join(PCI_CSV), m.products())?;
    let scores = ComplexityScores {
        eci_raw,
        pci_raw,
        eci_std,
        pci_std,
        sigma2: envelope.sigma2,
        lambda2: envelope.lambda2,
        orientation: envelope.orientation.clone(),
        diagnostics: envelope.diagnostics.clone(),
    };
    Ok((scores, envelope))
}

/// `country,product` candidate pairs.
pub fn read_candidates(path: &Path, m: &SpecializationMatrix) -> CliResult<Vec<(usize, usize)>> {
    let mut reader = csv_reader(path)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let r = record.map_err(|e| CliError::format(path, e.to_string()))?;
        let (Some(c), Some(p)) = (r.get(0), r.get(1)) else {
            return Err(CliError::format(path, format!("row {}: expected country,product", i + 1)));
        };
        let ci = m.country_index(c).ok_or_else(|| ecoplex_core::Error::UnknownCode(c.to_string()))?;
        let pi = m.product_index(p).ok_or_else(|| ecoplex_core::Error::UnknownCode(p.to_string()))?;
        out.push((ci, pi));
    }
    Ok(out)
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn require_file(path: PathBuf) -> CliResult<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::io(&path, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file")))
    }
}
