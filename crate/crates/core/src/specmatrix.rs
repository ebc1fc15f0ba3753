//! Trade flows, revealed comparative advantage and the binary specialization
//! matrix `M` with its diversity (row sums) and ubiquity (column sums).

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One `(year, country, product, value)` export record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeFlow {
    pub year: i32,
    pub country: String,
    pub product: String,
    pub value: f64,
}

/// Validated long-format export table.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TradeFlowTable {
    rows: Vec<TradeFlow>,
}

impl TradeFlowTable {
    /// Rejects negative or non-finite values, empty codes and duplicate
    /// `(year, country, product)` keys. Row indices in errors are 1-based.
    pub fn new(rows: Vec<TradeFlow>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (i, r) in rows.iter().enumerate() {
            let row = i + 1;
            if !r.value.is_finite() {
                return Err(Error::InvalidRecord {
                    row,
                    reason: format!("value {} is not a finite number", r.value),
                });
            }
            if r.value < 0.0 {
                return Err(Error::InvalidRecord {
                    row,
                    reason: format!("negative export value {}", r.value),
                });
            }
            if r.country.is_empty() || r.product.is_empty() {
                return Err(Error::InvalidRecord {
                    row,
                    reason: "empty country or product code".to_string(),
                });
            }
            if !seen.insert((r.year, r.country.as_str(), r.product.as_str())) {
                return Err(Error::DuplicateKey {
                    year: r.year,
                    country: r.country.clone(),
                    product: r.product.clone(),
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[TradeFlow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn years(&self) -> Vec<i32> {
        let set: BTreeSet<i32> = self.rows.iter().map(|r| r.year).collect();
        set.into_iter().collect()
    }
}

/// Dense RCA values for one year, rows/columns in lexicographic code order.
#[derive(Debug, Clone, PartialEq)]
pub struct RcaMatrix {
    pub countries: Vec<String>,
    pub products: Vec<String>,
    /// Row-major, `countries.len() * products.len()`.
    pub values: Vec<f64>,
}

impl RcaMatrix {
    pub fn get(&self, c: usize, p: usize) -> f64 {
        self.values[c * self.products.len() + p]
    }
}

/// Balassa index `(X_cp / X_c) / (X_p / X)`. Rows or columns with zero
/// totals get RCA 0.
pub fn compute_rca(table: &TradeFlowTable, year: i32) -> Result<RcaMatrix> {
    let mut countries = BTreeSet::new();
    let mut products = BTreeSet::new();
    for r in table.rows().iter().filter(|r| r.year == year) {
        countries.insert(r.country.as_str());
        products.insert(r.product.as_str());
    }
    let country_idx: BTreeMap<&str, usize> =
        countries.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let product_idx: BTreeMap<&str, usize> =
        products.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let (m, n) = (countries.len(), products.len());

    let mut x = vec![0.0; m * n];
    for r in table.rows().iter().filter(|r| r.year == year) {
        x[country_idx[r.country.as_str()] * n + product_idx[r.product.as_str()]] += r.value;
    }
    let mut row_tot = vec![0.0; m];
    let mut col_tot = vec![0.0; n];
    for c in 0..m {
        for p in 0..n {
            row_tot[c] += x[c * n + p];
            col_tot[p] += x[c * n + p];
        }
    }
    let total: f64 = row_tot.iter().sum();
    if total <= 0.0 {
        return Err(Error::EmptyYear(year));
    }

    let mut values = vec![0.0; m * n];
    for c in 0..m {
        for p in 0..n {
            let denom = row_tot[c] * col_tot[p];
            if denom > 0.0 {
                values[c * n + p] = x[c * n + p] * total / denom;
            }
        }
    }
    Ok(RcaMatrix {
        countries: countries.into_iter().map(String::from).collect(),
        products: products.into_iter().map(String::from).collect(),
        values,
    })
}

/// `M_cp = 1` iff `RCA_cp >= threshold`. The result is not pruned.
pub fn binarize(rca: &RcaMatrix, threshold: f64) -> Result<SpecializationMatrix> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rca threshold must be positive, got {threshold}"
        )));
    }
    let n = rca.products.len();
    let entries = rca
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v >= threshold)
        .map(|(i, _)| (i / n, i % n));
    SpecializationMatrix::from_entries(rca.countries.clone(), rca.products.clone(), entries)
}

/// Sparse binary country × product matrix.
///
/// Rows are stored as sorted column lists; a column-compressed mirror is
/// kept alongside for transpose access. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecializationMatrix {
    countries: Vec<String>,
    products: Vec<String>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl SpecializationMatrix {
    /// Builds a matrix from `(country, product)` index pairs. Duplicates are
    /// merged; codes must be unique.
    pub fn from_entries<I>(countries: Vec<String>, products: Vec<String>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        check_unique(&countries, "country")?;
        check_unique(&products, "product")?;
        let (m, n) = (countries.len(), products.len());
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (c, p) in entries {
            if c >= m || p >= n {
                return Err(Error::Contract(format!(
                    "entry ({c}, {p}) outside a {m}x{n} matrix"
                )));
            }
            rows[c].push(p);
        }
        let mut row_ptr = Vec::with_capacity(m + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (c, row) in rows.iter().enumerate() {
            for &p in row {
                cols[p].push(c);
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::with_capacity(col_idx.len());
        col_ptr.push(0);
        for col in &cols {
            row_idx.extend_from_slice(col);
            col_ptr.push(row_idx.len());
        }
        Ok(Self {
            countries,
            products,
            row_ptr,
            col_idx,
            col_ptr,
            row_idx,
        })
    }

    /// Dense 0/1 rows with generated codes `c1..cm`, `p1..pn`.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Contract("ragged rows".to_string()));
        }
        let countries = (1..=m).map(|i| format!("c{i}")).collect();
        let products = (1..=n).map(|j| format!("p{j}")).collect();
        let entries = rows
            .iter()
            .enumerate()
            .flat_map(|(c, r)| r.iter().enumerate().filter(|(_, v)| **v != 0).map(move |(p, _)| (c, p)));
        Self::from_entries(countries, products, entries)
    }

    pub fn n_countries(&self) -> usize {
        self.countries.len()
    }

    pub fn n_products(&self) -> usize {
        self.products.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_countries(), self.n_products())
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn products(&self) -> &[String] {
        &self.products
    }

    pub fn country_index(&self, code: &str) -> Option<usize> {
        self.countries.iter().position(|c| c == code)
    }

    pub fn product_index(&self, code: &str) -> Option<usize> {
        self.products.iter().position(|p| p == code)
    }

    /// Products exported competitively by country `c`, sorted.
    pub fn row(&self, c: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[c]..self.row_ptr[c + 1]]
    }

    /// Countries exporting product `p` competitively, sorted.
    pub fn col(&self, p: usize) -> &[usize] {
        &self.row_idx[self.col_ptr[p]..self.col_ptr[p + 1]]
    }

    pub fn contains(&self, c: usize, p: usize) -> bool {
        self.row(c).binary_search(&p).is_ok()
    }

    /// Row sums `d_c`.
    pub fn diversity(&self) -> Vec<usize> {
        (0..self.n_countries()).map(|c| self.row(c).len()).collect()
    }

    /// Column sums `u_p`.
    pub fn ubiquity(&self) -> Vec<usize> {
        (0..self.n_products()).map(|p| self.col(p).len()).collect()
    }

    /// All 1-entries in (country, product) lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_countries()).flat_map(move |c| self.row(c).iter().map(move |&p| (c, p)))
    }

    /// Row-major dense copy as `f64`.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n_products();
        let mut out = vec![0.0; self.n_countries() * n];
        for (c, p) in self.entries() {
            out[c * n + p] = 1.0;
        }
        out
    }

    /// `D^-1 M x`: per-country mean of a product vector.
    pub fn country_average(&self, product_values: &[f64]) -> Vec<f64> {
        (0..self.n_countries())
            .map(|c| {
                let row = self.row(c);
                row.iter().map(|&p| product_values[p]).sum::<f64>() / row.len() as f64
            })
            .collect()
    }

    /// `U^-1 M^T y`: per-product mean of a country vector.
    pub fn product_average(&self, country_values: &[f64]) -> Vec<f64> {
        (0..self.n_products())
            .map(|p| {
                let col = self.col(p);
                col.iter().map(|&c| country_values[c]).sum::<f64>() / col.len() as f64
            })
            .collect()
    }

    /// Copy with `M_cp` set to 1; errors if it is already set.
    pub fn with_entry(&self, c: usize, p: usize) -> Result<Self> {
        self.check_bounds(c, p)?;
        if self.contains(c, p) {
            return Err(Error::EntryPresent {
                country: self.countries[c].clone(),
                product: self.products[p].clone(),
            });
        }
        let entries: Vec<_> = self.entries().chain(core::iter::once((c, p))).collect();
        Self::from_entries(self.countries.clone(), self.products.clone(), entries)
    }

    /// Copy with `M_cp` cleared. Missing entries are a contract violation.
    pub fn without_entry(&self, c: usize, p: usize) -> Result<Self> {
        self.check_bounds(c, p)?;
        if !self.contains(c, p) {
            return Err(Error::Contract(format!(
                "entry ({}, {}) is not present",
                self.countries[c], self.products[p]
            )));
        }
        let entries: Vec<_> = self.entries().filter(|e| *e != (c, p)).collect();
        Self::from_entries(self.countries.clone(), self.products.clone(), entries)
    }

    /// Restriction to the given (sorted) row and column index sets.
    pub fn submatrix(&self, keep_rows: &[usize], keep_cols: &[usize]) -> Result<Self> {
        let mut col_map = vec![usize::MAX; self.n_products()];
        for (new, &old) in keep_cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut entries = Vec::new();
        for (new_c, &c) in keep_rows.iter().enumerate() {
            for &p in self.row(c) {
                if col_map[p] != usize::MAX {
                    entries.push((new_c, col_map[p]));
                }
            }
        }
        Self::from_entries(
            keep_rows.iter().map(|&c| self.countries[c].clone()).collect(),
            keep_cols.iter().map(|&p| self.products[p].clone()).collect(),
            entries,
        )
    }

    /// Connected components of the bipartite graph over countries and
    /// products. Node ids: countries `0..m`, products `m..m+n`. Components
    /// are listed in order of their smallest node id.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let (m, n) = self.shape();
        let mut seen = vec![false; m + n];
        let mut out = Vec::new();
        for start in 0..m + n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            let mut comp = Vec::new();
            while let Some(node) = queue.pop_front() {
                comp.push(node);
                let neighbours: &[usize] = if node < m { self.row(node) } else { self.col(node - m) };
                for &nb in neighbours {
                    let id = if node < m { m + nb } else { nb };
                    if !seen[id] {
                        seen[id] = true;
                        queue.push_back(id);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    fn check_bounds(&self, c: usize, p: usize) -> Result<()> {
        if c >= self.n_countries() || p >= self.n_products() {
            return Err(Error::Contract(format!(
                "index ({c}, {p}) outside a {}x{} matrix",
                self.n_countries(),
                self.n_products()
            )));
        }
        Ok(())
    }
}

fn check_unique(codes: &[String], what: &str) -> Result<()> {
    let mut seen = BTreeSet::new();
    for code in codes {
        if !seen.insert(code.as_str()) {
            return Err(Error::Contract(format!("duplicate {what} code {code}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrunePolicy {
    /// Disconnected instances are an error.
    Strict,
    /// Keep the largest connected component.
    #[default]
    Component,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSize {
    pub countries: usize,
    pub products: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PruneReport {
    pub dropped_countries: Vec<String>,
    pub dropped_products: Vec<String>,
    /// Sizes of the connected components after removing empty rows/columns.
    pub components: Vec<ComponentSize>,
    pub warnings: Vec<String>,
}

impl PruneReport {
    /// True when nothing was dropped and nothing needed a warning.
    pub fn is_empty(&self) -> bool {
        self.dropped_countries.is_empty() && self.dropped_products.is_empty() && self.warnings.is_empty()
    }
}

/// Removes empty rows and columns until none remain, then enforces
/// connectivity according to `policy`.
pub fn prune(matrix: &SpecializationMatrix, policy: PrunePolicy) -> Result<(SpecializationMatrix, PruneReport)> {
    let mut report = PruneReport::default();
    let mut current = matrix.clone();
    loop {
        let keep_rows: Vec<usize> = (0..current.n_countries()).filter(|&c| !current.row(c).is_empty()).collect();
        let keep_cols: Vec<usize> = (0..current.n_products()).filter(|&p| !current.col(p).is_empty()).collect();
        if keep_rows.len() == current.n_countries() && keep_cols.len() == current.n_products() {
            break;
        }
        report.dropped_countries.extend(
            (0..current.n_countries())
                .filter(|c| current.row(*c).is_empty())
                .map(|c| current.countries[c].clone()),
        );
        report.dropped_products.extend(
            (0..current.n_products())
                .filter(|p| current.col(*p).is_empty())
                .map(|p| current.products[p].clone()),
        );
        current = current.submatrix(&keep_rows, &keep_cols)?;
    }
    if current.nnz() == 0 {
        return Err(Error::EmptyInstance);
    }

    let m = current.n_countries();
    let components = current.components();
    report.components = components
        .iter()
        .map(|comp| {
            let countries = comp.iter().filter(|&&id| id < m).count();
            ComponentSize {
                countries,
                products: comp.len() - countries,
            }
        })
        .collect();

    if components.len() > 1 {
        if policy == PrunePolicy::Strict {
            return Err(Error::Disconnected {
                components: components.len(),
            });
        }
        // Largest by node count; ties go to the component found first.
        let mut best = 0;
        for (i, comp) in components.iter().enumerate() {
            if comp.len() > components[best].len() {
                best = i;
            }
        }
        let keep = &components[best];
        let keep_rows: Vec<usize> = keep.iter().copied().filter(|&id| id < m).collect();
        let keep_cols: Vec<usize> = keep.iter().filter(|&&id| id >= m).map(|&id| id - m).collect();
        for (i, comp) in components.iter().enumerate() {
            if i == best {
                continue;
            }
            for &id in comp {
                if id < m {
                    report.dropped_countries.push(current.countries[id].clone());
                } else {
                    report.dropped_products.push(current.products[id - m].clone());
                }
            }
        }
        report.warnings.push(format!(
            "bipartite graph has {} components; kept the largest ({} countries, {} products)",
            components.len(),
            keep_rows.len(),
            keep_cols.len()
        ));
        current = current.submatrix(&keep_rows, &keep_cols)?;
    }
    report.dropped_countries.sort();
    report.dropped_products.sort();
    Ok((current, report))
}
