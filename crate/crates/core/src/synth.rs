//! Seeded synthetic instances: the two golden fixtures, random bipartite
//! matrices and synthetic trade-flow tables.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::exp;
use crate::specmatrix::{prune, PrunePolicy, SpecializationMatrix, TradeFlow, TradeFlowTable};

/// Seed used for the planted checkerboard fixture.
pub const F2_SEED: u64 = 20_240_601;

/// `M = [[1,1,0],[0,1,1]]`: the smallest connected non-degenerate instance.
pub fn fixture_f1() -> SpecializationMatrix {
    SpecializationMatrix::from_rows(&[alloc::vec![1, 1, 0], alloc::vec![0, 1, 1]]).expect("static fixture")
}

/// Codes `{prefix}{i}` zero-padded so lexicographic and numeric order agree.
pub fn codes(prefix: &str, count: usize) -> Vec<String> {
    let width = format!("{count}").len();
    (1..=count).map(|i| format!("{prefix}{i:0width$}")).collect()
}

/// A checkerboard instance with its planted row/column groups.
#[derive(Debug, Clone)]
pub struct PlantedCheckerboard {
    pub matrix: SpecializationMatrix,
    /// Block index (0 or 1) per country.
    pub country_block: Vec<u8>,
    /// Block index (0 or 1) per product.
    pub product_block: Vec<u8>,
}

impl PlantedCheckerboard {
    /// Restricts the planted labels to the countries/products that survived
    /// pruning, matched by code.
    pub fn labels_for(&self, pruned: &SpecializationMatrix) -> (Vec<u8>, Vec<u8>) {
        let c = pruned
            .countries()
            .iter()
            .map(|code| self.country_block[self.matrix.country_index(code).expect("pruned code")])
            .collect();
        let p = pruned
            .products()
            .iter()
            .map(|code| self.product_block[self.matrix.product_index(code).expect("pruned code")])
            .collect();
        (c, p)
    }
}

/// General two-block checkerboard: `rows[0]` countries × `cols[0]` products
/// and `rows[1]` × `cols[1]` drawn with probability `inside`, off-block
/// cells with `outside`. Not pruned.
pub fn checkerboard(rows: [usize; 2], cols: [usize; 2], inside: f64, outside: f64, seed: u64) -> PlantedCheckerboard {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = (rows[0] + rows[1], cols[0] + cols[1]);
    let country_block: Vec<u8> = (0..m).map(|c| u8::from(c >= rows[0])).collect();
    let product_block: Vec<u8> = (0..n).map(|p| u8::from(p >= cols[0])).collect();
    let mut entries = Vec::new();
    for c in 0..m {
        for p in 0..n {
            let prob = if country_block[c] == product_block[p] { inside } else { outside };
            if rng.random::<f64>() < prob {
                entries.push((c, p));
            }
        }
    }
    let matrix = SpecializationMatrix::from_entries(codes("c", m), codes("p", n), entries).expect("generated");
    PlantedCheckerboard {
        matrix,
        country_block,
        product_block,
    }
}

/// Fixture F2: 40 × 60, blocks 15×20 and 25×40 at density 0.8, off-blocks 0.1.
pub fn fixture_f2() -> PlantedCheckerboard {
    checkerboard([15, 25], [20, 40], 0.8, 0.1, F2_SEED)
}

/// Erdős–Rényi bipartite matrix, not pruned.
pub fn random_matrix(m: usize, n: usize, density: f64, seed: u64) -> SpecializationMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for c in 0..m {
        for p in 0..n {
            if rng.random::<f64>() < density {
                entries.push((c, p));
            }
        }
    }
    SpecializationMatrix::from_entries(codes("c", m), codes("p", n), entries).expect("generated")
}

/// Random `m × n` matrix with every row and column non-empty and a connected
/// bipartite graph. Redraws with derived seeds until one qualifies.
pub fn random_connected(m: usize, n: usize, density: f64, seed: u64) -> SpecializationMatrix {
    let mut attempt = 0u64;
    loop {
        let candidate = random_matrix(m, n, density, seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9)));
        if let Ok((pruned, report)) = prune(&candidate, PrunePolicy::Strict) {
            if report.is_empty() {
                return pruned;
            }
        }
        attempt += 1;
        assert!(attempt < 1000, "density {density} too low for a connected {m}x{n} instance");
    }
}

/// Nested latent-capability instance: countries get capability `a_c`,
/// products requirement `b_p`, both uniform on [0, 1], and
/// `P(M_cp = 1) = floor + (1 - floor) / (1 + exp(-sharpness (a_c - b_p)))`.
/// Connected and fully non-empty by construction of the retry loop.
pub fn latent_instance(m: usize, n: usize, sharpness: f64, floor: f64, seed: u64) -> SpecializationMatrix {
    let mut attempt = 0u64;
    loop {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0x632B_E5AB)));
        let cap: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let req: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut entries = Vec::new();
        for (c, a) in cap.iter().enumerate() {
            for (p, b) in req.iter().enumerate() {
                let prob = floor + (1.0 - floor) / (1.0 + exp(-sharpness * (a - b)));
                if rng.random::<f64>() < prob {
                    entries.push((c, p));
                }
            }
        }
        let candidate = SpecializationMatrix::from_entries(codes("c", m), codes("p", n), entries).expect("generated");
        if let Ok((pruned, report)) = prune(&candidate, PrunePolicy::Strict) {
            if report.is_empty() {
                return pruned;
            }
        }
        attempt += 1;
        assert!(attempt < 1000, "could not draw a connected latent instance");
    }
}

/// Random long-format export table: `countries × products × years` rows with
/// log-uniform values, a fraction of them exactly zero.
pub fn synthetic_trade_flows(countries: usize, products: usize, years: &[i32], seed: u64) -> TradeFlowTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c_codes = codes("C", countries);
    let p_codes = codes("P", products);
    let mut rows = Vec::with_capacity(countries * products * years.len());
    for &year in years {
        for c in &c_codes {
            for p in &p_codes {
                let value = if rng.random::<f64>() < 0.2 {
                    0.0
                } else {
                    let e: f64 = rng.random_range(0.0..9.0);
                    libm::round(libm::pow(10.0, e) * 100.0) / 100.0
                };
                rows.push(TradeFlow {
                    year,
                    country: c.clone(),
                    product: p.clone(),
                    value,
                });
            }
        }
    }
    TradeFlowTable::new(rows).expect("generated rows are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_sort_numerically() {
        let c = codes("c", 12);
        assert_eq!(c[0], "c01");
        let mut sorted = c.clone();
        sorted.sort();
        assert_eq!(sorted, c);
    }

    #[test]
    fn f2_is_deterministic() {
        assert_eq!(fixture_f2().matrix, fixture_f2().matrix);
        assert_eq!(fixture_f2().matrix.shape(), (40, 60));
    }

    #[test]
    fn random_connected_is_connected() {
        let m = random_connected(20, 30, 0.2, 1);
        assert_eq!(m.components().len(), 1);
        assert!(m.diversity().iter().all(|&d| d > 0));
    }
}
