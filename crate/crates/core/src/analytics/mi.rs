//! Mutual information between the two coordinates of each pair, in bits.
//!
//! Before quantization the coordinates are continuous and MI is a plug-in estimate from a
//! `bins x bins` equal-width histogram over the known bounded domain; no bias correction
//! is applied, the first-order bias `(bins-1)^2 / (2 N ln 2)` is reported instead. After
//! quantization each coordinate takes finitely many values and MI is computed from the
//! exact contingency table of the snapped x and y values.

use std::collections::HashMap;

use crate::analytics::distortion::Region;
use crate::error::{Error, Result};
use crate::quantizer::QuantizerConfig;

pub const MIN_MI_FRAMES: usize = 1000;
pub const MIN_MI_BINS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiMode {
    Pre,
    Post,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    pub bits: f64,
    /// First-order plug-in bias for independent inputs; zero for exact discrete MI.
    pub bias_bound: f64,
    /// Standard deviation of the plug-in estimate under independence (chi-square
    /// approximation); zero for exact discrete MI.
    pub noise_sd: f64,
}

pub fn mutual_information(pairs: &[(f64, f64)], mode: MiMode, bins: usize, domain: Region) -> Result<MiEstimate> {
    if pairs.len() < MIN_MI_FRAMES {
        return Err(Error::Estimation(format!(
            "mutual information needs at least {MIN_MI_FRAMES} frames, got {}",
            pairs.len()
        )));
    }
    match mode {
        MiMode::Pre => histogram_mi(pairs, bins, domain),
        MiMode::Post => Ok(MiEstimate { bits: discrete_mi(pairs), bias_bound: 0.0, noise_sd: 0.0 }),
    }
}

pub fn histogram_mi(pairs: &[(f64, f64)], bins: usize, domain: Region) -> Result<MiEstimate> {
    if bins < MIN_MI_BINS {
        return Err(Error::Estimation(format!("need at least {MIN_MI_BINS} bins, got {bins}")));
    }
    let domain = Region::new(domain.x0, domain.x1, domain.y0, domain.y1)?;
    let bin = |v: f64, lo: f64, hi: f64| -> usize {
        let t = ((v - lo) / (hi - lo) * bins as f64).floor();
        t.clamp(0.0, (bins - 1) as f64) as usize
    };
    let mut joint = vec![0u64; bins * bins];
    for &(x, y) in pairs {
        joint[bin(y, domain.y0, domain.y1) * bins + bin(x, domain.x0, domain.x1)] += 1;
    }
    let n = pairs.len() as f64;
    let dof = ((bins - 1) * (bins - 1)) as f64;
    Ok(MiEstimate {
        bits: mi_from_table(&joint, bins, bins),
        bias_bound: dof / (2.0 * n * std::f64::consts::LN_2),
        noise_sd: (2.0 * dof).sqrt() / (2.0 * n * std::f64::consts::LN_2),
    })
}

/// Plug-in MI of two discrete variables identified by their exact `f64` values.
pub fn discrete_mi(pairs: &[(f64, f64)]) -> f64 {
    let mut xs: HashMap<u64, usize> = HashMap::new();
    let mut ys: HashMap<u64, usize> = HashMap::new();
    let mut cells: HashMap<(usize, usize), u64> = HashMap::new();
    for &(x, y) in pairs {
        let nx = xs.len();
        let i = *xs.entry(x.to_bits()).or_insert(nx);
        let ny = ys.len();
        let j = *ys.entry(y.to_bits()).or_insert(ny);
        *cells.entry((i, j)).or_insert(0) += 1;
    }
    let (cols, rows) = (xs.len(), ys.len());
    let mut table = vec![0u64; cols * rows];
    for ((i, j), count) in cells {
        table[j * cols + i] = count;
    }
    mi_from_table(&table, cols, rows)
}

/// MI in bits of a row-major `rows x cols` contingency table (`table[row * cols + col]`).
///
/// Terms whose cell count factorizes exactly (`n_ij * N == n_i * n_j` in integers)
/// contribute exactly zero, so a product table yields exactly 0.
pub fn mi_from_table(table: &[u64], cols: usize, rows: usize) -> f64 {
    let total: u64 = table.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let mut col_sums = vec![0u64; cols];
    let mut row_sums = vec![0u64; rows];
    for r in 0..rows {
        for c in 0..cols {
            let v = table[r * cols + c];
            col_sums[c] += v;
            row_sums[r] += v;
        }
    }
    let n = total as f64;
    let mut mi = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let nij = table[r * cols + c];
            if nij == 0 {
                continue;
            }
            let num = nij as u128 * total as u128;
            let den = col_sums[c] as u128 * row_sums[r] as u128;
            if num == den {
                continue;
            }
            mi += (nij as f64 / n) * (num as f64 / den as f64).log2();
        }
    }
    mi
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiReport {
    pub per_pair_mi_pre: Vec<f64>,
    pub per_pair_mi_post: Vec<f64>,
    pub histogram_bins: usize,
    /// Bias bound of the pre-quantization estimates.
    pub bias_bound: f64,
    pub units: &'static str,
}

/// Pre- and post-quantization MI for every pair of a latent stream.
pub fn mi_report(latents: &[Vec<f64>], config: &QuantizerConfig, bins: usize) -> Result<MiReport> {
    let pairs = config.pairs();
    let mut pre: Vec<Vec<(f64, f64)>> = vec![Vec::with_capacity(latents.len()); pairs];
    let mut post: Vec<Vec<(f64, f64)>> = vec![Vec::with_capacity(latents.len()); pairs];
    for z in latents {
        let b = config.bound(z)?;
        let q = config.quantize_bounded(&b);
        for j in 0..pairs {
            pre[j].push((b.values[2 * j], b.values[2 * j + 1]));
            post[j].push((q.values[2 * j], q.values[2 * j + 1]));
        }
    }
    let mut report = MiReport {
        per_pair_mi_pre: Vec::with_capacity(pairs),
        per_pair_mi_post: Vec::with_capacity(pairs),
        histogram_bins: bins,
        bias_bound: 0.0,
        units: "bits",
    };
    for j in 0..pairs {
        let domain = bounded_domain(config, j);
        let est = mutual_information(&pre[j], MiMode::Pre, bins, domain)?;
        report.bias_bound = est.bias_bound;
        report.per_pair_mi_pre.push(est.bits);
        report.per_pair_mi_post.push(mutual_information(&post[j], MiMode::Post, bins, domain)?.bits);
    }
    Ok(report)
}

/// `[-lx/2, lx/2] x [-ly/2, ly/2]`, the range of pair `j` after bounding.
pub fn bounded_domain(config: &QuantizerConfig, pair: usize) -> Region {
    let hx = config.levels()[2 * pair] as f64 / 2.0;
    let hy = config.levels()[2 * pair + 1] as f64 / 2.0;
    Region { x0: -hx, x1: hx, y0: -hy, y1: hy }
}

/// Latent-space pairs forming an exact product distribution: every combination of `n`
/// stratified midpoints of `[-1, 1]` on each axis.
pub fn product_latent_pairs(n: usize) -> Vec<(f64, f64)> {
    let axis: Vec<f64> = (0..n).map(|a| (2 * a + 1) as f64 / n as f64 - 1.0).collect();
    axis.iter().flat_map(|&y| axis.iter().map(move |&x| (x, y))).collect()
}
