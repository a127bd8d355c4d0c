//! Ablation sweeps: several quantizer configs run over one shared latent stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytics::distortion::quantization_mse;
use crate::analytics::utilization::UtilizationAccumulator;
use crate::codebook::CodebookLayout;
use crate::error::{Error, Result};
use crate::grid::{TilingKind, MAX_LEVELS, MIN_LEVELS};
use crate::quantizer::QuantizerConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub label: String,
    pub tilings: Vec<TilingKind>,
    pub levels: Vec<usize>,
    pub pair_sizes: Vec<u64>,
    pub codebook_size: u128,
    pub bits_per_token: f64,
    pub mse_bounded: f64,
    pub mse_latent: f64,
    pub pair_utilization: f64,
    pub codebook_utilization: f64,
}

pub const SWEEP_CSV_HEADER: &str =
    "label,tilings,levels,pair_sizes,codebook_size,bits_per_token,mse_latent,mse_bounded,pair_utilization,codebook_utilization";

impl SweepRow {
    pub fn csv_line(&self) -> String {
        let join = |v: Vec<String>| v.join(" ");
        format!(
            "{},{},{},{},{},{:.6},{:.8},{:.8},{:.6},{:.6}",
            self.label,
            join(self.tilings.iter().map(|t| t.to_string()).collect()),
            join(self.levels.iter().map(|l| l.to_string()).collect()),
            join(self.pair_sizes.iter().map(|l| l.to_string()).collect()),
            self.codebook_size,
            self.bits_per_token,
            self.mse_latent,
            self.mse_bounded,
            self.pair_utilization,
            self.codebook_utilization
        )
    }
}

/// Uniform latents in `[-1, 1]^d`, deterministic per seed.
pub fn uniform_latents(seed: u64, frames: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..frames).map(|_| (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect()).collect()
}

pub fn sweep_row(label: &str, config: &QuantizerConfig, latents: &[Vec<f64>]) -> Result<SweepRow> {
    let layout = CodebookLayout::from_config(config)?;
    let mse = quantization_mse(latents, config)?;
    let quantized = config.quantize_batch(latents)?;
    let mut util = UtilizationAccumulator::new(&layout);
    for q in &quantized {
        util.push_codes(&q.pair_codes)?;
    }
    let util = util.report();
    Ok(SweepRow {
        label: label.to_string(),
        tilings: config.tilings().to_vec(),
        levels: config.levels().to_vec(),
        pair_sizes: layout.pair_sizes().to_vec(),
        codebook_size: layout.total_size(),
        bits_per_token: layout.bits_per_token(),
        mse_bounded: mse.total_bounded,
        mse_latent: mse.total_latent,
        pair_utilization: util.pair_utilization,
        codebook_utilization: util.codebook_utilization,
    })
}

pub fn run_sweep(configs: &[(String, QuantizerConfig)], latents: &[Vec<f64>]) -> Result<Vec<SweepRow>> {
    configs.iter().map(|(label, cfg)| sweep_row(label, cfg, latents)).collect()
}

/// The most nearly square factorization `a * b = n` with both factors in the legal level
/// range, as `(a, b)` with `a <= b`.
pub fn squarest_factorization(n: usize) -> Option<(usize, usize)> {
    (MIN_LEVELS..=MAX_LEVELS)
        .rfind(|&a| a * a <= n && n.is_multiple_of(a) && (MIN_LEVELS..=MAX_LEVELS).contains(&(n / a)))
        .map(|a| (a, n / a))
}

/// A rectangle quantizer whose pair grids have exactly the realized point counts of
/// `config`'s grids, using the squarest legal level split per pair.
pub fn matched_rectangle(config: &QuantizerConfig) -> Result<QuantizerConfig> {
    let mut levels = Vec::with_capacity(config.dim());
    for grid in config.grids() {
        let (a, b) = squarest_factorization(grid.len())
            .ok_or_else(|| Error::ConfigMismatch(format!("no legal rectangle with {} points", grid.len())))?;
        levels.push(a);
        levels.push(b);
    }
    QuantizerConfig::uniform(TilingKind::Rectangle, levels)
}
