//! Reference FSQ and VQ quantizers.
//!
//! FSQ uses the same bound-then-snap formulation as the pairwise quantizer: each channel
//! is scaled by `l/2` and rounded to the nearest of `l` unit-spaced levels centred on
//! zero, lowest level winning ties. VQ is inference-only nearest-neighbour lookup.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::grid::check_levels;
use crate::quantizer::check_unit_range;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FsqConfig {
    levels: Vec<usize>,
}

impl FsqConfig {
    pub fn new(levels: Vec<usize>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        for &l in &levels {
            check_levels(l)?;
        }
        Ok(FsqConfig { levels })
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    /// Value of level `code` on channel `channel`.
    pub fn level_value(&self, channel: usize, code: usize) -> f64 {
        code as f64 - (self.levels[channel] - 1) as f64 / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FsqOutput {
    pub codes: Vec<u32>,
    pub values: Vec<f64>,
}

pub fn fsq_quantize(z: &[f64], config: &FsqConfig) -> Result<FsqOutput> {
    if z.len() != config.dim() {
        return Err(Error::ConfigMismatch(format!("vector of length {} for a d={} FSQ", z.len(), config.dim())));
    }
    check_unit_range(z)?;
    let mut codes = Vec::with_capacity(z.len());
    let mut values = Vec::with_capacity(z.len());
    for (channel, (&v, &l)) in z.iter().zip(&config.levels).enumerate() {
        let bounded = v * (l as f64 / 2.0);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for code in 0..l {
            let diff = bounded - config.level_value(channel, code);
            let d = diff * diff;
            if d < best_d {
                best = code;
                best_d = d;
            }
        }
        codes.push(best as u32);
        values.push(config.level_value(channel, best));
    }
    Ok(FsqOutput { codes, values })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VqCodebook {
    entries: Vec<Vec<f64>>,
    dim: usize,
}

impl VqCodebook {
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self> {
        let dim = entries.first().map(Vec::len).ok_or_else(|| Error::ConfigMismatch("empty codebook".into()))?;
        if dim == 0 || entries.iter().any(|e| e.len() != dim) {
            return Err(Error::ConfigMismatch("codebook entries must share a nonzero dimension".into()));
        }
        Ok(VqCodebook { entries, dim })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }
}

/// Nearest codebook entry by Euclidean distance; lowest index wins ties.
pub fn vq_quantize<'a>(z: &[f64], cb: &'a VqCodebook) -> Result<(usize, &'a [f64])> {
    if z.len() != cb.dim {
        return Err(Error::ConfigMismatch(format!(
            "vector of length {} for a {}-dimensional codebook",
            z.len(),
            cb.dim
        )));
    }
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, entry) in cb.entries.iter().enumerate() {
        let d = z
            .iter()
            .zip(entry)
            .map(|(a, b)| {
                let diff = a - b;
                diff * diff
            })
            .fold(0.0, |acc, v| acc + v);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    Ok((best, &cb.entries[best]))
}

/// Distinct codes used divided by the codebook size.
pub fn vq_utilization<I: IntoIterator<Item = usize>>(codes: I, cb: &VqCodebook) -> f64 {
    let used: HashSet<usize> = codes.into_iter().filter(|&c| c < cb.len()).collect();
    used.len() as f64 / cb.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fsq_examples() {
        let cfg = FsqConfig::new(vec![5, 3]).unwrap();
        let out = fsq_quantize(&[0.0, 0.0], &cfg).unwrap();
        assert_eq!(out.values, vec![0.0, 0.0]);
        assert_eq!(out.codes, vec![2, 1]);
        let cfg = FsqConfig::new(vec![3]).unwrap();
        let out = fsq_quantize(&[0.9], &cfg).unwrap();
        assert_eq!(out.values, vec![1.0]);
        assert_eq!(out.codes, vec![2]);
        assert!(matches!(fsq_quantize(&[1.2], &cfg), Err(Error::Domain { .. })));
        assert!(FsqConfig::new(vec![1]).is_err());
    }

    #[test]
    fn fsq_even_levels_use_half_integers() {
        let cfg = FsqConfig::new(vec![4]).unwrap();
        let values: Vec<f64> = (0..4).map(|c| cfg.level_value(0, c)).collect();
        assert_eq!(values, vec![-1.5, -0.5, 0.5, 1.5]);
        // Bounded 0.0 is equidistant from -0.5 and 0.5: lower level wins.
        assert_eq!(fsq_quantize(&[0.0], &cfg).unwrap().codes, vec![1]);
    }

    #[test]
    fn vq_examples() {
        let cb = VqCodebook::new(vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(vq_quantize(&[0.4, 0.4], &cb).unwrap().0, 0);
        assert_eq!(vq_quantize(&[0.5, 0.5], &cb).unwrap().0, 0);
        assert_eq!(vq_quantize(&[1.0, 1.0], &cb).unwrap(), (1, &[1.0, 1.0][..]));
        assert!(VqCodebook::new(vec![]).is_err());
        assert!(VqCodebook::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn vq_utilization_examples() {
        let cb = VqCodebook::new((0..8).map(|i| vec![i as f64]).collect()).unwrap();
        assert_eq!(vq_utilization(vec![3; 100], &cb), 1.0 / 8.0);
        assert_eq!(vq_utilization(0..8, &cb), 1.0);
        assert_eq!(vq_utilization(Vec::new(), &cb), 0.0);
    }
}
