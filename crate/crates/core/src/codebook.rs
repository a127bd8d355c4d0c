//! Implicit product codebook: per-pair radices, mixed-radix global codes and bitrate.
//!
//! A pair's radix is the realized point count of its grid. For rhombic grids that is
//! `2 * lx * ly`, twice the nominal `lx * ly` product, because the midpoint lattice
//! carries its own indices.

use crate::error::{Error, Result};
use crate::grid::PairGrid;
use crate::quantizer::QuantizerConfig;

pub fn pair_size(grid: &PairGrid) -> u64 {
    grid.len() as u64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodebookLayout {
    pair_sizes: Vec<u64>,
    /// Mixed-radix place values: `place[0] = 1`, `place[j] = place[j-1] * pair_sizes[j-1]`.
    places: Vec<u128>,
    total_size: u128,
}

impl CodebookLayout {
    pub fn from_pair_sizes(pair_sizes: Vec<u64>) -> Result<Self> {
        if pair_sizes.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        let mut places = Vec::with_capacity(pair_sizes.len());
        let mut acc: u128 = 1;
        for &size in &pair_sizes {
            if size == 0 {
                return Err(Error::ConfigMismatch("pair size must be positive".into()));
            }
            places.push(acc);
            acc = acc.checked_mul(size as u128).ok_or(Error::CodebookOverflow)?;
        }
        Ok(CodebookLayout { pair_sizes, places, total_size: acc })
    }

    pub fn from_config(config: &QuantizerConfig) -> Result<Self> {
        Self::from_pair_sizes(config.grids().iter().map(pair_size).collect())
    }

    pub fn pair_sizes(&self) -> &[u64] {
        &self.pair_sizes
    }

    pub fn places(&self) -> &[u128] {
        &self.places
    }

    pub fn pairs(&self) -> usize {
        self.pair_sizes.len()
    }

    /// `|C| = prod_j L_j`.
    pub fn total_size(&self) -> u128 {
        self.total_size
    }

    pub fn check_pair_codes(&self, codes: &[u32]) -> Result<()> {
        if codes.len() != self.pairs() {
            return Err(Error::ConfigMismatch(format!(
                "{} pair codes for a {}-pair codebook",
                codes.len(),
                self.pairs()
            )));
        }
        for (pair, (&code, &radix)) in codes.iter().zip(&self.pair_sizes).enumerate() {
            if code as u64 >= radix {
                return Err(Error::InvalidCode { pair, code: code as u64, radix });
            }
        }
        Ok(())
    }

    pub fn encode_global(&self, codes: &[u32]) -> Result<u128> {
        self.check_pair_codes(codes)?;
        Ok(codes.iter().zip(&self.places).map(|(&c, &p)| c as u128 * p).sum())
    }

    pub fn decode_global(&self, code: u128) -> Result<Vec<u32>> {
        if code >= self.total_size {
            return Err(Error::InvalidGlobalCode { code, size: self.total_size });
        }
        let mut rest = code;
        Ok(self
            .pair_sizes
            .iter()
            .map(|&radix| {
                let digit = rest % radix as u128;
                rest /= radix as u128;
                digit as u32
            })
            .collect())
    }

    pub fn frame(&self, codes: &[u32]) -> Result<TokenFrame> {
        Ok(TokenFrame { global_code: self.encode_global(codes)?, pair_codes: codes.to_vec() })
    }

    /// `log2 |C|`, summed per pair so it never overflows.
    pub fn bits_per_token(&self) -> f64 {
        self.pair_sizes.iter().map(|&s| (s as f64).log2()).sum()
    }

    /// Raw bitrate in bits per second.
    pub fn bandwidth(&self, tokens_per_second: f64) -> Result<f64> {
        if !(tokens_per_second > 0.0 && tokens_per_second.is_finite()) {
            return Err(Error::ConfigMismatch(format!("tokens per second must be positive, got {tokens_per_second}")));
        }
        Ok(tokens_per_second * self.bits_per_token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenFrame {
    pub pair_codes: Vec<u32>,
    pub global_code: u128,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TilingKind;

    fn layout(kind: TilingKind, levels: &[usize]) -> CodebookLayout {
        CodebookLayout::from_config(&QuantizerConfig::uniform(kind, levels.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn pair_sizes_by_kind() {
        assert_eq!(layout(TilingKind::Rectangle, &[7, 7]).pair_sizes(), &[49]);
        assert_eq!(layout(TilingKind::Hexagon, &[2, 2]).pair_sizes(), &[4]);
        assert_eq!(layout(TilingKind::Rhombic, &[7, 7]).pair_sizes(), &[98]);
    }

    #[test]
    fn total_sizes() {
        assert_eq!(layout(TilingKind::Rectangle, &[7; 6]).total_size(), 117_649);
        assert_eq!(layout(TilingKind::Rectangle, &[9, 9, 9, 9, 7, 7]).total_size(), 321_489);
        assert_eq!(layout(TilingKind::Rectangle, &[5, 3]).total_size(), 15);
    }

    #[test]
    fn places_are_cumulative() {
        let l = CodebookLayout::from_pair_sizes(vec![4, 9, 98]).unwrap();
        assert_eq!(l.places(), &[1, 4, 36]);
        assert_eq!(l.total_size(), 4 * 9 * 98);
    }

    #[test]
    fn encode_decode_extremes() {
        let l = CodebookLayout::from_pair_sizes(vec![49, 98, 81]).unwrap();
        assert_eq!(l.encode_global(&[0, 0, 0]).unwrap(), 0);
        assert_eq!(l.encode_global(&[48, 97, 80]).unwrap(), l.total_size() - 1);
        assert_eq!(l.decode_global(l.total_size() - 1).unwrap(), vec![48, 97, 80]);
        assert_eq!(l.encode_global(&[49, 0, 0]), Err(Error::InvalidCode { pair: 0, code: 49, radix: 49 }));
        assert!(matches!(l.decode_global(l.total_size()), Err(Error::InvalidGlobalCode { .. })));
        assert!(matches!(l.encode_global(&[0, 0]), Err(Error::ConfigMismatch(_))));
    }

    #[test]
    fn bitrate() {
        let l = layout(TilingKind::Rectangle, &[7; 6]);
        let bits = l.bits_per_token();
        assert!((bits - 117_649f64.log2()).abs() < 1e-12);
        assert!((bits - 16.844).abs() < 1e-3);
        let bw = l.bandwidth(75.0).unwrap();
        assert!((bw - 1263.3).abs() < 0.1, "{bw}");
        assert_eq!(CodebookLayout::from_pair_sizes(vec![2]).unwrap().bits_per_token(), 1.0);
        assert!(l.bandwidth(0.0).is_err());
    }

    #[test]
    fn overflow_is_reported() {
        assert_eq!(CodebookLayout::from_pair_sizes(vec![u64::MAX, u64::MAX, 2]), Err(Error::CodebookOverflow));
    }
}
