//! The pairwise quantizer: bound, pair, snap each pair to its grid, and back.
//!
//! Indexing is 0-based throughout: pair `j` holds latent entries `2j` (grid x axis) and
//! `2j + 1` (grid y axis), i.e. the 1-based pair `(2j-1, 2j)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{build_grid, check_levels, GridPoint, PairGrid, PairGridSpec, TilingKind};
use crate::nearest;

/// Slack allowed on the `[-1, 1]` latent domain and the bounded ranges.
pub const DOMAIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NearestSearch {
    /// Exhaustive scan over every grid point.
    BruteForce,
    /// Candidate lookup from per-axis index arithmetic; agrees with brute force exactly.
    #[default]
    Fast,
}

/// Full quantizer description. Immutable once built; clones share the grids.
#[derive(Debug, Clone)]
pub struct QuantizerConfig {
    levels: Vec<usize>,
    tilings: Vec<TilingKind>,
    grids: Arc<[PairGrid]>,
    search: NearestSearch,
}

impl PartialEq for QuantizerConfig {
    fn eq(&self, other: &Self) -> bool {
        self.levels == other.levels && self.tilings == other.tilings
    }
}

impl QuantizerConfig {
    /// `levels` has one entry per latent dimension; `tilings` one entry per pair.
    pub fn new(levels: Vec<usize>, tilings: Vec<TilingKind>) -> Result<Self> {
        let d = levels.len();
        if d < 2 || !d.is_multiple_of(2) {
            return Err(Error::InvalidDimension(d));
        }
        if tilings.len() != d / 2 {
            return Err(Error::ConfigMismatch(format!("{} tilings given for {} pairs", tilings.len(), d / 2)));
        }
        for &l in &levels {
            check_levels(l)?;
        }
        let grids = tilings
            .iter()
            .enumerate()
            .map(|(j, &kind)| build_grid(PairGridSpec::from_levels(kind, levels[2 * j], levels[2 * j + 1])?))
            .collect::<Result<Vec<_>>>()?;
        Ok(QuantizerConfig { levels, tilings, grids: grids.into(), search: NearestSearch::default() })
    }

    /// Same tiling on every pair.
    pub fn uniform(kind: TilingKind, levels: Vec<usize>) -> Result<Self> {
        let pairs = levels.len() / 2;
        Self::new(levels, vec![kind; pairs])
    }

    pub fn with_search(mut self, search: NearestSearch) -> Self {
        self.search = search;
        self
    }

    pub fn search(&self) -> NearestSearch {
        self.search
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn pairs(&self) -> usize {
        self.levels.len() / 2
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn tilings(&self) -> &[TilingKind] {
        &self.tilings
    }

    pub fn grids(&self) -> &[PairGrid] {
        &self.grids
    }

    pub fn grid(&self, pair: usize) -> &PairGrid {
        &self.grids[pair]
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::ConfigMismatch(format!("vector of length {len} for a d={} quantizer", self.dim())));
        }
        Ok(())
    }

    /// Validates a latent vector against `[-1, 1]^d`.
    pub fn check_latent(&self, z: &[f64]) -> Result<()> {
        self.check_len(z.len())?;
        check_unit_range(z)
    }

    /// Scales each entry by `l_i / 2`.
    pub fn bound(&self, z: &[f64]) -> Result<BoundedVector> {
        self.check_latent(z)?;
        Ok(BoundedVector { values: z.iter().zip(&self.levels).map(|(&v, &l)| v * half_level(l)).collect() })
    }

    /// Inverse of [`bound`](Self::bound): `values[i] / (l_i / 2)`.
    ///
    /// Snapped points of hexagon and rhombic grids may land a rounding error outside
    /// `[-1, 1]`; that is allowed.
    pub fn unbound(&self, values: &[f64]) -> Vec<f64> {
        values.iter().zip(&self.levels).map(|(&v, &l)| v / half_level(l)).collect()
    }

    /// Nearest point of pair `j`'s grid.
    #[inline]
    pub fn quantize_pair(&self, pair: usize, p: (f64, f64)) -> (usize, GridPoint) {
        quantize_pair_with(&self.grids[pair], p, self.search)
    }

    pub fn quantize(&self, z: &[f64]) -> Result<QuantizedVector> {
        let bounded = self.bound(z)?;
        Ok(self.quantize_bounded(&bounded))
    }

    /// Snaps an already bounded vector. Length must equal `d`.
    pub fn quantize_bounded(&self, bounded: &BoundedVector) -> QuantizedVector {
        debug_assert_eq!(bounded.values.len(), self.dim());
        let mut values = Vec::with_capacity(self.dim());
        let mut pair_codes = Vec::with_capacity(self.pairs());
        for (j, p) in pairs_of(&bounded.values).enumerate() {
            let (code, point) = self.quantize_pair(j, p);
            pair_codes.push(code as u32);
            values.push(point.x);
            values.push(point.y);
        }
        QuantizedVector { values, pair_codes }
    }

    /// Grid-point lookup from pair codes.
    pub fn dequantize(&self, codes: &[u32]) -> Result<QuantizedVector> {
        if codes.len() != self.pairs() {
            return Err(Error::ConfigMismatch(format!(
                "{} pair codes for a {}-pair quantizer",
                codes.len(),
                self.pairs()
            )));
        }
        let mut values = Vec::with_capacity(self.dim());
        for (j, &code) in codes.iter().enumerate() {
            let grid = &self.grids[j];
            let point = grid.point(code as usize).ok_or(Error::InvalidCode {
                pair: j,
                code: code as u64,
                radix: grid.len() as u64,
            })?;
            values.push(point.x);
            values.push(point.y);
        }
        Ok(QuantizedVector { values, pair_codes: codes.to_vec() })
    }

    /// Forward quantization plus the straight-through backward pass.
    ///
    /// `upstream_grad` is the gradient with respect to the snapped (bounded-space) values.
    /// The snap contributes an identity Jacobian; the bounding scale is differentiated,
    /// so the gradient with respect to `z` is `upstream_grad[i] * l_i / 2`.
    pub fn ste_forward_backward(&self, z: &[f64], upstream_grad: &[f64]) -> Result<SteOutput> {
        self.check_len(upstream_grad.len())?;
        let quantized = self.quantize(z)?;
        let grad_bounded = ste_snap_backward(upstream_grad);
        let grad_latent = self.bound_backward(&grad_bounded);
        Ok(SteOutput { quantized, grad_bounded, grad_latent })
    }

    /// Vector-Jacobian product of [`bound`](Self::bound).
    pub fn bound_backward(&self, grad: &[f64]) -> Vec<f64> {
        grad.iter().zip(&self.levels).map(|(&g, &l)| g * half_level(l)).collect()
    }

    /// Vector-Jacobian product of [`unbound`](Self::unbound).
    pub fn unbound_backward(&self, grad: &[f64]) -> Vec<f64> {
        self.unbound(grad)
    }

    /// Batch quantization, data-parallel when the `parallel` feature is on.
    pub fn quantize_batch(&self, frames: &[Vec<f64>]) -> Result<Vec<QuantizedVector>> {
        crate::par::map_collect(frames, |z| self.quantize(z))
    }

    /// Batch quantization on the calling thread only.
    pub fn quantize_batch_sequential(&self, frames: &[Vec<f64>]) -> Result<Vec<QuantizedVector>> {
        frames.iter().map(|z| self.quantize(z)).collect()
    }
}

#[inline]
fn half_level(l: usize) -> f64 {
    l as f64 / 2.0
}

pub(crate) fn check_unit_range(z: &[f64]) -> Result<()> {
    for (index, &value) in z.iter().enumerate() {
        // Negated so NaN is rejected too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        let outside = !(value.abs() <= 1.0 + DOMAIN_TOLERANCE);
        if outside {
            return Err(Error::Domain { index, value });
        }
    }
    Ok(())
}

#[inline]
pub fn quantize_pair_with(grid: &PairGrid, p: (f64, f64), search: NearestSearch) -> (usize, GridPoint) {
    let (index, _) = match search {
        NearestSearch::BruteForce => nearest::brute_force(grid, p.0, p.1),
        NearestSearch::Fast => nearest::fast(grid, p.0, p.1),
    };
    (index, grid.points()[index])
}

/// The straight-through rule: the snap passes gradients unchanged.
#[inline]
pub fn ste_snap_backward(upstream: &[f64]) -> Vec<f64> {
    upstream.to_vec()
}

/// Adjacent-element pairing of an even-length vector.
pub fn pair(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() || !values.len().is_multiple_of(2) {
        return Err(Error::InvalidDimension(values.len()));
    }
    Ok(pairs_of(values).collect())
}

fn pairs_of(values: &[f64]) -> impl Iterator<Item = (f64, f64)> + '_ {
    values.chunks_exact(2).map(|c| (c[0], c[1]))
}

/// A validated latent frame in `[-1, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentVector(Vec<f64>);

impl LatentVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_unit_range(&values)?;
        Ok(LatentVector(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for LatentVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundedVector {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedVector {
    /// Concatenated coordinates of the chosen grid points, in bounded space.
    pub values: Vec<f64>,
    pub pair_codes: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteOutput {
    pub quantized: QuantizedVector,
    /// Gradient with respect to the bounded (pre-snap) values.
    pub grad_bounded: Vec<f64>,
    /// Gradient with respect to the latent input `z`.
    pub grad_latent: Vec<f64>,
}
