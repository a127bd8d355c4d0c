//! Quantization distortion and packing efficiency.
//!
//! Packing efficiency is reported as a normalized second moment:
//!
//! ```text
//! NSM = E[|p - q(p)|^2] * (points / region_area)
//! ```
//!
//! for `p` uniform over the region. Lower is better. Infinite square lattices give
//! `1/6`, the hexagonal lattice `5 / (18 sqrt 3) ~= 0.1604`. The default region is the
//! bounding box of the grid widened by half a spacing on every side, which for a
//! rectangle grid is exactly the union of its cells.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::PairGrid;
use crate::quantizer::{quantize_pair_with, NearestSearch, QuantizerConfig};

/// Samples per Monte Carlo work unit. Each unit owns its own RNG stream, so results do
/// not depend on how units are scheduled across threads.
const CHUNK: usize = 1 << 14;

pub const SQUARE_LATTICE_NSM: f64 = 1.0 / 6.0;

pub fn hexagonal_lattice_nsm() -> f64 {
    5.0 / (18.0 * 3f64.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Region {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let region = Region { x0, x1, y0, y1 };
        if !(region.area() > 0.0 && region.area().is_finite()) {
            return Err(Error::DegenerateRegion(format!("{region:?}")));
        }
        Ok(region)
    }

    /// Bounding box of the grid widened by half the lattice spacing per axis.
    pub fn covering(grid: &PairGrid) -> Self {
        let (x0, x1, y0, y1) = grid.bounds();
        let lat = grid.lattice();
        Region { x0: x0 - lat.dx / 2.0, x1: x1 + lat.dx / 2.0, y0: y0 - lat.dy / 2.0, y1: y1 + lat.dy / 2.0 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    #[inline]
    fn sample(&self, rng: &mut impl Rng) -> (f64, f64) {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        (self.x0 + (self.x1 - self.x0) * u, self.y0 + (self.y1 - self.y0) * v)
    }
}

/// Deterministic Monte Carlo mean of `f(sample)` over `samples` draws.
pub fn monte_carlo_mean<S, F>(samples: usize, seed: u64, sampler: S, f: F) -> f64
where
    S: Fn(&mut ChaCha8Rng) -> (f64, f64) + Sync + Send,
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    let units = samples.div_ceil(CHUNK);
    let partial = crate::par::map_indices(units, |unit| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(unit as u64);
        let n = CHUNK.min(samples - unit * CHUNK);
        let mut acc = 0.0;
        for _ in 0..n {
            let (x, y) = sampler(&mut rng);
            acc += f(x, y);
        }
        acc
    });
    partial.iter().sum::<f64>() / samples as f64
}

/// Mean squared snap error of `grid` under the given sampler.
pub fn monte_carlo_mse<S>(grid: &PairGrid, samples: usize, seed: u64, sampler: S) -> f64
where
    S: Fn(&mut ChaCha8Rng) -> (f64, f64) + Sync + Send,
{
    monte_carlo_mean(samples, seed, sampler, |x, y| {
        let (_, q) = quantize_pair_with(grid, (x, y), NearestSearch::Fast);
        let (ex, ey) = (x - q.x, y - q.y);
        ex * ex + ey * ey
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PackingReport {
    /// Area-normalized second moment; lower is better.
    pub normalized_second_moment: f64,
    /// Raw mean squared error (both axes summed).
    pub mse: f64,
    pub region: Region,
    pub points: usize,
    pub samples: usize,
}

pub const MIN_PACKING_SAMPLES: usize = 10_000;

pub fn packing_efficiency(grid: &PairGrid, samples: usize, seed: u64) -> Result<PackingReport> {
    packing_efficiency_in(grid, Region::covering(grid), samples, seed)
}

pub fn packing_efficiency_in(grid: &PairGrid, region: Region, samples: usize, seed: u64) -> Result<PackingReport> {
    let region = Region::new(region.x0, region.x1, region.y0, region.y1)?;
    if samples < MIN_PACKING_SAMPLES {
        return Err(Error::Estimation(format!(
            "packing efficiency needs at least {MIN_PACKING_SAMPLES} samples, got {samples}"
        )));
    }
    let mse = monte_carlo_mse(grid, samples, seed, |rng| region.sample(rng));
    Ok(PackingReport {
        normalized_second_moment: mse * grid.len() as f64 / region.area(),
        mse,
        region,
        points: grid.len(),
        samples,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseReport {
    /// Mean of `|z''_j - q(z''_j)|^2` per pair, in bounded space.
    pub per_pair_bounded: Vec<f64>,
    /// Sum of `per_pair_bounded`: the mean squared norm of the whole-frame error.
    pub total_bounded: f64,
    /// Same quantities after unbounding back to the `[-1, 1]` latent scale.
    pub per_pair_latent: Vec<f64>,
    pub total_latent: f64,
    pub frames: usize,
}

/// Mean squared quantization error of a latent stream.
pub fn quantization_mse(latents: &[Vec<f64>], config: &QuantizerConfig) -> Result<MseReport> {
    if latents.is_empty() {
        return Err(Error::Estimation("empty latent stream".into()));
    }
    let pairs = config.pairs();
    let chunks: Vec<&[Vec<f64>]> = latents.chunks(CHUNK).collect();
    let partials = crate::par::map_collect(&chunks, |chunk| {
        let mut bounded = vec![0.0; pairs];
        let mut latent = vec![0.0; pairs];
        for z in chunk.iter() {
            let b = config.bound(z)?;
            let q = config.quantize_bounded(&b);
            let zu = config.unbound(&b.values);
            let qu = config.unbound(&q.values);
            for j in 0..pairs {
                bounded[j] += sq(b.values[2 * j] - q.values[2 * j]) + sq(b.values[2 * j + 1] - q.values[2 * j + 1]);
                latent[j] += sq(zu[2 * j] - qu[2 * j]) + sq(zu[2 * j + 1] - qu[2 * j + 1]);
            }
        }
        Ok::<_, Error>((bounded, latent))
    })?;
    let n = latents.len() as f64;
    let mut per_pair_bounded = vec![0.0; pairs];
    let mut per_pair_latent = vec![0.0; pairs];
    for (b, l) in &partials {
        for j in 0..pairs {
            per_pair_bounded[j] += b[j];
            per_pair_latent[j] += l[j];
        }
    }
    per_pair_bounded.iter_mut().for_each(|v| *v /= n);
    per_pair_latent.iter_mut().for_each(|v| *v /= n);
    Ok(MseReport {
        total_bounded: per_pair_bounded.iter().sum(),
        total_latent: per_pair_latent.iter().sum(),
        per_pair_bounded,
        per_pair_latent,
        frames: latents.len(),
    })
}

#[inline]
fn sq(v: f64) -> f64 {
    v * v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, PairGridSpec, TilingKind};

    fn grid(kind: TilingKind, lx: usize, ly: usize) -> PairGrid {
        build_grid(PairGridSpec::from_levels(kind, lx, ly).unwrap()).unwrap()
    }

    #[test]
    fn grid_points_have_zero_mse() {
        let cfg = QuantizerConfig::uniform(TilingKind::Rhombic, vec![7, 5]).unwrap();
        let latents: Vec<Vec<f64>> = cfg.grid(0).points().iter().map(|p| cfg.unbound(&[p.x, p.y])).collect();
        let r = quantization_mse(&latents, &cfg).unwrap();
        assert!(r.total_bounded < 1e-24, "{}", r.total_bounded);
        assert!(quantization_mse(&[], &cfg).is_err());
    }

    #[test]
    fn uniform_cell_noise_is_one_twelfth_per_axis() {
        // Samples uniform on the unit cell around the origin of a unit-spaced grid.
        let g = grid(TilingKind::Rectangle, 7, 7);
        let mse = monte_carlo_mse(&g, 400_000, 3, |rng| (rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        assert!((mse - 2.0 / 12.0).abs() < 2e-3, "{mse}");
    }

    #[test]
    fn covering_region_of_rectangle() {
        let g = grid(TilingKind::Rectangle, 7, 5);
        assert_eq!(Region::covering(&g), Region { x0: -3.5, x1: 3.5, y0: -2.5, y1: 2.5 });
    }

    #[test]
    fn packing_argument_checks() {
        let g = grid(TilingKind::Rectangle, 3, 3);
        assert!(matches!(packing_efficiency(&g, 10, 0), Err(Error::Estimation(_))));
        let flat = Region { x0: 0.0, x1: 1.0, y0: 0.0, y1: 0.0 };
        assert!(matches!(packing_efficiency_in(&g, flat, 20_000, 0), Err(Error::DegenerateRegion(_))));
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let g = grid(TilingKind::Hexagon, 11, 11);
        let a = packing_efficiency(&g, 50_000, 9).unwrap();
        let b = packing_efficiency(&g, 50_000, 9).unwrap();
        assert_eq!(a, b);
    }
}
