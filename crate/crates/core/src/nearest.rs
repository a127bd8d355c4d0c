//! Nearest grid point search.
//!
//! [`brute_force`] is the reference: exhaustive scan, lowest canonical index wins ties.
//! [`fast`] evaluates a handful of candidates derived from per-axis index arithmetic and
//! must return exactly what [`brute_force`] returns. Both paths rank points with the same
//! [`squared_distance`] expression and the same `(distance, index)` order, so agreement is
//! exact whenever the true winner is among the candidates. Points further than one
//! spacing outside the grid's bounding box go straight to the exhaustive scan.

use crate::grid::{hexagon_row_offset, GridPoint, PairGrid, TilingKind};

#[inline(always)]
pub fn squared_distance(px: f64, py: f64, g: GridPoint) -> f64 {
    let dx = px - g.x;
    let dy = py - g.y;
    dx * dx + dy * dy
}

/// Exhaustive minimum-distance search. Returns `(index, squared distance)`.
pub fn brute_force(grid: &PairGrid, px: f64, py: f64) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &g) in grid.points().iter().enumerate() {
        let d = squared_distance(px, py, g);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    (best, best_d)
}

#[derive(Default)]
struct Candidates {
    best: usize,
    best_d: f64,
    seen: bool,
}

impl Candidates {
    #[inline(always)]
    fn offer(&mut self, grid: &PairGrid, index: usize, px: f64, py: f64) {
        let d = squared_distance(px, py, grid.points()[index]);
        if !self.seen || d < self.best_d || (d == self.best_d && index < self.best) {
            self.best = index;
            self.best_d = d;
            self.seen = true;
        }
    }
}

/// Lower index of the bracketing pair of levels around continuous index `t`, clamped so
/// that both `i` and `i + 1` are valid for `levels` entries.
#[inline(always)]
fn bracket(t: f64, levels: usize) -> usize {
    let hi = (levels - 2) as f64;
    t.floor().clamp(0.0, hi) as usize
}

/// Accelerated search; identical output to [`brute_force`].
pub fn fast(grid: &PairGrid, px: f64, py: f64) -> (usize, f64) {
    let spec = grid.spec();
    let lat = grid.lattice();
    let (x0, x1, y0, y1) = grid.bounds();
    if !(px >= x0 - lat.dx && px <= x1 + lat.dx && py >= y0 - lat.dy && py <= y1 + lat.dy) {
        return brute_force(grid, px, py);
    }
    let (lx, ly) = (spec.lx, spec.ly);
    let mut c = Candidates::default();
    match spec.kind {
        TilingKind::Rectangle => {
            offer_rect(&mut c, grid, 0, lx, ly, px, py, (px / lat.dx) + lat.half_x, (py / lat.dy) + lat.half_y);
        }
        TilingKind::Rhombic => {
            offer_rect(&mut c, grid, 0, lx, ly, px, py, (px / lat.dx) + lat.half_x, (py / lat.dy) + lat.half_y);
            let tx = ((px - lat.dx / 2.0) / lat.dx) + lat.half_x;
            let ty = ((py - lat.dy / 2.0) / lat.dy) + lat.half_y;
            offer_rect(&mut c, grid, lx * ly, lx, ly, px, py, tx, ty);
        }
        TilingKind::Hexagon => {
            let l = lx;
            let r = bracket((py / lat.dy) + lat.half_y, l);
            let lo = r.saturating_sub(1);
            let hi = (r + 2).min(l - 1);
            for row in lo..=hi {
                let off = hexagon_row_offset(row, lat.dx);
                let ix = bracket(((px - off) / lat.dx) + lat.half_x, l);
                c.offer(grid, row * l + ix, px, py);
                c.offer(grid, row * l + ix + 1, px, py);
            }
        }
    }
    (c.best, c.best_d)
}

#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn offer_rect(
    c: &mut Candidates,
    grid: &PairGrid,
    base: usize,
    lx: usize,
    ly: usize,
    px: f64,
    py: f64,
    tx: f64,
    ty: f64,
) {
    let ix = bracket(tx, lx);
    let iy = bracket(ty, ly);
    for row in iy..=iy + 1 {
        for col in ix..=ix + 1 {
            c.offer(grid, base + row * lx + col, px, py);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, PairGridSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fast_agrees_with_brute_force_including_far_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in TilingKind::ALL {
            for l in [2, 3, 4, 7, 10] {
                let grid = build_grid(PairGridSpec::from_levels(kind, l, l).unwrap()).unwrap();
                let reach = l as f64 * 2.0;
                for _ in 0..2000 {
                    let px = rng.random_range(-reach..reach);
                    let py = rng.random_range(-reach..reach);
                    assert_eq!(fast(&grid, px, py), brute_force(&grid, px, py), "{kind:?} l={l} ({px},{py})");
                }
            }
        }
    }

    #[test]
    fn exact_ties_take_lowest_index() {
        let grid = build_grid(PairGridSpec::from_levels(TilingKind::Rectangle, 3, 3).unwrap()).unwrap();
        // Halfway between (-1,-1) [0] and (0,-1) [1].
        assert_eq!(brute_force(&grid, -0.5, -1.0).0, 0);
        assert_eq!(fast(&grid, -0.5, -1.0).0, 0);
        // Centre of four points: lowest is (-1,-1).
        assert_eq!(fast(&grid, -0.5, -0.5).0, 0);
        assert_eq!(brute_force(&grid, 0.5, 0.5).0, 4);
        assert_eq!(fast(&grid, 0.5, 0.5).0, 4);
    }
}
