//! Construction of the three 2D tilings used by the pairwise quantizer.
//!
//! Every grid is an immutable, canonically ordered point list:
//!
//! * `Rectangle`: `lx * ly` points, row-major (outer loop over `y`, inner over `x`).
//! * `Hexagon`: `l * l` points, row-major. Rows are `dy = dx * sqrt(3) / 2` apart and
//!   alternate an x-shift of `+dx/4` (even rows) and `-dx/4` (odd rows), so adjacent
//!   rows are offset by `dx/2` relative to each other.
//! * `Rhombic`: the `lx * ly` base lattice followed by the same lattice translated by
//!   `(dx/2, dy/2)`, `2 * lx * ly` points in total.
//!
//! Coordinates are always computed as `(index - half) * spacing` from exact integer
//! indices so that builds are bit-reproducible and rectangle grids are exactly
//! point-symmetric about the origin.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Smallest accepted level count per axis.
pub const MIN_LEVELS: usize = 2;
/// Largest accepted level count per axis; keeps every pair code within 17 bits.
pub const MAX_LEVELS: usize = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TilingKind {
    Rectangle,
    Hexagon,
    Rhombic,
}

impl TilingKind {
    pub const ALL: [TilingKind; 3] = [TilingKind::Rectangle, TilingKind::Hexagon, TilingKind::Rhombic];

    /// Wire tag used by the token stream header.
    pub fn tag(self) -> u8 {
        match self {
            TilingKind::Rectangle => 0,
            TilingKind::Hexagon => 1,
            TilingKind::Rhombic => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(TilingKind::Rectangle),
            1 => Some(TilingKind::Hexagon),
            2 => Some(TilingKind::Rhombic),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TilingKind::Rectangle => "rect",
            TilingKind::Hexagon => "hex",
            TilingKind::Rhombic => "rhombic",
        }
    }
}

impl fmt::Display for TilingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TilingKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rect" | "rectangle" | "square" => Ok(TilingKind::Rectangle),
            "hex" | "hexagon" | "hexagonal" => Ok(TilingKind::Hexagon),
            "rhombic" | "rhombus" => Ok(TilingKind::Rhombic),
            other => Err(format!("unknown tiling kind `{other}` (expected rect, hex or rhombic)")),
        }
    }
}

/// Spread factor `e = (l - 1) / 2`: with this half-width adjacent levels are one unit apart.
pub fn spread_from_levels(levels: usize) -> Result<f64> {
    check_levels(levels)?;
    Ok((levels - 1) as f64 / 2.0)
}

pub(crate) fn check_levels(levels: usize) -> Result<()> {
    if (MIN_LEVELS..=MAX_LEVELS).contains(&levels) {
        Ok(())
    } else {
        Err(Error::InvalidLevels(levels))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGridSpec {
    pub kind: TilingKind,
    pub lx: usize,
    pub ly: usize,
    pub ex: f64,
    pub ey: f64,
}

impl PairGridSpec {
    /// Spec with spreads derived from the level counts.
    pub fn from_levels(kind: TilingKind, lx: usize, ly: usize) -> Result<Self> {
        let spec = PairGridSpec { kind, lx, ly, ex: spread_from_levels(lx)?, ey: spread_from_levels(ly)? };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_levels(self.lx)?;
        check_levels(self.ly)?;
        let invalid = |reason: &str| Error::InvalidSpec { kind: self.kind, reason: reason.to_string() };
        if !(self.ex.is_finite() && self.ey.is_finite() && self.ex > 0.0 && self.ey > 0.0) {
            return Err(invalid("spread factors must be finite and positive"));
        }
        if self.kind == TilingKind::Hexagon {
            if self.lx != self.ly {
                return Err(invalid("hexagon grids take a single level count (lx must equal ly)"));
            }
            if self.ex != self.ey {
                return Err(invalid("hexagon grids take a single spread factor (ex must equal ey)"));
            }
        }
        Ok(())
    }

    fn expect_kind(&self, kind: TilingKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::InvalidSpec {
                kind: self.kind,
                reason: format!("builder for {kind:?} called with a {:?} spec", self.kind),
            });
        }
        self.validate()
    }

    /// Number of points the realized grid will hold.
    pub fn point_count(&self) -> usize {
        match self.kind {
            TilingKind::Rectangle | TilingKind::Hexagon => self.lx * self.ly,
            TilingKind::Rhombic => 2 * self.lx * self.ly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub x: f64,
    pub y: f64,
}

impl GridPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        GridPoint { x, y }
    }
}

/// Geometry shared by all builders: per-axis spacing and the row layout needed by the
/// accelerated nearest-point search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    /// Horizontal distance between neighbouring points in one row.
    pub dx: f64,
    /// Vertical distance between neighbouring rows.
    pub dy: f64,
    /// `(lx - 1) / 2`, the centring offset in units of `dx`.
    pub half_x: f64,
    /// `(ly - 1) / 2`, the centring offset in units of `dy`.
    pub half_y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairGrid {
    spec: PairGridSpec,
    lattice: Lattice,
    points: Vec<GridPoint>,
    bounds: (f64, f64, f64, f64),
}

impl PairGrid {
    pub fn spec(&self) -> &PairGridSpec {
        &self.spec
    }

    pub fn kind(&self) -> TilingKind {
        self.spec.kind
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn point(&self, index: usize) -> Option<GridPoint> {
        self.points.get(index).copied()
    }

    /// Axis-aligned bounding box of the points as `(min_x, max_x, min_y, max_y)`.
    #[inline]
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.bounds
    }

    fn from_points(spec: PairGridSpec, lattice: Lattice, points: Vec<GridPoint>) -> Self {
        let bounds = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY), |(x0, x1, y0, y1), p| {
                (x0.min(p.x), x1.max(p.x), y0.min(p.y), y1.max(p.y))
            });
        PairGrid { spec, lattice, points, bounds }
    }

    /// Number of distinct y coordinates, optionally restricted to `|y| <= ey`.
    pub fn distinct_y_count(&self, within_spread: bool) -> usize {
        let mut ys: Vec<f64> =
            self.points.iter().map(|p| p.y).filter(|y| !within_spread || y.abs() <= self.spec.ey).collect();
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        ys.len()
    }

    /// CSV dump with the header `index,x,y`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,x,y\n");
        for (i, p) in self.points.iter().enumerate() {
            out.push_str(&format!("{i},{},{}\n", p.x, p.y));
        }
        out
    }

    /// Minimal SVG scatter of the grid, y axis pointing up.
    pub fn to_svg(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let margin = self.lattice.dx.max(self.lattice.dy);
        let scale = 40.0;
        let width = (x1 - x0 + 2.0 * margin) * scale;
        let height = (y1 - y0 + 2.0 * margin) * scale;
        let radius = 0.08 * margin * scale;
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.1}\" height=\"{height:.1}\" viewBox=\"0 0 {width:.1} {height:.1}\">\n"
        );
        out.push_str(&format!(
            "<!-- {} grid, lx={}, ly={}, {} points -->\n",
            self.spec.kind,
            self.spec.lx,
            self.spec.ly,
            self.points.len()
        ));
        for p in &self.points {
            let cx = (p.x - x0 + margin) * scale;
            let cy = (y1 - p.y + margin) * scale;
            out.push_str(&format!("<circle cx=\"{cx:.3}\" cy=\"{cy:.3}\" r=\"{radius:.2}\" />\n"));
        }
        out.push_str("</svg>\n");
        out
    }
}

#[inline]
fn axis_value(index: usize, half: f64, spacing: f64) -> f64 {
    (index as f64 - half) * spacing
}

fn uniform_lattice(spec: &PairGridSpec) -> Lattice {
    Lattice {
        dx: 2.0 * spec.ex / (spec.lx - 1) as f64,
        dy: 2.0 * spec.ey / (spec.ly - 1) as f64,
        half_x: (spec.lx - 1) as f64 / 2.0,
        half_y: (spec.ly - 1) as f64 / 2.0,
    }
}

fn row_major(lattice: &Lattice, lx: usize, ly: usize, shift: (f64, f64), out: &mut Vec<GridPoint>) {
    for iy in 0..ly {
        let y = axis_value(iy, lattice.half_y, lattice.dy) + shift.1;
        for ix in 0..lx {
            out.push(GridPoint::new(axis_value(ix, lattice.half_x, lattice.dx) + shift.0, y));
        }
    }
}

pub fn build_rectangle(spec: PairGridSpec) -> Result<PairGrid> {
    spec.expect_kind(TilingKind::Rectangle)?;
    let lattice = uniform_lattice(&spec);
    let mut points = Vec::with_capacity(spec.lx * spec.ly);
    row_major(&lattice, spec.lx, spec.ly, (0.0, 0.0), &mut points);
    Ok(PairGrid::from_points(spec, lattice, points))
}

/// Horizontal shift applied to hexagon row `row`.
#[inline]
pub fn hexagon_row_offset(row: usize, dx: f64) -> f64 {
    if row % 2 == 1 {
        -dx / 4.0
    } else {
        dx / 4.0
    }
}

pub fn build_hexagon(spec: PairGridSpec) -> Result<PairGrid> {
    spec.expect_kind(TilingKind::Hexagon)?;
    let l = spec.lx;
    let half = (l - 1) as f64 / 2.0;
    let dx = 2.0 * spec.ex / (l - 1) as f64;
    let dy = dx * 3f64.sqrt() / 2.0;
    let lattice = Lattice { dx, dy, half_x: half, half_y: half };
    let mut points = Vec::with_capacity(l * l);
    for row in 0..l {
        let y = axis_value(row, half, dy);
        let offset = hexagon_row_offset(row, dx);
        for ix in 0..l {
            points.push(GridPoint::new(axis_value(ix, half, dx) + offset, y));
        }
    }
    Ok(PairGrid::from_points(spec, lattice, points))
}

pub fn build_rhombic(spec: PairGridSpec) -> Result<PairGrid> {
    spec.expect_kind(TilingKind::Rhombic)?;
    let lattice = uniform_lattice(&spec);
    let mut points = Vec::with_capacity(2 * spec.lx * spec.ly);
    row_major(&lattice, spec.lx, spec.ly, (0.0, 0.0), &mut points);
    let base = points.len();
    let (mx, my) = (lattice.dx / 2.0, lattice.dy / 2.0);
    for i in 0..base {
        let p = points[i];
        points.push(GridPoint::new(p.x + mx, p.y + my));
    }
    Ok(PairGrid::from_points(spec, lattice, points))
}

pub fn build_grid(spec: PairGridSpec) -> Result<PairGrid> {
    match spec.kind {
        TilingKind::Rectangle => build_rectangle(spec),
        TilingKind::Hexagon => build_hexagon(spec),
        TilingKind::Rhombic => build_rhombic(spec),
    }
}
