//! Uniform 1D grids, sampled scalar fields and cubic interpolation.

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// Smallest number of intervals a grid may have.
pub const MIN_INTERVALS: usize = 8;

/// Uniform grid on `[x_min, x_max]` with `n` intervals.
///
/// Node `i` sits at `x_min + i * dx` for `i = 0..=n`. Subgrids inherit `dx`
/// bit-for-bit so that index shifts never perturb stencil weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self, GeometryError> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(GeometryError::InvalidGrid(format!(
                "need finite x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n < MIN_INTERVALS {
            return Err(GeometryError::InvalidGrid(format!(
                "need at least {MIN_INTERVALS} intervals, got {n}"
            )));
        }
        let dx = (x_max - x_min) / n as f64;
        Ok(Self { x_min, x_max, n, dx })
    }

    /// Grid with spacing `dx` starting at `x_min`; `n` is rounded from the span.
    pub fn with_spacing(x_min: f64, x_max: f64, dx: f64) -> Result<Self, GeometryError> {
        if !(dx > 0.0) {
            return Err(GeometryError::InvalidGrid(format!("dx must be positive, got {dx}")));
        }
        let n = ((x_max - x_min) / dx).round();
        if !(n >= 1.0) {
            return Err(GeometryError::InvalidGrid(format!(
                "span [{x_min}, {x_max}] holds no interval of size {dx}"
            )));
        }
        Self::new(x_min, x_max, n as usize)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// Number of intervals.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(move |i| self.x(i))
    }

    /// Subgrid spanning nodes `i0..=i1`, sharing this grid's `dx`.
    pub fn subgrid(&self, i0: usize, i1: usize) -> Result<Self, GeometryError> {
        if i1 > self.n || i1 < i0 + MIN_INTERVALS {
            return Err(GeometryError::EmptyDomain(format!(
                "subgrid nodes {i0}..={i1} of a grid with {} intervals",
                self.n
            )));
        }
        Ok(Self {
            x_min: self.x(i0),
            x_max: self.x(i1),
            n: i1 - i0,
            dx: self.dx,
        })
    }

    /// Same node spacing, translated by `-offset` (node values move with it).
    pub fn translated(&self, offset: f64) -> Self {
        Self {
            x_min: self.x_min + offset,
            x_max: self.x_max + offset,
            n: self.n,
            dx: self.dx,
        }
    }

    /// Mirror image `[-x_max, -x_min]`.
    pub fn reflected(&self) -> Self {
        Self {
            x_min: -self.x_max,
            x_max: -self.x_min,
            n: self.n,
            dx: self.dx,
        }
    }

    /// Index `k` if `a` is an integer multiple `k * dx` (up to rounding).
    pub fn aligned_offset(&self, a: f64) -> Option<isize> {
        let k = (a / self.dx).round();
        ((a - k * self.dx).abs() <= 1e-9 * self.dx).then_some(k as isize)
    }

    /// Indices of nodes with `x_a <= x <= x_b` (closed, rounding-tolerant).
    pub fn window_indices(&self, x_a: f64, x_b: f64) -> std::ops::RangeInclusive<usize> {
        let eps = 1e-9 * self.dx;
        let lo = ((x_a - self.x_min - eps) / self.dx).ceil().max(0.0) as usize;
        let hi_f = ((x_b - self.x_min + eps) / self.dx).floor();
        let hi = if hi_f < 0.0 { 0 } else { (hi_f as usize).min(self.n) };
        if hi_f < 0.0 || lo > hi {
            // empty range
            #[allow(clippy::reversed_empty_ranges)]
            return 1..=0;
        }
        lo..=hi
    }

    /// Node index nearest to `x` when `x` lies on a node (within 1e-9 dx).
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let s = (x - self.x_min) / self.dx;
        let k = s.round();
        ((s - k).abs() < 1e-9 && k >= 0.0 && k <= self.n as f64).then_some(k as usize)
    }
}

/// Samples of a real function on every node of a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid1D,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self, GeometryError> {
        if values.len() != grid.len() {
            return Err(GeometryError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite { index: i, value: values[i] });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self, GeometryError> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Values between nodes `i0..=i1` on the matching subgrid.
    pub fn restrict(&self, i0: usize, i1: usize) -> Result<Self, GeometryError> {
        let grid = self.grid.subgrid(i0, i1)?;
        Ok(Self { grid, values: self.values[i0..=i1].to_vec() })
    }

    /// Cubic four-point Lagrange interpolation at `x`.
    ///
    /// `x` must lie in `[x_min + dx, x_max - dx]`. Exact on cubics and at nodes.
    pub fn interpolate(&self, x: f64) -> Result<f64, GeometryError> {
        let g = &self.grid;
        let lo = g.x_min + g.dx;
        let hi = g.x_max - g.dx;
        let slack = 1e-9 * g.dx;
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(GeometryError::OutOfRange { x, lo, hi });
        }
        let s = (x - g.x_min) / g.dx;
        let nearest = s.round();
        if (s - nearest).abs() < 1e-12 {
            return Ok(self.values[nearest as usize]);
        }
        // stencil j-1, j, j+1, j+2 around the cell [x_j, x_{j+1}]
        let j = (s.floor() as usize).clamp(1, g.n - 2);
        let r = s - j as f64;
        let f = &self.values;
        let w_m1 = -r * (r - 1.0) * (r - 2.0) / 6.0;
        let w_0 = (r + 1.0) * (r - 1.0) * (r - 2.0) / 2.0;
        let w_p1 = -(r + 1.0) * r * (r - 2.0) / 2.0;
        let w_p2 = (r + 1.0) * r * (r - 1.0) / 6.0;
        Ok(w_m1 * f[j - 1] + w_0 * f[j] + w_p1 * f[j + 1] + w_p2 * f[j + 2])
    }
}
