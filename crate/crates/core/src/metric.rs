//! Rotationally invariant conformal metrics `e^{2u(x)} (dx^2 + dθ^2)` on a
//! truncated cylinder, their Gauss curvature, and closed-form model metrics.
//!
//! The angular coordinate never appears: every field depends on the cylinder
//! coordinate `x` only, so the Laplacian reduces to `u_xx` and the curvature
//! to `K = -e^{-2u} u_xx`.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::grid::{Grid1D, ScalarField};

/// Conformal factor `u` of the metric `e^{2u} (dx^2 + dθ^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalMetric {
    u: ScalarField,
}

impl ConformalMetric {
    pub fn new(u: ScalarField) -> Self {
        Self { u }
    }

    pub fn from_values(grid: Grid1D, values: Vec<f64>) -> Result<Self, GeometryError> {
        Ok(Self { u: ScalarField::new(grid, values)? })
    }

    pub fn field(&self) -> &ScalarField {
        &self.u
    }

    pub fn grid(&self) -> &Grid1D {
        self.u.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.u.values()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.u.into_values()
    }
}

/// Gauss curvature on interior nodes. Boundary nodes carry no value.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    grid: Grid1D,
    interior: Vec<f64>,
}

impl CurvatureField {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Node indices carrying a curvature value, always `1..=n-1`.
    pub fn valid_range(&self) -> RangeInclusive<usize> {
        1..=self.grid.n() - 1
    }

    /// Curvature at node `i`, `None` on the boundary.
    pub fn at(&self, i: usize) -> Option<f64> {
        if self.valid_range().contains(&i) {
            Some(self.interior[i - 1])
        } else {
            None
        }
    }

    /// Values on nodes `1..=n-1`.
    pub fn interior(&self) -> &[f64] {
        &self.interior
    }
}

/// Scale `lambda > 1` of the breather and the translation `shift` used as the
/// candidate diffeomorphism (`shift = 1` is the dilation by `e` on the plane).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreatherParams {
    pub lambda: f64,
    pub shift: f64,
}

impl BreatherParams {
    pub fn new(lambda: f64, shift: f64) -> Result<Self, GeometryError> {
        if !(lambda > 1.0 && lambda.is_finite()) {
            return Err(GeometryError::InvalidParameter(format!(
                "breather scale must satisfy lambda > 1, got {lambda}"
            )));
        }
        if !shift.is_finite() {
            return Err(GeometryError::InvalidParameter(format!("shift must be finite, got {shift}")));
        }
        Ok(Self { lambda, shift })
    }

    /// `lambda = e^2`, unit shift.
    pub fn default_breather() -> Self {
        Self { lambda: (2.0f64).exp(), shift: 1.0 }
    }

    pub fn log_lambda(&self) -> f64 {
        self.lambda.ln()
    }

    /// Offset `(a/2) log lambda` picked up by `u` under the shift `a`.
    pub fn conformal_offset(&self, a: f64) -> f64 {
        0.5 * a * self.log_lambda()
    }

    /// Earlier time `t * lambda^{-a}` paired with `t` in the scaling identity.
    pub fn paired_time(&self, t: f64, a: f64) -> f64 {
        t * self.lambda.powf(-a)
    }
}

/// `u(x) = (1/2) log(lambda) x + sin(2 pi x)`.
pub fn breather_profile(lambda: f64, x: f64) -> f64 {
    0.5 * lambda.ln() * x + (2.0 * PI * x).sin()
}

/// Initial breather metric; its unit translate equals `lambda` times itself.
pub fn breather_initial(params: &BreatherParams, grid: Grid1D) -> Result<ConformalMetric, GeometryError> {
    let lambda = params.lambda;
    Ok(ConformalMetric::new(ScalarField::from_fn(grid, |x| breather_profile(lambda, x))?))
}

/// Flat cone `u = alpha x`; `alpha = 1` is the Euclidean punctured plane.
pub fn cone_initial(alpha: f64, grid: Grid1D) -> Result<ConformalMetric, GeometryError> {
    if !alpha.is_finite() {
        return Err(GeometryError::InvalidParameter(format!("alpha must be finite, got {alpha}")));
    }
    Ok(ConformalMetric::new(ScalarField::from_fn(grid, |x| alpha * x)?))
}

/// Hyperbolic cusp `u = -log|x| + (1/2) log(2t)`, curvature `-1/(2t)`.
///
/// An exact solution of `u_t = e^{-2u} u_xx` for `x < 0`.
pub fn cusp_profile(t: f64, x: f64) -> f64 {
    -x.abs().ln() + 0.5 * (2.0 * t).ln()
}

pub fn cusp_model(t: f64, grid: Grid1D) -> Result<ConformalMetric, GeometryError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(GeometryError::InvalidParameter(format!("cusp time must be positive, got {t}")));
    }
    if grid.x_max() >= -2.0 * grid.dx() {
        return Err(GeometryError::InvalidParameter(format!(
            "cusp model needs every node below -2dx = {}, grid reaches {}",
            -2.0 * grid.dx(),
            grid.x_max()
        )));
    }
    Ok(ConformalMetric::new(ScalarField::from_fn(grid, |x| cusp_profile(t, x))?))
}

/// Centered second difference at interior node `i`, in a reflection-symmetric
/// evaluation order.
#[inline]
pub(crate) fn second_difference(u: &[f64], i: usize) -> f64 {
    (u[i + 1] + u[i - 1]) - 2.0 * u[i]
}

/// `K_i = -e^{-2u_i} (u_{i+1} - 2u_i + u_{i-1}) / dx^2` on interior nodes.
pub fn gauss_curvature(m: &ConformalMetric) -> CurvatureField {
    let grid = *m.grid();
    let u = m.values();
    let inv_dx2 = 1.0 / (grid.dx() * grid.dx());
    let interior = (1..grid.n())
        .map(|i| -(-2.0 * u[i]).exp() * second_difference(u, i) * inv_dx2)
        .collect();
    CurvatureField { grid, interior }
}

/// Pullback by the translation `x -> x + a`: returns `u(x + a)`.
///
/// Grid-aligned shifts copy samples; other shifts use cubic interpolation and
/// keep only nodes whose image has a full stencil.
pub fn shift_pullback(m: &ConformalMetric, a: f64) -> Result<ConformalMetric, GeometryError> {
    if !a.is_finite() {
        return Err(GeometryError::InvalidParameter(format!("shift must be finite, got {a}")));
    }
    let grid = *m.grid();
    let n = grid.n();
    if let Some(k) = grid.aligned_offset(a) {
        let k_abs = k.unsigned_abs();
        if k_abs + crate::grid::MIN_INTERVALS > n {
            return Err(GeometryError::EmptyDomain(format!(
                "shift {a} leaves fewer than {} intervals",
                crate::grid::MIN_INTERVALS
            )));
        }
        let (out_grid, values) = if k >= 0 {
            (grid.subgrid(0, n - k_abs)?, m.values()[k_abs..].to_vec())
        } else {
            (grid.subgrid(k_abs, n)?, m.values()[..=n - k_abs].to_vec())
        };
        return ConformalMetric::from_values(out_grid, values);
    }
    let range = grid.window_indices(grid.x_min() + grid.dx() - a, grid.x_max() - grid.dx() - a);
    let (i0, i1) = (*range.start(), *range.end());
    if range.is_empty() || i1 < i0 + crate::grid::MIN_INTERVALS {
        return Err(GeometryError::EmptyDomain(format!("shift {a} leaves no interpolable nodes")));
    }
    let out_grid = grid.subgrid(i0, i1)?;
    let values = (i0..=i1)
        .map(|i| m.field().interpolate(grid.x(i) + a))
        .collect::<Result<Vec<_>, _>>()?;
    ConformalMetric::from_values(out_grid, values)
}

/// Area `2 pi ∫ e^{2u} dx` of the band `[x_a, x_b] × S^1` (trapezoidal rule).
pub fn volume(m: &ConformalMetric, x_a: f64, x_b: f64) -> Result<f64, GeometryError> {
    let grid = m.grid();
    if !(x_a < x_b) {
        return Err(GeometryError::DegenerateInterval(x_a, x_b));
    }
    let slack = 1e-9 * grid.dx();
    if x_a < grid.x_min() - slack || x_b > grid.x_max() + slack {
        return Err(GeometryError::OutOfRange { x: if x_a < grid.x_min() { x_a } else { x_b }, lo: grid.x_min(), hi: grid.x_max() });
    }
    let density: Vec<f64> = m.values().iter().map(|u| (2.0 * u).exp()).collect();
    // linear reconstruction of the density inside a cell
    let at = |x: f64| -> f64 {
        let s = ((x - grid.x_min()) / grid.dx()).clamp(0.0, grid.n() as f64);
        let j = (s.floor() as usize).min(grid.n() - 1);
        let r = s - j as f64;
        (1.0 - r) * density[j] + r * density[j + 1]
    };
    let inner = grid.window_indices(x_a, x_b);
    let mut area = 0.0;
    if inner.is_empty() {
        area += 0.5 * (at(x_a) + at(x_b)) * (x_b - x_a);
    } else {
        let (i0, i1) = (*inner.start(), *inner.end());
        area += 0.5 * (at(x_a) + density[i0]) * (grid.x(i0) - x_a).max(0.0);
        for i in i0..i1 {
            area += 0.5 * (density[i] + density[i + 1]) * grid.dx();
        }
        area += 0.5 * (density[i1] + at(x_b)) * (x_b - grid.x(i1)).max(0.0);
    }
    Ok(2.0 * PI * area)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e2() -> f64 {
        (2.0f64).exp()
    }

    #[test]
    fn breather_initial_values() {
        let p = BreatherParams::new(e2(), 1.0).unwrap();
        let g = Grid1D::new(-8.0, 8.0, 800).unwrap();
        let u = breather_initial(&p, g).unwrap();
        assert_eq!(u.values()[400], 0.0);
        assert!((u.values()[450] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn breather_unit_shift_is_scaling() {
        let p = BreatherParams::new(e2(), 1.0).unwrap();
        let g = Grid1D::new(-8.0, 8.0, 800).unwrap();
        let u = breather_initial(&p, g).unwrap();
        let k = g.aligned_offset(1.0).unwrap() as usize;
        let worst = (0..=g.n() - k)
            .map(|i| (u.values()[i + k] - u.values()[i] - 0.5 * p.log_lambda()).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn breather_params_validation() {
        assert!(BreatherParams::new(1.0, 1.0).is_err());
        assert!(BreatherParams::new(0.5, 1.0).is_err());
        assert!(BreatherParams::new(2.0, f64::NAN).is_err());
        let p = BreatherParams::default_breather();
        assert!((p.paired_time(0.5, 1.0) - 0.5 / e2()).abs() < 1e-16);
    }

    #[test]
    fn cone_is_flat() {
        let g = Grid1D::new(-3.0, 3.0, 64).unwrap();
        assert!(cone_initial(0.0, g).unwrap().values().iter().all(|&v| v == 0.0));
        let k = gauss_curvature(&cone_initial(1.0, g).unwrap());
        assert!(k.interior().iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn constant_metric_has_zero_curvature() {
        let g = Grid1D::new(0.0, 1.0, 16).unwrap();
        let m = ConformalMetric::new(ScalarField::from_fn(g, |_| 0.37).unwrap());
        assert!(gauss_curvature(&m).interior().iter().all(|&k| k == 0.0));
    }

    #[test]
    fn cusp_model_values_and_rejection() {
        let g = Grid1D::new(-3.0, -0.5, 50).unwrap();
        let m = cusp_model(0.5, g).unwrap();
        let i = g.node_index(-1.0).unwrap();
        assert_eq!(m.values()[i], 0.0);
        assert!(cusp_model(0.5, Grid1D::new(-1.0, 0.0, 10).unwrap()).is_err());
        assert!(cusp_model(0.5, Grid1D::new(-1.0, -0.15, 10).unwrap()).is_err());
        assert!(cusp_model(0.0, g).is_err());
    }

    #[test]
    fn cusp_doubling_time_shifts_and_halves_curvature() {
        let g = Grid1D::new(-6.0, -1.0, 500).unwrap();
        let a = cusp_model(0.5, g).unwrap();
        let b = cusp_model(1.0, g).unwrap();
        for (ua, ub) in a.values().iter().zip(b.values()) {
            assert!((ub - ua - 0.5 * 2f64.ln()).abs() < 1e-14);
        }
        let ka = gauss_curvature(&a);
        let kb = gauss_curvature(&b);
        for (x, y) in ka.interior().iter().zip(kb.interior()) {
            assert!((y - 0.5 * x).abs() < 1e-10);
        }
    }

    /// Symbolic curvature of the cusp is exactly `-1/(2t)`; the discrete
    /// operator converges at second order.
    #[test]
    fn cusp_curvature_second_order() {
        let t = 0.5;
        let err = |n: usize| {
            let g = Grid1D::new(-6.0, -1.0, n).unwrap();
            let k = gauss_curvature(&cusp_model(t, g).unwrap());
            k.interior().iter().map(|k| (k + 1.0 / (2.0 * t)).abs()).fold(0.0, f64::max)
        };
        let (e1, e2, e3) = (err(100), err(200), err(400));
        assert!(e1 > e2 && e2 > e3);
        assert!((e1 / e2).log2() >= 1.8 && (e2 / e3).log2() >= 1.8, "{e1} {e2} {e3}");
    }

    /// `u'' = -(2pi)^2 sin(2 pi x)` so `K = (2pi)^2 sin(2 pi x) e^{-2u}`.
    #[test]
    fn breather_curvature_matches_symbolic_form() {
        let p = BreatherParams::default_breather();
        let err = |n: usize| {
            let g = Grid1D::new(-2.0, 2.0, n).unwrap();
            let m = breather_initial(&p, g).unwrap();
            let k = gauss_curvature(&m);
            k.valid_range()
                .map(|i| {
                    let x = g.x(i);
                    let exact = (2.0 * PI).powi(2) * (2.0 * PI * x).sin() * (-2.0 * breather_profile(p.lambda, x)).exp();
                    (k.at(i).unwrap() - exact).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(200) / err(400);
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn curvature_scales_under_constant_offset() {
        let g = Grid1D::new(-1.0, 2.0, 90).unwrap();
        let u = ConformalMetric::new(ScalarField::from_fn(g, |x| 0.3 * x * x + x.sin()).unwrap());
        let c = 0.75;
        let v = ConformalMetric::new(ScalarField::from_fn(g, |x| 0.3 * x * x + x.sin() + c).unwrap());
        let (ku, kv) = (gauss_curvature(&u), gauss_curvature(&v));
        for (a, b) in ku.interior().iter().zip(kv.interior()) {
            assert!((b - (-2.0 * c).exp() * a).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn shift_pullback_aligned_and_identity() {
        let p = BreatherParams::default_breather();
        let g = Grid1D::new(-8.0, 8.0, 800).unwrap();
        let u = breather_initial(&p, g).unwrap();
        assert_eq!(shift_pullback(&u, 0.0).unwrap(), u);
        let s = shift_pullback(&u, 1.0).unwrap();
        assert_eq!(s.grid().n(), 750);
        for (i, v) in s.values().iter().enumerate() {
            assert!((v - u.values()[i] - 1.0).abs() < 1e-12);
        }
        let k = 37;
        let s = shift_pullback(&u, k as f64 * g.dx()).unwrap();
        assert_eq!(s.values(), &u.values()[k..]);
        let s = shift_pullback(&u, -(k as f64) * g.dx()).unwrap();
        assert_eq!(s.values(), &u.values()[..=800 - k]);
        assert_eq!(s.grid().x_min(), g.x(k));
    }

    #[test]
    fn shift_pullback_interpolates_off_grid() {
        let g = Grid1D::new(-2.0, 2.0, 400).unwrap();
        let u = ConformalMetric::new(ScalarField::from_fn(g, |x| x * x * x).unwrap());
        let s = shift_pullback(&u, 0.123).unwrap();
        for (i, v) in s.values().iter().enumerate() {
            let x = s.grid().x(i);
            assert!((v - (x + 0.123).powi(3)).abs() < 1e-11);
        }
        assert!(matches!(shift_pullback(&u, 10.0), Err(GeometryError::EmptyDomain(_))));
        assert!(matches!(shift_pullback(&u, 3.999), Err(GeometryError::EmptyDomain(_))));
    }

    #[test]
    fn aligned_shift_commutes_with_curvature() {
        let p = BreatherParams::default_breather();
        let g = Grid1D::new(-4.0, 4.0, 400).unwrap();
        let u = breather_initial(&p, g).unwrap();
        for k in [1usize, 13, 50] {
            let ks = gauss_curvature(&shift_pullback(&u, k as f64 * g.dx()).unwrap());
            let k0 = gauss_curvature(&u);
            for i in ks.valid_range() {
                assert_eq!(ks.at(i), k0.at(i + k));
            }
        }
    }

    #[test]
    fn volume_examples() {
        let g = Grid1D::new(-1.0, 2.0, 300).unwrap();
        let flat = cone_initial(0.0, g).unwrap();
        assert!((volume(&flat, 0.0, 1.0).unwrap() - 2.0 * PI).abs() < 1e-12);
        let cone = cone_initial(1.0, g).unwrap();
        let v = volume(&cone, 0.0, 2f64.ln()).unwrap();
        assert!((v - 3.0 * PI).abs() < 1e-3, "{v}");
        assert!(volume(&flat, 1.0, 1.0).is_err());
        assert!(volume(&flat, -2.0, 1.0).is_err());
    }

    #[test]
    fn breather_volume_finite_left_infinite_right() {
        let p = BreatherParams::default_breather();
        let g = Grid1D::new(-16.0, 16.0, 6400).unwrap();
        let u = breather_initial(&p, g).unwrap();
        let left: Vec<f64> = [5.0, 10.0, 15.0].iter().map(|&x| volume(&u, -x, 0.0).unwrap()).collect();
        let right: Vec<f64> = [5.0, 10.0, 15.0].iter().map(|&x| volume(&u, 0.0, x).unwrap()).collect();
        assert!(left[2] - left[1] < left[1] - left[0]);
        assert!(left[2] - left[1] < 1e-6 * left[2]);
        assert!(right[1] > 1e3 * right[0] && right[2] > 1e3 * right[1]);
    }
}
