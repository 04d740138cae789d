//! Residuals for the scaling identities, the cusp curvature target and the
//! soliton diagnostic, plus convergence-order bookkeeping.
//!
//! Ricci identity at shift `a`:
//!
//! ```text
//! R(x) = u(x + a, t) - u(x, t λ^{-a}) - (a/2) log λ
//! ```
//!
//! Curve shortening identity: `R(x) = F(x, t) - F(e x, e² t) / e`.
//! Off-node values come from the cubic interpolant of the later snapshot.

use serde::{Deserialize, Serialize};

use crate::csf::CsfSolution;
use crate::error::VerifyError;
use crate::grid::{Grid1D, ScalarField};
use crate::metric::{gauss_curvature, BreatherParams};
use crate::ricci::FlowSolution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub residual_sup: f64,
    /// `sqrt(sum R^2 dx)` over the window nodes.
    pub residual_l2: f64,
    pub window: [f64; 2],
    pub times_compared: [f64; 2],
    pub grid_dx: f64,
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonDefectReport {
    pub shift_a: f64,
    pub defect_sup: f64,
    pub window: [f64; 2],
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuspReport {
    pub t: f64,
    pub window: [f64; 2],
    pub max_abs_2tk_plus_1: f64,
    /// `-1/(2t)`.
    pub target_curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub dx_values: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `log2(r_k / r_{k+1})` for each consecutive pair.
    pub orders: Vec<f64>,
    /// Order from the two finest runs.
    pub observed_order: f64,
}

impl ConvergenceStudy {
    /// Build from runs whose `dx` halves from one to the next.
    pub fn from_runs(dx_values: &[f64], residuals: &[f64]) -> Result<Self, VerifyError> {
        if dx_values.len() < 2 || dx_values.len() != residuals.len() {
            return Err(VerifyError::InvalidStudy(format!(
                "need at least two runs with one residual each, got {} dx values and {} residuals",
                dx_values.len(),
                residuals.len()
            )));
        }
        for w in dx_values.windows(2) {
            if ((w[0] / w[1]) - 2.0).abs() > 1e-9 {
                return Err(VerifyError::InvalidStudy(format!("dx must halve between runs, got {} then {}", w[0], w[1])));
            }
        }
        let mut orders = Vec::with_capacity(residuals.len() - 1);
        for w in residuals.windows(2) {
            if !(w[0] > 0.0 && w[1] > 0.0) {
                return Err(VerifyError::NonPositiveResidual(w[0], w[1]));
            }
            orders.push((w[0] / w[1]).log2());
        }
        Ok(Self {
            dx_values: dx_values.to_vec(),
            residuals: residuals.to_vec(),
            observed_order: *orders.last().unwrap(),
            orders,
        })
    }
}

/// Order from a residual at `dx` and one at `dx/2`.
pub fn convergence_order(coarse: f64, fine: f64, dx: f64) -> Result<ConvergenceStudy, VerifyError> {
    ConvergenceStudy::from_runs(&[dx, 0.5 * dx], &[coarse, fine])
}

/// Relative change `|b - a| / |a|` between a run and its sensitivity rerun.
pub fn relative_change(a: f64, b: f64) -> f64 {
    (b - a).abs() / a.abs()
}

fn check_window(window: [f64; 2]) -> Result<(), VerifyError> {
    let [x_a, x_b] = window;
    if !(x_a.is_finite() && x_b.is_finite() && x_a <= x_b) {
        return Err(VerifyError::WindowOutOfRange { x_a, x_b, reason: "bounds must be finite and ordered".into() });
    }
    Ok(())
}

/// Window nodes, after checking that `x + shift` stays where the cubic
/// interpolant is defined for every one of them.
fn shifted_window(grid: &Grid1D, window: [f64; 2], shift: f64) -> Result<Vec<usize>, VerifyError> {
    check_window(window)?;
    let [x_a, x_b] = window;
    let lo = grid.x_min() + grid.dx();
    let hi = grid.x_max() - grid.dx();
    let slack = 1e-9 * grid.dx();
    if x_a < grid.x_min() || x_b > grid.x_max() || x_a + shift < lo - slack || x_b + shift > hi + slack {
        return Err(VerifyError::WindowOutOfRange {
            x_a,
            x_b,
            reason: format!("window shifted by {shift} must lie in [{lo}, {hi}]"),
        });
    }
    let idx: Vec<usize> = grid.window_indices(x_a, x_b).collect();
    if idx.is_empty() {
        return Err(VerifyError::WindowOutOfRange { x_a, x_b, reason: "no grid nodes inside".into() });
    }
    Ok(idx)
}

fn norms(residuals: impl Iterator<Item = f64>, dx: f64) -> (f64, f64) {
    let (sup, sq) = residuals.fold((0.0f64, 0.0f64), |(s, q), r| (s.max(r.abs()), q + r * r));
    (sup, (sq * dx).sqrt())
}

fn shifted_identity(
    sol: &FlowSolution,
    lambda: f64,
    a: f64,
    t: f64,
    window: [f64; 2],
) -> Result<(IdentityReport, f64), VerifyError> {
    let params = BreatherParams::new(lambda, a)?;
    let t_early = params.paired_time(t, a);
    let late = sol.snapshot_at(t).ok_or(VerifyError::MissingSnapshot(t))?;
    let early = sol.snapshot_at(t_early).ok_or(VerifyError::MissingSnapshot(t_early))?;
    let grid = sol.grid;
    let idx = shifted_window(&grid, window, a)?;
    let offset = params.conformal_offset(a);
    let mut res = Vec::with_capacity(idx.len());
    for &i in &idx {
        let x = grid.x(i);
        res.push(late.field().interpolate(x + a)? - early.values()[i] - offset);
    }
    let (sup, l2) = norms(res.into_iter(), grid.dx());
    let notes = match grid.aligned_offset(a) {
        Some(_) => "grid-aligned shift: node values compared directly".to_string(),
        None => format!("cubic interpolation at x + {a}; O(dx^4) interpolation error"),
    };
    let report = IdentityReport {
        residual_sup: sup,
        residual_l2: l2,
        window,
        times_compared: [t_early, t],
        grid_dx: grid.dx(),
        notes,
    };
    Ok((report, sup))
}

/// Ricci breather identity at the shift `params.shift`.
pub fn ricci_breather_residual(
    sol: &FlowSolution,
    params: &BreatherParams,
    t: f64,
    window: [f64; 2],
) -> Result<IdentityReport, VerifyError> {
    shifted_identity(sol, params.lambda, params.shift, t, window).map(|(r, _)| r)
}

/// Sup-norm failure of the shift identity at an arbitrary shift `a`.
pub fn soliton_defect(
    sol: &FlowSolution,
    params: &BreatherParams,
    a: f64,
    t: f64,
    window: [f64; 2],
) -> Result<SolitonDefectReport, VerifyError> {
    let (_, sup) = shifted_identity(sol, params.lambda, a, t, window)?;
    Ok(SolitonDefectReport { shift_a: a, defect_sup: sup, window, t })
}

/// `max |2t K + 1|` over the window nodes where `K` is defined.
pub fn cusp_check(sol: &FlowSolution, t: f64, window: [f64; 2]) -> Result<CuspReport, VerifyError> {
    check_window(window)?;
    let snap = sol.snapshot_at(t).ok_or(VerifyError::MissingSnapshot(t))?;
    let k = gauss_curvature(snap);
    let grid = sol.grid;
    let [x_a, x_b] = window;
    let valid = k.valid_range();
    let idx: Vec<usize> = grid.window_indices(x_a, x_b).collect();
    if idx.is_empty() || !idx.iter().all(|i| valid.contains(i)) {
        return Err(VerifyError::WindowOutOfRange {
            x_a,
            x_b,
            reason: format!("curvature is defined on x in [{}, {}]", grid.x(1), grid.x(grid.n() - 1)),
        });
    }
    let worst = idx.iter().filter_map(|&i| k.at(i)).fold(0.0f64, |m, ki| m.max((2.0 * t * ki + 1.0).abs()));
    Ok(CuspReport { t, window, max_abs_2tk_plus_1: worst, target_curvature: -1.0 / (2.0 * t) })
}

/// Curve shortening identity between `t` and `e² t`. The window bounds
/// apply to `|x|`, so `[0.05, 1]` covers both sides of the origin.
pub fn csf_breather_residual(sol: &CsfSolution, t: f64, window: [f64; 2]) -> Result<IdentityReport, VerifyError> {
    check_window(window)?;
    let [r_a, r_b] = window;
    if r_a < 0.0 {
        return Err(VerifyError::WindowOutOfRange { x_a: r_a, x_b: r_b, reason: "bounds on |x| must be >= 0".into() });
    }
    let e = std::f64::consts::E;
    let t_late = e * e * t;
    let early = sol.snapshot_at(t).ok_or(VerifyError::MissingSnapshot(t))?;
    let late = sol.snapshot_at(t_late).ok_or(VerifyError::MissingSnapshot(t_late))?;
    let grid = sol.grid;
    let lo = grid.x_min() + grid.dx();
    let hi = grid.x_max() - grid.dx();
    if -e * r_b < lo || e * r_b > hi {
        return Err(VerifyError::WindowOutOfRange {
            x_a: r_a,
            x_b: r_b,
            reason: format!("e * |x| must stay in [{lo}, {hi}]"),
        });
    }
    let field: &ScalarField = late.field();
    let mut res = Vec::new();
    for i in 0..=grid.n() {
        let x = grid.x(i);
        if x.abs() < r_a || x.abs() > r_b {
            continue;
        }
        res.push(early.values()[i] - field.interpolate(e * x)? / e);
    }
    if res.is_empty() {
        return Err(VerifyError::WindowOutOfRange { x_a: r_a, x_b: r_b, reason: "no grid nodes inside".into() });
    }
    let (sup, l2) = norms(res.into_iter(), grid.dx());
    Ok(IdentityReport {
        residual_sup: sup,
        residual_l2: l2,
        window,
        times_compared: [t, t_late],
        grid_dx: grid.dx(),
        notes: "window on |x|; cubic interpolation at e x; O(dx^4) interpolation error".into(),
    })
}
