//! Conformal Ricci flow `u_t = e^{-2u} u_xx` on a truncated cylinder.
//!
//! Each implicit step is solved by Newton iteration on the interior nodes.
//! The nonlinear system is multiplied through by `e^{2u}` before
//! linearizing,
//!
//! ```text
//! G_i(w) = e^{2w_i} (w_i - u_i) - (1-θ) r e^{2(w_i-u_i)} D²u_i - θ r D²w_i,   r = dt/dx²
//! ```
//!
//! which keeps the diffusion part linear and the Jacobian tridiagonal even where
//! `e^{-2u}` is astronomically large near an incomplete end.

use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::grid::Grid1D;
use crate::metric::{self, second_difference, BreatherParams, ConformalMetric};
use crate::timestep::{self, Scheme, StepPolicy, StepStats};
use crate::tridiag::Tridiagonal;

/// Newton updates are clipped to this size node by node.
const MAX_NEWTON_UPDATE: f64 = 4.0;
/// Smallest fraction of a Newton update tried during backtracking.
const MIN_NEWTON_DAMPING: f64 = 1.0 / 256.0;

/// Dirichlet data on one end of the truncated cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryKind {
    /// Hold the initial value.
    Frozen,
    /// `u(x_b, t) = -log|x_b| + (1/2) log(2t + epsilon^2)`; needs `x_b < 0`.
    ///
    /// `epsilon = None` is resolved when a run starts: `0` for runs starting at
    /// `t > 0`, otherwise the offset that makes the data continuous with the
    /// initial value, `epsilon = |x_b| e^{u_0(x_b)}`.
    Cusp { epsilon: Option<f64> },
    /// Cusp slope `u_x(x_b) = -1/x_b`, imposed through a ghost node; needs
    /// `x_b < 0`.
    CuspNeumann,
}

impl BoundaryKind {
    pub fn cusp() -> Self {
        BoundaryKind::Cusp { epsilon: None }
    }

    /// Prescribed `u_x` for slope conditions.
    fn slope(self, x_b: f64) -> Option<f64> {
        match self {
            BoundaryKind::CuspNeumann => Some(-1.0 / x_b),
            _ => None,
        }
    }

    fn value(self, x_b: f64, current: f64, t: f64) -> f64 {
        match self {
            BoundaryKind::Frozen | BoundaryKind::CuspNeumann => current,
            BoundaryKind::Cusp { epsilon } => {
                let eps = epsilon.unwrap_or(0.0);
                -x_b.abs().ln() + 0.5 * (2.0 * t + eps * eps).ln()
            }
        }
    }

    fn resolved(self, x_b: f64, u0_b: f64, t0: f64) -> Self {
        match self {
            BoundaryKind::Cusp { epsilon: None } => {
                let eps = if t0 > 0.0 { 0.0 } else { x_b.abs() * u0_b.exp() };
                BoundaryKind::Cusp { epsilon: Some(eps) }
            }
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub left: BoundaryKind,
    pub right: BoundaryKind,
}

impl BoundarySpec {
    pub fn frozen() -> Self {
        Self { left: BoundaryKind::Frozen, right: BoundaryKind::Frozen }
    }

    /// Cusp data on the left (incomplete) end, frozen on the right.
    pub fn cusp_left() -> Self {
        Self { left: BoundaryKind::cusp(), right: BoundaryKind::Frozen }
    }

    pub fn validate(&self, grid: &Grid1D) -> Result<(), SolverError> {
        for (side, kind, x_b) in [("left", self.left, grid.x_min()), ("right", self.right, grid.x_max())] {
            let cusp_like = matches!(kind, BoundaryKind::Cusp { .. } | BoundaryKind::CuspNeumann);
            if cusp_like && !(x_b < 0.0) {
                return Err(SolverError::InvalidConfig(format!(
                    "cusp boundary on the {side} end needs x_b < 0, got {x_b}"
                )));
            }
            if let BoundaryKind::Cusp { epsilon: Some(eps) } = kind {
                if !eps.is_finite() {
                    return Err(SolverError::InvalidConfig(format!("{side} cusp epsilon must be finite")));
                }
            }
        }
        Ok(())
    }

    /// Fill in automatic cusp offsets for a run starting from `u0` at `t0`.
    pub fn resolved(&self, u0: &ConformalMetric, t0: f64) -> Self {
        let g = u0.grid();
        let u = u0.values();
        Self {
            left: self.left.resolved(g.x_min(), u[0], t0),
            right: self.right.resolved(g.x_max(), u[g.n()], t0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// First trial step. Cusp data starting at `t = 0` moves on the time
    /// scale `epsilon^2`, which is tiny for ends far out on the cylinder, and
    /// adaptive steps grow geometrically, so a very small value costs little.
    pub dt_init: f64,
    pub dt_max: f64,
    /// Step-doubling target: sup-norm local error per step.
    pub error_tol: f64,
    /// Sup norm of the scaled Newton residual.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// `false` takes constant steps of `dt_init`.
    pub adaptive: bool,
    pub boundary: BoundarySpec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::CrankNicolson,
            dt_init: 1e-24,
            dt_max: 1e-2,
            error_tol: 1e-4,
            newton_tol: 1e-11,
            newton_max_iter: 30,
            adaptive: true,
            boundary: BoundarySpec::cusp_left(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        if !(self.dt_init > 0.0 && self.dt_init <= self.dt_max && self.dt_max.is_finite()) {
            return bad(format!("need 0 < dt_init <= dt_max, got {} and {}", self.dt_init, self.dt_max));
        }
        if !(self.error_tol > 0.0 && self.newton_tol > 0.0) {
            return bad(format!("tolerances must be positive, got {} and {}", self.error_tol, self.newton_tol));
        }
        if self.newton_max_iter < 3 {
            return bad(format!("newton_max_iter must be at least 3, got {}", self.newton_max_iter));
        }
        Ok(())
    }

    pub fn step_policy(&self) -> StepPolicy {
        if self.adaptive {
            StepPolicy::Adaptive {
                dt_init: self.dt_init,
                dt_max: self.dt_max,
                error_tol: self.error_tol,
                order: self.scheme.error_order(),
            }
        } else {
            StepPolicy::Fixed { dt: self.dt_init }
        }
    }
}

/// Descriptor of where an initial metric came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialCondition {
    Breather { lambda: f64 },
    Cone { alpha: f64 },
    Cusp { t0: f64 },
    Constant { value: f64 },
    Custom { label: String },
}

impl InitialCondition {
    pub fn build(&self, grid: Grid1D) -> Result<ConformalMetric, SolverError> {
        Ok(match self {
            InitialCondition::Breather { lambda } => {
                metric::breather_initial(&BreatherParams::new(*lambda, 1.0)?, grid)?
            }
            InitialCondition::Cone { alpha } => metric::cone_initial(*alpha, grid)?,
            InitialCondition::Cusp { t0 } => metric::cusp_model(*t0, grid)?,
            InitialCondition::Constant { value } => ConformalMetric::from_values(grid, vec![*value; grid.len()])?,
            InitialCondition::Custom { label } => {
                return Err(SolverError::InvalidConfig(format!("custom initial condition '{label}' cannot be rebuilt")))
            }
        })
    }

    /// Physical time at which this data is the state of the flow.
    pub fn start_time(&self) -> f64 {
        match self {
            InitialCondition::Cusp { t0 } => *t0,
            _ => 0.0,
        }
    }
}

/// Snapshots of one evolution run.
#[derive(Debug, Clone)]
pub struct FlowSolution {
    pub grid: Grid1D,
    pub snapshot_times: Vec<f64>,
    pub snapshots: Vec<ConformalMetric>,
    pub config: SolverConfig,
    pub provenance: InitialCondition,
    /// Accepted step sizes, in order.
    pub steps: Vec<f64>,
    pub stats: StepStats,
}

impl FlowSolution {
    /// Snapshot whose time matches `t` to 1e-12 relative.
    pub fn snapshot_at(&self, t: f64) -> Option<&ConformalMetric> {
        find_time(&self.snapshot_times, t).map(|k| &self.snapshots[k])
    }
}

pub(crate) fn find_time(times: &[f64], t: f64) -> Option<usize> {
    times.iter().position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1e-300))
}

/// One implicit θ-step from `t` to `t + dt`.
pub fn step(u: &ConformalMetric, t: f64, dt: f64, cfg: &SolverConfig) -> Result<ConformalMetric, SolverError> {
    cfg.boundary.validate(u.grid())?;
    let w = step_values(u.grid(), u.values(), t, dt, cfg)?;
    Ok(ConformalMetric::from_values(*u.grid(), w)?)
}

pub(crate) fn step_values(grid: &Grid1D, u: &[f64], t: f64, dt: f64, cfg: &SolverConfig) -> Result<Vec<f64>, SolverError> {
    if !(dt > 0.0) {
        return Err(SolverError::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NonFiniteState { t });
    }
    let n = grid.n();
    let dx = grid.dx();
    let theta = cfg.scheme.theta();
    let r = dt / (dx * dx);
    let t_new = t + dt;

    // Dirichlet ends are fixed at t + dt; slope ends become unknowns with a
    // ghost node carrying the prescribed derivative.
    let left_slope = cfg.boundary.left.slope(grid.x_min());
    let right_slope = cfg.boundary.right.slope(grid.x_max());
    let lo = if left_slope.is_some() { 0 } else { 1 };
    let hi = if right_slope.is_some() { n } else { n - 1 };
    let d2 = |v: &[f64], i: usize| -> f64 {
        match (i, left_slope, right_slope) {
            (0, Some(g), _) => (v[1] + (v[1] - 2.0 * dx * g)) - 2.0 * v[0],
            (i, _, Some(g)) if i == n => (v[n - 1] + (v[n - 1] + 2.0 * dx * g)) - 2.0 * v[n],
            _ => second_difference(v, i),
        }
    };

    let mut w = u.to_vec();
    if lo == 1 {
        w[0] = cfg.boundary.left.value(grid.x_min(), u[0], t_new);
    }
    if hi == n - 1 {
        w[n] = cfg.boundary.right.value(grid.x_max(), u[n], t_new);
    }

    let explicit: Vec<f64> = (lo..=hi)
        .map(|i| if theta < 1.0 { (1.0 - theta) * r * d2(u, i) } else { 0.0 })
        .collect();

    let m = hi - lo + 1;
    let eval = |w: &[f64], g: &mut [f64]| -> f64 {
        let mut residual = 0.0f64;
        for (k, i) in (lo..=hi).enumerate() {
            let s = w[i] - u[i];
            let e2w = (2.0 * w[i]).exp();
            let gi = e2w * s - (2.0 * s).exp() * explicit[k] - theta * r * d2(w, i);
            g[k] = gi;
            residual = residual.max((gi / (e2w + 2.0 * theta * r)).abs());
        }
        residual
    };
    let mut g = vec![0.0; m];
    let mut trial_g = vec![0.0; m];
    let mut jac = Tridiagonal::with_len(m);
    let mut residual = eval(&w, &mut g);
    for iter in 0..cfg.newton_max_iter {
        if !residual.is_finite() {
            return Err(SolverError::NonFiniteState { t: t_new });
        }
        if residual <= cfg.newton_tol {
            return Ok(w);
        }
        for (k, i) in (lo..=hi).enumerate() {
            let s = w[i] - u[i];
            let e2w = (2.0 * w[i]).exp();
            jac.diag[k] = e2w * (2.0 * s + 1.0) - 2.0 * (2.0 * s).exp() * explicit[k] + 2.0 * theta * r;
            jac.sub[k] = if i == n { -2.0 * theta * r } else { -theta * r };
            jac.sup[k] = if i == 0 { -2.0 * theta * r } else { -theta * r };
        }
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let Some(mut delta) = jac.solve(&rhs) else {
            return Err(SolverError::NewtonDiverged { t: t_new, iterations: iter + 1, residual });
        };
        delta.iter_mut().for_each(|d| *d = d.clamp(-MAX_NEWTON_UPDATE, MAX_NEWTON_UPDATE));
        // backtrack until the scaled residual drops
        let mut trial = w.clone();
        let mut lambda = 1.0;
        loop {
            for (k, i) in (lo..=hi).enumerate() {
                trial[i] = w[i] + lambda * delta[k];
            }
            let next = eval(&trial, &mut trial_g);
            if next < residual || lambda < MIN_NEWTON_DAMPING {
                residual = next;
                break;
            }
            lambda *= 0.5;
        }
        std::mem::swap(&mut w, &mut trial);
        std::mem::swap(&mut g, &mut trial_g);
    }
    if residual <= cfg.newton_tol {
        return Ok(w);
    }
    Err(SolverError::NewtonDiverged { t: t_new, iterations: cfg.newton_max_iter, residual })
}

/// Evolve `u0` (the state at `snapshot_times[0]`) through every snapshot time.
pub fn evolve(u0: &ConformalMetric, snapshot_times: &[f64], cfg: &SolverConfig) -> Result<FlowSolution, SolverError> {
    evolve_with_policy(u0, snapshot_times, cfg, &cfg.step_policy())
}

/// [`evolve`] from a named initial condition on `grid`.
pub fn evolve_initial(
    ic: &InitialCondition,
    grid: Grid1D,
    snapshot_times: &[f64],
    cfg: &SolverConfig,
) -> Result<FlowSolution, SolverError> {
    let u0 = ic.build(grid)?;
    let mut sol = evolve(&u0, snapshot_times, cfg)?;
    sol.provenance = ic.clone();
    Ok(sol)
}

pub fn evolve_with_policy(
    u0: &ConformalMetric,
    snapshot_times: &[f64],
    cfg: &SolverConfig,
    policy: &StepPolicy,
) -> Result<FlowSolution, SolverError> {
    cfg.validate()?;
    let grid = *u0.grid();
    cfg.boundary.validate(&grid)?;
    timestep::validate_times(snapshot_times)?;
    let cfg = &SolverConfig { boundary: cfg.boundary.resolved(u0, snapshot_times[0]), ..cfg.clone() };
    let traj = timestep::integrate(u0.values().to_vec(), snapshot_times, policy, |u, t, h| {
        step_values(&grid, u, t, h, cfg)
    })?;
    let snapshots = traj
        .states
        .into_iter()
        .map(|v| ConformalMetric::from_values(grid, v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FlowSolution {
        grid,
        snapshot_times: snapshot_times.to_vec(),
        snapshots,
        config: cfg.clone(),
        provenance: InitialCondition::Custom { label: "user-supplied".into() },
        steps: traj.steps,
        stats: traj.stats,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub ordered: bool,
    /// `max(u - v, 0)` over all nodes at the final time.
    pub max_violation: f64,
}

/// Tolerance on `u <= v` after evolution.
pub const COMPARISON_TOL: f64 = 1e-10;

/// Evolve ordered data `u0 <= v0` over `[0, t]` with one shared step sequence
/// and report whether the order survives.
pub fn comparison_check(
    u0: &ConformalMetric,
    v0: &ConformalMetric,
    t: f64,
    cfg: &SolverConfig,
) -> Result<ComparisonReport, SolverError> {
    if u0.grid() != v0.grid() {
        return Err(SolverError::InvalidConfig("comparison needs a common grid".into()));
    }
    if u0.values().iter().zip(v0.values()).any(|(a, b)| a > b) {
        return Err(SolverError::InvalidConfig("comparison needs u0 <= v0 node-wise".into()));
    }
    let times = [0.0, t];
    let pilot = evolve(u0, &times, cfg)?;
    let replay = StepPolicy::Replay(pilot.steps);
    let su = evolve_with_policy(u0, &times, cfg, &replay)?;
    let sv = evolve_with_policy(v0, &times, cfg, &replay)?;
    let max_violation = su.snapshots[1]
        .values()
        .iter()
        .zip(sv.snapshots[1].values())
        .map(|(a, b)| (a - b).max(0.0))
        .fold(0.0, f64::max);
    Ok(ComparisonReport { ordered: max_violation <= COMPARISON_TOL, max_violation })
}
