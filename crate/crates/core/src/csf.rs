//! Graphical curve shortening flow `F_t = F_xx / (1 + F_x^2)`.
//!
//! Steps are linear: the coefficient `1/(1 + F_x^2)` is taken from the old
//! level, and the tridiagonal system is solved by twisted elimination so the
//! parity of data on a symmetric grid is kept node for node.

use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, SolverError};
use crate::grid::{Grid1D, ScalarField};
use crate::metric::second_difference;
use crate::timestep::{self, Scheme, StepPolicy, StepStats};
use crate::tridiag::Tridiagonal;

/// The graph `y = F(x)` of a curve in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphCurve {
    f: ScalarField,
}

impl GraphCurve {
    pub fn new(f: ScalarField) -> Self {
        Self { f }
    }

    pub fn from_values(grid: Grid1D, values: Vec<f64>) -> Result<Self, GeometryError> {
        ScalarField::new(grid, values).map(Self::new)
    }

    pub fn field(&self) -> &ScalarField {
        &self.f
    }

    pub fn grid(&self) -> &Grid1D {
        self.f.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.f.values()
    }

    /// Largest `|F[i+1] - F[i]| / dx`.
    pub fn max_slope(&self) -> f64 {
        let dx = self.grid().dx();
        self.values().windows(2).map(|w| ((w[1] - w[0]) / dx).abs()).fold(0.0, f64::max)
    }
}

/// `|x| sin(2π log|x|)`, extended by `0` at the origin.
pub fn csf_profile(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs() * (2.0 * std::f64::consts::PI * x.abs().ln()).sin()
    }
}

pub fn csf_initial(grid: Grid1D) -> Result<GraphCurve, GeometryError> {
    ScalarField::from_fn(grid, csf_profile).map(GraphCurve::new)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsfConfig {
    pub scheme: Scheme,
    pub dt_init: f64,
    pub dt_max: f64,
    pub error_tol: f64,
    pub adaptive: bool,
}

impl Default for CsfConfig {
    fn default() -> Self {
        Self { scheme: Scheme::BackwardEuler, dt_init: 1e-8, dt_max: 1e-3, error_tol: 1e-6, adaptive: true }
    }
}

impl CsfConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.dt_init > 0.0 && self.dt_init <= self.dt_max && self.dt_max.is_finite()) {
            return Err(SolverError::InvalidConfig(format!(
                "need 0 < dt_init <= dt_max, got {} and {}",
                self.dt_init, self.dt_max
            )));
        }
        if !(self.error_tol > 0.0) {
            return Err(SolverError::InvalidConfig(format!("error_tol must be positive, got {}", self.error_tol)));
        }
        Ok(())
    }

    pub fn step_policy(&self) -> StepPolicy {
        if self.adaptive {
            StepPolicy::Adaptive {
                dt_init: self.dt_init,
                dt_max: self.dt_max,
                error_tol: self.error_tol,
                order: 1,
            }
        } else {
            StepPolicy::Fixed { dt: self.dt_init }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CsfSolution {
    pub grid: Grid1D,
    pub snapshot_times: Vec<f64>,
    pub snapshots: Vec<GraphCurve>,
    pub config: CsfConfig,
    pub steps: Vec<f64>,
    pub stats: StepStats,
}

impl CsfSolution {
    pub fn snapshot_at(&self, t: f64) -> Option<&GraphCurve> {
        crate::ricci::find_time(&self.snapshot_times, t).map(|k| &self.snapshots[k])
    }
}

/// One lagged-coefficient step of size `dt`; the end values are held.
pub fn step_csf(c: &GraphCurve, dt: f64, cfg: &CsfConfig) -> Result<GraphCurve, SolverError> {
    let w = step_values(c.grid(), c.values(), 0.0, dt, cfg.scheme)?;
    Ok(GraphCurve::from_values(*c.grid(), w)?)
}

fn step_values(grid: &Grid1D, f: &[f64], t: f64, dt: f64, scheme: Scheme) -> Result<Vec<f64>, SolverError> {
    if !(dt > 0.0) {
        return Err(SolverError::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    let n = grid.n();
    let dx = grid.dx();
    let theta = scheme.theta();
    let r = dt / (dx * dx);
    let m = n - 1;
    let mut a = Tridiagonal::with_len(m);
    let mut rhs = vec![0.0; m];
    for i in 1..n {
        let k = i - 1;
        let slope = (f[i + 1] - f[i - 1]) / (2.0 * dx);
        let c = r / (1.0 + slope * slope);
        a.sub[k] = -theta * c;
        a.sup[k] = -theta * c;
        a.diag[k] = 1.0 + 2.0 * theta * c;
        rhs[k] = f[i] + (1.0 - theta) * c * second_difference(f, i);
        if i == 1 {
            rhs[k] += theta * c * f[0];
        }
        if i == n - 1 {
            rhs[k] += theta * c * f[n];
        }
    }
    let inner = a.solve(&rhs).ok_or(SolverError::NonFiniteState { t: t + dt })?;
    let mut w = Vec::with_capacity(n + 1);
    w.push(f[0]);
    w.extend(inner);
    w.push(f[n]);
    Ok(w)
}

pub fn evolve_csf(c0: &GraphCurve, snapshot_times: &[f64], cfg: &CsfConfig) -> Result<CsfSolution, SolverError> {
    evolve_csf_with_policy(c0, snapshot_times, cfg, &cfg.step_policy())
}

pub fn evolve_csf_with_policy(
    c0: &GraphCurve,
    snapshot_times: &[f64],
    cfg: &CsfConfig,
    policy: &StepPolicy,
) -> Result<CsfSolution, SolverError> {
    cfg.validate()?;
    timestep::validate_times(snapshot_times)?;
    let grid = *c0.grid();
    let traj = timestep::integrate(c0.values().to_vec(), snapshot_times, policy, |f, t, h| {
        step_values(&grid, f, t, h, cfg.scheme)
    })?;
    let snapshots = traj
        .states
        .into_iter()
        .map(|v| GraphCurve::from_values(grid, v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CsfSolution {
        grid,
        snapshot_times: snapshot_times.to_vec(),
        snapshots,
        config: cfg.clone(),
        steps: traj.steps,
        stats: traj.stats,
    })
}
