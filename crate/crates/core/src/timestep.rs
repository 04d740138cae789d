//! Time-step control shared by the Ricci and curve shortening solvers.
//!
//! Adaptive runs use step doubling: one step of size `h` is compared with two
//! steps of size `h/2`, and the two-half-step result is kept when the
//! difference is at most `error_tol`. Steps are clipped so every requested
//! snapshot time is hit exactly.
//!
//! The tolerance is per step rather than per unit time: near `t = 0` the
//! solutions here move like `log t`, and a per-unit-time target would force
//! `h/t` towards zero for no gain in accuracy at the snapshots.

use serde::{Deserialize, Serialize};

use crate::error::SolverError;

/// Time discretization weight: `theta = 1` or `theta = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    BackwardEuler,
    CrankNicolson,
}

impl Scheme {
    pub fn theta(self) -> f64 {
        match self {
            Scheme::BackwardEuler => 1.0,
            Scheme::CrankNicolson => 0.5,
        }
    }

    /// Order of accuracy; the local error scales like `h^(order+1)`.
    pub fn error_order(self) -> i32 {
        match self {
            Scheme::BackwardEuler => 1,
            Scheme::CrankNicolson => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::BackwardEuler => "backward-euler",
            Scheme::CrankNicolson => "crank-nicolson",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "backward-euler" | "be" => Ok(Scheme::BackwardEuler),
            "crank-nicolson" | "cn" => Ok(Scheme::CrankNicolson),
            other => Err(format!("unknown scheme '{other}' (expected backward-euler or crank-nicolson)")),
        }
    }
}

/// How step sizes are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum StepPolicy {
    /// Step doubling with local error `<= error_tol`.
    Adaptive { dt_init: f64, dt_max: f64, error_tol: f64, order: i32 },
    /// Constant `dt`, clipped at snapshot times.
    Fixed { dt: f64 },
    /// Exactly this sequence of accepted step sizes.
    Replay(Vec<f64>),
}

/// Counters from one integration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub newton_failures: usize,
    pub min_dt: f64,
    pub max_dt: f64,
}

/// Result of [`integrate`]: one state per requested time plus the accepted
/// step sequence (replayable through [`StepPolicy::Replay`]).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub steps: Vec<f64>,
    pub stats: StepStats,
}

const SAFETY: f64 = 0.9;
const MAX_GROWTH: f64 = 2.0;
const MIN_SHRINK: f64 = 0.2;
/// Steps below `UNDERFLOW * dt_init` abort the run.
const UNDERFLOW: f64 = 1e-14;

pub fn validate_times(times: &[f64]) -> Result<(), SolverError> {
    if times.is_empty() {
        return Err(SolverError::InvalidSchedule("no snapshot times".into()));
    }
    if !(times[0] >= 0.0) || times.iter().any(|t| !t.is_finite()) {
        return Err(SolverError::InvalidSchedule(format!("times must be finite and >= 0, got {times:?}")));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SolverError::InvalidSchedule(format!("times must be strictly increasing, got {times:?}")));
    }
    Ok(())
}

/// Advance `u0` from `times[0]` through every later time in `times`.
///
/// `step(u, t, h)` returns the state at `t + h`. A `NewtonDiverged` error from
/// it halves the step and retries.
pub fn integrate<F>(u0: Vec<f64>, times: &[f64], policy: &StepPolicy, mut step: F) -> Result<Trajectory, SolverError>
where
    F: FnMut(&[f64], f64, f64) -> Result<Vec<f64>, SolverError>,
{
    validate_times(times)?;
    let mut stats = StepStats { min_dt: f64::INFINITY, ..Default::default() };
    let mut steps = Vec::new();
    let mut states = vec![u0.clone()];
    let mut u = u0;
    let mut t = times[0];

    match policy {
        StepPolicy::Adaptive { dt_init, dt_max, error_tol, order } => {
            let mut dt = dt_init.min(*dt_max);
            for &target in &times[1..] {
                while t < target {
                    let remaining = target - t;
                    let landing = remaining <= dt * (1.0 + 1e-10);
                    let h = if landing { remaining } else { dt };
                    let attempt = step(&u, t, h).and_then(|big| {
                        let half = step(&u, t, 0.5 * h)?;
                        let two = step(&half, t + 0.5 * h, 0.5 * h)?;
                        Ok((big, two))
                    });
                    let (big, two) = match attempt {
                        Ok(pair) => pair,
                        Err(SolverError::NewtonDiverged { .. }) => {
                            stats.newton_failures += 1;
                            dt = 0.5 * h;
                            if dt < UNDERFLOW * dt_init {
                                return Err(SolverError::StepUnderflow { t, dt });
                            }
                            continue;
                        }
                        Err(e) => return Err(e),
                    };
                    let err = big.iter().zip(&two).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    if !err.is_finite() {
                        return Err(SolverError::NonFiniteState { t: t + h });
                    }
                    let factor = if err == 0.0 {
                        MAX_GROWTH
                    } else {
                        (SAFETY * (error_tol / err).powf(1.0 / (*order + 1) as f64)).clamp(MIN_SHRINK, MAX_GROWTH)
                    };
                    if err <= *error_tol {
                        u = two;
                        t = if landing { target } else { t + h };
                        steps.push(h);
                        stats.accepted += 1;
                        stats.min_dt = stats.min_dt.min(h);
                        stats.max_dt = stats.max_dt.max(h);
                        // a clipped landing step says nothing about growing dt
                        dt = if landing && factor >= 1.0 { dt.max(factor * h) } else { factor * h };
                        dt = dt.min(*dt_max);
                    } else {
                        stats.rejected += 1;
                        dt = factor * h;
                        if dt < UNDERFLOW * dt_init {
                            return Err(SolverError::StepUnderflow { t, dt });
                        }
                    }
                }
                states.push(u.clone());
            }
        }
        StepPolicy::Fixed { dt } => {
            for &target in &times[1..] {
                while t < target {
                    let remaining = target - t;
                    let landing = remaining <= dt * (1.0 + 1e-10);
                    let h = if landing { remaining } else { *dt };
                    u = subdivided_step(&mut step, &u, t, h, 0, &mut stats)?;
                    t = if landing { target } else { t + h };
                    steps.push(h);
                    stats.accepted += 1;
                    stats.min_dt = stats.min_dt.min(h);
                    stats.max_dt = stats.max_dt.max(h);
                }
                states.push(u.clone());
            }
        }
        StepPolicy::Replay(seq) => {
            let mut k = 0;
            for &target in &times[1..] {
                while t < target {
                    let h = *seq.get(k).ok_or_else(|| {
                        SolverError::InvalidSchedule(format!("replay sequence exhausted at t = {t}"))
                    })?;
                    k += 1;
                    u = step(&u, t, h)?;
                    let next = t + h;
                    t = if (next - target).abs() <= 1e-12 * target.abs().max(h) { target } else { next };
                    if t > target {
                        return Err(SolverError::InvalidSchedule(format!(
                            "replay step overshoots snapshot {target}"
                        )));
                    }
                    steps.push(h);
                    stats.accepted += 1;
                    stats.min_dt = stats.min_dt.min(h);
                    stats.max_dt = stats.max_dt.max(h);
                }
                states.push(u.clone());
            }
        }
    }
    if stats.accepted == 0 {
        stats.min_dt = 0.0;
    }
    Ok(Trajectory { states, steps, stats })
}

fn subdivided_step<F>(
    step: &mut F,
    u: &[f64],
    t: f64,
    h: f64,
    depth: u32,
    stats: &mut StepStats,
) -> Result<Vec<f64>, SolverError>
where
    F: FnMut(&[f64], f64, f64) -> Result<Vec<f64>, SolverError>,
{
    match step(u, t, h) {
        Err(SolverError::NewtonDiverged { .. }) if depth < 40 => {
            stats.newton_failures += 1;
            let half = subdivided_step(step, u, t, 0.5 * h, depth + 1, stats)?;
            subdivided_step(step, &half, t + 0.5 * h, 0.5 * h, depth + 1, stats)
        }
        other => other,
    }
}
