//! Property checks shared by the property suite and the acceptance target.
#![allow(dead_code)]

use std::path::Path;

use breatherlab::csf::{csf_profile, evolve_csf_with_policy, CsfConfig, GraphCurve};
use breatherlab::grid::{Grid1D, ScalarField};
use breatherlab::io::SnapshotCsv;
use breatherlab::metric::{breather_initial, BreatherParams, ConformalMetric};
use breatherlab::ricci::{self, BoundarySpec, SolverConfig};
use breatherlab::timestep::{Scheme, StepPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn be_frozen() -> SolverConfig {
    SolverConfig {
        scheme: Scheme::BackwardEuler,
        boundary: BoundarySpec::frozen(),
        dt_init: 1e-4,
        dt_max: 1e-2,
        error_tol: 1e-4,
        ..Default::default()
    }
}

/// Sum of a few random low modes plus a constant.
fn random_smooth(rng: &mut ChaCha8Rng, amp: f64) -> impl Fn(f64) -> f64 {
    let c: f64 = rng.gen_range(-amp..amp);
    let modes: Vec<(f64, f64, f64)> = (0..4)
        .map(|k| (rng.gen_range(-amp..amp) / (k + 1) as f64, (k + 1) as f64 * rng.gen_range(0.5..1.5), rng.gen_range(0.0..6.3)))
        .collect();
    move |x| c + modes.iter().map(|(a, w, p)| a * (w * x + p).sin()).sum::<f64>()
}

/// Random ordered pair `u0 <= v0` for one seed.
pub fn ordered_pair(seed: u64, grid: Grid1D) -> (ConformalMetric, ConformalMetric) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_smooth(&mut rng, 0.5);
    let g = random_smooth(&mut rng, 0.3);
    let lift: f64 = rng.gen_range(0.0..0.2);
    let u = ScalarField::from_fn(grid, &f).unwrap();
    // v - u = lift + g^2 >= 0
    let v = ScalarField::from_fn(grid, |x| f(x) + lift + g(x) * g(x)).unwrap();
    (ConformalMetric::new(u), ConformalMetric::new(v))
}

/// Worst ordering violation over `seeds`, checked with backward Euler.
pub fn comparison_campaign(seeds: std::ops::Range<u64>) -> (usize, f64) {
    let grid = Grid1D::new(-2.0, 2.0, 48).unwrap();
    let cfg = be_frozen();
    let mut worst = 0.0f64;
    let mut count = 0;
    for seed in seeds {
        let (u0, v0) = ordered_pair(seed, grid);
        let r = ricci::comparison_check(&u0, &v0, 0.1, &cfg).unwrap();
        assert!(r.ordered, "seed {seed}: violation {}", r.max_violation);
        worst = worst.max(r.max_violation);
        count += 1;
    }
    (count, worst)
}

/// `u = c` is reproduced exactly by every step.
pub fn constant_preserved(c: f64, dt: f64, scheme: Scheme) -> bool {
    let g = Grid1D::new(-3.0, 3.0, 60).unwrap();
    let u = ConformalMetric::from_values(g, vec![c; 61]).unwrap();
    let cfg = SolverConfig { scheme, ..be_frozen() };
    ricci::step(&u, 0.0, dt, &cfg).map(|w| w == u).unwrap_or(false)
}

/// Evolving the pulled-back data on its own translated grid reproduces the
/// node-shifted evolution of the original, bit for bit.
pub fn translation_equivariant(k: usize) -> bool {
    let p = BreatherParams::default_breather();
    let g = Grid1D::new(-2.0, 2.0, 200).unwrap();
    let u0 = breather_initial(&p, g).unwrap();
    let a = k as f64 * g.dx();
    let pulled = breatherlab::metric::shift_pullback(&u0, a).unwrap();
    // the pullback lives on [x_min, x_max - a]; the original data sits on
    // the same nodes moved right by a
    let moved_grid = pulled.grid().translated(a);
    let original = ConformalMetric::from_values(moved_grid, u0.values()[k..].to_vec()).unwrap();
    let cfg = SolverConfig { scheme: Scheme::CrankNicolson, ..be_frozen() };
    let times = [0.0, 0.05];
    let pilot = ricci::evolve(&pulled, &times, &cfg).unwrap();
    let replay = StepPolicy::Replay(pilot.steps);
    let sa = ricci::evolve_with_policy(&pulled, &times, &cfg, &replay).unwrap();
    let sb = ricci::evolve_with_policy(&original, &times, &cfg, &replay).unwrap();
    sa.snapshots[1].values() == sb.snapshots[1].values()
}

/// Odd (and even) data on a symmetric grid keep their parity node for node.
pub fn parity_preserved(n_half: usize, amp: f64) -> bool {
    let g = Grid1D::new(-2.0, 2.0, 2 * n_half).unwrap();
    let n = g.n();
    let half: Vec<f64> = (0..=n_half).map(|i| amp * csf_profile(g.x(i))).collect();
    let policy = StepPolicy::Fixed { dt: 1e-4 };
    [1.0, -1.0].iter().all(|&sign| {
        let mut v: Vec<f64> = (0..=n).map(|i| if i <= n_half { half[i] } else { sign * half[n - i] }).collect();
        if sign < 0.0 {
            v[n_half] = 0.0;
        }
        let c = GraphCurve::from_values(g, v).unwrap();
        let sol = evolve_csf_with_policy(&c, &[0.0, 2e-3], &CsfConfig::default(), &policy).unwrap();
        let w = sol.snapshots[1].values();
        (0..=n).all(|i| w[i] == sign * w[n - i])
    })
}

/// Writing and reading a snapshot file returns identical bits.
pub fn csv_round_trip(values: &[f64], t: f64, dir: &Path) -> bool {
    let g = Grid1D::new(-1.5, 2.5, values.len() - 1).unwrap();
    let s = SnapshotCsv::from_grid(t, "u", &g, values);
    let path = dir.join("snap.csv");
    s.write(&path).unwrap();
    let back = SnapshotCsv::read(&path).unwrap();
    back.t.to_bits() == t.to_bits()
        && back.values.iter().zip(values).all(|(a, b)| a.to_bits() == b.to_bits())
        && back.x.iter().zip(g.nodes()).all(|(a, b)| a.to_bits() == b.to_bits())
}

/// Two identical runs agree bit for bit, step sequence included.
pub fn evolution_deterministic() -> bool {
    let p = BreatherParams::default_breather();
    let g = Grid1D::new(-4.0, 4.0, 200).unwrap();
    let u0 = breather_initial(&p, g).unwrap();
    let cfg = SolverConfig { error_tol: 1e-3, ..Default::default() };
    let times = [0.0, 0.02 / p.lambda, 0.02];
    let a = ricci::evolve(&u0, &times, &cfg).unwrap();
    let b = ricci::evolve(&u0, &times, &cfg).unwrap();
    a.steps == b.steps && a.snapshots == b.snapshots
}
