//! Derivative-free Nelder-Mead simplex minimizer with support for circular coordinates.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Normal};

use crate::geo::normalize_degrees;
use crate::{Error, Result};

const REFLECTION: f64 = 1.0;
const EXPANSION: f64 = 2.0;
const CONTRACTION: f64 = 0.5;
const SHRINK: f64 = 0.5;
const RELATIVE_STEP: f64 = 0.05;
const ZERO_STEP: f64 = 0.025;
const RESTART_SPREAD: f64 = 0.1;

/// Stopping rules for one solver run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Iteration budget.
    pub max_iterations: usize,
    /// Stop when the objective values of the simplex span at most this much...
    pub f_tolerance: f64,
    /// ...and every vertex lies within this max-norm distance of the best one.
    pub x_tolerance: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_iterations: 2000, f_tolerance: 1e-8, x_tolerance: 1e-8 }
    }
}

impl NelderMeadOptions {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidOptions("max_iterations must be positive".into()));
        }
        if [self.f_tolerance, self.x_tolerance].iter().any(|t| t.is_nan() || *t < 0.0) {
            return Err(Error::InvalidOptions("tolerances must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Outcome of a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    /// Best point found, circular coordinates wrapped into `[0, 360)`.
    pub x: Vec<f64>,
    /// Objective at `x`.
    pub f: f64,
    /// Iterations performed.
    pub iterations: usize,
    /// Objective evaluations performed.
    pub evaluations: usize,
    /// False when the iteration budget ran out before the tolerances were met.
    pub converged: bool,
}

fn wrap(x: &[f64], circular: &[bool]) -> Vec<f64> {
    x.iter()
        .zip(circular.iter().chain(core::iter::repeat(&false)))
        .map(|(v, c)| if *c { normalize_degrees(*v) } else { *v })
        .collect()
}

/// Initial simplex: `x0` plus one vertex per coordinate, offset by 5% of the coordinate
/// (0.025 for zero coordinates).
pub fn initial_simplex(x0: &[f64]) -> Vec<Vec<f64>> {
    let mut s = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] += if x0[i] != 0.0 { RELATIVE_STEP * x0[i] } else { ZERO_STEP };
        s.push(v);
    }
    s
}

/// One Nelder-Mead run from `x0`. The objective always sees circular coordinates wrapped
/// into `[0, 360)`; NaN values are treated as `+∞`.
///
/// Fails with [`Error::InvalidOptions`] when the objective is not finite at `x0`.
pub fn nelder_mead_run<F: FnMut(&[f64]) -> f64>(
    mut objective: F,
    x0: &[f64],
    circular: &[bool],
    opts: &NelderMeadOptions,
) -> Result<Minimum> {
    opts.validate()?;
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = objective(&wrap(x, circular));
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let f0 = eval(x0);
    if !f0.is_finite() {
        return Err(Error::InvalidOptions("objective is not finite at the starting point".into()));
    }
    let n = x0.len();
    if n == 0 {
        return Ok(Minimum { x: Vec::new(), f: f0, iterations: 0, evaluations, converged: true });
    }
    let mut simplex = initial_simplex(x0);
    let mut values: Vec<f64> = Vec::with_capacity(n + 1);
    values.push(f0);
    for v in &simplex[1..] {
        values.push(eval(v));
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let f_spread = values[n] - values[0];
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if f_spread <= opts.f_tolerance && x_spread <= opts.x_tolerance {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along =
            |t: f64, from: &[f64]| -> Vec<f64> { centroid.iter().zip(from).map(|(c, w)| c + t * (c - w)).collect() };
        let worst = simplex[n].clone();
        let xr = along(REFLECTION, &worst);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(REFLECTION * EXPANSION, &worst);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let shrink_needed = if fr < values[n] {
            let xc = along(REFLECTION * CONTRACTION, &worst);
            let fc = eval(&xc);
            if fc <= fr {
                simplex[n] = xc;
                values[n] = fc;
                false
            } else {
                true
            }
        } else {
            let xcc = along(-CONTRACTION, &worst);
            let fcc = eval(&xcc);
            if fcc < values[n] {
                simplex[n] = xcc;
                values[n] = fcc;
                false
            } else {
                true
            }
        };
        if shrink_needed {
            let best = simplex[0].clone();
            for k in 1..=n {
                let v: Vec<f64> = best.iter().zip(&simplex[k]).map(|(b, x)| b + SHRINK * (x - b)).collect();
                values[k] = eval(&v);
                simplex[k] = v;
            }
        }
    }
    Ok(Minimum { x: wrap(&simplex[0], circular), f: values[0], iterations, evaluations, converged })
}

/// Starting points for `restarts` runs: `x0` itself, then `x0` plus Gaussian noise with a
/// standard deviation of 10% of each coordinate's magnitude (0.1 for zero coordinates).
pub fn restart_starts(x0: &[f64], restarts: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = vec![x0.to_vec()];
    for _ in 1..restarts.max(1) {
        out.push(
            x0.iter()
                .map(|&v| {
                    let scale = if v != 0.0 { v.abs() } else { 1.0 };
                    v + RESTART_SPREAD * scale * normal.sample(&mut rng)
                })
                .collect(),
        );
    }
    out
}

/// Picks the run with the smallest objective; ties go to the earliest run.
pub fn best_of(runs: &[Minimum]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in runs.iter().enumerate() {
        if best.is_none_or(|b| r.f < runs[b].f) {
            best = Some(i);
        }
    }
    best
}

/// Best of `restarts` Nelder-Mead runs started from [`restart_starts`].
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    objective: F,
    x0: &[f64],
    circular: &[bool],
    opts: &NelderMeadOptions,
    restarts: usize,
    seed: u64,
) -> Result<Minimum> {
    let mut runs = Vec::new();
    for (k, start) in restart_starts(x0, restarts, seed).into_iter().enumerate() {
        match nelder_mead_run(&objective, &start, circular, opts) {
            Ok(m) => runs.push(m),
            Err(e) if k == 0 => return Err(e),
            Err(_) => {}
        }
    }
    let i = best_of(&runs).expect("the first run succeeded");
    Ok(runs.swap_remove(i))
}
