//! Data fusion: the global section nearest (in the sup pseudometric) to an assignment.
//!
//! A global section is determined by its value on the whole space, so the search runs over
//! the top stalk. The objective `s ↦ sup_U d_U(a(U), S(U ⊆ X) s)` is minimized with
//! Nelder-Mead and a few seeded restarts. For linear sheaves the solver is seeded with the
//! weighted least-squares section, and the result is flagged accordingly.

mod nelder_mead;

use alloc::vec::Vec;

pub use nelder_mead::{
    best_of, initial_simplex, nelder_mead, nelder_mead_run, restart_starts, Minimum, NelderMeadOptions,
};

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Normal};

use crate::consistency::{assignment_distance, consistency_radius, lipschitz_constant, pullback_global, Assignment};
use crate::linalg::{least_squares, Matrix};
use crate::sheaf::{RestrictionMap, Sheaf};
use crate::spaces::{FactorKind, Point, ValueSpace};
use crate::topology::OpenId;
use crate::{Error, Result};

/// Where the search starts.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// The assigned value on the whole space, or a value assembled from the assignment.
    FromAssignmentAtX,
    /// A given point of the top stalk.
    Explicit(Point),
    /// The default start plus seeded Gaussian noise with this relative scale.
    Perturbed(f64),
}

/// Options for [`fuse`].
#[derive(Debug, Clone, PartialEq)]
pub struct FusionOptions {
    /// Iteration budget per run (default 2000).
    pub max_iterations: usize,
    /// Objective spread tolerance (default 1e-8).
    pub f_tolerance: f64,
    /// Simplex size tolerance (default 1e-8).
    pub x_tolerance: f64,
    /// Number of runs, the first from the start point (default 5).
    pub restarts: usize,
    /// Start point policy.
    pub init: Init,
    /// Seed of the restart perturbations.
    pub seed: u64,
    /// Lipschitz constant of the restrictions, used for the lower bound of nonlinear sheaves.
    pub lipschitz: Option<f64>,
}

impl Default for FusionOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            f_tolerance: 1e-8,
            x_tolerance: 1e-8,
            restarts: 5,
            init: Init::FromAssignmentAtX,
            seed: 0,
            lipschitz: None,
        }
    }
}

impl FusionOptions {
    /// Solver settings for one run.
    pub fn solver(&self) -> NelderMeadOptions {
        NelderMeadOptions {
            max_iterations: self.max_iterations,
            f_tolerance: self.f_tolerance,
            x_tolerance: self.x_tolerance,
        }
    }

    fn validate(&self) -> Result<()> {
        self.solver().validate()?;
        if self.restarts == 0 {
            return Err(Error::InvalidOptions("restarts must be positive".into()));
        }
        if let Init::Perturbed(s) = self.init {
            if s.is_nan() || s < 0.0 {
                return Err(Error::InvalidOptions("perturbation scale must be nonnegative".into()));
            }
        }
        if self.lipschitz.is_some_and(|k| k.is_nan() || k < 0.0) {
            return Err(Error::InvalidOptions("Lipschitz constant must be nonnegative".into()));
        }
        Ok(())
    }
}

/// How the start point was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionMethod {
    /// Plain Nelder-Mead from the requested start.
    NelderMead,
    /// Nelder-Mead polishing the weighted least-squares section of a linear sheaf.
    ProjectionSeeded,
}

/// Result of [`fuse`].
#[derive(Debug, Clone)]
pub struct FusionResult<'s> {
    /// Fused value on the whole space.
    pub section_at_x: Point,
    /// Pullback of `section_at_x` to every open.
    pub fused: Assignment<'s>,
    /// Sup distance between the input assignment and the fused one.
    pub residual: f64,
    /// Consistency radius of the input.
    pub radius: f64,
    /// Lipschitz constant used for the bound, when known.
    pub lipschitz: Option<f64>,
    /// `radius / (1 + K)`, when `K` is known.
    pub lower_bound: Option<f64>,
    /// Iterations of the winning run.
    pub iterations: usize,
    /// Objective evaluations over all runs.
    pub evaluations: usize,
    /// Whether the winning run met the tolerances.
    pub converged: bool,
    /// Start-point method.
    pub method: FusionMethod,
    /// Index of the winning run.
    pub best_run: usize,
    /// Every run, in start order.
    pub runs: Vec<Minimum>,
}

/// `radius / (1 + K)`.
pub fn fusion_lower_bound(radius: f64, k: f64) -> f64 {
    radius / (1.0 + k)
}

/// The fusion objective with its restriction maps compiled once.
pub struct Objective<'a> {
    top: ValueSpace,
    terms: Vec<(RestrictionMap, &'a ValueSpace, &'a [f64])>,
}

impl<'a> Objective<'a> {
    /// Compiles the objective of an assignment.
    pub fn new(a: &'a Assignment<'_>) -> Result<Self> {
        let sheaf: &'a Sheaf = a.sheaf();
        let x = sheaf.topology().whole();
        let mut terms = Vec::with_capacity(a.len());
        for (open, value) in a.iter() {
            terms.push((sheaf.compose(x, open)?, sheaf.stalk(open), value.coords()));
        }
        Ok(Self { top: sheaf.stalk(x).clone(), terms })
    }

    /// `sup_U d_U(a(U), S(U ⊆ X) s)` for a candidate `s` on the whole space.
    pub fn eval(&self, s: &[f64]) -> f64 {
        let mut s = s.to_vec();
        self.top.normalize(&mut s);
        let mut worst = 0.0f64;
        for (map, space, value) in &self.terms {
            let d = space.dist(value, &map.apply(&s));
            if d.is_nan() {
                return f64::INFINITY;
            }
            worst = worst.max(d);
        }
        worst
    }
}

/// Runs restarts one after the other.
pub fn sequential_runner(
    starts: &[Vec<f64>],
    run: &(dyn Fn(&[f64]) -> Result<Minimum> + Sync),
) -> Vec<Result<Minimum>> {
    starts.iter().map(|s| run(s)).collect()
}

/// Nearest global section with sequential restarts.
pub fn fuse<'s>(a: &Assignment<'s>, opts: &FusionOptions) -> Result<FusionResult<'s>> {
    fuse_with(a, opts, sequential_runner)
}

/// Nearest global section; `runner` evaluates the restart runs (possibly in parallel) and
/// must return one result per start, in order.
pub fn fuse_with<'s, R>(a: &Assignment<'s>, opts: &FusionOptions, runner: R) -> Result<FusionResult<'s>>
where
    R: FnOnce(&[Vec<f64>], &(dyn Fn(&[f64]) -> Result<Minimum> + Sync)) -> Vec<Result<Minimum>>,
{
    opts.validate()?;
    if a.is_empty() {
        return Err(Error::DegenerateAssignment);
    }
    let sheaf = a.sheaf();
    let x = sheaf.topology().whole();
    let top = sheaf.stalk(x);
    if let Some(f) = top.factors().iter().find(|f| matches!(f.kind, FactorKind::Discrete(_) | FactorKind::Simplex(_))) {
        return Err(Error::NoTopStalk(alloc::format!("{} factor", f.kind.name())));
    }
    let objective = Objective::new(a)?;
    let circular = top.circular_mask();

    // an observed top value that is already a consistent section is kept bit for bit
    let observed_global =
        matches!(opts.init, Init::FromAssignmentAtX) && a.get(x).is_some_and(|p| objective.eval(p.coords()) == 0.0);
    let projection = if sheaf.is_linear() && !observed_global { Some(least_squares_section(a)?) } else { None };
    let (x0, method) = match &opts.init {
        Init::Explicit(p) => (top.point(p.to_vec())?.into_inner(), FusionMethod::NelderMead),
        Init::FromAssignmentAtX => match projection {
            Some(p) => (p, FusionMethod::ProjectionSeeded),
            None => (default_start(a), FusionMethod::NelderMead),
        },
        Init::Perturbed(scale) => {
            let (base, method) = match projection {
                Some(p) => (p, FusionMethod::ProjectionSeeded),
                None => (default_start(a), FusionMethod::NelderMead),
            };
            (perturb(&base, *scale, opts.seed), method)
        }
    };

    let f0 = objective.eval(&x0);
    let runs: Vec<Minimum> = if f0 == 0.0 {
        alloc::vec![Minimum { x: x0.clone(), f: 0.0, iterations: 0, evaluations: 1, converged: true }]
    } else {
        let starts = restart_starts(&x0, opts.restarts, opts.seed);
        let solver = opts.solver();
        let run = |s: &[f64]| nelder_mead_run(|v: &[f64]| objective.eval(v), s, &circular, &solver);
        let results = runner(&starts, &run);
        let mut runs = Vec::with_capacity(results.len());
        for (k, r) in results.into_iter().enumerate() {
            match r {
                Ok(m) => runs.push(m),
                Err(e) if k == 0 => return Err(e),
                Err(_) => runs.push(Minimum {
                    x: starts[k].clone(),
                    f: f64::INFINITY,
                    iterations: 0,
                    evaluations: 1,
                    converged: false,
                }),
            }
        }
        runs
    };
    let best_run = best_of(&runs).ok_or(Error::DegenerateAssignment)?;
    let best = &runs[best_run];
    let section_at_x = top.point(best.x.clone())?;
    let fused = pullback_global(sheaf, &section_at_x)?;
    let residual = assignment_distance(a, &fused)?;
    let radius = consistency_radius(a)?.radius;
    let lipschitz = match opts.lipschitz {
        Some(k) => Some(k),
        None if sheaf.is_linear() => Some(lipschitz_constant(sheaf)?),
        None => None,
    };
    Ok(FusionResult {
        section_at_x,
        fused,
        residual,
        radius,
        lipschitz,
        lower_bound: lipschitz.map(|k| fusion_lower_bound(radius, k)),
        iterations: best.iterations,
        evaluations: runs.iter().map(|r| r.evaluations).sum(),
        converged: best.converged,
        method,
        best_run,
        runs,
    })
}

fn perturb(x: &[f64], scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    x.iter().map(|&v| v + scale * (if v != 0.0 { v.abs() } else { 1.0 }) * normal.sample(&mut rng)).collect()
}

/// The value on the whole space if assigned. Otherwise the components of a completed top
/// stalk are filled from assigned component values, and anything left takes the midpoint
/// of its bounds.
fn default_start(a: &Assignment<'_>) -> Vec<f64> {
    let sheaf = a.sheaf();
    let x = sheaf.topology().whole();
    if let Some(p) = a.get(x) {
        return p.to_vec();
    }
    let mut out: Vec<f64> = sheaf.stalk(x).bounds().iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    if sheaf.is_declared(x) {
        return out;
    }
    let mut off = 0;
    for &c in sheaf.components(x) {
        let dim = sheaf.stalk(c).dim();
        if let Some(p) = a.get(c) {
            out[off..off + dim].copy_from_slice(p);
        }
        off += dim;
    }
    out
}

/// Weighted least-squares section of a linear sheaf: minimizes
/// `Σ_U Σ_factors w² ‖(S(U ⊆ X) s − a(U))_factor‖²`.
fn least_squares_section(a: &Assignment<'_>) -> Result<Vec<f64>> {
    let sheaf = a.sheaf();
    let x = sheaf.topology().whole();
    let n = sheaf.stalk(x).dim();
    let mut blocks: Vec<Matrix> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let defined: Vec<OpenId> = a.domain().collect();
    for open in defined {
        let m = sheaf.linear_matrix(x, open)?;
        let value = a.get(open).expect("open is in the domain");
        let stalk = sheaf.stalk(open);
        let mut weighted = m.clone();
        for (f, r) in stalk.factors().iter().zip(stalk.factor_ranges()) {
            for i in r {
                for j in 0..n {
                    weighted[(i, j)] *= f.weight;
                }
                rhs.push(f.weight * value[i]);
            }
        }
        blocks.push(weighted);
    }
    let stacked = Matrix::vstack(n, &blocks);
    Ok(least_squares(&stacked, &rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sheaf::{MapBody, SheafBuilder};
    use crate::topology::{generate_topology, EntityUniverse};
    use alloc::vec;

    fn chain() -> Sheaf {
        let u = EntityUniverse::new(["a", "b"]).unwrap();
        let t = generate_topology(u, &[vec!["a"]]).unwrap();
        let mut b = SheafBuilder::new(t);
        b.stalk_named(&["a"], ValueSpace::euclidean(1)).unwrap();
        b.stalk_named(&["a", "b"], ValueSpace::euclidean(1)).unwrap();
        b.restriction_named(&["a", "b"], &["a"], MapBody::Identity).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn chain_toy_splits_the_difference() {
        let s = chain();
        let mut a = Assignment::new(&s);
        a.set(s.topology().whole(), vec![0.0]).unwrap();
        a.set(s.topology().open_by_names(&["a"]).unwrap(), vec![2.0]).unwrap();
        let r = fuse(&a, &FusionOptions::default()).unwrap();
        assert!((r.section_at_x[0] - 1.0).abs() < 1e-6, "{:?}", r.section_at_x);
        assert!((r.residual - 1.0).abs() < 1e-6);
        assert_eq!(r.method, FusionMethod::ProjectionSeeded);
        assert_eq!(r.lower_bound, Some(1.0));
        assert!(r.residual >= r.lower_bound.unwrap() - 1e-9);
    }

    #[test]
    fn global_input_is_returned_unchanged() {
        let s = chain();
        let top = s.stalk(s.topology().whole()).point(vec![3.0]).unwrap();
        let a = pullback_global(&s, &top).unwrap();
        let r = fuse(&a, &FusionOptions::default()).unwrap();
        assert_eq!(r.section_at_x, top);
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn empty_assignment_is_rejected() {
        let s = chain();
        let r = fuse(&Assignment::new(&s), &FusionOptions::default());
        assert_eq!(r.unwrap_err(), Error::DegenerateAssignment);
    }

    #[test]
    fn discrete_top_stalk_is_rejected() {
        let u = EntityUniverse::new(["a"]).unwrap();
        let t = generate_topology(u, &[] as &[Vec<&str>]).unwrap();
        let mut b = SheafBuilder::new(t);
        b.stalk_named(&["a"], ValueSpace::discrete(["on", "off"])).unwrap();
        let s = b.build().unwrap();
        let mut a = Assignment::new(&s);
        a.set(s.topology().whole(), vec![1.0]).unwrap();
        assert!(matches!(fuse(&a, &FusionOptions::default()), Err(Error::NoTopStalk(_))));
    }

    #[test]
    fn invalid_options() {
        let s = chain();
        let mut a = Assignment::new(&s);
        a.set(s.topology().whole(), vec![0.0]).unwrap();
        let opts = FusionOptions { restarts: 0, ..Default::default() };
        assert!(matches!(fuse(&a, &opts), Err(Error::InvalidOptions(_))));
    }

    #[test]
    fn lower_bound_formula() {
        assert_eq!(fusion_lower_bound(0.0, 7.0), 0.0);
        assert_eq!(fusion_lower_bound(15.7, 0.0), 15.7);
    }
}
