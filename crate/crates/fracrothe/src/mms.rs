//! Manufactured solutions and independent reference oracles.
//!
//! The manufactured solution is separable,
//! `u(t, x) = T(t) * sin(k*pi*x/L)` with `T(t) = |t|^gamma + beta`
//! (`gamma > 1`), which satisfies the Dirichlet boundary conditions by
//! construction and has closed-form time derivative, Caputo derivative
//! and Laplacian image. The forcing is built as `f(t, w) = w + G(t)` so
//! the delay pathway is genuinely exercised: the exact solution solves
//! the equation only when `w` really is the delayed state.

use crate::error::Error;
use crate::grid::{gamma_fn, FractionalTerm, TimeGrid};
use crate::spaceop::DirichletLaplacian1D;
use crate::stepper::{run, DelayHistory, ProblemSpec, Trajectory};
use crate::Result;
use std::sync::Arc;

/// Exact Caputo derivative of `t^gamma`:
/// `Gamma(gamma+1)/Gamma(gamma+1-alpha) * t^(gamma-alpha)`.
pub fn exact_caputo_power(gamma_exponent: f64, order: f64, t: f64) -> Result<f64> {
    if !(gamma_exponent > 0.0) {
        return Err(Error::BadExponent {
            constraint: "gamma > 0",
            value: gamma_exponent,
        });
    }
    if !(order > 0.0 && order < 1.0) {
        return Err(Error::OrderOutOfRange(order));
    }
    if t < 0.0 {
        return Err(Error::OutOfDomain {
            t,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(gamma_fn(gamma_exponent + 1.0) / gamma_fn(gamma_exponent + 1.0 - order)
        * t.powf(gamma_exponent - order))
}

fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let simpson = |l: f64, r: f64| (r - l) / 6.0 * (f(l) + 4.0 * f(0.5 * (l + r)) + f(r));
    let m = 0.5 * (a + b);
    let whole = simpson(a, b);
    let left = simpson(a, m);
    let right = simpson(m, b);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol {
        return Ok(left + right + err / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureNonConvergence);
    }
    // per-interval tolerance is kept, not halved: weakly singular
    // endpoints would otherwise outrun any finite recursion depth
    Ok(adaptive_simpson(f, a, m, tol, depth - 1)? + adaptive_simpson(f, m, b, tol, depth - 1)?)
}

/// Caputo derivative by adaptive quadrature of the defining integral.
/// The kernel singularity at `s = t` is removed exactly by the
/// substitution `u = (t - s)^(1-alpha)`:
///
/// ```text
/// int_0^t g'(s) (t-s)^(-alpha) ds
///   = 1/(1-alpha) * int_0^{t^(1-alpha)} g'(t - u^(1/(1-alpha))) du.
/// ```
pub fn caputo_by_quadrature(
    g_prime: impl Fn(f64) -> f64,
    order: f64,
    t: f64,
    tol: f64,
) -> Result<f64> {
    if !(order > 0.0 && order < 1.0) {
        return Err(Error::OrderOutOfRange(order));
    }
    if !(tol > 0.0) {
        return Err(Error::NonPositiveInput {
            name: "tol",
            value: tol,
        });
    }
    if t < 0.0 {
        return Err(Error::OutOfDomain {
            t,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let p = 1.0 - order;
    // clamp s to [0, t]: rounding in u^(1/p) can push it a hair outside
    let integrand = move |u: f64| g_prime((t - u.max(0.0).powf(1.0 / p)).clamp(0.0, t));
    let u_hi = t.powf(p);
    let integral =
        adaptive_simpson(&integrand, 0.0, u_hi, 0.02 * tol * p * gamma_fn(1.0 - order), 60)?;
    Ok(integral / (p * gamma_fn(1.0 - order)))
}

/// Separable exact solution `(|t|^gamma + beta) * sin(k*pi*x/L)`.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedSolution {
    gamma_exponent: f64,
    shift: f64,
    mode: usize,
    length: f64,
}

impl ManufacturedSolution {
    /// Requires `gamma > 1` so the time derivative stays bounded at 0
    /// and the first-order stepping rate is actually observable.
    pub fn new(gamma_exponent: f64, shift: f64, mode: usize, length: f64) -> Result<Self> {
        if !(gamma_exponent > 1.0) {
            return Err(Error::BadExponent {
                constraint: "gamma > 1",
                value: gamma_exponent,
            });
        }
        if mode == 0 {
            return Err(Error::NonPositiveInput {
                name: "mode",
                value: 0.0,
            });
        }
        if !(length > 0.0) {
            return Err(Error::NonPositiveInput {
                name: "length",
                value: length,
            });
        }
        Ok(Self {
            gamma_exponent,
            shift,
            mode,
            length,
        })
    }

    pub fn gamma_exponent(&self) -> f64 {
        self.gamma_exponent
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn mode(&self) -> usize {
        self.mode
    }

    /// Time factor `|t|^gamma + beta`; the even extension keeps the
    /// history segment Lipschitz for non-integer exponents.
    pub fn time_factor(&self, t: f64) -> f64 {
        t.abs().powf(self.gamma_exponent) + self.shift
    }

    pub fn time_derivative(&self, t: f64) -> f64 {
        self.gamma_exponent * t.abs().powf(self.gamma_exponent - 1.0) * t.signum()
    }

    /// Caputo derivative of the time factor for `t >= 0` (the shift is
    /// a constant and drops out).
    pub fn caputo_time(&self, order: f64, t: f64) -> Result<f64> {
        exact_caputo_power(self.gamma_exponent, order, t)
    }

    /// Continuous Laplacian eigenvalue of the sine mode, `(k*pi/L)^2`.
    pub fn spatial_eigenvalue(&self) -> f64 {
        let f = self.mode as f64 * std::f64::consts::PI / self.length;
        f * f
    }

    pub fn eval_point(&self, t: f64, x: f64) -> f64 {
        self.time_factor(t) * (self.mode as f64 * std::f64::consts::PI * x / self.length).sin()
    }

    /// Exact state on the operator's interior nodes.
    pub fn state(&self, t: f64, lap: &DirichletLaplacian1D) -> Vec<f64> {
        lap.discretize(|x| self.eval_point(t, x))
    }
}

/// Builds the problem whose exact solution is `ms`: history is the
/// exact solution on `[-nu, 0]` and the forcing is `f(t, w) = w + G(t)`
/// with
///
/// ```text
/// G(t) = d/dt u + sum_q a_q D^(alpha_q) u + A u - u(t - nu),
/// ```
///
/// using the continuous Laplacian image of the sine mode. The discrete
/// scheme therefore sees the spatial consistency error of the stencil,
/// which is what the spatial-order study measures.
pub fn build_mms_spec(
    ms: &ManufacturedSolution,
    terms: Vec<FractionalTerm>,
    grid: TimeGrid,
    interior_nodes: usize,
) -> Result<ProblemSpec> {
    let lap = Arc::new(DirichletLaplacian1D::new(interior_nodes, ms.length)?);
    let mu = ms.spatial_eigenvalue();
    let delay = grid.delay();
    let sine = lap.discretize(|x| {
        (ms.mode as f64 * std::f64::consts::PI * x / ms.length).sin()
    });

    let ms_f = *ms;
    let terms_f = terms.clone();
    let sine_f = sine.clone();
    let forcing = Arc::new(move |t: f64, w: &[f64]| {
        let mut g = ms_f.time_derivative(t) + mu * ms_f.time_factor(t)
            - ms_f.time_factor(t - delay);
        for term in &terms_f {
            g += term.weight() * ms_f.caputo_time(term.order(), t).unwrap_or(f64::NAN);
        }
        w.iter().zip(&sine_f).map(|(wi, s)| wi + g * s).collect()
    });

    let ms_h = *ms;
    let sine_h = sine;
    let history = DelayHistory::from_fn(
        &grid,
        Arc::new(move |t: f64| {
            let tf = ms_h.time_factor(t);
            sine_h.iter().map(|s| tf * s).collect()
        }),
    );

    ProblemSpec::new(grid, terms, lap, forcing, history)
}

/// Runs the same problem at `n * refinement` steps and restricts the
/// result to the coarse nodes; an independent "truth" for problems
/// without closed forms.
pub fn reference_solve(spec: &ProblemSpec, refinement: usize) -> Result<Trajectory> {
    if refinement == 0 {
        return Err(Error::NonPositiveInput {
            name: "refinement",
            value: 0.0,
        });
    }
    let fine_spec = spec.with_subdivisions(spec.grid.subdivisions() * refinement)?;
    let fine = run(&fine_spec)?;
    if refinement == 1 {
        return fine.clone_on(spec.grid);
    }
    let n = spec.grid.subdivisions() as i64;
    let m = spec.grid.step_count() as i64;
    let r = refinement as i64;
    let states = (-n..=m)
        .map(|j| fine.state(j * r).map(|s| s.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::from_states(spec.grid, states)
}

impl Trajectory {
    fn clone_on(&self, grid: TimeGrid) -> Result<Trajectory> {
        let n = grid.subdivisions() as i64;
        let m = grid.step_count() as i64;
        let states = (-n..=m)
            .map(|j| self.state(j).map(|s| s.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::from_states(grid, states)
    }
}
