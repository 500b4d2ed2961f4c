//! The implicit time-stepping scheme.
//!
//! Each step solves the rearranged discrete equation
//!
//! ```text
//! (1 + sum_q c_q) theta_j + h A theta_j
//!     = theta_{j-1}
//!     + sum_q c_q * [ sum_{i=1..j-1} (b_{j-i-1} - b_{j-i}) theta_i
//!                     + b_{j-1} theta_0 ]
//!     + h f(t_j, theta_{j-n}),
//! ```
//!
//! with per-term coefficients `c_q = a_q h^(1-alpha_q)/Gamma(2-alpha_q)`
//! and L1 weights `b_i`. The delayed argument `theta_{j-n}` is always a
//! previously computed state (or a history sample), so no nonlinear
//! iteration is needed for linear `A`.

use crate::error::Error;
use crate::grid::{
    caputo_l1_with, l1_weights, multi_term_coefficient, FractionalTerm, KahanVec, L1Weights,
    TimeGrid,
};
use crate::spaceop::SpatialOperator;
use crate::Result;
use std::sync::Arc;

/// History function `chi` as a callable plus its node samples.
pub type StateFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Forcing `f(t, w)` where `w` is the delayed state.
pub type ForcingFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// Prescribed solution segment on `[-nu, 0]`, sampled on the grid nodes.
#[derive(Clone)]
pub struct DelayHistory {
    samples: Vec<Vec<f64>>, // index j + n for j = -n..0
    source: StateFn,
}

impl DelayHistory {
    /// Samples `source` at the nodes `t_j = j*h`, `j = -n..0`.
    pub fn from_fn(grid: &TimeGrid, source: StateFn) -> Self {
        let n = grid.subdivisions() as i64;
        let samples = (-n..=0).map(|j| source(grid.node(j))).collect();
        Self { samples, source }
    }

    /// Sample at node index `j` in `[-n, 0]`.
    pub fn sample(&self, j: i64) -> Result<&[f64]> {
        let n = self.samples.len() as i64 - 1;
        if j < -n || j > 0 {
            return Err(Error::IndexOutOfRange {
                index: j,
                min: -n,
                max: 0,
            });
        }
        Ok(&self.samples[(j + n) as usize])
    }

    pub fn subdivisions(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn dimension(&self) -> usize {
        self.samples[0].len()
    }

    /// Evaluates the continuous history at `t` in `[-nu, 0]`.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        (self.source)(t)
    }

    /// Largest difference quotient over adjacent samples, a lower bound
    /// for the Lipschitz constant of `chi`.
    pub fn empirical_lipschitz(&self, step: f64) -> f64 {
        let mut max = 0.0f64;
        for w in self.samples.windows(2) {
            let d = w[0]
                .iter()
                .zip(&w[1])
                .map(|(a, b)| (b - a) * (b - a))
                .sum::<f64>()
                .sqrt();
            max = max.max(d / step);
        }
        max
    }

    /// Re-samples the same source on another grid.
    pub fn resample(&self, grid: &TimeGrid) -> Self {
        Self::from_fn(grid, self.source.clone())
    }
}

/// Discrete solution `theta_j`, `j = -n..m`, with cached backward
/// differences `delta_j = (theta_j - theta_{j-1})/h`, `j = 1..m`.
#[derive(Clone)]
pub struct Trajectory {
    grid: TimeGrid,
    states: Vec<Vec<f64>>,      // index j + n
    differences: Vec<Vec<f64>>, // index j - 1 for j = 1..m
    solve_residuals: Vec<f64>,  // per-step linear solve residual norms
}

impl Trajectory {
    /// Wraps a full set of states `j = -n..m`, recomputing differences.
    pub fn from_states(grid: TimeGrid, states: Vec<Vec<f64>>) -> Result<Self> {
        let expected = grid.subdivisions() + grid.step_count() + 1;
        if states.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: states.len(),
            });
        }
        let h = grid.step();
        let n = grid.subdivisions();
        let differences = (1..=grid.step_count())
            .map(|j| {
                let a = &states[n + j - 1];
                let b = &states[n + j];
                a.iter().zip(b).map(|(x, y)| (y - x) / h).collect()
            })
            .collect();
        let m = grid.step_count();
        Ok(Self {
            grid,
            states,
            differences,
            solve_residuals: vec![0.0; m],
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dimension(&self) -> usize {
        self.states[0].len()
    }

    /// State at node index `j` in `[-n, m]`.
    pub fn state(&self, j: i64) -> Result<&[f64]> {
        self.grid.check_index(j)?;
        Ok(&self.states[(j + self.grid.subdivisions() as i64) as usize])
    }

    /// Backward difference `delta_j`, `j = 1..m`.
    pub fn difference(&self, j: usize) -> Result<&[f64]> {
        if j == 0 || j > self.differences.len() {
            return Err(Error::IndexOutOfRange {
                index: j as i64,
                min: 1,
                max: self.differences.len() as i64,
            });
        }
        Ok(&self.differences[j - 1])
    }

    pub fn differences(&self) -> &[Vec<f64>] {
        &self.differences
    }

    /// Residual norms of the per-step linear solves.
    pub fn solve_residuals(&self) -> &[f64] {
        &self.solve_residuals
    }
}

/// Full problem description consumed by [`run`].
#[derive(Clone)]
pub struct ProblemSpec {
    pub grid: TimeGrid,
    pub terms: Vec<FractionalTerm>,
    pub operator: Arc<dyn SpatialOperator>,
    pub forcing: ForcingFn,
    pub history: DelayHistory,
}

impl ProblemSpec {
    pub fn new(
        grid: TimeGrid,
        terms: Vec<FractionalTerm>,
        operator: Arc<dyn SpatialOperator>,
        forcing: ForcingFn,
        history: DelayHistory,
    ) -> Result<Self> {
        if history.dimension() != operator.dimension() {
            return Err(Error::DimensionMismatch {
                expected: operator.dimension(),
                got: history.dimension(),
            });
        }
        if history.subdivisions() != grid.subdivisions() {
            return Err(Error::IncompatibleGrids(format!(
                "history sampled with n = {}, grid has n = {}",
                history.subdivisions(),
                grid.subdivisions()
            )));
        }
        Ok(Self {
            grid,
            terms,
            operator,
            forcing,
            history,
        })
    }

    /// Same problem on a grid with `subdivisions` steps per delay.
    pub fn with_subdivisions(&self, subdivisions: usize) -> Result<Self> {
        let grid = TimeGrid::new(self.grid.delay(), self.grid.horizon(), subdivisions)?;
        let history = self.history.resample(&grid);
        Self::new(
            grid,
            self.terms.clone(),
            self.operator.clone(),
            self.forcing.clone(),
            history,
        )
    }

    pub fn dimension(&self) -> usize {
        self.operator.dimension()
    }
}

/// Delayed state `theta_{j-n}`; a history sample for `j <= n`.
pub fn delayed_state(traj: &Trajectory, j: i64) -> Result<&[f64]> {
    let m = traj.grid().step_count() as i64;
    if j < 1 || j > m {
        return Err(Error::IndexOutOfRange {
            index: j,
            min: 1,
            max: m,
        });
    }
    traj.state(j - traj.grid().subdivisions() as i64)
}

struct SchemeKernel {
    weights: Vec<L1Weights>,
    coeffs: Vec<f64>,
    sigma: f64,
}

impl SchemeKernel {
    fn new(spec: &ProblemSpec) -> Result<Self> {
        let m = spec.grid.step_count().max(1);
        let h = spec.grid.step();
        let mut weights = Vec::with_capacity(spec.terms.len());
        let mut coeffs = Vec::with_capacity(spec.terms.len());
        for term in &spec.terms {
            weights.push(l1_weights(term.order(), m)?);
            coeffs.push(multi_term_coefficient(term, h)?);
        }
        let sigma = 1.0 + coeffs.iter().sum::<f64>();
        Ok(Self {
            weights,
            coeffs,
            sigma,
        })
    }

    /// Computes `theta_j` from states `theta_{-n}..theta_{j-1}`.
    /// `states[idx(i)]` must hold `theta_i` for `i < j`.
    fn step(
        &self,
        spec: &ProblemSpec,
        states: &[Vec<f64>],
        j: usize,
    ) -> Result<(Vec<f64>, f64)> {
        let n = spec.grid.subdivisions();
        let h = spec.grid.step();
        let idx = |i: i64| (i + n as i64) as usize;

        let mut rhs = KahanVec::from_vec(states[idx(j as i64 - 1)].clone());
        for (w, &c) in self.weights.iter().zip(&self.coeffs) {
            if c == 0.0 {
                continue;
            }
            let b = w.values();
            for i in 1..j {
                rhs.add_scaled(&states[idx(i as i64)], c * (b[j - i - 1] - b[j - i]));
            }
            rhs.add_scaled(&states[idx(0)], c * b[j - 1]);
        }
        let t_j = spec.grid.node(j as i64);
        let delayed = &states[idx(j as i64 - n as i64)];
        let f = (spec.forcing)(t_j, delayed);
        if f.len() != spec.dimension() {
            return Err(Error::DimensionMismatch {
                expected: spec.dimension(),
                got: f.len(),
            });
        }
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteForcing { step_index: j });
        }
        rhs.add_scaled(&f, h);
        let rhs = rhs.into_vec();

        let theta = spec.operator.solve_shifted(self.sigma, h, &rhs)?;
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::Aborted { step_index: j });
        }

        // Linear-solve residual of the rearranged form.
        let a_theta = spec.operator.apply(&theta)?;
        let res: Vec<f64> = theta
            .iter()
            .zip(&a_theta)
            .zip(&rhs)
            .map(|((t, a), r)| self.sigma * t + h * a - r)
            .collect();
        let res_norm = spec.operator.norm(&res);
        Ok((theta, res_norm))
    }
}

/// Recomputes the single state `theta_j` from the predecessors stored
/// in `traj` (states with index `< j` must be present and are used
/// read-only).
pub fn step(spec: &ProblemSpec, traj: &Trajectory, j: usize) -> Result<Vec<f64>> {
    let m = spec.grid.step_count();
    if j == 0 || j > m {
        return Err(Error::IndexOutOfRange {
            index: j as i64,
            min: 1,
            max: m as i64,
        });
    }
    let kernel = SchemeKernel::new(spec)?;
    let (theta, _) = kernel.step(spec, &traj.states, j)?;
    Ok(theta)
}

/// Runs the scheme over the whole grid, producing states for
/// `j = -n..m`.
pub fn run(spec: &ProblemSpec) -> Result<Trajectory> {
    let n = spec.grid.subdivisions();
    let m = spec.grid.step_count();
    let h = spec.grid.step();
    let kernel = SchemeKernel::new(spec)?;

    let mut states: Vec<Vec<f64>> = Vec::with_capacity(n + m + 1);
    for j in -(n as i64)..=0 {
        states.push(spec.history.sample(j)?.to_vec());
    }
    let mut differences = Vec::with_capacity(m);
    let mut solve_residuals = Vec::with_capacity(m);
    for j in 1..=m {
        let (theta, res) = kernel.step(spec, &states, j)?;
        let prev = &states[n + j - 1];
        differences.push(
            prev.iter()
                .zip(&theta)
                .map(|(a, b)| (b - a) / h)
                .collect(),
        );
        solve_residuals.push(res);
        states.push(theta);
    }
    Ok(Trajectory {
        grid: spec.grid,
        states,
        differences,
        solve_residuals,
    })
}

/// Residual of the literal discrete equation
/// `delta_j + sum_q a_q * L1_j(alpha_q) + A theta_j - f(t_j, theta_{j-n})`,
/// evaluated without the rearrangement used by the solver. Cross-checks
/// the rearrangement algebra.
pub fn step_residual(spec: &ProblemSpec, traj: &Trajectory, j: usize) -> Result<f64> {
    let m = spec.grid.step_count();
    if j == 0 || j > m {
        return Err(Error::IndexOutOfRange {
            index: j as i64,
            min: 1,
            max: m as i64,
        });
    }
    let h = spec.grid.step();
    let dim = spec.dimension();
    let theta_j = traj.state(j as i64)?;
    let delayed = delayed_state(traj, j as i64)?;
    let f = (spec.forcing)(spec.grid.node(j as i64), delayed);

    let mut acc = KahanVec::from_vec(traj.difference(j)?.to_vec());
    for term in &spec.terms {
        if term.weight() == 0.0 {
            continue;
        }
        let weights = l1_weights(term.order(), j)?;
        let cap = caputo_l1_with(&weights, &traj.differences()[..j], h)?;
        acc.add_scaled(&cap, term.weight());
    }
    let a_theta = spec.operator.apply(theta_j)?;
    acc.add_scaled(&a_theta, 1.0);
    acc.add_scaled(&f, -1.0);
    let res = acc.into_vec();
    debug_assert_eq!(res.len(), dim);
    Ok(spec.operator.norm(&res))
}

/// Post-run statistics: the quantities whose uniform boundedness the
/// scheme's stability analysis asserts, plus the worst literal-form
/// residual.
#[derive(Debug, Clone)]
pub struct RunDiagnostics {
    /// `max_j |theta_j - chi(0)|`.
    pub max_state_deviation: f64,
    /// `max_j |delta_j|`.
    pub max_difference_norm: f64,
    /// `max_j |L1 Caputo value at j|`, one entry per fractional term.
    pub max_caputo_norm: Vec<f64>,
    /// `max_j` of [`step_residual`].
    pub max_step_residual: f64,
}

pub fn diagnostics(spec: &ProblemSpec, traj: &Trajectory) -> Result<RunDiagnostics> {
    let m = spec.grid.step_count();
    let h = spec.grid.step();
    let op = spec.operator.as_ref();
    let chi0 = traj.state(0)?.to_vec();

    let mut max_state_deviation = 0.0f64;
    let mut max_difference_norm = 0.0f64;
    for j in 1..=m {
        let theta = traj.state(j as i64)?;
        let dev: Vec<f64> = theta.iter().zip(&chi0).map(|(a, b)| a - b).collect();
        max_state_deviation = max_state_deviation.max(op.norm(&dev));
        max_difference_norm = max_difference_norm.max(op.norm(traj.difference(j)?));
    }

    let mut max_caputo_norm = Vec::with_capacity(spec.terms.len());
    for term in &spec.terms {
        let weights = l1_weights(term.order(), m.max(1))?;
        let mut worst = 0.0f64;
        for j in 1..=m {
            let cap = caputo_l1_with(&weights, &traj.differences()[..j], h)?;
            worst = worst.max(op.norm(&cap));
        }
        max_caputo_norm.push(worst);
    }

    let mut max_step_residual = 0.0f64;
    for j in 1..=m {
        max_step_residual = max_step_residual.max(step_residual(spec, traj, j)?);
    }

    Ok(RunDiagnostics {
        max_state_deviation,
        max_difference_norm,
        max_caputo_norm,
        max_step_residual,
    })
}
