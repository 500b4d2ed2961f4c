//! Piecewise interpolants over a computed trajectory and the
//! convergence diagnostics built on them.
//!
//! For a trajectory `theta_j` on step `h`:
//! - `U(t)`: piecewise-linear interpolant, `chi` on `[-nu, 0]`;
//! - `X(t)`: piecewise-constant step function, value `theta_j` on
//!   `(t_{j-1}, t_j]`, `chi` on `[-nu, 0]`;
//! - `v(t)`: step function carrying the discrete Caputo value of one
//!   fractional order, zero at `t = 0`.
//!
//! `exact_caputo_of_u` evaluates the Caputo derivative of `U` in closed
//! form by integrating the kernel against the piecewise-constant slope.

use crate::error::Error;
use crate::grid::{caputo_l1_with, gamma_fn, l1_weights, FractionalTerm, KahanVec, L1Weights};
use crate::stepper::{DelayHistory, ProblemSpec, Trajectory};
use crate::Result;

/// Read-only evaluators over one trajectory.
pub struct RotheFunctions<'a> {
    traj: &'a Trajectory,
    history: &'a DelayHistory,
    terms: Vec<FractionalTerm>,
    weights: Vec<L1Weights>,
}

impl<'a> RotheFunctions<'a> {
    pub fn new(spec: &'a ProblemSpec, traj: &'a Trajectory) -> Result<Self> {
        let m = traj.grid().step_count().max(1);
        let mut weights = Vec::with_capacity(spec.terms.len());
        for term in &spec.terms {
            weights.push(l1_weights(term.order(), m)?);
        }
        Ok(Self {
            traj,
            history: &spec.history,
            terms: spec.terms.clone(),
            weights,
        })
    }

    pub fn trajectory(&self) -> &Trajectory {
        self.traj
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    fn check_domain(&self, t: f64, lo: f64) -> Result<()> {
        let hi = self.traj.grid().effective_horizon();
        // ulp-scale slack at both endpoints
        if t < lo - 1e-12 * (1.0 + lo.abs()) || t > hi * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::OutOfDomain { t, lo, hi });
        }
        Ok(())
    }

    /// Index `j` of the interval `(t_{j-1}, t_j]` containing `t > 0`,
    /// robust to node-level rounding.
    fn interval_index(&self, t: f64) -> usize {
        let grid = self.traj.grid();
        let m = grid.step_count();
        let mut j = (t / grid.step()).ceil() as i64;
        j = j.clamp(1, m as i64);
        while j > 1 && t <= grid.node(j - 1) {
            j -= 1;
        }
        while (j as usize) < m && t > grid.node(j) {
            j += 1;
        }
        j as usize
    }

    /// Piecewise-linear interpolant `U(t)`, `t` in `[-nu, T0]`.
    pub fn eval_u(&self, t: f64) -> Result<Vec<f64>> {
        let grid = self.traj.grid();
        self.check_domain(t, -grid.delay())?;
        if t <= 0.0 {
            return Ok(self.history.eval(t));
        }
        let j = self.interval_index(t);
        let prev = self.traj.state(j as i64 - 1)?;
        let slope = self.traj.difference(j)?;
        let dt = t - grid.node(j as i64 - 1);
        Ok(prev.iter().zip(slope).map(|(p, s)| p + dt * s).collect())
    }

    /// Step function `X(t)` with left-open, right-closed intervals.
    pub fn eval_x(&self, t: f64) -> Result<Vec<f64>> {
        let grid = self.traj.grid();
        self.check_domain(t, -grid.delay())?;
        if t <= 0.0 {
            return Ok(self.history.eval(t));
        }
        let j = self.interval_index(t);
        Ok(self.traj.state(j as i64)?.to_vec())
    }

    /// Discrete-Caputo step function for one fractional term;
    /// zero at `t = 0`.
    pub fn eval_v(&self, term_index: usize, t: f64) -> Result<Vec<f64>> {
        if term_index >= self.terms.len() {
            return Err(Error::BadTermIndex(term_index));
        }
        self.check_domain(t, 0.0)?;
        if t <= 0.0 {
            return Ok(vec![0.0; self.traj.dimension()]);
        }
        let j = self.interval_index(t);
        caputo_l1_with(
            &self.weights[term_index],
            &self.traj.differences()[..j],
            self.traj.grid().step(),
        )
    }

    /// Exact Caputo derivative of the piecewise-linear `U` at
    /// `t` in `(0, T0]`: with `t` in `(t_J, t_{J+1}]`,
    ///
    /// ```text
    /// (1/Gamma(2-alpha)) * [ sum_{i=1..J} ((t-t_{i-1})^p - (t-t_i)^p) d_i
    ///                        + (t - t_J)^p * d_{J+1} ],   p = 1 - alpha.
    /// ```
    pub fn exact_caputo_of_u(&self, order: f64, t: f64) -> Result<Vec<f64>> {
        if !(order > 0.0 && order < 1.0) {
            return Err(Error::OrderOutOfRange(order));
        }
        self.check_domain(t, 0.0)?;
        if !(t > 0.0) {
            return Err(Error::OutOfDomain {
                t,
                lo: 0.0,
                hi: self.traj.grid().effective_horizon(),
            });
        }
        let grid = self.traj.grid();
        let p = 1.0 - order;
        let j_int = self.interval_index(t); // t in (t_{j_int - 1}, t_{j_int}]
        let tail_start = grid.node(j_int as i64 - 1);
        let mut acc = KahanVec::zeros(self.traj.dimension());
        for i in 1..j_int {
            let a = (t - grid.node(i as i64 - 1)).powf(p);
            let b = (t - grid.node(i as i64)).powf(p);
            acc.add_scaled(self.traj.difference(i)?, a - b);
        }
        acc.add_scaled(self.traj.difference(j_int)?, (t - tail_start).max(0.0).powf(p));
        let scale = 1.0 / gamma_fn(2.0 - order);
        let mut out = acc.into_vec();
        for x in &mut out {
            *x *= scale;
        }
        Ok(out)
    }

    /// Samples `|v(t) - Caputo[U](t)|` at `samples` interior
    /// (Chebyshev) points of every step interval. Node points are never
    /// sampled; the two functions coincide there by construction.
    pub fn caputo_residual_profile(
        &self,
        term_index: usize,
        samples: usize,
    ) -> Result<Vec<(f64, f64)>> {
        if term_index >= self.terms.len() {
            return Err(Error::BadTermIndex(term_index));
        }
        if samples == 0 {
            return Err(Error::NonPositiveInput {
                name: "samples",
                value: 0.0,
            });
        }
        let grid = self.traj.grid();
        let order = self.terms[term_index].order();
        let h = grid.step();
        let mut profile = Vec::with_capacity(grid.step_count() * samples);
        for j in 1..=grid.step_count() {
            let left = grid.node(j as i64 - 1);
            for s in 0..samples {
                let theta = std::f64::consts::PI * (2.0 * s as f64 + 1.0)
                    / (2.0 * samples as f64);
                let frac = 0.5 - 0.5 * theta.cos();
                let t = left + h * frac;
                let v = self.eval_v(term_index, t)?;
                let exact = self.exact_caputo_of_u(order, t)?;
                let diff: Vec<f64> = v.iter().zip(&exact).map(|(a, b)| a - b).collect();
                let norm = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
                profile.push((t, norm));
            }
        }
        Ok(profile)
    }
}

/// Largest profile residual.
pub fn max_profile_residual(profile: &[(f64, f64)]) -> f64 {
    profile.iter().fold(0.0f64, |m, &(_, r)| m.max(r))
}

/// Sup over the coarse nodes of the distance between the two
/// interpolants; the fine grid must refine the coarse one.
pub fn cauchy_diff(coarse: &Trajectory, fine: &Trajectory) -> Result<f64> {
    let gc = coarse.grid();
    let gf = fine.grid();
    if gc.delay() != gf.delay() || gc.effective_horizon() != gf.effective_horizon() {
        return Err(Error::IncompatibleGrids(
            "delay or effective horizon differ".into(),
        ));
    }
    if gf.subdivisions() % gc.subdivisions() != 0 {
        return Err(Error::IncompatibleGrids(format!(
            "fine n = {} is not a multiple of coarse n = {}",
            gf.subdivisions(),
            gc.subdivisions()
        )));
    }
    if coarse.dimension() != fine.dimension() {
        return Err(Error::DimensionMismatch {
            expected: coarse.dimension(),
            got: fine.dimension(),
        });
    }
    let r = (gf.subdivisions() / gc.subdivisions()) as i64;
    let mut sup = 0.0f64;
    for j in 0..=gc.step_count() as i64 {
        let a = coarse.state(j)?;
        let b = fine.state(j * r)?;
        let d = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        sup = sup.max(d);
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{FractionalTerm, TimeGrid};
    use crate::spaceop::ZeroOperator;
    use crate::stepper::{run, DelayHistory, ProblemSpec, StateFn, Trajectory};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn linear_spec(grid: TimeGrid, slope: f64) -> (ProblemSpec, Trajectory) {
        // force theta(t) = slope * t exactly: with A = 0 and one term,
        // prescribe the trajectory directly instead of solving.
        let hist: StateFn = Arc::new(move |t| vec![slope * t]);
        let spec = ProblemSpec::new(
            grid,
            vec![FractionalTerm::new(1.0, 0.5).unwrap()],
            Arc::new(ZeroOperator::new(1)),
            Arc::new(|_, w: &[f64]| vec![w[0]]),
            DelayHistory::from_fn(&grid, hist),
        )
        .unwrap();
        let n = grid.subdivisions() as i64;
        let states = (-n..=grid.step_count() as i64)
            .map(|j| vec![slope * grid.node(j)])
            .collect();
        let traj = Trajectory::from_states(grid, states).unwrap();
        (spec, traj)
    }

    fn solved_spec(grid: TimeGrid) -> (ProblemSpec, Trajectory) {
        let hist: StateFn = Arc::new(|t| vec![(1.0 + t).cos()]);
        let spec = ProblemSpec::new(
            grid,
            vec![FractionalTerm::new(0.7, 0.5).unwrap()],
            Arc::new(ZeroOperator::new(1)),
            Arc::new(|t: f64, w: &[f64]| vec![w[0] - 0.3 * t]),
            DelayHistory::from_fn(&grid, hist),
        )
        .unwrap();
        let traj = run(&spec).unwrap();
        (spec, traj)
    }

    #[test]
    fn node_consistency_of_u_and_x() {
        let grid = TimeGrid::new(1.0, 2.0, 16).unwrap();
        let (spec, traj) = solved_spec(grid);
        let rf = RotheFunctions::new(&spec, &traj).unwrap();
        for j in -(grid.subdivisions() as i64)..=grid.step_count() as i64 {
            let t = grid.node(j);
            let s = traj.state(j).unwrap();
            assert_relative_eq!(rf.eval_u(t).unwrap()[0], s[0], max_relative = 1e-12, epsilon = 1e-14);
            if j >= 0 {
                assert_relative_eq!(rf.eval_x(t).unwrap()[0], s[0], max_relative = 1e-12, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn u_is_linear_between_nodes() {
        let grid = TimeGrid::new(1.0, 2.0, 8).unwrap();
        let (spec, traj) = solved_spec(grid);
        let rf = RotheFunctions::new(&spec, &traj).unwrap();
        let j = 3i64;
        let mid = 0.5 * (grid.node(j - 1) + grid.node(j));
        let expected = 0.5 * (traj.state(j - 1).unwrap()[0] + traj.state(j).unwrap()[0]);
        assert_relative_eq!(rf.eval_u(mid).unwrap()[0], expected, max_relative = 1e-13);
        // history endpoint
        assert_relative_eq!(
            rf.eval_u(-1.0).unwrap()[0],
            (1.0 - 1.0f64).cos(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn x_uses_left_open_intervals() {
        let grid = TimeGrid::new(1.0, 2.0, 8).unwrap();
        let (spec, traj) = solved_spec(grid);
        let rf = RotheFunctions::new(&spec, &traj).unwrap();
        let j = 4i64;
        let eps = grid.step() * 0.25;
        assert_eq!(rf.eval_x(grid.node(j)).unwrap()[0], traj.state(j).unwrap()[0]);
        assert_eq!(
            rf.eval_x(grid.node(j) + eps).unwrap()[0],
            traj.state(j + 1).unwrap()[0]
        );
        // on [-nu, 0] the step function equals the history
        assert_relative_eq!(
            rf.eval_x(-0.5).unwrap()[0],
            0.5f64.cos(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn v_zero_at_origin_and_matches_nodes() {
        let grid = TimeGrid::new(1.0, 2.0, 16).unwrap();
        let (spec, traj) = solved_spec(grid);
        let rf = RotheFunctions::new(&spec, &traj).unwrap();
        assert_eq!(rf.eval_v(0, 0.0).unwrap(), vec![0.0]);
        let h = grid.step();
        for j in 1..=grid.step_count() {
            let t = grid.node(j as i64);
            let direct = crate::grid::caputo_l1(&traj.differences()[..j], 0.5, h).unwrap();
            assert_relative_eq!(
                rf.eval_v(0, t).unwrap()[0],
                direct[0],
                max_relative = 1e-13
            );
        }
        assert!(matches!(rf.eval_v(1, 0.5), Err(Error::BadTermIndex(1))));
    }

    #[test]
    fn constant_trajectory_has_zero_v() {
        let grid = TimeGrid::new(1.0, 2.0, 8).unwrap();
        let (spec, _) = solved_spec(grid);
        let n = grid.subdivisions() as i64;
        let states = (-n..=grid.step_count() as i64).map(|_| vec![2.5]).collect();
        let traj = Trajectory::from_states(grid, states).unwrap();
        let rf = RotheFunctions::new(&spec, &traj).unwrap();
        for &t in &[0.0, 0.1, 1.0, 1.9] {
            assert_eq!(rf.eval_v(0, t).unwrap(), vec![0.0]);
        }
        let profile = rf.caputo_residual_profile(0, 2).unwrap();
        assert!(max_profile_residual(&profile) <= 1e-15);
    }

    #[test]
    fn exact_caputo_telescopes_on_linear_trajectory() {
        let grid = TimeGrid::new(1.0, 2.0, 16).unwrap();
        let slope = 1.7;
        let (spec, traj) = linear_spec(grid, slope);
        let rf = RotheFunctions::new(&spec, &traj).unwrap();
        let alpha = 0.5;
        for &t in &[0.01, 0.3, 0.77, 1.5, 2.0] {
            let got = rf.exact_caputo_of_u(alpha, t).unwrap()[0];
            let exact = slope * t.powf(1.0 - alpha) / crate::grid::gamma_fn(2.0 - alpha);
            assert_relative_eq!(got, exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn exact_caputo_equals_v_at_nodes() {
        let grid = TimeGrid::new(1.0, 2.0, 16).unwrap();
        let (spec, traj) = solved_spec(grid);
        let rf = RotheFunctions::new(&spec, &traj).unwrap();
        for j in 1..=grid.step_count() {
            let t = grid.node(j as i64);
            let a = rf.exact_caputo_of_u(0.5, t).unwrap()[0];
            let b = rf.eval_v(0, t).unwrap()[0];
            assert_relative_eq!(a, b, max_relative = 1e-12, epsilon = 1e-13);
        }
    }

    #[test]
    fn exact_caputo_matches_quadrature_oracle() {
        // quadrature oracle: integrate the kernel piecewise against the
        // piecewise-constant slope; the last (singular) piece uses the
        // substitution u = (t - s)^(1-alpha).
        fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let s = |l: f64, r: f64| (r - l) / 6.0 * (f(l) + 4.0 * f(0.5 * (l + r)) + f(r));
            let whole = s(a, b);
            let left = s(a, m);
            let right = s(m, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                adaptive_simpson(f, a, m, tol / 2.0, depth - 1)
                    + adaptive_simpson(f, m, b, tol / 2.0, depth - 1)
            }
        }

        let grid = TimeGrid::new(1.0, 1.0, 8).unwrap();
        let (spec, traj) = solved_spec(grid);
        let rf = RotheFunctions::new(&spec, &traj).unwrap();
        let alpha = 0.5;
        let t = 0.68; // off-node
        let j_t = (t / grid.step()).ceil() as usize;
        let mut oracle = 0.0;
        for i in 1..=j_t {
            let a = grid.node(i as i64 - 1);
            let b = grid.node(i as i64).min(t);
            let d = traj.difference(i).unwrap()[0];
            let piece = if b < t {
                adaptive_simpson(&|s| (t - s).powf(-alpha), a, b, 1e-12, 40)
            } else {
                // u = (t-s)^(1-alpha): integral becomes u-range / (1-alpha)
                // of du, evaluated by quadrature of the constant 1
                let u_hi = (t - a).powf(1.0 - alpha);
                adaptive_simpson(&|_u| 1.0, 0.0, u_hi, 1e-12, 40) / (1.0 - alpha)
            };
            oracle += d * piece;
        }
        oracle /= crate::grid::gamma_fn(1.0 - alpha);
        let got = rf.exact_caputo_of_u(alpha, t).unwrap()[0];
        assert_relative_eq!(got, oracle, max_relative = 1e-8, epsilon = 1e-10);
    }

    #[test]
    fn u_minus_x_identity_off_nodes() {
        let grid = TimeGrid::new(1.0, 2.0, 16).unwrap();
        let (spec, traj) = solved_spec(grid);
        let rf = RotheFunctions::new(&spec, &traj).unwrap();
        for j in 1..=grid.step_count() {
            let left = grid.node(j as i64 - 1);
            let t = left + 0.37 * grid.step();
            let u = rf.eval_u(t).unwrap()[0];
            let x = rf.eval_x(t).unwrap()[0];
            let expected = (t - grid.node(j as i64)).abs() * traj.difference(j).unwrap()[0].abs();
            assert_relative_eq!((u - x).abs(), expected, max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn residual_profile_decays_under_refinement() {
        let mut maxima = Vec::new();
        for n in [8usize, 16, 32] {
            let grid = TimeGrid::new(1.0, 2.0, n).unwrap();
            let (spec, traj) = solved_spec(grid);
            let rf = RotheFunctions::new(&spec, &traj).unwrap();
            let profile = rf.caputo_residual_profile(0, 3).unwrap();
            maxima.push(max_profile_residual(&profile));
        }
        assert!(maxima[1] < maxima[0]);
        assert!(maxima[2] < maxima[1]);
    }

    #[test]
    fn cauchy_diff_basics() {
        let grid = TimeGrid::new(1.0, 2.0, 16).unwrap();
        let (spec, traj) = solved_spec(grid);
        assert_eq!(cauchy_diff(&traj, &traj).unwrap(), 0.0);
        let fine_spec = spec.with_subdivisions(32).unwrap();
        let fine = run(&fine_spec).unwrap();
        let d = cauchy_diff(&traj, &fine).unwrap();
        assert!(d > 0.0);
        // mismatched grids are rejected
        let other_spec = spec.with_subdivisions(24).unwrap();
        let other = run(&other_spec).unwrap();
        assert!(matches!(
            cauchy_diff(&traj, &other),
            Err(Error::IncompatibleGrids(_))
        ));
    }

    #[test]
    fn cauchy_diff_decreases_under_doubling() {
        let grid = TimeGrid::new(1.0, 2.0, 16).unwrap();
        let (spec, _) = solved_spec(grid);
        let mut diffs = Vec::new();
        for n in [16usize, 32, 64] {
            let coarse = run(&spec.with_subdivisions(n).unwrap()).unwrap();
            let fine = run(&spec.with_subdivisions(2 * n).unwrap()).unwrap();
            diffs.push(cauchy_diff(&coarse, &fine).unwrap());
        }
        assert!(diffs[1] < diffs[0]);
        assert!(diffs[2] < diffs[1]);
    }

    #[test]
    fn out_of_domain_is_rejected() {
        let grid = TimeGrid::new(1.0, 2.0, 8).unwrap();
        let (spec, traj) = solved_spec(grid);
        let rf = RotheFunctions::new(&spec, &traj).unwrap();
        assert!(matches!(rf.eval_u(-1.5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(rf.eval_x(2.5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(
            rf.exact_caputo_of_u(0.5, 0.0),
            Err(Error::OutOfDomain { .. })
        ));
    }
}
