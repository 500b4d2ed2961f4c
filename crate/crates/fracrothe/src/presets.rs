//! Ready-made problem instances.

use crate::grid::{FractionalTerm, TimeGrid};
use crate::mms::{build_mms_spec, ManufacturedSolution};
use crate::spaceop::DirichletLaplacian1D;
use crate::stepper::{DelayHistory, ProblemSpec};
use crate::Result;
use std::sync::Arc;

/// Delay-diffusion instance on `[0, 2*pi]`, `x` in `[0, 1]`: the heat
/// operator `-d^2/dx^2` with Dirichlet boundary values, delay
/// `nu = 2*pi`, forcing `f(t, w) = w` and history
/// `chi(t, x) = sin(pi*x/L) * g(t)` with
/// `g(t) = 1 + (lambda_1 - 1) (t/nu)^2`.
///
/// The forcing, history and fractional terms are harness choices: the
/// underlying problem statement only requires `f` Lipschitz and leaves
/// `a_q`, `alpha_q` free. The quadratic `g` is compatible at `t = 0`:
/// `g'(0) = g(-nu) - lambda_1 g(0) = 0` with `lambda_1` the smallest
/// discrete eigenvalue, so the solution enters `t > 0` with no kink and
/// the difference-quotient statistic stabilizes under refinement.
pub fn example51_spec(
    subdivisions: usize,
    terms: Vec<FractionalTerm>,
    interior_nodes: usize,
    length: f64,
) -> Result<ProblemSpec> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let grid = TimeGrid::new(two_pi, two_pi, subdivisions)?;
    let lap = Arc::new(DirichletLaplacian1D::new(interior_nodes, length)?);
    let shape = lap.discretize(|x| (std::f64::consts::PI * x / length).sin());
    let curve = (lap.eigenvalue(1) - 1.0) / (two_pi * two_pi);
    let shape_h = shape.clone();
    let history = DelayHistory::from_fn(
        &grid,
        Arc::new(move |t: f64| {
            let amp = 1.0 + curve * t * t;
            shape_h.iter().map(|s| amp * s).collect()
        }),
    );
    ProblemSpec::new(
        grid,
        terms,
        lap,
        Arc::new(|_t, w: &[f64]| w.to_vec()),
        history,
    )
}

/// Default fractional term of the presets, `a = 1`, `alpha = 0.5`.
pub fn default_terms() -> Vec<FractionalTerm> {
    vec![FractionalTerm::new(1.0, 0.5).expect("valid term")]
}

/// Manufactured-solution instance: `gamma = 2`, `beta = 1`, first sine
/// mode, delay 1, horizon 2.
pub fn mms_spec(subdivisions: usize, interior_nodes: usize) -> Result<ProblemSpec> {
    let ms = ManufacturedSolution::new(2.0, 1.0, 1, 1.0)?;
    let grid = TimeGrid::new(1.0, 2.0, subdivisions)?;
    build_mms_spec(&ms, default_terms(), grid, interior_nodes)
}

/// The manufactured solution matching [`mms_spec`].
pub fn mms_solution() -> ManufacturedSolution {
    ManufacturedSolution::new(2.0, 1.0, 1, 1.0).expect("valid parameters")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepper::{diagnostics, run};

    #[test]
    fn example51_runs_and_stays_bounded() {
        let spec = example51_spec(64, default_terms(), 32, 1.0).unwrap();
        let traj = run(&spec).unwrap();
        let diag = diagnostics(&spec, &traj).unwrap();
        assert!(diag.max_state_deviation.is_finite());
        // Gronwall-type envelope |theta_j| <= |theta_0| e^{T0} is loose
        // for the dissipative Laplacian; check it anyway.
        let op = spec.operator.as_ref();
        let bound = op.norm(traj.state(0).unwrap())
            * spec.grid.effective_horizon().exp();
        for j in 1..=spec.grid.step_count() as i64 {
            assert!(op.norm(traj.state(j).unwrap()) <= bound);
        }
    }

    #[test]
    fn mms_preset_builds() {
        let spec = mms_spec(16, 16).unwrap();
        assert_eq!(spec.grid.step_count(), 32);
        run(&spec).unwrap();
    }
}
