//! Spatial operators: the capability interface the stepper needs
//! (apply and shifted implicit solve) plus the 1D Dirichlet
//! finite-difference Laplacian and a numerical accretivity check.

use crate::error::Error;
use crate::Result;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Accretive spatial operator on a discretized Hilbert space.
///
/// `solve_shifted` solves `(sigma*I + h*A) u = rhs`; for accretive `A`
/// and `sigma >= 1` the system is uniquely solvable.
pub trait SpatialOperator: Send + Sync {
    fn dimension(&self) -> usize;

    fn apply(&self, u: &[f64]) -> Result<Vec<f64>>;

    fn solve_shifted(&self, sigma: f64, h: f64, rhs: &[f64]) -> Result<Vec<f64>>;

    /// Inner product of the discretized space; plain dot product by default.
    fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Second-order finite-difference Laplacian `-u''` on `(0, L)` with
/// homogeneous Dirichlet boundary values, on the discrete L2 space with
/// `inner(u, v) = dx * sum u_i v_i`.
#[derive(Debug, Clone)]
pub struct DirichletLaplacian1D {
    interior_nodes: usize,
    length: f64,
    dx: f64,
}

impl DirichletLaplacian1D {
    pub fn new(interior_nodes: usize, length: f64) -> Result<Self> {
        if interior_nodes == 0 {
            return Err(Error::NonPositiveInput {
                name: "interior_nodes",
                value: 0.0,
            });
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::NonPositiveInput {
                name: "length",
                value: length,
            });
        }
        let dx = length / (interior_nodes + 1) as f64;
        Ok(Self {
            interior_nodes,
            length,
            dx,
        })
    }

    pub fn interior_nodes(&self) -> usize {
        self.interior_nodes
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn mesh_width(&self) -> f64 {
        self.dx
    }

    /// Interior grid point `x_i = (i+1) * dx`, `i = 0..N-1`.
    pub fn node_x(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.dx
    }

    /// Exact eigenvalue `4/dx^2 * sin^2(k*pi*dx/(2L))`, `k = 1..N`.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let s = (k as f64 * std::f64::consts::PI * self.dx / (2.0 * self.length)).sin();
        4.0 / (self.dx * self.dx) * s * s
    }

    /// Samples a function of `x` on the interior nodes.
    pub fn discretize(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.interior_nodes).map(|i| f(self.node_x(i))).collect()
    }
}

impl SpatialOperator for DirichletLaplacian1D {
    fn dimension(&self) -> usize {
        self.interior_nodes
    }

    fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.interior_nodes, u.len())?;
        let inv_dx2 = 1.0 / (self.dx * self.dx);
        let n = u.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let right = if i + 1 < n { u[i + 1] } else { 0.0 };
            out[i] = (-left + 2.0 * u[i] - right) * inv_dx2;
        }
        Ok(out)
    }

    fn solve_shifted(&self, sigma: f64, h: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.interior_nodes, rhs.len())?;
        let n = rhs.len();
        let r = h / (self.dx * self.dx);
        let diag = sigma + 2.0 * r;
        let off = -r;
        // Thomas algorithm; sigma >= 1, h > 0 make the system strictly
        // diagonally dominant, so no pivoting is needed.
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = diag;
        c[0] = off / denom;
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = diag - off * c[i - 1];
            c[i] = off / denom;
            d[i] = (rhs[i] - off * d[i - 1]) / denom;
        }
        let mut u = vec![0.0; n];
        u[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            u[i] = d[i] - c[i] * u[i + 1];
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::SolveFailure(
                "non-finite value in tridiagonal solve".into(),
            ));
        }
        Ok(u)
    }

    fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.dx * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// The zero operator; `solve_shifted` reduces to division by `sigma`.
#[derive(Debug, Clone)]
pub struct ZeroOperator {
    dimension: usize,
}

impl ZeroOperator {
    pub fn new(dimension: usize) -> Self {
        Self { dimension }
    }
}

impl SpatialOperator for ZeroOperator {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dimension, u.len())?;
        Ok(vec![0.0; u.len()])
    }

    fn solve_shifted(&self, sigma: f64, _h: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dimension, rhs.len())?;
        Ok(rhs.iter().map(|x| x / sigma).collect())
    }
}

/// Sign-flipped wrapper used for fault injection: `apply` returns `-Au`.
/// The flipped operator is not accretive, so the shifted resolvent is
/// not available.
pub struct Negated<A: SpatialOperator>(pub A);

impl<A: SpatialOperator> SpatialOperator for Negated<A> {
    fn dimension(&self) -> usize {
        self.0.dimension()
    }

    fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut v = self.0.apply(u)?;
        for x in &mut v {
            *x = -*x;
        }
        Ok(v)
    }

    fn solve_shifted(&self, _sigma: f64, _h: f64, _rhs: &[f64]) -> Result<Vec<f64>> {
        Err(Error::SolveFailure(
            "shifted solve undefined for a non-accretive operator".into(),
        ))
    }

    fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.0.inner(u, v)
    }
}

/// Outcome of the numerical accretivity check.
#[derive(Debug, Clone)]
pub struct AccretivityReport {
    /// Smallest Rayleigh quotient `inner(Au, u)/inner(u, u)` over the
    /// random trial vectors.
    pub min_trial_ratio: f64,
    /// Minimized Rayleigh quotient from inverse power iteration, when
    /// the shifted solve is available; approximates the smallest
    /// eigenvalue for symmetric operators.
    pub min_rayleigh: Option<f64>,
    pub pass: bool,
}

/// Draws seeded random vectors and checks `inner(Au, u) >= -1e-12 * |u|^2`;
/// additionally minimizes the Rayleigh quotient by inverse power
/// iteration on `(I + A)^{-1}` when the resolvent is available.
pub fn verify_accretivity(
    op: &dyn SpatialOperator,
    trials: usize,
    seed: u64,
) -> AccretivityReport {
    let dim = op.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_trial_ratio = f64::INFINITY;
    for _ in 0..trials.max(1) {
        let u: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let uu = op.inner(&u, &u);
        if uu == 0.0 {
            continue;
        }
        if let Ok(au) = op.apply(&u) {
            let ratio = op.inner(&au, &u) / uu;
            min_trial_ratio = min_trial_ratio.min(ratio);
        }
    }
    if !min_trial_ratio.is_finite() {
        min_trial_ratio = 0.0;
    }

    let mut min_rayleigh = None;
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut ok = true;
    for _ in 0..200 {
        match op.solve_shifted(1.0, 1.0, &v) {
            Ok(w) => {
                let norm = op.norm(&w);
                if !(norm > 0.0) || !norm.is_finite() {
                    ok = false;
                    break;
                }
                v = w.into_iter().map(|x| x / norm).collect();
            }
            Err(_) => {
                ok = false;
                break;
            }
        }
    }
    if ok {
        if let Ok(av) = op.apply(&v) {
            let vv = op.inner(&v, &v);
            if vv > 0.0 {
                let r = op.inner(&av, &v) / vv;
                if r.is_finite() {
                    min_rayleigh = Some(r);
                }
            }
        }
    }

    let pass = min_trial_ratio >= -1e-12 && min_rayleigh.unwrap_or(0.0) >= -1e-12;
    AccretivityReport {
        min_trial_ratio,
        min_rayleigh,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Dense Gaussian elimination, independent of the Thomas path.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            a.swap(col, pivot);
            b.swap(col, pivot);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let mut s = b[row];
            for k in row + 1..n {
                s -= a[row][k] * x[k];
            }
            x[row] = s / a[row][row];
        }
        x
    }

    fn shifted_matrix(lap: &DirichletLaplacian1D, sigma: f64, h: f64) -> Vec<Vec<f64>> {
        let n = lap.dimension();
        let r = h / (lap.mesh_width() * lap.mesh_width());
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = sigma + 2.0 * r;
            if i > 0 {
                a[i][i - 1] = -r;
            }
            if i + 1 < n {
                a[i][i + 1] = -r;
            }
        }
        a
    }

    #[test]
    fn stencil_on_constant_vector() {
        let lap = DirichletLaplacian1D::new(3, 1.0).unwrap();
        assert_eq!(lap.apply(&[0.0, 0.0, 0.0]).unwrap(), vec![0.0, 0.0, 0.0]);
        let v = lap.apply(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(v, vec![16.0, 0.0, 16.0]);
    }

    #[test]
    fn eigenvectors_match_eigenvalues() {
        let lap = DirichletLaplacian1D::new(64, 1.0).unwrap();
        for k in [1usize, 3, 17] {
            let u = lap.discretize(|x| (k as f64 * std::f64::consts::PI * x).sin());
            let au = lap.apply(&u).unwrap();
            let lambda = lap.eigenvalue(k);
            for (a, b) in au.iter().zip(&u) {
                assert_relative_eq!(*a, lambda * b, max_relative = 1e-10, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn symmetry_of_laplacian() {
        let lap = DirichletLaplacian1D::new(16, 1.0).unwrap();
        let u = lap.discretize(|x| x * (1.0 - x));
        let v = lap.discretize(|x| (3.0 * x).cos());
        let au = lap.apply(&u).unwrap();
        let av = lap.apply(&v).unwrap();
        assert_relative_eq!(lap.inner(&au, &v), lap.inner(&u, &av), max_relative = 1e-12);
    }

    #[test]
    fn solve_round_trip() {
        let lap = DirichletLaplacian1D::new(3, 1.0).unwrap();
        let exact = vec![1.0, 2.0, 3.0];
        let h = 1.0 / 16.0;
        let au = lap.apply(&exact).unwrap();
        let rhs: Vec<f64> = exact.iter().zip(&au).map(|(x, a)| x + h * a).collect();
        let u = lap.solve_shifted(1.0, h, &rhs).unwrap();
        for (a, b) in u.iter().zip(&exact) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn solve_matches_dense_lu() {
        let lap = DirichletLaplacian1D::new(32, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rhs: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sigma = 1.5;
        let h = 0.01;
        let u = lap.solve_shifted(sigma, h, &rhs).unwrap();
        let dense = dense_solve(shifted_matrix(&lap, sigma, h), rhs);
        for (a, b) in u.iter().zip(&dense) {
            assert_relative_eq!(a, b, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn solve_is_contraction_over_sigma() {
        let lap = DirichletLaplacian1D::new(24, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let rhs: Vec<f64> = (0..24).map(|_| rng.random_range(-1.0..1.0)).collect();
            let sigma = 1.0 + rng.random_range(0.0..3.0);
            let u = lap.solve_shifted(sigma, 0.05, &rhs).unwrap();
            assert!(lap.norm(&u) <= lap.norm(&rhs) / sigma * (1.0 + 1e-12));
        }
    }

    #[test]
    fn zero_operator_solve_is_scaling() {
        let z = ZeroOperator::new(4);
        let rhs = vec![2.0, -4.0, 6.0, 0.0];
        assert_eq!(
            z.solve_shifted(2.0, 0.1, &rhs).unwrap(),
            vec![1.0, -2.0, 3.0, 0.0]
        );
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let lap = DirichletLaplacian1D::new(3, 1.0).unwrap();
        assert!(matches!(
            lap.apply(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            lap.solve_shifted(1.0, 0.1, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn accretivity_of_laplacian() {
        let lap = DirichletLaplacian1D::new(64, 1.0).unwrap();
        let report = verify_accretivity(&lap, 100, 42);
        assert!(report.pass);
        assert!(report.min_trial_ratio >= lap.eigenvalue(1));
        let rayleigh = report.min_rayleigh.unwrap();
        assert_relative_eq!(rayleigh, lap.eigenvalue(1), max_relative = 1e-9);
    }

    #[test]
    fn accretivity_of_zero_operator() {
        let z = ZeroOperator::new(8);
        let report = verify_accretivity(&z, 50, 1);
        assert!(report.pass);
        assert_eq!(report.min_trial_ratio, 0.0);
    }

    #[test]
    fn negated_laplacian_fails_accretivity() {
        let neg = Negated(DirichletLaplacian1D::new(16, 1.0).unwrap());
        let report = verify_accretivity(&neg, 50, 3);
        assert!(!report.pass);
        assert!(report.min_trial_ratio < 0.0);
    }
}
