//! Independent implicit-Euler-with-delay reference solver.
//!
//! Written against a dense operator matrix with its own Gaussian
//! elimination, sharing no code with the main stepper. With all
//! fractional weights zero the main scheme must reproduce this solver
//! to roundoff; that reduction is one of the verification checks.

use fracrothe::TimeGrid;

/// Solves `theta_j + h A theta_j = theta_{j-1} + h f(t_j, theta_{j-n})`
/// for `j = 1..m` with `theta_j = chi(t_j)` on `j = -n..0`.
/// `matrix` is the dense `dim x dim` representation of `A`.
pub fn implicit_euler_delay(
    grid: &TimeGrid,
    matrix: &[Vec<f64>],
    forcing: &dyn Fn(f64, &[f64]) -> Vec<f64>,
    history: &dyn Fn(f64) -> Vec<f64>,
) -> Vec<Vec<f64>> {
    let n = grid.subdivisions();
    let m = grid.step_count();
    let h = grid.step();
    let dim = matrix.len();

    // LU factors of (I + h A), computed once
    let mut lhs = vec![vec![0.0; dim]; dim];
    for (i, row) in matrix.iter().enumerate() {
        for (k, &a) in row.iter().enumerate() {
            lhs[i][k] = h * a + if i == k { 1.0 } else { 0.0 };
        }
    }

    let mut states: Vec<Vec<f64>> = Vec::with_capacity(n + m + 1);
    for j in -(n as i64)..=0 {
        states.push(history(grid.node(j)));
    }
    for j in 1..=m {
        let t = grid.node(j as i64);
        let delayed = &states[j]; // theta_{j-n} lives at vec index (j - n) + n = j
        let f = forcing(t, delayed);
        let rhs: Vec<f64> = states[n + j - 1]
            .iter()
            .zip(&f)
            .map(|(p, fi)| p + h * fi)
            .collect();
        states.push(gaussian_solve(lhs.clone(), rhs));
    }
    states
}

fn gaussian_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
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

/// Dense matrix of the 1D Dirichlet Laplacian stencil.
pub fn dense_laplacian(interior_nodes: usize, length: f64) -> Vec<Vec<f64>> {
    let dx = length / (interior_nodes + 1) as f64;
    let inv_dx2 = 1.0 / (dx * dx);
    let mut a = vec![vec![0.0; interior_nodes]; interior_nodes];
    for i in 0..interior_nodes {
        a[i][i] = 2.0 * inv_dx2;
        if i > 0 {
            a[i][i - 1] = -inv_dx2;
        }
        if i + 1 < interior_nodes {
            a[i][i + 1] = -inv_dx2;
        }
    }
    a
}
