//! Sobolev (H¹) preconditioner: solves `(−Δ_h + I) d = e` on interior nodes.
//!
//! Raw nodal subgradients of a gradient energy are dominated by the highest
//! grid modes. Mapping them through `(−Δ_h + I)⁻¹` gives the gradient with
//! respect to the discrete `H¹₀` inner product, which makes step sizes
//! independent of the mesh width.

use crate::discretization::assemble_flux;
use crate::grid::Grid;

/// Tridiagonal solve for 1D grids; matrix-free conjugate gradients in 2D.
pub fn sobolev_solve(grid: &Grid, e: &[f64]) -> Vec<f64> {
    if grid.dim() == 1 {
        thomas(grid, e)
    } else {
        conjugate_gradient(grid, e, 1e-12, 4 * e.len().max(50))
    }
}

fn thomas(grid: &Grid, e: &[f64]) -> Vec<f64> {
    let n = e.len();
    if n == 0 {
        return Vec::new();
    }
    let h2 = grid.spacing(0).powi(2);
    let (diag, off) = (2.0 / h2 + 1.0, -1.0 / h2);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off / diag;
    d[0] = e[0] / diag;
    for i in 1..n {
        let m = diag - off * c[i - 1];
        c[i] = off / m;
        d[i] = (e[i] - off * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

/// `(−Δ_h + I) v` with `−Δ_h` the quadratic-exponent residual operator.
pub fn apply_operator(grid: &Grid, v: &[f64]) -> Vec<f64> {
    let lap = assemble_flux(grid, &grid.expand(v), |_, _| 1.0);
    lap.iter().zip(v).map(|(a, b)| a + b).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn conjugate_gradient(grid: &Grid, b: &[f64], rtol: f64, max_iter: usize) -> Vec<f64> {
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut d = r.clone();
    let mut rr = dot(&r, &r);
    let stop = rtol * rtol * rr;
    for _ in 0..max_iter {
        if rr <= stop || rr == 0.0 {
            break;
        }
        let ad = apply_operator(grid, &d);
        let alpha = rr / dot(&d, &ad);
        for i in 0..x.len() {
            x[i] += alpha * d[i];
            r[i] -= alpha * ad[i];
        }
        let next = dot(&r, &r);
        let beta = next / rr;
        rr = next;
        for i in 0..d.len() {
            d[i] = r[i] + beta * d[i];
        }
    }
    x
}
