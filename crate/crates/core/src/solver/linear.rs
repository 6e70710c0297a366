use crate::error::{Error, Result};
use crate::grid::{laplacian_into, Grid};

/// Relative residual target for the conjugate-gradient solve.
pub const CG_TOL: f64 = 1e-12;

/// Solves a tridiagonal system in place; `rhs` is overwritten with the
/// solution. `lower[0]` and `upper[n-1]` are ignored. No pivoting, so the
/// matrix should be diagonally dominant.
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64], scratch: &mut Vec<f64>) {
    let n = rhs.len();
    scratch.clear();
    scratch.resize(n, 0.0);
    let c = scratch;
    let mut m = diag[0];
    c[0] = upper[0] / m;
    rhs[0] /= m;
    for i in 1..n {
        m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Unpreconditioned conjugate gradients for a symmetric positive definite
/// operator. `x` holds the initial guess and receives the solution. Returns
/// the iteration count.
pub fn conjugate_gradient<A>(apply: A, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<usize>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut ap = vec![0.0; n];
    apply(x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for it in 0..=max_iter {
        if rr.sqrt() <= tol * bnorm {
            return Ok(it);
        }
        if it == max_iter {
            break;
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolver {
        iterations: max_iter,
        residual: rr.sqrt() / bnorm,
    })
}

/// Solves `(I - a Δ_h) x = u` in place, with the zero-flux Laplacian of
/// `grid`.
pub fn implicit_diffusion(grid: &Grid, a: f64, u: &mut [f64]) -> Result<()> {
    if grid.dim() == 1 {
        let n = u.len();
        let s = a / (grid.spacing(0) * grid.spacing(0));
        let off = vec![-s; n];
        let mut diag = vec![1.0 + 2.0 * s; n];
        diag[0] = 1.0 + s;
        diag[n - 1] = 1.0 + s;
        let mut scratch = Vec::new();
        thomas(&off, &diag, &off, u, &mut scratch);
        return Ok(());
    }
    let b = u.to_vec();
    let apply = |x: &[f64], y: &mut [f64]| {
        laplacian_into(grid, x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi - a * *yi;
        }
    };
    conjugate_gradient(apply, &b, u, CG_TOL, 10 * u.len())?;
    Ok(())
}
