//! Small dense linear algebra used by the network analysis: row reduction,
//! rank, LU solves and a damped Gauss-Newton driver. Sizes here are tiny
//! (species and complex counts), so everything is plain row-major storage.

use std::fmt;
use std::ops::{Index, IndexMut};

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged rows");
            m.row_mut(i).copy_from_slice(r);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `y = A x`, summing each row left to right.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut s = 0.0;
                for (a, b) in self.row(i).iter().zip(x) {
                    s += a * b;
                }
                s
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Reduced row-echelon form with partial pivoting. Entries below
/// `tol * max|A|` are treated as zero. Returns the reduced matrix and the
/// pivot columns.
pub fn rref(a: &Matrix, tol: f64) -> (Matrix, Vec<usize>) {
    let mut m = a.clone();
    let scale = m.max_abs().max(1.0);
    let eps = tol * scale;
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        let (best, val) = (r..m.rows)
            .map(|i| (i, m[(i, c)].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= eps {
            for i in r..m.rows {
                m[(i, c)] = 0.0;
            }
            continue;
        }
        m.swap_rows(r, best);
        let p = m[(r, c)];
        for j in 0..m.cols {
            m[(r, j)] /= p;
        }
        m[(r, c)] = 1.0;
        for i in 0..m.rows {
            if i == r {
                continue;
            }
            let factor = m[(i, c)];
            if factor != 0.0 {
                for j in 0..m.cols {
                    m[(i, j)] -= factor * m[(r, j)];
                }
                m[(i, c)] = 0.0;
            }
        }
        pivots.push(c);
        r += 1;
    }
    for x in m.data.iter_mut() {
        if x.abs() <= eps {
            *x = 0.0;
        }
    }
    (m, pivots)
}

pub fn rank(a: &Matrix, tol: f64) -> usize {
    rref(a, tol).1.len()
}

/// Basis of `{x : A x = 0}` read off the reduced row-echelon form.
pub fn null_space(a: &Matrix, tol: f64) -> Vec<Vec<f64>> {
    let (r, pivots) = rref(a, tol);
    let free: Vec<usize> = (0..a.cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![0.0; a.cols];
            v[f] = 1.0;
            for (k, &p) in pivots.iter().enumerate() {
                v[p] = -r[(k, f)];
            }
            v
        })
        .collect()
}

/// Indices of a maximal linearly independent subset of rows, chosen greedily
/// in row order by Gram-Schmidt against the rows kept so far.
pub fn independent_rows(a: &Matrix, tol: f64) -> Vec<usize> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut keep = Vec::new();
    for i in 0..a.rows {
        let mut v = a.row(i).to_vec();
        let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in &basis {
                let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= d * y;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > tol * norm0 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
            keep.push(i);
        }
    }
    keep
}

/// Solves the square system `A x = b` by LU with partial pivoting.
/// Returns `None` when a pivot falls below `1e-14 * max|A|`.
pub fn solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows;
    assert_eq!(n, a.cols);
    assert_eq!(n, b.len());
    let mut m = a.clone();
    let mut x = b.to_vec();
    let eps = 1e-14 * m.max_abs().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let (p, val) = (k..n)
            .map(|i| (i, m[(i, k)].abs()))
            .fold((k, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if !(val > eps) {
            return None;
        }
        m.swap_rows(k, p);
        x.swap(k, p);
        for i in k + 1..n {
            let f = m[(i, k)] / m[(k, k)];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m[(i, j)] -= f * m[(k, j)];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in k + 1..n {
            s -= m[(k, j)] * x[j];
        }
        x[k] = s / m[(k, k)];
    }
    Some(x)
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            max_halvings: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Damped Gauss-Newton for `F(x) = 0` with step halving on `|F|^2`.
///
/// `system` returns the residual and Jacobian at `x`; `accept` decides
/// convergence from the residual and the current point. Square systems take
/// the Newton step from an LU solve; non-square or singular systems fall back
/// to Levenberg-regularised normal equations.
pub fn damped_newton<S, A>(
    mut system: S,
    accept: A,
    x0: &[f64],
    opts: NewtonOptions,
) -> NewtonResult
where
    S: FnMut(&[f64]) -> (Vec<f64>, Matrix),
    A: Fn(&[f64], &[f64]) -> bool,
{
    let mut x = x0.to_vec();
    let (mut f, mut j) = system(&x);
    let merit = |r: &[f64]| -> f64 {
        let s: f64 = r.iter().map(|v| v * v).sum();
        if s.is_finite() {
            s
        } else {
            f64::INFINITY
        }
    };
    let mut phi = merit(&f);
    let mut lambda = 1e-8;
    for it in 0..opts.max_iterations {
        if phi.is_finite() && accept(&x, &f) {
            return NewtonResult {
                x,
                residual: f,
                iterations: it,
                converged: true,
            };
        }
        let step = newton_step(&j, &f, lambda);
        let Some(step) = step else {
            break;
        };
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a + alpha * d).collect();
            let (ft, jt) = system(&trial);
            let pt = merit(&ft);
            if pt < phi {
                x = trial;
                f = ft;
                j = jt;
                phi = pt;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if improved {
            lambda = (lambda * 0.1).max(1e-14);
        } else if lambda < 1e6 {
            lambda *= 1e3;
        } else {
            break;
        }
    }
    let converged = phi.is_finite() && accept(&x, &f);
    NewtonResult {
        x,
        residual: f,
        iterations: opts.max_iterations,
        converged,
    }
}

fn newton_step(j: &Matrix, f: &[f64], lambda: f64) -> Option<Vec<f64>> {
    let neg: Vec<f64> = f.iter().map(|v| -v).collect();
    if j.rows == j.cols {
        if let Some(s) = solve(j, &neg) {
            if s.iter().all(|v| v.is_finite()) {
                return Some(s);
            }
        }
    }
    // (J^T J + lambda * diag) s = -J^T f
    let n = j.cols;
    let jt = j.transpose();
    let mut normal = Matrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut s = 0.0;
            for k in 0..j.rows {
                s += jt[(a, k)] * jt[(b, k)];
            }
            normal[(a, b)] = s;
        }
    }
    let diag_scale = (0..n).map(|i| normal[(i, i)]).fold(0.0, f64::max).max(1e-300);
    for i in 0..n {
        normal[(i, i)] += lambda * diag_scale.max(normal[(i, i)]);
    }
    let rhs = jt.mul_vec(&neg);
    let s = solve(&normal, &rhs)?;
    s.iter().all(|v| v.is_finite()).then_some(s)
}
