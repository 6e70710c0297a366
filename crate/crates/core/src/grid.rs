//! Uniform cell-centred grids on an interval or rectangle, fields on them,
//! midpoint quadrature, the zero-flux Laplacian and the entropy functionals.
//!
//! Cells are numbered x-major: `index = ix * ny + iy`, so in one dimension
//! the index is just `ix`.

use std::io::Write;

use crate::error::{Error, Result};

/// Floor used inside logarithms and for skipping degenerate faces.
pub const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    lengths: [f64; 2],
    cells: [usize; 2],
}

impl Grid {
    pub fn interval(length: f64, n: usize) -> Result<Self> {
        Self::check(length, n)?;
        Ok(Self {
            dim: 1,
            lengths: [length, 1.0],
            cells: [n, 1],
        })
    }

    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::check(lx, nx)?;
        Self::check(ly, ny)?;
        Ok(Self {
            dim: 2,
            lengths: [lx, ly],
            cells: [nx, ny],
        })
    }

    fn check(length: f64, n: usize) -> Result<()> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::NonPositive {
                what: "domain length".into(),
                value: length,
            });
        }
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 cells per axis, got {n}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> [f64; 2] {
        self.lengths
    }

    pub fn cells(&self) -> [usize; 2] {
        self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.cells[axis] as f64
    }

    /// `h^d` (or `hx * hy`).
    pub fn cell_volume(&self) -> f64 {
        match self.dim {
            1 => self.spacing(0),
            _ => self.spacing(0) * self.spacing(1),
        }
    }

    /// `|Ω|`.
    pub fn volume(&self) -> f64 {
        match self.dim {
            1 => self.lengths[0],
            _ => self.lengths[0] * self.lengths[1],
        }
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.cells[1] + iy
    }

    /// Cell centre `((ix + 1/2) hx, (iy + 1/2) hy)`; `y` is 0 in one dimension.
    pub fn center(&self, idx: usize) -> (f64, f64) {
        let ix = idx / self.cells[1];
        let iy = idx % self.cells[1];
        let x = (ix as f64 + 0.5) * self.spacing(0);
        let y = if self.dim == 1 {
            0.0
        } else {
            (iy as f64 + 0.5) * self.spacing(1)
        };
        (x, y)
    }

    /// Interior faces as `(left, right, h)` pairs of neighbouring cells.
    pub fn faces(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let [nx, ny] = self.cells;
        let hx = self.spacing(0);
        let hy = self.spacing(1);
        let two_d = self.dim == 2;
        let xf = (0..nx - 1).flat_map(move |ix| (0..ny).map(move |iy| (ix * ny + iy, (ix + 1) * ny + iy, hx)));
        let yf = (0..if two_d { nx } else { 0 })
            .flat_map(move |ix| (0..ny - 1).map(move |iy| (ix * ny + iy, ix * ny + iy + 1, hy)));
        xf.chain(yf)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::DimensionMismatch {
                expected: grid.n_cells(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value at cell {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.n_cells()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.n_cells())
            .map(|i| {
                let (x, y) = grid.center(i);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Raw access for in-place updates; callers keep values finite.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Midpoint quadrature `h^d Σ cells`.
pub fn integrate(f: &Field) -> f64 {
    f.grid.cell_volume() * f.values.iter().sum::<f64>()
}

/// `(∫ |f|^p)^{1/p}`, or `max |f|` for `p = ∞`.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p must be >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(f.values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    Ok(lp_power(f, p).powf(1.0 / p))
}

/// `∫ |f|^p` without the final root.
pub fn lp_power(f: &Field, p: f64) -> f64 {
    let s: f64 = if p == 1.0 {
        f.values.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        f.values.iter().map(|v| v * v).sum()
    } else if p == 4.0 {
        f.values.iter().map(|v| (v * v) * (v * v)).sum()
    } else {
        f.values.iter().map(|v| v.abs().powf(p)).sum()
    };
    f.grid.cell_volume() * s
}

#[inline]
fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.max(LOG_FLOOR).ln()
    }
}

/// `∫ |f log f|` with `0 log 0 = 0`.
pub fn llogl_norm(f: &Field) -> Result<f64> {
    if let Some(v) = f.values.iter().find(|v| **v < 0.0) {
        return Err(Error::NegativeInput {
            index: f.values.iter().position(|x| x == v).unwrap_or(0),
            value: *v,
        });
    }
    Ok(f.grid.cell_volume() * f.values.iter().map(|&v| xlogx(v).abs()).sum::<f64>())
}

/// `∫ |f log |f||` for signed fields.
pub fn abs_llogl(f: &Field) -> f64 {
    f.grid.cell_volume() * f.values.iter().map(|&v| xlogx(v.abs()).abs()).sum::<f64>()
}

fn check_species(u: &[Field], coeffs: &[f64]) -> Result<()> {
    if u.len() != coeffs.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: coeffs.len(),
        });
    }
    if let Some(g) = u.first().map(|f| f.grid) {
        if u.iter().any(|f| f.grid != g) {
            return Err(Error::InvalidArgument("species fields live on different grids".into()));
        }
    }
    Ok(())
}

/// `∫ Σ_i (u_i (μ_i + log u_i) - u_i)`.
pub fn entropy_functional(u: &[Field], mu: &[f64]) -> Result<f64> {
    check_species(u, mu)?;
    let mut total = 0.0;
    for (f, &m) in u.iter().zip(mu) {
        let mut s = 0.0;
        for &v in &f.values {
            if v < 0.0 {
                return Err(Error::NegativeInput { index: 0, value: v });
            }
            s += xlogx(v) + (m - 1.0) * v;
        }
        total += s * f.grid.cell_volume();
    }
    Ok(total)
}

/// Discrete `Σ_i d_i ∫ |∇u_i|^2 / u_i`, with face differences over the
/// arithmetic face average. Faces whose average is below [`LOG_FLOOR`] are
/// skipped.
pub fn fisher_information(u: &[Field], diffusion: &[f64]) -> Result<f64> {
    check_species(u, diffusion)?;
    let mut total = 0.0;
    for (f, &d) in u.iter().zip(diffusion) {
        let mut s = 0.0;
        for (a, b, h) in f.grid.faces() {
            let avg = 0.5 * (f.values[a] + f.values[b]);
            if avg <= LOG_FLOOR {
                continue;
            }
            let g = (f.values[b] - f.values[a]) / h;
            s += g * g / avg;
        }
        total += d * s * f.grid.cell_volume();
    }
    Ok(total)
}

/// Discrete `‖f‖_{H^1}^2 = Σ_faces (Δf/h)^2 h^d + Σ_cells f^2 h^d`.
pub fn h1_norm_sq(f: &Field) -> f64 {
    let mut grad = 0.0;
    for (a, b, h) in f.grid.faces() {
        let g = (f.values[b] - f.values[a]) / h;
        grad += g * g;
    }
    let l2: f64 = f.values.iter().map(|v| v * v).sum();
    (grad + l2) * f.grid.cell_volume()
}

/// Three-point (1D) / five-point (2D) Laplacian with reflected ghost cells.
pub fn apply_neumann_laplacian(f: &Field) -> Field {
    let mut out = vec![0.0; f.values.len()];
    laplacian_into(&f.grid, &f.values, &mut out);
    Field {
        grid: f.grid,
        values: out,
    }
}

pub(crate) fn laplacian_into(grid: &Grid, v: &[f64], out: &mut [f64]) {
    let [nx, ny] = grid.cells;
    let ihx2 = 1.0 / (grid.spacing(0) * grid.spacing(0));
    if grid.dim == 1 {
        for i in 0..nx {
            let l = if i > 0 { v[i - 1] } else { v[i] };
            let r = if i + 1 < nx { v[i + 1] } else { v[i] };
            out[i] = (l - 2.0 * v[i] + r) * ihx2;
        }
        return;
    }
    let ihy2 = 1.0 / (grid.spacing(1) * grid.spacing(1));
    for ix in 0..nx {
        for iy in 0..ny {
            let k = ix * ny + iy;
            let c = v[k];
            let w = if ix > 0 { v[k - ny] } else { c };
            let e = if ix + 1 < nx { v[k + ny] } else { c };
            let s = if iy > 0 { v[k - 1] } else { c };
            let n = if iy + 1 < ny { v[k + 1] } else { c };
            out[k] = (w - 2.0 * c + e) * ihx2 + (s - 2.0 * c + n) * ihy2;
        }
    }
}

/// Writes `x[,y],species...` rows, one per cell, 17 significant digits.
pub fn write_snapshot_csv<W: Write>(mut w: W, fields: &[Field], names: &[String]) -> Result<()> {
    let grid = fields
        .first()
        .map(|f| f.grid)
        .ok_or_else(|| Error::InvalidArgument("no fields to write".into()))?;
    if names.len() != fields.len() {
        return Err(Error::DimensionMismatch {
            expected: fields.len(),
            got: names.len(),
        });
    }
    let mut header = String::from("x");
    if grid.dim == 2 {
        header.push_str(",y");
    }
    for n in names {
        header.push(',');
        header.push_str(n);
    }
    writeln!(w, "{header}")?;
    for i in 0..grid.n_cells() {
        let (x, y) = grid.center(i);
        let mut row = fmt_num(x);
        if grid.dim == 2 {
            row.push(',');
            row.push_str(&fmt_num(y));
        }
        for f in fields {
            row.push(',');
            row.push_str(&fmt_num(f.values[i]));
        }
        writeln!(w, "{row}")?;
    }
    Ok(())
}

/// Round-trip-safe number formatting (17 significant digits).
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}
