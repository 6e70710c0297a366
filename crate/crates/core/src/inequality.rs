//! Discrete checks of the modified Gagliardo–Nirenberg proof chain, the
//! `x log x` lower bound and the space-time interpolation inequality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{trapezoid_weights, Series};
use crate::error::{Error, Result};
use crate::grid::{self, Field, Grid};
use crate::par;

/// Relative slack tolerance: an entry passes when
/// `rhs - lhs >= -SLACK_TOL * (1 + |rhs|)`.
pub const SLACK_TOL: f64 = 1e-12;

fn check_threshold(n: f64) -> Result<()> {
    if n > 1.0 && n.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("threshold N must exceed 1, got {n}")))
    }
}

/// `0` for `|s| ≤ N`, `2(|s| - N)` for `N < |s| ≤ 2N`, `|s|` beyond.
pub fn truncation_chi(s: f64, n: f64) -> Result<f64> {
    check_threshold(n)?;
    Ok(chi(s, n))
}

#[inline]
fn chi(s: f64, n: f64) -> f64 {
    let a = s.abs();
    if a <= n {
        0.0
    } else if a <= 2.0 * n {
        2.0 * (a - n)
    } else {
        a
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainEntry {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

impl ChainEntry {
    fn new(name: &'static str, lhs: f64, rhs: f64) -> Self {
        let slack = rhs - lhs;
        Self {
            name,
            lhs,
            rhs,
            slack,
            pass: slack >= -SLACK_TOL * (1.0 + rhs.abs()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    pub threshold: f64,
    pub dimension: usize,
    pub entries: Vec<ChainEntry>,
}

impl ChainReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn entry(&self, name: &str) -> Option<&ChainEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// The interpolation exponent: 4 in one dimension, 3 in two.
fn exponent(dim: usize) -> f64 {
    if dim == 1 {
        4.0
    } else {
        3.0
    }
}

/// `‖g‖_p^p / (‖g‖_{H^1}^2 ‖g‖_{L^1}^{p-2})`, the ratio bounded by the
/// standard Gagliardo–Nirenberg inequality; `None` when `g ≡ 0`.
pub fn gn_ratio(g: &Field) -> Option<f64> {
    let p = exponent(g.grid().dim());
    let l1 = grid::lp_power(g, 1.0);
    if l1 == 0.0 {
        return None;
    }
    Some(grid::lp_power(g, p) / (grid::h1_norm_sq(g) * l1.powf(p - 2.0)))
}

fn map_field(f: &Field, op: impl Fn(f64) -> f64) -> Field {
    Field::new(*f.grid(), f.values().iter().map(|&v| op(v)).collect()).expect("finite")
}

/// The proof chain with discrete norms. With `p = 4` in one dimension and
/// `p = 3` in two:
///
/// - `split`: `‖f‖_p^p ≤ c_p (‖χ(f)‖_p^p + ‖|f| - χ(f)‖_p^p)`, `c_p = 2^{p-1}`
/// - `tail`: `‖|f| - χ(f)‖_p^p ≤ (2N)^{p-1} ‖f‖_1`
/// - `truncated-h1`: `‖χ(f)‖_{H^1}^2 ≤ 4 ‖f‖_{H^1}^2`
/// - `truncated-l1`: `‖χ(f)‖_1^{p-2} ≤ (log N)^{2-p} ‖f log|f|‖_1^{p-2}`
///
/// With `c4` the report adds `standard-gn` for that constant and the composite
/// bounds on `‖f‖_p^p` with `gn = c4 ‖f‖_{H^1}^2 (‖f log|f|‖_1 / log N)^{p-2}`
/// and `tail = (2N)^{p-1} ‖f‖_1`: `composite` is `4 c_p gn + c_p tail`,
/// `composite-stated` is `2 c_p gn + c_p tail / 2`.
pub fn check_gn_chain(f: &Field, n: f64, c4: Option<f64>) -> Result<ChainReport> {
    check_threshold(n)?;
    let dim = f.grid().dim();
    let p = exponent(dim);
    let cp = 2f64.powf(p - 1.0);
    let chi_f = map_field(f, |v| chi(v, n));
    let rest = map_field(f, |v| v.abs() - chi(v, n));
    let fp = grid::lp_power(f, p);
    let chi_p = grid::lp_power(&chi_f, p);
    let rest_p = grid::lp_power(&rest, p);
    let l1 = grid::lp_power(f, 1.0);
    let h1 = grid::h1_norm_sq(f);
    let chi_h1 = grid::h1_norm_sq(&chi_f);
    let chi_l1 = grid::lp_power(&chi_f, 1.0);
    let flogf = grid::abs_llogl(f);
    let logn = n.ln();
    let q = p - 2.0;
    let mut entries = vec![
        ChainEntry::new("split", fp, cp * (chi_p + rest_p)),
        ChainEntry::new("tail", rest_p, (2.0 * n).powf(p - 1.0) * l1),
        ChainEntry::new("truncated-h1", chi_h1, 4.0 * h1),
        ChainEntry::new("truncated-l1", chi_l1.powf(q), (flogf / logn).powf(q)),
    ];
    if let Some(c4) = c4 {
        entries.push(ChainEntry::new("standard-gn", chi_p, c4 * chi_h1 * chi_l1.powf(q)));
        let gn = c4 * h1 * (flogf / logn).powf(q);
        let tail = (2.0 * n).powf(p - 1.0) * l1;
        entries.push(ChainEntry::new("composite", fp, 4.0 * cp * gn + cp * tail));
        entries.push(ChainEntry::new("composite-stated", fp, 2.0 * cp * gn + 0.5 * cp * tail));
    }
    Ok(ChainReport {
        threshold: n,
        dimension: dim,
        entries,
    })
}

/// `(x log x - x + 1) - (L x - e^L + 1)`, zero exactly at `x = e^L`.
pub fn check_xlogx_bound(x: f64, l: f64) -> f64 {
    if x == 0.0 {
        return l.exp();
    }
    x * (x.ln() - l) - x + l.exp()
}

/// Random trigonometric polynomials with at most `modes` cosine terms,
/// amplitudes uniform in `[0, amp]` and random phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandLimited {
    pub modes: usize,
    pub amp: f64,
}

impl BandLimited {
    /// Sample `index` of the family with seed `seed`; each index has its own
    /// stream, so sweeps are independent of evaluation order.
    pub fn sample(&self, grid: Grid, seed: u64, index: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let terms = rng.random_range(1..=self.modes.max(1));
        let [lx, ly] = grid.lengths();
        let pi = std::f64::consts::PI;
        let modes: Vec<(f64, f64, f64, f64)> = (0..terms)
            .map(|_| {
                let kx = rng.random_range(0..=self.modes) as f64;
                let ky = if grid.dim() == 2 {
                    rng.random_range(0..=self.modes) as f64
                } else {
                    0.0
                };
                let a = self.amp * rng.random::<f64>();
                let phase = 2.0 * pi * rng.random::<f64>();
                (kx, ky, a, phase)
            })
            .collect();
        Field::from_fn(grid, |x, y| {
            modes
                .iter()
                .map(|&(kx, ky, a, ph)| a * (kx * pi * x / lx + ky * pi * y / ly + ph).cos())
                .sum()
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Empirical standard-GN constant over the fields and their truncations.
    pub c4_hat: f64,
    pub reports: Vec<ChainReport>,
}

impl SweepReport {
    /// Number of failing entries with the given name.
    pub fn failures(&self, name: &str) -> usize {
        self.reports
            .iter()
            .filter(|r| r.entry(name).is_some_and(|e| !e.pass))
            .count()
    }

    pub fn min_slack(&self, name: &str) -> f64 {
        self.reports
            .iter()
            .filter_map(|r| r.entry(name))
            .map(|e| e.slack / (1.0 + e.rhs.abs()))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates the chain on `samples` band-limited fields in parallel. The
/// constant `Ĉ4` is measured over the same family first.
pub fn gn_sweep(grid: Grid, family: BandLimited, samples: usize, n: f64, seed: u64) -> Result<SweepReport> {
    check_threshold(n)?;
    let fields = par::map_indices(samples, |k| family.sample(grid, seed, k as u64));
    let ratios = par::map_indices(samples, |k| {
        let f = &fields[k];
        let truncated = map_field(f, |v| chi(v, n));
        [gn_ratio(f), gn_ratio(&truncated)]
    });
    let c4_hat = ratios.iter().flatten().flatten().fold(0.0f64, |m, r| m.max(*r));
    let reports = par::map_indices(samples, |k| check_gn_chain(&fields[k], n, Some(c4_hat)));
    Ok(SweepReport {
        c4_hat,
        reports: reports.into_iter().collect::<Result<_>>()?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationReport {
    /// `‖u‖_{L^4(Q_T)}^4`.
    pub lhs: f64,
    /// `‖u‖_{L^∞(0,T;L^2)}^2 ‖u‖_{L^2(0,T;L^∞)}^2`.
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Both sides with trapezoidal time quadrature over the snapshot times.
pub fn check_spacetime_interpolation(times: &[f64], fields: &[Field]) -> Result<InterpolationReport> {
    if fields.is_empty() {
        return Err(Error::TooFewPoints { got: 0, need: 1 });
    }
    if times.len() != fields.len() {
        return Err(Error::DimensionMismatch {
            expected: fields.len(),
            got: times.len(),
        });
    }
    let w = trapezoid_weights(times);
    let mut lhs = 0.0;
    let mut sup_l2 = 0.0f64;
    let mut linf_l2 = 0.0;
    for (f, wk) in fields.iter().zip(&w) {
        lhs += wk * grid::lp_power(f, 4.0);
        sup_l2 = sup_l2.max(grid::lp_power(f, 2.0));
        let m = f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        linf_l2 += wk * m * m;
    }
    let rhs = sup_l2 * linf_l2;
    let slack = rhs - lhs;
    Ok(InterpolationReport {
        lhs,
        rhs,
        slack,
        pass: slack >= -SLACK_TOL * (1.0 + rhs.abs()),
    })
}

/// [`check_spacetime_interpolation`] for every species of a series with
/// retained snapshots.
pub fn series_interpolation(series: &Series) -> Result<Vec<InterpolationReport>> {
    if series.snapshots.len() != series.records.len() || series.snapshots.is_empty() {
        return Err(Error::InvalidArgument("series has no retained snapshots".into()));
    }
    let times = series.times();
    (0..series.snapshots[0].len())
        .map(|i| {
            let fields: Vec<Field> = series.snapshots.iter().map(|s| s[i].clone()).collect();
            check_spacetime_interpolation(&times, &fields)
        })
        .collect()
}
