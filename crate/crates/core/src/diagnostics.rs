//! Time series of norms and entropy quantities, and the post-processing that
//! turns them into verdicts: monotonicity, dissipation balance, space-time
//! norms, exponential decay and polynomial growth fits.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::{self, fmt_num, Field};

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: f64,
    /// Size of the accepted step that produced this record; 0 at `t = 0`.
    pub dt: f64,
    pub entropy: f64,
    pub fisher: f64,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub l4: Vec<f64>,
    pub linf: Vec<f64>,
    pub llogl: Vec<f64>,
    /// `‖u_i - u_{i,∞}‖_∞`; NaN when there is no reference equilibrium.
    pub dist_inf: Vec<f64>,
}

impl Record {
    pub fn compute(
        fields: &[Field],
        mu: &[f64],
        diffusion: &[f64],
        reference: Option<&[f64]>,
        t: f64,
        dt: f64,
    ) -> Result<Self> {
        let norm = |p: f64| -> Result<Vec<f64>> { fields.iter().map(|f| grid::lp_norm(f, p)).collect() };
        let dist_inf = match reference {
            Some(r) => fields
                .iter()
                .zip(r)
                .map(|(f, &ui)| f.values().iter().fold(0.0f64, |m, v| m.max((v - ui).abs())))
                .collect(),
            None => vec![f64::NAN; fields.len()],
        };
        Ok(Self {
            t,
            dt,
            entropy: grid::entropy_functional(fields, mu)?,
            fisher: grid::fisher_information(fields, diffusion)?,
            l1: norm(1.0)?,
            l2: norm(2.0)?,
            l4: norm(4.0)?,
            linf: norm(f64::INFINITY)?,
            llogl: fields.iter().map(grid::llogl_norm).collect::<Result<_>>()?,
            dist_inf,
        })
    }

    /// `Σ_i ‖u_i - u_{i,∞}‖_∞`.
    pub fn total_distance(&self) -> f64 {
        self.dist_inf.iter().sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.linf.iter().fold(0.0, |m: f64, v| m.max(*v))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series {
    pub species: Vec<String>,
    pub records: Vec<Record>,
    /// Fields at each record when retained; empty otherwise.
    pub snapshots: Vec<Vec<Field>>,
}

const GROUPS: [&str; 6] = ["L1", "L2", "L4", "Linf", "LlogL", "dist_inf"];

impl Series {
    pub fn new(species: Vec<String>) -> Self {
        Self {
            species,
            records: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    /// Appends a continuation (e.g. the series of a resumed run).
    pub fn extend(&mut self, other: Series) {
        self.records.extend(other.records);
        self.snapshots.extend(other.snapshots);
    }

    pub fn header(&self) -> String {
        let mut cols = vec!["t".to_string(), "dt".into(), "E".into(), "D".into()];
        for g in GROUPS {
            for s in &self.species {
                cols.push(format!("{g}_{s}"));
            }
        }
        cols.join(",")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.header())?;
        for r in &self.records {
            let mut row = vec![fmt_num(r.t), fmt_num(r.dt), fmt_num(r.entropy), fmt_num(r.fisher)];
            for group in [&r.l1, &r.l2, &r.l4, &r.linf, &r.llogl, &r.dist_inf] {
                row.extend(group.iter().map(|v| fmt_num(*v)));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty diagnostics file".into()))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() < 4 || cols[..4] != ["t", "dt", "E", "D"] || (cols.len() - 4) % GROUPS.len() != 0 {
            return Err(Error::InvalidArgument("not a diagnostics header".into()));
        }
        let n = (cols.len() - 4) / GROUPS.len();
        let species: Vec<String> = cols[4..4 + n]
            .iter()
            .map(|c| c.strip_prefix("L1_").map(str::to_string))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::InvalidArgument("not a diagnostics header".into()))?;
        let mut series = Series::new(species);
        if series.header() != header.trim() {
            return Err(Error::InvalidArgument("diagnostics columns out of order".into()));
        }
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v: Vec<f64> = line
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidArgument(format!("row {}: {e}", k + 2)))?;
            if v.len() != cols.len() {
                return Err(Error::InvalidArgument(format!(
                    "row {} has {} columns, expected {}",
                    k + 2,
                    v.len(),
                    cols.len()
                )));
            }
            let group = |g: usize| v[4 + g * n..4 + (g + 1) * n].to_vec();
            series.records.push(Record {
                t: v[0],
                dt: v[1],
                entropy: v[2],
                fisher: v[3],
                l1: group(0),
                l2: group(1),
                l4: group(2),
                linf: group(3),
                llogl: group(4),
                dist_inf: group(5),
            });
        }
        Ok(series)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityReport {
    /// Largest `E(t_{k+1}) - E(t_k)`; negative when `E` strictly decreases.
    pub max_jump: f64,
    /// Time `t_{k+1}` at which it occurs.
    pub at_time: f64,
    /// Largest jump divided by `1 + |E(t_k)|`.
    pub max_relative_jump: f64,
}

pub fn entropy_monotonicity_report(series: &Series) -> Result<MonotonicityReport> {
    let r = &series.records;
    if r.len() < 2 {
        return Err(Error::TooFewPoints { got: r.len(), need: 2 });
    }
    let mut rep = MonotonicityReport {
        max_jump: f64::NEG_INFINITY,
        at_time: r[1].t,
        max_relative_jump: f64::NEG_INFINITY,
    };
    for w in r.windows(2) {
        let jump = w[1].entropy - w[0].entropy;
        if jump > rep.max_jump {
            rep.max_jump = jump;
            rep.at_time = w[1].t;
        }
        rep.max_relative_jump = rep.max_relative_jump.max(jump / (1.0 + w[0].entropy.abs()));
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipationReport {
    /// `(t_k, (E_{k+1} - E_k)/Δt + D(t_k))` per interval.
    pub residuals: Vec<(f64, f64)>,
    /// Smallest `C ≥ 0` with every residual `≤ C Δt`.
    pub envelope: f64,
    pub max_residual: f64,
}

pub fn dissipation_balance(series: &Series) -> Result<DissipationReport> {
    let r = &series.records;
    if r.len() < 2 {
        return Err(Error::TooFewPoints { got: r.len(), need: 2 });
    }
    let mut residuals = Vec::with_capacity(r.len() - 1);
    let mut envelope = 0.0f64;
    let mut max_residual = f64::NEG_INFINITY;
    for w in r.windows(2) {
        let dt = w[1].t - w[0].t;
        let res = (w[1].entropy - w[0].entropy) / dt + w[0].fisher;
        residuals.push((w[0].t, res));
        envelope = envelope.max(res / dt);
        max_residual = max_residual.max(res);
    }
    Ok(DissipationReport {
        residuals,
        envelope,
        max_residual,
    })
}

/// Trapezoidal weights for the given nodes.
pub fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; times.len()];
    for k in 1..times.len() {
        let h = 0.5 * (times[k] - times[k - 1]);
        w[k - 1] += h;
        w[k] += h;
    }
    w
}

/// `‖u_i‖_{L^p(Q_T)}` per species: midpoint in space, trapezoid in time over
/// the retained snapshots.
pub fn spacetime_norm(series: &Series, p: f64) -> Result<Vec<f64>> {
    if !(p >= 1.0) || p.is_infinite() {
        return Err(Error::InvalidArgument(format!("p must lie in [1, ∞), got {p}")));
    }
    if series.snapshots.is_empty() || series.snapshots.len() != series.records.len() {
        return Err(Error::InvalidArgument("series has no retained snapshots".into()));
    }
    let w = trapezoid_weights(&series.times());
    let n = series.snapshots[0].len();
    Ok((0..n)
        .map(|i| {
            let s: f64 = series
                .snapshots
                .iter()
                .zip(&w)
                .map(|(snap, wk)| wk * grid::lp_power(&snap[i], p))
                .sum();
            s.powf(1.0 / p)
        })
        .collect())
}

/// `sup_{t ≤ T} max_i ‖u_i(t)‖_∞` for every horizon `T`.
pub fn sup_norm_at_horizons(series: &Series, horizons: &[f64]) -> Vec<f64> {
    horizons
        .iter()
        .map(|&h| {
            series
                .records
                .iter()
                .filter(|r| r.t <= h * (1.0 + 1e-12))
                .fold(f64::NAN, |m, r| if m.is_nan() { r.sup_norm() } else { m.max(r.sup_norm()) })
        })
        .collect()
}

/// Ordinary least squares `y ≈ a + b x`; returns `(a, b, R²)`. A constant
/// `y` has `R² = 1`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - xm) * (a - xm);
        sxy += (a - xm) * (b - ym);
        syy += (b - ym) * (b - ym);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = ym - slope * xm;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (intercept, slope, r2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `C` in `C e^{-λ t}`.
    pub amplitude: f64,
    pub rate: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least squares on `log d` against `t`. Without a window the last 80% of
/// the records are used. Nonpositive or non-finite distances are dropped.
pub fn fit_exponential_decay(times: &[f64], distances: &[f64], window: Option<(f64, f64)>) -> Result<DecayFit> {
    if times.len() != distances.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            got: distances.len(),
        });
    }
    let (lo, hi) = match window {
        Some(w) => w,
        None => {
            let start = times.len() / 5;
            match (times.get(start), times.last()) {
                (Some(a), Some(b)) => (*a, *b),
                _ => return Err(Error::TooFewPoints { got: 0, need: 5 }),
            }
        }
    };
    let (t, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(distances)
        .filter(|(t, d)| **t >= lo && **t <= hi && **d > 0.0 && d.is_finite())
        .map(|(t, d)| (*t, d.ln()))
        .unzip();
    if t.len() < 5 {
        return Err(Error::TooFewPoints { got: t.len(), need: 5 });
    }
    let (a, b, r2) = linear_fit(&t, &y);
    Ok(DecayFit {
        amplitude: a.exp(),
        rate: -b,
        r2,
        points: t.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub degree: f64,
    /// `c` in `M ≈ c T^degree`.
    pub constant: f64,
    pub r2: f64,
}

pub fn fit_polynomial_growth(horizons: &[f64], sup_norms: &[f64]) -> Result<GrowthFit> {
    if horizons.len() != sup_norms.len() {
        return Err(Error::DimensionMismatch {
            expected: horizons.len(),
            got: sup_norms.len(),
        });
    }
    if horizons.len() < 3 {
        return Err(Error::TooFewPoints {
            got: horizons.len(),
            need: 3,
        });
    }
    if horizons.windows(2).any(|w| w[1] <= w[0]) || horizons[0] <= 0.0 {
        return Err(Error::InvalidArgument("horizons must be positive and increasing".into()));
    }
    if sup_norms.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(Error::InvalidArgument("sup norms must be positive and finite".into()));
    }
    let x: Vec<f64> = horizons.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = sup_norms.iter().map(|m| m.ln()).collect();
    let (a, b, r2) = linear_fit(&x, &y);
    Ok(GrowthFit {
        degree: b,
        constant: a.exp(),
        r2,
    })
}
