use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::crn::{Kinetics, RateLaw, ReactionNetwork};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Initial profile of one species. All profiles depend on `x` only; in two
/// dimensions they are constant in `y`.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// `a + b cos(k π x / L)`.
    Cosine { a: f64, b: f64, k: f64 },
    /// `a + c exp(-((x - x0) / w)^2)`.
    Gaussian { a: f64, c: f64, x0: f64, w: f64 },
    /// `a` for `x < x0`, `b` otherwise.
    Step { a: f64, b: f64, x0: f64 },
    /// Independent uniform draws on `[lo, hi]` per cell, from the run seed.
    Random { lo: f64, hi: f64 },
}

impl Profile {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = |msg: &str| Error::InvalidArgument(format!("profile `{text}`: {msg}"));
        let open = text.find('(').ok_or_else(|| bad("expected name(args)"))?;
        if !text.ends_with(')') {
            return Err(bad("missing closing parenthesis"));
        }
        let name = text[..open].trim();
        let args: Vec<f64> = text[open + 1..text.len() - 1]
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("arguments must be numbers"))?;
        if args.iter().any(|a| !a.is_finite()) {
            return Err(bad("arguments must be finite"));
        }
        let want = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(bad(&format!("expected {n} arguments, got {}", args.len())))
            }
        };
        match name {
            "constant" => {
                want(1)?;
                Ok(Profile::Constant(args[0]))
            }
            "cosine" => {
                want(3)?;
                Ok(Profile::Cosine {
                    a: args[0],
                    b: args[1],
                    k: args[2],
                })
            }
            "gaussian" => {
                want(4)?;
                if args[3] <= 0.0 {
                    return Err(bad("width must be positive"));
                }
                Ok(Profile::Gaussian {
                    a: args[0],
                    c: args[1],
                    x0: args[2],
                    w: args[3],
                })
            }
            "step" => {
                want(3)?;
                Ok(Profile::Step {
                    a: args[0],
                    b: args[1],
                    x0: args[2],
                })
            }
            "random" => {
                want(2)?;
                if args[0] > args[1] {
                    return Err(bad("lower bound exceeds upper bound"));
                }
                Ok(Profile::Random {
                    lo: args[0],
                    hi: args[1],
                })
            }
            _ => Err(bad("unknown profile")),
        }
    }

    /// Samples the profile at cell centres. `species` decorrelates random
    /// profiles of different species under one seed.
    pub fn sample(&self, grid: Grid, seed: u64, species: usize) -> Result<Field> {
        let length = grid.lengths()[0];
        let field = match *self {
            Profile::Random { lo, hi } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(species as u64);
                let values = (0..grid.n_cells())
                    .map(|_| lo + (hi - lo) * rng.random::<f64>())
                    .collect();
                Field::new(grid, values)?
            }
            Profile::Constant(c) => Field::constant(grid, c),
            Profile::Cosine { a, b, k } => {
                Field::from_fn(grid, |x, _| a + b * (k * std::f64::consts::PI * x / length).cos())
            }
            Profile::Gaussian { a, c, x0, w } => Field::from_fn(grid, |x, _| {
                let z = (x - x0) / w;
                a + c * (-z * z).exp()
            }),
            Profile::Step { a, b, x0 } => Field::from_fn(grid, |x, _| if x < x0 { a } else { b }),
        };
        if let Some((i, v)) = field.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeInput { index: i, value: *v });
        }
        Ok(field)
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant(c) => write!(f, "constant({c})"),
            Profile::Cosine { a, b, k } => write!(f, "cosine({a},{b},{k})"),
            Profile::Gaussian { a, c, x0, w } => write!(f, "gaussian({a},{c},{x0},{w})"),
            Profile::Step { a, b, x0 } => write!(f, "step({a},{b},{x0})"),
            Profile::Random { lo, hi } => write!(f, "random({lo},{hi})"),
        }
    }
}

/// Time discretisation of the diffusion substep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiffusionScheme {
    /// `(I - dt D Δ) u* = u`. First order, monotone.
    BackwardEuler,
    /// `2 BE(dt/2)^2 - BE(dt)`: second order and L-stable, but not monotone.
    #[default]
    Extrapolated,
}

impl DiffusionScheme {
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "backward-euler" => Ok(Self::BackwardEuler),
            "extrapolated" => Ok(Self::Extrapolated),
            other => Err(Error::InvalidArgument(format!(
                "unknown diffusion scheme `{other}` (backward-euler | extrapolated)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::BackwardEuler => "backward-euler",
            Self::Extrapolated => "extrapolated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepControl {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub safety: f64,
    /// Max-norm bound on the step-doubling error estimate.
    pub tol: f64,
    /// Values in `[-delta_pos, 0)` are clamped to zero; anything lower rejects.
    pub delta_pos: f64,
    pub max_growth: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            dt_init: 1e-3,
            dt_min: 1e-12,
            dt_max: 1e-2,
            safety: 0.9,
            tol: 1e-9,
            delta_pos: 1e-13,
            max_growth: 1.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub kinetics: Kinetics,
    pub diffusion: Vec<f64>,
    pub grid: Grid,
    pub initial: Vec<Profile>,
    pub t_end: f64,
    pub control: StepControl,
    pub cadence: f64,
    pub seed: u64,
    pub scheme: DiffusionScheme,
    /// Entropy multipliers; defaults to `-log` of the reference equilibrium.
    pub mu: Option<Vec<f64>>,
    /// Equilibrium for the distance columns; computed from the initial
    /// totals for mass-action kinetics when absent.
    pub reference: Option<Vec<f64>>,
    /// Keep a copy of the fields at every diagnostics record.
    pub retain_snapshots: bool,
}

impl SimulationConfig {
    pub fn new(kinetics: Kinetics, diffusion: Vec<f64>, grid: Grid, initial: Vec<Profile>, t_end: f64) -> Self {
        Self {
            kinetics,
            diffusion,
            grid,
            initial,
            t_end,
            control: StepControl::default(),
            cadence: 0.01,
            seed: 0,
            scheme: DiffusionScheme::default(),
            mu: None,
            reference: None,
            retain_snapshots: true,
        }
    }

    pub fn from_network(net: ReactionNetwork, grid: Grid, initial: Vec<Profile>, t_end: f64) -> Self {
        let diffusion = net.diffusion().to_vec();
        Self::new(Kinetics::MassAction(net), diffusion, grid, initial, t_end)
    }

    pub fn n_species(&self) -> usize {
        self.kinetics.n_species()
    }

    pub fn species_names(&self) -> Vec<String> {
        match self.kinetics.network() {
            Some(net) => net.species().to_vec(),
            None => (0..self.n_species()).map(|i| format!("u{}", i + 1)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_species();
        for (what, len) in [("diffusion", self.diffusion.len()), ("initial", self.initial.len())] {
            if len != n {
                return Err(Error::InvalidArgument(format!(
                    "{what} has {len} entries for {n} species"
                )));
            }
        }
        if let Some(d) = self.diffusion.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(Error::NonPositive {
                what: "diffusion coefficient".into(),
                value: *d,
            });
        }
        let c = &self.control;
        if !(c.dt_min > 0.0 && c.dt_min <= c.dt_init && c.dt_init <= c.dt_max && c.dt_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < dt_min <= dt_init <= dt_max, got {}, {}, {}",
                c.dt_min, c.dt_init, c.dt_max
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(c.tol > 0.0) || !(c.delta_pos >= 0.0) {
            return Err(Error::InvalidArgument("tol must be > 0 and delta_pos >= 0".into()));
        }
        if !(c.safety > 0.0 && c.safety <= 1.0) || !(c.max_growth >= 1.0 && c.max_growth <= 1.5) {
            return Err(Error::InvalidArgument(
                "safety must lie in (0, 1] and max_growth in [1, 1.5]".into(),
            ));
        }
        if !(self.cadence > 0.0 && self.cadence.is_finite()) {
            return Err(Error::NonPositive {
                what: "diagnostics cadence".into(),
                value: self.cadence,
            });
        }
        for (what, v) in [("mu", &self.mu), ("reference", &self.reference)] {
            if let Some(v) = v {
                if v.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: v.len(),
                    });
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite(what.into()));
                }
            }
        }
        if let Some(r) = &self.reference {
            if let Some(x) = r.iter().find(|x| **x <= 0.0) {
                return Err(Error::NonPositive {
                    what: "reference equilibrium".into(),
                    value: *x,
                });
            }
        }
        Ok(())
    }
}
