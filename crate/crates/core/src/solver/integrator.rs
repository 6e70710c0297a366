use super::config::{DiffusionScheme, SimulationConfig};
use super::linear::implicit_diffusion;
use super::state::{init_state, SimulationState};
use crate::analysis::{find_positive_equilibrium_with, law_basis, totals};
use crate::crn::{Kinetics, RateLaw};
use crate::diagnostics::{Record, Series};
use crate::error::{Error, Result};
use crate::grid::{self, Field, Grid};
use crate::par;

/// Below this many cells the per-cell and per-species loops stay on the
/// calling thread; the results are identical either way.
const PAR_MIN_CELLS: usize = 2048;
const REACTION_CHUNK: usize = 512;

/// Species-major cell values: `u[i][cell]`.
pub type Values = Vec<Vec<f64>>;

#[derive(Debug, Clone, Copy)]
pub struct Integrator<'a> {
    kinetics: &'a Kinetics,
    diffusion: &'a [f64],
    grid: Grid,
    scheme: DiffusionScheme,
}

/// Outcome of one step-doubling attempt.
#[derive(Debug, Clone)]
pub struct Trial {
    /// Result of two half steps.
    pub candidate: Values,
    /// Max-norm difference between one full step and two half steps.
    pub error: f64,
    pub min_value: f64,
}

impl<'a> Integrator<'a> {
    pub fn new(config: &'a SimulationConfig) -> Self {
        Self {
            kinetics: &config.kinetics,
            diffusion: &config.diffusion,
            grid: config.grid,
            scheme: config.scheme,
        }
    }

    pub fn with_parts(kinetics: &'a Kinetics, diffusion: &'a [f64], grid: Grid, scheme: DiffusionScheme) -> Self {
        Self {
            kinetics,
            diffusion,
            grid,
            scheme,
        }
    }

    /// One classical RK4 step of `u' = f(u)` in every cell.
    pub fn reaction(&self, u: &mut [Vec<f64>], h: f64) {
        let cells = self.grid.n_cells();
        let n = u.len();
        let kernel = |start: usize, end: usize| -> Vec<f64> {
            let mut out = Vec::with_capacity((end - start) * n);
            let mut y = vec![0.0; n];
            let mut tmp = vec![0.0; n];
            let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
            for c in start..end {
                for i in 0..n {
                    y[i] = u[i][c];
                }
                rk4(self.kinetics, &y, h, &mut tmp, &mut k);
                for i in 0..n {
                    out.push(y[i] + h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]));
                }
            }
            out
        };
        let chunks: Vec<Vec<f64>> = if cells >= PAR_MIN_CELLS {
            par::map_indices(cells.div_ceil(REACTION_CHUNK), |j| {
                kernel(j * REACTION_CHUNK, ((j + 1) * REACTION_CHUNK).min(cells))
            })
        } else {
            vec![kernel(0, cells)]
        };
        let mut c = 0;
        for chunk in chunks {
            for cell in chunk.chunks_exact(n) {
                for i in 0..n {
                    u[i][c] = cell[i];
                }
                c += 1;
            }
        }
    }

    /// One implicit diffusion step of length `dt` for every species.
    pub fn diffuse(&self, u: &mut [Vec<f64>], dt: f64) -> Result<()> {
        let grid = self.grid;
        let scheme = self.scheme;
        let d = self.diffusion;
        let solve = |i: usize, ui: &mut Vec<f64>| -> Result<()> {
            let a = dt * d[i];
            match scheme {
                DiffusionScheme::BackwardEuler => implicit_diffusion(&grid, a, ui),
                DiffusionScheme::Extrapolated => {
                    let mut half = ui.clone();
                    implicit_diffusion(&grid, 0.5 * a, &mut half)?;
                    implicit_diffusion(&grid, 0.5 * a, &mut half)?;
                    implicit_diffusion(&grid, a, ui)?;
                    for (f, h) in ui.iter_mut().zip(&half) {
                        *f = 2.0 * h - *f;
                    }
                    Ok(())
                }
            }
        };
        if grid.n_cells() >= PAR_MIN_CELLS {
            par::map_mut(u, solve).into_iter().collect()
        } else {
            u.iter_mut().enumerate().try_for_each(|(i, ui)| solve(i, ui))
        }
    }

    /// Half reaction, full diffusion, half reaction.
    pub fn strang_step(&self, u: &mut [Vec<f64>], dt: f64) -> Result<()> {
        self.reaction(u, 0.5 * dt);
        self.diffuse(u, dt)?;
        self.reaction(u, 0.5 * dt);
        Ok(())
    }

    /// Step doubling: compares one step of `dt` with two of `dt/2`.
    pub fn step(&self, u: &[Vec<f64>], dt: f64) -> Result<Trial> {
        let mut big = u.to_vec();
        self.strang_step(&mut big, dt)?;
        let mut half = u.to_vec();
        self.strang_step(&mut half, 0.5 * dt)?;
        self.strang_step(&mut half, 0.5 * dt)?;
        let mut error = 0.0f64;
        let mut min_value = f64::INFINITY;
        for (a, b) in big.iter().flatten().zip(half.iter().flatten()) {
            let e = (a - b).abs();
            error = if e.is_nan() { f64::NAN } else { error.max(e) };
            min_value = min_value.min(*b);
        }
        if half.iter().flatten().any(|v| !v.is_finite()) {
            error = f64::NAN;
        }
        Ok(Trial {
            candidate: half,
            error,
            min_value,
        })
    }
}

fn rk4<F: RateLaw + ?Sized>(f: &F, y: &[f64], h: f64, tmp: &mut [f64], k: &mut [Vec<f64>; 4]) {
    let n = y.len();
    f.eval_into(y, &mut k[0]);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k[0][i];
    }
    f.eval_into(tmp, &mut k[1]);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k[1][i];
    }
    f.eval_into(tmp, &mut k[2]);
    for i in 0..n {
        tmp[i] = y[i] + h * k[2][i];
    }
    f.eval_into(tmp, &mut k[3]);
}

pub fn to_values(fields: &[Field]) -> Values {
    fields.iter().map(|f| f.values().to_vec()).collect()
}

pub fn to_fields(grid: Grid, u: Values) -> Result<Vec<Field>> {
    u.into_iter().map(|v| Field::new(grid, v)).collect()
}

/// Advances with `steps` fixed Strang steps of size `dt`, without error
/// control or clamping.
pub fn advance_fixed(config: &SimulationConfig, state: &SimulationState, dt: f64, steps: usize) -> Result<SimulationState> {
    let integ = Integrator::new(config);
    let mut u = to_values(&state.fields);
    for _ in 0..steps {
        integ.strang_step(&mut u, dt)?;
    }
    Ok(SimulationState {
        fields: to_fields(config.grid, u)?,
        t: state.t + dt * steps as f64,
        dt,
        accepted: state.accepted + steps as u64,
        rejected: state.rejected,
    })
}

/// Entropy multipliers and reference equilibrium used by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub mu: Vec<f64>,
    pub equilibrium: Option<Vec<f64>>,
}

/// Uses the configured values when present. Otherwise, for mass-action
/// kinetics, solves for the complex-balanced equilibrium in the class of
/// the initial mean concentrations. Depends only on the config, so a
/// resumed run sees the same reference.
pub fn resolve_reference(config: &SimulationConfig) -> Result<Reference> {
    let n = config.n_species();
    let mut equilibrium = config.reference.clone();
    if equilibrium.is_none() {
        if let Kinetics::MassAction(net) = &config.kinetics {
            let init = init_state(config)?;
            let vol = config.grid.volume();
            let means: Vec<f64> = init.fields.iter().map(|f| grid::integrate(f) / vol).collect();
            let laws = law_basis(net);
            let t = totals(&laws, &means);
            if let Ok(rep) = find_positive_equilibrium_with(net, &laws, &t) {
                if rep.converged {
                    equilibrium = Some(rep.equilibrium);
                }
            }
        }
    }
    let mu = match (&config.mu, &equilibrium) {
        (Some(m), _) => m.clone(),
        (None, Some(e)) => e.iter().map(|x| -x.ln()).collect(),
        (None, None) => vec![0.0; n],
    };
    Ok(Reference { mu, equilibrium })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunControl {
    /// Stop at the first accepted step with `t >= halt_at` (no clipping).
    pub halt_at: Option<f64>,
    /// Record the starting state; false when resuming.
    pub record_initial: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub accepted: u64,
    pub rejected: u64,
    /// Largest `E(t+dt) - E(t)` over accepted steps.
    pub max_entropy_jump: f64,
    /// Largest `(E(t+dt) - E(t)) / (1 + |E(t)|)` over accepted steps.
    pub max_relative_entropy_jump: f64,
    /// Conserved totals `m · ∫u` at the start of this run.
    pub initial_totals: Vec<f64>,
    /// Largest relative drift of any conserved total over accepted steps.
    pub max_conservation_drift: f64,
    /// Mass removed by clamping values in `[-delta_pos, 0)`.
    pub clamped_mass: f64,
    pub initial_mass: f64,
}

#[derive(Debug)]
pub enum Termination {
    Completed,
    Halted,
    Failed(Error),
}

#[derive(Debug)]
pub struct RunOutcome {
    pub state: SimulationState,
    pub series: Series,
    pub stats: RunStats,
    pub reference: Reference,
    pub termination: Termination,
}

impl RunOutcome {
    /// Turns an aborted run into its error.
    pub fn into_result(self) -> Result<Self> {
        match self.termination {
            Termination::Failed(e) => Err(e),
            _ => Ok(self),
        }
    }
}

pub fn run(config: &SimulationConfig) -> Result<RunOutcome> {
    let state = init_state(config)?;
    run_from(
        config,
        state,
        RunControl {
            halt_at: None,
            record_initial: true,
        },
    )
}

/// Smallest multiple of `cadence` strictly after `t`.
fn next_mark(t: f64, cadence: f64) -> f64 {
    let mut k = (t / cadence).floor() + 1.0;
    while k * cadence <= t {
        k += 1.0;
    }
    k * cadence
}

fn masses(grid: &Grid, u: &[Vec<f64>]) -> Vec<f64> {
    let vol = grid.cell_volume();
    u.iter().map(|ui| vol * ui.iter().sum::<f64>()).collect()
}

fn entropy_of(grid: &Grid, u: &[Vec<f64>], mu: &[f64]) -> f64 {
    let vol = grid.cell_volume();
    u.iter()
        .zip(mu)
        .map(|(ui, m)| {
            vol * ui
                .iter()
                .map(|&v| if v == 0.0 { 0.0 } else { v * v.max(grid::LOG_FLOOR).ln() } + (m - 1.0) * v)
                .sum::<f64>()
        })
        .sum()
}

/// Adaptive Strang integration from `state` to `config.t_end`.
pub fn run_from(config: &SimulationConfig, mut state: SimulationState, control: RunControl) -> Result<RunOutcome> {
    config.validate()?;
    if state.fields.len() != config.n_species() {
        return Err(Error::DimensionMismatch {
            expected: config.n_species(),
            got: state.fields.len(),
        });
    }
    if state.grid() != config.grid {
        return Err(Error::InvalidArgument("state grid differs from the configured grid".into()));
    }
    let reference = resolve_reference(config)?;
    let mu = reference.mu.clone();
    let eq = reference.equilibrium.as_deref();
    let grid = config.grid;
    let ctl = &config.control;
    let integ = Integrator::new(config);
    let laws: Vec<Vec<f64>> = config.kinetics.network().map(law_basis).unwrap_or_default();

    let mut u = to_values(&state.fields);
    let mut series = Series::new(config.species_names());
    let record = |series: &mut Series, u: &Values, t: f64, dt: f64| -> Result<()> {
        let fields = to_fields(grid, u.clone())?;
        series
            .records
            .push(Record::compute(&fields, &mu, &config.diffusion, eq, t, dt)?);
        if config.retain_snapshots {
            series.snapshots.push(fields);
        }
        Ok(())
    };

    let m0 = masses(&grid, &u);
    let initial_totals = totals(&laws, &m0);
    let mut stats = RunStats {
        accepted: 0,
        rejected: 0,
        max_entropy_jump: f64::NEG_INFINITY,
        max_relative_entropy_jump: f64::NEG_INFINITY,
        initial_totals: initial_totals.clone(),
        max_conservation_drift: 0.0,
        clamped_mass: 0.0,
        initial_mass: m0.iter().sum(),
    };
    if control.record_initial && config.t_end > state.t {
        record(&mut series, &u, state.t, 0.0)?;
    }
    let mut entropy = entropy_of(&grid, &u, &mu);
    let mut termination = Termination::Completed;

    while state.t < config.t_end {
        if control.halt_at.is_some_and(|h| state.t >= h) {
            termination = Termination::Halted;
            break;
        }
        let remaining = config.t_end - state.t;
        let last = state.dt >= remaining * (1.0 - 1e-12);
        let dt = if last { remaining } else { state.dt };
        let trial = match integ.step(&u, dt) {
            Ok(t) => t,
            Err(e) => {
                termination = Termination::Failed(e);
                break;
            }
        };
        if trial.error.is_nan() {
            termination = Termination::Failed(Error::NonFiniteState { time: state.t });
            break;
        }
        if trial.error <= ctl.tol && trial.min_value >= -ctl.delta_pos {
            let mut next = trial.candidate;
            for v in next.iter_mut().flatten() {
                if *v < 0.0 {
                    stats.clamped_mass += -*v * grid.cell_volume();
                    *v = 0.0;
                }
            }
            let t_old = state.t;
            state.t = if last { config.t_end } else { state.t + dt };
            let factor = if trial.error == 0.0 {
                ctl.max_growth
            } else {
                (ctl.safety * (ctl.tol / trial.error).cbrt()).clamp(0.5, ctl.max_growth)
            };
            let base = if last { state.dt.max(dt) } else { dt };
            state.dt = (base * factor).min(ctl.dt_max);
            state.accepted += 1;
            stats.accepted += 1;
            u = next;

            let e_new = entropy_of(&grid, &u, &mu);
            stats.max_entropy_jump = stats.max_entropy_jump.max(e_new - entropy);
            stats.max_relative_entropy_jump = stats
                .max_relative_entropy_jump
                .max((e_new - entropy) / (1.0 + entropy.abs()));
            entropy = e_new;
            let now = totals(&laws, &masses(&grid, &u));
            for (a, b) in now.iter().zip(&initial_totals) {
                let drift = if *b != 0.0 { ((a - b) / b).abs() } else { (a - b).abs() };
                stats.max_conservation_drift = stats.max_conservation_drift.max(drift);
            }
            if last || state.t >= next_mark(t_old, config.cadence) * (1.0 - 1e-12) {
                record(&mut series, &u, state.t, dt)?;
            }
        } else {
            state.rejected += 1;
            stats.rejected += 1;
            state.dt = 0.5 * dt;
            if state.dt < ctl.dt_min {
                termination = Termination::Failed(Error::StepUnderflow {
                    dt: state.dt,
                    time: state.t,
                });
                break;
            }
        }
    }
    state.fields = to_fields(grid, u)?;
    Ok(RunOutcome {
        state,
        series,
        stats,
        reference,
        termination,
    })
}
