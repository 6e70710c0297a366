use std::io::Write;
use std::path::{Path, PathBuf};

use entroreact::analysis::{
    detect_boundary_equilibria, entropy_multipliers, find_positive_equilibrium, law_basis, law_names, none_in_class,
    totals, validate_conditions, ConditionReport, SamplingPlan, Verdict,
};
use entroreact::crn::{parse_network, ReactionNetwork};
use entroreact::diagnostics::{
    dissipation_balance, entropy_monotonicity_report, fit_exponential_decay, fit_polynomial_growth,
    spacetime_norm, sup_norm_at_horizons, Series,
};
use entroreact::grid::{fmt_num, write_snapshot_csv, Grid};
use entroreact::inequality::{gn_sweep, series_interpolation, BandLimited};
use entroreact::solver::{
    init_state, load_checkpoint, run_from, save_checkpoint, RunControl, Termination,
};

use crate::run_config::RunConfigFile;
use crate::{parse_list, read_file, tuple, tuple17, write_file, CliError};

/// Relative per-record entropy increase tolerated before the verdict fails.
const ENTROPY_JUMP_TOL: f64 = 1e-8;
/// Relative drift of a conserved total tolerated over a run.
const CONSERVATION_TOL: f64 = 1e-8;

type Out<'a> = &'a mut Vec<u8>;

fn load_network(path: &Path) -> Result<ReactionNetwork, CliError> {
    parse_network(&read_file(path)?).map_err(CliError::core(path.display().to_string()))
}

fn list_arg(flag: &str, text: &str) -> Result<Vec<f64>, CliError> {
    parse_list(text).map_err(|e| CliError::Usage(format!("{flag}: {e}")))
}

fn law_text(law: &[f64], species: &[String]) -> String {
    let terms: Vec<String> = law
        .iter()
        .zip(species)
        .filter(|(c, _)| **c != 0.0)
        .map(|(c, s)| if *c == 1.0 { s.clone() } else { format!("{c} {s}") })
        .collect();
    terms.join(" + ")
}

fn verdict_line(v: &Verdict, species: &[String]) -> String {
    match v {
        Verdict::NotViolated { samples } => format!("not violated on {samples} samples"),
        Verdict::Violated { witness, species: i, value } => match i {
            Some(i) => format!(
                "violated: f_{} = {} < 0 at u = {}",
                species[*i],
                fmt_num(*value),
                tuple17(witness)
            ),
            None => format!(
                "violated: Σ f_i (μ_i + log u_i) = {} > 0 at u = {}",
                fmt_num(*value),
                tuple17(witness)
            ),
        },
    }
}

fn growth_line(rep: &ConditionReport) -> String {
    let g = &rep.growth;
    let relation = if g.admissible { "within" } else { "exceeds" };
    format!("μ̂={} {relation} bound {} for d={}", g.degree, g.bound, g.dimension)
}

/// Prints the three condition verdicts and returns the failing items.
fn write_conditions(out: Out, rep: &ConditionReport, species: &[String]) -> Result<Vec<String>, CliError> {
    let p = verdict_line(&rep.quasi_positivity, species);
    let e = verdict_line(&rep.entropy_inequality, species);
    let g = growth_line(rep);
    writeln!(out, "  quasi-positivity (P): {p}")?;
    writeln!(out, "  entropy inequality (E): {e}")?;
    writeln!(out, "  growth (G): {g}")?;
    let mut failed = Vec::new();
    if !rep.quasi_positivity.passed() {
        failed.push(format!("quasi-positivity (P) {p}"));
    }
    if !rep.entropy_inequality.passed() {
        failed.push(format!("entropy inequality (E) {e}"));
    }
    if !rep.growth.admissible {
        failed.push(format!("growth (G): {g}"));
    }
    Ok(failed)
}

fn finish(out: Out, failed: Vec<String>) -> Result<(), CliError> {
    if failed.is_empty() {
        writeln!(out, "verdict: pass")?;
        Ok(())
    } else {
        writeln!(out, "verdict: fail")?;
        Err(CliError::Verdict(failed))
    }
}

impl From<std::io::Error> for CliError {
    fn from(source: std::io::Error) -> Self {
        CliError::Io {
            path: PathBuf::from("<output>"),
            source,
        }
    }
}

pub fn analyze(
    path: &Path,
    totals_arg: Option<&str>,
    plan: &SamplingPlan,
    dim: usize,
    output: Option<&Path>,
    out: Out,
) -> Result<(), CliError> {
    let net = load_network(path)?;
    let species = net.species().to_vec();
    let laws = law_basis(&net);
    let names = law_names(&net);
    let class = totals_arg.map(|t| list_arg("--totals", t)).transpose()?;
    if let Some(t) = &class {
        if t.len() != laws.len() {
            return Err(CliError::Usage(format!(
                "--totals: the network has {} conservation laws, got {} totals",
                laws.len(),
                t.len()
            )));
        }
    }
    let mut failed = Vec::new();

    writeln!(out, "network: {}", path.display())?;
    writeln!(out, "species: {}", species.join(", "))?;
    writeln!(out, "reactions: {}", net.n_reactions())?;
    writeln!(out, "conservation laws: {}", laws.len())?;
    for (name, law) in names.iter().zip(&laws) {
        writeln!(out, "  {name} = {}", law_text(law, &species))?;
    }

    let mut mu = vec![0.0; species.len()];
    let mut equilibrium = None;
    writeln!(out, "equilibrium:")?;
    match (&class, laws.is_empty()) {
        (None, false) => writeln!(out, "  skipped: pass --totals to select a compatibility class")?,
        _ => {
            let t = class.clone().unwrap_or_default();
            writeln!(out, "  class: {}", tuple(&t))?;
            let rep = find_positive_equilibrium(&net, &t).map_err(CliError::core("equilibrium"))?;
            writeln!(out, "  u_inf = {}", tuple17(&rep.equilibrium))?;
            writeln!(out, "  newton iterations: {}", rep.newton_iterations)?;
            writeln!(out, "  max complex-balance residual: {}", fmt_num(rep.max_cb_residual()))?;
            if rep.converged {
                mu = entropy_multipliers(&rep);
                equilibrium = Some(rep.equilibrium);
            } else {
                writeln!(out, "  not converged")?;
                failed.push(format!("no positive equilibrium found in class {}", tuple(&t)));
            }
        }
    }

    writeln!(out, "boundary equilibria:")?;
    let found = detect_boundary_equilibria(&net, class.as_deref()).map_err(CliError::core("boundary equilibria"))?;
    for b in &found {
        let membership = match b.in_class {
            Some(true) => ", meets the class",
            Some(false) => ", outside the class",
            None => "",
        };
        writeln!(out, "  {}{membership}", b.describe(&species))?;
    }
    match &class {
        Some(t) if none_in_class(&found) => writeln!(out, "  no boundary equilibria in class {}", tuple(t))?,
        Some(t) => {
            let n = found.iter().filter(|b| b.in_class == Some(true)).count();
            writeln!(out, "  {n} boundary equilibria in class {}", tuple(t))?;
            failed.push(format!("boundary equilibria in class {}", tuple(t)));
        }
        None if found.is_empty() => writeln!(out, "  none")?,
        None => {}
    }

    let source = if equilibrium.is_some() { "−log u_inf" } else { "0" };
    writeln!(
        out,
        "conditions (μ = {source}, d = {dim}, {} samples, seed {}):",
        plan.samples, plan.seed
    )?;
    let rep = validate_conditions(&net, &mu, dim, plan).map_err(CliError::core("conditions"))?;
    failed.extend(write_conditions(out, &rep, &species)?);

    if let (Some(path), Some(eq)) = (output, &equilibrium) {
        let mut csv = String::from("species,u_inf,mu\n");
        for ((s, u), m) in species.iter().zip(eq).zip(&mu) {
            csv += &format!("{s},{},{}\n", fmt_num(*u), fmt_num(*m));
        }
        write_file(path, csv.as_bytes())?;
    }
    finish(out, failed)
}

pub fn verify_conditions(
    path: &Path,
    mu_arg: &str,
    totals_arg: Option<&str>,
    plan: &SamplingPlan,
    dim: usize,
    out: Out,
) -> Result<(), CliError> {
    let net = load_network(path)?;
    let species = net.species().to_vec();
    let n = species.len();
    let mu = match mu_arg.trim() {
        "auto" => {
            let laws = law_basis(&net);
            let t = match totals_arg {
                Some(t) => list_arg("--totals", t)?,
                None => totals(&laws, &vec![1.0; n]),
            };
            let rep = find_positive_equilibrium(&net, &t).map_err(CliError::core("--mu auto"))?;
            if !rep.converged {
                return Err(CliError::Usage(format!(
                    "--mu auto: no positive equilibrium in class {}; pass --mu explicitly",
                    tuple(&t)
                )));
            }
            entropy_multipliers(&rep)
        }
        "0" => vec![0.0; n],
        list => {
            let mu = list_arg("--mu", list)?;
            if mu.len() != n {
                return Err(CliError::Usage(format!("--mu: expected {n} values, got {}", mu.len())));
            }
            mu
        }
    };
    writeln!(out, "network: {}", path.display())?;
    writeln!(out, "μ = {}", tuple17(&mu))?;
    writeln!(
        out,
        "conditions (d = {dim}, {} samples in (0,{}]^{n}, seed {}):",
        plan.samples, plan.u_max, plan.seed
    )?;
    let rep = validate_conditions(&net, &mu, dim, plan).map_err(|e| match e {
        entroreact::Error::InvalidArgument(m) => CliError::Usage(m),
        other => CliError::Core {
            context: "conditions".into(),
            source: other,
        },
    })?;
    let failed = write_conditions(out, &rep, &species)?;
    finish(out, failed)
}

pub struct GnOptions {
    pub dim: usize,
    pub samples: usize,
    pub modes: usize,
    pub amp: f64,
    pub threshold: f64,
    pub seed: u64,
    pub cells: Option<usize>,
}

pub fn verify_gn(opts: &GnOptions, output: Option<&Path>, out: Out, err: Out) -> Result<(), CliError> {
    let grid = match opts.dim {
        1 => Grid::interval(1.0, opts.cells.unwrap_or(256)),
        2 => {
            let c = opts.cells.unwrap_or(64);
            Grid::rectangle(1.0, 1.0, c, c)
        }
        d => return Err(CliError::Usage(format!("--dim must be 1 or 2, got {d}"))),
    }
    .map_err(|e| CliError::Usage(format!("--cells: {e}")))?;
    if !(opts.amp > 0.0 && opts.amp.is_finite()) || opts.modes == 0 {
        return Err(CliError::Usage("--amp must be positive and --modes at least 1".into()));
    }
    let family = BandLimited {
        modes: opts.modes,
        amp: opts.amp,
    };
    let sweep = gn_sweep(grid, family, opts.samples, opts.threshold, opts.seed).map_err(|e| match e {
        entroreact::Error::InvalidArgument(m) => CliError::Usage(format!("--threshold: {m}")),
        other => CliError::Core {
            context: "verify-gn".into(),
            source: other,
        },
    })?;

    let mut csv = String::from("sample,inequality,lhs,rhs,slack\n");
    for (k, rep) in sweep.reports.iter().enumerate() {
        for e in &rep.entries {
            csv += &format!("{k},{},{},{},{}\n", e.name, fmt_num(e.lhs), fmt_num(e.rhs), fmt_num(e.slack));
        }
    }
    let summary: &mut Vec<u8> = match output {
        Some(path) => {
            write_file(path, csv.as_bytes())?;
            out
        }
        None => {
            out.extend_from_slice(csv.as_bytes());
            err
        }
    };
    writeln!(
        summary,
        "{} fields, dimension {}, {} cells, N = {}, seed {}",
        opts.samples,
        opts.dim,
        grid.n_cells(),
        opts.threshold,
        opts.seed
    )?;
    writeln!(summary, "Ĉ = {}", fmt_num(sweep.c4_hat))?;
    let mut failed = Vec::new();
    let names: Vec<&str> = sweep
        .reports
        .first()
        .map(|r| r.entries.iter().map(|e| e.name).collect())
        .unwrap_or_default();
    for name in names {
        let fails = sweep.failures(name);
        writeln!(
            summary,
            "{name}: {fails} failures, min relative slack {}",
            fmt_num(sweep.min_slack(name))
        )?;
        if fails > 0 {
            failed.push(format!("{name} fails on {fails} of {} fields", opts.samples));
        }
    }
    finish(summary, failed)
}

fn append_or_create(path: &Path, series: &Series, append: bool) -> Result<(), CliError> {
    let mut bytes = Vec::new();
    series.write_csv(&mut bytes).map_err(CliError::core("diagnostics"))?;
    if append && path.exists() {
        let existing = read_file(path)?;
        let header = series.header();
        if existing.lines().next() != Some(header.as_str()) {
            return Err(CliError::Config(format!(
                "{}: existing diagnostics have a different header; cannot append",
                path.display()
            )));
        }
        let body = &bytes[header.len() + 1..];
        let mut f = std::fs::OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
        f.write_all(body).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    } else {
        write_file(path, &bytes)
    }
}

pub fn simulate(path: &Path, halt_at: Option<f64>, resume: Option<&Path>, out: Out) -> Result<(), CliError> {
    if !path.exists() {
        return Err(CliError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "not found"),
        });
    }
    let rc = RunConfigFile::load(path)?;
    let cfg = rc.simulation()?;
    let state = match resume {
        Some(ckpt) => {
            let bytes = std::fs::read(ckpt).map_err(|source| CliError::Io {
                path: ckpt.to_path_buf(),
                source,
            })?;
            load_checkpoint(&bytes).map_err(CliError::core(ckpt.display().to_string()))?
        }
        None => init_state(&cfg).map_err(CliError::core("initial state"))?,
    };
    let control = RunControl {
        halt_at,
        record_initial: resume.is_none(),
    };
    let outcome = run_from(&cfg, state, control).map_err(CliError::core("simulate"))?;

    append_or_create(&rc.outputs.diagnostics, &outcome.series, resume.is_some())?;
    let mut snap = Vec::new();
    write_snapshot_csv(&mut snap, &outcome.state.fields, &cfg.species_names()).map_err(CliError::core("snapshot"))?;
    write_file(&rc.outputs.snapshot, &snap)?;
    let halted = matches!(outcome.termination, Termination::Halted);
    let checkpoint = match (&rc.outputs.checkpoint, halted) {
        (Some(p), _) => Some(p.clone()),
        (None, true) => Some(rc.path.with_extension("ckpt")),
        (None, false) => None,
    };
    if let Some(p) = &checkpoint {
        write_file(p, &save_checkpoint(&outcome.state))?;
    }

    let s = &outcome.stats;
    let st = &outcome.state;
    writeln!(out, "config: {}", rc.path.display())?;
    writeln!(out, "network: {}", rc.network_path.display())?;
    let status = match &outcome.termination {
        Termination::Completed => "completed",
        Termination::Halted => "halted",
        Termination::Failed(_) => "failed",
    };
    writeln!(out, "status: {status} at t = {}", fmt_num(st.t))?;
    writeln!(out, "steps: {} accepted, {} rejected", s.accepted, s.rejected)?;
    writeln!(out, "records: {}", outcome.series.len())?;
    writeln!(out, "diagnostics: {}", rc.outputs.diagnostics.display())?;
    writeln!(out, "snapshot: {}", rc.outputs.snapshot.display())?;
    if let Some(p) = &checkpoint {
        writeln!(out, "checkpoint: {}", p.display())?;
    }
    match &outcome.reference.equilibrium {
        Some(eq) => writeln!(out, "reference u_inf = {}", tuple17(eq))?,
        None => writeln!(out, "reference: none (dist_inf columns are NaN)")?,
    }
    if let Some(last) = outcome.series.records.last() {
        writeln!(out, "final E = {}", fmt_num(last.entropy))?;
        if last.total_distance().is_finite() {
            writeln!(out, "final Σ‖u_i − u_i,inf‖_∞ = {}", fmt_num(last.total_distance()))?;
        }
    }
    let mut failed = Vec::new();
    if s.accepted > 0 {
        writeln!(
            out,
            "max entropy increase per step: {} (relative {})",
            fmt_num(s.max_entropy_jump),
            fmt_num(s.max_relative_entropy_jump)
        )?;
        if s.max_relative_entropy_jump > ENTROPY_JUMP_TOL {
            failed.push(format!(
                "entropy increased by {} relative in one step",
                fmt_num(s.max_relative_entropy_jump)
            ));
        }
        writeln!(out, "max conservation drift: {}", fmt_num(s.max_conservation_drift))?;
        if s.max_conservation_drift > CONSERVATION_TOL {
            failed.push(format!("conserved totals drifted by {}", fmt_num(s.max_conservation_drift)));
        }
        if s.clamped_mass > 0.0 {
            writeln!(out, "mass clamped at zero: {}", fmt_num(s.clamped_mass))?;
        }
    }
    if rc.snapshots && outcome.series.len() >= 2 {
        let l4 = spacetime_norm(&outcome.series, 4.0).map_err(CliError::core("space-time norm"))?;
        writeln!(out, "‖u_i‖_L4(Q) over this run = {}", tuple17(&l4))?;
        let interp = series_interpolation(&outcome.series).map_err(CliError::core("interpolation"))?;
        for (name, r) in cfg.species_names().iter().zip(&interp) {
            writeln!(
                out,
                "interpolation {name}: lhs {} rhs {} slack {}",
                fmt_num(r.lhs),
                fmt_num(r.rhs),
                fmt_num(r.slack)
            )?;
            if !r.pass {
                failed.push(format!("space-time interpolation fails for {name}"));
            }
        }
    }
    if let Termination::Failed(e) = outcome.termination {
        return Err(CliError::Core {
            context: format!("simulation stopped at t = {}", st.t),
            source: e,
        });
    }
    finish(out, failed)
}

pub struct ReportOptions {
    pub fit_decay: bool,
    pub window: Option<String>,
    pub fit_growth: Option<String>,
    pub min_r2: f64,
    pub max_degree: Option<f64>,
}

pub fn report(path: &Path, opts: &ReportOptions, out: Out) -> Result<(), CliError> {
    let text = read_file(path)?;
    let series = Series::read_csv(text.as_bytes()).map_err(CliError::core(path.display().to_string()))?;
    let times = series.times();
    writeln!(out, "diagnostics: {}", path.display())?;
    writeln!(out, "species: {}", series.species.join(", "))?;
    writeln!(out, "records: {}", series.len())?;
    if let (Some(a), Some(b)) = (times.first(), times.last()) {
        writeln!(out, "time range: {} to {}", fmt_num(*a), fmt_num(*b))?;
    }
    let mut failed = Vec::new();
    if series.len() >= 2 {
        let m = entropy_monotonicity_report(&series).map_err(CliError::core("entropy"))?;
        writeln!(
            out,
            "entropy max jump: {} at t = {} (relative {})",
            fmt_num(m.max_jump),
            fmt_num(m.at_time),
            fmt_num(m.max_relative_jump)
        )?;
        if m.max_relative_jump > ENTROPY_JUMP_TOL {
            failed.push(format!("entropy increases by {} at t = {}", fmt_num(m.max_jump), fmt_num(m.at_time)));
        }
        let d = dissipation_balance(&series).map_err(CliError::core("dissipation"))?;
        writeln!(
            out,
            "dissipation balance: max residual {}, envelope C = {}",
            fmt_num(d.max_residual),
            fmt_num(d.envelope)
        )?;
    }
    if opts.fit_decay {
        let window = opts
            .window
            .as_deref()
            .map(|w| {
                let v = list_arg("--window", w)?;
                match v[..] {
                    [a, b] if a < b => Ok((a, b)),
                    _ => Err(CliError::Usage("--window: expected `t0,t1` with t0 < t1".into())),
                }
            })
            .transpose()?;
        let dist: Vec<f64> = series.records.iter().map(|r| r.total_distance()).collect();
        if dist.iter().all(|d| d.is_nan()) {
            return Err(CliError::Config(
                "the diagnostics carry no reference equilibrium (dist_inf columns are NaN)".into(),
            ));
        }
        let fit = fit_exponential_decay(&times, &dist, window).map_err(CliError::core("decay fit"))?;
        writeln!(
            out,
            "decay fit: C = {}, λ = {}, R² = {}, points = {}",
            fmt_num(fit.amplitude),
            fmt_num(fit.rate),
            fmt_num(fit.r2),
            fit.points
        )?;
        if !(fit.rate > 0.0) {
            failed.push(format!("decay rate λ = {} is not positive", fmt_num(fit.rate)));
        }
        if !(fit.r2 >= opts.min_r2) {
            failed.push(format!("decay fit R² = {} below {}", fmt_num(fit.r2), opts.min_r2));
        }
    }
    if let Some(h) = &opts.fit_growth {
        let horizons = list_arg("--fit-growth", h)?;
        let last = times.last().copied().unwrap_or(0.0);
        if let Some(t) = horizons.iter().find(|t| **t > last * (1.0 + 1e-12)) {
            return Err(CliError::Usage(format!(
                "--fit-growth: horizon {t} lies beyond the last record at t = {last}"
            )));
        }
        let sup = sup_norm_at_horizons(&series, &horizons);
        let fit = fit_polynomial_growth(&horizons, &sup).map_err(|e| match e {
            entroreact::Error::TooFewPoints { .. } | entroreact::Error::InvalidArgument(_) => {
                CliError::Usage(format!("--fit-growth: {e}"))
            }
            other => CliError::Core {
                context: "growth fit".into(),
                source: other,
            },
        })?;
        writeln!(out, "sup norms at horizons {}: {}", tuple(&horizons), tuple17(&sup))?;
        writeln!(
            out,
            "growth fit: degree = {}, constant = {}, R² = {}",
            fmt_num(fit.degree),
            fmt_num(fit.constant),
            fmt_num(fit.r2)
        )?;
        if let Some(max) = opts.max_degree {
            if !(fit.degree < max) {
                failed.push(format!("growth degree {} is not below {max}", fmt_num(fit.degree)));
            }
        }
    }
    finish(out, failed)
}
