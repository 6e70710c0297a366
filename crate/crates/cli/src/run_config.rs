//! The `simulate` configuration file. Relative paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use entroreact::analysis::find_positive_equilibrium;
use entroreact::crn::{parse_network, ReactionNetwork};
use entroreact::grid::Grid;
use entroreact::solver::{DiffusionScheme, Profile, SimulationConfig, StepControl};

use crate::ini::Ini;
use crate::{parse_list, read_file, CliError};

#[derive(Debug, Clone)]
pub struct Outputs {
    pub diagnostics: PathBuf,
    pub snapshot: PathBuf,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunConfigFile {
    pub path: PathBuf,
    pub network_path: PathBuf,
    pub network: ReactionNetwork,
    pub grid: Grid,
    pub initial: Vec<Profile>,
    pub t_end: f64,
    pub control: StepControl,
    pub scheme: DiffusionScheme,
    pub cadence: f64,
    pub totals: Option<Vec<f64>>,
    pub equilibrium: Option<Vec<f64>>,
    pub mu: Option<Vec<f64>>,
    pub snapshots: bool,
    pub outputs: Outputs,
    pub seed: u64,
}

const SECTIONS: [&str; 7] = ["network", "grid", "initial", "time", "diagnostics", "output", "run"];

fn number(ini: &Ini, section: &str, key: &str) -> Result<Option<f64>, CliError> {
    match ini.get(section, key) {
        None => Ok(None),
        Some(v) => v
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(Some)
            .ok_or_else(|| CliError::Config(format!("[{section}] {key}: expected a finite number, got `{v}`"))),
    }
}

fn count(ini: &Ini, section: &str, key: &str) -> Result<Option<usize>, CliError> {
    match ini.get(section, key) {
        None => Ok(None),
        Some(v) => v
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Config(format!("[{section}] {key}: expected a nonnegative integer, got `{v}`"))),
    }
}

fn list(ini: &Ini, section: &str, key: &str) -> Result<Option<Vec<f64>>, CliError> {
    ini.get(section, key)
        .map(|v| parse_list(v).map_err(|e| CliError::Config(format!("[{section}] {key}: {e}"))))
        .transpose()
}

impl RunConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read_file(path)?;
        let ini = Ini::parse(&text, &path.display().to_string())?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_ini(&ini, path, &base)
    }

    pub fn from_ini(ini: &Ini, path: &Path, base: &Path) -> Result<Self, CliError> {
        if let Some(s) = ini.sections().find(|s| !SECTIONS.contains(s)) {
            return Err(CliError::Config(format!(
                "unknown section [{s}] (expected one of: {})",
                SECTIONS.join(", ")
            )));
        }
        ini.check_keys("network", &["file"])?;
        ini.check_keys("grid", &["dim", "L", "n", "Lx", "Ly", "nx", "ny"])?;
        ini.check_keys("time", &["t_end", "dt_init", "dt_min", "dt_max", "tol", "scheme"])?;
        ini.check_keys("diagnostics", &["cadence", "totals", "equilibrium", "mu", "snapshots"])?;
        ini.check_keys("output", &["diagnostics", "snapshot", "checkpoint"])?;
        ini.check_keys("run", &["seed"])?;

        let resolve = |p: &str| -> PathBuf {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let network_path = resolve(
            ini.get("network", "file")
                .ok_or_else(|| CliError::Config("[network] file is required".into()))?,
        );
        if !network_path.exists() {
            return Err(CliError::Io {
                path: network_path.clone(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "referenced network file not found"),
            });
        }
        let network = parse_network(&read_file(&network_path)?).map_err(|e| CliError::Core {
            context: network_path.display().to_string(),
            source: e,
        })?;

        let grid = Self::grid(ini)?;

        let species = network.species();
        let mut initial = vec![None; species.len()];
        for (name, spec) in ini.entries("initial") {
            let i = network
                .species_index(name)
                .ok_or_else(|| CliError::Config(format!("[initial] unknown species `{name}`")))?;
            initial[i] = Some(
                Profile::parse(spec).map_err(|e| CliError::Config(format!("[initial] {name}: {e}")))?,
            );
        }
        let initial = initial
            .into_iter()
            .zip(species)
            .map(|(p, s)| p.ok_or_else(|| CliError::Config(format!("[initial] missing profile for species `{s}`"))))
            .collect::<Result<Vec<_>, _>>()?;

        let t_end = number(ini, "time", "t_end")?.ok_or_else(|| CliError::Config("[time] t_end is required".into()))?;
        let mut control = StepControl::default();
        for (key, slot) in [
            ("dt_init", &mut control.dt_init),
            ("dt_min", &mut control.dt_min),
            ("dt_max", &mut control.dt_max),
            ("tol", &mut control.tol),
        ] {
            if let Some(v) = number(ini, "time", key)? {
                *slot = v;
            }
        }
        let scheme = match ini.get("time", "scheme") {
            None => DiffusionScheme::default(),
            Some(s) => DiffusionScheme::parse(s).map_err(|e| CliError::Config(format!("[time] scheme: {e}")))?,
        };

        let cadence = number(ini, "diagnostics", "cadence")?.unwrap_or(0.01);
        let totals = list(ini, "diagnostics", "totals")?;
        let equilibrium = list(ini, "diagnostics", "equilibrium")?;
        if totals.is_some() && equilibrium.is_some() {
            return Err(CliError::Config(
                "[diagnostics] give either totals or equilibrium, not both".into(),
            ));
        }
        let mu = list(ini, "diagnostics", "mu")?;
        let snapshots = match ini.get("diagnostics", "snapshots") {
            None | Some("true") => true,
            Some("false") => false,
            Some(v) => return Err(CliError::Config(format!("[diagnostics] snapshots: expected true or false, got `{v}`"))),
        };

        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_string();
        let outputs = Outputs {
            diagnostics: resolve(ini.get("output", "diagnostics").unwrap_or(&format!("{stem}_diagnostics.csv"))),
            snapshot: resolve(ini.get("output", "snapshot").unwrap_or(&format!("{stem}_final.csv"))),
            checkpoint: ini.get("output", "checkpoint").map(resolve),
        };
        let seed = match ini.get("run", "seed") {
            None => 0,
            Some(v) => v
                .parse::<u64>()
                .map_err(|_| CliError::Config(format!("[run] seed: expected an unsigned integer, got `{v}`")))?,
        };

        Ok(Self {
            path: path.to_path_buf(),
            network_path,
            network,
            grid,
            initial,
            t_end,
            control,
            scheme,
            cadence,
            totals,
            equilibrium,
            mu,
            snapshots,
            outputs,
            seed,
        })
    }

    fn grid(ini: &Ini) -> Result<Grid, CliError> {
        let dim = count(ini, "grid", "dim")?.unwrap_or(1);
        let l = number(ini, "grid", "L")?;
        let n = count(ini, "grid", "n")?;
        let bad = |e: entroreact::Error| CliError::Config(format!("[grid]: {e}"));
        match dim {
            1 => {
                if ["Lx", "Ly", "nx", "ny"].iter().any(|k| ini.get("grid", k).is_some()) {
                    return Err(CliError::Config("[grid] Lx, Ly, nx, ny apply to dim = 2 only".into()));
                }
                Grid::interval(l.unwrap_or(1.0), n.ok_or_else(|| CliError::Config("[grid] n is required".into()))?)
                    .map_err(bad)
            }
            2 => {
                let lx = number(ini, "grid", "Lx")?.or(l).unwrap_or(1.0);
                let ly = number(ini, "grid", "Ly")?.or(l).unwrap_or(1.0);
                let nx = count(ini, "grid", "nx")?.or(n);
                let ny = count(ini, "grid", "ny")?.or(n);
                match (nx, ny) {
                    (Some(nx), Some(ny)) => Grid::rectangle(lx, ly, nx, ny).map_err(bad),
                    _ => Err(CliError::Config("[grid] nx and ny (or n) are required".into())),
                }
            }
            d => Err(CliError::Config(format!("[grid] dim must be 1 or 2, got {d}"))),
        }
    }

    /// The solver configuration. An explicit equilibrium is used as given;
    /// totals select the complex-balanced equilibrium of their class.
    pub fn simulation(&self) -> Result<SimulationConfig, CliError> {
        let mut cfg = SimulationConfig::from_network(self.network.clone(), self.grid, self.initial.clone(), self.t_end);
        cfg.control = self.control.clone();
        cfg.scheme = self.scheme;
        cfg.cadence = self.cadence;
        cfg.seed = self.seed;
        cfg.mu = self.mu.clone();
        cfg.retain_snapshots = self.snapshots;
        cfg.reference = match (&self.equilibrium, &self.totals) {
            (Some(e), _) => Some(e.clone()),
            (None, Some(t)) => {
                let rep = find_positive_equilibrium(&self.network, t).map_err(|e| CliError::Config(format!(
                    "[diagnostics] totals: {e}"
                )))?;
                if !rep.converged {
                    return Err(CliError::Config(
                        "[diagnostics] totals: no positive equilibrium found in this class".into(),
                    ));
                }
                Some(rep.equilibrium)
            }
            (None, None) => None,
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}
