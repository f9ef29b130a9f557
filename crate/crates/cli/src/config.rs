//! Command-line flags, the key = value config file, and the resolved run
//! configuration. Flags win over file keys, file keys over defaults.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use qbattery::{CircuitParams, QuadratureSpec, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Energetics of the battery on a time grid.
    Trace,
    /// Per-mode coupling and reservoir energies (long form).
    Spectral,
    /// Long-time limit.
    Steady,
    /// Trace from the finite-bath exact dynamics.
    Oracle,
    /// Damping regime of the parameters.
    Regime,
    /// Trace repeated over a list of values of one parameter.
    Sweep,
    /// Map a lumped LC/RC circuit onto model parameters.
    Circuit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Gamma0,
    Omegad,
    Temp,
}

/// Charging of a harmonic quantum battery through a structured reservoir.
#[derive(Debug, Parser)]
#[command(name = "qbattery", version, allow_negative_numbers = true)]
pub struct Args {
    #[arg(value_enum)]
    pub mode: Mode,
    /// File of `key = value` lines; keys are the long flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub omega0: Option<f64>,
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long)]
    pub gamma0: Option<f64>,
    #[arg(long)]
    pub omegad: Option<f64>,
    #[arg(long)]
    pub temp: Option<f64>,
    /// End of the time grid; defaults to 4 pi / Omega.
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Number of grid points including t = 0.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Bath spacing for spectral and oracle modes.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Number of bath modes for spectral and oracle modes.
    #[arg(long)]
    pub modes: Option<usize>,
    /// Add the strong-coupling short-time closed forms to trace output.
    #[arg(long)]
    pub analytic: bool,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub param: Option<SweepParam>,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    /// Henry.
    #[arg(long)]
    pub inductance: Option<f64>,
    /// Farad.
    #[arg(long)]
    pub capacitance: Option<f64>,
    /// Ohm.
    #[arg(long)]
    pub resistance: Option<f64>,
    /// Farad.
    #[arg(long)]
    pub env_capacitance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub params: SystemParams,
    /// None means 4 pi / Omega of whichever parameters are being run.
    pub t_max: Option<f64>,
    pub steps: usize,
    pub quad: QuadratureSpec,
    /// Explicit bath; None picks the per-mode default.
    pub delta: Option<f64>,
    pub modes: Option<usize>,
    pub analytic: bool,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub sweep: Option<Sweep>,
    pub circuit: Option<CircuitParams>,
}

/// Parsed `key = value` pairs. `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", n + 1))?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(format!("config line {}: unknown key `{}`", n + 1, k.trim()));
        }
        if out.insert(key, v.trim().to_string()).is_some() {
            return Err(format!("config line {}: key `{}` given twice", n + 1, k.trim()));
        }
    }
    Ok(out)
}

const KEYS: [&str; 19] = [
    "omega0",
    "mass",
    "gamma0",
    "omegad",
    "temp",
    "tmax",
    "steps",
    "rel_tol",
    "delta",
    "modes",
    "analytic",
    "format",
    "output",
    "param",
    "values",
    "inductance",
    "capacitance",
    "resistance",
    "env_capacitance",
];

struct FileKeys(BTreeMap<String, String>);

impl FileKeys {
    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| format!("config key `{key}`: cannot parse `{v}`")),
        }
    }

    fn get_enum<T: ValueEnum>(&self, key: &str) -> Result<Option<T>, String> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => T::from_str(v, true).map(Some).map_err(|_| format!("config key `{key}`: unknown value `{v}`")),
        }
    }

    fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>, String> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| format!("config key `{key}`: cannot parse `{s}`")))
                .collect::<Result<Vec<f64>, String>>()
                .map(Some),
        }
    }
}

/// Merges flags over the file and checks everything that can be checked
/// before any numerics run. Errors here are usage errors.
pub fn resolve(args: Args) -> Result<RunConfig, String> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
            FileKeys(parse_config_file(&text)?)
        }
        None => FileKeys(BTreeMap::new()),
    };

    let num = |flag: Option<f64>, key: &str| -> Result<Option<f64>, String> {
        Ok(match flag {
            Some(v) => Some(v),
            None => file.get(key)?,
        })
    };

    // unset physics defaults to the strong-coupling charging example
    let params = SystemParams::new(
        num(args.omega0, "omega0")?.unwrap_or(1.0),
        num(args.mass, "mass")?.unwrap_or(1.0),
        num(args.gamma0, "gamma0")?.unwrap_or(300.0),
        num(args.omegad, "omegad")?.unwrap_or(2.0),
        num(args.temp, "temp")?.unwrap_or(0.1),
    )
    .map_err(|e| e.to_string())?;

    let t_max = num(args.tmax, "tmax")?;
    if let Some(t) = t_max {
        if !(t.is_finite() && t > 0.0) {
            return Err(format!("tmax must be > 0, got {t}"));
        }
    }
    let default_steps = if args.mode == Mode::Spectral { 21 } else { 2000 };
    let steps = match args.steps {
        Some(s) => s,
        None => file.get("steps")?.unwrap_or(default_steps),
    };
    if steps < 2 {
        return Err(format!("steps must be >= 2, got {steps}"));
    }

    let mut quad = QuadratureSpec::default();
    if let Some(tol) = num(args.rel_tol, "rel_tol")? {
        if !(tol > 0.0 && tol < 1e-2) {
            return Err(format!("rel_tol must lie in (0, 1e-2), got {tol}"));
        }
        quad.rel_tol = tol;
    }

    let delta = num(args.delta, "delta")?;
    if let Some(d) = delta {
        if !(d.is_finite() && d > 0.0) {
            return Err(format!("delta must be > 0, got {d}"));
        }
    }
    let modes = match args.modes {
        Some(n) => Some(n),
        None => file.get("modes")?,
    };
    if modes == Some(0) {
        return Err("modes must be >= 1".into());
    }

    let analytic = args.analytic || file.get("analytic")?.unwrap_or(false);
    let format = match args.format {
        Some(f) => f,
        None => file.get_enum("format")?.unwrap_or(Format::Csv),
    };
    let output = match args.output {
        Some(p) => Some(p),
        None => file.get::<String>("output")?.map(PathBuf::from),
    };

    let sweep = if args.mode == Mode::Sweep {
        let param = match args.param {
            Some(p) => p,
            None => file.get_enum("param")?.ok_or("sweep needs --param (gamma0, omegad or temp)")?,
        };
        let values = match args.values {
            Some(v) => v,
            None => file.get_list("values")?.ok_or("sweep needs --values")?,
        };
        if values.is_empty() {
            return Err("sweep needs at least one value".into());
        }
        for &v in &values {
            sweep_params(&params, param, v).map_err(|e| e.to_string())?;
        }
        Some(Sweep { param, values })
    } else {
        None
    };

    let circuit = if args.mode == Mode::Circuit {
        let need = |flag: Option<f64>, key: &str| -> Result<f64, String> {
            num(flag, key)?.ok_or_else(|| format!("circuit needs --{}", key.replace('_', "-")))
        };
        let c = CircuitParams {
            inductance: need(args.inductance, "inductance")?,
            capacitance: need(args.capacitance, "capacitance")?,
            env_resistance: need(args.resistance, "resistance")?,
            env_capacitance: need(args.env_capacitance, "env_capacitance")?,
        };
        c.validate().map_err(|e| e.to_string())?;
        Some(c)
    } else {
        None
    };

    Ok(RunConfig {
        mode: args.mode,
        params,
        t_max,
        steps,
        quad,
        delta,
        modes,
        analytic,
        format,
        output,
        sweep,
        circuit,
    })
}

pub fn sweep_params(base: &SystemParams, param: SweepParam, value: f64) -> qbattery::Result<SystemParams> {
    let p = match param {
        SweepParam::Gamma0 => base.with_gamma0(value),
        SweepParam::Omegad => base.with_omega_d(value),
        SweepParam::Temp => base.with_temperature(value),
    };
    p.validate()?;
    Ok(p)
}
