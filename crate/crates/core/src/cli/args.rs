use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use super::output::Format;
use crate::ode::StepControl;
use crate::shooting::ShootingConfig;

#[derive(Debug, Parser)]
#[command(
    name = "conic-ke",
    version,
    about = "Shooting solver for conical Kähler-Einstein metrics on P² along a conic"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shoot one trajectory and report α², β.
    Solve(SolveArgs),
    /// Tabulate (α², β, t_max) over a τ grid.
    Sweep(SweepArgs),
    /// Find τ whose cone-angle parameter is β.
    FindBeta(FindBetaArgs),
    /// Metric profile (t, r, f, R, a, b, c) along one shot.
    Profile(TauArgs),
    /// Rescaled data fτ, hτ against the Eguchi-Hanson bubble.
    Bubble(BubbleArgs),
    /// Sample a closed-form reference metric.
    Reference(ReferenceArgs),
    /// Sup-norm comparison of a shot with a reference metric in t.
    Compare(CompareArgs),
}

/// Flags every subcommand understands.
#[derive(Debug, Clone, Args, Default)]
pub struct Common {
    /// Seed offset from the singular point.
    #[arg(long, allow_hyphen_values = true)]
    pub r0: Option<f64>,
    /// Far-field sampling point.
    #[arg(long = "r-end", allow_hyphen_values = true)]
    pub r_end: Option<f64>,
    #[arg(long = "rel-tol", allow_hyphen_values = true)]
    pub rel_tol: Option<f64>,
    #[arg(long = "abs-tol", allow_hyphen_values = true)]
    pub abs_tol: Option<f64>,
    #[arg(long = "h-min", allow_hyphen_values = true)]
    pub h_min: Option<f64>,
    #[arg(long = "h-max", allow_hyphen_values = true)]
    pub h_max: Option<f64>,
    #[arg(long = "max-steps")]
    pub max_steps: Option<usize>,
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write a gnuplot script that plots the output file.
    #[arg(long = "gnuplot-script")]
    pub gnuplot_script: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

pub type TauArgs = SolveArgs;

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long = "tau-min", allow_hyphen_values = true)]
    pub tau_min: Option<f64>,
    #[arg(long = "tau-max", allow_hyphen_values = true)]
    pub tau_max: Option<f64>,
    /// Number of grid points, endpoints included.
    #[arg(long, allow_hyphen_values = true)]
    pub steps: Option<i64>,
    /// Geometric instead of linear spacing.
    #[arg(long)]
    pub log: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FindBetaArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Accepted |β(τ) - target|.
    #[arg(long, allow_hyphen_values = true)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BubbleArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,
    /// Left edge of the comparison window in r.
    #[arg(long = "window-min", allow_hyphen_values = true)]
    pub window_min: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ReferenceArgs {
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long = "param-min", allow_hyphen_values = true)]
    pub param_min: Option<f64>,
    #[arg(long = "param-max", allow_hyphen_values = true)]
    pub param_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub samples: Option<i64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub samples: Option<i64>,
    #[arg(long = "max-f", allow_hyphen_values = true)]
    pub max_f: Option<f64>,
    #[arg(long = "max-r", allow_hyphen_values = true)]
    pub max_r: Option<f64>,
    #[arg(long = "max-csq", allow_hyphen_values = true)]
    pub max_csq: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

/// Failure that maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

const CONFIG_KEYS: &[&str] = &[
    "tau", "tau-min", "tau-max", "steps", "log", "beta", "tol", "model", "samples",
    "param-min", "param-max", "window-min", "max-f", "max-r", "max-csq", "r0", "r-end",
    "rel-tol", "abs-tol", "h-min", "h-max", "max-steps", "format", "out",
];

/// Parsed `key = value` config file. Keys use the flag spelling; `_` and
/// `-` are interchangeable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, UsageError> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                UsageError(format!("config line {}: expected 'key = value'", lineno + 1))
            })?;
            let key = key.trim().replace('_', "-").to_ascii_lowercase();
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(UsageError(format!("config line {}: unknown key '{key}'", lineno + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, UsageError> {
        match path {
            None => Ok(ConfigFile::default()),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| UsageError(format!("cannot read config {}: {e}", p.display())))?;
                ConfigFile::parse(&text)
            }
        }
    }

    /// Flag value, else config value, else `None`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, UsageError>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| UsageError(format!("config key '{key}': {e}"))),
        }
    }

    pub fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, UsageError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    pub fn required<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T, UsageError>
    where
        T::Err: std::fmt::Display,
    {
        self.pick(flag, key)?
            .ok_or_else(|| UsageError(format!("missing required --{key}")))
    }

    pub fn flag(&self, flag: bool, key: &str) -> Result<bool, UsageError> {
        if flag {
            return Ok(true);
        }
        self.or(None, key, false)
    }
}

/// Common flags merged with the config file and defaults.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ConfigFile,
    pub r0: f64,
    pub r_end: f64,
    pub control: StepControl,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub gnuplot_script: Option<PathBuf>,
}

impl Resolved {
    pub fn new(common: &Common) -> Result<Self, UsageError> {
        let config = ConfigFile::load(common.config.as_deref())?;
        let d = ShootingConfig::default();
        let dc = d.control;
        let format = match common.format {
            Some(f) => f,
            None => match config.pick::<String>(None, "format")?.as_deref() {
                None | Some("csv") => Format::Csv,
                Some("json") => Format::Json,
                Some(other) => return Err(UsageError(format!("unknown format '{other}'"))),
            },
        };
        let resolved = Resolved {
            r0: config.or(common.r0, "r0", d.r0)?,
            r_end: config.or(common.r_end, "r-end", d.r_end)?,
            control: StepControl {
                rel_tol: config.or(common.rel_tol, "rel-tol", dc.rel_tol)?,
                abs_tol: config.or(common.abs_tol, "abs-tol", dc.abs_tol)?,
                h_min: config.or(common.h_min, "h-min", dc.h_min)?,
                h_max: config.or(common.h_max, "h-max", dc.h_max)?,
                max_steps: config.or(common.max_steps, "max-steps", dc.max_steps)?,
            },
            out: config.pick(common.out.clone(), "out")?,
            format,
            gnuplot_script: common.gnuplot_script.clone(),
            config,
        };
        if resolved.gnuplot_script.is_some() && resolved.out.is_none() {
            return Err(UsageError("--gnuplot-script needs --out".into()));
        }
        Ok(resolved)
    }

    /// Shooting configuration for `tau`, validated.
    pub fn shooting(&self, tau: f64) -> Result<ShootingConfig, UsageError> {
        let config = ShootingConfig { tau, r0: self.r0, r_end: self.r_end, control: self.control };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let cfg = ConfigFile::parse("# comment\ntau = 3\nr_end=-250 # trailing\n\nlog = true\n").unwrap();
        assert_eq!(cfg.pick::<f64>(None, "tau").unwrap(), Some(3.0));
        assert_eq!(cfg.pick::<f64>(None, "r-end").unwrap(), Some(-250.0));
        assert!(cfg.flag(false, "log").unwrap());
        assert_eq!(cfg.or::<f64>(None, "beta", 0.5).unwrap(), 0.5);
    }

    #[test]
    fn flags_beat_config() {
        let cfg = ConfigFile::parse("tau = 3").unwrap();
        assert_eq!(cfg.pick(Some(7.0), "tau").unwrap(), Some(7.0));
    }

    #[test]
    fn config_errors() {
        assert!(ConfigFile::parse("tau 3").is_err());
        assert!(ConfigFile::parse("colour = red").is_err());
        let cfg = ConfigFile::parse("tau = fast").unwrap();
        assert!(cfg.pick::<f64>(None, "tau").is_err());
        assert!(cfg.required::<f64>(None, "beta").is_err());
    }
}
