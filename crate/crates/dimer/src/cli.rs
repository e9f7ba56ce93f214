//! Command-line parsing. Flags become `key = value` pairs layered over an
//! optional config file, so both paths share one validator.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::config::{read_pairs, RunConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "dimer", version, about = "Quantum correlations of two coupled intracavity frequency doublers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Classical steady state.
    Steady(Flags),
    /// Eigenvalues of the linearized drift; exits 2 if not operable.
    Stability(Flags),
    /// Single-mode output quadrature spectra.
    Spectrum(Flags),
    /// Duan, EPR and log-negativity spectra.
    Criteria(Flags),
    /// Positive-P ensemble with linearized comparisons.
    Stochastic(Flags),
    /// Data of a published figure.
    Figure(Flags),
    /// Stability, intensities and best criteria along one parameter.
    Sweep(Flags),
    /// Whatever command the config file names.
    Run(Flags),
}

#[derive(Debug, Args, Default)]
pub struct Flags {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the resolved configuration here before running.
    #[arg(long, value_name = "PATH")]
    pub dump_config: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,

    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub ja: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub jb: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub da: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub db: Option<String>,
    /// Pump of cavity 1, `re` or `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub eps1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps2: Option<String>,
    /// Equal real pumps.
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<String>,
    /// Equal real pumps as a fraction of the single-cavity threshold.
    #[arg(long, allow_hyphen_values = true)]
    pub eps_ratio: Option<String>,
    /// Zero couplings and detunings.
    #[arg(long)]
    pub uncoupled: bool,

    #[arg(long, allow_hyphen_values = true)]
    pub omega_min: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega_max: Option<String>,
    #[arg(long)]
    pub n_omega: Option<String>,
    /// Quadrature angle in radians, or `optimize`.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    #[arg(long)]
    pub optimize_theta: bool,

    #[arg(long, visible_alias = "id")]
    pub figure: Option<String>,
    #[arg(long)]
    pub sweep_field: Option<String>,
    /// `a,b,c` or `start:stop:n`.
    #[arg(long, allow_hyphen_values = true)]
    pub sweep_values: Option<String>,

    #[arg(long)]
    pub n_traj: Option<String>,
    #[arg(long)]
    pub dt: Option<String>,
    #[arg(long)]
    pub t_transient: Option<String>,
    #[arg(long)]
    pub t_sample: Option<String>,
    #[arg(long)]
    pub sample_interval: Option<String>,
    #[arg(long)]
    pub window: Option<String>,
    /// midpoint or euler.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub probe_omegas: Option<String>,
    /// Raw trajectory file.
    #[arg(long, value_name = "PATH")]
    pub dump: Option<PathBuf>,
}

const PUMP_KEYS: [&str; 4] = ["eps", "eps_ratio", "eps1", "eps2"];

impl Flags {
    fn pairs(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: &Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v.clone());
            }
        };
        put("format", &self.format);
        put("seed", &self.seed);
        put("kappa", &self.kappa);
        put("gamma_a", &self.gamma_a);
        put("gamma_b", &self.gamma_b);
        put("ja", &self.ja);
        put("jb", &self.jb);
        put("da", &self.da);
        put("db", &self.db);
        put("eps1", &self.eps1);
        put("eps2", &self.eps2);
        put("eps", &self.eps);
        put("eps_ratio", &self.eps_ratio);
        put("omega_min", &self.omega_min);
        put("omega_max", &self.omega_max);
        put("n_omega", &self.n_omega);
        put("theta", &self.theta);
        put("figure", &self.figure);
        put("sweep_field", &self.sweep_field);
        put("sweep_values", &self.sweep_values);
        put("n_traj", &self.n_traj);
        put("dt", &self.dt);
        put("t_transient", &self.t_transient);
        put("t_sample", &self.t_sample);
        put("sample_interval", &self.sample_interval);
        put("window", &self.window);
        put("scheme", &self.scheme);
        put("probe_omegas", &self.probe_omegas);
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        put("dump", &path(&self.dump));
        put("out", &path(&self.out));
        if self.uncoupled {
            m.insert("uncoupled".into(), "true".into());
        }
        if self.optimize_theta {
            m.insert("theta".into(), "optimize".into());
        }
        m
    }
}

/// Resolves a subcommand and its flags into a run configuration.
pub fn resolve(sub: &Sub) -> Result<(RunConfig, Option<PathBuf>)> {
    let (name, flags) = match sub {
        Sub::Steady(f) => (Some("steady"), f),
        Sub::Stability(f) => (Some("stability"), f),
        Sub::Spectrum(f) => (Some("spectrum"), f),
        Sub::Criteria(f) => (Some("criteria"), f),
        Sub::Stochastic(f) => (Some("stochastic"), f),
        Sub::Figure(f) => (Some("figure"), f),
        Sub::Sweep(f) => (Some("sweep"), f),
        Sub::Run(f) => (None, f),
    };
    let mut pairs = match &flags.config {
        Some(path) => read_pairs(path)?,
        None if name.is_none() => return Err(CliError::config("config", "`run` needs --config")),
        None => BTreeMap::new(),
    };
    let overrides = flags.pairs();
    // A pump given on the command line replaces the file's pump entirely.
    if PUMP_KEYS.iter().any(|k| overrides.contains_key(*k)) {
        for k in PUMP_KEYS {
            pairs.remove(k);
        }
    }
    pairs.extend(overrides);
    if let Some(n) = name {
        pairs.insert("command".into(), n.into());
    }
    Ok((RunConfig::from_pairs(&pairs)?, flags.dump_config.clone()))
}

fn execute(cli: &Cli) -> Result<()> {
    let (cfg, dump_config) = resolve(&cli.command)?;
    if let Some(path) = dump_config {
        std::fs::write(&path, cfg.dump()).map_err(|e| CliError::io(&path, e))?;
    }
    commands::run(&cfg)?;
    Ok(())
}

/// Process entry point: 0 on success, 2 on instability, 1 otherwise.
pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "command = criteria\nja = 1\neps_ratio = 0.5\ngamma_b = 2\n").unwrap();
        let cli = Cli::try_parse_from(["dimer", "run", "--config", path.to_str().unwrap(), "--ja", "3", "--eps", "10"])
            .unwrap();
        let (cfg, _) = resolve(&cli.command).unwrap();
        assert_eq!(cfg.params.j_a, 3.0);
        assert_eq!(cfg.params.gamma_b, 2.0);
        assert_eq!(cfg.params.eps1.re, 10.0);

        let cli = Cli::try_parse_from(["dimer", "spectrum", "--config", path.to_str().unwrap(), "--omega-min", "-5"])
            .unwrap();
        let (cfg, _) = resolve(&cli.command).unwrap();
        assert_eq!(cfg.command, crate::config::Command::Spectrum);
        assert_eq!(cfg.omega_min, -5.0);
    }

    #[test]
    fn run_needs_a_file() {
        let cli = Cli::try_parse_from(["dimer", "run"]).unwrap();
        assert!(resolve(&cli.command).is_err());
    }
}
