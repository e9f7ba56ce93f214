//! Run configuration: a flat `key = value` file, overridden by flags.
//!
//! Recognised keys, in the order `dump` writes them:
//!
//! | key | meaning |
//! |-----|---------|
//! | `command` | steady, stability, spectrum, criteria, stochastic, figure, sweep |
//! | `kappa`, `gamma_a`, `gamma_b` | nonlinearity and loss rates |
//! | `ja`, `jb`, `da`, `db` | couplings and detunings |
//! | `eps1`, `eps2` | pumps, `re` or `re,im` |
//! | `eps` | both pumps, real |
//! | `eps_ratio` | both pumps as a fraction of the single-cavity threshold |
//! | `uncoupled` | `true` zeroes couplings and detunings |
//! | `omega_min`, `omega_max`, `n_omega` | frequency grid |
//! | `theta` | quadrature angle in radians, or `optimize` |
//! | `figure` | preset id for the figure command |
//! | `sweep_field`, `sweep_values` | sweep axis; values as `a,b,c` or `start:stop:n` |
//! | `format` | csv or json |
//! | `seed`, `n_traj`, `dt`, `t_transient`, `t_sample`, `sample_interval`, `window`, `scheme` | stochastic run |
//! | `probe_omegas` | frequencies of sampled spectra |
//! | `dump` | optional raw trajectory file |
//!
//! Lines starting with `#` and blank lines are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dimer_core::model::{critical_pump, ModelParams};
use dimer_core::positivep::{Scheme, SdeConfig};
use dimer_core::spectra::SpectrumGrid;
use num_complex::Complex64;

use crate::error::{CliError, Result};
use crate::output::Format;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Steady,
    Stability,
    Spectrum,
    Criteria,
    Stochastic,
    Figure,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Stability => "stability",
            Command::Spectrum => "spectrum",
            Command::Criteria => "criteria",
            Command::Stochastic => "stochastic",
            Command::Figure => "figure",
            Command::Sweep => "sweep",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            Command::Steady,
            Command::Stability,
            Command::Spectrum,
            Command::Criteria,
            Command::Stochastic,
            Command::Figure,
            Command::Sweep,
        ]
        .into_iter()
        .find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Thetas {
    Fixed(f64),
    Optimize,
}

/// Model fields a sweep may vary.
pub const SWEEP_FIELDS: [&str; 9] = ["kappa", "gamma_a", "gamma_b", "ja", "jb", "da", "db", "eps", "eps_ratio"];

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub field: String,
    /// Ascending.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticSettings {
    pub n_traj: usize,
    pub dt: f64,
    /// `None` means `20 / min(gamma_a, gamma_b)`.
    pub t_transient: Option<f64>,
    pub t_sample: f64,
    pub sample_interval: f64,
    pub window: usize,
    pub scheme: Scheme,
    pub probe_omegas: Vec<f64>,
    pub dump: Option<PathBuf>,
}

impl StochasticSettings {
    pub fn sde_config(&self, p: &ModelParams, seed: u64) -> SdeConfig {
        let base = SdeConfig::new(p);
        SdeConfig {
            dt: self.dt,
            t_transient: self.t_transient.unwrap_or(base.t_transient),
            t_sample: self.t_sample,
            n_traj: self.n_traj,
            seed,
            scheme: self.scheme,
            sample_interval: self.sample_interval,
            window: self.window,
            probes: Vec::new(),
        }
    }
}

impl Default for StochasticSettings {
    fn default() -> Self {
        let base = SdeConfig::new(&ModelParams::default());
        Self {
            n_traj: base.n_traj,
            dt: base.dt,
            t_transient: None,
            t_sample: base.t_sample,
            sample_interval: base.sample_interval,
            window: base.window,
            scheme: base.scheme,
            probe_omegas: (0..11).map(|i| -10.0 + 2.0 * i as f64).collect(),
            dump: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: ModelParams,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_omega: usize,
    pub thetas: Thetas,
    pub figure: Option<u32>,
    pub sweep: Option<Sweep>,
    pub format: Format,
    pub seed: u64,
    pub stochastic: StochasticSettings,
    /// Output path; not part of the dumped configuration.
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn grid(&self) -> Result<SpectrumGrid> {
        SpectrumGrid::linspace(self.omega_min, self.omega_max, self.n_omega)
            .map_err(|e| CliError::config("n_omega", e.to_string()))
    }

    /// Canonical `key = value` text that resolves back to this configuration.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("command", self.command.name().into());
        kv("kappa", p.kappa.to_string());
        kv("gamma_a", p.gamma_a.to_string());
        kv("gamma_b", p.gamma_b.to_string());
        kv("ja", p.j_a.to_string());
        kv("jb", p.j_b.to_string());
        kv("da", p.delta_a.to_string());
        kv("db", p.delta_b.to_string());
        kv("eps1", complex_text(p.eps1));
        kv("eps2", complex_text(p.eps2));
        kv("omega_min", self.omega_min.to_string());
        kv("omega_max", self.omega_max.to_string());
        kv("n_omega", self.n_omega.to_string());
        kv(
            "theta",
            match self.thetas {
                Thetas::Fixed(t) => t.to_string(),
                Thetas::Optimize => "optimize".into(),
            },
        );
        if let Some(f) = self.figure {
            kv("figure", f.to_string());
        }
        if let Some(sw) = &self.sweep {
            kv("sweep_field", sw.field.clone());
            kv("sweep_values", list_text(&sw.values));
        }
        kv("format", format_name(self.format).into());
        kv("seed", self.seed.to_string());
        let st = &self.stochastic;
        kv("n_traj", st.n_traj.to_string());
        kv("dt", st.dt.to_string());
        if let Some(t) = st.t_transient {
            kv("t_transient", t.to_string());
        }
        kv("t_sample", st.t_sample.to_string());
        kv("sample_interval", st.sample_interval.to_string());
        kv("window", st.window.to_string());
        kv("scheme", scheme_name(st.scheme).into());
        kv("probe_omegas", list_text(&st.probe_omegas));
        if let Some(d) = &st.dump {
            kv("dump", d.display().to_string());
        }
        s
    }

    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        for k in pairs.keys() {
            if !KEYS.contains(&k.as_str()) {
                return Err(CliError::config(k, "unknown key"));
            }
        }
        let get = |k: &str| pairs.get(k).map(|s| s.trim());
        let command = match get("command") {
            Some(c) => {
                Command::parse(c).ok_or_else(|| CliError::config("command", format!("unknown command `{c}`")))?
            }
            None => return Err(CliError::config("command", "missing")),
        };

        let mut p = ModelParams::default();
        let set = |k: &'static str, field: &mut f64| -> Result<()> {
            if let Some(v) = get(k) {
                *field = parse_f64(k, v)?;
            }
            Ok(())
        };
        set("kappa", &mut p.kappa)?;
        set("gamma_a", &mut p.gamma_a)?;
        set("gamma_b", &mut p.gamma_b)?;
        set("ja", &mut p.j_a)?;
        set("jb", &mut p.j_b)?;
        set("da", &mut p.delta_a)?;
        set("db", &mut p.delta_b)?;
        if get("uncoupled").map(|v| parse_bool("uncoupled", v)).transpose()?.unwrap_or(false) {
            p.j_a = 0.0;
            p.j_b = 0.0;
            p.delta_a = 0.0;
            p.delta_b = 0.0;
        }
        let pump_keys: Vec<&str> = ["eps", "eps_ratio"].into_iter().filter(|k| pairs.contains_key(*k)).collect();
        let explicit = pairs.contains_key("eps1") || pairs.contains_key("eps2");
        if pump_keys.len() > 1 || (!pump_keys.is_empty() && explicit) {
            return Err(CliError::config(pump_keys[0], "give only one of eps, eps_ratio, or eps1/eps2"));
        }
        if let Some(v) = get("eps1") {
            p.eps1 = parse_complex("eps1", v)?;
        }
        if let Some(v) = get("eps2") {
            p.eps2 = parse_complex("eps2", v)?;
        }
        if let Some(v) = get("eps") {
            p = p.with_pump(parse_f64("eps", v)?);
        }
        if let Some(v) = get("eps_ratio") {
            let r = parse_f64("eps_ratio", v)?;
            p = p.with_pump(r * critical_pump(&p)?);
        }
        p.validate()?;

        let omega_min = get("omega_min").map(|v| parse_f64("omega_min", v)).transpose()?.unwrap_or(-20.0);
        let omega_max = get("omega_max").map(|v| parse_f64("omega_max", v)).transpose()?.unwrap_or(20.0);
        let n_omega = get("n_omega").map(|v| parse_usize("n_omega", v)).transpose()?.unwrap_or(801);
        if n_omega == 0 || (n_omega > 1 && !(omega_max > omega_min)) {
            return Err(CliError::config("omega_max", "grid needs omega_max > omega_min and n_omega >= 1"));
        }
        let thetas = match get("theta") {
            None => Thetas::Fixed(0.0),
            Some("optimize") => Thetas::Optimize,
            Some(v) => Thetas::Fixed(parse_f64("theta", v)?),
        };
        let thetas = match get("optimize_theta").map(|v| parse_bool("optimize_theta", v)).transpose()? {
            Some(true) => Thetas::Optimize,
            _ => thetas,
        };
        let figure = get("figure").map(|v| parse_usize("figure", v).map(|f| f as u32)).transpose()?;
        let sweep = match (get("sweep_field"), get("sweep_values")) {
            (None, None) => None,
            (Some(f), Some(v)) => {
                if !SWEEP_FIELDS.contains(&f) {
                    return Err(CliError::config("sweep_field", format!("`{f}` is not one of {SWEEP_FIELDS:?}")));
                }
                let mut values = parse_values("sweep_values", v)?;
                values.sort_by(|a, b| a.total_cmp(b));
                Some(Sweep { field: f.into(), values })
            }
            (Some(_), None) => return Err(CliError::config("sweep_values", "missing")),
            (None, Some(_)) => return Err(CliError::config("sweep_field", "missing")),
        };
        let format = match get("format") {
            None | Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(v) => return Err(CliError::config("format", format!("`{v}` is not csv or json"))),
        };
        let seed =
            get("seed").map(|v| v.parse::<u64>().map_err(|e| CliError::config("seed", e.to_string()))).transpose()?;

        let mut st = StochasticSettings::default();
        if let Some(v) = get("n_traj") {
            st.n_traj = parse_usize("n_traj", v)?;
        }
        if let Some(v) = get("dt") {
            st.dt = parse_f64("dt", v)?;
        }
        if let Some(v) = get("t_transient") {
            st.t_transient = Some(parse_f64("t_transient", v)?);
        }
        if let Some(v) = get("t_sample") {
            st.t_sample = parse_f64("t_sample", v)?;
        }
        if let Some(v) = get("sample_interval") {
            st.sample_interval = parse_f64("sample_interval", v)?;
        }
        if let Some(v) = get("window") {
            st.window = parse_usize("window", v)?;
        }
        if let Some(v) = get("scheme") {
            st.scheme = match v {
                "midpoint" => Scheme::SemiImplicitMidpoint,
                "euler" => Scheme::ExplicitEulerMaruyama,
                _ => return Err(CliError::config("scheme", format!("`{v}` is not midpoint or euler"))),
            };
        }
        if let Some(v) = get("probe_omegas") {
            st.probe_omegas = parse_values("probe_omegas", v)?;
        }
        if let Some(v) = get("dump") {
            st.dump = Some(PathBuf::from(v));
        }

        Ok(Self {
            command,
            params: p,
            omega_min,
            omega_max,
            n_omega,
            thetas,
            figure,
            sweep,
            format,
            seed: seed.unwrap_or(0),
            stochastic: st,
            out: get("out").map(PathBuf::from),
        })
    }
}

/// Every key accepted by [`RunConfig::from_pairs`].
pub const KEYS: [&str; 33] = [
    "command",
    "kappa",
    "gamma_a",
    "gamma_b",
    "ja",
    "jb",
    "da",
    "db",
    "eps1",
    "eps2",
    "eps",
    "eps_ratio",
    "uncoupled",
    "omega_min",
    "omega_max",
    "n_omega",
    "theta",
    "optimize_theta",
    "figure",
    "sweep_field",
    "sweep_values",
    "format",
    "seed",
    "n_traj",
    "dt",
    "t_transient",
    "t_sample",
    "sample_interval",
    "window",
    "scheme",
    "probe_omegas",
    "dump",
    "out",
];

/// Parses `key = value` lines.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("line {}", n + 1), "expected `key = value`"))?;
        let k = k.trim().to_string();
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::config(k, "given twice"));
        }
    }
    Ok(out)
}

pub fn read_pairs(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_pairs(&text)
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>().map_err(|_| CliError::config(key, format!("`{v}` is not a number")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>().map_err(|_| CliError::config(key, format!("`{v}` is not a non-negative integer")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::config(key, format!("`{v}` is not a boolean"))),
    }
}

fn parse_complex(key: &str, v: &str) -> Result<Complex64> {
    match v.split_once(',') {
        Some((re, im)) => Ok(Complex64::new(parse_f64(key, re.trim())?, parse_f64(key, im.trim())?)),
        None => Ok(Complex64::new(parse_f64(key, v)?, 0.0)),
    }
}

/// `a,b,c` or `start:stop:n` (inclusive, evenly spaced).
pub fn parse_values(key: &str, v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').collect();
    let values = if parts.len() == 3 {
        let (a, b) = (parse_f64(key, parts[0].trim())?, parse_f64(key, parts[1].trim())?);
        let n = parse_usize(key, parts[2].trim())?;
        SpectrumGrid::linspace(a, b, n).map_err(|e| CliError::config(key, e.to_string()))?.omegas().to_vec()
    } else {
        v.split(',').map(|x| parse_f64(key, x.trim())).collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() {
        return Err(CliError::config(key, "no values"));
    }
    Ok(values)
}

fn complex_text(z: Complex64) -> String {
    if z.im == 0.0 {
        z.re.to_string()
    } else {
        format!("{},{}", z.re, z.im)
    }
}

fn list_text(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::SemiImplicitMidpoint => "midpoint",
        Scheme::ExplicitEulerMaruyama => "euler",
    }
}
