//! One entry point per command; each produces tables and, for commands that
//! need a stable operating point, fails with [`CliError::Instability`].

use std::path::PathBuf;

use dimer_core::criteria::{build_cm, duan_sum, evaluate_criteria, log_negativity, DuanCombination, LogNegVariant};
use dimer_core::linalg::Vec8;
use dimer_core::linearized::{
    classify_stability, default_self_pulsing_tol, linearize_at_steady_state, LinearizedSystem, StabilityReport,
};
use dimer_core::model::{critical_pump, Band, ModelParams, PhaseSpaceState, VARIABLE_NAMES};
use dimer_core::positivep::{preflight, ProbeRequest};
use dimer_core::spectra::{
    equal_time_covariance, intracavity_spectrum, objective_value, optimize_angle_at, optimize_fixed_angle,
    spectrum_on_grid, Mode, Objective, QuadratureProbe, QuadratureSelector, Sign, SpectralMatrix,
};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{Command, RunConfig, Thetas};
use crate::ensemble::{run_ensemble, thread_pool};
use crate::error::{CliError, Result};
use crate::output::{write_tables, Cell, Table};
use crate::presets::{figure_spec, figure_table};

const BANDS: [Band; 2] = [Band::Fundamental, Band::Harmonic];

fn band_name(band: Band) -> &'static str {
    match band {
        Band::Fundamental => "fundamental",
        Band::Harmonic => "harmonic",
    }
}

fn combination_name(c: DuanCombination) -> &'static str {
    match c {
        DuanCombination::XMinusYPlus => "x_minus_y_plus",
        DuanCombination::XPlusYMinus => "x_plus_y_minus",
    }
}

/// Runs `cfg`, writes its tables and returns the files written.
///
/// Tables are written before an instability error is returned, so
/// `stability` still reports the eigenvalues it rejected.
pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let (tables, failure) = match cfg.command {
        Command::Steady => (steady(cfg)?, None),
        Command::Stability => stability(cfg)?,
        Command::Spectrum => (spectrum(cfg)?, None),
        Command::Criteria => (criteria(cfg)?, None),
        Command::Stochastic => (stochastic(cfg)?, None),
        Command::Figure => (figure(cfg)?, None),
        Command::Sweep => (sweep(cfg)?, None),
    };
    let written = write_tables(&tables, cfg.out.as_deref(), cfg.format)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(written),
    }
}

fn state_table(name: &str, x: &PhaseSpaceState) -> Table {
    let mut t = Table::new(name, &["variable", "re", "im"]);
    for (n, z) in VARIABLE_NAMES.iter().zip(x.to_array()) {
        t.push(vec![(*n).into(), z.re.into(), z.im.into()]);
    }
    t
}

pub fn steady(cfg: &RunConfig) -> Result<Vec<Table>> {
    let (ss, _) = linearize_at_steady_state(&cfg.params)?;
    Ok(vec![state_table("steady", &ss)])
}

fn eigenvalue_table(report: &StabilityReport) -> Table {
    let mut t = Table::new("stability", &["index", "re", "im", "stable", "self_pulsing"]);
    for (i, l) in report.eigenvalues.iter().enumerate() {
        t.push(vec![i.into(), l.re.into(), l.im.into(), report.stable.into(), report.self_pulsing.into()]);
    }
    t
}

fn instability_message(p: &ModelParams, report: &StabilityReport) -> String {
    let worst = report.eigenvalues.iter().map(|l| l.re).fold(f64::INFINITY, f64::min);
    format!(
        "steady state at eps1 = {}, eps2 = {} has smallest decay rate {worst:.6e} (stable = {}, self-pulsing = {})",
        p.eps1, p.eps2, report.stable, report.self_pulsing
    )
}

pub fn stability(cfg: &RunConfig) -> Result<(Vec<Table>, Option<CliError>)> {
    let p = &cfg.params;
    let (_, sys) = linearize_at_steady_state(p)?;
    let report = classify_stability(&sys, default_self_pulsing_tol(p))?;
    let failure = (!report.is_operable()).then(|| CliError::Instability(instability_message(p, &report)));
    Ok((vec![eigenvalue_table(&report)], failure))
}

/// Linearization at a stable steady state, or an instability error.
pub fn operable_system(p: &ModelParams) -> Result<(PhaseSpaceState, LinearizedSystem)> {
    let (ss, sys) = linearize_at_steady_state(p)?;
    let report = classify_stability(&sys, default_self_pulsing_tol(p))?;
    if !report.is_operable() {
        return Err(CliError::Instability(instability_message(p, &report)));
    }
    Ok((ss, sys))
}

fn single_v(sm: &SpectralMatrix, band: Band, mode: Mode, theta: f64, p: &ModelParams) -> f64 {
    QuadratureProbe::single(&QuadratureSelector::new(band, mode, theta)).variance(sm, p)
}

pub fn spectrum(cfg: &RunConfig) -> Result<Vec<Table>> {
    let p = &cfg.params;
    let (_, sys) = operable_system(p)?;
    let sms = spectrum_on_grid(&sys, &cfg.grid()?)?;
    let mut t = Table::new("spectrum", &["omega", "band", "theta", "v_x1", "v_y1", "v_x2", "v_y2"]);
    for band in BANDS {
        for sm in &sms {
            let theta = match cfg.thetas {
                Thetas::Fixed(t) => t,
                Thetas::Optimize => optimize_angle_at(sm, Objective::SingleModeV, band, p)?.0,
            };
            let y = theta + std::f64::consts::FRAC_PI_2;
            t.push(vec![
                sm.omega.into(),
                band_name(band).into(),
                theta.into(),
                single_v(sm, band, Mode::One, theta, p).into(),
                single_v(sm, band, Mode::One, y, p).into(),
                single_v(sm, band, Mode::Two, theta, p).into(),
                single_v(sm, band, Mode::Two, y, p).into(),
            ]);
        }
    }
    Ok(vec![t])
}

pub fn criteria(cfg: &RunConfig) -> Result<Vec<Table>> {
    let p = &cfg.params;
    let (_, sys) = operable_system(p)?;
    let sms = spectrum_on_grid(&sys, &cfg.grid()?)?;
    let mut t = Table::new(
        "criteria",
        &[
            "omega",
            "band",
            "theta_duan",
            "duan_sum",
            "duan_combination",
            "theta_epr",
            "epr_product",
            "logneg_standard",
            "logneg_paper",
            "logneg_paper_complex",
        ],
    );
    for band in BANDS {
        for sm in &sms {
            let (theta_duan, theta_epr) = match cfg.thetas {
                Thetas::Fixed(t) => (t, t),
                Thetas::Optimize => (
                    optimize_angle_at(sm, Objective::DuanSum, band, p)?.0,
                    optimize_angle_at(sm, Objective::EprProduct, band, p)?.0,
                ),
            };
            let duan = duan_sum(&build_cm(sm, band, theta_duan, p));
            let r = evaluate_criteria(sm, band, theta_epr, p)?;
            t.push(vec![
                sm.omega.into(),
                band_name(band).into(),
                theta_duan.into(),
                duan.value.into(),
                combination_name(duan.combination).into(),
                theta_epr.into(),
                r.epr_product.into(),
                r.logneg_standard.into(),
                r.logneg_paper.into(),
                r.logneg_paper_complex.into(),
            ]);
        }
    }
    Ok(vec![t])
}

/// The probes of a stochastic run: `X_1` and `X_+` of the fundamental.
pub fn stochastic_probes(theta: f64, omegas: &[f64]) -> Vec<ProbeRequest> {
    vec![
        ProbeRequest {
            name: "x1".into(),
            probe: QuadratureProbe::single(&QuadratureSelector::new(Band::Fundamental, Mode::One, theta)),
            omegas: omegas.to_vec(),
        },
        ProbeRequest {
            name: "xp".into(),
            probe: QuadratureProbe::combined(Band::Fundamental, Sign::Plus, theta),
            omegas: omegas.to_vec(),
        },
    ]
}

pub fn stochastic(cfg: &RunConfig) -> Result<Vec<Table>> {
    let p = &cfg.params;
    let theta = match cfg.thetas {
        Thetas::Fixed(t) => t,
        Thetas::Optimize => return Err(CliError::config("theta", "stochastic runs need a fixed angle")),
    };
    let mut sde = cfg.stochastic.sde_config(p, cfg.seed);
    sde.probes = stochastic_probes(theta, &cfg.stochastic.probe_omegas);
    for w in preflight(p, &sde) {
        eprintln!("warning: {w}");
    }
    let pool = thread_pool()?;
    let stats = run_ensemble(p, &sde, &pool, cfg.stochastic.dump.as_deref())?;
    for w in &stats.warnings {
        eprintln!("warning: {w}");
    }

    // Linearized references; absent when there is no stable steady state.
    let lin = linearize_at_steady_state(p).ok();
    let cov = lin.as_ref().and_then(|(_, sys)| equal_time_covariance(sys, 2048).ok());
    let nan = f64::NAN;

    let mut mean =
        Table::new("mean", &["variable", "re", "im", "std_error_re", "std_error_im", "linearized_re", "linearized_im"]);
    let reference = lin.as_ref().map(|(ss, _)| ss.to_array());
    for (k, name) in VARIABLE_NAMES.iter().enumerate() {
        let m = stats.mean_state.to_array()[k];
        let se = stats.mean_std_error.to_array()[k];
        let r = reference.map(|x| x[k]).unwrap_or(Complex64::new(nan, nan));
        mean.push(vec![(*name).into(), m.re.into(), m.im.into(), se.re.into(), se.im.into(), r.re.into(), r.im.into()]);
    }

    let mut moments = Table::new("moments", &["probe", "value", "std_error", "linearized"]);
    for (req, m) in sde.probes.iter().zip(&stats.equal_time) {
        let w: Vec8 = req.probe.weights;
        let l = cov.as_ref().map(|c| (w.transpose() * c * w)[(0, 0)].re).unwrap_or(nan);
        moments.push(vec![req.name.as_str().into(), m.value.into(), m.std_error.into(), l.into()]);
    }

    let mut spectra = Table::new("spectra", &["probe", "omega", "value", "std_error", "linearized", "n_windows"]);
    for (req, s) in sde.probes.iter().zip(&stats.spectra) {
        for (i, &w) in s.omegas.iter().enumerate() {
            let l = match &lin {
                Some((_, sys)) => intracavity_spectrum(sys, w).map(|sm| req.probe.variance(&sm, p)).unwrap_or(nan),
                None => nan,
            };
            spectra.push(vec![
                req.name.as_str().into(),
                w.into(),
                s.values[i].into(),
                s.std_errors[i].into(),
                l.into(),
                s.n_windows.into(),
            ]);
        }
    }

    let mut summary = Table::new("ensemble", &["n_used", "n_diverged", "seed", "dt"]);
    summary.push(vec![stats.n_used.into(), stats.n_diverged.into(), Cell::Int(cfg.seed as i64), sde.dt.into()]);
    Ok(vec![mean, moments, spectra, summary])
}

pub fn figure(cfg: &RunConfig) -> Result<Vec<Table>> {
    let id = cfg.figure.ok_or_else(|| CliError::config("figure", "missing"))?;
    let spec = figure_spec(id)?;
    Ok(vec![figure_table(&spec, &cfg.grid()?)?])
}

/// `base` with sweep field `field` set to `value`.
pub fn apply_sweep(base: &ModelParams, field: &str, value: f64) -> Result<ModelParams> {
    let mut p = *base;
    match field {
        "kappa" => p.kappa = value,
        "gamma_a" => p.gamma_a = value,
        "gamma_b" => p.gamma_b = value,
        "ja" => p.j_a = value,
        "jb" => p.j_b = value,
        "da" => p.delta_a = value,
        "db" => p.delta_b = value,
        "eps" => p = p.with_pump(value),
        "eps_ratio" => p = p.with_pump(value * critical_pump(&p)?),
        _ => return Err(CliError::config("sweep_field", format!("`{field}` cannot be swept"))),
    }
    p.validate()?;
    Ok(p)
}

const SWEEP_COLUMNS: [&str; 15] = [
    "value",
    "stable",
    "self_pulsing",
    "margin",
    "fund_intensity",
    "harm_intensity",
    "min_v_fund",
    "min_duan_fund",
    "min_epr_fund",
    "max_logneg_fund",
    "min_v_harm",
    "min_duan_harm",
    "min_epr_harm",
    "max_logneg_harm",
    "error",
];

fn sweep_row(cfg: &RunConfig, field: &str, value: f64) -> Result<Vec<Cell>> {
    let p = apply_sweep(&cfg.params, field, value)?;
    let nan = f64::NAN;
    let mut row: Vec<Cell> = vec![value.into()];
    let (ss, sys) = match linearize_at_steady_state(&p) {
        Ok(x) => x,
        Err(e) => {
            row.extend([false.into(), false.into()]);
            row.extend(std::iter::repeat_n(Cell::Num(nan), 11));
            row.push(e.to_string().into());
            return Ok(row);
        }
    };
    let report = classify_stability(&sys, default_self_pulsing_tol(&p))?;
    row.extend([report.stable.into(), report.self_pulsing.into(), report.margin.into()]);
    row.extend([ss.fundamental_intensities().0.into(), ss.harmonic_intensities().0.into()]);
    if !report.is_operable() {
        row.extend(std::iter::repeat_n(Cell::Num(nan), 8));
        row.push("".into());
        return Ok(row);
    }
    let sms = spectrum_on_grid(&sys, &cfg.grid()?)?;
    for band in BANDS {
        let mut mins = Vec::with_capacity(3);
        for obj in [Objective::SingleModeV, Objective::DuanSum, Objective::EprProduct] {
            let v = match cfg.thetas {
                Thetas::Fixed(theta) => sms.iter().try_fold(f64::INFINITY, |m, sm| {
                    Ok::<_, CliError>(m.min(objective_value(sm, obj, band, theta, &p)?))
                })?,
                Thetas::Optimize => optimize_fixed_angle(&sms, obj, band, &p)?.1,
            };
            mins.push(v);
        }
        let ln = sms
            .iter()
            .map(|sm| log_negativity(&build_cm(sm, band, 0.0, &p), LogNegVariant::Standard).value)
            .fold(f64::NEG_INFINITY, f64::max);
        row.extend(mins.into_iter().map(Cell::from));
        row.push(ln.into());
    }
    row.push("".into());
    Ok(row)
}

pub fn sweep(cfg: &RunConfig) -> Result<Vec<Table>> {
    let sw = cfg.sweep.as_ref().ok_or_else(|| CliError::config("sweep_field", "missing"))?;
    let pool = thread_pool()?;
    let rows: Vec<Result<Vec<Cell>>> =
        pool.install(|| sw.values.par_iter().map(|&v| sweep_row(cfg, &sw.field, v)).collect());
    let mut t = Table::new("sweep", &SWEEP_COLUMNS);
    for r in rows {
        t.push(r?);
    }
    Ok(vec![t])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_pairs;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::from_pairs(&parse_pairs(text).unwrap()).unwrap()
    }

    #[test]
    fn unpumped_steady_state_is_zero() {
        let t = &steady(&cfg("command = steady\neps = 0")).unwrap()[0];
        assert_eq!(t.rows.len(), 8);
        for r in &t.rows {
            assert_eq!(r[1], Cell::Num(0.0));
            assert_eq!(r[2], Cell::Num(0.0));
        }
    }

    #[test]
    fn above_threshold_is_reported() {
        let (tables, failure) = stability(&cfg("command = stability\nuncoupled = true\neps_ratio = 1.05")).unwrap();
        assert_eq!(tables[0].rows.len(), 8);
        let msg = failure.unwrap().to_string();
        assert!(msg.contains("unstable/self-pulsing"), "{msg}");
        assert!(matches!(spectrum(&cfg("command = spectrum\neps_ratio = 1.05")), Err(CliError::Instability(_))));
    }

    #[test]
    fn vacuum_spectrum_and_criteria() {
        let c = cfg("command = criteria\neps = 0\nja = 1\njb = 1\nn_omega = 7\nomega_min = -3\nomega_max = 3");
        let s = &spectrum(&c).unwrap()[0];
        for r in &s.rows {
            for cell in &r[3..] {
                let Cell::Num(v) = cell else { panic!() };
                assert!((v - 1.0).abs() < 1e-10);
            }
        }
        let t = &criteria(&c).unwrap()[0];
        let col = |n: &str| t.column(n).unwrap();
        for r in &t.rows {
            assert_eq!(r[col("duan_sum")], Cell::Num(4.0));
            let Cell::Num(e) = r[col("epr_product")] else { panic!() };
            assert!((e - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn sweep_rows_are_ordered_and_mark_instability() {
        let c = cfg(
            "command = sweep\nuncoupled = true\nsweep_field = eps_ratio\nsweep_values = 1.05,0.2,0.5\nn_omega = 5\nomega_min = -1\nomega_max = 1",
        );
        let t = &sweep(&c).unwrap()[0];
        let values: Vec<Cell> = t.rows.iter().map(|r| r[0].clone()).collect();
        assert_eq!(values, vec![Cell::Num(0.2), Cell::Num(0.5), Cell::Num(1.05)]);
        assert_eq!(t.rows[0][1], Cell::Bool(true));
        assert_eq!(t.rows[2][1], Cell::Bool(false));
        let Cell::Num(v) = t.rows[1][t.column("min_v_fund").unwrap()] else { panic!() };
        assert!(v < 1.0);
    }

    #[test]
    fn sweep_fields_map_onto_parameters() {
        let base = ModelParams::default();
        assert_eq!(apply_sweep(&base, "jb", 2.0).unwrap().j_b, 2.0);
        assert_eq!(apply_sweep(&base, "eps_ratio", 0.5).unwrap().eps2.re, 300.0);
        assert!(apply_sweep(&base, "gamma_a", -1.0).is_err());
        assert!(apply_sweep(&base, "colour", 1.0).is_err());
    }
}
