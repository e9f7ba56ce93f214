//! Parameter sets of the published figures and the tables that reproduce them.

use std::collections::BTreeMap;

use dimer_core::criteria::{build_cm, duan_sum, evaluate_criteria};
use dimer_core::linearized::{classify_stability, default_self_pulsing_tol, linearize_at_steady_state};
use dimer_core::model::{critical_pump, steady_state_symmetric, Band, ModelParams};
use dimer_core::spectra::{
    objective_value, optimize_fixed_angle, spectrum_on_grid, Objective, SpectralMatrix, SpectrumGrid,
};

use crate::config::{Command, RunConfig};
use crate::error::{CliError, Result};
use crate::output::Table;

pub const FIGURE_IDS: std::ops::RangeInclusive<u32> = 1..=8;

/// Pump ratios of the pump-dependence figures.
pub const PUMP_RATIOS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 0.95];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureQuantity {
    /// Optimized single-mode output variance, both bands.
    SingleModeVariance,
    /// Optimized Duan sum, both bands.
    DuanSum,
    /// Optimized EPR product, both bands.
    EprProduct,
    /// Log-negativity, both bands, both variants.
    LogNegativity,
    /// `X_+` plus `Y_-` at zero angle against pump ratio.
    DuanVsPump(Band),
    /// Intracavity intensities against pump ratio.
    Intensities,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetCase {
    pub params: ModelParams,
    pub eps_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureSpec {
    pub id: u32,
    pub quantity: FigureQuantity,
    pub cases: Vec<PresetCase>,
}

fn resonant(ja: f64, jb: f64) -> ModelParams {
    ModelParams { j_a: ja, j_b: jb, ..ModelParams::default() }
}

fn detuned(gamma_b: f64) -> ModelParams {
    ModelParams { gamma_b, j_a: 10.0, delta_a: 10.0, j_b: 2.0, delta_b: 2.0, ..ModelParams::default() }
}

fn pumped(p: ModelParams, ratio: f64) -> Result<PresetCase> {
    Ok(PresetCase { params: p.with_pump(ratio * critical_pump(&p)?), eps_ratio: ratio })
}

/// The cases plotted in figure `id`.
pub fn figure_spec(id: u32) -> Result<FigureSpec> {
    let coupled = [resonant(1.0, 1.0), resonant(2.0, 1.0), resonant(2.0, 0.5)];
    let (quantity, bases, ratios): (FigureQuantity, Vec<ModelParams>, Vec<f64>) = match id {
        1 => (
            FigureQuantity::SingleModeVariance,
            vec![resonant(0.0, 0.0), resonant(1.0, 1.0), resonant(2.0, 1.0)],
            vec![0.8],
        ),
        2 => (FigureQuantity::DuanSum, coupled.to_vec(), vec![0.8]),
        3 => (FigureQuantity::EprProduct, coupled.to_vec(), vec![0.8]),
        4 => (FigureQuantity::LogNegativity, coupled.to_vec(), vec![0.8]),
        5 => (FigureQuantity::DuanVsPump(Band::Fundamental), vec![detuned(2.0)], PUMP_RATIOS.to_vec()),
        6 => (FigureQuantity::DuanVsPump(Band::Harmonic), vec![detuned(2.0)], PUMP_RATIOS.to_vec()),
        7 => (FigureQuantity::DuanVsPump(Band::Fundamental), vec![detuned(0.5)], PUMP_RATIOS.to_vec()),
        8 => (
            FigureQuantity::Intensities,
            vec![detuned(2.0), detuned(0.5)],
            (1..100).map(|i| i as f64 / 100.0).collect(),
        ),
        _ => return Err(CliError::UnknownFigure(id)),
    };
    let mut cases = Vec::new();
    for p in bases {
        for &r in &ratios {
            cases.push(pumped(p, r)?);
        }
    }
    Ok(FigureSpec { id, quantity, cases })
}

/// Run configuration of figure `id`; `params` holds its first case.
pub fn figure_preset(id: u32) -> Result<RunConfig> {
    let spec = figure_spec(id)?;
    let mut pairs = BTreeMap::new();
    pairs.insert("command".to_string(), Command::Figure.name().to_string());
    pairs.insert("figure".to_string(), id.to_string());
    let mut cfg = RunConfig::from_pairs(&pairs)?;
    cfg.params = spec.cases[0].params;
    Ok(cfg)
}

fn band_name(band: Band) -> &'static str {
    match band {
        Band::Fundamental => "fundamental",
        Band::Harmonic => "harmonic",
    }
}

fn stable_spectra(p: &ModelParams, grid: &SpectrumGrid) -> Result<Vec<SpectralMatrix>> {
    let (_, sys) = linearize_at_steady_state(p)?;
    let report = classify_stability(&sys, default_self_pulsing_tol(p))?;
    if !report.is_operable() {
        return Err(CliError::Instability(format!("steady state at eps1 = {} is not operable", p.eps1)));
    }
    Ok(spectrum_on_grid(&sys, grid)?)
}

/// Data table of figure `spec` on `grid`.
pub fn figure_table(spec: &FigureSpec, grid: &SpectrumGrid) -> Result<Table> {
    let name = format!("figure{}", spec.id);
    match spec.quantity {
        FigureQuantity::SingleModeVariance | FigureQuantity::DuanSum | FigureQuantity::EprProduct => {
            let (objective, column) = match spec.quantity {
                FigureQuantity::SingleModeVariance => (Objective::SingleModeV, "v_x"),
                FigureQuantity::DuanSum => (Objective::DuanSum, "duan_sum"),
                _ => (Objective::EprProduct, "epr_product"),
            };
            let mut t = Table::new(&name, &["omega", "ja", "jb", "band", "theta", column]);
            for case in &spec.cases {
                let p = &case.params;
                let sms = stable_spectra(p, grid)?;
                for band in [Band::Fundamental, Band::Harmonic] {
                    let (theta, _) = optimize_fixed_angle(&sms, objective, band, p)?;
                    for sm in &sms {
                        let v = objective_value(sm, objective, band, theta, p)?;
                        t.push(vec![
                            sm.omega.into(),
                            p.j_a.into(),
                            p.j_b.into(),
                            band_name(band).into(),
                            theta.into(),
                            v.into(),
                        ]);
                    }
                }
            }
            Ok(t)
        }
        FigureQuantity::LogNegativity => {
            let mut t = Table::new(
                &name,
                &["omega", "ja", "jb", "band", "logneg_standard", "logneg_paper", "logneg_paper_complex"],
            );
            for case in &spec.cases {
                let p = &case.params;
                let sms = stable_spectra(p, grid)?;
                for band in [Band::Fundamental, Band::Harmonic] {
                    for sm in &sms {
                        let r = evaluate_criteria(sm, band, 0.0, p)?;
                        t.push(vec![
                            sm.omega.into(),
                            p.j_a.into(),
                            p.j_b.into(),
                            band_name(band).into(),
                            r.logneg_standard.into(),
                            r.logneg_paper.into(),
                            r.logneg_paper_complex.into(),
                        ]);
                    }
                }
            }
            Ok(t)
        }
        FigureQuantity::DuanVsPump(band) => {
            let column = match band {
                Band::Fundamental => "duan_sum_fund",
                Band::Harmonic => "duan_sum_harm",
            };
            let mut t = Table::new(&name, &["omega", "eps_ratio", column]);
            for case in &spec.cases {
                let p = &case.params;
                for sm in &stable_spectra(p, grid)? {
                    let d = duan_sum(&build_cm(sm, band, 0.0, p));
                    t.push(vec![sm.omega.into(), case.eps_ratio.into(), d.x_plus_y_minus.into()]);
                }
            }
            Ok(t)
        }
        FigureQuantity::Intensities => {
            let mut t = Table::new(&name, &["gamma_b", "eps_ratio", "fund_intensity", "harm_intensity"]);
            for case in &spec.cases {
                let ss = steady_state_symmetric(&case.params)?.to_state();
                let (fund, _) = ss.fundamental_intensities();
                let (harm, _) = ss.harmonic_intensities();
                t.push(vec![case.params.gamma_b.into(), case.eps_ratio.into(), fund.into(), harm.into()]);
            }
            Ok(t)
        }
    }
}
