//! Ornstein-Uhlenbeck fluctuation spectra and output quadrature variances.
//!
//! The intracavity spectral matrix is `S(w) = (A + iw)^-1 B B^T (A^T - iw)^-1`,
//! always reported in the full basis. Output variances follow the
//! input-output convention `V_out = vacuum + 2 gamma N`, with vacuum level 1
//! per quadrature.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
// libm-backed float methods when std is absent.
#[allow(unused_imports)]
use num_traits::Float;

use crate::criteria::{build_cm, duan_sum, epr_product};
use crate::error::{Error, Result};
use crate::linalg::{self, c, real, Mat8, Vec8};
use crate::linearized::{plus_minus_transform, Basis, LinearizedSystem};
use crate::model::{Band, ModelParams};

/// Condition number of `A + iw` beyond which the resolvent is refused.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumGrid {
    omegas: Vec<f64>,
}

impl SpectrumGrid {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::InvalidConfig("frequency grid is empty".into()));
        }
        if omegas.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidConfig("frequency grid has non-finite entries".into()));
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("frequency grid must be strictly increasing".into()));
        }
        Ok(Self { omegas })
    }

    /// `n` evenly spaced points on `[min, max]`, endpoints included.
    pub fn linspace(min: f64, max: f64, n: usize) -> Result<Self> {
        match n {
            0 => Err(Error::InvalidConfig("frequency grid needs at least one point".into())),
            1 => Self::new(alloc::vec![min]),
            _ => {
                let step = (max - min) / (n - 1) as f64;
                // Pin the far endpoint so symmetric grids stay symmetric.
                let omegas = (0..n).map(|i| if i == n - 1 { max } else { min + step * i as f64 }).collect();
                Self::new(omegas)
            }
        }
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.omegas.len();
        (0..n).all(|i| (self.omegas[i] + self.omegas[n - 1 - i]).abs() <= tol)
    }
}

impl Default for SpectrumGrid {
    /// 801 points on `[-20, 20]`.
    fn default() -> Self {
        Self::linspace(-20.0, 20.0, 801).expect("valid default grid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMatrix {
    pub omega: f64,
    /// Full-basis normally ordered spectral moments.
    pub s: Mat8,
}

impl SpectralMatrix {
    /// `w^T S v`, the bilinear (not sesquilinear) form.
    pub fn bilinear(&self, w: &Vec8, v: &Vec8) -> Complex64 {
        (w.transpose() * self.s * v)[(0, 0)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// The rotated quadrature `X^theta = a e^{-i theta} + a^+ e^{i theta}` of one
/// mode; `Y^theta` is `X^{theta + pi/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSelector {
    pub band: Band,
    pub mode: Mode,
    pub theta: f64,
}

impl QuadratureSelector {
    /// Wraps `theta` into `[0, 2 pi)`.
    pub fn new(band: Band, mode: Mode, theta: f64) -> Self {
        Self { band, mode, theta: wrap_angle(theta, TAU) }
    }

    /// The conjugate quadrature.
    pub fn conjugate(&self) -> Self {
        Self::new(self.band, self.mode, self.theta + FRAC_PI_2)
    }

    pub fn weights(&self) -> Vec8 {
        quadrature_weights(self.band, self.mode, self.theta)
    }
}

fn wrap_angle(theta: f64, period: f64) -> f64 {
    let t = theta.rem_euclid(period);
    // rem_euclid may round up to the period itself.
    if t >= period {
        0.0
    } else {
        t
    }
}

fn band_offset(band: Band) -> usize {
    match band {
        Band::Fundamental => 0,
        Band::Harmonic => 4,
    }
}

/// Weight vector `w` with `X^theta = w . x` in the full basis.
pub fn quadrature_weights(band: Band, mode: Mode, theta: f64) -> Vec8 {
    let base = band_offset(band)
        + match mode {
            Mode::One => 0,
            Mode::Two => 2,
        };
    let mut w = Vec8::zeros();
    w[base] = Complex64::from_polar(1.0, -theta);
    w[base + 1] = Complex64::from_polar(1.0, theta);
    w
}

/// A linear combination of quadratures with its vacuum output level.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureProbe {
    pub band: Band,
    pub weights: Vec8,
    /// Output variance of the combination for vacuum input.
    pub vacuum: f64,
}

impl QuadratureProbe {
    pub fn single(sel: &QuadratureSelector) -> Self {
        Self { band: sel.band, weights: sel.weights(), vacuum: 1.0 }
    }

    /// `X_1^theta ± X_2^theta`.
    pub fn combined(band: Band, sign: Sign, theta: f64) -> Self {
        let w = quadrature_weights(band, Mode::One, theta)
            + quadrature_weights(band, Mode::Two, theta) * real(sign.factor());
        Self { band, weights: w, vacuum: 2.0 }
    }

    /// Output variance from a spectral matrix.
    pub fn variance(&self, sm: &SpectralMatrix, p: &ModelParams) -> f64 {
        self.vacuum + 2.0 * p.gamma(self.band) * sm.bilinear(&self.weights, &self.weights).re
    }

    /// Imaginary residual of the normally ordered part, for diagnostics.
    pub fn imaginary_residual(&self, sm: &SpectralMatrix) -> f64 {
        sm.bilinear(&self.weights, &self.weights).im
    }
}

fn check_condition(m: &Mat8, omega: f64) -> Result<()> {
    let condition = linalg::condition_number(m);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularSystem { omega, condition });
    }
    Ok(())
}

/// Full-basis spectral matrix at one frequency, by two linear solves.
pub fn intracavity_spectrum(sys: &LinearizedSystem, omega: f64) -> Result<SpectralMatrix> {
    let shift = Mat8::identity() * c(0.0, omega);
    let plus = sys.a_mat + shift;
    let minus = sys.a_mat - shift;
    check_condition(&plus, omega)?;
    check_condition(&minus, omega)?;
    let singular = || Error::SingularSystem { omega, condition: f64::INFINITY };
    let x = plus.lu().solve(&sys.b_mat).ok_or_else(singular)?;
    let y = minus.lu().solve(&sys.b_mat).ok_or_else(singular)?;
    let mut s = x * y.transpose();
    if sys.basis == Basis::PlusMinus {
        // x_full = T^-1 x_pm with T^-1 = T^T / 2.
        let t_inv = plus_minus_transform().transpose() * real(0.5);
        s = t_inv * s * t_inv.transpose();
    }
    Ok(SpectralMatrix { omega, s })
}

/// Spectral matrices over a grid.
pub fn spectrum_on_grid(sys: &LinearizedSystem, grid: &SpectrumGrid) -> Result<Vec<SpectralMatrix>> {
    grid.omegas().iter().map(|&w| intracavity_spectrum(sys, w)).collect()
}

/// `V_out(X^theta, w) = 1 + 2 gamma N(theta, w)`.
pub fn output_quadrature_variance(sm: &SpectralMatrix, sel: &QuadratureSelector, p: &ModelParams) -> f64 {
    QuadratureProbe::single(sel).variance(sm, p)
}

/// Output variance of `X_1^theta ± X_2^theta`, vacuum level 2.
pub fn combined_quadrature_variance(sm: &SpectralMatrix, band: Band, sign: Sign, theta: f64, p: &ModelParams) -> f64 {
    QuadratureProbe::combined(band, sign, theta).variance(sm, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Smaller of the two Duan combinations.
    DuanSum,
    EprProduct,
    /// `V_out(X_1^theta)`.
    SingleModeV,
}

/// Objective value at one angle.
pub fn objective_value(
    sm: &SpectralMatrix,
    objective: Objective,
    band: Band,
    theta: f64,
    p: &ModelParams,
) -> Result<f64> {
    match objective {
        Objective::SingleModeV => {
            Ok(output_quadrature_variance(sm, &QuadratureSelector::new(band, Mode::One, theta), p))
        }
        Objective::DuanSum => Ok(duan_sum(&build_cm(sm, band, theta, p)).value),
        Objective::EprProduct => epr_product(&build_cm(sm, band, theta, p)),
    }
}

const GRID_STEP_DEG: f64 = 0.25;
const REFINE_TOL: f64 = 1e-4;

/// Minimizes `objective` over `theta` in `[0, pi)`: a 0.25 degree scan, then
/// golden-section refinement to 1e-4 rad. Ties go to the smallest angle.
pub fn optimize_angle(
    sys: &LinearizedSystem,
    omega: f64,
    objective: Objective,
    band: Band,
    p: &ModelParams,
) -> Result<(f64, f64)> {
    let sm = intracavity_spectrum(sys, omega)?;
    optimize_angle_at(&sm, objective, band, p)
}

/// [`optimize_angle`] on a precomputed spectral matrix.
pub fn optimize_angle_at(sm: &SpectralMatrix, objective: Objective, band: Band, p: &ModelParams) -> Result<(f64, f64)> {
    minimize_over_angle(|theta| objective_value(sm, objective, band, theta, p))
}

/// The single angle minimizing the smallest objective value over a set of
/// frequencies, with that value.
pub fn optimize_fixed_angle(
    sms: &[SpectralMatrix],
    objective: Objective,
    band: Band,
    p: &ModelParams,
) -> Result<(f64, f64)> {
    minimize_over_angle(|theta| {
        sms.iter().try_fold(f64::INFINITY, |best, sm| Ok(best.min(objective_value(sm, objective, band, theta, p)?)))
    })
}

/// Scan of `[0, pi)` at 0.25 degrees, then golden-section refinement around
/// the best grid point. Ties go to the smallest angle.
pub fn minimize_over_angle(f: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let step = GRID_STEP_DEG.to_radians();
    let n = (180.0 / GRID_STEP_DEG).round() as usize;
    let (mut best_i, mut best) = (0, f(0.0)?);
    for i in 1..n {
        let v = f(step * i as f64)?;
        if v < best {
            best = v;
            best_i = i;
        }
    }

    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let centre = step * best_i as f64;
    let (mut lo, mut hi) = (centre - step, centre + step);
    let mut x1 = hi - golden * (hi - lo);
    let mut x2 = lo + golden * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > REFINE_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let (x, fx) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if fx < best - 1e-12 * best.abs().max(1.0) {
        Ok((wrap_angle(x, PI), fx))
    } else {
        Ok((centre, best))
    }
}

/// Equal-time intracavity moments `<dx dx^T>`, from integrating `S(w) / 2 pi`
/// over the real line after the substitution `w = s tan(phi)`, composite
/// Simpson with `n_panels` panels.
pub fn equal_time_covariance(sys: &LinearizedSystem, n_panels: usize) -> Result<Mat8> {
    let n = n_panels.max(2) + n_panels % 2;
    let ev = sys.eigenvalues()?;
    let scale = ev.iter().map(|l| l.norm()).fold(0.0, f64::max).max(1e-12);
    let diffusion = sys.diffusion();
    let h = PI / n as f64;
    let integrand = |phi: f64| -> Result<Mat8> {
        let half = FRAC_PI_2 - phi.abs();
        if half <= 0.0 {
            // S ~ B B^T / w^2 at large w.
            return Ok(diffusion * real(1.0 / scale));
        }
        let w = scale * phi.tan();
        let sec2 = 1.0 + phi.tan() * phi.tan();
        Ok(intracavity_spectrum(sys, w)?.s * real(scale * sec2))
    };
    let mut acc = Mat8::zeros();
    for i in 0..=n {
        let phi = -FRAC_PI_2 + h * i as f64;
        let wgt = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let mut val = integrand(phi)?;
        if sys.basis == Basis::PlusMinus && (i == 0 || i == n) {
            let t_inv = plus_minus_transform().transpose() * real(0.5);
            val = t_inv * val * t_inv.transpose();
        }
        acc += val * real(wgt);
    }
    Ok(acc * real(h / 3.0 / TAU))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearized::{build_drift_full, linearize_at_steady_state};
    use crate::model::{critical_pump, PhaseSpaceState};
    use nalgebra::SMatrix;
    use proptest::prelude::*;

    fn fig1(ja: f64, jb: f64) -> ModelParams {
        ModelParams { kappa: 0.01, gamma_a: 1.0, gamma_b: 1.0, j_a: ja, j_b: jb, ..Default::default() }.with_pump(480.0)
    }

    fn fig5(ratio: f64) -> ModelParams {
        let p = ModelParams {
            kappa: 0.01,
            gamma_a: 1.0,
            gamma_b: 2.0,
            j_a: 10.0,
            j_b: 2.0,
            delta_a: 10.0,
            delta_b: 2.0,
            ..Default::default()
        };
        p.with_pump(ratio * critical_pump(&p).unwrap())
    }

    fn system(p: &ModelParams) -> LinearizedSystem {
        linearize_at_steady_state(p).unwrap().1
    }

    /// Solves `A X + X A^T = D` through the Kronecker form.
    fn lyapunov(a: &Mat8, d: &Mat8) -> Mat8 {
        let mut k = SMatrix::<Complex64, 64, 64>::zeros();
        let mut rhs = SMatrix::<Complex64, 64, 1>::zeros();
        for i in 0..8 {
            for j in 0..8 {
                let row = i * 8 + j;
                rhs[row] = d[(i, j)];
                for m in 0..8 {
                    k[(row, m * 8 + j)] += a[(i, m)];
                    k[(row, i * 8 + m)] += a[(j, m)];
                }
            }
        }
        let x = k.lu().solve(&rhs).unwrap();
        Mat8::from_fn(|i, j| x[i * 8 + j])
    }

    fn max_abs(m: &Mat8) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn grid_validation() {
        let g = SpectrumGrid::default();
        assert_eq!(g.len(), 801);
        assert_eq!(g.omegas()[400], 0.0);
        assert!(g.is_symmetric(1e-12));
        assert!(SpectrumGrid::new(alloc::vec![0.0, 0.0]).is_err());
        assert!(SpectrumGrid::new(alloc::vec![1.0, 0.0]).is_err());
        assert!(SpectrumGrid::linspace(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn noiseless_system_gives_vacuum() {
        let p = fig1(1.0, 0.5).with_pump(0.0);
        let sys = build_drift_full(&p, &PhaseSpaceState::vacuum());
        for w in [-7.0, 0.0, 3.3] {
            let sm = intracavity_spectrum(&sys, w).unwrap();
            assert_eq!(sm.s, Mat8::zeros());
            for band in [Band::Fundamental, Band::Harmonic] {
                for theta in [0.0, 0.4, 2.0] {
                    for mode in [Mode::One, Mode::Two] {
                        let v = output_quadrature_variance(&sm, &QuadratureSelector::new(band, mode, theta), &p);
                        assert_eq!(v, 1.0);
                    }
                    for sign in [Sign::Plus, Sign::Minus] {
                        assert_eq!(combined_quadrature_variance(&sm, band, sign, theta, &p), 2.0);
                    }
                }
            }
        }
    }

    #[test]
    fn uncoupled_fundamental_is_squeezed_at_zero_frequency() {
        let p = fig1(0.0, 0.0);
        let sys = system(&p);
        let sm = intracavity_spectrum(&sys, 0.0).unwrap();
        let v = output_quadrature_variance(&sm, &QuadratureSelector::new(Band::Fundamental, Mode::One, 0.0), &p);
        assert!(v < 1.0, "{v}");
        assert!((v - 0.813).abs() < 1e-3, "{v}");
    }

    #[test]
    fn spectrum_decays_like_inverse_square() {
        let p = fig5(0.6);
        let sys = system(&p);
        let t1 = intracavity_spectrum(&sys, 1e3).unwrap().s.trace().norm();
        let t2 = intracavity_spectrum(&sys, 2e3).unwrap().s.trace().norm();
        assert!(t1.is_finite() && t1 > 0.0);
        assert!((t1 / t2 - 4.0).abs() < 0.05, "{}", t1 / t2);
    }

    #[test]
    fn singular_at_the_instability() {
        let mut a = Mat8::identity();
        a[(0, 0)] = c(0.0, 3.0);
        let sys = LinearizedSystem { a_mat: a, b_mat: Mat8::identity(), basis: Basis::Full };
        assert!(matches!(intracavity_spectrum(&sys, -3.0), Err(Error::SingularSystem { .. })));
        assert!(matches!(intracavity_spectrum(&sys, 3.0), Err(Error::SingularSystem { .. })));
        assert!(intracavity_spectrum(&sys, 1.0).is_ok());
    }

    #[test]
    fn plus_minus_basis_maps_back() {
        let p = fig5(0.7);
        let full = system(&p);
        let pm = full.to_plus_minus();
        for w in [-4.0, 0.0, 2.5] {
            let a = intracavity_spectrum(&full, w).unwrap();
            let b = intracavity_spectrum(&pm, w).unwrap();
            assert!(max_abs(&(a.s - b.s)) < 1e-12 * max_abs(&a.s).max(1.0));
        }
    }

    #[test]
    fn pi_periodicity_and_real_variances() {
        let p = fig1(2.0, 1.0);
        let sys = system(&p);
        for w in [-5.0, -0.5, 0.0, 1.2, 9.0] {
            let sm = intracavity_spectrum(&sys, w).unwrap();
            for theta in [0.0, 0.3, 1.1, 2.9] {
                for band in [Band::Fundamental, Band::Harmonic] {
                    let sel = QuadratureSelector::new(band, Mode::Two, theta);
                    let flipped = QuadratureSelector::new(band, Mode::Two, theta + PI);
                    let (a, b) =
                        (output_quadrature_variance(&sm, &sel, &p), output_quadrature_variance(&sm, &flipped, &p));
                    assert!((a - b).abs() < 1e-12, "{a} {b}");
                    assert!(QuadratureProbe::single(&sel).imaginary_residual(&sm).abs() < 1e-10);
                    let comb = QuadratureProbe::combined(band, Sign::Minus, theta);
                    assert!(comb.imaginary_residual(&sm).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn uncertainty_product_fig1() {
        let p = fig1(2.0, 0.5);
        let sys = system(&p);
        for i in 0..81 {
            let w = -20.0 + 0.5 * i as f64;
            let sm = intracavity_spectrum(&sys, w).unwrap();
            for j in 0..36 {
                let sel = QuadratureSelector::new(Band::Fundamental, Mode::One, j as f64 * 5f64.to_radians());
                let v =
                    output_quadrature_variance(&sm, &sel, &p) * output_quadrature_variance(&sm, &sel.conjugate(), &p);
                assert!(v >= 1.0 - 1e-8, "{w} {j} {v}");
            }
        }
    }

    #[test]
    fn fig5_combined_variance_violates_near_threshold() {
        let p = fig5(0.95);
        let sys = system(&p);
        let best = SpectrumGrid::default()
            .omegas()
            .iter()
            .map(|&w| {
                let sm = intracavity_spectrum(&sys, w).unwrap();
                combined_quadrature_variance(&sm, Band::Fundamental, Sign::Plus, 0.0, &p)
                    + combined_quadrature_variance(&sm, Band::Fundamental, Sign::Minus, FRAC_PI_2, &p)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best < 4.0, "{best}");
    }

    #[test]
    fn swap_symmetry() {
        let p = fig5(0.8);
        let sys = system(&p);
        let sm = intracavity_spectrum(&sys, 1.7).unwrap();
        let swap = |w: &Vec8| -> Vec8 {
            let mut o = *w;
            for (i, j) in [(0, 2), (1, 3), (4, 6), (5, 7)] {
                o.swap_rows(i, j);
            }
            o
        };
        for band in [Band::Fundamental, Band::Harmonic] {
            for theta in [0.0, 0.7] {
                let v1 = output_quadrature_variance(&sm, &QuadratureSelector::new(band, Mode::One, theta), &p);
                let v2 = output_quadrature_variance(&sm, &QuadratureSelector::new(band, Mode::Two, theta), &p);
                assert!((v1 - v2).abs() < 1e-10);
                for sign in [Sign::Plus, Sign::Minus] {
                    let probe = QuadratureProbe::combined(band, sign, theta);
                    let a = probe.variance(&sm, &p);
                    let swapped = QuadratureProbe { weights: swap(&probe.weights), ..probe.clone() };
                    assert!((a - swapped.variance(&sm, &p)).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn vacuum_optimum_is_zero_angle() {
        let p = fig1(1.0, 1.0).with_pump(0.0);
        let sys = build_drift_full(&p, &PhaseSpaceState::vacuum());
        for obj in [Objective::DuanSum, Objective::EprProduct, Objective::SingleModeV] {
            let (theta, v) = optimize_angle(&sys, 0.0, obj, Band::Fundamental, &p).unwrap();
            assert_eq!(theta, 0.0);
            let expected = match obj {
                Objective::DuanSum => 4.0,
                _ => 1.0,
            };
            assert_eq!(v, expected);
        }
    }

    #[test]
    fn optimized_angle_is_locally_optimal() {
        let p = fig1(1.0, 1.0);
        let sys = system(&p);
        for obj in [Objective::DuanSum, Objective::EprProduct, Objective::SingleModeV] {
            for band in [Band::Fundamental, Band::Harmonic] {
                let sm = intracavity_spectrum(&sys, 0.8).unwrap();
                let (theta, v) = optimize_angle_at(&sm, obj, band, &p).unwrap();
                assert!((0.0..PI).contains(&theta));
                for d in [-1.0f64, 1.0] {
                    let other = objective_value(&sm, obj, band, theta + d.to_radians(), &p).unwrap();
                    assert!(v <= other + 1e-12, "{obj:?} {band:?}: {v} vs {other}");
                }
            }
        }
    }

    #[test]
    fn fig2_duan_violation_at_optimal_angle() {
        let p = fig1(1.0, 1.0);
        let sys = system(&p);
        let best = (0..41)
            .map(|i| optimize_angle(&sys, -10.0 + 0.5 * i as f64, Objective::DuanSum, Band::Fundamental, &p).unwrap().1)
            .fold(f64::INFINITY, f64::min);
        assert!(best < 4.0, "{best}");
    }

    #[test]
    fn equal_time_moments_match_lyapunov() {
        for p in [fig5(0.4), fig1(2.0, 1.0), fig1(0.0, 0.0)] {
            let sys = system(&p);
            let oracle = lyapunov(&sys.a_mat, &sys.diffusion());
            let quad = equal_time_covariance(&sys, 4096).unwrap();
            let err = max_abs(&(quad - oracle)) / max_abs(&oracle);
            assert!(err < 1e-8, "{err}");
            let pm = equal_time_covariance(&sys.to_plus_minus(), 4096).unwrap();
            assert!(max_abs(&(pm - oracle)) / max_abs(&oracle) < 1e-8);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn uncertainty_product_random_draws(
            gb in 0.3f64..3.0,
            ja in 0.0f64..4.0,
            jb in 0.0f64..4.0,
            ratio in 0.05f64..0.9,
            w in -15.0f64..15.0,
            theta in 0.0f64..PI,
        ) {
            let p = ModelParams { kappa: 0.01, gamma_a: 1.0, gamma_b: gb, j_a: ja, j_b: jb, ..Default::default() };
            let p = p.with_pump(ratio * critical_pump(&p).unwrap());
            let (_, sys) = linearize_at_steady_state(&p).unwrap();
            let sm = intracavity_spectrum(&sys, w).unwrap();
            for band in [Band::Fundamental, Band::Harmonic] {
                let sel = QuadratureSelector::new(band, Mode::One, theta);
                let v = output_quadrature_variance(&sm, &sel, &p);
                let u = output_quadrature_variance(&sm, &sel.conjugate(), &p);
                prop_assert!(v >= 0.0);
                prop_assert!(v * u >= 1.0 - 1e-8, "{} {}", v, u);
            }
        }
    }
}
