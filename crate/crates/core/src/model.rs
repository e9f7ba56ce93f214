//! Dimer parameters, the noise-free equations of motion and their steady states.

use num_complex::Complex64;
// libm-backed float methods when std is absent.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{c, Mat8, Vec8, I};

/// Physical parameters of two evanescently coupled intracavity SHG cavities.
///
/// Rates are in units of `gamma_a` by convention; nothing here enforces it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Effective chi(2) nonlinearity.
    pub kappa: f64,
    /// Cavity damping at the fundamental.
    pub gamma_a: f64,
    /// Cavity damping at the harmonic.
    pub gamma_b: f64,
    /// Evanescent coupling at the fundamental.
    pub j_a: f64,
    /// Evanescent coupling at the harmonic.
    pub j_b: f64,
    pub delta_a: f64,
    pub delta_b: f64,
    /// Coherent pump of cavity 1.
    pub eps1: Complex64,
    /// Coherent pump of cavity 2.
    pub eps2: Complex64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            kappa: 0.01,
            gamma_a: 1.0,
            gamma_b: 1.0,
            j_a: 0.0,
            j_b: 0.0,
            delta_a: 0.0,
            delta_b: 0.0,
            eps1: c(0.0, 0.0),
            eps2: c(0.0, 0.0),
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, reason: "must be finite and > 0" })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, reason: "must be finite and >= 0" })
    }
}

fn finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, reason: "must be finite" })
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        // kappa = 0 is the linear-cavity limit.
        non_negative("kappa", self.kappa)?;
        positive("gamma_a", self.gamma_a)?;
        positive("gamma_b", self.gamma_b)?;
        non_negative("j_a", self.j_a)?;
        non_negative("j_b", self.j_b)?;
        finite("delta_a", self.delta_a)?;
        finite("delta_b", self.delta_b)?;
        finite("eps1.re", self.eps1.re)?;
        finite("eps1.im", self.eps1.im)?;
        finite("eps2.re", self.eps2.re)?;
        finite("eps2.im", self.eps2.im)?;
        Ok(())
    }

    /// Both cavities pumped with the same real amplitude.
    pub fn with_pump(mut self, eps: f64) -> Self {
        self.eps1 = c(eps, 0.0);
        self.eps2 = c(eps, 0.0);
        self
    }

    /// Largest rate in the linear part of the dynamics.
    pub fn max_rate(&self) -> f64 {
        [self.gamma_a, self.gamma_b, self.j_a, self.j_b, self.delta_a.abs(), self.delta_b.abs()]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn pump_scale(&self) -> f64 {
        self.eps1.norm().max(self.eps2.norm()).max(1.0)
    }

    pub fn gamma(&self, band: Band) -> f64 {
        match band {
            Band::Fundamental => self.gamma_a,
            Band::Harmonic => self.gamma_b,
        }
    }
}

/// Fundamental (`a` modes) or second harmonic (`b` modes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Band {
    Fundamental,
    Harmonic,
}

/// The eight positive-P amplitudes, ordered as the fluctuation vector
/// `(a1, a1+, a2, a2+, b1, b1+, b2, b2+)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseSpaceState {
    pub a1: Complex64,
    pub a1p: Complex64,
    pub a2: Complex64,
    pub a2p: Complex64,
    pub b1: Complex64,
    pub b1p: Complex64,
    pub b2: Complex64,
    pub b2p: Complex64,
}

pub const VARIABLE_NAMES: [&str; 8] = ["a1", "a1p", "a2", "a2p", "b1", "b1p", "b2", "b2p"];

impl PhaseSpaceState {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn to_array(&self) -> [Complex64; 8] {
        [self.a1, self.a1p, self.a2, self.a2p, self.b1, self.b1p, self.b2, self.b2p]
    }

    pub fn from_array(x: [Complex64; 8]) -> Self {
        Self { a1: x[0], a1p: x[1], a2: x[2], a2p: x[3], b1: x[4], b1p: x[5], b2: x[6], b2p: x[7] }
    }

    pub fn max_norm(&self) -> f64 {
        self.to_array().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest violation of `x+ = conj(x)` over the four pairs.
    pub fn conjugacy_defect(&self) -> f64 {
        [(self.a1, self.a1p), (self.a2, self.a2p), (self.b1, self.b1p), (self.b2, self.b2p)]
            .iter()
            .map(|(x, xp)| (x.conj() - xp).norm())
            .fold(0.0, f64::max)
    }

    pub fn fundamental_intensities(&self) -> (f64, f64) {
        (self.a1.norm_sqr(), self.a2.norm_sqr())
    }

    pub fn harmonic_intensities(&self) -> (f64, f64) {
        (self.b1.norm_sqr(), self.b2.norm_sqr())
    }
}

/// Noise-free right-hand side of the positive-P equations.
pub fn drift(p: &ModelParams, x: &PhaseSpaceState) -> PhaseSpaceState {
    let k = p.kappa;
    let da = c(p.gamma_a, p.delta_a);
    let dap = c(p.gamma_a, -p.delta_a);
    let db = c(p.gamma_b, p.delta_b);
    let dbp = c(p.gamma_b, -p.delta_b);
    let ija = I * p.j_a;
    let ijb = I * p.j_b;
    PhaseSpaceState {
        a1: p.eps1 - da * x.a1 + k * x.a1p * x.b1 + ija * x.a2,
        a1p: p.eps1.conj() - dap * x.a1p + k * x.a1 * x.b1p - ija * x.a2p,
        a2: p.eps2 - da * x.a2 + k * x.a2p * x.b2 + ija * x.a1,
        a2p: p.eps2.conj() - dap * x.a2p + k * x.a2 * x.b2p - ija * x.a1p,
        b1: -db * x.b1 - 0.5 * k * x.a1 * x.a1 + ijb * x.b2,
        b1p: -dbp * x.b1p - 0.5 * k * x.a1p * x.a1p - ijb * x.b2p,
        b2: -db * x.b2 - 0.5 * k * x.a2 * x.a2 + ijb * x.b1,
        b2p: -dbp * x.b2p - 0.5 * k * x.a2p * x.a2p - ijb * x.b1p,
    }
}

/// Jacobian of [`drift`] with every amplitude treated as independent.
pub fn drift_jacobian(p: &ModelParams, x: &PhaseSpaceState) -> Mat8 {
    let k = p.kappa;
    let mut j = Mat8::zeros();
    let da = c(p.gamma_a, p.delta_a);
    let dap = c(p.gamma_a, -p.delta_a);
    let db = c(p.gamma_b, p.delta_b);
    let dbp = c(p.gamma_b, -p.delta_b);
    let ija = I * p.j_a;
    let ijb = I * p.j_b;

    j[(0, 0)] = -da;
    j[(0, 1)] = k * x.b1;
    j[(0, 2)] = ija;
    j[(0, 4)] = k * x.a1p;

    j[(1, 1)] = -dap;
    j[(1, 0)] = k * x.b1p;
    j[(1, 3)] = -ija;
    j[(1, 5)] = k * x.a1;

    j[(2, 2)] = -da;
    j[(2, 3)] = k * x.b2;
    j[(2, 0)] = ija;
    j[(2, 6)] = k * x.a2p;

    j[(3, 3)] = -dap;
    j[(3, 2)] = k * x.b2p;
    j[(3, 1)] = -ija;
    j[(3, 7)] = k * x.a2;

    j[(4, 4)] = -db;
    j[(4, 0)] = -k * x.a1;
    j[(4, 6)] = ijb;

    j[(5, 5)] = -dbp;
    j[(5, 1)] = -k * x.a1p;
    j[(5, 7)] = -ijb;

    j[(6, 6)] = -db;
    j[(6, 2)] = -k * x.a2;
    j[(6, 4)] = ijb;

    j[(7, 7)] = -dbp;
    j[(7, 3)] = -k * x.a2p;
    j[(7, 5)] = -ijb;
    j
}

/// Self-pulsing threshold of a single uncoupled, resonant SHG cavity.
pub fn critical_pump(p: &ModelParams) -> Result<f64> {
    p.validate()?;
    positive("kappa", p.kappa)?;
    Ok(critical_pump_for(p.kappa, p.gamma_a, p.gamma_b))
}

pub fn critical_pump_for(kappa: f64, gamma_a: f64, gamma_b: f64) -> f64 {
    (2.0 * gamma_a + gamma_b) / kappa * (2.0 * gamma_b * (gamma_a + gamma_b)).sqrt()
}

pub const DEFAULT_STEADY_TOL: f64 = 1e-12;
pub const DEFAULT_STEADY_T_MAX: f64 = 1.0e4;

fn max_norm8(x: &PhaseSpaceState) -> f64 {
    x.max_norm()
}

fn axpy(x: &PhaseSpaceState, h: f64, k: &PhaseSpaceState) -> PhaseSpaceState {
    let (a, b) = (x.to_array(), k.to_array());
    let mut out = [c(0.0, 0.0); 8];
    for i in 0..8 {
        out[i] = a[i] + h * b[i];
    }
    PhaseSpaceState::from_array(out)
}

fn rk4_step(p: &ModelParams, x: &PhaseSpaceState, h: f64) -> PhaseSpaceState {
    let k1 = drift(p, x);
    let k2 = drift(p, &axpy(x, 0.5 * h, &k1));
    let k3 = drift(p, &axpy(x, 0.5 * h, &k2));
    let k4 = drift(p, &axpy(x, h, &k3));
    let (x, k1, k2, k3, k4) = (x.to_array(), k1.to_array(), k2.to_array(), k3.to_array(), k4.to_array());
    let mut out = [c(0.0, 0.0); 8];
    for i in 0..8 {
        out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    PhaseSpaceState::from_array(out)
}

/// Newton iterations on `drift(x) = 0`, returning the best iterate seen.
fn newton_polish(p: &ModelParams, x0: PhaseSpaceState) -> (PhaseSpaceState, f64) {
    let mut best = x0;
    let mut best_res = max_norm8(&drift(p, &x0));
    let mut x = x0;
    for _ in 0..8 {
        let f = Vec8::from(drift(p, &x).to_array());
        let jac = drift_jacobian(p, &x);
        let Some(step) = jac.lu().solve(&(-f)) else { break };
        let mut arr = x.to_array();
        for (a, s) in arr.iter_mut().zip(step.iter()) {
            *a += s;
        }
        x = PhaseSpaceState::from_array(arr);
        let res = max_norm8(&drift(p, &x));
        if res < best_res {
            best = x;
            best_res = res;
        } else {
            break;
        }
    }
    (best, best_res)
}

/// Relax the noise-free equations from the vacuum with fixed-step RK4 and
/// polish the settled state with Newton steps.
///
/// Convergence is declared when the max-norm of the time derivative drops
/// below `tol * pump_scale`, where `pump_scale = max(1, |eps1|, |eps2|)`
/// sets the size of the terms being cancelled.
pub fn steady_state_numeric(p: &ModelParams, tol: f64, t_max: f64) -> Result<PhaseSpaceState> {
    p.validate()?;
    if !(tol > 0.0 && t_max > 0.0) {
        return Err(Error::PreconditionViolation(alloc::format!("tol ({tol}) and t_max ({t_max}) must be positive")));
    }
    let h = 0.01 / p.max_rate();
    let scale = p.pump_scale();
    let target = tol * scale;
    let polish_gate = (1e-9 * scale).max(target);
    let blowup = 1e6 * (1.0 + scale / p.gamma_a);
    let check_every = 64usize;

    let mut x = PhaseSpaceState::vacuum();
    let mut t = 0.0;
    let mut residual = max_norm8(&drift(p, &x));
    loop {
        if residual < polish_gate {
            if residual < target {
                return Ok(x);
            }
            let (polished, res) = newton_polish(p, x);
            if res < target {
                return Ok(polished);
            }
        }
        if t >= t_max {
            return Err(Error::NonConvergence { t_max, residual });
        }
        for _ in 0..check_every {
            x = rk4_step(p, &x, h);
        }
        t += h * check_every as f64;
        let magnitude = x.max_norm();
        if !magnitude.is_finite() || magnitude > blowup {
            return Err(Error::Unstable { t, magnitude });
        }
        residual = max_norm8(&drift(p, &x));
    }
}

/// Closed-form steady state for `delta_a = j_a`, `delta_b = j_b` and equal
/// real pumps, where `a1 = a2` and `b1 = b2` are real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricSteady {
    /// `a1 + a2`
    pub alpha_plus: f64,
    /// `b1 + b2`
    pub beta_plus: f64,
    /// Cube-root auxiliary of the Cardano solution (0 when unpumped).
    pub chi_aux: f64,
}

impl SymmetricSteady {
    /// Per-cavity amplitudes; the difference variables vanish.
    pub fn to_state(&self) -> PhaseSpaceState {
        let a = c(0.5 * self.alpha_plus, 0.0);
        let b = c(0.5 * self.beta_plus, 0.0);
        PhaseSpaceState { a1: a, a1p: a, a2: a, a2p: a, b1: b, b1p: b, b2: b, b2p: b }
    }

    /// `kappa^2/(8 gamma_b) a^3 + gamma_a a - 2 eps`
    pub fn cubic_residual(&self, p: &ModelParams, eps: f64) -> f64 {
        let a = self.alpha_plus;
        p.kappa * p.kappa / (8.0 * p.gamma_b) * a * a * a + p.gamma_a * a - 2.0 * eps
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Checks the symmetric-detuned preconditions and returns the common pump.
pub fn symmetric_pump(p: &ModelParams) -> Result<f64> {
    p.validate()?;
    if !close(p.delta_a, p.j_a) {
        return Err(Error::PreconditionViolation(alloc::format!(
            "symmetric solution needs delta_a = j_a (got {} vs {})",
            p.delta_a,
            p.j_a
        )));
    }
    if !close(p.delta_b, p.j_b) {
        return Err(Error::PreconditionViolation(alloc::format!(
            "symmetric solution needs delta_b = j_b (got {} vs {})",
            p.delta_b,
            p.j_b
        )));
    }
    if p.eps1 != p.eps2 {
        return Err(Error::PreconditionViolation(alloc::format!(
            "symmetric solution needs eps1 = eps2 (got {} vs {})",
            p.eps1,
            p.eps2
        )));
    }
    if p.eps1.im != 0.0 || p.eps1.re < 0.0 {
        return Err(Error::PreconditionViolation(alloc::format!(
            "symmetric solution needs a real non-negative pump (got {})",
            p.eps1
        )));
    }
    Ok(p.eps1.re)
}

pub fn steady_state_symmetric(p: &ModelParams) -> Result<SymmetricSteady> {
    let eps = symmetric_pump(p)?;
    if eps == 0.0 {
        return Ok(SymmetricSteady { alpha_plus: 0.0, beta_plus: 0.0, chi_aux: 0.0 });
    }
    let (k, ga, gb) = (p.kappa, p.gamma_a, p.gamma_b);
    if k == 0.0 {
        return Ok(SymmetricSteady { alpha_plus: 2.0 * eps / ga, beta_plus: 0.0, chi_aux: 0.0 });
    }
    let k2 = k * k;
    let k4 = k2 * k2;
    let k6 = k4 * k2;
    let k8 = k4 * k4;
    let lin = 9.0 * k4 * gb * eps;
    let disc = (24.0 * k6 * ga * ga * ga * gb * gb * gb + 81.0 * k8 * gb * gb * eps * eps).sqrt();
    let chi = (lin + disc).cbrt();

    // alpha_plus = u - v with u = 2 chi / (3^(2/3) k^2) and v = 4 ga gb / (3^(1/3) chi).
    // Since u^3 - v^3 = 16 gb eps / k^2 exactly, dividing by u^2 + uv + v^2 gives
    // the same root without the cancellation of u - v at weak pumping.
    let u = 2.0 * chi / (3f64.powf(2.0 / 3.0) * k2);
    let v = 4.0 * ga * gb / (3f64.cbrt() * chi);
    let alpha_plus = (16.0 * gb * eps / k2) / (u * u + u * v + v * v);
    let beta_plus = -k / (4.0 * gb) * alpha_plus * alpha_plus;
    Ok(SymmetricSteady { alpha_plus, beta_plus, chi_aux: chi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn base(kappa: f64, ga: f64, gb: f64) -> ModelParams {
        ModelParams { kappa, gamma_a: ga, gamma_b: gb, ..Default::default() }
    }

    /// Plain bisection on the symmetric cubic.
    fn cubic_root_bisect(p: &ModelParams, eps: f64) -> f64 {
        let f = |a: f64| p.kappa * p.kappa / (8.0 * p.gamma_b) * a * a * a + p.gamma_a * a - 2.0 * eps;
        let (mut lo, mut hi) = (0.0, 2.0 * eps / p.gamma_a);
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn critical_pump_values() {
        assert_relative_eq!(critical_pump(&base(0.01, 1.0, 1.0)).unwrap(), 600.0, max_relative = 1e-14);
        assert_relative_eq!(critical_pump(&base(0.01, 1.0, 2.0)).unwrap(), 400.0 * 12f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(critical_pump(&base(0.02, 1.0, 1.0)).unwrap(), 300.0, max_relative = 1e-14);
        assert_relative_eq!(critical_pump(&base(0.01, 1.0, 2.0)).unwrap(), 1385.6406460551018, max_relative = 1e-12);
    }

    #[test]
    fn validation_names_offender() {
        let mut p = base(0.01, 1.0, 1.0);
        p.gamma_b = -1.0;
        match p.validate() {
            Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "gamma_b"),
            other => panic!("{other:?}"),
        }
        p.gamma_b = 1.0;
        p.j_a = f64::NAN;
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { name: "j_a", .. })));
        p.j_a = 0.0;
        p.kappa = 0.0;
        assert!(matches!(critical_pump(&p), Err(Error::InvalidParameter { name: "kappa", .. })));
        assert!(p.validate().is_ok());
        p.kappa = -0.1;
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { name: "kappa", .. })));
    }

    #[test]
    fn unpumped_steady_state_is_vacuum() {
        let mut p = base(0.01, 1.0, 1.0);
        p.j_a = 3.0;
        p.j_b = 0.5;
        p.delta_a = -2.0;
        let x = steady_state_numeric(&p, DEFAULT_STEADY_TOL, DEFAULT_STEADY_T_MAX).unwrap();
        assert_eq!(x, PhaseSpaceState::vacuum());
        let s = steady_state_symmetric(&base(0.01, 1.0, 2.0)).unwrap();
        assert_eq!((s.alpha_plus, s.beta_plus), (0.0, 0.0));
    }

    #[test]
    fn uncoupled_relaxation_matches_algebraic_root() {
        let p = base(0.01, 1.0, 1.0).with_pump(0.8 * 600.0);
        let x = steady_state_numeric(&p, DEFAULT_STEADY_TOL, DEFAULT_STEADY_T_MAX).unwrap();
        // Single cavity: eps - ga a - k^2 a^3 / (2 gb) = 0, b = -k a^2 / (2 gb).
        let eps = 480.0;
        let g = |a: f64| eps - a - 0.01 * 0.01 * a * a * a / 2.0;
        let (mut lo, mut hi) = (0.0, eps);
        for _ in 0..300 {
            let m = 0.5 * (lo + hi);
            if g(m) > 0.0 {
                lo = m
            } else {
                hi = m
            }
        }
        let a = 0.5 * (lo + hi);
        let b = -0.01 * a * a / 2.0;
        assert!((x.a1 - c(a, 0.0)).norm() < 1e-8, "{} vs {a}", x.a1);
        assert!((x.a2 - c(a, 0.0)).norm() < 1e-8);
        assert!((x.b1 - c(b, 0.0)).norm() < 1e-8);
        assert!(x.b1.re < 0.0);
        assert!(max_norm8(&drift(&p, &x)) < 1e-8);
        assert!(x.conjugacy_defect() < 1e-9);
    }

    #[test]
    fn numeric_matches_symmetric_closed_form() {
        let mut p = base(0.01, 1.0, 2.0);
        p.j_a = 10.0;
        p.delta_a = 10.0;
        p.j_b = 2.0;
        p.delta_b = 2.0;
        let ec = critical_pump(&p).unwrap();
        for ratio in [0.1, 0.4, 0.8] {
            let p = p.with_pump(ratio * ec);
            let x = steady_state_numeric(&p, DEFAULT_STEADY_TOL, DEFAULT_STEADY_T_MAX).unwrap();
            let s = steady_state_symmetric(&p).unwrap();
            assert!(((x.a1 + x.a2) - c(s.alpha_plus, 0.0)).norm() < 1e-8, "ratio {ratio}");
            assert!(((x.b1 + x.b2) - c(s.beta_plus, 0.0)).norm() < 1e-8);
            assert!((x.a1 - x.a2).norm() < 1e-8);
            assert!(x.conjugacy_defect() < 1e-9);
        }
    }

    #[test]
    fn symmetric_matches_bisection() {
        let p = base(0.01, 1.0, 2.0);
        let ec = critical_pump(&p).unwrap();
        for eps in [1.0, 0.8 * ec, 1e-3 * ec, 0.99 * ec] {
            let s = steady_state_symmetric(&p.with_pump(eps)).unwrap();
            let oracle = cubic_root_bisect(&p, eps);
            assert_relative_eq!(s.alpha_plus, oracle, max_relative = 1e-10);
            assert!(s.cubic_residual(&p, eps).abs() < 1e-9 * (2.0 * eps).max(1.0));
            assert_relative_eq!(s.beta_plus, -0.01 / 8.0 * s.alpha_plus * s.alpha_plus, max_relative = 1e-14);
        }
        // Weak pumping: a+ ~ 2 eps / ga less a small cubic correction.
        let s = steady_state_symmetric(&p.with_pump(1.0)).unwrap();
        let first_order = 0.01 * 0.01 * 8.0 / (8.0 * 2.0 * 1.0);
        assert!((2.0 - s.alpha_plus - first_order).abs() < 1e-8);
    }

    #[test]
    fn symmetric_preconditions() {
        let mut p = base(0.01, 1.0, 1.0).with_pump(10.0);
        p.j_a = 1.0;
        assert!(matches!(steady_state_symmetric(&p), Err(Error::PreconditionViolation(_))));
        p.delta_a = 1.0;
        assert!(steady_state_symmetric(&p).is_ok());
        p.eps2 = c(11.0, 0.0);
        assert!(matches!(steady_state_symmetric(&p), Err(Error::PreconditionViolation(_))));
        p.eps2 = c(10.0, 1.0);
        p.eps1 = c(10.0, 1.0);
        assert!(matches!(steady_state_symmetric(&p), Err(Error::PreconditionViolation(_))));
    }

    #[test]
    fn short_horizon_reports_non_convergence() {
        let p = base(0.01, 1.0, 1.0).with_pump(0.5 * 600.0);
        let r = steady_state_numeric(&p, DEFAULT_STEADY_TOL, 1.0);
        assert!(matches!(r, Err(Error::NonConvergence { .. })), "{r:?}");
    }

    #[test]
    fn above_threshold_relaxation_stays_real() {
        // Real pumps keep the relaxation on the real subspace, where the
        // self-pulsing mode is never excited; stability is judged separately.
        let p = base(0.01, 1.0, 1.0).with_pump(1.05 * 600.0);
        let x = steady_state_numeric(&p, DEFAULT_STEADY_TOL, DEFAULT_STEADY_T_MAX).unwrap();
        assert_eq!(x.a1.im, 0.0);
        assert!(max_norm8(&drift(&p, &x)) < 1e-12 * 630.0);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut p = base(0.02, 1.0, 0.7);
        p.j_a = 0.6;
        p.j_b = 0.3;
        p.delta_a = -0.4;
        p.delta_b = 0.9;
        p.eps1 = c(3.0, 1.0);
        p.eps2 = c(-1.0, 2.0);
        let x = PhaseSpaceState::from_array([
            c(1.0, 2.0),
            c(0.5, -1.0),
            c(-3.0, 0.2),
            c(0.1, 0.1),
            c(2.0, -2.0),
            c(-0.3, 1.1),
            c(0.7, 0.7),
            c(1.5, -0.4),
        ]);
        let jac = drift_jacobian(&p, &x);
        let h = 1e-6;
        for col in 0..8 {
            let mut xp = x.to_array();
            let mut xm = x.to_array();
            xp[col] += h;
            xm[col] -= h;
            let fp = drift(&p, &PhaseSpaceState::from_array(xp)).to_array();
            let fm = drift(&p, &PhaseSpaceState::from_array(xm)).to_array();
            for row in 0..8 {
                let fd = (fp[row] - fm[row]) / (2.0 * h);
                assert!((fd - jac[(row, col)]).norm() < 1e-7, "({row},{col})");
            }
        }
    }
}
