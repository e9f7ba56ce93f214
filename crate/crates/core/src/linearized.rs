//! Drift and diffusion matrices of the linearized fluctuations, with
//! eigenvalue-based stability classification.
//!
//! Fluctuations obey `d(dx) = -A dx dt + B dW`, so a steady state is stable
//! when every eigenvalue of `A` has a positive real part.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c, real, Mat8, I};
use crate::model::{
    self, critical_pump, steady_state_numeric, steady_state_symmetric, ModelParams, PhaseSpaceState, SymmetricSteady,
};

/// Ordering of the fluctuation vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// `(da1, da1+, da2, da2+, db1, db1+, db2, db2+)`
    Full,
    /// `(da+, da+^+, da-, da-^+, db+, db+^+, db-, db-^+)` with `x± = x1 ± x2`.
    PlusMinus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedSystem {
    /// Drift matrix `A`.
    pub a_mat: Mat8,
    /// Noise matrix `B`; the diffusion is `B B^T`.
    pub b_mat: Mat8,
    pub basis: Basis,
}

impl LinearizedSystem {
    pub fn diffusion(&self) -> Mat8 {
        self.b_mat * self.b_mat.transpose()
    }

    pub fn eigenvalues(&self) -> Result<[Complex64; 8]> {
        linalg::eigenvalues(&self.a_mat)
    }

    /// Exact change of variables `x_pm = T x` of a full-basis system.
    pub fn to_plus_minus(&self) -> LinearizedSystem {
        match self.basis {
            Basis::PlusMinus => self.clone(),
            Basis::Full => {
                let t = plus_minus_transform();
                let t_inv = t.transpose() * real(0.5);
                LinearizedSystem { a_mat: t * self.a_mat * t_inv, b_mat: t * self.b_mat, basis: Basis::PlusMinus }
            }
        }
    }
}

/// `T` with `x_pm = T x_full`; `T^-1 = T^T / 2`.
pub fn plus_minus_transform() -> Mat8 {
    let mut t = Mat8::zeros();
    for band in 0..2 {
        let o = 4 * band;
        t[(o, o)] = real(1.0);
        t[(o, o + 2)] = real(1.0);
        t[(o + 1, o + 1)] = real(1.0);
        t[(o + 1, o + 3)] = real(1.0);
        t[(o + 2, o)] = real(1.0);
        t[(o + 2, o + 2)] = real(-1.0);
        t[(o + 3, o + 1)] = real(1.0);
        t[(o + 3, o + 3)] = real(-1.0);
    }
    t
}

/// Full 8x8 drift and noise matrices about a steady state.
pub fn build_drift_full(p: &ModelParams, ss: &PhaseSpaceState) -> LinearizedSystem {
    let k = p.kappa;
    let (ga, gb) = (p.gamma_a, p.gamma_b);
    let (ja, jb) = (p.j_a, p.j_b);
    let (da, db) = (p.delta_a, p.delta_b);
    let mut a = Mat8::zeros();

    // A_aa
    a[(0, 0)] = c(ga, da);
    a[(0, 1)] = -k * ss.b1;
    a[(0, 2)] = -I * ja;
    a[(1, 0)] = -k * ss.b1.conj();
    a[(1, 1)] = c(ga, -da);
    a[(1, 3)] = I * ja;
    a[(2, 0)] = -I * ja;
    a[(2, 2)] = c(ga, da);
    a[(2, 3)] = -k * ss.b2;
    a[(3, 1)] = I * ja;
    a[(3, 2)] = -k * ss.b2.conj();
    a[(3, 3)] = c(ga, -da);

    // A_ba below the diagonal, -A_ba^* above it.
    let aba = [k * ss.a1, k * ss.a1.conj(), k * ss.a2, k * ss.a2.conj()];
    for (i, v) in aba.iter().enumerate() {
        a[(4 + i, i)] = *v;
        a[(i, 4 + i)] = -v.conj();
    }

    // A_bb
    a[(4, 4)] = c(gb, db);
    a[(4, 6)] = -I * jb;
    a[(5, 5)] = c(gb, -db);
    a[(5, 7)] = I * jb;
    a[(6, 4)] = -I * jb;
    a[(6, 6)] = c(gb, db);
    a[(7, 5)] = I * jb;
    a[(7, 7)] = c(gb, -db);

    let mut b = Mat8::zeros();
    let noise = [ss.b1, ss.b1.conj(), ss.b2, ss.b2.conj()];
    for (i, beta) in noise.iter().enumerate() {
        b[(i, i)] = linalg::principal_sqrt(k * beta);
    }
    LinearizedSystem { a_mat: a, b_mat: b, basis: Basis::Full }
}

/// The reduced sum/difference system for the symmetric detuned case, in the
/// closed form quoted alongside the analytic eigenvalues.
///
/// The difference-mode rows of this form carry only the detuned damping
/// `gamma ± 2iJ`; the exact change of variables of [`build_drift_full`]
/// additionally couples `da-` to `da-^+` (through `beta+`) and to `db-`
/// (through `alpha+`). Use [`LinearizedSystem::to_plus_minus`] for that.
pub fn build_pm_system(p: &ModelParams, sym: &SymmetricSteady) -> Result<LinearizedSystem> {
    model::symmetric_pump(p)?;
    let k = p.kappa;
    let (ga, gb) = (p.gamma_a, p.gamma_b);
    let ap = real(sym.alpha_plus);
    let bp = real(sym.beta_plus);
    let half = 0.5 * k;
    let mut a = Mat8::zeros();
    a[(0, 0)] = real(ga);
    a[(0, 1)] = -half * bp;
    a[(0, 4)] = -half * ap.conj();
    a[(1, 0)] = -half * bp.conj();
    a[(1, 1)] = real(ga);
    a[(1, 5)] = -half * ap;
    a[(2, 2)] = c(ga, 2.0 * p.j_a);
    a[(3, 3)] = c(ga, -2.0 * p.j_a);
    a[(4, 0)] = half * ap;
    a[(4, 4)] = real(gb);
    a[(5, 1)] = half * ap.conj();
    a[(5, 5)] = real(gb);
    a[(6, 6)] = c(gb, 2.0 * p.j_b);
    a[(7, 7)] = c(gb, -2.0 * p.j_b);

    let s = linalg::principal_sqrt(half * bp);
    let sc = linalg::principal_sqrt(half * bp.conj());
    let mut b = Mat8::zeros();
    b[(0, 0)] = s;
    b[(0, 2)] = s;
    b[(1, 1)] = sc;
    b[(1, 3)] = sc;
    b[(2, 0)] = s;
    b[(2, 2)] = -s;
    b[(3, 1)] = sc;
    b[(3, 3)] = -sc;
    Ok(LinearizedSystem { a_mat: a, b_mat: b, basis: Basis::PlusMinus })
}

/// Closed-form eigenvalues of [`build_pm_system`], in the order
/// `lambda_1 .. lambda_8`.
pub fn analytic_eigenvalues_pm(p: &ModelParams, sym: &SymmetricSteady) -> Result<[Complex64; 8]> {
    model::symmetric_pump(p)?;
    let k = p.kappa;
    let (ga, gb) = (p.gamma_a, p.gamma_b);
    let gamma = ga + gb;
    let (ap, bp) = (sym.alpha_plus, sym.beta_plus);

    let t12 = 4.0 * gamma - 2.0 * k * bp;
    let r12 = real(t12 * t12 - 16.0 * (4.0 * ga * gb - 2.0 * gb * k * bp + k * k * ap * ap));
    let s12 = linalg::principal_sqrt(r12);

    let t34 = 4.0 * gamma + 2.0 * k * bp;
    let inner = 2.0 * gamma + k * bp;
    let r34 = real(inner * inner - 4.0 * (4.0 * ga * gb + 2.0 * gb * k * bp + k * k * ap * ap));
    let s34 = linalg::principal_sqrt(r34);

    Ok([
        (real(t12) + s12) / 8.0,
        (real(t12) - s12) / 8.0,
        (real(t34) + 2.0 * s34) / 8.0,
        (real(t34) - 2.0 * s34) / 8.0,
        c(ga, 2.0 * p.j_a),
        c(ga, -2.0 * p.j_a),
        c(gb, 2.0 * p.j_b),
        c(gb, -2.0 * p.j_b),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub eigenvalues: [Complex64; 8],
    /// Every eigenvalue has a strictly positive real part.
    pub stable: bool,
    /// A conjugate pair sits on the imaginary axis (within `tol_sp`).
    pub self_pulsing: bool,
    /// Smallest real part.
    pub margin: f64,
}

impl StabilityReport {
    /// Usable for a linearized fluctuation analysis.
    pub fn is_operable(&self) -> bool {
        self.stable && !self.self_pulsing
    }
}

/// `1e-6` times the largest linear rate.
pub fn default_self_pulsing_tol(p: &ModelParams) -> f64 {
    1e-6 * p.max_rate()
}

pub fn classify_stability(sys: &LinearizedSystem, tol_sp: f64) -> Result<StabilityReport> {
    if sys.a_mat.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::EigenSolveFailure);
    }
    let eigenvalues = sys.eigenvalues()?;
    let margin = eigenvalues.iter().map(|l| l.re).fold(f64::INFINITY, f64::min);
    let stable = margin > 0.0;
    let scale = eigenvalues.iter().map(|l| l.norm()).fold(1.0, f64::max);
    let self_pulsing = eigenvalues.iter().any(|l| {
        l.re.abs() < tol_sp && l.im.abs() > tol_sp && eigenvalues.iter().any(|m| (m - l.conj()).norm() < 1e-6 * scale)
    });
    Ok(StabilityReport { eigenvalues, stable, self_pulsing, margin })
}

/// The classical steady state and its linearization. Uses the closed form
/// when the symmetric detuned preconditions hold, relaxation otherwise.
pub fn linearize_at_steady_state(p: &ModelParams) -> Result<(PhaseSpaceState, LinearizedSystem)> {
    let ss = match steady_state_symmetric(p) {
        Ok(sym) => sym.to_state(),
        Err(Error::PreconditionViolation(_)) => {
            steady_state_numeric(p, model::DEFAULT_STEADY_TOL, model::DEFAULT_STEADY_T_MAX)?
        }
        Err(e) => return Err(e),
    };
    let sys = build_drift_full(p, &ss);
    Ok((ss, sys))
}

/// Smallest pump (real, applied to both cavities) at which the linearized
/// system stops being operable, found by bisection on
/// `[lo, hi] * critical_pump(p)` to relative width `rel_tol`.
///
/// Returns `None` if the state at `hi` is still operable or the state at
/// `lo` is already not.
pub fn instability_onset(p: &ModelParams, lo: f64, hi: f64, rel_tol: f64) -> Result<Option<f64>> {
    let ec = critical_pump(p)?;
    let tol_sp = default_self_pulsing_tol(p);
    let operable = |ratio: f64| -> Result<bool> {
        let q = p.with_pump(ratio * ec);
        match linearize_at_steady_state(&q) {
            Ok((_, sys)) => Ok(classify_stability(&sys, tol_sp)?.is_operable()),
            Err(Error::NonConvergence { .. }) | Err(Error::Unstable { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };
    if !operable(lo)? || operable(hi)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (lo, hi);
    while (hi - lo) > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if operable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(hi * ec))
}
