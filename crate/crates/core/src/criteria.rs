//! Continuous-variable entanglement measures on output spectral covariances:
//! the Duan sum, the inferred-variance EPR product, and the logarithmic
//! negativity.

use nalgebra::{Matrix2, Matrix4};
// libm-backed float methods when std is absent.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::model::{Band, ModelParams};
use crate::spectra::SpectralMatrix;
use num_complex::Complex64;

/// Output spectral (co)variances in the basis `(X1, Y1, X2, Y2)`, with
/// `Y = X^{theta + pi/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix4 {
    pub omega: f64,
    pub theta: f64,
    pub c: Matrix4<f64>,
}

impl CovarianceMatrix4 {
    pub fn identity(omega: f64, theta: f64) -> Self {
        Self { omega, theta, c: Matrix4::identity() }
    }

    pub fn block1(&self) -> Matrix2<f64> {
        self.c.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn block2(&self) -> Matrix2<f64> {
        self.c.fixed_view::<2, 2>(2, 2).into_owned()
    }

    /// Cross block between mode 1 (rows) and mode 2 (columns).
    pub fn block12(&self) -> Matrix2<f64> {
        self.c.fixed_view::<2, 2>(0, 2).into_owned()
    }

    /// Relabels mode 1 as mode 2 and vice versa.
    pub fn swapped(&self) -> Self {
        let perm = [2, 3, 0, 1];
        Self { c: Matrix4::from_fn(|i, j| self.c[(perm[i], perm[j])]), ..*self }
    }
}

pub fn build_cm(sm: &SpectralMatrix, band: Band, theta: f64, p: &ModelParams) -> CovarianceMatrix4 {
    // Each quadrature touches one (amplitude, conjugate) pair, so the forms
    // reduce to 2x2 blocks of S.
    let base = match band {
        Band::Fundamental => 0,
        Band::Harmonic => 4,
    };
    let y = theta + core::f64::consts::FRAC_PI_2;
    let quad =
        |offset: usize, phi: f64| (base + offset, [Complex64::from_polar(1.0, -phi), Complex64::from_polar(1.0, phi)]);
    let w = [quad(0, theta), quad(0, y), quad(2, theta), quad(2, y)];
    let form = |(i, a): (usize, [Complex64; 2]), (j, b): (usize, [Complex64; 2])| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, am) in a.iter().enumerate() {
            for (n, bn) in b.iter().enumerate() {
                acc += am * sm.s[(i + m, j + n)] * bn;
            }
        }
        acc
    };
    let g = p.gamma(band);
    let mut c = Matrix4::identity();
    for i in 0..4 {
        for j in i..4 {
            let v = g * (form(w[i], w[j]) + form(w[j], w[i])).re;
            c[(i, j)] += v;
            if i != j {
                c[(j, i)] += v;
            }
        }
    }
    CovarianceMatrix4 { omega: sm.omega, theta, c }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DuanCombination {
    /// `V(X1 - X2) + V(Y1 + Y2)`
    XMinusYPlus,
    /// `V(X1 + X2) + V(Y1 - Y2)`
    XPlusYMinus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuanSum {
    /// The smaller of the two sums; below 4 certifies entanglement.
    pub value: f64,
    pub combination: DuanCombination,
    pub x_minus_y_plus: f64,
    pub x_plus_y_minus: f64,
}

pub fn duan_sum(cm: &CovarianceMatrix4) -> DuanSum {
    let c = &cm.c;
    let xx = c[(0, 0)] + c[(2, 2)];
    let yy = c[(1, 1)] + c[(3, 3)];
    let x_minus_y_plus = xx - 2.0 * c[(0, 2)] + yy + 2.0 * c[(1, 3)];
    let x_plus_y_minus = xx + 2.0 * c[(0, 2)] + yy - 2.0 * c[(1, 3)];
    let (value, combination) = if x_plus_y_minus < x_minus_y_plus {
        (x_plus_y_minus, DuanCombination::XPlusYMinus)
    } else {
        (x_minus_y_plus, DuanCombination::XMinusYPlus)
    };
    DuanSum { value, combination, x_minus_y_plus, x_plus_y_minus }
}

/// Smallest variance accepted as the conditioning side of an inference.
pub const MIN_CONDITIONING_VARIANCE: f64 = 1e-12;

fn inferred_product(c: &Matrix4<f64>, target: usize, cond: usize) -> Result<f64> {
    let mut prod = 1.0;
    for k in 0..2 {
        let (t, s) = (target + k, cond + k);
        let vs = c[(s, s)];
        if vs < MIN_CONDITIONING_VARIANCE {
            return Err(Error::DegenerateConditioner { variance: vs });
        }
        prod *= c[(t, t)] - c[(t, s)] * c[(t, s)] / vs;
    }
    Ok(prod)
}

/// `V_inf(X) V_inf(Y)` under optimal linear inference, minimized over the two
/// inference directions. Below 1 demonstrates the EPR paradox.
pub fn epr_product(cm: &CovarianceMatrix4) -> Result<f64> {
    let a = inferred_product(&cm.c, 0, 2)?;
    let b = inferred_product(&cm.c, 2, 0)?;
    Ok(a.min(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogNegVariant {
    /// The printed closed form, asymmetric in the two modes.
    PaperLiteral,
    /// The smallest symplectic eigenvalue of the partial transpose.
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNegativity {
    pub value: f64,
    /// A radicand was negative; `value` is then 0.
    pub complex_radicand: bool,
}

fn log_neg_from(xi: f64) -> f64 {
    if xi < 1.0 {
        -xi.log2()
    } else {
        0.0
    }
}

pub fn log_negativity(cm: &CovarianceMatrix4, variant: LogNegVariant) -> LogNegativity {
    let d1 = cm.block1().determinant();
    let d2 = cm.block2().determinant();
    let d12 = cm.block12().determinant();
    let d = cm.c.determinant();
    match variant {
        LogNegVariant::PaperLiteral => {
            let inner = (d2 - d12) * (d2 - d12) - d;
            if inner < 0.0 {
                return LogNegativity { value: 0.0, complex_radicand: true };
            }
            let outer = (d1 - d12) - inner.sqrt();
            if outer < 0.0 {
                return LogNegativity { value: 0.0, complex_radicand: true };
            }
            LogNegativity { value: log_neg_from(outer.sqrt()), complex_radicand: false }
        }
        LogNegVariant::Standard => {
            let delta = d1 + d2 - 2.0 * d12;
            // Rounding can push a zero discriminant slightly negative.
            let disc = (delta * delta - 4.0 * d).max(0.0);
            let nu2 = 0.5 * (delta - disc.sqrt());
            LogNegativity { value: log_neg_from(nu2.max(0.0).sqrt()), complex_radicand: false }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriteriaResult {
    pub omega: f64,
    pub theta: f64,
    pub duan_sum: f64,
    pub duan_combination: DuanCombination,
    pub epr_product: f64,
    pub logneg_paper: f64,
    pub logneg_paper_complex: bool,
    pub logneg_standard: f64,
}

pub fn evaluate_criteria(sm: &SpectralMatrix, band: Band, theta: f64, p: &ModelParams) -> Result<CriteriaResult> {
    let cm = build_cm(sm, band, theta, p);
    let duan = duan_sum(&cm);
    let paper = log_negativity(&cm, LogNegVariant::PaperLiteral);
    Ok(CriteriaResult {
        omega: sm.omega,
        theta,
        duan_sum: duan.value,
        duan_combination: duan.combination,
        epr_product: epr_product(&cm)?,
        logneg_paper: paper.value,
        logneg_paper_complex: paper.complex_radicand,
        logneg_standard: log_negativity(&cm, LogNegVariant::Standard).value,
    })
}
