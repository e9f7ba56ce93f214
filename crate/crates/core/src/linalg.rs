//! Small dense complex linear algebra on the 8-dimensional fluctuation space.

use nalgebra::{SMatrix, SVector, Schur};
use num_complex::Complex64;
// libm-backed float methods when std is absent.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub type Mat8 = SMatrix<Complex64, 8, 8>;
pub type Vec8 = SVector<Complex64, 8>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Principal square root with the branch cut on the negative real axis.
///
/// Agrees with `Complex64::sqrt` including the sign of zero imaginary parts,
/// but avoids the polar round trip.
#[inline]
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    if x == 0.0 && y == 0.0 {
        return Complex64::new(0.0, y);
    }
    let t = ((x.abs() + x.hypot(y)) * 0.5).sqrt();
    if x >= 0.0 {
        Complex64::new(t, y / (2.0 * t))
    } else {
        Complex64::new(y.abs() / (2.0 * t), t.copysign(y))
    }
}

/// Eigenvalues of a dense complex matrix via the complex Schur form.
pub fn eigenvalues(m: &Mat8) -> Result<[Complex64; 8]> {
    let schur = Schur::try_new(*m, f64::EPSILON, 100_000).ok_or(Error::EigenSolveFailure)?;
    let diag = schur.eigenvalues().ok_or(Error::EigenSolveFailure)?;
    let mut out = [Complex64::new(0.0, 0.0); 8];
    for (o, d) in out.iter_mut().zip(diag.iter()) {
        if !(d.re.is_finite() && d.im.is_finite()) {
            return Err(Error::EigenSolveFailure);
        }
        *o = *d;
    }
    Ok(out)
}

/// Ratio of extreme singular values.
pub fn condition_number(m: &Mat8) -> f64 {
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Largest distance between paired entries of two multisets, pairing each
/// entry of `a` with its nearest unused entry of `b`.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "multisets must have equal size");
    let mut used = alloc::vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let mut best = None;
        for (j, y) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (x - y).norm();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        let (j, d) = best.expect("equal sizes");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Sort by real part, then imaginary part.
pub fn sort_eigenvalues(v: &mut [Complex64]) {
    v.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(core::cmp::Ordering::Equal))
    });
}
