//! Thin helpers over `nalgebra` for the complex vectors and matrices used
//! throughout the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `aᴴ b`, conjugating the left operand.
#[inline]
pub fn inner(a: &CVector, b: &CVector) -> Complex64 {
    a.dotc(b)
}

/// Rank-one `a bᴴ`.
pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

/// Adds `scale · a bᴴ` into `m` without allocating.
pub fn add_outer(m: &mut CMatrix, scale: Complex64, a: &CVector, b: &CVector) {
    let n = a.len();
    for col in 0..n {
        let bc = scale * b[col].conj();
        for row in 0..n {
            m[(row, col)] += a[row] * bc;
        }
    }
}

/// Real part of `wᴴ A w`. Exact for Hermitian `A` up to rounding.
pub fn quad_form(a: &CMatrix, w: &CVector) -> f64 {
    w.dotc(&(a * w)).re
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.norm().max(1.0);
    (m - m.adjoint()).norm() <= tol * scale
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.trace()
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Circularly-symmetric complex Gaussian vector with total variance `var`
/// per entry (`var/2` on each of I and Q).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, len: usize, var: f64) -> CVector {
    let sd = (var / 2.0).sqrt();
    CVector::from_fn(len, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(sd * re, sd * im)
    })
}

/// Relative Euclidean distance `‖a − b‖ / ‖b‖` (absolute when `b` is zero).
pub fn relative_distance(a: &CVector, b: &CVector) -> f64 {
    let nb = b.norm();
    let d = (a - b).norm();
    if nb > 0.0 {
        d / nb
    } else {
        d
    }
}

pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}
