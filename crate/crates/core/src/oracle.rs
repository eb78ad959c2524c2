//! Independent reference computations used to cross-check the fast paths:
//! a quadrature Bessel function, a dense LU solve and random well-posed test
//! problems. Deliberately naive.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::linalg::{complex_gaussian, CMatrix, CVector};

/// `J₀(x) = (1/π)∫₀^π cos(x·sin θ) dθ`, by the trapezoid rule. The integrand
/// is smooth and periodic, so 400 nodes are accurate far beyond 1e−12 for
/// the arguments used here (|x| < 10).
pub fn bessel_j0(x: f64) -> f64 {
    let n = 400;
    let h = PI / n as f64;
    let mut acc = 0.5 * (1.0 + (x * PI.sin()).cos());
    for k in 1..n {
        acc += (x * (k as f64 * h).sin()).cos();
    }
    acc * h / PI
}

/// Dense LU solve of `A x = b`.
pub fn direct_solve(a: &CMatrix, b: &CVector) -> Result<CVector> {
    if !a.is_square() {
        return Err(Error::invalid("matrix must be square"));
    }
    check_len(a.nrows(), b.len())?;
    a.clone().lu().solve(b).ok_or(Error::Singular)
}

/// Random Hermitian positive-definite matrix `QΛQᴴ` with Haar-like unitary
/// `Q` and eigenvalues drawn uniformly from `[1, cond]`, both endpoints
/// included so the condition number is exactly `cond`.
pub fn random_hpd<R: Rng + ?Sized>(rng: &mut R, m: usize, cond: f64) -> CMatrix {
    let g = CMatrix::from_fn(m, m, |_, _| complex_gaussian(rng, 1, 1.0)[0]);
    let q = g.qr().q();
    let eig = CVector::from_fn(m, |i, _| {
        let v = match i {
            0 => 1.0,
            1 => cond,
            _ => 1.0 + (cond - 1.0) * rng.random::<f64>(),
        };
        Complex64::new(v, 0.0)
    });
    let a = &q * CMatrix::from_diagonal(&eig) * q.adjoint();
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}
