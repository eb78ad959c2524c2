use num_complex::Complex64;

use crate::error::{check_len, Result};
use crate::linalg::CVector;
use crate::signal::ReceivedWindow;

/// Pairwise errors across the three instants `(i, i−1, i−2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorTriple {
    pub e1: Complex64,
    pub e2: Complex64,
    pub e3: Complex64,
}

impl ErrorTriple {
    pub fn magnitudes(&self) -> [f64; 3] {
        [self.e1.norm(), self.e2.norm(), self.e3.norm()]
    }

    pub fn is_zero(&self) -> bool {
        self.magnitudes().iter().all(|&m| m == 0.0)
    }
}

/// Filter outputs `(wᴴr[i], wᴴr[i−1], wᴴr[i−2])`.
pub fn window_outputs(w: &CVector, window: &ReceivedWindow) -> Result<[Complex64; 3]> {
    window.check()?;
    check_len(w.len(), window.dim())?;
    Ok([
        w.dotc(&window.r_now),
        w.dotc(&window.r_prev1),
        w.dotc(&window.r_prev2),
    ])
}

/// ```text
/// e1 = b[i]  ·wᴴr[i−1] − b[i−1]·wᴴr[i]
/// e2 = b[i]  ·wᴴr[i−2] − b[i−2]·wᴴr[i]
/// e3 = b[i−1]·wᴴr[i−2] − b[i−2]·wᴴr[i−1]
/// ```
/// with `w = w[i−1]` throughout.
pub fn error_terms(w_prev: &CVector, window: &ReceivedWindow) -> Result<ErrorTriple> {
    let [x0, x1, x2] = window_outputs(w_prev, window)?;
    Ok(errors_from_outputs([x0, x1, x2], window))
}

pub(crate) fn errors_from_outputs(x: [Complex64; 3], window: &ReceivedWindow) -> ErrorTriple {
    let (b0, b1, b2) = (
        window.b_now.value(),
        window.b_prev1.value(),
        window.b_prev2.value(),
    );
    ErrorTriple {
        e1: x[1] * b0 - x[0] * b1,
        e2: x[2] * b0 - x[0] * b2,
        e3: x[2] * b1 - x[1] * b2,
    }
}
