use crate::error::{check_len, Error, Result};
use crate::linalg::{CMatrix, CVector};

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub w: CVector,
    pub iterations: usize,
    pub residual_norm: f64,
    /// Set when a direction with `dᴴRd ≤ 0` stopped the solve early.
    pub degenerate: bool,
    /// Search directions in the order they were used.
    pub directions: Vec<CVector>,
}

/// Conjugate-gradient solve of `R w = t` from `w_init`, at most `j_max`
/// iterations or until `‖Rw − t‖ ≤ tol`.
///
/// For complex `R` the direction update uses `β = d_jᴴ R g_{j+1} / d_jᴴ R d_j`,
/// which is what makes successive directions `R`-conjugate.
pub fn cg_solve(
    r: &CMatrix,
    t: &CVector,
    w_init: &CVector,
    j_max: usize,
    tol: f64,
) -> Result<CgOutcome> {
    let m = t.len();
    if !r.is_square() {
        return Err(Error::invalid("correlation matrix must be square"));
    }
    check_len(m, r.nrows())?;
    check_len(m, w_init.len())?;

    let mut w = w_init.clone();
    let mut g = r * &w - t;
    let mut d = -g.clone();
    let mut directions = Vec::new();
    let mut iterations = 0;
    let mut degenerate = false;
    while iterations < j_max && g.norm() > tol {
        let rd = r * &d;
        let curvature = d.dotc(&rd).re;
        if !(curvature > 0.0) {
            degenerate = true;
            break;
        }
        let alpha = -d.dotc(&g) / curvature;
        w += &d * alpha;
        g = r * &w - t;
        let beta = rd.dotc(&g) / curvature;
        directions.push(d.clone());
        d = -&g + &d * beta;
        iterations += 1;
    }
    Ok(CgOutcome {
        residual_norm: g.norm(),
        w,
        iterations,
        degenerate,
        directions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_gaussian, relative_distance};
    use crate::oracle::{direct_solve, random_hpd};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_solves_in_one_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = complex_gaussian(&mut rng, 6, 1.0);
        let out = cg_solve(&CMatrix::identity(6, 6), &t, &CVector::zeros(6), 1, 0.0).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(relative_distance(&out.w, &t) < 1e-15);
    }

    #[test]
    fn finite_termination() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = random_hpd(&mut rng, 4, 10.0);
        let w_star = complex_gaussian(&mut rng, 4, 1.0);
        let t = &r * &w_star;
        let out = cg_solve(&r, &t, &CVector::zeros(4), 4, 0.0).unwrap();
        assert!(relative_distance(&out.w, &w_star) < 1e-8);
    }

    #[test]
    fn matches_direct_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let r = random_hpd(&mut rng, 16, 1e3);
            let t = complex_gaussian(&mut rng, 16, 1.0);
            let out = cg_solve(&r, &t, &CVector::zeros(16), 16, 0.0).unwrap();
            let exact = direct_solve(&r, &t).unwrap();
            assert!(relative_distance(&out.w, &exact) < 1e-6);
        }
    }

    #[test]
    fn geometric_spectrum_needs_extra_sweeps() {
        // finite-precision CG loses conjugacy on a geometrically spaced
        // spectrum; a few extra sweeps past M recover full accuracy
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let m = 16;
        let g = CMatrix::from_fn(m, m, |_, _| complex_gaussian(&mut rng, 1, 1.0)[0]);
        let q = g.qr().q();
        let eig = CVector::from_fn(m, |i, _| Complex64::new(1e3f64.powf(i as f64 / (m - 1) as f64), 0.0));
        let r = &q * CMatrix::from_diagonal(&eig) * q.adjoint();
        let r = (&r + r.adjoint()) * Complex64::new(0.5, 0.0);
        let t = complex_gaussian(&mut rng, m, 1.0);
        let exact = direct_solve(&r, &t).unwrap();
        let out = cg_solve(&r, &t, &CVector::zeros(m), 2 * m, 0.0).unwrap();
        assert!(relative_distance(&out.w, &exact) < 1e-8);
    }

    #[test]
    fn directions_are_conjugate() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = random_hpd(&mut rng, 8, 50.0);
        let t = complex_gaussian(&mut rng, 8, 1.0);
        let out = cg_solve(&r, &t, &CVector::zeros(8), 6, 0.0).unwrap();
        let rn = r.norm();
        for (j, dj) in out.directions.iter().enumerate() {
            for (l, dl) in out.directions.iter().enumerate() {
                if j != l {
                    let c = dj.dotc(&(&r * dl)).norm();
                    assert!(c <= 1e-8 * dj.norm() * dl.norm() * rn, "{j},{l}: {c}");
                }
            }
        }
    }

    #[test]
    fn error_decreases_in_energy_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = random_hpd(&mut rng, 10, 100.0);
        let t = complex_gaussian(&mut rng, 10, 1.0);
        let exact = direct_solve(&r, &t).unwrap();
        let w0 = complex_gaussian(&mut rng, 10, 1.0);
        let energy = |w: &CVector| {
            let e = w - &exact;
            e.dotc(&(&r * &e)).re
        };
        let mut last = energy(&w0);
        for j in 1..=10 {
            let out = cg_solve(&r, &t, &w0, j, 0.0).unwrap();
            let now = energy(&out.w);
            assert!(now <= last * (1.0 + 1e-9), "step {j}: {now} > {last}");
            last = now;
        }
        assert!(last < 1e-16 * energy(&w0).max(1.0));
    }

    #[test]
    fn warm_start_at_solution_does_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let r = random_hpd(&mut rng, 5, 10.0);
        let w = complex_gaussian(&mut rng, 5, 1.0);
        let t = &r * &w;
        let out = cg_solve(&r, &t, &w, 5, 1e-10).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.w, w);
    }

    #[test]
    fn indefinite_matrix_flags_degeneracy() {
        let r = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::new(-1.0, 0.0),
            Complex64::new(-2.0, 0.0),
        ]));
        let t = CVector::from_element(2, Complex64::new(1.0, 0.0));
        let out = cg_solve(&r, &t, &CVector::zeros(2), 5, 0.0).unwrap();
        assert!(out.degenerate);
        assert!(out.w.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn shape_errors() {
        let r = CMatrix::identity(3, 3);
        let t = CVector::zeros(2);
        assert!(cg_solve(&r, &t, &CVector::zeros(2), 3, 0.0).is_err());
    }
}
