//! Eigenvalues of small dense symmetric matrices.

use crate::error::{LabError, Result};
use crate::symbol::SymMatrix;

const MAX_SWEEPS: usize = 64;
const OFF_DIAGONAL_TOL: f64 = 1e-13;

/// Eigenvalues of a symmetric matrix, ascending.
///
/// n = 1 and n = 2 use closed forms; larger matrices use cyclic Jacobi
/// rotations.
pub fn symmetric_eigenvalues(a: &SymMatrix) -> Result<Vec<f64>> {
    if !a.is_finite() {
        return Err(LabError::Numerical("non-finite Hessian entry".into()));
    }
    match a.n {
        1 => Ok(vec![a.get(0, 0)]),
        2 => Ok(closed_form_2x2(a.get(0, 0), a.get(0, 1), a.get(1, 1)).to_vec()),
        _ => Ok(jacobi_eigenvalues(a)),
    }
}

/// Eigenvalues of [[p, q], [q, r]], ascending.
pub fn closed_form_2x2(p: f64, q: f64, r: f64) -> [f64; 2] {
    let mean = 0.5 * (p + r);
    let half_diff = 0.5 * (p - r);
    let rad = half_diff.hypot(q);
    [mean - rad, mean + rad]
}

/// Cyclic Jacobi: sweep all (p, q) pairs until the off-diagonal Frobenius
/// norm drops below 1e-13 relative to the full norm.
pub fn jacobi_eigenvalues(a: &SymMatrix) -> Vec<f64> {
    let n = a.n;
    let mut m = a.data;
    let total: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| m[i][j] * m[i][j])
        .sum::<f64>()
        .sqrt();
    let off = |m: &[[f64; 3]; 3]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i][j] * m[i][j];
                }
            }
        }
        s.sqrt()
    };
    for _ in 0..MAX_SWEEPS {
        if off(&m) <= OFF_DIAGONAL_TOL * total {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A' = Jᵀ A J
                for k in 0..n {
                    let akp = m[k][p];
                    let akq = m[k][q];
                    m[k][p] = c * akp - s * akq;
                    m[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p][k];
                    let aqk = m[q][k];
                    m[p][k] = c * apk - s * aqk;
                    m[q][k] = s * apk + c * aqk;
                }
                m[p][q] = 0.0;
                m[q][p] = 0.0;
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn mat(rows: &[&[f64]]) -> SymMatrix {
        let mut a = SymMatrix::zeros(rows.len());
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                a.data[i][j] = *v;
            }
        }
        a
    }

    #[test]
    fn two_by_two_example() {
        let ev = symmetric_eigenvalues(&mat(&[&[14.0, 4.0], &[4.0, 14.0]])).unwrap();
        assert_eq!(ev, vec![10.0, 18.0]);
    }

    #[test]
    fn jacobi_matches_nalgebra_on_random_3x3() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let mut a = SymMatrix::zeros(3);
            for i in 0..3 {
                for j in i..3 {
                    let v: f64 = rng.random_range(-10.0..10.0);
                    a.data[i][j] = v;
                    a.data[j][i] = v;
                }
            }
            let ours = jacobi_eigenvalues(&a);
            let na = nalgebra::Matrix3::from_fn(|i, j| a.data[i][j]);
            let mut theirs: Vec<f64> = na.symmetric_eigenvalues().iter().copied().collect();
            theirs.sort_by(|x, y| x.total_cmp(y));
            for (x, y) in ours.iter().zip(&theirs) {
                assert!((x - y).abs() < 1e-10, "{ours:?} vs {theirs:?}");
            }
        }
    }

    #[test]
    fn jacobi_agrees_with_closed_form() {
        let a = mat(&[&[3.0, -1.5], &[-1.5, -2.0]]);
        let j = jacobi_eigenvalues(&a);
        let c = closed_form_2x2(3.0, -1.5, -2.0);
        assert!((j[0] - c[0]).abs() < 1e-13 && (j[1] - c[1]).abs() < 1e-13);
    }

    #[test]
    fn non_finite_is_rejected() {
        let a = mat(&[&[f64::NAN]]);
        assert!(symmetric_eigenvalues(&a).is_err());
    }
}
