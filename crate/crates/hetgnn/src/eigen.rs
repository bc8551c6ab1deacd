//! Cyclic Jacobi eigensolver for small symmetric matrices. Used only to
//! cross-check closed-form spectra, so it is capped at modest sizes.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub const MAX_JACOBI_DIM: usize = 100;

/// Eigenvalues of a symmetric matrix, ascending. Errors on asymmetric
/// input or dimension above `MAX_JACOBI_DIM`.
pub fn symmetric_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    if m.rows != m.cols {
        return Err(Error::ShapeMismatch(format!(
            "eigenvalues of {}x{} matrix",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    if n > MAX_JACOBI_DIM {
        return Err(Error::InvalidArgument(format!(
            "matrix dim {n} exceeds Jacobi cap {MAX_JACOBI_DIM}"
        )));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (m.get(i, j) - m.get(j, i)).abs() > 1e-10 {
                return Err(Error::InvalidArgument(format!(
                    "matrix not symmetric at ({i},{j})"
                )));
            }
        }
    }
    let mut a = m.clone();
    // symmetrize exactly so sweeps preserve symmetry bit-for-bit
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, v);
            a.set(j, i, v);
        }
    }

    let off_norm = |a: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a.get(i, j) * a.get(i, j);
            }
        }
        s.sqrt()
    };

    for _sweep in 0..100 {
        if off_norm(&a) < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                // stable rotation tangent
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }

    let mut eigs: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(eigs)
}
