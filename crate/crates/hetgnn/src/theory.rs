//! Closed-form spectral results for the two-block SBM and the depthwise
//! contraction product, validated numerically against the Jacobi solver.
//!
//! The population graph has two clusters of N nodes each; with intra
//! probability p, inter probability q and unit self-loops, every node has
//! expected degree d = (N-1)p + Nq + 1 and the expected row-normalized
//! propagation matrix is symmetric.

use crate::eigen::symmetric_eigenvalues;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use serde::{Deserialize, Serialize};

fn check_block(n: usize, p: f64, q: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "cluster size {n} too small (need N >= 2)"
        )));
    }
    for (name, v) in [("p", p), ("q", q)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!("{name} = {v} outside [0, 1]")));
        }
    }
    Ok(())
}

/// Expected degree including the self-loop.
pub fn expected_degree(n: usize, p: f64, q: f64) -> f64 {
    (n as f64 - 1.0) * p + n as f64 * q + 1.0
}

/// Expected row-normalized propagation matrix (2N x 2N): 1/d on the
/// diagonal, p/d within a cluster, q/d across.
pub fn expected_propagation(n: usize, p: f64, q: f64) -> Result<DenseMatrix> {
    check_block(n, p, q)?;
    let d = expected_degree(n, p, q);
    let size = 2 * n;
    let mut m = DenseMatrix::zeros(size, size);
    for i in 0..size {
        for j in 0..size {
            let v = if i == j {
                1.0
            } else if (i < n) == (j < n) {
                p
            } else {
                q
            };
            m.set(i, j, v / d);
        }
    }
    Ok(m)
}

/// Eigenvalue triple of the expected propagation matrix:
/// (1, ((N-1)p - Nq + 1)/d, (1-p)/d) with multiplicities (1, 1, 2N-2).
pub fn eigenvalues_closed_form(n: usize, p: f64, q: f64) -> Result<(f64, f64, f64)> {
    check_block(n, p, q)?;
    let nf = n as f64;
    let d = expected_degree(n, p, q);
    Ok((1.0, ((nf - 1.0) * p - nf * q + 1.0) / d, (1.0 - p) / d))
}

/// The eigenvalue governing cluster separation. When p <= q the signal
/// eigenvalue is non-positive and separation degrades; callers get a
/// warning flag alongside the value.
pub fn signal_eigenvalue(n: usize, p: f64, q: f64) -> Result<(f64, bool)> {
    let (_, lambda1, _) = eigenvalues_closed_form(n, p, q)?;
    Ok((lambda1, p <= q))
}

/// One (p_i, q_i) pair per layer.
pub type Schedule = Vec<(f64, f64)>;

/// The depth schedule p_i = 1/((N-1) i^2), q_i = 1/(N i^2).
pub fn quadratic_schedule(n: usize, depth: usize) -> Result<Schedule> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "cluster size {n} too small (need N >= 2)"
        )));
    }
    let nf = n as f64;
    Ok((1..=depth)
        .map(|i| {
            let i2 = (i * i) as f64;
            (1.0 / ((nf - 1.0) * i2), 1.0 / (nf * i2))
        })
        .collect())
}

/// Product over layers of the bulk eigenvalue (1 - p_i)/d_i; the layer-L
/// contraction factor of the linearized network.
pub fn contraction_product(n: usize, schedule: &Schedule) -> Result<f64> {
    let mut acc = 1.0;
    for &(p, q) in schedule {
        check_block(n, p, q)?;
        acc *= (1.0 - p) / expected_degree(n, p, q);
    }
    Ok(acc)
}

/// Under the quadratic schedule each factor simplifies to
/// ((N-1) i^2 - 1) / ((N-1)(i^2 + 2)).
pub fn contraction_product_quadratic(n: usize, depth: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "cluster size {n} too small (need N >= 2)"
        )));
    }
    let nf = n as f64;
    let mut acc = 1.0;
    for i in 1..=depth {
        let i2 = (i * i) as f64;
        acc *= ((nf - 1.0) * i2 - 1.0) / ((nf - 1.0) * (i2 + 2.0));
    }
    Ok(acc)
}

/// Infinite-depth limit of the quadratic-schedule product, from the
/// sin/sinh infinite products:
/// sqrt(2(N-1)) * sin(pi / sqrt(N-1)) / sinh(sqrt(2) pi).
/// Requires N >= 3: at N = 2 the sine factor vanishes and the finite
/// products do not approach this expression.
pub fn contraction_limit(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "contraction limit needs N >= 3, got {n}"
        )));
    }
    let nf = n as f64 - 1.0;
    let s2pi = std::f64::consts::SQRT_2 * std::f64::consts::PI;
    Ok((2.0 * nf).sqrt() * (std::f64::consts::PI / nf.sqrt()).sin() / s2pi.sinh())
}

/// Commonly quoted approximation with N in place of N-1:
/// sqrt(2N) * sin(pi / sqrt(N)) / sinh(sqrt(2) pi).
pub fn contraction_limit_approx(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "approximation needs N >= 2, got {n}"
        )));
    }
    let nf = n as f64;
    let s2pi = std::f64::consts::SQRT_2 * std::f64::consts::PI;
    Ok((2.0 * nf).sqrt() * (std::f64::consts::PI / nf.sqrt()).sin() / s2pi.sinh())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryReport {
    pub cluster_size: usize,
    pub p: f64,
    pub q: f64,
    pub expected_degree: f64,
    pub lambda_top: f64,
    pub lambda_signal: f64,
    pub lambda_bulk: f64,
    pub signal_warning: bool,
    /// Max |closed-form - Jacobi| over the full spectrum, when 2N is
    /// within the solver cap.
    pub numeric_max_error: Option<f64>,
    pub depth: usize,
    pub contraction_at_depth: f64,
    pub contraction_limit: Option<f64>,
    pub contraction_limit_approx: f64,
}

/// End-to-end check: closed-form spectrum vs Jacobi plus the quadratic
/// contraction product and both limit expressions.
pub fn validate(n: usize, p: f64, q: f64, depth: usize) -> Result<TheoryReport> {
    let (l0, l1, lrest) = eigenvalues_closed_form(n, p, q)?;
    let numeric_max_error = if 2 * n <= crate::eigen::MAX_JACOBI_DIM {
        let numeric = symmetric_eigenvalues(&expected_propagation(n, p, q)?)?;
        let mut expected = vec![lrest; 2 * n - 2];
        expected.push(l1);
        expected.push(l0);
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let err = numeric
            .iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        Some(err)
    } else {
        None
    };
    Ok(TheoryReport {
        cluster_size: n,
        p,
        q,
        expected_degree: expected_degree(n, p, q),
        lambda_top: l0,
        lambda_signal: l1,
        lambda_bulk: lrest,
        signal_warning: p <= q,
        numeric_max_error,
        depth,
        contraction_at_depth: contraction_product_quadratic(n, depth)?,
        contraction_limit: contraction_limit(n).ok(),
        contraction_limit_approx: contraction_limit_approx(n)?,
    })
}
