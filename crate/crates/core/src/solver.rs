//! Unpreconditioned conjugate gradients for the SPD Galerkin systems.

use alloc::vec;

use crate::assembly::FemCoefficients;
use crate::error::{param, Result};
use crate::sparse::SparseSpdMatrix;

/// Default relative residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖b − Ax‖₂ / ‖b‖₂` of the returned iterate (0 when `b = 0`).
    pub relative_residual: f64,
    pub converged: bool,
}

/// Default iteration cap, `10·N`.
pub fn default_max_iter(dim: usize) -> usize {
    10 * dim.max(1)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` by CG from `x₀ = 0` until `‖r‖₂ ≤ tol·‖b‖₂`.
///
/// Non-convergence within `max_iter` is reported through
/// [`SolveReport::converged`], not as an error.
pub fn solve_spd(
    a: &SparseSpdMatrix,
    b: &FemCoefficients,
    tol: f64,
    max_iter: usize,
) -> Result<(FemCoefficients, SolveReport)> {
    let n = a.dim();
    if b.len() != n {
        return Err(param("right-hand side length differs from matrix dimension"));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(param("tolerance must lie in (0, 1)"));
    }
    let mut x = vec![0.0; n];
    let b_norm = libm::sqrt(dot(b.as_slice(), b.as_slice()));
    if b_norm == 0.0 {
        return Ok((
            FemCoefficients(x),
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        ));
    }
    let mut r = b.0.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let target = tol * b_norm;
    let mut iterations = 0;
    while iterations < max_iter && libm::sqrt(rr) > target {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_next;
        iterations += 1;
    }
    // Report the true residual, not the recursively updated one.
    a.matvec(&x, &mut ap);
    let res: f64 = b.0.iter().zip(&ap).map(|(bi, axi)| (bi - axi) * (bi - axi)).sum();
    let relative_residual = libm::sqrt(res) / b_norm;
    Ok((
        FemCoefficients(x),
        SolveReport {
            iterations,
            relative_residual,
            converged: libm::sqrt(rr) <= target && relative_residual <= tol,
        },
    ))
}
