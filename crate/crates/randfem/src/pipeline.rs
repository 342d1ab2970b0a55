//! One realization of the randomized Galerkin solution, with the load-assembly
//! step timed on a monotonic clock.

use std::borrow::Cow;
use std::time::{Duration, Instant};

use randfem_core::realization::{check_estimator_sigma, load_vector, system_matrix};
use randfem_core::solver::{default_max_iter, solve_spd};
use randfem_core::stats::NormMatrices;
use randfem_core::{CoefficientField, Estimator, FemCoefficients, Integrand, SolveReport, SparseSpdMatrix, TriangleMesh};

/// Per-mesh data shared by every replication: the norm matrices and, when the
/// coefficient is constant, the (draw-independent) system matrix.
pub struct LevelContext<'a, S: CoefficientField + ?Sized> {
    pub mesh: TriangleMesh,
    pub norms: NormMatrices,
    sigma: &'a S,
    estimator: Estimator,
    fixed_system: Option<SparseSpdMatrix>,
}

impl<'a, S: CoefficientField + ?Sized> LevelContext<'a, S> {
    pub fn new(mesh: TriangleMesh, estimator: Estimator, sigma: &'a S) -> randfem_core::Result<Self> {
        check_estimator_sigma(estimator, sigma)?;
        let norms = NormMatrices::new(&mesh);
        let fixed_system = match sigma.constant() {
            Some(1.0) => Some(norms.stiffness.clone()),
            Some(_) => Some(system_matrix(estimator, &mesh, sigma, 0, 0)?),
            None => None,
        };
        Ok(Self {
            mesh,
            norms,
            sigma,
            estimator,
            fixed_system,
        })
    }

    pub fn estimator(&self) -> Estimator {
        self.estimator
    }

    pub fn system(&self, seed: u64, replication: u32) -> randfem_core::Result<Cow<'_, SparseSpdMatrix>> {
        match &self.fixed_system {
            Some(a) => Ok(Cow::Borrowed(a)),
            None => system_matrix(self.estimator, &self.mesh, self.sigma, seed, replication).map(Cow::Owned),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Realization {
    pub coefficients: FemCoefficients,
    pub report: SolveReport,
    /// Wall time of the load-vector assembly alone.
    pub load_time: Duration,
}

/// Assembles and solves one realization. A solve that stops at the iteration
/// cap is returned with `report.converged == false`.
pub fn run_realization<S, F>(
    ctx: &LevelContext<'_, S>,
    f: &F,
    seed: u64,
    replication: u32,
    tol: f64,
) -> randfem_core::Result<Realization>
where
    S: CoefficientField + ?Sized,
    F: Integrand + ?Sized,
{
    let a = ctx.system(seed, replication)?;
    let start = Instant::now();
    let (load, _) = load_vector(ctx.estimator, &ctx.mesh, f, seed, replication)?;
    let load_time = start.elapsed();
    let (coefficients, report) = solve_spd(&a, &load, tol, default_max_iter(a.dim()))?;
    Ok(Realization {
        coefficients,
        report,
        load_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use randfem_core::assembly::assemble_stiffness_exact;
    use randfem_core::{ForcingTerm, Sigma};

    #[test]
    fn zero_forcing_gives_zero_solution() {
        let ctx = LevelContext::new(TriangleMesh::structured(3).unwrap(), Estimator::Mc, &Sigma::Unit).unwrap();
        for seed in [0, 1, 99] {
            let r = run_realization(&ctx, &ForcingTerm::Const(0.0), seed, 0, 1e-10).unwrap();
            assert!(r.coefficients.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn importance_sampling_with_constant_forcing_is_draw_free() {
        let mesh = TriangleMesh::structured(2).unwrap();
        let ctx = LevelContext::new(mesh.clone(), Estimator::Is, &Sigma::Unit).unwrap();
        let a = run_realization(&ctx, &ForcingTerm::Const(1.0), 1, 0, 1e-12).unwrap();
        let b = run_realization(&ctx, &ForcingTerm::Const(1.0), 2, 5, 1e-12).unwrap();
        assert_eq!(a.coefficients, b.coefficients);
        let rhs = FemCoefficients(vec![1.0 / 16.0; 9]);
        let (u, _) = solve_spd(&assemble_stiffness_exact(&mesh), &rhs, 1e-12, 100).unwrap();
        for (x, y) in a.coefficients.as_slice().iter().zip(u.as_slice()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn estimator_sigma_mismatch() {
        let mesh = TriangleMesh::structured(2).unwrap();
        assert!(LevelContext::new(mesh, Estimator::Is, &Sigma::Sine).is_err());
    }

    #[test]
    fn variable_sigma_draws_per_replication() {
        let ctx = LevelContext::new(TriangleMesh::structured(3).unwrap(), Estimator::Mc, &Sigma::Sine).unwrap();
        let a0 = ctx.system(3, 0).unwrap().into_owned();
        let a1 = ctx.system(3, 1).unwrap().into_owned();
        assert!(a0.max_abs_diff(&a1) > 0.0);
        assert_eq!(a0, ctx.system(3, 0).unwrap().into_owned());
    }
}
