//! Replicated convergence studies.

use std::ops::RangeInclusive;
use std::time::Duration;

use rayon::prelude::*;

use randfem_core::stats::{NormKind, VarianceAccumulator};
use randfem_core::{CoefficientField, Error as CoreError, Estimator, ForcingTerm, TriangleMesh};

use crate::error::{CliError, Result};
use crate::pipeline::{run_realization, LevelContext};

/// Replications run in parallel in batches of this size and are folded into
/// the accumulators in replication order, so results do not depend on the
/// thread count.
const BATCH: usize = 64;

/// One row of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub estimator: Estimator,
    pub forcing: String,
    pub n: u32,
    /// Grid spacing `2⁻ⁿ`.
    pub h: f64,
    pub replications: usize,
    pub err_h1: f64,
    pub err_l2: f64,
    /// Median load-assembly time per replication; 0 when timing is disabled.
    pub time_load_s: f64,
    pub seed: u64,
}

pub struct StudyConfig<'a, S: CoefficientField + Sync + ?Sized> {
    pub estimator: Estimator,
    pub forcing: &'a ForcingTerm,
    pub forcing_label: String,
    pub sigma: &'a S,
    pub levels: RangeInclusive<u32>,
    pub replications: usize,
    pub seed: u64,
    pub tol: f64,
    /// Wall-clock timings make the output machine dependent.
    pub timing: bool,
}

pub fn median(values: &mut [Duration]) -> Duration {
    if values.is_empty() {
        return Duration::ZERO;
    }
    values.sort_unstable();
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2
    }
}

pub fn run_level<S: CoefficientField + Sync + ?Sized>(cfg: &StudyConfig<'_, S>, n: u32) -> Result<ExperimentRecord> {
    if cfg.replications < 2 {
        return Err(CliError::usage("M: a study needs at least 2 replications"));
    }
    let mesh = TriangleMesh::structured(n)?;
    let h = mesh.grid_spacing().unwrap_or(mesh.h());
    let ctx = LevelContext::new(mesh, cfg.estimator, cfg.sigma)?;
    let mut acc = VarianceAccumulator::new(ctx.mesh.n_interior());
    let mut times = Vec::with_capacity(cfg.replications);
    let fail = |replication: u32, source: CoreError| CliError::Realization {
        level: n,
        replication,
        seed: cfg.seed,
        source,
    };
    let total = u32::try_from(cfg.replications).map_err(|_| CliError::usage("M: too many replications"))?;
    let mut start = 0u32;
    while start < total {
        let end = (start + BATCH as u32).min(total);
        let batch: Vec<_> = (start..end)
            .into_par_iter()
            .map(|rep| (rep, run_realization(&ctx, cfg.forcing, cfg.seed, rep, cfg.tol)))
            .collect();
        for (rep, result) in batch {
            let r = result.map_err(|e| fail(rep, e))?;
            if !r.report.converged {
                return Err(fail(
                    rep,
                    CoreError::NoConvergence {
                        iterations: r.report.iterations,
                        relative_residual: r.report.relative_residual,
                    },
                ));
            }
            acc.push(&r.coefficients, &ctx.norms)?;
            times.push(r.load_time);
        }
        start = end;
    }
    let time_load_s = if cfg.timing {
        median(&mut times).as_secs_f64()
    } else {
        0.0
    };
    Ok(ExperimentRecord {
        estimator: cfg.estimator,
        forcing: cfg.forcing_label.clone(),
        n,
        h,
        replications: cfg.replications,
        err_h1: acc.error(NormKind::H1)?,
        err_l2: acc.error(NormKind::L2)?,
        time_load_s,
        seed: cfg.seed,
    })
}

/// Runs every level in order and returns one record per level.
pub fn run_convergence_study<S: CoefficientField + Sync + ?Sized>(
    cfg: &StudyConfig<'_, S>,
) -> Result<Vec<ExperimentRecord>> {
    cfg.levels.clone().map(|n| run_level(cfg, n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use randfem_core::Sigma;

    #[test]
    fn median_of_durations() {
        let ms = Duration::from_millis;
        assert_eq!(median(&mut [ms(3), ms(1), ms(2)]), ms(2));
        assert_eq!(median(&mut [ms(4), ms(1), ms(2), ms(3)]), Duration::from_micros(2500));
        assert_eq!(median(&mut []), Duration::ZERO);
    }

    #[test]
    fn constant_forcing_with_importance_sampling_has_zero_error() {
        let f = ForcingTerm::Const(1.0);
        let cfg = StudyConfig {
            estimator: Estimator::Is,
            forcing: &f,
            forcing_label: "const".into(),
            sigma: &Sigma::Unit,
            levels: 2..=4,
            replications: 5,
            seed: 1,
            tol: 1e-10,
            timing: false,
        };
        let records = run_convergence_study(&cfg).unwrap();
        assert_eq!(records.len(), 3);
        for r in &records {
            assert_eq!(r.err_h1, 0.0);
            assert_eq!(r.err_l2, 0.0);
            assert_eq!(r.time_load_s, 0.0);
        }
    }

    #[test]
    fn single_replication_is_rejected() {
        let f = ForcingTerm::F2;
        let cfg = StudyConfig {
            estimator: Estimator::Mc,
            forcing: &f,
            forcing_label: "f2".into(),
            sigma: &Sigma::Unit,
            levels: 2..=2,
            replications: 1,
            seed: 1,
            tol: 1e-10,
            timing: false,
        };
        assert_eq!(run_convergence_study(&cfg).unwrap_err().exit_code(), 2);
    }
}
