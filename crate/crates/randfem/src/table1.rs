//! Barycentric-rule discretization error for the line-singular forcing,
//! measured against a reference solution whose load is the mean of many
//! Monte Carlo loads.

use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use randfem_core::assembly::assemble_load_barycentric;
use randfem_core::realization::load_vector;
use randfem_core::solver::{default_max_iter, solve_spd};
use randfem_core::stats::{h1_seminorm, l2_norm, NormMatrices};
use randfem_core::{Error as CoreError, Estimator, FemCoefficients, ForcingTerm, TriangleMesh};

use crate::error::{CliError, Result};
use crate::study::ExperimentRecord;

const BATCH: usize = 64;

pub struct Table1Config {
    pub levels: RangeInclusive<u32>,
    /// Number of Monte Carlo loads averaged for the reference.
    pub reference_replications: usize,
    pub seed: u64,
    pub tol: f64,
    /// Directory for cached reference loads; recomputed when absent or stale.
    pub cache_dir: Option<PathBuf>,
}

fn cache_header(n: u32, m: usize, seed: u64, dim: usize) -> String {
    format!("reference-load forcing f1 estimator mc n {n} M {m} seed {seed} unknowns {dim}")
}

fn cache_path(dir: &Path, n: u32, m: usize, seed: u64) -> PathBuf {
    dir.join(format!("reference-f1-n{n}-M{m}-seed{seed}.txt"))
}

fn read_cached(path: &Path, header: &str, dim: usize) -> Option<FemCoefficients> {
    let text = fs::read_to_string(path).ok()?;
    let mut lines = text.lines();
    if lines.next()? != header {
        return None;
    }
    let values: Vec<f64> = lines.map(|l| l.parse().ok()).collect::<Option<_>>()?;
    (values.len() == dim).then_some(FemCoefficients(values))
}

/// [`reference_load`] backed by a file cache. Values are stored with 17
/// significant digits, so a cached load is bitwise equal to a fresh one.
pub fn cached_reference_load(mesh: &TriangleMesh, m: usize, seed: u64, dir: Option<&Path>) -> Result<FemCoefficients> {
    let Some(dir) = dir else {
        return reference_load(mesh, m, seed);
    };
    let n = mesh.level().unwrap_or(0);
    let header = cache_header(n, m, seed, mesh.n_interior());
    let path = cache_path(dir, n, m, seed);
    if let Some(load) = read_cached(&path, &header, mesh.n_interior()) {
        return Ok(load);
    }
    let load = reference_load(mesh, m, seed)?;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let text = format!("{header}\n{}", crate::io::coefficients_to_string(&load));
    // Write then rename, so an interrupted run never leaves a truncated cache entry.
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, &path).map_err(|e| CliError::io(&path, e))?;
    Ok(load)
}

/// Mean of `m` Monte Carlo load vectors for `f₁`, summed in replication order.
pub fn reference_load(mesh: &TriangleMesh, m: usize, seed: u64) -> Result<FemCoefficients> {
    if m == 0 {
        return Err(CliError::usage("M: the reference needs at least one replication"));
    }
    let level = mesh.level().unwrap_or(0);
    let total = u32::try_from(m).map_err(|_| CliError::usage("M: too many replications"))?;
    let mut sum = vec![0.0; mesh.n_interior()];
    let mut start = 0u32;
    while start < total {
        let end = (start + BATCH as u32).min(total);
        let batch: Vec<_> = (start..end)
            .into_par_iter()
            .map(|rep| (rep, load_vector(Estimator::Mc, mesh, &ForcingTerm::F1, seed, rep)))
            .collect();
        for (rep, load) in batch {
            let (load, _) = load.map_err(|source| CliError::Realization {
                level,
                replication: rep,
                seed,
                source,
            })?;
            for (s, v) in sum.iter_mut().zip(load.as_slice()) {
                *s += v;
            }
        }
        start = end;
    }
    let m = m as f64;
    Ok(FemCoefficients(sum.into_iter().map(|s| s / m).collect()))
}

/// Error of the barycentric solution for `f̃₁` given a reference load.
pub fn level_error(
    mesh: &TriangleMesh,
    norms: &NormMatrices,
    reference: &FemCoefficients,
    tol: f64,
) -> Result<(f64, f64)> {
    let (bary, nonfinite) = assemble_load_barycentric(mesh, &ForcingTerm::F1Eps);
    if !nonfinite.is_empty() || !bary.is_finite() {
        return Err(CoreError::Data(format!(
            "barycentric load non-finite on {} triangles (first {})",
            nonfinite.len(),
            nonfinite.first().copied().unwrap_or(0)
        ))
        .into());
    }
    // The solve is linear: the error solves A e = b_bary − b_ref.
    let diff = FemCoefficients(bary.as_slice().iter().zip(reference.as_slice()).map(|(a, b)| a - b).collect());
    let a = &norms.stiffness;
    let (e, report) = solve_spd(a, &diff, tol, default_max_iter(a.dim()))?;
    if !report.converged {
        return Err(CoreError::NoConvergence {
            iterations: report.iterations,
            relative_residual: report.relative_residual,
        }
        .into());
    }
    Ok((h1_seminorm(a, &e)?, l2_norm(&norms.mass, &e)?))
}

pub fn run_table1(cfg: &Table1Config) -> Result<Vec<ExperimentRecord>> {
    let mut rows = Vec::new();
    for n in cfg.levels.clone() {
        let mesh = TriangleMesh::structured(n)?;
        let norms = NormMatrices::new(&mesh);
        let reference = cached_reference_load(&mesh, cfg.reference_replications, cfg.seed, cfg.cache_dir.as_deref())?;
        let (err_h1, err_l2) = level_error(&mesh, &norms, &reference, cfg.tol)?;
        rows.push(ExperimentRecord {
            estimator: Estimator::Barycentric,
            forcing: "f1eps".into(),
            n,
            h: mesh.grid_spacing().unwrap_or(mesh.h()),
            replications: cfg.reference_replications,
            err_h1,
            err_l2,
            time_load_s: 0.0,
            seed: cfg.seed,
        });
    }
    Ok(rows)
}
