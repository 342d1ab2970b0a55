//! Command execution.

use std::fmt::Write as _;
use std::path::Path;

use randfem_core::assembly::assemble_stiffness_exact;
use randfem_core::stats::{h1_seminorm, l2_norm};
use randfem_core::TriangleMesh;

use crate::config::{Command, RunConfig};
use crate::error::{CliError, Result};
use crate::io;
use crate::pipeline::{run_realization, LevelContext};
use crate::study::{run_convergence_study, StudyConfig};
use crate::table1::{run_table1, Table1Config};

/// Runs a command on a thread pool of the configured size and returns the
/// text destined for standard output. Files are only written once every
/// computation has succeeded.
pub fn execute(cfg: &RunConfig) -> Result<String> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::usage(format!("threads: {e}")))?;
    pool.install(|| match cfg.command {
        Command::Mesh => mesh(cfg),
        Command::Solve => solve(cfg),
        Command::Study => study(cfg),
        Command::Table1 => table1(cfg),
    })
}

fn load_mesh(cfg: &RunConfig) -> Result<TriangleMesh> {
    match &cfg.mesh_file {
        Some(path) => io::read_mesh(path),
        None => Ok(TriangleMesh::structured(cfg.levels.0)?),
    }
}

/// Writes each `(path, contents)` pair; on failure every file of the batch is removed.
fn write_all(outputs: &[(&Path, String)]) -> Result<()> {
    for (k, (path, contents)) in outputs.iter().enumerate() {
        if let Err(e) = io::write_output(path, contents) {
            for (p, _) in &outputs[..k] {
                let _ = std::fs::remove_file(p);
            }
            return Err(e);
        }
    }
    Ok(())
}

fn mesh(cfg: &RunConfig) -> Result<String> {
    let mesh = load_mesh(cfg)?;
    let mut out = format!(
        "vertices {} triangles {} interior {}\n",
        mesh.n_vertices(),
        mesh.n_triangles(),
        mesh.n_interior()
    );
    if cfg.validate {
        let r = mesh.validate()?;
        let _ = writeln!(
            out,
            "valid h {} area_sum {} min_area {} max_area {} quasi_uniformity {} boundary_edges {}",
            io::sci(r.h),
            io::sci(r.area_sum),
            io::sci(r.min_area),
            io::sci(r.max_area),
            io::sci(r.quasi_uniformity),
            r.boundary_edges
        );
    }
    let mut files = Vec::new();
    if let Some(p) = &cfg.out {
        files.push((p.as_path(), io::mesh_to_string(&mesh)));
    }
    if let Some(p) = &cfg.export_stiffness {
        files.push((p.as_path(), io::matrix_to_string(&assemble_stiffness_exact(&mesh))));
    }
    write_all(&files)?;
    Ok(out)
}

fn solve(cfg: &RunConfig) -> Result<String> {
    let mesh = load_mesh(cfg)?;
    if cfg.validate {
        mesh.validate()?;
    }
    let f = cfg.forcing.term();
    let ctx = LevelContext::new(mesh, cfg.estimator, &cfg.sigma)?;
    let r = run_realization(&ctx, &f, cfg.seed, 0, cfg.tol)?;
    if !r.report.converged {
        return Err(randfem_core::Error::NoConvergence {
            iterations: r.report.iterations,
            relative_residual: r.report.relative_residual,
        }
        .into());
    }
    let summary = format!(
        "estimator {} forcing {} unknowns {} iterations {} relative_residual {} h1 {} l2 {}\n",
        cfg.estimator,
        cfg.forcing.label(),
        r.coefficients.len(),
        r.report.iterations,
        io::sci(r.report.relative_residual),
        io::sci(h1_seminorm(&ctx.norms.stiffness, &r.coefficients)?),
        io::sci(l2_norm(&ctx.norms.mass, &r.coefficients)?),
    );
    let values = io::coefficients_to_string(&r.coefficients);
    match &cfg.out {
        Some(p) => {
            write_all(&[(p.as_path(), values)])?;
            Ok(summary)
        }
        None => {
            eprint!("{summary}");
            Ok(values)
        }
    }
}

fn emit_csv(cfg: &RunConfig, csv: String) -> Result<String> {
    match &cfg.out {
        Some(p) => {
            write_all(&[(p.as_path(), csv)])?;
            Ok(String::new())
        }
        None => Ok(csv),
    }
}

fn study(cfg: &RunConfig) -> Result<String> {
    let f = cfg.forcing.term();
    let study = StudyConfig {
        estimator: cfg.estimator,
        forcing: &f,
        forcing_label: cfg.forcing.label(),
        sigma: &cfg.sigma,
        levels: cfg.levels.0..=cfg.levels.1,
        replications: cfg.replications,
        seed: cfg.seed,
        tol: cfg.tol,
        timing: cfg.timing,
    };
    let records = run_convergence_study(&study)?;
    emit_csv(cfg, io::records_to_csv(&records))
}

fn table1(cfg: &RunConfig) -> Result<String> {
    let rows = run_table1(&Table1Config {
        levels: cfg.levels.0..=cfg.levels.1,
        reference_replications: cfg.replications,
        seed: cfg.seed,
        tol: cfg.tol,
        cache_dir: cfg.cache_dir.clone(),
    })?;
    emit_csv(cfg, io::records_to_csv(&rows))
}
