//! Plain-text file formats: meshes, matrices, coefficient vectors and study CSVs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use randfem_core::{Estimator, FemCoefficients, Point2, SparseSpdMatrix, TriangleMesh};

use crate::error::{CliError, Result};
use crate::study::ExperimentRecord;

pub const CSV_HEADER: &str = "estimator,forcing,n,h,M,err_h1,err_l2,time_load_s,seed";

/// `vertices <n> triangles <m>`, then `x y boundary_flag` lines, then `i j k` lines.
/// Reals use 17 significant digits, so a write/read cycle is exact.
pub fn mesh_to_string(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "vertices {} triangles {}", mesh.n_vertices(), mesh.n_triangles());
    for (p, &b) in mesh.vertices().iter().zip(mesh.boundary_flags()) {
        let _ = writeln!(s, "{:.16e} {:.16e} {}", p.x, p.y, u8::from(b));
    }
    for [i, j, k] in mesh.triangles() {
        let _ = writeln!(s, "{i} {j} {k}");
    }
    s
}

pub fn parse_mesh(text: &str, path: &Path) -> Result<TriangleMesh> {
    let fail = |line: usize, message: &str| CliError::Format {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| fail(1, "empty mesh file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let (nv, nt) = match h.as_slice() {
        ["vertices", nv, "triangles", nt] => (
            nv.parse::<usize>().map_err(|_| fail(1, "bad vertex count"))?,
            nt.parse::<usize>().map_err(|_| fail(1, "bad triangle count"))?,
        ),
        _ => return Err(fail(1, "expected 'vertices <n> triangles <m>'")),
    };
    let mut vertices = Vec::with_capacity(nv);
    let mut boundary = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| fail(0, "missing vertex lines"))?;
        let f: Vec<&str> = l.split_whitespace().collect();
        let [x, y, b] = f.as_slice() else {
            return Err(fail(ln + 1, "expected 'x y boundary_flag'"));
        };
        let x: f64 = x.parse().map_err(|_| fail(ln + 1, "bad x coordinate"))?;
        let y: f64 = y.parse().map_err(|_| fail(ln + 1, "bad y coordinate"))?;
        let b = match *b {
            "0" => false,
            "1" => true,
            _ => return Err(fail(ln + 1, "boundary flag must be 0 or 1")),
        };
        vertices.push(Point2::new(x, y));
        boundary.push(b);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = lines.next().ok_or_else(|| fail(0, "missing triangle lines"))?;
        let idx: std::result::Result<Vec<usize>, _> = l.split_whitespace().map(str::parse).collect();
        match idx.as_deref() {
            Ok([i, j, k]) => triangles.push([*i, *j, *k]),
            _ => return Err(fail(ln + 1, "expected 'i j k'")),
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(fail(ln + 1, "trailing content after triangles"));
    }
    Ok(TriangleMesh::new(vertices, triangles, boundary)?)
}

pub fn read_mesh(path: &Path) -> Result<TriangleMesh> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_mesh(&text, path)
}

/// Coordinate format: one `row col value` line per stored entry, sorted by (row, col).
pub fn matrix_to_string(a: &SparseSpdMatrix) -> String {
    let mut s = String::new();
    for (i, j, v) in a.entries() {
        let _ = writeln!(s, "{i} {j} {v:.16e}");
    }
    s
}

/// One value per line, in interior-node order (row-major over interior grid points
/// for structured meshes).
pub fn coefficients_to_string(u: &FemCoefficients) -> String {
    let mut s = String::new();
    for v in u.as_slice() {
        let _ = writeln!(s, "{v:.16e}");
    }
    s
}

/// Scientific notation with 10 significant digits.
pub fn sci(v: f64) -> String {
    format!("{v:.9e}")
}

pub fn records_to_csv(records: &[ExperimentRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.estimator,
            r.forcing,
            r.n,
            sci(r.h),
            r.replications,
            sci(r.err_h1),
            sci(r.err_l2),
            sci(r.time_load_s),
            r.seed
        );
    }
    s
}

pub fn parse_csv(text: &str, path: &Path) -> Result<Vec<ExperimentRecord>> {
    let fail = |line: usize, message: String| CliError::Format {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(fail(1, format!("expected header '{CSV_HEADER}'")));
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let ln = k + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(fail(ln, format!("expected 9 fields, found {}", f.len())));
        }
        let real = |i: usize| f[i].parse::<f64>().map_err(|_| fail(ln, format!("bad number '{}'", f[i])));
        let int = |i: usize| f[i].parse::<u64>().map_err(|_| fail(ln, format!("bad integer '{}'", f[i])));
        out.push(ExperimentRecord {
            estimator: f[0].parse::<Estimator>().map_err(|e| fail(ln, e.to_string()))?,
            forcing: f[1].to_string(),
            n: int(2)? as u32,
            h: real(3)?,
            replications: int(4)? as usize,
            err_h1: real(5)?,
            err_l2: real(6)?,
            time_load_s: real(7)?,
            seed: int(8)?,
        });
    }
    Ok(out)
}

/// Writes `contents` to `path`; a partially written file is removed on failure.
pub fn write_output(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| {
        let _ = fs::remove_file(path);
        CliError::io(path, e)
    })
}
