//! Element loops for the stiffness and mass matrices and the three load-vector
//! estimators. Rows and columns are indexed by interior nodes only, which
//! imposes the homogeneous Dirichlet condition by construction.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{param, Error, Result};
use crate::mesh::{Point2, TriangleMesh};
use crate::quadrature::Integrand;
use crate::sampling::{DrawKind, DrawProvenance, QuadratureDraw};
use crate::sparse::SparseSpdMatrix;

/// Coefficients of a finite element function over the interior nodes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FemCoefficients(pub Vec<f64>);

impl FemCoefficients {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for FemCoefficients {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Index<usize> for FemCoefficients {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for FemCoefficients {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// The diffusion coefficient `σ` with its declared lower bound `σ₀ > 0`.
pub trait CoefficientField {
    fn value(&self, p: Point2) -> f64;
    fn lower_bound(&self) -> f64;

    /// `Some(c)` when `σ ≡ c`.
    fn constant(&self) -> Option<f64> {
        None
    }
}

/// Built-in coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sigma {
    /// `σ ≡ 1`.
    Unit,
    /// `σ ≡ c`, `c > 0`.
    Constant(f64),
    /// `σ(x, y) = 1 + ½ sin(πx) sin(πy)`, bounded below by `½`.
    Sine,
}

impl CoefficientField for Sigma {
    fn value(&self, p: Point2) -> f64 {
        match *self {
            Sigma::Unit => 1.0,
            Sigma::Constant(c) => c,
            Sigma::Sine => {
                use core::f64::consts::PI;
                1.0 + 0.5 * libm::sin(PI * p.x) * libm::sin(PI * p.y)
            }
        }
    }

    fn lower_bound(&self) -> f64 {
        match *self {
            Sigma::Unit => 1.0,
            Sigma::Constant(c) => c,
            Sigma::Sine => 0.5,
        }
    }

    fn constant(&self) -> Option<f64> {
        match *self {
            Sigma::Unit => Some(1.0),
            Sigma::Constant(c) => Some(c),
            Sigma::Sine => None,
        }
    }
}

/// A user-supplied coefficient function with its declared lower bound.
pub struct FnCoefficient<F> {
    pub f: F,
    pub lower_bound: f64,
}

impl<F: Fn(Point2) -> f64> CoefficientField for FnCoefficient<F> {
    fn value(&self, p: Point2) -> f64 {
        (self.f)(p)
    }
    fn lower_bound(&self) -> f64 {
        self.lower_bound
    }
}

struct SigmaIntegrand<'a, S: ?Sized>(&'a S);

impl<S: CoefficientField + ?Sized> Integrand for SigmaIntegrand<'_, S> {
    fn eval(&self, p: Point2) -> f64 {
        self.0.value(p)
    }
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Scatters `weight · ∇φ_a·∇φ_b` for the interior corners of `t`.
#[inline]
fn scatter_stiffness(mesh: &TriangleMesh, t: usize, weight: f64, a: &mut SparseSpdMatrix) {
    let grads = mesh.local_gradients(t);
    let nodes = mesh.local_unknowns(t);
    for (ka, ia) in nodes.iter().enumerate() {
        let Some(i) = *ia else { continue };
        for (kb, jb) in nodes.iter().enumerate() {
            let Some(j) = *jb else { continue };
            a.add(i, j, weight * dot(grads[ka], grads[kb]));
        }
    }
}

/// Exact stiffness matrix for `σ ≡ 1`: `Σ_T |T| ∇φ_i·∇φ_j` (gradients are
/// constant on each triangle, so no quadrature is involved).
pub fn assemble_stiffness_exact(mesh: &TriangleMesh) -> SparseSpdMatrix {
    let mut a = SparseSpdMatrix::interior_pattern(mesh);
    for t in 0..mesh.n_triangles() {
        scatter_stiffness(mesh, t, mesh.area(t), &mut a);
    }
    a
}

/// Randomized stiffness matrix `Σ_T |T| σ(Z_T) ∇φ_i·∇φ_j`.
///
/// For constant `σ ≡ c` this reproduces `c` times the exact matrix for any draw.
pub fn assemble_stiffness_mc<S: CoefficientField + ?Sized>(
    mesh: &TriangleMesh,
    sigma: &S,
    draw: &QuadratureDraw,
) -> Result<SparseSpdMatrix> {
    draw.require(DrawKind::UniformPerTriangle, mesh)?;
    let floor = sigma.lower_bound();
    if !(floor > 0.0) {
        return Err(Error::Data(format!("σ₀ must be positive, got {floor}")));
    }
    let field = SigmaIntegrand(sigma);
    let mut a = SparseSpdMatrix::interior_pattern(mesh);
    for t in 0..mesh.n_triangles() {
        let (s, p) = draw.evaluate(mesh, t, None, &field)?;
        if s < floor {
            return Err(Error::Data(format!(
                "σ({}, {}) = {s} is below its declared lower bound {floor}",
                p.x, p.y
            )));
        }
        scatter_stiffness(mesh, t, mesh.area(t) * s, &mut a);
    }
    Ok(a)
}

/// Monte Carlo load vector: entry `j` is `Σ_{T∋z_j} |T| f(Z_T) φ_j(Z_T)`.
/// All corners of a triangle share its single point.
pub fn assemble_load_mc<F: Integrand + ?Sized>(
    mesh: &TriangleMesh,
    f: &F,
    draw: &QuadratureDraw,
) -> Result<FemCoefficients> {
    draw.require(DrawKind::UniformPerTriangle, mesh)?;
    load_mc_with(mesh, |t| draw.evaluate(mesh, t, None, f))
}

/// [`assemble_load_mc`] with each `Z_T` generated on the fly from its stream
/// instead of a stored draw; the result is bitwise identical.
pub fn assemble_load_mc_direct<F: Integrand + ?Sized>(
    mesh: &TriangleMesh,
    f: &F,
    provenance: &DrawProvenance,
) -> Result<FemCoefficients> {
    load_mc_with(mesh, |t| provenance.evaluate(mesh, t, None, f))
}

#[inline]
fn load_mc_with(mesh: &TriangleMesh, mut value_at: impl FnMut(usize) -> Result<(f64, Point2)>) -> Result<FemCoefficients> {
    let mut load = FemCoefficients::zeros(mesh.n_interior());
    for t in 0..mesh.n_triangles() {
        let nodes = mesh.local_unknowns(t);
        if nodes.iter().all(Option::is_none) {
            continue;
        }
        let (fz, z) = value_at(t)?;
        let phi = mesh.barycentric(t, z);
        let w = mesh.area(t) * fz;
        for (k, node) in nodes.iter().enumerate() {
            if let Some(j) = *node {
                load[j] += w * phi[k];
            }
        }
    }
    Ok(load)
}

/// Importance-sampling load vector: entry `j` is `(1/3) Σ_{T∋z_j} |T| f(Y_{T,j})`.
pub fn assemble_load_is<F: Integrand + ?Sized>(
    mesh: &TriangleMesh,
    f: &F,
    draw: &QuadratureDraw,
) -> Result<FemCoefficients> {
    draw.require(DrawKind::HatPerTriangleVertex, mesh)?;
    load_is_with(mesh, |t, k| draw.evaluate(mesh, t, Some(k), f))
}

/// [`assemble_load_is`] with each `Y_{T,j}` generated on the fly; bitwise identical.
pub fn assemble_load_is_direct<F: Integrand + ?Sized>(
    mesh: &TriangleMesh,
    f: &F,
    provenance: &DrawProvenance,
) -> Result<FemCoefficients> {
    load_is_with(mesh, |t, k| provenance.evaluate(mesh, t, Some(k), f))
}

#[inline]
fn load_is_with(
    mesh: &TriangleMesh,
    mut value_at: impl FnMut(usize, usize) -> Result<(f64, Point2)>,
) -> Result<FemCoefficients> {
    let mut load = FemCoefficients::zeros(mesh.n_interior());
    for t in 0..mesh.n_triangles() {
        let third = mesh.area(t) / 3.0;
        for (k, node) in mesh.local_unknowns(t).iter().enumerate() {
            if let Some(j) = *node {
                let (fy, _) = value_at(t, k)?;
                load[j] += third * fy;
            }
        }
    }
    Ok(load)
}

/// Barycentric-rule load vector: entry `j` is `Σ_{T∋z_j} (|T|/3) f(z_T)`.
///
/// Non-finite evaluations are propagated; the offending triangles are
/// returned alongside the vector.
pub fn assemble_load_barycentric<F: Integrand + ?Sized>(mesh: &TriangleMesh, f: &F) -> (FemCoefficients, Vec<usize>) {
    let mut load = FemCoefficients::zeros(mesh.n_interior());
    let mut nonfinite = Vec::new();
    for t in 0..mesh.n_triangles() {
        let nodes = mesh.local_unknowns(t);
        if nodes.iter().all(Option::is_none) {
            continue;
        }
        let fz = f.eval(mesh.centroid(t));
        if !fz.is_finite() {
            nonfinite.push(t);
        }
        let w = mesh.area(t) / 3.0 * fz;
        for j in nodes.iter().flatten() {
            load[*j] += w;
        }
    }
    (load, nonfinite)
}

/// P1 element mass matrix `(|T|/12)(1 + δ_ab)`.
pub fn element_mass(area: f64) -> [[f64; 3]; 3] {
    let off = area / 12.0;
    let diag = area / 6.0;
    [[diag, off, off], [off, diag, off], [off, off, diag]]
}

/// Exact mass matrix over the interior nodes.
pub fn assemble_mass(mesh: &TriangleMesh) -> SparseSpdMatrix {
    let mut m = SparseSpdMatrix::interior_pattern(mesh);
    for t in 0..mesh.n_triangles() {
        let local = element_mass(mesh.area(t));
        let nodes = mesh.local_unknowns(t);
        for (a, ia) in nodes.iter().enumerate() {
            let Some(i) = *ia else { continue };
            for (b, jb) in nodes.iter().enumerate() {
                let Some(j) = *jb else { continue };
                m.add(i, j, local[a][b]);
            }
        }
    }
    m
}

/// Exact mass matrix over all vertices (boundary included).
pub fn assemble_mass_vertices(mesh: &TriangleMesh) -> SparseSpdMatrix {
    let mut m = SparseSpdMatrix::vertex_pattern(mesh);
    for t in 0..mesh.n_triangles() {
        let local = element_mass(mesh.area(t));
        let tri = mesh.triangle(t);
        for a in 0..3 {
            for b in 0..3 {
                m.add(tri[a], tri[b], local[a][b]);
            }
        }
    }
    m
}

/// Checks that a load vector matches the mesh.
pub fn check_load(mesh: &TriangleMesh, load: &FemCoefficients) -> Result<()> {
    if load.len() != mesh.n_interior() {
        return Err(param("load vector length differs from the number of interior nodes"));
    }
    Ok(())
}
