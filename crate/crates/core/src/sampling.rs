//! Random points on triangles.
//!
//! Uniform points come from folding a uniform point of the unit square onto the
//! reference simplex and mapping it affinely onto the triangle. Points with the
//! hat density `p_{T,j} = 3|T|⁻¹ φ_j 1_T` come from rejection sampling of
//! `p̂ = 6 φ̂ 1_{S₂}` on the reference simplex with the uniform proposal
//! `g = 2·1_{S₂}` and envelope constant `c = 3`, then the same affine map.

use alloc::vec::Vec;

use crate::error::{param, Error, Result};
use crate::mesh::{Point2, TriangleMesh};
use crate::quadrature::Integrand;
use crate::rng::{Purpose, RngStream, StreamId};

/// Envelope constant `c = sup p̂ / g`.
pub const ENVELOPE: f64 = 3.0;

/// Density of the uniform law on the reference simplex.
pub const PROPOSAL_DENSITY: f64 = 2.0;

/// Proposals allowed per accepted sample before giving up.
pub const MAX_PROPOSALS: u32 = 1_000_000;

/// Maps a point of the unit square onto the reference simplex: kept if
/// `u₁ + u₂ ≤ 1`, otherwise reflected to `(1−u₁, 1−u₂)`.
#[inline]
pub fn fold_to_simplex(u1: f64, u2: f64) -> (f64, f64) {
    if u1 + u2 <= 1.0 {
        (u1, u2)
    } else {
        (1.0 - u1, 1.0 - u2)
    }
}

#[inline]
pub fn sample_uniform_simplex(rng: &mut RngStream) -> (f64, f64) {
    let u1 = rng.next_f64();
    let u2 = rng.next_f64();
    fold_to_simplex(u1, u2)
}

/// Uniform point on triangle `t` (image of a uniform simplex point under `Γ⁻¹`).
pub fn sample_uniform_triangle(mesh: &TriangleMesh, t: usize, rng: &mut RngStream) -> Result<Point2> {
    let [p0, p1, p2] = mesh.corners(t);
    let (a, b) = sample_uniform_simplex(rng);
    Ok(p0 + (p1 - p0) * a + (p2 - p0) * b)
}

/// The reference hat `φ̂` attached to a local corner: `1−α−β`, `α` or `β`.
#[inline]
fn reference_hat(local_vertex: usize, a: f64, b: f64) -> f64 {
    match local_vertex {
        0 => 1.0 - a - b,
        1 => a,
        _ => b,
    }
}

#[inline]
fn in_simplex(a: f64, b: f64) -> bool {
    a >= 0.0 && b >= 0.0 && a + b <= 1.0
}

/// `p̂(α, β) = 6 φ̂(α, β)` on the closed simplex, zero elsewhere.
pub fn hat_density_reference(local_vertex: usize, a: f64, b: f64) -> f64 {
    if local_vertex > 2 || !in_simplex(a, b) {
        return 0.0;
    }
    6.0 * reference_hat(local_vertex, a, b)
}

/// The acceptance test `Y·g(Z) ≤ p̂(Z)`; equality accepts.
#[inline]
pub fn accepts(local_vertex: usize, z: (f64, f64), y: f64) -> bool {
    let g = if in_simplex(z.0, z.1) { PROPOSAL_DENSITY } else { 0.0 };
    y * g <= hat_density_reference(local_vertex, z.0, z.1)
}

/// Draws from `p̂` and also returns the number of proposals used.
pub fn sample_hat_reference_counted(local_vertex: usize, rng: &mut RngStream) -> Result<((f64, f64), u32)> {
    if local_vertex > 2 {
        return Err(param("local vertex must be 0, 1 or 2"));
    }
    for proposals in 1..=MAX_PROPOSALS {
        let z = sample_uniform_simplex(rng);
        let y = ENVELOPE * rng.next_f64();
        if accepts(local_vertex, z, y) {
            return Ok((z, proposals));
        }
    }
    Err(Error::Internal(alloc::format!(
        "rejection sampler exceeded {MAX_PROPOSALS} proposals"
    )))
}

/// Draws from `p̂` for the given local corner.
pub fn sample_hat_reference(local_vertex: usize, rng: &mut RngStream) -> Result<(f64, f64)> {
    sample_hat_reference_counted(local_vertex, rng).map(|(z, _)| z)
}

fn sample_hat_local(mesh: &TriangleMesh, t: usize, local_vertex: usize, rng: &mut RngStream) -> Result<Point2> {
    let [p0, p1, p2] = mesh.corners(t);
    let (a, b) = sample_hat_reference(local_vertex, rng)?;
    Ok(p0 + (p1 - p0) * a + (p2 - p0) * b)
}

/// `Y_{T,j}`: a point of `t` with density `3|T|⁻¹ φ_j`.
pub fn sample_y_tj(mesh: &TriangleMesh, t: usize, j: usize, rng: &mut RngStream) -> Result<Point2> {
    mesh.triangle_area(t)?;
    if j >= mesh.n_interior() {
        return Err(param("interior node index out of range"));
    }
    let k = mesh
        .local_vertex(t, j)
        .ok_or_else(|| param(alloc::format!("triangle {t} is not incident to interior node {j}")))?;
    sample_hat_local(mesh, t, k, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawKind {
    /// One `Z_T ~ U(T)` per triangle.
    UniformPerTriangle,
    /// One `Y_{T,j}` per (triangle, interior corner).
    HatPerTriangleVertex,
}

/// Where the variates of a draw came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DrawProvenance {
    pub seed: u64,
    pub replication: u32,
    pub level: u8,
    pub purpose: Purpose,
}

impl DrawProvenance {
    /// Provenance for `mesh`, using its structured level (0 otherwise).
    pub fn for_mesh(mesh: &TriangleMesh, seed: u64, replication: u32, purpose: Purpose) -> Self {
        Self {
            seed,
            replication,
            level: mesh.level().unwrap_or(0) as u8,
            purpose,
        }
    }

    pub fn stream(&self, triangle: usize, vertex: u8) -> Result<StreamId> {
        StreamId::new(self.replication, self.level, self.purpose, triangle, vertex)
    }

    /// The point of `(t, local_vertex)` (`None`: uniform on `t`) read from its
    /// stream, or from the resample stream of the same address.
    pub fn sample(&self, mesh: &TriangleMesh, t: usize, local_vertex: Option<usize>, resample: bool) -> Result<Point2> {
        let vertex = local_vertex.map_or(StreamId::PER_TRIANGLE, |k| k as u8);
        let mut id = self.stream(t, vertex)?;
        if resample {
            id = id.resampled();
        }
        let mut rng = RngStream::for_id(self.seed, id);
        match local_vertex {
            None => sample_uniform_triangle(mesh, t, &mut rng),
            Some(k) => sample_hat_local(mesh, t, k, &mut rng),
        }
    }

    /// Evaluates `v` at the point of `(t, local_vertex)` without storing a
    /// draw; same values and resample policy as [`QuadratureDraw::evaluate`].
    pub fn evaluate<V: Integrand + ?Sized>(
        &self,
        mesh: &TriangleMesh,
        t: usize,
        local_vertex: Option<usize>,
        v: &V,
    ) -> Result<(f64, Point2)> {
        let p = self.sample(mesh, t, local_vertex, false)?;
        self.evaluate_at(mesh, t, local_vertex, p, v)
    }

    fn evaluate_at<V: Integrand + ?Sized>(
        &self,
        mesh: &TriangleMesh,
        t: usize,
        local_vertex: Option<usize>,
        p: Point2,
        v: &V,
    ) -> Result<(f64, Point2)> {
        let value = v.eval(p);
        if value.is_finite() {
            return Ok((value, p));
        }
        let q = self.sample(mesh, t, local_vertex, true)?;
        let value = v.eval(q);
        if value.is_finite() {
            Ok((value, q))
        } else {
            Err(Error::Singular { triangle: t, local_vertex })
        }
    }
}

#[derive(Debug, Clone)]
enum Points {
    Uniform(Vec<Point2>),
    Hat(Vec<[Option<Point2>; 3]>),
}

/// The sampled points of one realization of a randomized quadrature rule.
#[derive(Debug, Clone)]
pub struct QuadratureDraw {
    provenance: DrawProvenance,
    points: Points,
}

impl QuadratureDraw {
    /// One uniform point per triangle, triangle `t` reading stream
    /// `(replication, level, purpose, t, PER_TRIANGLE)`.
    pub fn uniform(mesh: &TriangleMesh, provenance: DrawProvenance) -> Result<Self> {
        let mut points = Vec::with_capacity(mesh.n_triangles());
        for t in 0..mesh.n_triangles() {
            points.push(provenance.sample(mesh, t, None, false)?);
        }
        Ok(Self {
            provenance,
            points: Points::Uniform(points),
        })
    }

    /// One hat-density point per (triangle, interior corner), pair `(t, k)`
    /// reading stream `(replication, level, purpose, t, k)`.
    pub fn hat(mesh: &TriangleMesh, provenance: DrawProvenance) -> Result<Self> {
        let mut points = Vec::with_capacity(mesh.n_triangles());
        for t in 0..mesh.n_triangles() {
            let mut slot = [None; 3];
            for (k, unknown) in mesh.local_unknowns(t).into_iter().enumerate() {
                if unknown.is_some() {
                    slot[k] = Some(provenance.sample(mesh, t, Some(k), false)?);
                }
            }
            points.push(slot);
        }
        Ok(Self {
            provenance,
            points: Points::Hat(points),
        })
    }

    /// A uniform-kind draw with caller-chosen points (one per triangle, each
    /// inside its triangle). Resampling uses `provenance`.
    pub fn from_points(mesh: &TriangleMesh, points: Vec<Point2>, provenance: DrawProvenance) -> Result<Self> {
        if points.len() != mesh.n_triangles() {
            return Err(param("a uniform draw needs exactly one point per triangle"));
        }
        for (t, &p) in points.iter().enumerate() {
            if !mesh.barycentric(t, p).iter().all(|&l| l >= -1e-12) {
                return Err(param(alloc::format!("point for triangle {t} lies outside it")));
            }
        }
        Ok(Self {
            provenance,
            points: Points::Uniform(points),
        })
    }

    pub fn kind(&self) -> DrawKind {
        match self.points {
            Points::Uniform(_) => DrawKind::UniformPerTriangle,
            Points::Hat(_) => DrawKind::HatPerTriangleVertex,
        }
    }

    pub fn provenance(&self) -> DrawProvenance {
        self.provenance
    }

    pub fn n_triangles(&self) -> usize {
        match &self.points {
            Points::Uniform(p) => p.len(),
            Points::Hat(p) => p.len(),
        }
    }

    /// `Z_T` of a uniform draw.
    pub fn uniform_point(&self, t: usize) -> Option<Point2> {
        match &self.points {
            Points::Uniform(p) => p.get(t).copied(),
            Points::Hat(_) => None,
        }
    }

    /// `Y_{T,j}` of a hat draw, addressed by the local corner of `z_j` in `t`.
    pub fn hat_point(&self, t: usize, local_vertex: usize) -> Option<Point2> {
        match &self.points {
            Points::Hat(p) => p.get(t).and_then(|s| s.get(local_vertex).copied().flatten()),
            Points::Uniform(_) => None,
        }
    }

    pub(crate) fn require(&self, kind: DrawKind, mesh: &TriangleMesh) -> Result<()> {
        if self.kind() != kind {
            return Err(param("draw has the wrong kind for this estimator"));
        }
        if self.n_triangles() != mesh.n_triangles() {
            return Err(param("draw does not match the mesh"));
        }
        Ok(())
    }

    /// Evaluates `v` at the stored point of `(t, local_vertex)` (`None` for
    /// uniform draws). A non-finite value triggers one replacement point from
    /// the resample stream of the same address; if that is non-finite too the
    /// evaluation fails. Returns the value and the point actually used.
    pub fn evaluate<V: Integrand + ?Sized>(
        &self,
        mesh: &TriangleMesh,
        t: usize,
        local_vertex: Option<usize>,
        v: &V,
    ) -> Result<(f64, Point2)> {
        let p = match local_vertex {
            None => self.uniform_point(t),
            Some(k) => self.hat_point(t, k),
        }
        .ok_or_else(|| param("no draw point at this address"))?;
        self.provenance.evaluate_at(mesh, t, local_vertex, p, v)
    }
}
