//! Conforming triangulations, P1 hat functions and affine reference maps.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use crate::error::{param, Error, Result};

/// Triangles with area below this are rejected; the reference map would be
/// numerically singular.
pub const DEGENERATE_AREA: f64 = 1e-14;

/// Largest structured level accepted by [`TriangleMesh::structured`].
pub const MAX_LEVEL: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// z-component of the cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.dot(self))
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Self) -> Self {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Self) -> Self {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Self {
        Point2::new(self.x * s, self.y * s)
    }
}

/// `p ↦ linear · p + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub linear: [[f64; 2]; 2],
    pub offset: Point2,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        linear: [[1.0, 0.0], [0.0, 1.0]],
        offset: Point2::new(0.0, 0.0),
    };

    #[inline]
    pub fn apply(&self, p: Point2) -> Point2 {
        let m = &self.linear;
        Point2::new(
            m[0][0] * p.x + m[0][1] * p.y + self.offset.x,
            m[1][0] * p.x + m[1][1] * p.y + self.offset.y,
        )
    }

    pub fn det(&self) -> f64 {
        let m = &self.linear;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return Err(Error::MeshValidity("affine map is singular".into()));
        }
        let m = &self.linear;
        let inv = [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]];
        let o = self.offset;
        let offset = Point2::new(
            -(inv[0][0] * o.x + inv[0][1] * o.y),
            -(inv[1][0] * o.x + inv[1][1] * o.y),
        );
        Ok(AffineMap { linear: inv, offset })
    }
}

/// A conforming P1 triangulation with homogeneous Dirichlet boundary.
///
/// Immutable after construction. Interior nodes are numbered in increasing
/// vertex order; they index the unknowns of every assembled system.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    areas: Vec<f64>,
    interior_nodes: Vec<usize>,
    interior_index: Vec<Option<usize>>,
    node_to_triangles: Vec<Vec<usize>>,
    h: f64,
    level: Option<u32>,
}

/// Summary produced by [`TriangleMesh::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct MeshReport {
    pub vertices: usize,
    pub triangles: usize,
    pub interior_nodes: usize,
    pub h: f64,
    pub area_sum: f64,
    pub min_area: f64,
    pub max_area: f64,
    /// `min |T| / h²`, the quasi-uniformity witness.
    pub quasi_uniformity: f64,
    pub boundary_edges: usize,
}

impl TriangleMesh {
    /// Builds a mesh from raw data. Every triangle must be counterclockwise with
    /// area at least [`DEGENERATE_AREA`]. Vertices flagged `boundary` carry the
    /// Dirichlet condition; the rest become unknowns.
    pub fn new(vertices: Vec<Point2>, triangles: Vec<[usize; 3]>, boundary: Vec<bool>) -> Result<Self> {
        if boundary.len() != vertices.len() {
            return Err(param("boundary flag count differs from vertex count"));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::MeshValidity(format!("vertex {i} is not finite")));
        }
        let mut areas = Vec::with_capacity(triangles.len());
        let mut h: f64 = 0.0;
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::MeshValidity(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::MeshValidity(format!("triangle {t} repeats a vertex")));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let signed = 0.5 * (b - a).cross(c - a);
            if signed.abs() < DEGENERATE_AREA {
                return Err(Error::MeshValidity(format!("triangle {t} is degenerate (area {signed:e})")));
            }
            if signed < 0.0 {
                return Err(Error::MeshValidity(format!("triangle {t} is clockwise")));
            }
            areas.push(signed);
            h = h.max((b - a).norm()).max((c - b).norm()).max((a - c).norm());
        }

        let mut interior_index = vec![None; vertices.len()];
        let mut interior_nodes = Vec::new();
        for (v, &on_boundary) in boundary.iter().enumerate() {
            if !on_boundary {
                interior_index[v] = Some(interior_nodes.len());
                interior_nodes.push(v);
            }
        }
        let mut node_to_triangles = vec![Vec::new(); interior_nodes.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if let Some(j) = interior_index[v] {
                    node_to_triangles[j].push(t);
                }
            }
        }

        Ok(Self {
            vertices,
            triangles,
            boundary,
            areas,
            interior_nodes,
            interior_index,
            node_to_triangles,
            h,
            level: None,
        })
    }

    /// Unit square cut into `2ⁿ × 2ⁿ` squares, each bisected along the diagonal
    /// from its upper-left to its lower-right corner.
    ///
    /// Vertex `(i, j)` (column `i`, row `j`, origin bottom-left) has index
    /// `j·(2ⁿ+1) + i`. Square `(i, j)` contributes the lower-left triangle
    /// followed by the upper-right one.
    pub fn structured(n: u32) -> Result<Self> {
        if !(1..=MAX_LEVEL).contains(&n) {
            return Err(param(format!("structured level must be in 1..={MAX_LEVEL}, got {n}")));
        }
        let cells = 1usize << n;
        let side = cells + 1;
        let spacing = 1.0 / cells as f64;
        let mut vertices = Vec::with_capacity(side * side);
        let mut boundary = Vec::with_capacity(side * side);
        for j in 0..side {
            for i in 0..side {
                vertices.push(Point2::new(i as f64 * spacing, j as f64 * spacing));
                boundary.push(i == 0 || j == 0 || i == cells || j == cells);
            }
        }
        let mut triangles = Vec::with_capacity(2 * cells * cells);
        for j in 0..cells {
            for i in 0..cells {
                let ll = j * side + i;
                let lr = ll + 1;
                let ul = ll + side;
                let ur = ul + 1;
                triangles.push([ll, lr, ul]);
                triangles.push([lr, ur, ul]);
            }
        }
        let mut mesh = Self::new(vertices, triangles, boundary)?;
        mesh.level = Some(n);
        Ok(mesh)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// `N_h`, the number of unknowns.
    pub fn n_interior(&self) -> usize {
        self.interior_nodes.len()
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn vertex(&self, v: usize) -> Point2 {
        self.vertices[v]
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn corners(&self, t: usize) -> [Point2; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    /// Vertex index of interior node `j`.
    pub fn interior_node(&self, j: usize) -> usize {
        self.interior_nodes[j]
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    /// Interior-node index of vertex `v`, `None` for boundary vertices.
    pub fn interior_index(&self, v: usize) -> Option<usize> {
        self.interior_index[v]
    }

    /// Interior-node indices of the three corners of `t`.
    pub fn local_unknowns(&self, t: usize) -> [Option<usize>; 3] {
        self.triangles[t].map(|v| self.interior_index[v])
    }

    /// Triangles having interior node `j` as a vertex.
    pub fn node_triangles(&self, j: usize) -> &[usize] {
        &self.node_to_triangles[j]
    }

    /// Maximal edge length.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Structured level `n`, if the mesh came from [`TriangleMesh::structured`].
    pub fn level(&self) -> Option<u32> {
        self.level
    }

    /// Square side `2⁻ⁿ` of a structured mesh.
    pub fn grid_spacing(&self) -> Option<f64> {
        self.level.map(|n| 1.0 / (1u64 << n) as f64)
    }

    fn check_triangle(&self, t: usize) -> Result<()> {
        if t >= self.triangles.len() {
            return Err(param(format!("triangle index {t} out of range")));
        }
        Ok(())
    }

    fn check_node(&self, j: usize) -> Result<()> {
        if j >= self.interior_nodes.len() {
            return Err(param(format!("interior node index {j} out of range")));
        }
        Ok(())
    }

    /// `|T|`.
    pub fn triangle_area(&self, t: usize) -> Result<f64> {
        self.check_triangle(t)?;
        Ok(self.areas[t])
    }

    /// Unchecked `|T|` for inner loops.
    #[inline]
    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn barycenter(&self, t: usize) -> Result<Point2> {
        self.check_triangle(t)?;
        Ok(self.centroid(t))
    }

    #[inline]
    pub(crate) fn centroid(&self, t: usize) -> Point2 {
        let [a, b, c] = self.corners(t);
        Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    /// Barycentric coordinates of `p` with respect to triangle `t`; these are
    /// the values of the three local hat functions at `p`.
    #[inline]
    pub fn barycentric(&self, t: usize, p: Point2) -> [f64; 3] {
        let [a, b, c] = self.corners(t);
        let twice = 2.0 * self.areas[t];
        let l1 = (p - a).cross(c - a) / twice;
        let l2 = (b - a).cross(p - a) / twice;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Gradients of the three local hat functions on `t` (constant on `t`).
    #[inline]
    pub fn local_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.corners(t);
        let twice = 2.0 * self.areas[t];
        [
            [(b.y - c.y) / twice, (c.x - b.x) / twice],
            [(c.y - a.y) / twice, (a.x - c.x) / twice],
            [(a.y - b.y) / twice, (b.x - a.x) / twice],
        ]
    }

    /// Position of interior node `j` among the corners of `t`.
    pub fn local_vertex(&self, t: usize, j: usize) -> Option<usize> {
        let v = self.interior_nodes[j];
        self.triangles[t].iter().position(|&w| w == v)
    }

    fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }

    /// Value of the hat function `φ_j` at `p`.
    pub fn basis_value(&self, j: usize, p: Point2) -> Result<f64> {
        self.check_node(j)?;
        let (lo, hi) = self.bounding_box();
        if !p.is_finite() || p.x < lo.x || p.x > hi.x || p.y < lo.y || p.y > hi.y {
            return Err(param("point lies outside the domain"));
        }
        const INSIDE_TOL: f64 = 1e-12;
        for &t in &self.node_to_triangles[j] {
            let lambda = self.barycentric(t, p);
            if lambda.iter().all(|&l| l >= -INSIDE_TOL) {
                let k = self.local_vertex(t, j).expect("adjacency lists only incident triangles");
                return Ok(lambda[k].clamp(0.0, 1.0));
            }
        }
        Ok(0.0)
    }

    /// Constant gradient of `φ_j` on triangle `t`; zero when `t` is not incident to `z_j`.
    pub fn basis_gradient_on_triangle(&self, j: usize, t: usize) -> Result<[f64; 2]> {
        self.check_node(j)?;
        self.check_triangle(t)?;
        Ok(match self.local_vertex(t, j) {
            Some(k) => self.local_gradients(t)[k],
            None => [0.0, 0.0],
        })
    }

    /// `Γ⁻¹`: reference simplex → `t`, sending `(0,0)`, `(1,0)`, `(0,1)` to the
    /// local corners `ordering[0]`, `ordering[1]`, `ordering[2]`.
    pub fn from_reference(&self, t: usize, ordering: [usize; 3]) -> Result<AffineMap> {
        self.check_triangle(t)?;
        let mut seen = [false; 3];
        for &k in &ordering {
            if k > 2 || seen[k] {
                return Err(param("ordering must be a permutation of 0, 1, 2"));
            }
            seen[k] = true;
        }
        let c = self.corners(t);
        let (p1, p2, p3) = (c[ordering[0]], c[ordering[1]], c[ordering[2]]);
        let map = AffineMap {
            linear: [[p2.x - p1.x, p3.x - p1.x], [p2.y - p1.y, p3.y - p1.y]],
            offset: p1,
        };
        if map.det().abs() < 2.0 * DEGENERATE_AREA {
            return Err(Error::MeshValidity(format!("triangle {t} is degenerate")));
        }
        Ok(map)
    }

    /// `Γ`: `t` → reference simplex, the inverse of [`Self::from_reference`].
    pub fn to_reference(&self, t: usize, ordering: [usize; 3]) -> Result<AffineMap> {
        self.from_reference(t, ordering)?.inverse()
    }

    /// Full admissibility check.
    ///
    /// Verifies orientation-consistent edge sharing, that every unshared edge
    /// joins two boundary vertices and carries no other vertex in its interior,
    /// the adjacency lists, Weitzenböck's bound `|T| ≤ (√3/4)h²`, and, when the
    /// vertices span the unit square, that the areas sum to one.
    pub fn validate(&self) -> Result<MeshReport> {
        let mut edges: Vec<(usize, usize, usize)> = Vec::with_capacity(3 * self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edges.push((a.min(b), a.max(b), t));
            }
        }
        edges.sort_unstable();
        let mut boundary_edges = Vec::new();
        let mut i = 0;
        while i < edges.len() {
            let mut k = i + 1;
            while k < edges.len() && edges[k].0 == edges[i].0 && edges[k].1 == edges[i].1 {
                k += 1;
            }
            let (a, b, t) = edges[i];
            match k - i {
                1 => {
                    if !(self.boundary[a] && self.boundary[b]) {
                        return Err(Error::MeshValidity(format!(
                            "edge ({a}, {b}) of triangle {t} is unshared but not on the boundary"
                        )));
                    }
                    boundary_edges.push((a, b));
                }
                2 => {
                    let t2 = edges[i + 1].2;
                    if self.directed(t, a, b) == self.directed(t2, a, b) {
                        return Err(Error::MeshValidity(format!(
                            "triangles {t} and {t2} overlap across edge ({a}, {b})"
                        )));
                    }
                }
                m => {
                    return Err(Error::MeshValidity(format!("edge ({a}, {b}) is shared by {m} triangles")));
                }
            }
            i = k;
        }
        self.check_hanging_vertices(&boundary_edges)?;

        for (j, list) in self.node_to_triangles.iter().enumerate() {
            let v = self.interior_nodes[j];
            let expected = self.triangles.iter().filter(|tri| tri.contains(&v)).count();
            if expected != list.len() || list.iter().any(|&t| !self.triangles[t].contains(&v)) {
                return Err(Error::MeshValidity(format!("adjacency of interior node {j} is inconsistent")));
            }
        }

        let area_sum: f64 = self.areas.iter().sum();
        let min_area = self.areas.iter().copied().fold(f64::INFINITY, f64::min);
        let max_area = self.areas.iter().copied().fold(0.0, f64::max);
        let weitzenboeck = libm::sqrt(3.0) / 4.0 * self.h * self.h;
        if max_area > weitzenboeck * (1.0 + 1e-12) {
            return Err(Error::MeshValidity(format!(
                "max area {max_area:e} exceeds Weitzenböck bound {weitzenboeck:e}"
            )));
        }
        let (lo, hi) = self.bounding_box();
        let unit_square = lo == Point2::new(0.0, 0.0) && hi == Point2::new(1.0, 1.0);
        if unit_square && (area_sum - 1.0).abs() > 1e-12 {
            return Err(Error::MeshValidity(format!(
                "triangles cover area {area_sum} of the unit square"
            )));
        }
        Ok(MeshReport {
            vertices: self.vertices.len(),
            triangles: self.triangles.len(),
            interior_nodes: self.interior_nodes.len(),
            h: self.h,
            area_sum,
            min_area,
            max_area,
            quasi_uniformity: min_area / (self.h * self.h),
            boundary_edges: boundary_edges.len(),
        })
    }

    fn directed(&self, t: usize, a: usize, b: usize) -> bool {
        let tri = self.triangles[t];
        (0..3).any(|k| tri[k] == a && tri[(k + 1) % 3] == b)
    }

    /// No vertex may sit in the open interior of an unshared edge. Vertices
    /// are bucketed on a uniform grid of cell size ~h so each edge only tests
    /// its neighbourhood.
    fn check_hanging_vertices(&self, edges: &[(usize, usize)]) -> Result<()> {
        if edges.is_empty() || self.vertices.is_empty() {
            return Ok(());
        }
        let (lo, hi) = self.bounding_box();
        let extent = (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE);
        let cells = ((extent / self.h) as usize).clamp(1, 4096);
        let cell_of = |p: Point2| {
            let cx = (((p.x - lo.x) / extent) * cells as f64) as usize;
            let cy = (((p.y - lo.y) / extent) * cells as f64) as usize;
            (cx.min(cells - 1), cy.min(cells - 1))
        };
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); cells * cells];
        for (v, &p) in self.vertices.iter().enumerate() {
            let (cx, cy) = cell_of(p);
            buckets[cy * cells + cx].push(v);
        }
        for &(a, b) in edges {
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let (ca, cb) = (cell_of(pa), cell_of(pb));
            let tol = 1e-10 * (pb - pa).norm();
            for cy in ca.1.min(cb.1)..=ca.1.max(cb.1) {
                for cx in ca.0.min(cb.0)..=ca.0.max(cb.0) {
                    for &v in &buckets[cy * cells + cx] {
                        if v == a || v == b {
                            continue;
                        }
                        let p = self.vertices[v];
                        let d = pb - pa;
                        let along = (p - pa).dot(d) / d.dot(d);
                        let off = (p - pa).cross(d).abs() / d.norm();
                        if off <= tol && along > 0.0 && along < 1.0 {
                            return Err(Error::MeshValidity(format!(
                                "vertex {v} lies inside edge ({a}, {b}) (non-conforming)"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
