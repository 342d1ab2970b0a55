//! Scalar quadrature over a triangulation.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{param, Result};
use crate::mesh::{Point2, TriangleMesh};
use crate::sampling::{DrawKind, QuadratureDraw};

/// A function on the domain. May be singular on a null set; evaluations there
/// return a non-finite value.
pub trait Integrand {
    fn eval(&self, p: Point2) -> f64;
}

impl<F: Fn(Point2) -> f64> Integrand for F {
    #[inline]
    fn eval(&self, p: Point2) -> f64 {
        self(p)
    }
}

/// Stratified Monte Carlo rule `Σ_T |T| v(Z_T)`.
pub fn q_mc<V: Integrand + ?Sized>(v: &V, mesh: &TriangleMesh, draw: &QuadratureDraw) -> Result<f64> {
    draw.require(DrawKind::UniformPerTriangle, mesh)?;
    let mut sum = 0.0;
    for t in 0..mesh.n_triangles() {
        let (value, _) = draw.evaluate(mesh, t, None, v)?;
        sum += mesh.area(t) * value;
    }
    Ok(sum)
}

/// Result of a deterministic rule that may hit singular points.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleValue {
    pub value: f64,
    /// Triangles whose evaluation point gave a non-finite value.
    pub nonfinite_triangles: Vec<usize>,
}

/// One-point Gauss rule `Σ_T |T| v(z_T)` at the barycenters. Non-finite values
/// propagate into the result and are listed.
pub fn barycentric_quadrature<V: Integrand + ?Sized>(v: &V, mesh: &TriangleMesh) -> RuleValue {
    let mut value = 0.0;
    let mut nonfinite_triangles = Vec::new();
    for t in 0..mesh.n_triangles() {
        let fv = v.eval(mesh.centroid(t));
        if !fv.is_finite() {
            nonfinite_triangles.push(t);
        }
        value += mesh.area(t) * fv;
    }
    RuleValue {
        value,
        nonfinite_triangles,
    }
}

/// `n`-point Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_n and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// A quadrature rule on the reference simplex; weights sum to `1/2`.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    pub const MIN_DEGREE: usize = 2;
    pub const MAX_DEGREE: usize = 10;

    /// Conical-product (collapsed Gauss–Legendre) rule exact for all
    /// polynomials of total degree `≤ degree`.
    pub fn conical(degree: usize) -> Result<Self> {
        if !(Self::MIN_DEGREE..=Self::MAX_DEGREE).contains(&degree) {
            return Err(param(format!(
                "oracle degree must be in {}..={}, got {degree}",
                Self::MIN_DEGREE,
                Self::MAX_DEGREE
            )));
        }
        // x = u, y = (1−u)v with Jacobian (1−u): the u-integrand has degree ≤ degree+1.
        let k = (degree + 3) / 2;
        let (nodes, weights) = gauss_legendre(k);
        let mut points = Vec::with_capacity(k * k);
        let mut w = Vec::with_capacity(k * k);
        for (&u, &wu) in nodes.iter().zip(&weights) {
            for (&v, &wv) in nodes.iter().zip(&weights) {
                points.push((u, (1.0 - u) * v));
                w.push(wu * wv * (1.0 - u));
            }
        }
        Ok(Self {
            points,
            weights: w,
            degree,
        })
    }

    /// `∫_T v` on triangle `t`.
    pub fn integrate_on<V: Integrand + ?Sized>(&self, mesh: &TriangleMesh, t: usize, v: &V) -> f64 {
        let [a, b, c] = mesh.corners(t);
        let mut sum = 0.0;
        for (&(s, r), &w) in self.points.iter().zip(&self.weights) {
            let p = Point2::new(a.x + s * (b.x - a.x) + r * (c.x - a.x), a.y + s * (b.y - a.y) + r * (c.y - a.y));
            sum += w * v.eval(p);
        }
        2.0 * mesh.area(t) * sum
    }
}

/// High-order deterministic reference integral of `v` over the mesh. Exact for
/// piecewise polynomials of total degree `≤ degree`.
pub fn gauss_oracle<V: Integrand + ?Sized>(v: &V, mesh: &TriangleMesh, degree: usize) -> Result<f64> {
    let rule = TriangleRule::conical(degree)?;
    Ok((0..mesh.n_triangles()).map(|t| rule.integrate_on(mesh, t, v)).sum())
}
