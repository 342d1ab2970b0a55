//! Forcing terms used by the experiments.

use alloc::boxed::Box;
use core::f64::consts::PI;
use core::fmt;

use crate::mesh::Point2;
use crate::quadrature::Integrand;

/// Exponent of the line singularity in `f₁`.
pub const SINGULAR_EXPONENT: f64 = 0.49;

/// Shift used by `f̃₁`: the double-precision machine epsilon.
pub const F1_EPS_SHIFT: f64 = f64::EPSILON;

/// Three-valued sign with `sgn(0) = 0`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ForcingId {
    F1,
    F1Eps,
    F2,
    Const,
    Custom,
}

impl ForcingId {
    pub fn name(self) -> &'static str {
        match self {
            ForcingId::F1 => "f1",
            ForcingId::F1Eps => "f1eps",
            ForcingId::F2 => "f2",
            ForcingId::Const => "const",
            ForcingId::Custom => "custom",
        }
    }
}

impl fmt::Display for ForcingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub enum ForcingTerm {
    /// `f₁(x,y) = |x−y|^{−0.49} + 10 sin(8πx) sgn(2y−x)`; infinite on `x = y`.
    F1,
    /// `f̃₁`, as `f₁` with `|x−y|` replaced by `eps + |x−y|`.
    F1Eps,
    /// `f₂(x,y) = 8x(1−x)y(1−y)`.
    F2,
    Const(f64),
    Custom(Box<dyn Fn(Point2) -> f64 + Send + Sync>),
}

impl fmt::Debug for ForcingTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForcingTerm::Const(c) => write!(f, "Const({c})"),
            other => f.write_str(other.id().name()),
        }
    }
}

/// `d^{−q}` as `exp(−q ln d)`, several times faster than `pow` here; `d = 0` gives `+∞`.
#[inline]
fn singular_part(d: f64) -> f64 {
    libm::exp(-SINGULAR_EXPONENT * libm::log(d))
}

#[inline]
fn oscillation(p: Point2) -> f64 {
    10.0 * libm::sin(8.0 * PI * p.x) * sgn(2.0 * p.y - p.x)
}

impl ForcingTerm {
    pub fn id(&self) -> ForcingId {
        match self {
            ForcingTerm::F1 => ForcingId::F1,
            ForcingTerm::F1Eps => ForcingId::F1Eps,
            ForcingTerm::F2 => ForcingId::F2,
            ForcingTerm::Const(_) => ForcingId::Const,
            ForcingTerm::Custom(_) => ForcingId::Custom,
        }
    }

    #[inline]
    pub fn evaluate(&self, p: Point2) -> f64 {
        match self {
            ForcingTerm::F1 => singular_part((p.x - p.y).abs()) + oscillation(p),
            ForcingTerm::F1Eps => singular_part(F1_EPS_SHIFT + (p.x - p.y).abs()) + oscillation(p),
            ForcingTerm::F2 => 8.0 * p.x * (1.0 - p.x) * p.y * (1.0 - p.y),
            ForcingTerm::Const(c) => *c,
            ForcingTerm::Custom(f) => f(p),
        }
    }

    /// `∫_{(0,1)²} f`, where known in closed form.
    ///
    /// For `f₁`: `∫∫|x−y|^{−q} = 2/((1−q)(2−q))`, and since
    /// `∫₀¹ sgn(2y−x) dy = 1−x`, the oscillating part contributes
    /// `10 ∫₀¹ (1−x) sin(8πx) dx = 10/(8π)`.
    pub fn unit_square_integral(&self) -> Option<f64> {
        let q = SINGULAR_EXPONENT;
        match self {
            ForcingTerm::F1 => Some(2.0 / ((1.0 - q) * (2.0 - q)) + 10.0 / (8.0 * PI)),
            ForcingTerm::F2 => Some(2.0 / 9.0),
            ForcingTerm::Const(c) => Some(*c),
            _ => None,
        }
    }
}

impl Integrand for ForcingTerm {
    #[inline]
    fn eval(&self, p: Point2) -> f64 {
        self.evaluate(p)
    }
}
