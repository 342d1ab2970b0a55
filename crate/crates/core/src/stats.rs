//! Discrete norms, empirical error estimation and convergence-order fitting.

use alloc::vec;
use alloc::vec::Vec;

use crate::assembly::FemCoefficients;
use crate::error::{param, Error, Result};
use crate::sparse::SparseSpdMatrix;

/// Quadratic forms down to this negative value are treated as rounding noise.
pub const NEGATIVE_FORM_TOLERANCE: f64 = 1e-12;

fn matrix_norm(a: &SparseSpdMatrix, v: &[f64]) -> Result<f64> {
    if v.len() != a.dim() {
        return Err(param("coefficient vector length differs from matrix dimension"));
    }
    let q = a.quadratic_form(v);
    if q < -NEGATIVE_FORM_TOLERANCE || q.is_nan() {
        return Err(Error::MatrixValidity(alloc::format!("quadratic form is {q}")));
    }
    Ok(libm::sqrt(q.max(0.0)))
}

/// `|v_h|_{H¹} = √(vᵀ A v)` with `A` the `σ ≡ 1` stiffness matrix.
pub fn h1_seminorm(stiffness: &SparseSpdMatrix, v: &FemCoefficients) -> Result<f64> {
    matrix_norm(stiffness, v.as_slice())
}

/// `‖v_h‖_{L²} = √(vᵀ M v)` with `M` the mass matrix.
pub fn l2_norm(mass: &SparseSpdMatrix, v: &FemCoefficients) -> Result<f64> {
    matrix_norm(mass, v.as_slice())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    H1,
    L2,
}

/// The matrices defining both norms on one mesh.
#[derive(Debug, Clone)]
pub struct NormMatrices {
    pub stiffness: SparseSpdMatrix,
    pub mass: SparseSpdMatrix,
}

impl NormMatrices {
    pub fn new(mesh: &crate::mesh::TriangleMesh) -> Self {
        Self {
            stiffness: crate::assembly::assemble_stiffness_exact(mesh),
            mass: crate::assembly::assemble_mass(mesh),
        }
    }

    pub fn matrix(&self, kind: NormKind) -> &SparseSpdMatrix {
        match kind {
            NormKind::H1 => &self.stiffness,
            NormKind::L2 => &self.mass,
        }
    }

    pub fn norm(&self, kind: NormKind, v: &FemCoefficients) -> Result<f64> {
        matrix_norm(self.matrix(kind), v.as_slice())
    }
}

/// `√( (1/(M−1)) Σᵢ |uᵢ − ū|² )` in the chosen norm.
pub fn empirical_error(samples: &[FemCoefficients], kind: NormKind, matrices: &NormMatrices) -> Result<f64> {
    if samples.len() < 2 {
        return Err(param("empirical error needs at least two samples"));
    }
    let n = samples[0].len();
    if samples.iter().any(|s| s.len() != n) {
        return Err(param("samples have different lengths"));
    }
    let m = samples.len() as f64;
    let mut mean = vec![0.0; n];
    for s in samples {
        for (acc, v) in mean.iter_mut().zip(s.as_slice()) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);
    let a = matrices.matrix(kind);
    let mut sum = 0.0;
    let mut diff = vec![0.0; n];
    for s in samples {
        for ((d, v), mu) in diff.iter_mut().zip(s.as_slice()).zip(&mean) {
            *d = v - mu;
        }
        let q = matrix_norm(a, &diff)?;
        sum += q * q;
    }
    Ok(libm::sqrt(sum / (m - 1.0)))
}

/// Streaming version of [`empirical_error`] for both norms at once.
///
/// Vector Welford update: with `δ = x − μ_old`, `μ_new = μ_old + δ/k`, the
/// scatter grows by `δᵀ A (x − μ_new)`. Results depend on push order only.
#[derive(Debug, Clone)]
pub struct VarianceAccumulator {
    count: usize,
    mean: Vec<f64>,
    scatter_h1: f64,
    scatter_l2: f64,
    delta: Vec<f64>,
    resid: Vec<f64>,
}

impl VarianceAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            scatter_h1: 0.0,
            scatter_l2: 0.0,
            delta: vec![0.0; dim],
            resid: vec![0.0; dim],
        }
    }

    pub fn push(&mut self, sample: &FemCoefficients, matrices: &NormMatrices) -> Result<()> {
        if sample.len() != self.mean.len() {
            return Err(param("sample length differs from accumulator dimension"));
        }
        self.count += 1;
        let k = self.count as f64;
        for i in 0..self.mean.len() {
            let d = sample[i] - self.mean[i];
            self.delta[i] = d;
            self.mean[i] += d / k;
            self.resid[i] = sample[i] - self.mean[i];
        }
        self.scatter_h1 += matrices.stiffness.bilinear(&self.delta, &self.resid);
        self.scatter_l2 += matrices.mass.bilinear(&self.delta, &self.resid);
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> FemCoefficients {
        FemCoefficients(self.mean.clone())
    }

    pub fn error(&self, kind: NormKind) -> Result<f64> {
        if self.count < 2 {
            return Err(param("empirical error needs at least two samples"));
        }
        let scatter = match kind {
            NormKind::H1 => self.scatter_h1,
            NormKind::L2 => self.scatter_l2,
        };
        Ok(libm::sqrt(scatter.max(0.0) / (self.count as f64 - 1.0)))
    }
}

/// Least-squares slope of `log(error)` against `log(h)`.
pub fn fit_convergence_order(hs: &[f64], errors: &[f64]) -> Result<f64> {
    if hs.len() != errors.len() {
        return Err(param("mesh sizes and errors differ in length"));
    }
    if hs.len() < 3 {
        return Err(param("a convergence fit needs at least three points"));
    }
    if hs.iter().chain(errors).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(param("mesh sizes and errors must be positive and finite"));
    }
    let xs: Vec<f64> = hs.iter().map(|&h| libm::log(h)).collect();
    let ys: Vec<f64> = errors.iter().map(|&e| libm::log(e)).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(param("mesh sizes must not all be equal"));
    }
    Ok(sxy / sxx)
}

/// `ℓ_h = max(1, log(1/h))`.
pub fn log_factor(h: f64) -> f64 {
    libm::log(1.0 / h).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TriangleMesh;
    use crate::rng::RngStream;

    #[test]
    fn unit_vector_norms() {
        let mesh = TriangleMesh::structured(3).unwrap();
        let mats = NormMatrices::new(&mesh);
        let h2 = mesh.grid_spacing().unwrap().powi(2);
        let mut e = FemCoefficients::zeros(mesh.n_interior());
        e[20] = 1.0;
        assert!((h1_seminorm(&mats.stiffness, &e).unwrap() - 2.0).abs() < 1e-14);
        assert!((l2_norm(&mats.mass, &e).unwrap() - libm::sqrt(h2 / 2.0)).abs() < 1e-15);
        let zero = FemCoefficients::zeros(mesh.n_interior());
        assert_eq!(h1_seminorm(&mats.stiffness, &zero).unwrap(), 0.0);
        assert_eq!(l2_norm(&mats.mass, &zero).unwrap(), 0.0);
    }

    #[test]
    fn negative_forms_are_rejected() {
        let a = SparseSpdMatrix::from_triplets(1, &[(0, 0, -1.0)]).unwrap();
        assert!(matches!(
            h1_seminorm(&a, &FemCoefficients(vec![1.0])),
            Err(Error::MatrixValidity(_))
        ));
        let tiny = SparseSpdMatrix::from_triplets(1, &[(0, 0, -1e-13)]).unwrap();
        assert_eq!(h1_seminorm(&tiny, &FemCoefficients(vec![1.0])).unwrap(), 0.0);
    }

    #[test]
    fn empirical_error_examples() {
        let mesh = TriangleMesh::structured(2).unwrap();
        let mats = NormMatrices::new(&mesh);
        let u = FemCoefficients((0..9).map(|i| i as f64 * 0.1 - 0.3).collect());
        let same = [u.clone(), u.clone(), u.clone()];
        assert!(empirical_error(&same, NormKind::H1, &mats).unwrap() < 1e-15);
        let neg = FemCoefficients(u.0.iter().map(|v| -v).collect());
        let pair = [u.clone(), neg];
        let expected = libm::sqrt(2.0) * mats.norm(NormKind::L2, &u).unwrap();
        assert!((empirical_error(&pair, NormKind::L2, &mats).unwrap() - expected).abs() < 1e-15);
        assert!(empirical_error(&[u], NormKind::H1, &mats).is_err());
    }

    #[test]
    fn streaming_matches_batch() {
        let mesh = TriangleMesh::structured(3).unwrap();
        let mats = NormMatrices::new(&mesh);
        let mut rng = RngStream::new(7, 0);
        let samples: Vec<FemCoefficients> = (0..50)
            .map(|_| FemCoefficients((0..mesh.n_interior()).map(|_| 1.0 + rng.next_normal()).collect()))
            .collect();
        let mut acc = VarianceAccumulator::new(mesh.n_interior());
        for s in &samples {
            acc.push(s, &mats).unwrap();
        }
        for kind in [NormKind::H1, NormKind::L2] {
            let batch = empirical_error(&samples, kind, &mats).unwrap();
            assert!((acc.error(kind).unwrap() - batch).abs() < 1e-12 * batch);
        }
    }

    #[test]
    fn fits() {
        let hs = [0.5, 0.25, 0.125, 0.0625];
        let lin: Vec<f64> = hs.to_vec();
        let quad: Vec<f64> = hs.iter().map(|h| h * h).collect();
        assert!((fit_convergence_order(&hs, &lin).unwrap() - 1.0).abs() < 1e-14);
        assert!((fit_convergence_order(&hs, &quad).unwrap() - 2.0).abs() < 1e-14);
        assert!(fit_convergence_order(&hs[..2], &lin[..2]).is_err());
        assert!(fit_convergence_order(&hs, &[1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(fit_convergence_order(&[1.0, -1.0, 0.5], &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn log_factor_floor() {
        assert_eq!(log_factor(0.5), 1.0);
        assert!((log_factor(1.0 / 64.0) - libm::log(64.0)).abs() < 1e-15);
    }
}
