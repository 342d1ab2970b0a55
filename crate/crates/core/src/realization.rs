//! Algorithm-level building blocks for one realization of a randomized
//! finite element solution. The timed driver lives in the `randfem` crate.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::assembly::{
    assemble_load_barycentric, assemble_load_is_direct, assemble_load_mc_direct, assemble_stiffness_exact, assemble_stiffness_mc,
    CoefficientField, FemCoefficients,
};
use crate::error::{param, Error, Result};
use crate::mesh::TriangleMesh;
use crate::quadrature::Integrand;
use crate::rng::Purpose;
use crate::sampling::{DrawProvenance, QuadratureDraw};
use crate::sparse::SparseSpdMatrix;

/// Load-vector estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    /// Stratified Monte Carlo for both the stiffness matrix and the load.
    Mc,
    /// Importance sampling for the load, exact stiffness (`σ ≡ 1` only).
    Is,
    /// Deterministic barycentric rule for the load (`σ ≡ 1` only).
    Barycentric,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Mc => "mc",
            Estimator::Is => "is",
            Estimator::Barycentric => "barycentric",
        }
    }

    pub fn is_random(self) -> bool {
        !matches!(self, Estimator::Barycentric)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc" => Ok(Estimator::Mc),
            "is" => Ok(Estimator::Is),
            "barycentric" => Ok(Estimator::Barycentric),
            other => Err(param(alloc::format!("unknown estimator '{other}'"))),
        }
    }
}

/// IS and barycentric discretizations keep the exact bilinear form, which is
/// only available for `σ ≡ 1`.
pub fn check_estimator_sigma<S: CoefficientField + ?Sized>(estimator: Estimator, sigma: &S) -> Result<()> {
    if estimator != Estimator::Mc && sigma.constant() != Some(1.0) {
        return Err(param(alloc::format!("{} requires sigma=unit", estimator.name().to_uppercase())));
    }
    Ok(())
}

/// System matrix of one realization.
///
/// MC with non-constant `σ` draws `Z¹` from the `Stiffness` streams. For
/// constant `σ ≡ c` every draw gives the same matrix, so it is assembled
/// without sampling (bitwise identical to the sampled result).
pub fn system_matrix<S: CoefficientField + ?Sized>(
    estimator: Estimator,
    mesh: &TriangleMesh,
    sigma: &S,
    seed: u64,
    replication: u32,
) -> Result<SparseSpdMatrix> {
    check_estimator_sigma(estimator, sigma)?;
    match sigma.constant() {
        Some(c) => {
            if !(c > 0.0) || c < sigma.lower_bound() {
                return Err(Error::Data(alloc::format!("constant σ = {c} violates its lower bound")));
            }
            let mut a = assemble_stiffness_exact(mesh);
            if c != 1.0 {
                a.scale(c);
            }
            Ok(a)
        }
        None => {
            let prov = DrawProvenance::for_mesh(mesh, seed, replication, Purpose::Stiffness);
            let draw = QuadratureDraw::uniform(mesh, prov)?;
            assemble_stiffness_mc(mesh, sigma, &draw)
        }
    }
}

/// Load vector of one realization, reading `Z²` (MC) or `Y_{T,j}` (IS) from
/// their own streams. The second component lists triangles
/// where the barycentric rule hit a non-finite value.
pub fn load_vector<F: Integrand + ?Sized>(
    estimator: Estimator,
    mesh: &TriangleMesh,
    f: &F,
    seed: u64,
    replication: u32,
) -> Result<(FemCoefficients, Vec<usize>)> {
    match estimator {
        Estimator::Mc => {
            let prov = DrawProvenance::for_mesh(mesh, seed, replication, Purpose::LoadMc);
            Ok((assemble_load_mc_direct(mesh, f, &prov)?, Vec::new()))
        }
        Estimator::Is => {
            let prov = DrawProvenance::for_mesh(mesh, seed, replication, Purpose::LoadIs);
            Ok((assemble_load_is_direct(mesh, f, &prov)?, Vec::new()))
        }
        Estimator::Barycentric => Ok(assemble_load_barycentric(mesh, f)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::Sigma;

    #[test]
    fn estimator_names_round_trip() {
        for e in [Estimator::Mc, Estimator::Is, Estimator::Barycentric] {
            assert_eq!(e.name().parse::<Estimator>().unwrap(), e);
        }
        assert!("qmc".parse::<Estimator>().is_err());
    }

    #[test]
    fn sigma_precondition() {
        assert!(check_estimator_sigma(Estimator::Mc, &Sigma::Sine).is_ok());
        let err = check_estimator_sigma(Estimator::Is, &Sigma::Sine).unwrap_err();
        assert_eq!(err, Error::Parameter("IS requires sigma=unit".into()));
        assert!(check_estimator_sigma(Estimator::Barycentric, &Sigma::Constant(2.0)).is_err());
        assert!(check_estimator_sigma(Estimator::Barycentric, &Sigma::Unit).is_ok());
    }

    #[test]
    fn constant_sigma_matrix_matches_sampled_assembly() {
        let mesh = TriangleMesh::structured(3).unwrap();
        let shortcut = system_matrix(Estimator::Mc, &mesh, &Sigma::Constant(1.0), 4, 2).unwrap();
        let prov = DrawProvenance::for_mesh(&mesh, 4, 2, Purpose::Stiffness);
        let draw = QuadratureDraw::uniform(&mesh, prov).unwrap();
        let sampled = assemble_stiffness_mc(&mesh, &Sigma::Unit, &draw).unwrap();
        assert_eq!(shortcut, sampled);
    }

    #[test]
    fn direct_loads_match_stored_draws() {
        use crate::assembly::{assemble_load_is, assemble_load_mc};
        use crate::forcing::ForcingTerm;
        let mesh = TriangleMesh::structured(4).unwrap();
        for f in [ForcingTerm::F1, ForcingTerm::F2] {
            let prov = DrawProvenance::for_mesh(&mesh, 9, 3, Purpose::LoadMc);
            let stored = assemble_load_mc(&mesh, &f, &QuadratureDraw::uniform(&mesh, prov).unwrap()).unwrap();
            assert_eq!(load_vector(Estimator::Mc, &mesh, &f, 9, 3).unwrap().0, stored);
            let prov = DrawProvenance::for_mesh(&mesh, 9, 3, Purpose::LoadIs);
            let stored = assemble_load_is(&mesh, &f, &QuadratureDraw::hat(&mesh, prov).unwrap()).unwrap();
            assert_eq!(load_vector(Estimator::Is, &mesh, &f, 9, 3).unwrap().0, stored);
        }
    }
}
