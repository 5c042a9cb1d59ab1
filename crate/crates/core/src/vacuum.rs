//! Realism constraints on Lorentz-invariant two-point current correlators.
//!
//! The invariant tensor is `Gᵘᵛ(p) = pᵘpᵛ ξ + gᵘᵛ η` with metric signature
//! `(+,−,−,−)`. Positivity requires `0 > η > −(p·p) ξ` for timelike `p` and
//! `η = 0, ξ > 0` for spacelike `p`. Adding current conservation
//! `p_μ Gᵘᵛ = 0` on the spacelike branch leaves only `G ≡ 0`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for strict inequalities and vanishing tests.
pub const STRICT_TOL: f64 = 1e-12;

const METRIC: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VacuumError {
    #[error("four-vector {0:?} is not spacelike")]
    NotSpacelike([f64; 4]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub fn new(p0: f64, p1: f64, p2: f64, p3: f64) -> Self {
        Self([p0, p1, p2, p3])
    }

    /// Components with the index lowered by the metric.
    pub fn lower(&self) -> [f64; 4] {
        let mut out = self.0;
        for (x, g) in out.iter_mut().zip(METRIC) {
            *x *= g;
        }
        out
    }

    pub fn scale(&self, lambda: f64) -> Self {
        Self(self.0.map(|x| x * lambda))
    }

    fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn euclidean_sq(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }
}

/// `a₀b₀ − a⃗·b⃗`.
pub fn minkowski_dot(a: &FourVector, b: &FourVector) -> f64 {
    a.0[0] * b.0[0] - a.0[1] * b.0[1] - a.0[2] * b.0[2] - a.0[3] * b.0[3]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantCorrelator {
    pub xi: f64,
    pub eta: f64,
}

impl InvariantCorrelator {
    pub fn new(xi: f64, eta: f64) -> Self {
        Self { xi, eta }
    }
}

pub type Tensor4 = [[f64; 4]; 4];

/// `Gᵘᵛ = pᵘpᵛ ξ + gᵘᵛ η`.
pub fn correlator_tensor(c: &InvariantCorrelator, p: &FourVector) -> Tensor4 {
    let mut g = [[0.0; 4]; 4];
    for (mu, row) in g.iter_mut().enumerate() {
        for (nu, cell) in row.iter_mut().enumerate() {
            *cell = p.0[mu] * p.0[nu] * c.xi;
            if mu == nu {
                *cell += METRIC[mu] * c.eta;
            }
        }
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Admissibility {
    Admissible,
    /// On the edge of the allowed region within tolerance.
    Boundary,
    ViolatesTimelike,
    ViolatesSpacelike,
    LightlikeUnclassified,
}

impl Admissibility {
    /// Admissible or on its closure.
    pub fn is_compatible(self) -> bool {
        matches!(self, Admissibility::Admissible | Admissibility::Boundary)
    }
}

impl fmt::Display for Admissibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Admissibility::Admissible => "admissible",
            Admissibility::Boundary => "boundary",
            Admissibility::ViolatesTimelike => "violates timelike constraint",
            Admissibility::ViolatesSpacelike => "violates spacelike constraint",
            Admissibility::LightlikeUnclassified => "unclassified (lightlike)",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentumClass {
    Timelike,
    Spacelike,
    Lightlike,
}

pub fn classify_momentum(p: &FourVector) -> MomentumClass {
    let pp = minkowski_dot(p, p);
    if pp.abs() <= STRICT_TOL * p.euclidean_sq().max(1.0) {
        MomentumClass::Lightlike
    } else if pp > 0.0 {
        MomentumClass::Timelike
    } else {
        MomentumClass::Spacelike
    }
}

pub fn realism_admissible(c: &InvariantCorrelator, p: &FourVector) -> Admissibility {
    let pp = minkowski_dot(p, p);
    match classify_momentum(p) {
        MomentumClass::Lightlike => Admissibility::LightlikeUnclassified,
        MomentumClass::Timelike => {
            let lower = -pp * c.xi;
            let tol = STRICT_TOL * lower.abs().max(c.eta.abs()).max(1.0);
            if c.eta < -tol && c.eta > lower + tol {
                Admissibility::Admissible
            } else if c.eta > tol || c.eta < lower - tol {
                Admissibility::ViolatesTimelike
            } else {
                Admissibility::Boundary
            }
        }
        MomentumClass::Spacelike => {
            if c.eta.abs() > STRICT_TOL {
                Admissibility::ViolatesSpacelike
            } else if c.xi > STRICT_TOL {
                Admissibility::Admissible
            } else if c.xi < -STRICT_TOL {
                Admissibility::ViolatesSpacelike
            } else {
                Admissibility::Boundary
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationWitness {
    /// `p_μ Gᵘᵛ`, which equals `((p·p) ξ + η) pᵛ`.
    pub residual: FourVector,
    pub transverse: bool,
    pub vanishes: bool,
}

/// Checks transversality of the correlator at spacelike `p`.
///
/// Returns `true` exactly when `G` is transverse and identically zero.
pub fn conservation_forces_zero(
    c: &InvariantCorrelator,
    p: &FourVector,
) -> Result<(bool, ConservationWitness), VacuumError> {
    if classify_momentum(p) != MomentumClass::Spacelike {
        return Err(VacuumError::NotSpacelike(p.0));
    }
    let g = correlator_tensor(c, p);
    let low = p.lower();
    let mut residual = [0.0; 4];
    for (nu, r) in residual.iter_mut().enumerate() {
        *r = (0..4).map(|mu| low[mu] * g[mu][nu]).sum();
    }
    let residual = FourVector(residual);
    let scale = p.max_abs().max(1.0);
    let transverse = residual.max_abs() <= STRICT_TOL * scale.powi(3);
    let vanishes = g.iter().flatten().all(|x| x.abs() <= STRICT_TOL * scale.powi(2));
    Ok((transverse && vanishes, ConservationWitness { residual, transverse, vanishes }))
}
