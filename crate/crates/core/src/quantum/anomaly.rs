//! Choice-dependent detection through an enlarged local space.
//!
//! Each party carries a two-level `±` register and an auxiliary register
//! `|k⟩, k = 0..n−1`. The shared state starts as `(|+0,−0⟩ − |−0,+0⟩)/√2`.
//! A local choice measures the phase observable on `±` and first applies the
//! auxiliary swap `|j⟩⟨0| + |0⟩⟨j|` (identity on the other levels), where `j`
//! is the local choice slot. The detector fires on `+1` with an efficiency
//! that depends on the auxiliary level reached; a miss and a `−1` both read
//! as outcome 0.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    bell::phase_projectors, checked_product, joint_distribution, CMatrix, OperatorKind, Povm,
    QOperator, QState, QuantumError, Result, C64,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalySetup {
    /// Auxiliary levels per party.
    pub n_aux: usize,
    /// Choice index (1,2 for A; 3,4 for B) → phase angle.
    pub phases: BTreeMap<u8, f64>,
    /// Auxiliary level → detection probability. Unlisted levels detect with 1.
    #[serde(default)]
    pub aux_efficiency: BTreeMap<usize, f64>,
    /// A choice whose auxiliary rotation is the identity.
    #[serde(default)]
    pub null_choice: Option<u8>,
}

impl AnomalySetup {
    pub fn validate(&self) -> Result<()> {
        if self.n_aux == 0 {
            return Err(QuantumError::InvalidAnomaly("n_aux must be at least 1".into()));
        }
        checked_product(&[2, self.n_aux, 2, self.n_aux])?;
        for (&k, &eff) in &self.aux_efficiency {
            if k >= self.n_aux {
                return Err(QuantumError::InvalidAnomaly(format!(
                    "efficiency given for auxiliary level {k} but n_aux is {}",
                    self.n_aux
                )));
            }
            if !(0.0..=1.0).contains(&eff) {
                return Err(QuantumError::InvalidAnomaly(format!(
                    "efficiency {eff} for level {k} outside [0,1]"
                )));
            }
        }
        for (&c, &phi) in &self.phases {
            if !(1..=4).contains(&c) {
                return Err(QuantumError::InvalidAnomaly(format!("unknown choice {c}")));
            }
            if !phi.is_finite() {
                return Err(QuantumError::InvalidAnomaly(format!("phase for choice {c} is not finite")));
            }
        }
        Ok(())
    }

    pub fn efficiency(&self, level: usize) -> f64 {
        self.aux_efficiency.get(&level).copied().unwrap_or(1.0)
    }

    fn phase(&self, choice: u8) -> Result<f64> {
        self.phases
            .get(&choice)
            .copied()
            .ok_or_else(|| QuantumError::InvalidAnomaly(format!("no phase for choice {choice}")))
    }

    /// Auxiliary level the choice rotates `|0⟩` into (0 means no rotation).
    pub fn aux_target(&self, choice: u8) -> usize {
        let slot = ((choice as usize - 1) % 2) + 1;
        if Some(choice) == self.null_choice || slot >= self.n_aux {
            0
        } else {
            slot
        }
    }

    /// Subsystems `(±, aux)` of the party owning `choice`.
    fn targets(choice: u8) -> [usize; 2] {
        if choice <= 2 {
            [0, 1]
        } else {
            [2, 3]
        }
    }
}

fn aux_rotation(n: usize, target: usize) -> CMatrix {
    let mut r = CMatrix::identity(n, n);
    if target != 0 {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        r[(0, 0)] = zero;
        r[(target, target)] = zero;
        r[(target, 0)] = one;
        r[(0, target)] = one;
    }
    r
}

/// Initial state over `(A±, A_aux, B±, B_aux)`.
pub fn anomaly_state(n_aux: usize) -> Result<QState> {
    let dims = vec![2, n_aux, 2, n_aux];
    let len = checked_product(&dims)?;
    let index = |sa: usize, sb: usize| ((sa * n_aux) * 2 + sb) * n_aux;
    let mut amps = vec![C64::new(0.0, 0.0); len];
    amps[index(0, 1)] = C64::new(1.0, 0.0);
    amps[index(1, 0)] = C64::new(-1.0, 0.0);
    QState::normalized(amps, dims)
}

/// Local measurement for one choice on the party's `(±, aux)` space.
///
/// Labels are `"1:k"` for a detection with the auxiliary register at `k` and
/// `"0"` for a `−1` or a missed detection.
pub fn anomaly_local_povm(setup: &AnomalySetup, choice: u8) -> Result<Povm> {
    setup.validate()?;
    let n = setup.n_aux;
    let proj = phase_projectors(setup.phase(choice)?);
    let p_plus = proj.elements()[0].1.matrix().clone();
    let p_minus = proj.elements()[1].1.matrix().clone();
    let rot = aux_rotation(n, setup.aux_target(choice));

    let kraus = |m: CMatrix| QOperator::new_map(m, vec![2, n], vec![2, n], OperatorKind::Kraus);
    let mut elements = Vec::with_capacity(2 * n + 1);
    for k in 0..n {
        let eff = setup.efficiency(k);
        let mut level = CMatrix::zeros(n, n);
        level[(k, k)] = C64::new(1.0, 0.0);
        let fire = &level * C64::new(eff.sqrt(), 0.0) * &rot;
        let miss = &level * C64::new((1.0 - eff).sqrt(), 0.0) * &rot;
        elements.push((format!("1:{k}"), kraus(p_plus.kronecker(&fire))?));
        elements.push(("0".to_string(), kraus(p_plus.kronecker(&miss))?));
    }
    elements.push(("0".to_string(), kraus(p_minus.kronecker(&rot))?));
    Povm::new(elements)
}

fn outcome_of(label: &str) -> u8 {
    if label.starts_with('1') {
        1
    } else {
        0
    }
}

/// Marginal probability that the party owning `choice` reads `outcome ∈ {0,1}`.
pub fn anomaly_outcome_prob(setup: &AnomalySetup, choice: u8, outcome: u8) -> Result<f64> {
    let povm = anomaly_local_povm(setup, choice)?;
    let rho = anomaly_state(setup.n_aux)?.density();
    let targets = AnomalySetup::targets(choice);
    let dist = joint_distribution(&rho, &[(&povm, &targets)])?;
    Ok(dist
        .iter()
        .filter(|(labels, _)| outcome_of(&labels[0]) == outcome)
        .map(|(_, p)| p)
        .sum())
}

/// Joint probability `p(A = outcome_a, B = outcome_b)` for choices `(a, b)`.
pub fn anomaly_joint_prob(
    setup: &AnomalySetup,
    choice_a: u8,
    choice_b: u8,
    outcome_a: u8,
    outcome_b: u8,
) -> Result<f64> {
    let pa = anomaly_local_povm(setup, choice_a)?;
    let pb = anomaly_local_povm(setup, choice_b)?;
    let rho = anomaly_state(setup.n_aux)?.density();
    let dist = joint_distribution(
        &rho,
        &[(&pa, &AnomalySetup::targets(choice_a)), (&pb, &AnomalySetup::targets(choice_b))],
    )?;
    Ok(dist
        .iter()
        .filter(|(l, _)| outcome_of(&l[0]) == outcome_a && outcome_of(&l[1]) == outcome_b)
        .map(|(_, p)| p)
        .sum())
}
