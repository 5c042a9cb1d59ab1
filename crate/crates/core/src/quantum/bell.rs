use std::f64::consts::FRAC_1_SQRT_2;

use super::{
    checked_product, CMatrix, DensityMatrix, OperatorKind, Povm, QOperator, QState, QuantumError,
    Result, C64,
};

/// Basis labels of one two-level register: index 0 is `+`, index 1 is `−`.
pub const PM_LABELS: [&str; 2] = ["+", "−"];

/// Subsystem order of the four-qubit swapping state `|ψ_A⟩ ⊗ |ψ_B⟩`.
pub const SWAP_A: usize = 0;
pub const SWAP_LOWER_A: usize = 1;
pub const SWAP_B: usize = 2;
pub const SWAP_LOWER_B: usize = 3;

fn pm_labels() -> Vec<String> {
    PM_LABELS.iter().map(|s| s.to_string()).collect()
}

/// `(|+−⟩ − |−+⟩)/√2` in the basis `(++, +−, −+, −−)`.
pub fn bell_singlet() -> QState {
    let z = C64::new(0.0, 0.0);
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    QState::new(vec![z, h, -h, z], vec![2, 2])
        .and_then(|s| s.with_labels(vec![pm_labels(), pm_labels()]))
        .expect("singlet is a valid state")
}

/// `e^{iφ}|+⟩⟨−| + e^{−iφ}|−⟩⟨+|`, eigenvalues ±1.
pub fn phase_observable(phi: f64) -> QOperator {
    let z = C64::new(0.0, 0.0);
    let m = CMatrix::from_row_slice(2, 2, &[z, C64::from_polar(1.0, phi), C64::from_polar(1.0, -phi), z]);
    QOperator::new(m, vec![2], OperatorKind::HermitianObservable)
        .expect("phase observable is Hermitian")
}

/// Eigenprojectors `(I ± X(φ))/2` labelled `"+1"` and `"-1"`.
pub fn phase_projectors(phi: f64) -> Povm {
    let x = phase_observable(phi);
    let id = CMatrix::identity(2, 2);
    let half = C64::new(0.5, 0.0);
    let plus = (&id + x.matrix()) * half;
    let minus = (&id - x.matrix()) * half;
    Povm::projective(vec![
        ("+1".into(), QOperator::new(plus, vec![2], OperatorKind::Projector).unwrap()),
        ("-1".into(), QOperator::new(minus, vec![2], OperatorKind::Projector).unwrap()),
    ])
    .expect("eigenprojectors are complete")
}

/// Closed-form singlet correlator `−cos(φᵢ − φⱼ)`.
pub fn singlet_correlator(phi_i: f64, phi_j: f64) -> f64 {
    -(phi_i - phi_j).cos()
}

/// Rank-one projector onto the singlet of the two traveling qubits `(a, b)`.
pub fn swap_projector() -> QOperator {
    QOperator::projector_onto(&bell_singlet()).expect("singlet projector")
}

/// `|ψ_A⟩ ⊗ |ψ_B⟩` with subsystems ordered `(A, a, B, b)`.
pub fn swapping_state() -> QState {
    let local = bell_singlet();
    local.tensor(&local).expect("16-dimensional state fits")
}

#[derive(Debug, Clone)]
pub struct HeraldOutcome {
    /// Probability of the heralding outcome `C = 1`.
    pub probability: f64,
    /// Renormalized state of `(A, B)` given `C = 1`.
    pub reduced: DensityMatrix,
}

/// Projects `(a, b)` of a swapping state onto the singlet and traces them out.
pub fn herald_swap(state: &QState) -> Result<HeraldOutcome> {
    let c = swap_projector().embed(&[SWAP_LOWER_A, SWAP_LOWER_B], state.dims())?;
    let rho = state.density();
    let projected = c.matrix() * rho.matrix() * c.matrix();
    let probability = projected.trace().re;
    if probability < super::DEGENERATE_PROB {
        return Err(QuantumError::DegeneratePovm);
    }
    let post = DensityMatrix::new(projected / C64::new(probability, 0.0), state.dims().to_vec())?;
    let reduced = post.partial_trace(&[SWAP_A, SWAP_B])?;
    Ok(HeraldOutcome { probability, reduced })
}

/// `K̂ₓ = |x, x, …, x⟩⟨x|` mapping one `dim`-level system onto `m` copies.
pub fn broadcast_kraus(x: usize, m: usize, dim: usize) -> Result<QOperator> {
    if m == 0 {
        return Err(QuantumError::ZeroCopies);
    }
    if x >= dim {
        return Err(QuantumError::OutcomeOutOfRange { outcome: x, dim });
    }
    let out_dims = vec![dim; m];
    let rows = checked_product(&out_dims)?;
    let row = (0..m).fold(0, |acc, _| acc * dim + x);
    let mut k = CMatrix::zeros(rows, dim);
    k[(row, x)] = C64::new(1.0, 0.0);
    QOperator::new_map(k, out_dims, vec![dim], OperatorKind::Kraus)
}

/// The full broadcast measurement `{K̂ₓ}` labelled by outcome index.
pub fn broadcast_povm(m: usize, dim: usize) -> Result<Povm> {
    let elements = (0..dim)
        .map(|x| Ok((x.to_string(), broadcast_kraus(x, m, dim)?)))
        .collect::<Result<Vec<_>>>()?;
    Povm::new(elements)
}
