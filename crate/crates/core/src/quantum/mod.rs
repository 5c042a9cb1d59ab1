//! Exact finite-dimensional quantum mechanics over small composite spaces.
//!
//! Everything here is dense and immutable after construction. Composite
//! spaces are described by a list of subsystem dimensions whose product is
//! the matrix/vector size; subsystem 0 is the most significant digit of a
//! basis index.

mod anomaly;
mod bell;

pub use anomaly::{
    anomaly_joint_prob, anomaly_local_povm, anomaly_outcome_prob, anomaly_state, AnomalySetup,
};
pub use bell::{
    bell_singlet, broadcast_kraus, broadcast_povm, herald_swap, phase_observable,
    phase_projectors, singlet_correlator, swap_projector, swapping_state, HeraldOutcome,
    PM_LABELS, SWAP_A, SWAP_B, SWAP_LOWER_A, SWAP_LOWER_B,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest total Hilbert-space dimension any value may have.
pub const MAX_DIM: usize = 64;
/// Tolerance applied when constructing states and operators.
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Tolerance for derived checks (completeness, reality of expectations).
pub const CHECK_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted in a density matrix.
pub const EIGEN_FLOOR: f64 = -1e-10;
/// Below this every outcome is treated as impossible.
pub const DEGENERATE_PROB: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("dimension {0} exceeds the configured maximum of {MAX_DIM}")]
    DimensionOverflow(usize),
    #[error("subsystem dimensions {dims:?} do not match size {len}")]
    DimsMismatch { dims: Vec<usize>, len: usize },
    #[error("state norm is {0}, expected 1")]
    NotNormalized(f64),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("negative eigenvalue {0:e}")]
    NotPositive(f64),
    #[error("operator is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("operator is not a projector (max deviation {0:e})")]
    NotProjector(f64),
    #[error("POVM is incomplete (max deviation from identity {0:e})")]
    IncompletePovm(f64),
    #[error("POVM has no elements")]
    EmptyPovm,
    #[error("every outcome probability is below {DEGENERATE_PROB:e}")]
    DegeneratePovm,
    #[error("subsystem {0} is targeted more than once")]
    SubsystemOverlap(usize),
    #[error("subsystem index {0} is out of range")]
    SubsystemOutOfRange(usize),
    #[error("operator dimensions {op:?} do not fit target dimensions {target:?}")]
    OperatorMismatch { op: Vec<usize>, target: Vec<usize> },
    #[error("expectation has imaginary residue {0:e}")]
    NonRealExpectation(f64),
    #[error("outcome {outcome} is out of range for dimension {dim}")]
    OutcomeOutOfRange { outcome: usize, dim: usize },
    #[error("copy count must be at least 1")]
    ZeroCopies,
    #[error("invalid anomaly setup: {0}")]
    InvalidAnomaly(String),
}

pub type Result<T> = std::result::Result<T, QuantumError>;

fn checked_product(dims: &[usize]) -> Result<usize> {
    let mut total: usize = 1;
    for &d in dims {
        total = total
            .checked_mul(d)
            .filter(|&t| t <= MAX_DIM)
            .ok_or(QuantumError::DimensionOverflow(total.saturating_mul(d)))?;
    }
    Ok(total)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Splits a flat index into per-subsystem digits (subsystem 0 most significant).
fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

fn flatten(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Pure state over a composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct QState {
    amplitudes: CVector,
    dims: Vec<usize>,
    basis_labels: Option<Vec<Vec<String>>>,
}

impl QState {
    pub fn new(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        let len = checked_product(&dims)?;
        if len != amplitudes.len() {
            return Err(QuantumError::DimsMismatch { dims, len: amplitudes.len() });
        }
        let amplitudes = CVector::from_vec(amplitudes);
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(Self { amplitudes, dims, basis_labels: None })
    }

    /// Builds a state from unnormalized amplitudes.
    pub fn normalized(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(QuantumError::NotNormalized(0.0));
        }
        Self::new(amplitudes.into_iter().map(|z| z / norm).collect(), dims)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dims: Vec<usize>, index: usize) -> Result<Self> {
        let len = checked_product(&dims)?;
        if index >= len {
            return Err(QuantumError::OutcomeOutOfRange { outcome: index, dim: len });
        }
        let mut amps = vec![C64::new(0.0, 0.0); len];
        amps[index] = C64::new(1.0, 0.0);
        Self::new(amps, dims)
    }

    pub fn with_labels(mut self, labels: Vec<Vec<String>>) -> Result<Self> {
        if labels.len() != self.dims.len()
            || labels.iter().zip(&self.dims).any(|(l, &d)| l.len() != d)
        {
            return Err(QuantumError::DimsMismatch { dims: self.dims.clone(), len: labels.len() });
        }
        self.basis_labels = Some(labels);
        Ok(self)
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    /// Amplitude addressed by per-subsystem labels, e.g. `["+", "−"]`.
    pub fn amplitude_by_labels(&self, labels: &[&str]) -> Option<C64> {
        let table = self.basis_labels.as_ref()?;
        if labels.len() != table.len() {
            return None;
        }
        let digits = labels
            .iter()
            .zip(table)
            .map(|(l, row)| row.iter().position(|x| x == l))
            .collect::<Option<Vec<_>>>()?;
        Some(self.amplitudes[flatten(&digits, &self.dims)])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn basis_labels(&self) -> Option<&[Vec<String>]> {
        self.basis_labels.as_deref()
    }

    pub fn inner(&self, other: &QState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn tensor(&self, other: &QState) -> Result<QState> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        checked_product(&dims)?;
        let amplitudes = self.amplitudes.kronecker(&other.amplitudes);
        let basis_labels = match (&self.basis_labels, &other.basis_labels) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
            _ => None,
        };
        Ok(QState { amplitudes, dims, basis_labels })
    }

    pub fn density(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix { matrix: m, dims: self.dims.clone() }
    }
}

/// Mixed state: positive, Hermitian, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix, dims: Vec<usize>) -> Result<Self> {
        let len = checked_product(&dims)?;
        if matrix.nrows() != len || matrix.ncols() != len {
            return Err(QuantumError::DimsMismatch { dims, len: matrix.nrows() });
        }
        let herm_dev = max_abs(&(&matrix - matrix.adjoint()));
        if herm_dev > CONSTRUCTION_TOL {
            return Err(QuantumError::NotHermitian(herm_dev));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > CONSTRUCTION_TOL || tr.im.abs() > CONSTRUCTION_TOL {
            return Err(QuantumError::BadTrace(tr.re));
        }
        let min_eig = matrix.clone().symmetric_eigenvalues().min();
        if min_eig < EIGEN_FLOOR {
            return Err(QuantumError::NotPositive(min_eig));
        }
        Ok(Self { matrix, dims })
    }

    /// Maximally mixed state `I/d`.
    pub fn maximally_mixed(dims: Vec<usize>) -> Result<Self> {
        let len = checked_product(&dims)?;
        Self::new(identity(len) / C64::new(len as f64, 0.0), dims)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity_with(&self, state: &QState) -> f64 {
        let v = state.amplitudes();
        (v.adjoint() * &self.matrix * v)[(0, 0)].re
    }

    /// Reduced state on the subsystems listed in `keep` (in the given order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        check_targets(keep, self.dims.len())?;
        let kept_dims: Vec<usize> = keep.iter().map(|&k| self.dims[k]).collect();
        let traced: Vec<usize> = (0..self.dims.len()).filter(|i| !keep.contains(i)).collect();
        let traced_dims: Vec<usize> = traced.iter().map(|&k| self.dims[k]).collect();
        let kept_len: usize = kept_dims.iter().product();
        let traced_len: usize = traced_dims.iter().product();

        let full_index = |kept_idx: usize, traced_idx: usize| {
            let kd = digits(kept_idx, &kept_dims);
            let td = digits(traced_idx, &traced_dims);
            let mut all = vec![0; self.dims.len()];
            for (&pos, &d) in keep.iter().zip(&kd) {
                all[pos] = d;
            }
            for (&pos, &d) in traced.iter().zip(&td) {
                all[pos] = d;
            }
            flatten(&all, &self.dims)
        };

        let mut out = CMatrix::zeros(kept_len, kept_len);
        for r in 0..kept_len {
            for c in 0..kept_len {
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..traced_len {
                    acc += self.matrix[(full_index(r, t), full_index(c, t))];
                }
                out[(r, c)] = acc;
            }
        }
        DensityMatrix::new(out, kept_dims)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    HermitianObservable,
    Unitary,
    Kraus,
    Projector,
}

/// Linear map between (possibly different) composite spaces.
///
/// Every kind except `Kraus` must be square.
#[derive(Debug, Clone, PartialEq)]
pub struct QOperator {
    matrix: CMatrix,
    out_dims: Vec<usize>,
    in_dims: Vec<usize>,
    kind: OperatorKind,
}

impl QOperator {
    pub fn new(matrix: CMatrix, dims: Vec<usize>, kind: OperatorKind) -> Result<Self> {
        Self::new_map(matrix, dims.clone(), dims, kind)
    }

    pub fn new_map(
        matrix: CMatrix,
        out_dims: Vec<usize>,
        in_dims: Vec<usize>,
        kind: OperatorKind,
    ) -> Result<Self> {
        let rows = checked_product(&out_dims)?;
        let cols = checked_product(&in_dims)?;
        if matrix.nrows() != rows || matrix.ncols() != cols {
            return Err(QuantumError::OperatorMismatch {
                op: vec![matrix.nrows(), matrix.ncols()],
                target: vec![rows, cols],
            });
        }
        if kind != OperatorKind::Kraus && out_dims != in_dims {
            return Err(QuantumError::OperatorMismatch { op: out_dims, target: in_dims });
        }
        match kind {
            OperatorKind::HermitianObservable => {
                let dev = max_abs(&(&matrix - matrix.adjoint()));
                if dev > CONSTRUCTION_TOL {
                    return Err(QuantumError::NotHermitian(dev));
                }
            }
            OperatorKind::Unitary => {
                let dev = max_abs(&(matrix.adjoint() * &matrix - identity(cols)));
                if dev > CONSTRUCTION_TOL {
                    return Err(QuantumError::NotUnitary(dev));
                }
            }
            OperatorKind::Projector => {
                let dev = max_abs(&(&matrix * &matrix - &matrix))
                    .max(max_abs(&(&matrix - matrix.adjoint())));
                if dev > CONSTRUCTION_TOL {
                    return Err(QuantumError::NotProjector(dev));
                }
            }
            OperatorKind::Kraus => {}
        }
        Ok(Self { matrix, out_dims, in_dims, kind })
    }

    pub fn identity(dims: Vec<usize>) -> Result<Self> {
        let len = checked_product(&dims)?;
        Self::new(identity(len), dims, OperatorKind::Projector)
    }

    /// Projector onto a pure state.
    pub fn projector_onto(state: &QState) -> Result<Self> {
        let v = state.amplitudes();
        Self::new(v * v.adjoint(), state.dims().to_vec(), OperatorKind::Projector)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn is_square(&self) -> bool {
        self.out_dims == self.in_dims
    }

    /// Same matrix, reinterpreted as another kind (validated).
    pub fn as_kind(&self, kind: OperatorKind) -> Result<Self> {
        Self::new_map(self.matrix.clone(), self.out_dims.clone(), self.in_dims.clone(), kind)
    }

    /// Eigenvalues of a Hermitian operator, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.is_square() {
            return Err(QuantumError::OperatorMismatch {
                op: self.out_dims.clone(),
                target: self.in_dims.clone(),
            });
        }
        let dev = max_abs(&(&self.matrix - self.matrix.adjoint()));
        if dev > CHECK_TOL {
            return Err(QuantumError::NotHermitian(dev));
        }
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        Ok(ev)
    }

    pub fn tensor(&self, other: &QOperator) -> Result<QOperator> {
        let mut out_dims = self.out_dims.clone();
        out_dims.extend_from_slice(&other.out_dims);
        let mut in_dims = self.in_dims.clone();
        in_dims.extend_from_slice(&other.in_dims);
        checked_product(&out_dims)?;
        checked_product(&in_dims)?;
        let kind = if self.kind == other.kind { self.kind } else { OperatorKind::Kraus };
        let matrix = self.matrix.kronecker(&other.matrix);
        // Kronecker products of valid operators of one kind stay valid; the
        // mixed-kind case falls back to an unchecked Kraus map.
        Ok(QOperator { matrix, out_dims, in_dims, kind })
    }

    /// Lifts a square operator onto `targets` of a larger composite space.
    pub fn embed(&self, targets: &[usize], total_dims: &[usize]) -> Result<QOperator> {
        if !self.is_square() {
            return Err(QuantumError::OperatorMismatch {
                op: self.out_dims.clone(),
                target: self.in_dims.clone(),
            });
        }
        check_targets(targets, total_dims.len())?;
        let target_dims: Vec<usize> = targets.iter().map(|&t| total_dims[t]).collect();
        if target_dims != self.in_dims {
            return Err(QuantumError::OperatorMismatch {
                op: self.in_dims.clone(),
                target: target_dims,
            });
        }
        let total = checked_product(total_dims)?;
        let local = self.matrix.nrows();
        let mut out = CMatrix::zeros(total, total);
        for col in 0..total {
            let col_digits = digits(col, total_dims);
            let local_col_digits: Vec<usize> = targets.iter().map(|&t| col_digits[t]).collect();
            let local_col = flatten(&local_col_digits, &target_dims);
            for local_row in 0..local {
                let entry = self.matrix[(local_row, local_col)];
                if entry == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut row_digits = col_digits.clone();
                for (&t, d) in targets.iter().zip(digits(local_row, &target_dims)) {
                    row_digits[t] = d;
                }
                out[(flatten(&row_digits, total_dims), col)] = entry;
            }
        }
        Ok(QOperator {
            matrix: out,
            out_dims: total_dims.to_vec(),
            in_dims: total_dims.to_vec(),
            kind: self.kind,
        })
    }

    /// `self · other` as a Kraus map.
    pub fn compose(&self, other: &QOperator) -> Result<QOperator> {
        if self.in_dims != other.out_dims {
            return Err(QuantumError::OperatorMismatch {
                op: self.in_dims.clone(),
                target: other.out_dims.clone(),
            });
        }
        Ok(QOperator {
            matrix: &self.matrix * &other.matrix,
            out_dims: self.out_dims.clone(),
            in_dims: other.in_dims.clone(),
            kind: OperatorKind::Kraus,
        })
    }

    pub fn apply(&self, state: &QState) -> CVector {
        &self.matrix * state.amplitudes()
    }
}

fn check_targets(targets: &[usize], n: usize) -> Result<()> {
    for (i, &t) in targets.iter().enumerate() {
        if t >= n {
            return Err(QuantumError::SubsystemOutOfRange(t));
        }
        if targets[..i].contains(&t) {
            return Err(QuantumError::SubsystemOverlap(t));
        }
    }
    Ok(())
}

/// `Tr(O₁ O₂ ⋯ ρ)` for operators acting on disjoint subsystems.
pub fn expectation(observables: &[(&QOperator, &[usize])], rho: &DensityMatrix) -> Result<f64> {
    let mut used: Vec<usize> = Vec::new();
    let mut product = identity(rho.dim());
    for (op, targets) in observables {
        for &t in *targets {
            if used.contains(&t) {
                return Err(QuantumError::SubsystemOverlap(t));
            }
            used.push(t);
        }
        let lifted = op.embed(targets, rho.dims())?;
        product = lifted.matrix * product;
    }
    let value = (product * rho.matrix()).trace();
    if value.im.abs() > CHECK_TOL {
        return Err(QuantumError::NonRealExpectation(value.im));
    }
    Ok(value.re)
}

/// Measurement described by labelled Kraus operators sharing one input space.
///
/// Labels may repeat; a repeated label denotes a coarse-grained outcome whose
/// probability is the sum over its Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<(String, QOperator)>,
}

impl Povm {
    pub fn new(elements: Vec<(String, QOperator)>) -> Result<Self> {
        let first = elements.first().ok_or(QuantumError::EmptyPovm)?;
        let in_dims = first.1.in_dims().to_vec();
        let n = first.1.matrix().ncols();
        let mut sum = CMatrix::zeros(n, n);
        for (_, k) in &elements {
            if k.in_dims() != in_dims.as_slice() {
                return Err(QuantumError::OperatorMismatch {
                    op: k.in_dims().to_vec(),
                    target: in_dims,
                });
            }
            sum += k.matrix().adjoint() * k.matrix();
        }
        let dev = max_abs(&(sum - identity(n)));
        if dev > CHECK_TOL {
            return Err(QuantumError::IncompletePovm(dev));
        }
        let elements = elements
            .into_iter()
            .map(|(l, k)| Ok((l, k.as_kind(OperatorKind::Kraus)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { elements })
    }

    /// Projective measurement from a list of labelled projectors.
    pub fn projective(projectors: Vec<(String, QOperator)>) -> Result<Self> {
        Self::new(projectors)
    }

    pub fn elements(&self) -> &[(String, QOperator)] {
        &self.elements
    }

    pub fn in_dims(&self) -> &[usize] {
        self.elements[0].1.in_dims()
    }

    /// Distinct labels in declaration order.
    pub fn labels(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for (l, _) in &self.elements {
            if !out.contains(&l.as_str()) {
                out.push(l);
            }
        }
        out
    }

    /// Lifts every (square) Kraus operator onto `targets` of a larger space.
    pub fn embed(&self, targets: &[usize], total_dims: &[usize]) -> Result<Povm> {
        let elements = self
            .elements
            .iter()
            .map(|(l, k)| Ok((l.clone(), k.embed(targets, total_dims)?)))
            .collect::<Result<Vec<_>>>()?;
        Povm::new(elements)
    }
}

/// Born probabilities `Tr K ρ K†` per distinct label, in declaration order.
pub fn outcome_probabilities(rho: &DensityMatrix, povm: &Povm) -> Result<Vec<(String, f64)>> {
    if povm.in_dims() != rho.dims() {
        return Err(QuantumError::OperatorMismatch {
            op: povm.in_dims().to_vec(),
            target: rho.dims().to_vec(),
        });
    }
    let mut out: Vec<(String, f64)> = Vec::new();
    for (label, k) in povm.elements() {
        let p = (k.matrix() * rho.matrix() * k.matrix().adjoint()).trace().re.max(0.0);
        match out.iter_mut().find(|(l, _)| l == label) {
            Some(slot) => slot.1 += p,
            None => out.push((label.clone(), p)),
        }
    }
    Ok(out)
}

/// Inverse-CDF selection: first index whose cumulative weight exceeds `u·total`.
///
/// `u` is clamped into `[0, 1)`; zero-weight entries are never selected.
pub fn sample_index(weights: &[f64], u: f64) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let target = u.clamp(0.0, 1.0) * total;
    let mut cum = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        cum += w;
        if w > 0.0 && target < cum {
            return Some(i);
        }
    }
    weights.iter().rposition(|&w| w > 0.0)
}

/// Samples one outcome of `povm` on `rho` given a uniform draw in `[0,1)`,
/// returning its label and the renormalized post-measurement state.
pub fn born_sample(rho: &DensityMatrix, povm: &Povm, u: f64) -> Result<(String, DensityMatrix)> {
    let probs = outcome_probabilities(rho, povm)?;
    if probs.iter().all(|(_, p)| *p < DEGENERATE_PROB) {
        return Err(QuantumError::DegeneratePovm);
    }
    let weights: Vec<f64> = probs.iter().map(|(_, p)| *p).collect();
    let idx = sample_index(&weights, u).ok_or(QuantumError::DegeneratePovm)?;
    let (label, prob) = &probs[idx];

    let first = &povm.elements().iter().find(|(l, _)| l == label).unwrap().1;
    let out_dims = first.out_dims().to_vec();
    let n = first.matrix().nrows();
    let mut post = CMatrix::zeros(n, n);
    for (l, k) in povm.elements() {
        if l == label {
            post += k.matrix() * rho.matrix() * k.matrix().adjoint();
        }
    }
    post /= C64::new(*prob, 0.0);
    // Symmetrize away rounding noise before validation.
    let post = (&post + post.adjoint()) * C64::new(0.5, 0.0);
    Ok((label.clone(), DensityMatrix::new(post, out_dims)?))
}

/// Joint outcome distribution of simultaneous local measurements on disjoint
/// subsystems. Each entry is the tuple of labels (one per measurement, in the
/// order given) with its probability.
pub fn joint_distribution(
    rho: &DensityMatrix,
    measurements: &[(&Povm, &[usize])],
) -> Result<Vec<(Vec<String>, f64)>> {
    let mut used = Vec::new();
    let mut lifted: Vec<Povm> = Vec::with_capacity(measurements.len());
    for (povm, targets) in measurements {
        for &t in *targets {
            if used.contains(&t) {
                return Err(QuantumError::SubsystemOverlap(t));
            }
            used.push(t);
        }
        lifted.push(povm.embed(targets, rho.dims())?);
    }

    let mut out: Vec<(Vec<String>, f64)> = Vec::new();
    let sizes: Vec<usize> = lifted.iter().map(|p| p.elements().len()).collect();
    let combos: usize = sizes.iter().product();
    for combo in 0..combos {
        let picks = digits(combo, &sizes);
        let mut k = identity(rho.dim());
        let mut labels = Vec::with_capacity(picks.len());
        for (povm, &pick) in lifted.iter().zip(&picks) {
            let (label, op) = &povm.elements()[pick];
            k = op.matrix() * k;
            labels.push(label.clone());
        }
        let p = (&k * rho.matrix() * k.adjoint()).trace().re.max(0.0);
        match out.iter_mut().find(|(l, _)| *l == labels) {
            Some(slot) => slot.1 += p,
            None => out.push((labels, p)),
        }
    }
    Ok(out)
}
