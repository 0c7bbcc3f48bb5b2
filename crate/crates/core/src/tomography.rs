//! Quantum-channel reconstruction: Choi matrix, gate fidelity, Pauli
//! transfer matrix, error PTMs and CP/TP diagnostics.

use crate::pauli;
use crate::{C64, CMatrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TomographyError {
    #[error("channel dimensions do not match: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("gate fidelity undefined: reference Choi matrix has zero norm")]
    ZeroReference,
    #[error("propagation failed while building the channel: {0}")]
    Propagation(String),
}

/// A linear map on `d x d` matrices, stored as its action on the
/// elementary basis `|i><j|`.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    dim: usize,
    /// `outputs[i * d + j] = E(|i><j|)`.
    outputs: Vec<CMatrix>,
}

impl QuantumChannel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Apply the channel to an arbitrary matrix by linearity.
    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        let d = self.dim;
        let mut out = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                out += &self.outputs[i * d + j] * a[(i, j)];
            }
        }
        out
    }

    /// Channel of a unitary conjugation `A -> U A U^dagger`.
    pub fn from_unitary(u: &CMatrix) -> Self {
        let d = u.nrows();
        let ud = u.adjoint();
        let mut outputs = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut e = CMatrix::zeros(d, d);
                e[(i, j)] = C64::ONE;
                outputs.push(u * e * &ud);
            }
        }
        QuantumChannel { dim: d, outputs }
    }
}

/// Hermitian probe set spanning the operator space: diagonal projectors,
/// and symmetric / antisymmetric combinations for each off-diagonal pair.
/// Probe `i*d + j` is `|i><i|` (i = j), `|i><j| + |j><i|` (i < j) or
/// `i|i><j| - i|j><i|` (i > j).
pub fn hermitian_probes(dim: usize) -> Vec<CMatrix> {
    let mut probes: Vec<CMatrix> = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut p = CMatrix::zeros(dim, dim);
            if i == j {
                p[(i, i)] = C64::ONE;
            } else if i < j {
                p[(i, j)] = C64::ONE;
                p[(j, i)] = C64::ONE;
            } else {
                p[(j, i)] = C64::I;
                p[(i, j)] = -C64::I;
            }
            probes.push(p);
        }
    }
    probes
}

/// Reassemble `E(|i><j|)` for every elementary basis element from the
/// propagated [`hermitian_probes`] outputs, by linearity.
pub fn assemble_channel(results: &[CMatrix], dim: usize) -> QuantumChannel {
    assert_eq!(results.len(), dim * dim);
    let half = C64::new(0.5, 0.0);
    let mut outputs = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let out = if i == j {
                results[i * dim + j].clone()
            } else {
                let sym = &results[i.min(j) * dim + j.max(i)];
                let asym = &results[i.max(j) * dim + j.min(i)];
                if i < j {
                    (sym + asym * C64::I) * half
                } else {
                    (sym - asym * C64::I) * half
                }
            };
            outputs.push(out);
        }
    }
    QuantumChannel { dim, outputs }
}

/// Realize a channel from a propagation routine that can evolve Hermitian
/// initial matrices.
///
/// Non-Hermitian basis elements `|i><j|` are never propagated directly:
/// each is assembled by linearity from the Hermitian probe combinations,
/// so the underlying solver only ever sees valid Hermitian (not
/// necessarily positive) operators.  The `d^2` propagations are
/// independent; with the `parallel` feature they run on the rayon pool,
/// with a deterministic output layout.
pub fn channel_from_propagation<F>(
    propagate_fn: F,
    dim: usize,
) -> Result<QuantumChannel, TomographyError>
where
    F: Fn(&CMatrix) -> Result<CMatrix, String> + Sync,
{
    let probes = hermitian_probes(dim);
    let results: Result<Vec<CMatrix>, String> = run_probes(&propagate_fn, &probes);
    let results = results.map_err(TomographyError::Propagation)?;
    Ok(assemble_channel(&results, dim))
}

#[cfg(feature = "parallel")]
fn run_probes<F>(propagate_fn: &F, probes: &[CMatrix]) -> Result<Vec<CMatrix>, String>
where
    F: Fn(&CMatrix) -> Result<CMatrix, String> + Sync,
{
    use rayon::prelude::*;
    probes.par_iter().map(propagate_fn).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_probes<F>(propagate_fn: &F, probes: &[CMatrix]) -> Result<Vec<CMatrix>, String>
where
    F: Fn(&CMatrix) -> Result<CMatrix, String> + Sync,
{
    probes.iter().map(propagate_fn).collect()
}

/// Unnormalized Choi matrix `chi = sum_ij |i><j| (x) E(|i><j|)`;
/// `Tr chi = d` for trace-preserving channels.
pub fn choi(channel: &QuantumChannel) -> CMatrix {
    let d = channel.dim;
    let mut chi = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let out = &channel.outputs[i * d + j];
            for r in 0..d {
                for c in 0..d {
                    chi[(i * d + r, j * d + c)] += out[(r, c)];
                }
            }
        }
    }
    chi
}

/// Time-resolved gate fidelity `Tr(chi_a chi_b) / Tr(chi_b^2)`.
pub fn gate_fidelity(chi_a: &CMatrix, chi_b: &CMatrix) -> Result<f64, TomographyError> {
    if chi_a.nrows() != chi_b.nrows() {
        return Err(TomographyError::DimensionMismatch(
            chi_a.nrows(),
            chi_b.nrows(),
        ));
    }
    let denom = pauli::trace(&(chi_b * chi_b)).re;
    if denom.abs() < 1e-300 {
        return Err(TomographyError::ZeroReference);
    }
    Ok(pauli::trace(&(chi_a * chi_b)).re / denom)
}

/// Real Pauli transfer matrix `R_ij = Tr[P_i E(P_j)] / d`, rows and
/// columns ordered as [`pauli::TWO_QUBIT_LABELS`] for two qubits (I, X,
/// Y, Z for one qubit).
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTransferMatrix {
    pub matrix: nalgebra::DMatrix<f64>,
}

impl PauliTransferMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `R R^T - I` max deviation; zero for unitary channels.
    pub fn orthogonality_defect(&self) -> f64 {
        let p = &self.matrix * self.matrix.transpose();
        let mut max = 0.0f64;
        for r in 0..p.nrows() {
            for c in 0..p.ncols() {
                let expect = if r == c { 1.0 } else { 0.0 };
                max = max.max((p[(r, c)] - expect).abs());
            }
        }
        max
    }

    /// Largest deviation of the first row from (1, 0, ..., 0).
    pub fn tp_row_defect(&self) -> f64 {
        let mut max = (self.matrix[(0, 0)] - 1.0).abs();
        for c in 1..self.matrix.ncols() {
            max = max.max(self.matrix[(0, c)].abs());
        }
        max
    }
}

fn pauli_basis(dim: usize) -> Vec<CMatrix> {
    match dim {
        2 => pauli::one_qubit_paulis(),
        4 => pauli::two_qubit_paulis(),
        _ => panic!("PTM supports 1 or 2 qubits"),
    }
}

/// PTM of a channel.
pub fn ptm(channel: &QuantumChannel) -> PauliTransferMatrix {
    let d = channel.dim;
    let basis = pauli_basis(d);
    let n = basis.len();
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for (j, pj) in basis.iter().enumerate() {
        let mapped = channel.apply(pj);
        for (i, pi) in basis.iter().enumerate() {
            m[(i, j)] = pauli::trace(&(pi * &mapped)).re / d as f64;
        }
    }
    PauliTransferMatrix { matrix: m }
}

/// PTM from a Choi matrix via `R_ij = Tr[chi (P_j^T (x) P_i)] / d`; the
/// independent route used to cross-check [`ptm`].
pub fn ptm_from_choi(chi: &CMatrix, dim: usize) -> PauliTransferMatrix {
    let basis = pauli_basis(dim);
    let n = basis.len();
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for (j, pj) in basis.iter().enumerate() {
        let pjt = pj.transpose();
        for (i, pi) in basis.iter().enumerate() {
            let op = pauli::kron(&pjt, pi);
            m[(i, j)] = pauli::trace(&(chi * op)).re / dim as f64;
        }
    }
    PauliTransferMatrix { matrix: m }
}

/// Element-wise difference of two PTMs (`a - b`).
pub fn error_ptm(a: &PauliTransferMatrix, b: &PauliTransferMatrix) -> PauliTransferMatrix {
    PauliTransferMatrix {
        matrix: &a.matrix - &b.matrix,
    }
}

/// Complete-positivity / trace-preservation diagnostics of a Choi matrix.
#[derive(Clone, Copy, Debug)]
pub struct CpTpDiagnostics {
    /// Max-norm of `chi - chi^dagger`.
    pub hermiticity_defect: f64,
    /// `Tr chi - d`.
    pub trace_defect: f64,
    /// Smallest eigenvalue of the Hermitian part; `>= -tol` for CP maps.
    pub min_eigenvalue: f64,
    /// Max deviation of the output-side partial trace from the identity.
    pub tp_defect: f64,
}

/// Evaluate CP/TP diagnostics for a `d^2 x d^2` Choi matrix.
pub fn cp_tp_checks(chi: &CMatrix, dim: usize) -> CpTpDiagnostics {
    let hermiticity_defect = pauli::hermiticity_defect(chi);
    let trace_defect = pauli::trace(chi).re - dim as f64;
    let herm = (chi + chi.adjoint()) * C64::new(0.5, 0.0);
    let min_eigenvalue = herm
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &e| m.min(e));
    // partial trace over the output factor: sum_r <i r|chi|j r> = delta_ij
    let mut tp_defect = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = C64::ZERO;
            for r in 0..dim {
                acc += chi[(i * dim + r, j * dim + r)];
            }
            let expect = if i == j { C64::ONE } else { C64::ZERO };
            tp_defect = tp_defect.max((acc - expect).norm());
        }
    }
    CpTpDiagnostics {
        hermiticity_defect,
        trace_defect,
        min_eigenvalue,
        tp_defect,
    }
}
