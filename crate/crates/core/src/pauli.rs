//! Pauli operators, tensor products and small dense-matrix helpers.

use crate::{C64, CMatrix};

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[C64::ZERO, C64::ONE, C64::ONE, C64::ZERO])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[C64::ZERO, -C64::I, C64::I, C64::ZERO],
    )
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[C64::ONE, C64::ZERO, C64::ZERO, -C64::ONE])
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Labels of the sixteen two-qubit Pauli strings in the fixed order used
/// by every PTM in this crate: II, IX, IY, IZ, XI, ..., ZZ.
pub const TWO_QUBIT_LABELS: [&str; 16] = [
    "II", "IX", "IY", "IZ", "XI", "XX", "XY", "XZ", "YI", "YX", "YY", "YZ", "ZI", "ZX", "ZY", "ZZ",
];

/// The single-qubit Pauli basis I, X, Y, Z.
pub fn one_qubit_paulis() -> Vec<CMatrix> {
    vec![identity(2), sigma_x(), sigma_y(), sigma_z()]
}

/// The sixteen two-qubit Pauli strings, ordered as [`TWO_QUBIT_LABELS`].
pub fn two_qubit_paulis() -> Vec<CMatrix> {
    let single = one_qubit_paulis();
    let mut out = Vec::with_capacity(16);
    for a in &single {
        for b in &single {
            out.push(kron(a, b));
        }
    }
    out
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Max-norm of the anti-Hermitian defect `m - m^dagger`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// `exp(-i H t)` for Hermitian `H` via its eigendecomposition.
pub fn evolution_operator(h: &CMatrix, t: f64) -> CMatrix {
    debug_assert!(hermiticity_defect(h) < 1e-10, "generator must be Hermitian");
    let eig = h.clone().symmetric_eigen();
    let phases: Vec<C64> = eig
        .eigenvalues
        .iter()
        .map(|&ev| (-C64::I * ev * t).exp())
        .collect();
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(phases));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Rotation `exp(-i (theta/2) sigma_z)` (virtual Z).
pub fn rz(theta: f64) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        (-C64::I * (theta / 2.0)).exp(),
        (C64::I * (theta / 2.0)).exp(),
    ]))
}

/// Phase-insensitive gate fidelity `|Tr(U^dag V)| / d`.
pub fn unitary_fidelity(u: &CMatrix, v: &CMatrix) -> f64 {
    let d = u.nrows() as f64;
    trace(&(u.adjoint() * v)).norm() / d
}

/// Largest absolute deviation of `U U^dag` from the identity.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let p = u * u.adjoint();
    let id = identity(u.nrows());
    (p - id).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (sigma_x(), sigma_y(), sigma_z());
        // xy = iz
        assert!(((&x * &y) - &z * C64::I).norm() < 1e-15);
        assert!((&x * &x - identity(2)).norm() < 1e-15);
        assert_eq!(two_qubit_paulis().len(), 16);
    }

    #[test]
    fn two_qubit_paulis_are_orthogonal() {
        let ps = two_qubit_paulis();
        for (i, a) in ps.iter().enumerate() {
            for (j, b) in ps.iter().enumerate() {
                let t = trace(&(a * b)).re;
                let expect = if i == j { 4.0 } else { 0.0 };
                assert!((t - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn evolution_operator_matches_series() {
        // exp(-i X t) = cos t I - i sin t X
        let t = 0.7;
        let u = evolution_operator(&sigma_x(), t);
        let expect = identity(2) * C64::new(t.cos(), 0.0) + sigma_x() * C64::new(0.0, -t.sin());
        assert!((u - expect).norm() < 1e-12);
    }

    #[test]
    fn rz_is_half_angle() {
        let u = rz(std::f64::consts::PI);
        // exp(-i pi/2 Z): diag(-i, i)
        assert!((u[(0, 0)] - C64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((u[(1, 1)] - C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn fidelity_is_phase_insensitive() {
        let u = evolution_operator(&sigma_y(), 0.3);
        let v = &u * C64::new(0.0, 1.0);
        assert!((unitary_fidelity(&u, &v) - 1.0).abs() < 1e-12);
        assert!(unitarity_defect(&u) < 1e-12);
    }
}
