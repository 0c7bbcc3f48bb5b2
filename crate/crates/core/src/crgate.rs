//! Two-qubit cross-resonance gate: rotating-frame Hamiltonian, ideal
//! target unitary, the pulse-area seed condition, and the iterative
//! calibration loop producing corrective single-qubit Rz rotations.

use crate::pauli::{self, rz, unitary_fidelity};
use crate::{C64, CMatrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CrError {
    #[error("detuning must be nonzero for the area condition")]
    ZeroDetuning,
}

/// Cross-resonance gate parameters.  Frequencies in 1/ns, times in ns,
/// rotation angles in rad (applied as half-angle Rz rotations).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrParams {
    /// Control-target detuning `Delta = omega_1 - omega_2`.
    pub detuning: f64,
    /// Static XY exchange coupling `g`.
    pub coupling: f64,
    /// Drive amplitude on the control qubit.
    pub drive: f64,
    /// Pulse duration.
    pub tau: f64,
    pub rz_pre_1: f64,
    pub rz_post_1: f64,
    pub rz_pre_2: f64,
    pub rz_post_2: f64,
}

impl CrParams {
    /// The calibrated reference parameter set: detuning 0.5148 GHz,
    /// coupling 50 MHz, drive 105.6 MHz, 132 ns, with the corrective
    /// Rz angles in units of pi as quoted.
    pub fn reference() -> Self {
        CrParams {
            detuning: 0.5148,
            coupling: 0.050,
            drive: 0.1056,
            tau: 132.0,
            rz_pre_1: -0.750050 * std::f64::consts::PI,
            rz_post_1: -0.093750 * std::f64::consts::PI,
            rz_pre_2: 0.593800 * std::f64::consts::PI,
            rz_post_2: 0.593800 * std::f64::consts::PI,
        }
    }

    /// Seed from the area condition: `Omega = theta Delta / (g tau)`.
    pub fn from_area_condition(
        detuning: f64,
        coupling: f64,
        tau: f64,
        theta: f64,
    ) -> Result<Self, CrError> {
        if detuning == 0.0 {
            return Err(CrError::ZeroDetuning);
        }
        Ok(CrParams {
            detuning,
            coupling,
            drive: theta * detuning / (coupling * tau),
            tau,
            rz_pre_1: 0.0,
            rz_post_1: 0.0,
            rz_pre_2: 0.0,
            rz_post_2: 0.0,
        })
    }

    /// Advisory dispersive-regime check: `|Delta| >> g, Omega`.
    pub fn dispersive_margin(&self) -> f64 {
        self.detuning.abs() / self.coupling.abs().max(self.drive.abs()).max(1e-300)
    }
}

/// `H_CR = (Delta/2) Z(x)I + g (X(x)X + Y(x)Y) + (Omega(t)/2) X(x)I` with
/// the drive on inside `[0, tau)`.
pub fn cr_hamiltonian(t: f64, params: &CrParams) -> CMatrix {
    let drive = if (0.0..params.tau).contains(&t) {
        params.drive
    } else {
        0.0
    };
    cr_generator(params, drive)
}

fn cr_generator(params: &CrParams, drive: f64) -> CMatrix {
    let id = pauli::identity(2);
    let (x, y, z) = (pauli::sigma_x(), pauli::sigma_y(), pauli::sigma_z());
    pauli::kron(&z, &id) * C64::new(params.detuning / 2.0, 0.0)
        + (pauli::kron(&x, &x) + pauli::kron(&y, &y)) * C64::new(params.coupling, 0.0)
        + pauli::kron(&x, &id) * C64::new(drive / 2.0, 0.0)
}

/// Ideal target `exp(-i (pi/4) Z(x)X) = cos(pi/4) I - i sin(pi/4) Z(x)X`.
pub fn ideal_unitary() -> CMatrix {
    let zx = pauli::kron(&pauli::sigma_z(), &pauli::sigma_x());
    let c = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    pauli::identity(4) * c - zx * (C64::I * c)
}

/// Residual of the area condition `g Omega tau / Delta - theta` for a
/// rectangular pulse.  A calibration seed, not a final constraint.
pub fn cr_area_condition(params: &CrParams, theta: f64) -> Result<f64, CrError> {
    if params.detuning == 0.0 {
        return Err(CrError::ZeroDetuning);
    }
    Ok(params.coupling * params.drive * params.tau / params.detuning - theta)
}

/// Calibrated noiseless propagator `U_post U_CR(t) U_pre` at `0 <= t <= tau`.
///
/// The pre/post corrections are instantaneous virtual Rz rotations; the
/// in-pulse generator is constant, so `U_CR(t)` is a matrix exponential.
pub fn calibrated_propagator(params: &CrParams, t: f64) -> CMatrix {
    let u_cr = pauli::evolution_operator(&cr_generator(params, params.drive), t);
    let pre = pauli::kron(&rz(params.rz_pre_1), &rz(params.rz_pre_2));
    let post = pauli::kron(&rz(params.rz_post_1), &rz(params.rz_post_2));
    post * u_cr * pre
}

/// Project an operator difference onto the two-qubit Pauli basis.
///
/// The Hermitian and anti-Hermitian parts are projected separately and
/// the coefficients `Tr(P D)/4` of both are returned combined as complex
/// numbers (real part from the Hermitian component, imaginary from the
/// anti-Hermitian one).  For the calibration loop only magnitudes matter.
pub fn pauli_projection(difference: &CMatrix) -> [C64; 16] {
    let herm = (difference + difference.adjoint()) * C64::new(0.5, 0.0);
    let anti = (difference - difference.adjoint()) * C64::new(0.5, 0.0);
    let mut out = [C64::ZERO; 16];
    for (i, p) in pauli::two_qubit_paulis().iter().enumerate() {
        let re = pauli::trace(&(p * &herm)).re / 4.0;
        // anti-Hermitian part: coefficients are purely imaginary
        let im = pauli::trace(&(p * &anti)).im / 4.0;
        out[i] = C64::new(re, im);
    }
    out
}

/// Search settings for [`calibrate`].
#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    /// Outer iterations of the alternating angle/parameter loop.
    pub max_iter: usize,
    /// Grid points per coordinate sweep.
    pub grid_points: usize,
    /// Refinement rounds within one coordinate-descent stage.
    pub rounds: usize,
    /// Initial search spans: Rz angles (rad), detuning, pulse duration
    /// (ns), drive amplitude.
    pub angle_span: f64,
    pub detuning_span: f64,
    pub tau_span: f64,
    pub drive_span: f64,
    /// Target fidelity.
    pub target: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_iter: 8,
            grid_points: 25,
            rounds: 8,
            angle_span: std::f64::consts::PI,
            detuning_span: 0.05,
            tau_span: 10.0,
            drive_span: 0.02,
            target: 0.999,
        }
    }
}

/// Outcome of a calibration run.
#[derive(Clone, Debug)]
pub struct CalibrationReport {
    pub fidelity: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `|Tr(P (U_cal - U_ideal))| / 4` per Pauli string, in the fixed
    /// basis order.
    pub pauli_residuals: [f64; 16],
}

fn fidelity_of(p: &CrParams) -> f64 {
    unitary_fidelity(&ideal_unitary(), &calibrated_propagator(p, p.tau))
}

/// Deterministic coordinate refinement of one parameter subset.
fn descend(p: &mut CrParams, spans: [f64; 7], grid: usize, rounds: usize) -> f64 {
    let mut spans = spans;
    let mut best = fidelity_of(p);
    for _ in 0..rounds {
        for (coord, span) in spans.iter().enumerate() {
            if *span == 0.0 {
                continue;
            }
            let current = get_coord(p, coord);
            let mut best_val = current;
            for k in 0..grid {
                let cand = current - span + 2.0 * span * k as f64 / (grid - 1) as f64;
                if coord == 2 && cand <= 0.0 {
                    continue; // tau must stay positive
                }
                let mut q = *p;
                set_coord(&mut q, coord, cand);
                let f = fidelity_of(&q);
                // strict improvement with first-wins tie break keeps the
                // search deterministic
                if f > best {
                    best = f;
                    best_val = cand;
                }
            }
            set_coord(p, coord, best_val);
        }
        for s in spans.iter_mut() {
            *s *= 0.35;
        }
    }
    best
}

fn get_coord(p: &CrParams, i: usize) -> f64 {
    match i {
        0 => p.detuning,
        1 => p.drive,
        2 => p.tau,
        3 => p.rz_pre_1,
        4 => p.rz_post_1,
        5 => p.rz_pre_2,
        _ => p.rz_post_2,
    }
}

fn set_coord(p: &mut CrParams, i: usize, v: f64) {
    match i {
        0 => p.detuning = v,
        1 => p.drive = v,
        2 => p.tau = v,
        3 => p.rz_pre_1 = v,
        4 => p.rz_post_1 = v,
        5 => p.rz_pre_2 = v,
        _ => p.rz_post_2 = v,
    }
}

/// Iterative parameter screening: alternate a single-qubit correction
/// stage (Rz angles only) with a fine search over detuning, duration and
/// amplitude once the residuals are dominated by entangling terms, until
/// the fidelity target is reached or `max_iter` runs out.
///
/// Deterministic for a fixed `SearchConfig`; returns the best parameters
/// found together with a report (the `converged` flag distinguishes
/// success from budget exhaustion).
pub fn calibrate(seed: &CrParams, search: &SearchConfig) -> (CrParams, CalibrationReport) {
    let mut p = *seed;
    let mut fidelity = fidelity_of(&p);
    let mut iterations = 0;
    let mut angle_span = search.angle_span;
    let mut param_spans = [
        search.detuning_span,
        search.drive_span,
        search.tau_span,
    ];
    for it in 0..search.max_iter {
        iterations = it + 1;
        // single-qubit corrective rotations
        fidelity = descend(
            &mut p,
            [0.0, 0.0, 0.0, angle_span, angle_span, angle_span, angle_span],
            search.grid_points,
            search.rounds,
        );
        if fidelity >= search.target {
            break;
        }
        // entangling residuals remain: release the area condition and
        // refine detuning, amplitude and duration
        fidelity = descend(
            &mut p,
            [
                param_spans[0],
                param_spans[1],
                param_spans[2],
                0.0,
                0.0,
                0.0,
                0.0,
            ],
            (search.grid_points + 1) / 2,
            search.rounds,
        );
        if fidelity >= search.target {
            break;
        }
        angle_span *= 0.5;
        for s in param_spans.iter_mut() {
            *s *= 0.5;
        }
    }
    let diff = calibrated_propagator(&p, p.tau) - ideal_unitary();
    let residuals = pauli_projection(&diff);
    let report = CalibrationReport {
        fidelity,
        iterations,
        converged: fidelity >= search.target,
        pauli_residuals: residuals.map(|c| c.norm()),
    };
    (p, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ideal_unitary_properties() {
        let u = ideal_unitary();
        assert!(pauli::unitarity_defect(&u) < 1e-15);
        // U|00> = (|00> - i |01>)/sqrt(2)
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((u[(0, 0)] - C64::new(r, 0.0)).norm() < 1e-15);
        assert!((u[(1, 0)] - C64::new(0.0, -r)).norm() < 1e-15);
        // U^2 = exp(-i pi/2 ZX)
        let zx = pauli::kron(&pauli::sigma_z(), &pauli::sigma_x());
        let u2 = pauli::evolution_operator(&zx, std::f64::consts::FRAC_PI_2);
        assert!(((&u * &u) - u2).norm() < 1e-12);
    }

    #[test]
    fn hamiltonian_structure() {
        let p = CrParams::reference();
        let h = cr_hamiltonian(50.0, &p);
        assert!(pauli::hermiticity_defect(&h) < 1e-15);
        // drive off outside the window
        let h_out = cr_hamiltonian(200.0, &p);
        let drive_part = h - h_out;
        let expect =
            pauli::kron(&pauli::sigma_x(), &pauli::identity(2)) * C64::new(p.drive / 2.0, 0.0);
        assert!((drive_part - expect).norm() < 1e-14);
        // Omega = 0: detuning + exchange only, conserves excitation number
        let mut p0 = p;
        p0.drive = 0.0;
        p0.detuning = 0.0;
        let h0 = cr_hamiltonian(10.0, &p0);
        let n_op = {
            let id = pauli::identity(2);
            let nz = (pauli::identity(2) - pauli::sigma_z()) * C64::new(0.5, 0.0);
            pauli::kron(&nz, &id) + pauli::kron(&id, &nz)
        };
        assert!((pauli::commutator(&h0, &n_op)).norm() < 1e-14);
    }

    #[test]
    fn area_condition() {
        let p = CrParams::from_area_condition(0.5148, 0.05, 132.0, std::f64::consts::FRAC_PI_2)
            .unwrap();
        assert_relative_eq!(
            cr_area_condition(&p, std::f64::consts::FRAC_PI_2).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            p.drive,
            std::f64::consts::FRAC_PI_2 * 0.5148 / (0.05 * 132.0),
            max_relative = 1e-15
        );
        // the reference parameters do not satisfy the condition: the
        // constraint was released during the fine search
        let residual = cr_area_condition(&CrParams::reference(), std::f64::consts::FRAC_PI_2)
            .unwrap();
        assert!(residual.abs() > 0.1);
        let mut z = CrParams::reference();
        z.detuning = 0.0;
        assert!(cr_area_condition(&z, 1.0).is_err());
    }

    #[test]
    fn calibrated_propagator_is_unitary_and_reduces_to_rz_at_zero() {
        let p = CrParams::reference();
        for t in [13.0, 77.0, 132.0] {
            assert!(pauli::unitarity_defect(&calibrated_propagator(&p, t)) < 1e-10);
        }
        let u0 = calibrated_propagator(&p, 0.0);
        let expect = pauli::kron(&rz(p.rz_post_1), &rz(p.rz_post_2))
            * pauli::kron(&rz(p.rz_pre_1), &rz(p.rz_pre_2));
        assert!((u0 - expect).norm() < 1e-12);
    }

    #[test]
    fn reference_parameters_hit_target_fidelity() {
        let p = CrParams::reference();
        let f = unitary_fidelity(&ideal_unitary(), &calibrated_propagator(&p, p.tau));
        assert!(f >= 0.999, "fidelity {f}");
    }

    #[test]
    fn pauli_projection_basics() {
        let zero = CMatrix::zeros(4, 4);
        assert!(pauli_projection(&zero).iter().all(|c| c.norm() == 0.0));
        let zi = pauli::kron(&pauli::sigma_z(), &pauli::identity(2));
        let proj = pauli_projection(&zi);
        assert!((proj[12] - C64::ONE).norm() < 1e-14); // ZI slot
        let sum: f64 = proj.iter().map(|c| c.norm_sqr()).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        // Parseval on a random-ish Hermitian operator
        let mut d = CMatrix::zeros(4, 4);
        for r in 0..4 {
            for c in 0..4 {
                let v = C64::new((r as f64 - c as f64) * 0.21, (r * c) as f64 * 0.13);
                d[(r, c)] = v;
            }
        }
        let d = (&d + d.adjoint()) * C64::new(0.5, 0.0);
        let proj = pauli_projection(&d);
        let frob: f64 = d.iter().map(|c| c.norm_sqr()).sum();
        let sum: f64 = proj.iter().map(|c| c.norm_sqr() * 4.0).sum();
        assert_relative_eq!(frob, sum, max_relative = 1e-12);
    }
}
