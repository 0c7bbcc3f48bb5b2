//! 1/f bath model: spectral density with soft cutoffs, PSD via the
//! fluctuation-dissipation theorem, and the quadrature treatment of the
//! bath correlation function.
//!
//! The correlation function computed here is the ground-truth oracle for
//! the exponential decomposition in [`crate::fit`].

use crate::quad::{self, QuadError};
use crate::units;
use crate::C64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BathError {
    #[error("invalid bath model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Harmonic-bath description of one qubit's Z-coupled noise environment.
///
/// All frequencies in 1/ns (the `omega/2pi` value of lab frequencies, see
/// the crate-level units note); `beta` in ns.
#[derive(Clone, Debug, PartialEq)]
pub struct BathModel {
    /// Dimensionless system-bath coupling strength.
    pub eta: f64,
    /// Spectral exponent; `s = 0` is 1/f noise.
    pub s: f64,
    /// Characteristic frequency (the qubit frequency), 1/ns.
    pub omega_q: f64,
    /// High-frequency cutoff, 1/ns.
    pub omega_hc: f64,
    /// Low-frequency cutoff, 1/ns.
    pub omega_lc: f64,
    /// Transition width of the soft cutoff steps, 1/ns.
    pub phi_width: f64,
    /// Inverse temperature `h/(k_B T)`, ns.
    pub beta: f64,
}

impl BathModel {
    /// 1/f model with the conventional transition width `phi = omega_lc/10`.
    pub fn one_over_f(eta: f64, omega_q: f64, omega_hc: f64, omega_lc: f64, t_mk: f64) -> Self {
        Self {
            eta,
            s: 0.0,
            omega_q,
            omega_hc,
            omega_lc,
            phi_width: omega_lc / 10.0,
            beta: units::beta_from_temperature_mk(t_mk),
        }
    }

    /// The dissipative-qubit parameter set used throughout the tests:
    /// eta 1e-7, qubit 5 GHz, high cutoff 10 GHz, low cutoff 10 kHz, 50 mK.
    pub fn table_defaults() -> Self {
        Self::one_over_f(1e-7, 5.0, 10.0, 1e-5, 50.0)
    }

    pub fn validate(&self) -> Result<(), BathError> {
        if self.eta < 0.0 {
            return Err(BathError::InvalidModel("eta must be >= 0".into()));
        }
        if !(self.omega_hc > self.omega_lc && self.omega_lc > 0.0) {
            return Err(BathError::InvalidModel(
                "cutoffs must satisfy omega_hc > omega_lc > 0".into(),
            ));
        }
        if self.phi_width <= 0.0 {
            return Err(BathError::InvalidModel("phi_width must be > 0".into()));
        }
        if self.beta <= 0.0 {
            return Err(BathError::InvalidModel("beta must be > 0".into()));
        }
        Ok(())
    }
}

/// Soft-Heaviside step `1 - 1/(1 + e^{x/phi})`.
fn soft_step(x: f64, phi: f64) -> f64 {
    let r = x / phi;
    if r > 500.0 {
        1.0
    } else if r < -500.0 {
        0.0
    } else {
        1.0 / (1.0 + (-r).exp())
    }
}

/// Spectral density `J(w)`: antisymmetric, high-frequency rolloff
/// `(1 + (w/w_hc)^2)^-2`, soft low-frequency cutoff on both signs.
pub fn spectral_density(omega: f64, model: &BathModel) -> f64 {
    if omega == 0.0 {
        return 0.0;
    }
    let body = spectral_density_uncut(omega, model);
    let cut = soft_step(omega - model.omega_lc, model.phi_width)
        + soft_step(-omega - model.omega_lc, model.phi_width);
    body * cut
}

/// `J(w)` without the low-frequency cutoff factors (high cutoff only).
pub fn spectral_density_uncut(omega: f64, model: &BathModel) -> f64 {
    if omega == 0.0 {
        return 0.0;
    }
    let mag = PI / 2.0 * model.eta * model.omega_q.powf(1.0 - model.s) * omega.abs().powf(model.s)
        / (1.0 + (omega / model.omega_hc).powi(2)).powi(2);
    omega.signum() * mag
}

/// Bose occupation factor `1/(1 - e^{-x})` with a series for small `x`.
fn bose(x: f64) -> f64 {
    if x.abs() < 1e-7 {
        1.0 / x + 0.5 + x / 12.0
    } else {
        1.0 / (1.0 - (-x).exp())
    }
}

/// Power spectral density `S(w) = J(w) / (1 - e^{-beta w})`.
///
/// `S(0)` is taken as 0, continuing the antisymmetric-J limit through the
/// origin.
pub fn psd(omega: f64, model: &BathModel) -> f64 {
    if omega == 0.0 {
        return 0.0;
    }
    spectral_density(omega, model) * bose(model.beta * omega)
}

/// PSD built from the uncut spectral density (used by the quasi-static
/// flat patch below the cutoff).
pub fn psd_uncut(omega: f64, model: &BathModel) -> f64 {
    if omega == 0.0 {
        return 0.0;
    }
    spectral_density_uncut(omega, model) * bose(model.beta * omega)
}

/// Quadrature settings for the bath integrals.
#[derive(Clone, Copy, Debug)]
pub struct QuadConfig {
    /// Absolute tolerance on each integral.
    pub abs_tol: f64,
    /// Frequency window extends to `w_max_factor * omega_hc`.
    pub w_max_factor: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        // the rolloff tail beyond 5 w_hc still carries ~0.2% of the total
        // power, so the default window is generous
        QuadConfig {
            abs_tol: 1e-16,
            w_max_factor: 30.0,
        }
    }
}

impl QuadConfig {
    fn w_max(&self, model: &BathModel) -> f64 {
        self.w_max_factor * model.omega_hc
    }
}

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

/// Bath correlation function `C(t) = (1/pi) int e^{-i w t} S(w) dw`.
///
/// Hermitian symmetry `C(-t) = conj(C(t))` is honored by evaluating at
/// `|t|`. This is the oracle the exponential fit is certified against.
pub fn correlation_function(t: f64, model: &BathModel, cfg: &QuadConfig) -> Result<C64, BathError> {
    model.validate()?;
    let at = t.abs();
    let pts = quad::spectral_breakpoints(model.omega_lc, model.phi_width, cfg.w_max(model), at);
    // S(w) + S(-w) = J coth(beta w / 2);  S(w) - S(-w) = J(w)
    let re = quad::integrate_checked(
        |w| spectral_density(w, model) * coth(model.beta * w / 2.0) * (w * at).cos(),
        &pts,
        cfg.abs_tol,
    )?;
    let im = quad::integrate_checked(
        |w| spectral_density(w, model) * (w * at).sin(),
        &pts,
        cfg.abs_tol,
    )?;
    let c = C64::new(re / PI, -im / PI);
    Ok(if t < 0.0 { c.conj() } else { c })
}

/// `C(0) = (1/pi) int J(w) coth(beta w/2) dw` over positive frequencies.
pub fn correlation_zero(model: &BathModel, cfg: &QuadConfig) -> Result<f64, BathError> {
    model.validate()?;
    let pts = quad::spectral_breakpoints(model.omega_lc, model.phi_width, cfg.w_max(model), 0.0);
    let v = quad::integrate_checked(
        |w| spectral_density(w, model) * coth(model.beta * w / 2.0),
        &pts,
        cfg.abs_tol,
    )?;
    Ok(v / PI)
}

/// One-sided band power `int_a^b S(w) dw`, additive over adjacent bands.
///
/// The lower endpoint is clamped to the quadrature floor `1e-3 w_lc`
/// because the logistic tail keeps `S ~ c/w` all the way to w = 0 (a
/// formally log-divergent, physically irrelevant remnant of the soft
/// cutoff).
pub fn band_variance(
    model: &BathModel,
    omega_a: f64,
    omega_b: f64,
    cfg: &QuadConfig,
) -> Result<f64, BathError> {
    model.validate()?;
    if !(omega_a >= 0.0 && omega_b > omega_a) {
        return Err(BathError::InvalidModel(
            "band must satisfy 0 <= a < b".into(),
        ));
    }
    let hi = omega_b.min(cfg.w_max(model));
    let pts: Vec<f64> = quad::spectral_breakpoints(model.omega_lc, model.phi_width, hi, 0.0)
        .into_iter()
        .filter(|&w| w > omega_a && w < hi)
        .collect();
    let mut all = Vec::with_capacity(pts.len() + 2);
    all.push(omega_a.max(1e-3 * model.omega_lc));
    all.extend(pts);
    all.push(hi);
    all.dedup_by(|a, b| (*a - *b).abs() < f64::EPSILON * a.abs().max(1.0));
    if all.len() < 2 {
        return Ok(0.0);
    }
    let v = quad::integrate_checked(|w| psd(w, model), &all, cfg.abs_tol)?;
    Ok(v)
}

/// Total one-sided noise power `int_0^inf S(w) dw`.
pub fn total_power(model: &BathModel, cfg: &QuadConfig) -> Result<f64, BathError> {
    band_variance(model, 0.0, f64::INFINITY, cfg)
}

/// Variance of the quasi-static sub-cutoff noise, treating the PSD below
/// `w_lc` as flat at its uncut value there: `sigma^2 = w_lc * S(w_lc)`.
pub fn subcutoff_static_variance(model: &BathModel) -> f64 {
    model.omega_lc * psd_uncut(model.omega_lc, model)
}

/// Dephasing-time estimate from the total power.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TPhiEstimate {
    Finite(f64),
    /// Zero total power: no dephasing.
    Infinite,
}

/// Equivalent-Gaussian dephasing time: `(1/T_phi)^2 = (pi/2) int_0^inf S(w) dw`.
///
/// The one-sided integral reproduces the reference value of ~200 ns for
/// the default model; see the README units note.
pub fn t_phi_estimate(model: &BathModel, cfg: &QuadConfig) -> Result<TPhiEstimate, BathError> {
    let p = total_power(model, cfg)?;
    if p <= 0.0 {
        return Ok(TPhiEstimate::Infinite);
    }
    Ok(TPhiEstimate::Finite(1.0 / (PI / 2.0 * p).sqrt()))
}
