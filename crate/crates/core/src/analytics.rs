//! Analytic oracles and post-processing: exact pure-dephasing decay,
//! Gaussian-static and Lindblad references, echo-peak extraction and
//! error-scaling fits.

use crate::bath::{self, BathError, BathModel, QuadConfig};
use crate::control::PulseSchedule;
use crate::propagate::Trajectory;
use crate::{quad, C64};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error("echo window ({0}, {1}) contains no trajectory samples")]
    EmptyEchoWindow(f64, f64),
    #[error("scaling fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate design matrix in scaling fit")]
    Degenerate,
}

/// Pure-dephasing exponent
/// `Gamma(t) = (4/pi) int_0^inf dw J(w)/w^2 coth(beta w/2) (1 - cos(w t))`.
///
/// `Gamma(0) = 0`, and for the cut 1/f spectra used here it grows
/// monotonically over the horizons of interest.
pub fn dephasing_exponent(t: f64, model: &BathModel, cfg: &QuadConfig) -> Result<f64, BathError> {
    model.validate()?;
    if t == 0.0 || model.eta == 0.0 {
        return Ok(0.0);
    }
    let at = t.abs();
    let w_max = cfg.w_max_factor * model.omega_hc;
    let pts = quad::spectral_breakpoints(model.omega_lc, model.phi_width, w_max, at);
    let v = quad::integrate_checked(
        |w| {
            bath::spectral_density(w, model) / (w * w) / (model.beta * w / 2.0).tanh()
                * (1.0 - (w * at).cos())
        },
        &pts,
        cfg.abs_tol,
    )?;
    Ok(4.0 / PI * v)
}

/// Analytic pure-dephasing coherence in the rotating frame:
/// `rho01(t) = rho01(0) e^{-Gamma(t)}` (the free `e^{-i w1 t}` factor is
/// removed by the frame).
pub fn analytic_coherence(
    t: f64,
    model: &BathModel,
    rho01_0: C64,
    cfg: &QuadConfig,
) -> Result<C64, BathError> {
    Ok(rho01_0 * (-dephasing_exponent(t, model, cfg)?).exp())
}

/// Coherence under frozen Gaussian detunings of the given variance with a
/// `sigma_z` coupling: `|rho01(t)| = |rho01(0)| exp(-2 variance t^2)`.
pub fn gaussian_static_coherence(t: f64, variance: f64, rho01_0: f64) -> f64 {
    rho01_0 * (-2.0 * variance * t * t).exp()
}

/// Markovian pure-dephasing reference: `|rho01(t)| = |rho01(0)| e^{-t/T_phi}`.
pub fn lindblad_coherence(t: f64, t_phi: f64, rho01_0: f64) -> f64 {
    rho01_0 * (-t / t_phi).exp()
}

/// Echo-peak series extracted from a trajectory.
#[derive(Clone, Debug, Default)]
pub struct EchoSeries {
    /// Pulse index (1-based).
    pub pulse_index: Vec<usize>,
    /// Time at which each peak was found, ns.
    pub peak_time: Vec<f64>,
    /// Peak |rho01| in the window after each pulse.
    pub peak: Vec<f64>,
    /// `ideal - finite` peak difference; empty until
    /// [`EchoSeries::delta_against`] is applied.
    pub delta: Vec<f64>,
}

impl EchoSeries {
    pub fn len(&self) -> usize {
        self.peak.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peak.is_empty()
    }

    /// Fill `delta` with `ideal.peak - self.peak` (the error of this
    /// finite-pulse run relative to the ideal-pulse run).
    pub fn delta_against(&mut self, ideal: &EchoSeries) {
        assert_eq!(self.len(), ideal.len(), "echo series lengths differ");
        self.delta = ideal
            .peak
            .iter()
            .zip(&self.peak)
            .map(|(i, f)| i - f)
            .collect();
    }
}

/// Maximum `|rho01|` in the free-evolution window after each pulse.
///
/// Windows come from the schedule: `(pulse end, next pulse start)`, the
/// last window running to `total_time` (pulse centers for ideal
/// schedules).  The trajectory must sample each window densely.
pub fn echo_peaks(
    trajectory: &Trajectory,
    schedule: &PulseSchedule,
) -> Result<EchoSeries, AnalyticsError> {
    let coherence = trajectory.coherence();
    let mut series = EchoSeries::default();
    for (j, (open, close)) in schedule.echo_windows().into_iter().enumerate() {
        let mut best: Option<(f64, f64)> = None;
        for (i, &t) in trajectory.times.iter().enumerate() {
            if t > open + 1e-9 && t < close - 1e-9 {
                let c = coherence[i];
                if best.is_none_or(|(_, b)| c > b) {
                    best = Some((t, c));
                }
            }
        }
        let (t, c) = best.ok_or(AnalyticsError::EmptyEchoWindow(open, close))?;
        series.pulse_index.push(j + 1);
        series.peak_time.push(t);
        series.peak.push(c);
    }
    Ok(series)
}

/// Scaling-law model for the echo-error fits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalingModel {
    /// `y = a x + b`
    Linear,
    /// `y = a x^2 + b x + c`
    Quadratic,
}

/// Least-squares fit of an echo-error series.
#[derive(Clone, Debug)]
pub struct ScalingFit {
    pub model: ScalingModel,
    /// Highest-order first: `[a, b]` or `[a, b, c]`.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
}

/// Least-squares polynomial fit `y ~ sum_k c_k x^k` returning `R^2`.
pub fn fit_error_scaling(
    x: &[f64],
    y: &[f64],
    model: ScalingModel,
) -> Result<ScalingFit, AnalyticsError> {
    let degree = match model {
        ScalingModel::Linear => 1,
        ScalingModel::Quadratic => 2,
    };
    if x.len() < 5 || x.len() != y.len() {
        return Err(AnalyticsError::TooFewPoints {
            needed: 5,
            got: x.len().min(y.len()),
        });
    }
    let coefficients = polyfit(x, y, degree)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let pred = coefficients
                .iter()
                .fold(0.0, |acc, &c| acc * xi + c);
            (yi - pred).powi(2)
        })
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(ScalingFit {
        model,
        coefficients,
        r_squared,
    })
}

/// Polynomial least squares via normal equations on the (small) Vandermonde
/// system; returns coefficients highest order first.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Result<Vec<f64>, AnalyticsError> {
    let n = degree + 1;
    let mut ata = nalgebra::DMatrix::<f64>::zeros(n, n);
    let mut atb = nalgebra::DVector::<f64>::zeros(n);
    for (&xi, &yi) in x.iter().zip(y) {
        let mut pow = vec![1.0; n];
        for k in 1..n {
            pow[k] = pow[k - 1] * xi;
        }
        for r in 0..n {
            for c in 0..n {
                ata[(r, c)] += pow[r] * pow[c];
            }
            atb[r] += pow[r] * yi;
        }
    }
    let sol = ata.lu().solve(&atb).ok_or(AnalyticsError::Degenerate)?;
    Ok(sol.iter().rev().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_basics() {
        let m = BathModel::table_defaults();
        let cfg = QuadConfig::default();
        assert_eq!(dephasing_exponent(0.0, &m, &cfg).unwrap(), 0.0);
        let mut m0 = m.clone();
        m0.eta = 0.0;
        assert_eq!(dephasing_exponent(321.0, &m0, &cfg).unwrap(), 0.0);
        // high-precision reference values for the default model
        assert_relative_eq!(
            dephasing_exponent(200.0, &m, &cfg).unwrap(),
            0.298_293,
            max_relative = 2e-3
        );
        assert_relative_eq!(
            dephasing_exponent(500.0, &m, &cfg).unwrap(),
            1.625_694,
            max_relative = 2e-3
        );
        // monotone on a coarse grid
        let mut prev = 0.0;
        for t in [50.0, 120.0, 260.0, 410.0, 700.0, 1000.0] {
            let g = dephasing_exponent(t, &m, &cfg).unwrap();
            assert!(g > prev);
            prev = g;
        }
    }

    #[test]
    fn analytic_coherence_magnitude() {
        let m = BathModel::table_defaults();
        let cfg = QuadConfig::default();
        let c = analytic_coherence(300.0, &m, C64::new(0.5, 0.0), &cfg).unwrap();
        let g = dephasing_exponent(300.0, &m, &cfg).unwrap();
        assert_relative_eq!(c.norm(), 0.5 * (-g).exp(), max_relative = 1e-12);
        assert_relative_eq!(
            analytic_coherence(0.0, &m, C64::new(0.5, 0.0), &cfg)
                .unwrap()
                .norm(),
            0.5
        );
    }

    #[test]
    fn reference_decays() {
        assert_relative_eq!(gaussian_static_coherence(0.0, 1e-5, 0.5), 0.5);
        assert!(gaussian_static_coherence(100.0, 0.0, 0.5) == 0.5);
        // e^{-1} at t = T_phi
        assert_relative_eq!(
            lindblad_coherence(576.0, 576.0, 1.0),
            (-1.0f64).exp(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn polyfit_roundtrip_is_exact() {
        // fitting data generated from printed fit coefficients recovers
        // them exactly
        let n: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let coeffs = [3.528e-6, -3.131e-5, -2.962e-5];
        let y: Vec<f64> = n
            .iter()
            .map(|&x| coeffs[0] * x * x + coeffs[1] * x + coeffs[2])
            .collect();
        let fit = fit_error_scaling(&n, &y, ScalingModel::Quadratic).unwrap();
        assert_relative_eq!(fit.coefficients[0], coeffs[0], max_relative = 1e-9);
        assert_relative_eq!(fit.coefficients[1], coeffs[1], max_relative = 1e-9);
        assert_relative_eq!(fit.coefficients[2], coeffs[2], max_relative = 1e-9);
        assert!(fit.r_squared > 1.0 - 1e-12);

        let lin: Vec<f64> = n.iter().map(|&x| 5.081e-5 * x + 1.306e-4).collect();
        let fit = fit_error_scaling(&n, &lin, ScalingModel::Linear).unwrap();
        assert_relative_eq!(fit.coefficients[0], 5.081e-5, max_relative = 1e-9);
        assert_relative_eq!(fit.coefficients[1], 1.306e-4, max_relative = 1e-9);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let x = [1.0, 2.0, 3.0];
        let y = [1.0, 2.0, 3.0];
        assert!(matches!(
            fit_error_scaling(&x, &y, ScalingModel::Linear),
            Err(AnalyticsError::TooFewPoints { .. })
        ));
    }
}
