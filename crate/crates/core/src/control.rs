//! Rotating-frame drive Hamiltonians and dynamical-decoupling schedules.

use crate::pauli;
use crate::propagate::Event;
use crate::{C64, CMatrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("pulses overlap: pulse centered at {center} ns with width {width} ns collides with its neighbor")]
    Overlap { center: f64, width: f64 },
    #[error("schedule is malformed: {0}")]
    Malformed(String),
}

/// Rotation axis in the equatorial plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    /// Drive phase: 0 for X, pi/2 for Y.
    pub fn phase(self) -> f64 {
        match self {
            Axis::X => 0.0,
            Axis::Y => std::f64::consts::FRAC_PI_2,
        }
    }
}

/// Axis pattern over a sequence: all-X, all-Y, or alternating.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisPattern {
    AllX,
    AllY,
    /// X, Y, X, Y, ...
    XY,
    /// Y, X, Y, X, ...
    YX,
}

impl AxisPattern {
    pub fn axis(self, pulse_index: usize) -> Axis {
        match (self, pulse_index % 2) {
            (AxisPattern::AllX, _) => Axis::X,
            (AxisPattern::AllY, _) => Axis::Y,
            (AxisPattern::XY, 0) | (AxisPattern::YX, 1) => Axis::X,
            _ => Axis::Y,
        }
    }
}

/// One finite-duration drive segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSegment {
    pub start: f64,
    pub duration: f64,
    /// Drive amplitude Omega in 1/ns; a pi pulse has `Omega = pi / duration`.
    pub amplitude: f64,
    /// Drive phase in rad; 0 = X axis, pi/2 = Y axis.
    pub phase: f64,
}

impl PulseSegment {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn center(&self) -> f64 {
        self.start + 0.5 * self.duration
    }
}

/// Time-ordered, non-overlapping pulse schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSchedule {
    pub segments: Vec<PulseSegment>,
    pub total_time: f64,
    /// Apply pulses as instantaneous unitaries at their center times.
    pub ideal: bool,
}

impl PulseSchedule {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        let mut prev_end = 0.0f64;
        for seg in &self.segments {
            if seg.duration <= 0.0 || seg.amplitude < 0.0 {
                return Err(ScheduleError::Malformed(
                    "segments need positive duration and non-negative amplitude".into(),
                ));
            }
            if seg.start < prev_end - 1e-12 {
                return Err(ScheduleError::Overlap {
                    center: seg.center(),
                    width: seg.duration,
                });
            }
            prev_end = seg.end();
        }
        if self.total_time + 1e-12 < prev_end {
            return Err(ScheduleError::Malformed(
                "total_time ends before the last segment".into(),
            ));
        }
        Ok(())
    }

    /// Compile to propagation events (free gaps + driven segments, or
    /// instantaneous unitaries when `ideal`).
    pub fn events(&self) -> Vec<Event> {
        let mut events = Vec::new();
        let mut t = 0.0f64;
        for seg in &self.segments {
            if self.ideal {
                let c = seg.center();
                if c > t {
                    events.push(Event::Evolve {
                        duration: c - t,
                        hamiltonian: None,
                    });
                }
                events.push(Event::Unitary(ideal_pi_unitary(seg.phase)));
                t = c;
            } else {
                if seg.start > t {
                    events.push(Event::Evolve {
                        duration: seg.start - t,
                        hamiltonian: None,
                    });
                }
                events.push(Event::Evolve {
                    duration: seg.duration,
                    hamiltonian: Some(drive_operator(seg.amplitude, seg.phase)),
                });
                t = seg.end();
            }
        }
        if self.total_time > t {
            events.push(Event::Evolve {
                duration: self.total_time - t,
                hamiltonian: None,
            });
        }
        events
    }

    /// Free-evolution windows after each pulse, used for echo extraction:
    /// `(end of pulse j, start of pulse j+1)`, the last one running to
    /// `total_time`.  For ideal schedules the windows open at the pulse
    /// centers.
    pub fn echo_windows(&self) -> Vec<(f64, f64)> {
        let n = self.segments.len();
        (0..n)
            .map(|j| {
                let open = if self.ideal {
                    self.segments[j].center()
                } else {
                    self.segments[j].end()
                };
                let close = if j + 1 < n {
                    if self.ideal {
                        self.segments[j + 1].center()
                    } else {
                        self.segments[j + 1].start
                    }
                } else {
                    self.total_time
                };
                (open, close)
            })
            .collect()
    }
}

/// Rotating-frame drive `(Omega/2)(sigma_x cos(phi) + sigma_y sin(phi))`.
pub fn drive_operator(amplitude: f64, phase: f64) -> CMatrix {
    pauli::sigma_x() * C64::new(amplitude / 2.0 * phase.cos(), 0.0)
        + pauli::sigma_y() * C64::new(amplitude / 2.0 * phase.sin(), 0.0)
}

/// Drive Hamiltonian at time `t` under a schedule: the segment's operator
/// inside a pulse, zero during the waiting intervals.
pub fn drive_hamiltonian(t: f64, schedule: &PulseSchedule) -> CMatrix {
    for seg in &schedule.segments {
        if t >= seg.start && t < seg.end() {
            return drive_operator(seg.amplitude, seg.phase);
        }
    }
    CMatrix::zeros(2, 2)
}

/// Exact pi rotation about the equatorial axis with the given phase.
pub fn ideal_pi_unitary(phase: f64) -> CMatrix {
    let gen = pauli::sigma_x() * C64::new(phase.cos(), 0.0)
        + pauli::sigma_y() * C64::new(phase.sin(), 0.0);
    pauli::evolution_operator(&gen, std::f64::consts::FRAC_PI_2)
}

/// CPMG schedule: `n` pi pulses of width `tau`, free gap `delta_t` between
/// consecutive pulses, half-gap `t1` before the first pulse and after the
/// last one.
///
/// Pulse `j` (1-based) starts at `t1 + (j-1)(delta_t + tau)`; the total
/// time is `2 t1 + n tau + (n-1) delta_t`.
pub fn cpmg_schedule(
    n: usize,
    axes: AxisPattern,
    tau: f64,
    delta_t: f64,
    t1: f64,
    ideal: bool,
) -> PulseSchedule {
    let segments: Vec<PulseSegment> = (0..n)
        .map(|j| PulseSegment {
            start: t1 + j as f64 * (delta_t + tau),
            duration: tau,
            amplitude: std::f64::consts::PI / tau,
            phase: axes.axis(j).phase(),
        })
        .collect();
    let total_time = if n == 0 {
        2.0 * t1
    } else {
        2.0 * t1 + n as f64 * tau + (n as f64 - 1.0) * delta_t
    };
    PulseSchedule {
        segments,
        total_time,
        ideal,
    }
}

/// UDD schedule: `n` pi pulses of width `tau` centered at the Uhrig times
/// `t_j = total * sin^2(pi j / (2n + 2))`.
pub fn udd_schedule(
    n: usize,
    total: f64,
    tau: f64,
    axes: AxisPattern,
    ideal: bool,
) -> Result<PulseSchedule, ScheduleError> {
    let mut segments = Vec::with_capacity(n);
    for j in 1..=n {
        let center = total * (std::f64::consts::PI * j as f64 / (2.0 * n as f64 + 2.0))
            .sin()
            .powi(2);
        let start = center - 0.5 * tau;
        if start < 0.0 || center + 0.5 * tau > total {
            return Err(ScheduleError::Overlap {
                center,
                width: tau,
            });
        }
        segments.push(PulseSegment {
            start,
            duration: tau,
            amplitude: std::f64::consts::PI / tau,
            phase: axes.axis(j - 1).phase(),
        });
    }
    let schedule = PulseSchedule {
        segments,
        total_time: total,
        ideal,
    };
    schedule.validate()?;
    Ok(schedule)
}

/// Calibrate a pi pulse of duration `tau`: the amplitude is `pi/tau`, and
/// the achieved rotation fidelity is computed by integrating the
/// Schroedinger equation for the driven qubit over the segment.
pub fn calibrate_pi_pulse(tau: f64, axis: Axis) -> (f64, f64) {
    assert!(tau > 0.0);
    let amplitude = std::f64::consts::PI / tau;
    let h = drive_operator(amplitude, axis.phase());
    // RK4 on the 2x2 propagator, dU/dt = -i H U
    let n = 2000usize;
    let dt = tau / n as f64;
    let mut u = pauli::identity(2);
    for _ in 0..n {
        let k1 = &h * &u * (-C64::I);
        let k2 = &h * (&u + &k1 * C64::new(dt / 2.0, 0.0)) * (-C64::I);
        let k3 = &h * (&u + &k2 * C64::new(dt / 2.0, 0.0)) * (-C64::I);
        let k4 = &h * (&u + &k3 * C64::new(dt, 0.0)) * (-C64::I);
        u += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0);
    }
    let target = ideal_pi_unitary(axis.phase());
    (amplitude, pauli::unitary_fidelity(&target, &u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cpmg_timing_matches_reference_parameters() {
        let s = cpmg_schedule(20, AxisPattern::AllX, 15.0, 118.0, 59.0, false);
        s.validate().unwrap();
        assert_relative_eq!(s.segments[0].start, 59.0);
        assert_relative_eq!(s.total_time, 118.0 + 20.0 * 15.0 + 19.0 * 118.0);
        assert_relative_eq!(s.total_time, 2660.0);
        // empty schedule: free evolution only
        let s0 = cpmg_schedule(0, AxisPattern::AllX, 15.0, 118.0, 59.0, false);
        assert!(s0.segments.is_empty());
        assert_relative_eq!(s0.total_time, 118.0);
    }

    #[test]
    fn udd_centers() {
        // n=1: Hahn echo at total/2
        let s = udd_schedule(1, 600.0, 15.0, AxisPattern::AllX, false).unwrap();
        assert_relative_eq!(s.segments[0].center(), 300.0, max_relative = 1e-12);
        // n=2: total/4 and 3 total/4
        let s = udd_schedule(2, 600.0, 15.0, AxisPattern::AllY, false).unwrap();
        assert_relative_eq!(s.segments[0].center(), 150.0, max_relative = 1e-12);
        assert_relative_eq!(s.segments[1].center(), 450.0, max_relative = 1e-12);
        // n=3: T sin^2(pi/8), T/2, T sin^2(3pi/8)
        let t = 800.0;
        let s = udd_schedule(3, t, 10.0, AxisPattern::AllX, false).unwrap();
        let expect = [
            t * (std::f64::consts::PI / 8.0).sin().powi(2),
            t / 2.0,
            t * (3.0 * std::f64::consts::PI / 8.0).sin().powi(2),
        ];
        for (seg, e) in s.segments.iter().zip(expect) {
            assert_relative_eq!(seg.center(), e, max_relative = 1e-12);
        }
        // overlap at small total / large n
        assert!(udd_schedule(12, 100.0, 15.0, AxisPattern::AllX, false).is_err());
    }

    #[test]
    fn axis_patterns_alternate() {
        assert_eq!(AxisPattern::XY.axis(0), Axis::X);
        assert_eq!(AxisPattern::XY.axis(1), Axis::Y);
        assert_eq!(AxisPattern::YX.axis(0), Axis::Y);
        assert_eq!(AxisPattern::YX.axis(1), Axis::X);
    }

    #[test]
    fn drive_is_zero_in_gaps_and_correct_inside() {
        let s = cpmg_schedule(2, AxisPattern::AllX, 15.0, 118.0, 59.0, false);
        assert!(drive_hamiltonian(10.0, &s).iter().all(|c| c.norm() == 0.0));
        let inside = drive_hamiltonian(60.0, &s);
        let expect = pauli::sigma_x() * C64::new(std::f64::consts::PI / 30.0, 0.0);
        assert!((inside - expect).norm() < 1e-14);
        // Y phase gives pure sigma_y drive
        let d = drive_operator(0.4, std::f64::consts::FRAC_PI_2);
        let ey = pauli::sigma_y() * C64::new(0.2, 0.0);
        assert!((d - ey).norm() < 1e-15);
    }

    #[test]
    fn pi_pulse_calibration() {
        let (amp, fid) = calibrate_pi_pulse(15.0, Axis::X);
        assert_relative_eq!(amp, std::f64::consts::PI / 15.0, max_relative = 1e-15);
        assert!(fid >= 1.0 - 1e-8, "fidelity {fid}");
        // pi rotation takes |0> to |1>
        let u = ideal_pi_unitary(0.0);
        let p1 = u[(1, 0)].norm_sqr();
        assert!((p1 - 1.0).abs() < 1e-12);
        // |+> is an eigenstate of the X pulse
        let plus = nalgebra::DVector::from_vec(vec![
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ]);
        let out = &u * &plus;
        let overlap = plus.dotc(&out).norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }
}
