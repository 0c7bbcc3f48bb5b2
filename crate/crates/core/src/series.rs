//! Sum-of-exponentials representation of the bath correlation function,
//! `C(t) = sum_k d_k e^{-gamma_k t} + static_variance`.

use crate::C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("dynamic term {index} has non-positive decay rate Re(gamma) = {re}")]
    NonDecayingTerm { index: usize, re: f64 },
    #[error("static variance must be non-negative, got {0}")]
    NegativeStaticVariance(f64),
}

/// One exponential term of the correlation function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpTerm {
    /// Complex amplitude `d_k`.
    pub amplitude: C64,
    /// Complex decay rate `gamma_k`, `Re(gamma_k) > 0`.
    pub rate: C64,
    /// Marks a term representing classical (real, symmetric) noise.  Such
    /// terms carry real amplitude and rate and may be propagated through a
    /// single commutator-coupled hierarchy index instead of an (m, n)
    /// pair; the dynamics are identical, the hierarchy is smaller.
    pub classical: bool,
}

/// Exponential decomposition of `C(t)` for `t >= 0`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExponentialSeries {
    pub terms: Vec<ExpTerm>,
    /// Amplitude of the zero-decay (static) term, `>= 0`.
    pub static_variance: f64,
}

impl ExponentialSeries {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), SeriesError> {
        for (i, term) in self.terms.iter().enumerate() {
            if term.rate.re <= 0.0 {
                return Err(SeriesError::NonDecayingTerm {
                    index: i,
                    re: term.rate.re,
                });
            }
        }
        if self.static_variance < 0.0 {
            return Err(SeriesError::NegativeStaticVariance(self.static_variance));
        }
        Ok(())
    }

    /// Append a zero-decay static term of the given variance.
    ///
    /// A zero variance leaves the dynamics unchanged and is elided.
    pub fn with_static_mode(mut self, variance: f64) -> Result<Self, SeriesError> {
        if variance < 0.0 {
            return Err(SeriesError::NegativeStaticVariance(variance));
        }
        self.static_variance += variance;
        Ok(self)
    }

    /// Total number of dynamic terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty() && self.static_variance == 0.0
    }
}

/// Evaluate `sum_k d_k e^{-gamma_k t} + static_variance` at `t >= 0`.
pub fn reconstruct(series: &ExponentialSeries, t: f64) -> C64 {
    debug_assert!(t >= 0.0, "reconstruct is defined for t >= 0");
    let mut acc = C64::new(series.static_variance, 0.0);
    for term in &series.terms {
        acc += term.amplitude * (-term.rate * t).exp();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_series_is_zero() {
        assert_eq!(reconstruct(&ExponentialSeries::empty(), 3.0), C64::ZERO);
    }

    #[test]
    fn single_unit_term_at_zero() {
        let s = ExponentialSeries {
            terms: vec![ExpTerm {
                amplitude: C64::ONE,
                rate: C64::ONE,
                classical: true,
            }],
            static_variance: 0.0,
        };
        assert_eq!(reconstruct(&s, 0.0), C64::ONE);
        assert!((reconstruct(&s, 2.0).re - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn static_mode_attach() {
        let s = ExponentialSeries::empty().with_static_mode(0.25).unwrap();
        assert_eq!(s.static_variance, 0.25);
        assert_eq!(reconstruct(&s, 17.0), C64::new(0.25, 0.0));
        assert!(ExponentialSeries::empty().with_static_mode(-1.0).is_err());
    }

    #[test]
    fn validation_rejects_growing_terms() {
        let s = ExponentialSeries {
            terms: vec![ExpTerm {
                amplitude: C64::ONE,
                rate: C64::new(-0.1, 2.0),
                classical: false,
            }],
            static_variance: 0.0,
        };
        assert!(s.validate().is_err());
    }
}
