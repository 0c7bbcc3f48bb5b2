//! Physical constants and unit conversions at the config boundary.
//!
//! Internal frequencies are ordinary-frequency values in 1/ns (GHz), so
//! the Boltzmann ratio for a mode at frequency `nu` is `h*nu/(k_B T)` and
//! the inverse temperature carried by [`crate::bath::BathModel`] is
//! `beta = h/(k_B T)` expressed in ns.

/// Planck constant, J*s (exact SI).
pub const H_PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K (exact SI).
pub const K_BOLTZMANN: f64 = 1.380_649e-23;

/// Inverse temperature `h/(k_B T)` in ns for a temperature in mK.
///
/// 50 mK gives 0.9598 ns.
pub fn beta_from_temperature_mk(t_mk: f64) -> f64 {
    assert!(t_mk > 0.0, "temperature must be positive");
    H_PLANCK / (K_BOLTZMANN * t_mk * 1e-3) * 1e9
}

/// Frequency unit suffixes accepted in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FreqUnit {
    GHz,
    MHz,
    KHz,
    Hz,
}

impl FreqUnit {
    /// Scale factor to internal 1/ns.
    pub fn to_inv_ns(self) -> f64 {
        match self {
            FreqUnit::GHz => 1.0,
            FreqUnit::MHz => 1e-3,
            FreqUnit::KHz => 1e-6,
            FreqUnit::Hz => 1e-9,
        }
    }
}

/// Parse a frequency with an explicit unit suffix, e.g. `"10 GHz"`,
/// `"105.6 MHz"`, `"10 kHz"`. Returns the internal 1/ns value.
pub fn parse_frequency(s: &str) -> Result<f64, String> {
    let (value, unit) = split_value_unit(s)?;
    let unit = match unit.to_ascii_lowercase().as_str() {
        "ghz" => FreqUnit::GHz,
        "mhz" => FreqUnit::MHz,
        "khz" => FreqUnit::KHz,
        "hz" => FreqUnit::Hz,
        other => return Err(format!("unknown frequency unit '{other}' in '{s}'")),
    };
    Ok(value * unit.to_inv_ns())
}

/// Parse a time with unit suffix `ns`, `us` or `ms` into ns.
pub fn parse_time_ns(s: &str) -> Result<f64, String> {
    let (value, unit) = split_value_unit(s)?;
    let scale = match unit.to_ascii_lowercase().as_str() {
        "ns" => 1.0,
        "us" => 1e3,
        "ms" => 1e6,
        other => return Err(format!("unknown time unit '{other}' in '{s}'")),
    };
    Ok(value * scale)
}

/// Parse a temperature with unit suffix `mK` or `K` into mK.
pub fn parse_temperature_mk(s: &str) -> Result<f64, String> {
    let (value, unit) = split_value_unit(s)?;
    let scale = match unit.to_ascii_lowercase().as_str() {
        "mk" => 1.0,
        "k" => 1e3,
        other => return Err(format!("unknown temperature unit '{other}' in '{s}'")),
    };
    Ok(value * scale)
}

fn split_value_unit(s: &str) -> Result<(f64, &str), String> {
    let s = s.trim();
    let split = s
        .find(|c: char| c.is_ascii_alphabetic())
        .ok_or_else(|| format!("missing unit suffix in '{s}'"))?;
    let value: f64 = s[..split]
        .trim()
        .parse()
        .map_err(|_| format!("bad numeric value in '{s}'"))?;
    Ok((value, s[split..].trim()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_at_50mk() {
        // h/(k_B * 50 mK) = 0.95985 ns
        let beta = beta_from_temperature_mk(50.0);
        assert!((beta - 0.959_848_614_673_244_2).abs() < 1e-12);
    }

    #[test]
    fn frequency_parsing() {
        assert_eq!(parse_frequency("10 GHz").unwrap(), 10.0);
        assert_eq!(parse_frequency("105.6MHz").unwrap(), 0.1056);
        assert_eq!(parse_frequency("10 kHz").unwrap(), 1e-5);
        assert!((parse_frequency("1 Hz").unwrap() - 1e-9).abs() < 1e-24);
        assert!(parse_frequency("10").is_err());
        assert!(parse_frequency("10 parsec").is_err());
    }

    #[test]
    fn time_and_temperature_parsing() {
        assert_eq!(parse_time_ns("15 ns").unwrap(), 15.0);
        assert_eq!(parse_time_ns("1.5 us").unwrap(), 1500.0);
        assert_eq!(parse_temperature_mk("50 mK").unwrap(), 50.0);
        assert_eq!(parse_temperature_mk("0.05 K").unwrap(), 50.0);
    }
}
