//! Unit conventions and conversions.
//!
//! Time is in picoseconds, angular frequency in rad/ps, wavelength in nm.

use crate::error::{Error, Result};

/// Speed of light in nm/ps.
pub const C_NM_PER_PS: f64 = 299_792.458;

/// Converts a vacuum wavelength in nm to angular frequency in rad/ps.
pub fn wavelength_to_angfreq(lambda_nm: f64) -> Result<f64> {
    if !(lambda_nm > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "wavelength must be positive, got {lambda_nm} nm"
        )));
    }
    Ok(2.0 * std::f64::consts::PI * C_NM_PER_PS / lambda_nm)
}

/// Converts an angular frequency in rad/ps to vacuum wavelength in nm.
pub fn angfreq_to_wavelength(omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "angular frequency must be positive, got {omega} rad/ps"
        )));
    }
    Ok(2.0 * std::f64::consts::PI * C_NM_PER_PS / omega)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_wavelengths() {
        let w730 = wavelength_to_angfreq(730.0).unwrap();
        assert!((w730 - 2580.3).abs() < 0.1, "got {w730}");
        let w827 = wavelength_to_angfreq(827.0).unwrap();
        assert!((w827 - 2277.7).abs() < 0.1, "got {w827}");
        // Fitted centers sit within a couple nm of the nominal wavelengths.
        assert!((angfreq_to_wavelength(2584.6).unwrap() - 728.8).abs() < 0.05);
        assert!((angfreq_to_wavelength(2276.7).unwrap() - 827.4).abs() < 0.1);
    }

    #[test]
    fn round_trip() {
        let lambda = 1000.0;
        let back = angfreq_to_wavelength(wavelength_to_angfreq(lambda).unwrap()).unwrap();
        assert!((back - lambda).abs() / lambda < 1e-9);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(wavelength_to_angfreq(0.0).is_err());
        assert!(wavelength_to_angfreq(-5.0).is_err());
    }
}
