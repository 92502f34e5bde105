/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// GPS L1 carrier (Hz).
pub const GPS_L1_HZ: f64 = 1_575.42e6;

/// Earth gravitational parameter (m^3/s^2).
pub const EARTH_MU: f64 = 3.986_004_418e14;

/// Carrier-dependent physical constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub c: f64,
    pub center_freq_hz: f64,
}

impl PhysicalConstants {
    pub fn for_carrier(center_freq_hz: f64) -> Self {
        Self {
            c: SPEED_OF_LIGHT,
            center_freq_hz,
        }
    }

    pub fn wavelength_m(&self) -> f64 {
        self.c / self.center_freq_hz
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::for_carrier(GPS_L1_HZ)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l1_wavelength() {
        let l = PhysicalConstants::default().wavelength_m();
        assert!((l - 0.19029).abs() < 5e-6, "{l}");
    }
}
