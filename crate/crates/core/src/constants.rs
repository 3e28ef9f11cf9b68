//! Physical constants (CODATA 2018 exact SI values where defined).

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Magnetic flux quantum h/2e, Wb.
pub const FLUX_QUANTUM: f64 = 2.067_833_848e-15;

/// Photon energy hc/λ in joules.
pub fn photon_energy(wavelength: f64) -> f64 {
    PLANCK * SPEED_OF_LIGHT / wavelength
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn photon_energy_at_1220_nm() {
        let e = photon_energy(1.22e-6);
        assert!((e - 1.628e-19).abs() < 0.001e-19);
    }

    #[test]
    fn flux_quantum_is_h_over_2e() {
        let phi0 = PLANCK / (2.0 * ELEMENTARY_CHARGE);
        assert!(((phi0 - FLUX_QUANTUM) / FLUX_QUANTUM).abs() < 1e-9);
    }
}
