//! Physical constants in internal units (R_E, yr, rad).

use crate::error::{Error, Result};
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    /// Earth's mass parameter, R_E^3 / yr^2.
    pub mu_e: f64,
    /// Earth radius in km, used only for unit conversion.
    pub r_e_km: f64,
    /// Oblateness coefficient, entered with the sign used in the potential formulas.
    pub j2: f64,
    pub mu_m: f64,
    pub a_m: f64,
    pub e_m: f64,
    pub mu_s: f64,
    pub a_s: f64,
    pub e_s: f64,
    /// Inclination of the lunar and solar orbits on the equator, rad.
    pub i0: f64,
}

/// Moon/Earth mass ratio.
pub const MOON_MASS_RATIO: f64 = 1.0 / 81.3005690769;
/// Sun/Earth mass ratio.
pub const SUN_MASS_RATIO: f64 = 332946.0487;

impl Default for PhysicalConstants {
    fn default() -> Self {
        let mu_e = 1.52984e9;
        let r_e_km = 6378.14;
        PhysicalConstants {
            mu_e,
            r_e_km,
            j2: 1.0826261e-3,
            mu_m: mu_e * MOON_MASS_RATIO,
            a_m: 384748.0 / r_e_km,
            e_m: 0.065,
            mu_s: mu_e * SUN_MASS_RATIO,
            a_s: 1.496e8 / r_e_km,
            e_s: 0.0167,
            i0: 23.43 * math::PI / 180.0,
        }
    }
}

impl PhysicalConstants {
    /// Semimajor axis in R_E for an altitude in km (circular-orbit convention).
    pub fn altitude_to_a(&self, alt_km: f64) -> f64 {
        (self.r_e_km + alt_km) / self.r_e_km
    }

    pub fn a_to_altitude(&self, a: f64) -> f64 {
        a * self.r_e_km - self.r_e_km
    }

    pub fn km_to_re(&self, km: f64) -> f64 {
        km / self.r_e_km
    }

    /// Delaunay action L = sqrt(mu a).
    pub fn big_l(&self, a: f64) -> f64 {
        math::sqrt(self.mu_e * a)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [self.mu_e, self.r_e_km, self.mu_m, self.a_m, self.mu_s, self.a_s];
        if pos.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Domain("masses and lengths must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.e_m) || !(0.0..1.0).contains(&self.e_s) {
            return Err(Error::Domain("perturber eccentricity outside [0,1)".into()));
        }
        Ok(())
    }

    /// FNV-1a hash of all constants' bit patterns.
    pub fn fingerprint(&self) -> u64 {
        let vals = [
            self.mu_e, self.r_e_km, self.j2, self.mu_m, self.a_m, self.e_m, self.mu_s, self.a_s, self.e_s, self.i0,
        ];
        let mut h: u64 = 0xcbf29ce484222325;
        for v in vals {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        h
    }
}
