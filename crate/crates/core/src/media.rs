//! Homogeneous acoustic media and their frequency-dependent parameters.
//!
//! A [`Medium`] stores the frequency-independent constants (density,
//! compressibility, compressional viscosity). [`Medium::derive`] turns it into
//! a [`DerivedMedium`] at a given angular frequency, with the complex effective
//! density `β = ρ(1+iν)/(1+ν²)`, `ν = ωγδ`, and wavenumber `k = ω√(γβ)` on the
//! branch `Im k ≥ 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    /// Mass density, kg/m³.
    pub rho: f64,
    /// Mean compressibility, 1/Pa.
    pub gamma: f64,
    /// Compressional viscosity, Pa·s. Zero for a lossless medium.
    pub delta: f64,
}

impl Medium {
    pub fn new(rho: f64, gamma: f64, delta: f64) -> Result<Self> {
        let m = Medium { rho, gamma, delta };
        m.validate()?;
        Ok(m)
    }

    pub fn lossless(rho: f64, gamma: f64) -> Result<Self> {
        Self::new(rho, gamma, 0.0)
    }

    /// Lossy medium whose loss factor `ν = ωγδ` equals `nu` at frequency `omega`.
    pub fn with_loss_factor(rho: f64, gamma: f64, nu: f64, omega: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::domain(format!(
                "angular frequency must be positive, got {omega}"
            )));
        }
        Self::new(rho, gamma, nu / (omega * gamma))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(Error::domain(format!("density must be positive, got {}", self.rho)));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::domain(format!(
                "compressibility must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::domain(format!(
                "viscosity must be non-negative, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    pub fn is_lossless(&self) -> bool {
        self.delta == 0.0
    }

    /// Lossless specific admittance `√(ρ/γ)`.
    pub fn lossless_admittance(&self) -> f64 {
        (self.rho / self.gamma).sqrt()
    }

    pub fn derive(&self, omega: f64) -> Result<DerivedMedium> {
        self.validate()?;
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::domain(format!(
                "angular frequency must be positive, got {omega}"
            )));
        }
        let nu = omega * self.gamma * self.delta;
        let (beta, k) = if nu == 0.0 {
            (
                Complex64::new(self.rho, 0.0),
                Complex64::new(omega * (self.gamma * self.rho).sqrt(), 0.0),
            )
        } else {
            let beta = Complex64::new(self.rho, self.rho * nu) / (1.0 + nu * nu);
            let mut k = (beta * self.gamma).sqrt() * omega;
            if k.im < 0.0 {
                k = -k;
            }
            (beta, k)
        };
        let zeta = if nu == 0.0 {
            self.lossless_admittance()
        } else {
            1.0 / (k / (beta * omega)).re
        };
        Ok(DerivedMedium {
            medium: *self,
            omega,
            nu,
            beta,
            k,
            zeta,
        })
    }
}

/// A medium evaluated at one angular frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedMedium {
    pub medium: Medium,
    pub omega: f64,
    /// Dimensionless loss factor `ωγδ`.
    pub nu: f64,
    /// Complex effective density.
    pub beta: Complex64,
    /// Complex wavenumber, `Im k ≥ 0`.
    pub k: Complex64,
    /// Specific admittance `(Re[k/(ωβ)])⁻¹`.
    pub zeta: f64,
}

impl DerivedMedium {
    pub fn rho(&self) -> f64 {
        self.medium.rho
    }

    pub fn gamma(&self) -> f64 {
        self.medium.gamma
    }

    pub fn is_lossless(&self) -> bool {
        self.nu == 0.0
    }

    /// `Im[β/ρ]`, the loss weight multiplying kinetic energy in flux balances.
    pub fn loss_weight(&self) -> f64 {
        (self.beta / self.rho()).im
    }

    /// Admittance evaluated from the general complex formula, even when lossless.
    pub fn general_admittance(&self) -> f64 {
        1.0 / (self.k / (self.beta * self.omega)).re
    }

    /// Real wavenumber of a lossless medium.
    pub fn real_k(&self) -> Result<f64> {
        if self.is_lossless() {
            Ok(self.k.re)
        } else {
            Err(Error::domain("medium is lossy; wavenumber is complex"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_reduction() {
        let dm = Medium::new(1.0, 1.0, 0.0).unwrap().derive(2.0).unwrap();
        assert_eq!(dm.k, Complex64::new(2.0, 0.0));
        assert_eq!(dm.beta, Complex64::new(1.0, 0.0));
        assert_eq!(dm.zeta, 1.0);
        assert!((dm.general_admittance() - dm.zeta).abs() < 1e-15);
    }

    #[test]
    fn unit_loss_factor_matches_complex_sqrt_oracle() {
        // ν = ωγδ = 1 with ω = γ = 1.
        let dm = Medium::new(1.0, 1.0, 1.0).unwrap().derive(1.0).unwrap();
        assert!((dm.beta - Complex64::new(0.5, 0.5)).norm() < 1e-15);
        // mpmath: sqrt(0.5 + 0.5i)
        let expected = Complex64::new(0.776_886_987_015_018_6, 0.321_797_126_452_791_3);
        assert!((dm.k - expected).norm() < 1e-14);
    }

    #[test]
    fn lossy_has_positive_imaginary_wavenumber() {
        let dm = Medium::new(1000.0, 4.5e-10, 1e-3).unwrap().derive(1e4).unwrap();
        assert!(dm.k.im > 0.0);
        assert!(dm.loss_weight() > 0.0);
    }

    #[test]
    fn continuity_in_viscosity() {
        let a = Medium::new(1.3, 0.7, 0.0).unwrap().derive(3.0).unwrap();
        let b = Medium::new(1.3, 0.7, 1e-12).unwrap().derive(3.0).unwrap();
        assert!((a.k - b.k).norm() / a.k.norm() < 1e-6);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Medium::new(0.0, 1.0, 0.0).is_err());
        assert!(Medium::new(1.0, -1.0, 0.0).is_err());
        assert!(Medium::new(1.0, 1.0, -0.1).is_err());
        assert!(Medium::new(1.0, 1.0, 0.0).unwrap().derive(0.0).is_err());
    }

    #[test]
    fn loss_factor_constructor() {
        let m = Medium::with_loss_factor(2.0, 0.5, 0.3, 4.0).unwrap();
        let dm = m.derive(4.0).unwrap();
        assert!((dm.nu - 0.3).abs() < 1e-15);
    }
}
