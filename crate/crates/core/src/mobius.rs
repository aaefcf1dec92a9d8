//! The Möbius regression link `μ(x) = β0 (x + β1) / (1 + conj(β1) x)`.
//!
//! `β0` is a rotation on the unit circle and `β1` is any complex number.
//! `|β1| = 0` reduces the link to a rotation, `|β1| = 1` makes it constant
//! (the response no longer depends on the covariate) and `|β1| > 1` adds a
//! reflection.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::angle::{Angle, UnitComplex};
use crate::error::{Error, Result};

/// `||β1| - 1|` below this is treated as the constant-link regime.
pub const UNIT_MODULUS_BAND: f64 = 1e-6;

const SINGULAR_DENOMINATOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusLink {
    beta0: UnitComplex,
    beta1: Complex64,
}

impl MobiusLink {
    pub fn new(beta0: UnitComplex, beta1: Complex64) -> Result<Self> {
        if !beta1.re.is_finite() || !beta1.im.is_finite() {
            return Err(Error::invalid("beta1 must be finite"));
        }
        Ok(MobiusLink { beta0, beta1 })
    }

    /// Link in the sampler's polar parameterization: `β0 = e^{iθ0}`,
    /// `β1 = r e^{iθ1}`. A negative `r` is allowed (signed special case).
    pub fn from_polar(theta0: Angle, r: f64, theta1: Angle) -> Result<Self> {
        Self::new(theta0.to_unit(), Complex64::from_polar(r, theta1.radians()))
    }

    pub fn beta0(&self) -> UnitComplex {
        self.beta0
    }

    pub fn beta1(&self) -> Complex64 {
        self.beta1
    }

    /// True when `|β1|` is within [`UNIT_MODULUS_BAND`] of one.
    pub fn is_constant(&self) -> bool {
        (self.beta1.norm() - 1.0).abs() <= UNIT_MODULUS_BAND
    }

    /// Unchecked evaluation used by the sampler's inner loop. The result has
    /// unit modulus up to rounding.
    #[inline]
    pub(crate) fn eval(&self, x: Complex64) -> Complex64 {
        let b0 = self.beta0.as_complex();
        let b1 = self.beta1;
        let m = b1.norm();
        if (m - 1.0).abs() <= UNIT_MODULUS_BAND {
            return b0 * (b1 / m);
        }
        b0 * ((x + b1) / (Complex64::new(1.0, 0.0) + b1.conj() * x))
    }

    /// Predicted mean direction for covariate `x`.
    pub fn apply(&self, x: UnitComplex) -> Result<UnitComplex> {
        if self.is_constant() {
            return UnitComplex::from_complex(self.beta0.as_complex() * (self.beta1 / self.beta1.norm()));
        }
        let den = Complex64::new(1.0, 0.0) + self.beta1.conj() * x.as_complex();
        if den.norm() < SINGULAR_DENOMINATOR {
            return Err(Error::Numerical("Möbius link denominator vanished".into()));
        }
        UnitComplex::from_complex(self.beta0.as_complex() * (x.as_complex() + self.beta1) / den)
    }

    /// The unique covariate mapped onto `y`.
    pub fn invert(&self, y: UnitComplex) -> Result<UnitComplex> {
        if self.is_constant() {
            return Err(Error::invalid("link with |beta1| = 1 is not invertible"));
        }
        let w = y.as_complex() * self.beta0.as_complex().conj();
        let den = Complex64::new(1.0, 0.0) - self.beta1.conj() * w;
        if den.norm() < SINGULAR_DENOMINATOR {
            return Err(Error::Numerical("Möbius inverse denominator vanished".into()));
        }
        UnitComplex::from_complex((w - self.beta1) / den)
    }
}

pub fn link_apply(link: &MobiusLink, x: UnitComplex) -> Result<UnitComplex> {
    link.apply(x)
}

pub fn link_invert(link: &MobiusLink, y: UnitComplex) -> Result<UnitComplex> {
    link.invert(y)
}

/// Special-case link `arg μ(θ) = 2 atan(ω tan(θ/2))`, equivalent to the
/// Möbius link with `β0 = 1` and real `β1 = (1 - ω) / (1 + ω)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaLink {
    omega: f64,
}

impl OmegaLink {
    pub fn new(omega: f64) -> Result<Self> {
        if !(omega.is_finite() && omega >= 0.0) {
            return Err(Error::invalid(format!("omega must be finite and >= 0, got {omega}")));
        }
        Ok(OmegaLink { omega })
    }

    pub fn from_beta1(beta1: f64) -> Result<Self> {
        Self::new(beta1_to_omega(beta1)?)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn beta1(&self) -> f64 {
        (1.0 - self.omega) / (1.0 + self.omega)
    }

    pub fn apply(&self, theta_x: Angle) -> Angle {
        omega_link_apply_unchecked(self.omega, theta_x)
    }
}

pub fn omega_to_beta1(omega: f64) -> Result<f64> {
    Ok(OmegaLink::new(omega)?.beta1())
}

pub fn beta1_to_omega(beta1: f64) -> Result<f64> {
    if !(beta1 > -1.0 && beta1 <= 1.0) {
        return Err(Error::invalid(format!("beta1 must lie in (-1, 1], got {beta1}")));
    }
    Ok((1.0 - beta1) / (1.0 + beta1))
}

pub fn omega_link_apply(omega: f64, theta_x: Angle) -> Result<Angle> {
    Ok(OmegaLink::new(omega)?.apply(theta_x))
}

fn omega_link_apply_unchecked(omega: f64, theta_x: Angle) -> Angle {
    if omega == 0.0 {
        // β1 = 1: constant link at the preferred direction.
        return Angle::ZERO;
    }
    let t = theta_x.radians();
    if t == -PI {
        // removable singularity of tan(θ/2); ±π is a fixed point
        return theta_x;
    }
    Angle::wrapped(2.0 * (omega * (0.5 * t).tan()).atan())
}
