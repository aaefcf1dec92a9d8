//! Wrapped Cauchy, truncated wrapped Cauchy and von Mises distributions.
//!
//! Wrapped Cauchy sampling and truncation both go through the disk
//! automorphism `η(z) = (ψ - z) / (1 - conj(ψ) z)` with `ψ = ρ e^{iμ}`.
//! If `z` is uniform on the circle then `arg η(z) ~ WC(μ, ρ)`, and `η` is an
//! involution, so `η` pulls a wrapped Cauchy arc back to a uniform arc of
//! length `2π K` where `K` is the arc's probability. Truncated draws are then
//! uniform draws on that image arc pushed forward through `η`.

use std::f64::consts::{FRAC_1_PI, PI, TAU};

use num_complex::Complex64;
use rand::Rng;

use crate::angle::{wrap_f64, Angle, UnitComplex};
use crate::error::{Error, Result};

/// The Möbius involution `η_ψ(z) = (ψ - z) / (1 - conj(ψ) z)`.
#[inline]
pub fn eta(psi: Complex64, z: Complex64) -> Complex64 {
    (psi - z) / (Complex64::new(1.0, 0.0) - psi.conj() * z)
}

#[inline]
fn uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>() * TAU - PI
}

#[inline]
fn arg(z: Complex64) -> f64 {
    z.im.atan2(z.re)
}

/// Wrapped Cauchy distribution `WC(μ, ρ)` with `0 <= ρ < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrappedCauchy {
    mu: Angle,
    rho: f64,
}

impl WrappedCauchy {
    pub fn new(mu: Angle, rho: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::invalid(format!("wrapped Cauchy rho must lie in [0, 1), got {rho}")));
        }
        Ok(WrappedCauchy { mu, rho })
    }

    pub fn mu(&self) -> Angle {
        self.mu
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `ψ = ρ e^{iμ}`, the point in the unit disk indexing this distribution.
    pub fn psi(&self) -> Complex64 {
        Complex64::from_polar(self.rho, self.mu.radians())
    }

    pub fn pdf(&self, theta: Angle) -> f64 {
        let r2 = self.rho * self.rho;
        (1.0 - r2) / (TAU * (1.0 + r2 - 2.0 * self.rho * (theta - self.mu).radians().cos()))
    }

    pub fn ln_pdf(&self, theta: Angle) -> f64 {
        self.pdf(theta).ln()
    }

    /// Probability of the arc running counter-clockwise from `μ - π` to `theta`.
    pub fn cdf(&self, theta: Angle) -> f64 {
        let phi = (theta - self.mu).radians();
        let c = (1.0 + self.rho) / (1.0 - self.rho);
        0.5 + FRAC_1_PI * (c * (0.5 * phi).tan()).atan()
    }

    /// Probability of the counter-clockwise arc from `a` to `b`.
    pub fn arc_mass(&self, a: Angle, b: Angle) -> f64 {
        let fa = self.cdf(a);
        let fb = self.cdf(b);
        let pa = (a - self.mu).radians();
        let pb = (b - self.mu).radians();
        if pb >= pa {
            fb - fa
        } else {
            1.0 - (fa - fb)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Angle {
        let z = Complex64::from_polar(1.0, uniform_angle(rng));
        Angle::wrapped(arg(eta(self.psi(), z)))
    }
}

pub fn wc_pdf(d: &WrappedCauchy, theta: Angle) -> f64 {
    d.pdf(theta)
}

pub fn wc_cdf(d: &WrappedCauchy, theta: Angle) -> f64 {
    d.cdf(theta)
}

pub fn wc_sample<R: Rng + ?Sized>(d: &WrappedCauchy, rng: &mut R) -> Angle {
    d.sample(rng)
}

/// A wrapped Cauchy restricted and renormalized to one arc of the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedWrappedCauchy {
    base: WrappedCauchy,
    /// Counter-clockwise start of the support arc.
    lo: f64,
    /// Length of the support arc, in `(0, 2π]`.
    len: f64,
    /// Start and length of the image arc under `η`.
    xi_start: f64,
    xi_len: f64,
}

impl TruncatedWrappedCauchy {
    /// Support is the arc joining `a` and `b` that contains `contains`.
    pub fn new(base: WrappedCauchy, a: Angle, b: Angle, contains: Angle) -> Result<Self> {
        if a == b {
            return Err(Error::invalid("truncation arc has zero length"));
        }
        let ab = (b.radians() - a.radians()).rem_euclid(TAU);
        let ac = (contains.radians() - a.radians()).rem_euclid(TAU);
        if ac == 0.0 || ac == ab {
            return Err(Error::invalid("support point lies on the arc boundary"));
        }
        let (lo, len) = if ac < ab {
            (a.radians(), ab)
        } else {
            (b.radians(), TAU - ab)
        };

        // Map the endpoints and the interior point into the uniform space.
        let psi = base.psi();
        let ea = arg(eta(psi, a.to_unit().as_complex()));
        let eb = arg(eta(psi, b.to_unit().as_complex()));
        let ec = arg(eta(psi, contains.to_unit().as_complex()));
        let sweep = (eb - ea).rem_euclid(TAU);
        let probe = (ec - ea).rem_euclid(TAU);
        let (xi_start, xi_len) = if probe < sweep {
            (ea, sweep)
        } else {
            (eb, TAU - sweep)
        };
        if !(xi_len > 0.0) {
            return Err(Error::Numerical("truncation arc has no probability mass".into()));
        }
        Ok(TruncatedWrappedCauchy {
            base,
            lo,
            len,
            xi_start,
            xi_len,
        })
    }

    /// Support `(-δ, δ)`. `δ >= π` gives the untruncated distribution.
    pub fn symmetric(base: WrappedCauchy, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::invalid(format!("truncation half-width must be positive, got {delta}")));
        }
        if delta >= PI {
            return Ok(TruncatedWrappedCauchy {
                base,
                lo: -PI,
                len: TAU,
                xi_start: -PI,
                xi_len: TAU,
            });
        }
        Self::new(base, Angle::wrapped(-delta), Angle::wrapped(delta), Angle::ZERO)
    }

    pub fn base(&self) -> &WrappedCauchy {
        &self.base
    }

    /// Normalizer `K`: the base probability of the support arc.
    pub fn normalizer(&self) -> f64 {
        if self.len >= TAU {
            return 1.0;
        }
        self.base
            .arc_mass(Angle::wrapped(self.lo), Angle::wrapped(self.lo + self.len))
    }

    /// `K` read off the length of the uniform image arc.
    pub fn normalizer_from_image(&self) -> f64 {
        self.xi_len / TAU
    }

    pub fn support_contains(&self, theta: Angle) -> bool {
        if self.len >= TAU {
            return true;
        }
        let off = (theta.radians() - self.lo).rem_euclid(TAU);
        off > 0.0 && off < self.len
    }

    pub fn pdf(&self, theta: Angle) -> f64 {
        if self.support_contains(theta) {
            self.base.pdf(theta) / self.normalizer()
        } else {
            0.0
        }
    }

    /// Draw by sampling uniformly on the image arc and mapping back through
    /// `η` (which is its own inverse). Constant cost per draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Angle {
        let psi = self.base.psi();
        loop {
            let xi = self.xi_start + rng.random::<f64>() * self.xi_len;
            let u = Angle::wrapped(arg(eta(psi, Complex64::from_polar(1.0, xi))));
            // rounding can land exactly on an endpoint of an open arc
            if self.support_contains(u) {
                return u;
            }
        }
    }
}

pub fn twc_sample<R: Rng + ?Sized>(d: &TruncatedWrappedCauchy, rng: &mut R) -> Angle {
    d.sample(rng)
}

/// Von Mises `VM(μ, κ)` draw by the Best–Fisher rejection scheme.
pub fn von_mises_sample<R: Rng + ?Sized>(mu: Angle, kappa: f64, rng: &mut R) -> Result<Angle> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::invalid(format!("von Mises kappa must be finite and >= 0, got {kappa}")));
    }
    if kappa < 1e-8 {
        return Ok(Angle::wrapped(uniform_angle(rng)));
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    let f = loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) > u2 || (c / u2).ln() + 1.0 - c >= 0.0 {
            break f;
        }
    };
    let dev = f.clamp(-1.0, 1.0).acos();
    let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
    Ok(Angle::wrapped(wrap_f64(mu.radians() + sign * dev)))
}

/// Draw from `WC(0, ρ)` and rotate to the mean direction given as a unit
/// complex number (sampler fast path; avoids building an [`Angle`] for μ).
#[inline]
pub(crate) fn wc_sample_around<R: Rng + ?Sized>(mean: UnitComplex, rho: f64, rng: &mut R) -> Angle {
    let z = Complex64::from_polar(1.0, uniform_angle(rng));
    let e = eta(Complex64::new(rho, 0.0), z);
    Angle::wrapped(arg(mean.as_complex() * e))
}
