//! Angles on the circle, unit complex numbers and descriptive circular
//! statistics.
//!
//! Every angle is stored in radians in the half-open range `[-π, π)`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Resultant lengths below this leave the circular mean undefined.
pub const DEGENERATE_RESULTANT: f64 = 1e-12;

/// Tolerance on `|z| = 1` before [`UnitComplex::new`] renormalizes.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// Reduce a finite angle in radians to `[-π, π)`.
#[inline]
pub(crate) fn wrap_f64(x: f64) -> f64 {
    let mut r = (x + PI).rem_euclid(TAU) - PI;
    if r >= PI {
        r -= TAU;
    }
    if r < -PI {
        r = -PI;
    }
    r
}

/// Wrap a finite angle to the canonical range `[-π, π)`.
pub fn wrap(x: f64) -> Result<Angle> {
    Angle::new(x)
}

/// A point on the circle in radians, always in `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub fn new(radians: f64) -> Result<Self> {
        if !radians.is_finite() {
            return Err(Error::NonFinite(radians));
        }
        Ok(Angle(wrap_f64(radians)))
    }

    /// Wraps without the finiteness check. Callers guarantee a finite input.
    #[inline]
    pub(crate) fn wrapped(radians: f64) -> Self {
        debug_assert!(radians.is_finite());
        Angle(wrap_f64(radians))
    }

    pub fn from_degrees(degrees: f64) -> Result<Self> {
        Angle::new(degrees.to_radians())
    }

    #[inline]
    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    #[inline]
    pub fn to_unit(self) -> UnitComplex {
        UnitComplex(Complex64::from_polar(1.0, self.0))
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl Add for Angle {
    type Output = Angle;
    fn add(self, rhs: Angle) -> Angle {
        Angle(wrap_f64(self.0 + rhs.0))
    }
}

impl Sub for Angle {
    type Output = Angle;
    fn sub(self, rhs: Angle) -> Angle {
        Angle(wrap_f64(self.0 - rhs.0))
    }
}

impl Neg for Angle {
    type Output = Angle;
    fn neg(self) -> Angle {
        Angle(wrap_f64(-self.0))
    }
}

/// Signed shortest rotation taking `b` to `a`.
pub fn angle_difference(a: Angle, b: Angle) -> Angle {
    a - b
}

/// A complex number of unit modulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitComplex(Complex64);

impl UnitComplex {
    pub const ONE: UnitComplex = UnitComplex(Complex64 { re: 1.0, im: 0.0 });

    /// Builds a unit complex number, renormalizing when `|z|` deviates from
    /// one by more than [`UNIT_TOLERANCE`].
    pub fn new(re: f64, im: f64) -> Result<Self> {
        Self::from_complex(Complex64::new(re, im))
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NonFinite(if z.re.is_finite() { z.im } else { z.re }));
        }
        let norm = z.norm();
        if norm == 0.0 {
            return Err(Error::invalid("cannot normalize zero to the unit circle"));
        }
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            Ok(UnitComplex(z / norm))
        } else {
            Ok(UnitComplex(z))
        }
    }

    pub fn from_angle(a: Angle) -> Self {
        a.to_unit()
    }

    #[inline]
    pub fn re(self) -> f64 {
        self.0.re
    }

    #[inline]
    pub fn im(self) -> f64 {
        self.0.im
    }

    #[inline]
    pub fn as_complex(self) -> Complex64 {
        self.0
    }

    pub fn arg(self) -> Angle {
        Angle::wrapped(self.0.im.atan2(self.0.re))
    }

    pub fn conj(self) -> Self {
        UnitComplex(self.0.conj())
    }

    pub fn powi(self, k: i32) -> Self {
        UnitComplex(self.0.powi(k))
    }
}

impl Mul for UnitComplex {
    type Output = UnitComplex;
    fn mul(self, rhs: UnitComplex) -> UnitComplex {
        UnitComplex(self.0 * rhs.0)
    }
}

/// Mean direction, mean resultant length and circular dispersion of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularSummary {
    /// `None` when the resultant length is below [`DEGENERATE_RESULTANT`].
    pub circular_mean: Option<Angle>,
    pub resultant_length: f64,
    /// Always `1 - resultant_length`.
    pub dispersion: f64,
}

impl CircularSummary {
    /// The circular mean, or [`Error::DegenerateMean`] when undefined.
    pub fn mean(&self) -> Result<Angle> {
        self.circular_mean
            .ok_or(Error::DegenerateMean(self.resultant_length))
    }
}

/// Circular mean and dispersion `1 - R̄` of a nonempty sample.
pub fn circular_summary(angles: &[Angle]) -> Result<CircularSummary> {
    circular_summary_iter(angles.iter().map(|a| a.0))
}

pub(crate) fn circular_summary_iter(angles: impl Iterator<Item = f64>) -> Result<CircularSummary> {
    let (mut c, mut s, mut n) = (0.0, 0.0, 0usize);
    for a in angles {
        c += a.cos();
        s += a.sin();
        n += 1;
    }
    if n == 0 {
        return Err(Error::invalid("circular summary of an empty sample"));
    }
    let (c, s) = (c / n as f64, s / n as f64);
    let resultant_length = c.hypot(s).min(1.0);
    let circular_mean = if resultant_length < DEGENERATE_RESULTANT {
        None
    } else {
        Some(Angle::wrapped(s.atan2(c)))
    };
    Ok(CircularSummary {
        circular_mean,
        resultant_length,
        dispersion: 1.0 - resultant_length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn a(x: f64) -> Angle {
        Angle::new(x).unwrap()
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap(0.0).unwrap().radians(), 0.0);
        assert!((wrap(1.5 * PI).unwrap().radians() + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap(-PI).unwrap().radians(), -PI);
        assert_eq!(wrap(PI).unwrap().radians(), -PI);
        assert!(wrap(f64::NAN).is_err());
        assert!(wrap(f64::INFINITY).is_err());
    }

    #[test]
    fn summary_examples() {
        let s = circular_summary(&[a(0.0), a(0.0), a(0.0)]).unwrap();
        assert_eq!(s.circular_mean.unwrap().radians(), 0.0);
        assert_eq!(s.resultant_length, 1.0);
        assert_eq!(s.dispersion, 0.0);

        let s = circular_summary(&[a(0.0), a(PI)]).unwrap();
        assert!(s.circular_mean.is_none());
        assert!(s.mean().is_err());
        assert!(s.resultant_length < 1e-12);
        assert!((s.dispersion - 1.0).abs() < 1e-12);

        let s = circular_summary(&[a(FRAC_PI_4), a(-FRAC_PI_4)]).unwrap();
        assert!(s.circular_mean.unwrap().radians().abs() < 1e-15);
        assert!((s.resultant_length - FRAC_PI_4.cos()).abs() < 1e-12);
        assert!((s.dispersion - (1.0 - FRAC_PI_4.cos())).abs() < 1e-12);

        assert!(circular_summary(&[]).is_err());
    }

    #[test]
    fn difference_examples() {
        assert_eq!(angle_difference(a(PI / 2.0), a(PI / 2.0)).radians(), 0.0);
        let d = angle_difference(a(-3.0), a(3.0)).radians();
        assert!((d - (TAU - 6.0)).abs() < 1e-12);
        assert!((angle_difference(a(0.1), a(-0.1)).radians() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn unit_complex_renormalizes() {
        let z = UnitComplex::new(3.0, 4.0).unwrap();
        assert!((z.re() - 0.6).abs() < 1e-15 && (z.im() - 0.8).abs() < 1e-15);
        assert!(UnitComplex::new(0.0, 0.0).is_err());
        assert!(UnitComplex::new(f64::NAN, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn wrap_range_and_idempotence(x in -1e6f64..1e6) {
            let w = wrap(x).unwrap().radians();
            prop_assert!((-PI..PI).contains(&w));
            prop_assert_eq!(wrap(w).unwrap().radians(), w);
            let shifted = wrap(x + TAU).unwrap().radians();
            let d = wrap_f64(shifted - w).abs();
            prop_assert!(d < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn rotation_equivariance(
            raw in proptest::collection::vec(-0.8f64..0.8, 2..40),
            c in -PI..PI,
        ) {
            let angles: Vec<Angle> = raw.iter().map(|&x| a(x)).collect();
            let rotated: Vec<Angle> = raw.iter().map(|&x| a(x + c)).collect();
            let s0 = circular_summary(&angles).unwrap();
            let s1 = circular_summary(&rotated).unwrap();
            prop_assert!((s0.resultant_length - s1.resultant_length).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&s1.dispersion));
            if s0.resultant_length > 1e-6 {
                let expected = s0.circular_mean.unwrap() + a(c);
                let diff = (s1.circular_mean.unwrap() - expected).radians().abs();
                prop_assert!(diff < 1e-9);
            }
        }
    }
}
