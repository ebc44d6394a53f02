//! Thresholds of the form `coefficient * radicand^(1/3)`.
//!
//! Quantities like `m^(2/3) / n^(1/3)` are irrational in general, so they are
//! kept symbolically and compared against integer counts by cubing.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::geometry::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubeRootThreshold {
    pub coefficient: Rational,
    pub radicand: Rational,
}

impl CubeRootThreshold {
    pub fn new(coefficient: Rational, radicand: Rational) -> Self {
        assert!(!radicand.is_negative(), "radicand must be nonnegative");
        CubeRootThreshold {
            coefficient,
            radicand,
        }
    }

    /// `coefficient * (num / den)^(1/3)` for positive integer sizes.
    pub fn from_sizes(coefficient: Rational, num: u128, den: u128) -> Self {
        CubeRootThreshold::new(
            coefficient,
            Rational::new(BigInt::from(num), BigInt::from(den)),
        )
    }

    /// `true` iff `r >= value`, decided exactly.
    pub fn is_met_by(&self, r: u64) -> bool {
        if !self.coefficient.is_positive() || self.radicand.is_zero() {
            return true;
        }
        let r = Rational::from_integer(BigInt::from(r));
        let lhs = &r * &r * &r;
        let c = &self.coefficient;
        lhs >= c * c * c * &self.radicand
    }

    /// Smallest integer `r` with `r >= value`.
    pub fn min_integer(&self) -> u64 {
        let guess = self.to_f64().max(0.0).ceil() as u64;
        let mut r = guess.saturating_sub(2);
        while !self.is_met_by(r) {
            r += 1;
        }
        while r > 0 && self.is_met_by(r - 1) {
            r -= 1;
        }
        r
    }

    pub fn to_f64(&self) -> f64 {
        let c = self.coefficient.to_f64().unwrap_or(f64::NAN);
        let q = self.radicand.to_f64().unwrap_or(f64::NAN);
        c * q.cbrt()
    }
}

impl fmt::Display for CubeRootThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*cbrt({})", self.coefficient, self.radicand)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rat;

    #[test]
    fn exact_cube_boundaries() {
        // 1/4 * cbrt(64) = 1 exactly
        let t = CubeRootThreshold::new(rat(1, 4), rat(64, 1));
        assert!(t.is_met_by(1));
        assert!(!t.is_met_by(0));
        assert_eq!(t.min_integer(), 1);
        // cbrt(9) ~ 2.08
        let t = CubeRootThreshold::new(rat(1, 1), rat(9, 1));
        assert_eq!(t.min_integer(), 3);
        assert!(!t.is_met_by(2));
    }

    #[test]
    fn nonpositive_coefficient_is_always_met() {
        let t = CubeRootThreshold::new(rat(0, 1), rat(5, 1));
        assert_eq!(t.min_integer(), 0);
        let t = CubeRootThreshold::new(rat(-1, 1), rat(5, 1));
        assert!(t.is_met_by(0));
    }
}
