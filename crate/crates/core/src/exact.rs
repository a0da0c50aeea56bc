//! Exact complex-rational scalars for the symbolic Weyl algebra.
//!
//! All identities in the `weyl` module are algebraic, so they are checked
//! over ℚ(i) rather than floats. Coefficients are arbitrary-precision
//! rationals with an adjoined imaginary unit.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// Element of ℚ(i): `re + im · i` with arbitrary-precision rational parts.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GaussRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRational { re, im }
    }

    pub fn zero() -> Self {
        GaussRational {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    pub fn one() -> Self {
        GaussRational {
            re: BigRational::one(),
            im: BigRational::zero(),
        }
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        GaussRational {
            re: BigRational::zero(),
            im: BigRational::one(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        GaussRational {
            re: BigRational::from_integer(BigInt::from(n)),
            im: BigRational::zero(),
        }
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        GaussRational {
            re: BigRational::new(BigInt::from(num), BigInt::from(den)),
            im: BigRational::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussRational {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// Multiply by the imaginary unit.
    pub fn mul_i(&self) -> Self {
        GaussRational {
            re: -self.im.clone(),
            im: self.re.clone(),
        }
    }

    /// Divide by the imaginary unit (same as multiplying by −i).
    pub fn div_i(&self) -> Self {
        GaussRational {
            re: self.im.clone(),
            im: -self.re.clone(),
        }
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "division by zero in GaussRational");
        let n = &self.re * &self.re + &self.im * &self.im;
        GaussRational {
            re: &self.re / &n,
            im: -(&self.im / &n),
        }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        fn approx(r: &BigRational) -> f64 {
            let num = r.numer();
            let den = r.denom();
            // good enough for display / cross-checks against the float side
            let fnum: f64 = num.to_string().parse().unwrap_or(f64::NAN);
            let fden: f64 = den.to_string().parse().unwrap_or(f64::NAN);
            fnum / fden
        }
        (approx(&self.re), approx(&self.im))
    }
}

impl fmt::Debug for GaussRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for GaussRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return write!(f, "{}", self.re);
        }
        if self.re.is_zero() {
            return write!(f, "{}*i", self.im);
        }
        if self.im.is_negative() {
            write!(f, "({}{}*i)", self.re, self.im)
        } else {
            write!(f, "({}+{}*i)", self.re, self.im)
        }
    }
}

impl Add for GaussRational {
    type Output = GaussRational;
    fn add(self, rhs: Self) -> Self {
        GaussRational {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl<'a> Add<&'a GaussRational> for GaussRational {
    type Output = GaussRational;
    fn add(self, rhs: &'a Self) -> Self {
        GaussRational {
            re: self.re + &rhs.re,
            im: self.im + &rhs.im,
        }
    }
}

impl AddAssign for GaussRational {
    fn add_assign(&mut self, rhs: Self) {
        self.re += rhs.re;
        self.im += rhs.im;
    }
}

impl Sub for GaussRational {
    type Output = GaussRational;
    fn sub(self, rhs: Self) -> Self {
        GaussRational {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl SubAssign for GaussRational {
    fn sub_assign(&mut self, rhs: Self) {
        self.re -= rhs.re;
        self.im -= rhs.im;
    }
}

impl Neg for GaussRational {
    type Output = GaussRational;
    fn neg(self) -> Self {
        GaussRational {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Mul for GaussRational {
    type Output = GaussRational;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl<'a, 'b> Mul<&'b GaussRational> for &'a GaussRational {
    type Output = GaussRational;
    fn mul(self, rhs: &'b GaussRational) -> GaussRational {
        GaussRational {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl MulAssign for GaussRational {
    fn mul_assign(&mut self, rhs: Self) {
        let v = &*self * &rhs;
        *self = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i_squared_is_minus_one() {
        let i = GaussRational::i();
        assert_eq!(i.clone() * i, -GaussRational::one());
    }

    #[test]
    fn recip_roundtrip() {
        let z = GaussRational::from_ratio(3, 7) + GaussRational::i().mul_i().mul_i(); // 3/7 - i
        let w = z.clone() * z.recip();
        assert_eq!(w, GaussRational::one());
    }

    #[test]
    fn mul_div_by_i() {
        let z = GaussRational::from_ratio(2, 5);
        assert_eq!(z.mul_i().div_i(), z);
    }
}
