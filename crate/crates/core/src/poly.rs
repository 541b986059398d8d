//! Dense univariate polynomials with exact rational coefficients, and the
//! coefficient field `ℚ + ℚπ` used once `π/4` enters the reduced form.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// Exact conversion of a finite double.
pub fn rat_from_f64(x: f64) -> Option<Rational> {
    BigRational::from_float(x)
}

pub fn rat_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // numerator or denominator beyond f64 range; scale down both
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Coefficients stored lowest power first; trailing zeros are trimmed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    coeffs: Vec<Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_coeffs(vec![c])
    }

    pub fn monomial(c: Rational, power: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); power + 1];
        coeffs[power] = c;
        Self::from_coeffs(coeffs)
    }

    pub fn from_coeffs(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// True when the polynomial is zero or its degree is at most `bound`;
    /// a negative bound admits only the zero polynomial.
    pub fn degree_within(&self, bound: i64) -> bool {
        match self.degree() {
            None => true,
            Some(d) => (d as i64) <= bound,
        }
    }

    pub fn add_term(&mut self, c: &Rational, power: usize) {
        if c.is_zero() {
            return;
        }
        if self.coeffs.len() <= power {
            self.coeffs.resize(power + 1, Rational::zero());
        }
        self.coeffs[power] += c;
        self.trim();
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Poly::constant(Rational::one());
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Shifts all powers up by `k` (multiplication by `x^k`).
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![Rational::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        Self { coeffs }
    }

    /// Exact division by `x^k`; `None` when a low coefficient is nonzero.
    pub fn unshift(&self, k: usize) -> Option<Self> {
        if self.coeffs.iter().take(k).any(|c| !c.is_zero()) {
            return None;
        }
        Some(Self::from_coeffs(self.coeffs.iter().skip(k).cloned().collect()))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(rat_to_f64).collect()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + rat_to_f64(c))
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::from_coeffs((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl AddAssign<&Poly> for Poly {
    fn add_assign(&mut self, rhs: &Poly) {
        *self = &*self + rhs;
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::from_coeffs(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::from_coeffs(out)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}*x")?,
                _ => write!(f, "{a}*x^{k}")?,
            }
        }
        Ok(())
    }
}

/// Serialized as the list of coefficients (lowest power first) in `p/q` form.
impl Serialize for Poly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.coeffs.iter().map(|c| c.to_string()))
    }
}

/// `rational + pi·π`, both exact.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PiRational {
    pub rational: Rational,
    pub pi: Rational,
}

impl PiRational {
    pub fn new(rational: Rational, pi: Rational) -> Self {
        Self { rational, pi }
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.pi.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        rat_to_f64(&self.rational) + rat_to_f64(&self.pi) * std::f64::consts::PI
    }
}

impl Serialize for PiRational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("PiRational", 2)?;
        st.serialize_field("rational", &self.rational.to_string())?;
        st.serialize_field("pi", &self.pi.to_string())?;
        st.end()
    }
}

/// Polynomial over `ℚ + ℚπ`, stored as the pair of its rational and `π` parts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PiPoly {
    pub rational: Poly,
    pub pi: Poly,
}

impl PiPoly {
    pub fn degree(&self) -> Option<usize> {
        self.rational.degree().max(self.pi.degree())
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.pi.is_zero()
    }

    pub fn coeff(&self, k: usize) -> PiRational {
        PiRational::new(self.rational.coeff(k), self.pi.coeff(k))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        let n = self.degree().map_or(0, |d| d + 1);
        (0..n).map(|k| self.coeff(k).to_f64()).collect()
    }
}

impl Serialize for PiPoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let n = self.degree().map_or(0, |d| d + 1);
        s.collect_seq((0..n).map(|k| self.coeff(k)))
    }
}

/// Horner evaluation of `f64` coefficients stored lowest power first.
pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_is_exact() {
        // (1/3 + x)² = 1/9 + 2/3 x + x²
        let p = Poly::from_coeffs(vec![rat(1, 3), rat_int(1)]);
        let sq = p.pow(2);
        assert_eq!(sq.coeffs(), &[rat(1, 9), rat(2, 3), rat_int(1)]);
        assert!((&sq - &sq).is_zero());
        assert_eq!(sq.degree(), Some(2));
        assert_eq!(Poly::zero().degree(), None);
    }

    #[test]
    fn degree_bounds_handle_negative_brackets() {
        assert!(Poly::zero().degree_within(-1));
        assert!(!Poly::constant(rat_int(2)).degree_within(-1));
        assert!(Poly::monomial(rat_int(1), 3).degree_within(3));
        assert!(!Poly::monomial(rat_int(1), 4).degree_within(3));
    }

    #[test]
    fn shift_and_unshift() {
        let p = Poly::from_coeffs(vec![rat_int(0), rat_int(2), rat_int(5)]);
        let q = p.unshift(1).unwrap();
        assert_eq!(q.coeffs(), &[rat_int(2), rat_int(5)]);
        assert_eq!(q.shift(1), p);
        assert!(p.unshift(2).is_none());
    }

    #[test]
    fn cancellation_trims_degree() {
        let mut p = Poly::monomial(rat(1, 7), 4);
        p.add_term(&rat(-1, 7), 4);
        assert!(p.is_zero());
    }

    #[test]
    fn from_f64_is_exact() {
        let x = 0.1_f64;
        let q = rat_from_f64(x).unwrap();
        assert_eq!(rat_to_f64(&q), x);
        assert!(rat_from_f64(f64::NAN).is_none());
    }

    #[test]
    fn pi_rational_evaluates() {
        let v = PiRational::new(rat(1, 2), rat(1, 4));
        assert!((v.to_f64() - (0.5 + std::f64::consts::FRAC_PI_4)).abs() < 1e-15);
    }
}
