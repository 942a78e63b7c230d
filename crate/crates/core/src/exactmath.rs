//! Exact scalars and containers: nonnegative big counts, normalized rationals,
//! sparse polynomials in p, and tables of such polynomials indexed by the
//! power of 1/d.
//!
//! Every published coefficient lives here as a [`Rational`]; conversion to
//! `f64` happens only at the evaluation boundary.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A nonnegative integer count of configurations, unbounded in size.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BigCount(BigUint);

impl BigCount {
    pub fn zero() -> Self {
        BigCount(BigUint::zero())
    }

    pub fn one() -> Self {
        BigCount(BigUint::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn as_biguint(&self) -> &BigUint {
        &self.0
    }

    /// Builds a count from little-endian 64-bit limbs.
    pub fn from_limbs(limbs: &[u64]) -> Self {
        let mut digits = Vec::with_capacity(limbs.len() * 2);
        for &l in limbs {
            digits.push(l as u32);
            digits.push((l >> 32) as u32);
        }
        BigCount(BigUint::new(digits))
    }

    /// Natural logarithm, `-inf` for zero.
    ///
    /// Uses the exact bit length plus the leading 64 bits of the value, so the
    /// result carries full `f64` relative accuracy at any magnitude.
    pub fn ln(&self) -> f64 {
        let bits = self.0.bits();
        if bits == 0 {
            return f64::NEG_INFINITY;
        }
        if bits <= 64 {
            return (self.0.to_u64().expect("fits in 64 bits") as f64).ln();
        }
        let shift = bits - 64;
        let top = (&self.0 >> shift).to_u64().expect("64 leading bits");
        (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
    }
}

impl From<u64> for BigCount {
    fn from(v: u64) -> Self {
        BigCount(BigUint::from(v))
    }
}

impl From<BigUint> for BigCount {
    fn from(v: BigUint) -> Self {
        BigCount(v)
    }
}

impl fmt::Display for BigCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for BigCount {
    type Err = num_bigint::ParseBigIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<BigUint>().map(BigCount)
    }
}

impl Serialize for BigCount {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for BigCount {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An exact rational number in lowest terms with positive denominator.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    /// Panics if `den` is zero.
    pub fn new(num: i64, den: i64) -> Self {
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_bigints(num: BigInt, den: BigInt) -> Self {
        Rational(BigRational::new(num, den))
    }

    pub fn integer(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// The exact value of a finite `f64` (every finite double is a dyadic rational).
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Rational)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn recip(&self) -> Self {
        Rational(self.0.recip())
    }

    pub fn pow(&self, exp: u32) -> Self {
        Rational(num_traits::pow(self.0.clone(), exp as usize))
    }

    /// Parses a plain decimal such as `"0.25"`, `"-3"` or `"1.5e-3"` exactly.
    pub fn from_decimal_str(s: &str) -> Option<Self> {
        let s = s.trim();
        let (mantissa, exp) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
            None => (s, 0),
        };
        let (negative, digits) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part
            .chars()
            .chain(frac_part.chars())
            .all(|c| c.is_ascii_digit())
        {
            return None;
        }
        let mut num: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
        if negative {
            num = -num;
        }
        let scale = exp - frac_part.len() as i32;
        let ten = BigInt::from(10);
        let value = if scale >= 0 {
            BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
        };
        Some(Rational(value))
    }

    /// Smallest integer not less than `self`.
    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// Nearest `f64` to the exact value.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Re-reduces to lowest terms. Values are always kept normalized, so this
    /// is the identity on any `Rational` produced by this module.
    pub fn normalized(&self) -> Self {
        Rational(BigRational::new(
            self.0.numer().clone(),
            self.0.denom().clone(),
        ))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Rational {
    type Err = String;

    /// Parses `"n"` or `"n/m"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let num: BigInt = n.parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let den: BigInt = d.parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        if den.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        Ok(Rational::from_bigints(num, den))
    }
}

#[derive(Serialize, Deserialize)]
struct RationalRepr {
    num: String,
    den: String,
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RationalRepr {
            num: self.0.numer().to_string(),
            den: self.0.denom().to_string(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = RationalRepr::deserialize(deserializer)?;
        format!("{}/{}", repr.num, repr.den)
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

impl Add for &Rational {
    type Output = Rational;
    fn add(self, rhs: &Rational) -> Rational {
        Rational(&self.0 + &rhs.0)
    }
}

impl Add for Rational {
    type Output = Rational;
    fn add(self, rhs: Rational) -> Rational {
        Rational(self.0 + rhs.0)
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl Sub for &Rational {
    type Output = Rational;
    fn sub(self, rhs: &Rational) -> Rational {
        Rational(&self.0 - &rhs.0)
    }
}

impl Sub for Rational {
    type Output = Rational;
    fn sub(self, rhs: Rational) -> Rational {
        Rational(self.0 - rhs.0)
    }
}

impl Mul for &Rational {
    type Output = Rational;
    fn mul(self, rhs: &Rational) -> Rational {
        Rational(&self.0 * &rhs.0)
    }
}

impl Mul for Rational {
    type Output = Rational;
    fn mul(self, rhs: Rational) -> Rational {
        Rational(self.0 * rhs.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

pub fn rat_add(a: &Rational, b: &Rational) -> Rational {
    a + b
}

/// A polynomial in p with exact rational coefficients, stored sparsely.
///
/// Zero coefficients are never stored, so two polynomials are equal exactly
/// when their maps are equal.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PPolynomial {
    coefficients: BTreeMap<u32, Rational>,
}

impl PPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(power: u32, coefficient: Rational) -> Self {
        Self::from_terms([(power, coefficient)])
    }

    /// Collects `(power, coefficient)` pairs, summing repeated powers.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (u32, Rational)>,
    {
        let mut poly = Self::zero();
        for (power, c) in terms {
            poly.add_term(power, &c);
        }
        poly
    }

    pub fn add_term(&mut self, power: u32, c: &Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self
            .coefficients
            .entry(power)
            .or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.coefficients.remove(&power);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.coefficients.keys().next_back().copied()
    }

    pub fn coefficient(&self, power: u32) -> Rational {
        self.coefficients
            .get(&power)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &Rational)> {
        self.coefficients.iter().map(|(&k, v)| (k, v))
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        Self::from_terms(self.terms().map(|(k, c)| (k, c * factor)))
    }

    /// Drops every term of degree above `max_degree`.
    pub fn truncate(&self, max_degree: u32) -> Self {
        Self::from_terms(
            self.terms()
                .filter(|&(k, _)| k <= max_degree)
                .map(|(k, c)| (k, c.clone())),
        )
    }

    /// Horner evaluation over the dense coefficient range.
    pub fn eval(&self, p: &Rational) -> Rational {
        let Some(deg) = self.degree() else {
            return Rational::zero();
        };
        let mut acc = Rational::zero();
        for power in (0..=deg).rev() {
            acc = &acc * p;
            if let Some(c) = self.coefficients.get(&power) {
                acc += c;
            }
        }
        acc
    }

    /// Evaluates at a floating-point argument, converting it exactly first.
    pub fn eval_f64(&self, p: f64) -> Option<f64> {
        Rational::from_f64(p).map(|p| self.eval(&p).to_f64())
    }
}

impl fmt::Display for PPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (power, c)) in self.terms().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match power {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})·p")?,
                _ => write!(f, "({c})·p^{power}")?,
            }
        }
        Ok(())
    }
}

pub fn poly_add(a: &PPolynomial, b: &PPolynomial) -> PPolynomial {
    let mut out = a.clone();
    for (k, c) in b.terms() {
        out.add_term(k, c);
    }
    out
}

pub fn poly_eval(poly: &PPolynomial, p: &Rational) -> Rational {
    poly.eval(p)
}

impl Add for &PPolynomial {
    type Output = PPolynomial;
    fn add(self, rhs: &PPolynomial) -> PPolynomial {
        poly_add(self, rhs)
    }
}

impl Neg for &PPolynomial {
    type Output = PPolynomial;
    fn neg(self) -> PPolynomial {
        PPolynomial::from_terms(self.terms().map(|(k, c)| (k, -c.clone())))
    }
}

impl Mul for &PPolynomial {
    type Output = PPolynomial;
    fn mul(self, rhs: &PPolynomial) -> PPolynomial {
        let mut out = PPolynomial::zero();
        for (i, a) in self.terms() {
            for (j, b) in rhs.terms() {
                out.add_term(i + j, &(a * b));
            }
        }
        out
    }
}

/// A finite series in 1/d whose coefficients are polynomials in p.
///
/// `terms[j]` multiplies `(1/d)^j`; term 0 holds the d-independent part.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DSeries {
    terms: BTreeMap<u32, PPolynomial>,
}

impl DSeries {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `c · p^p_power · (1/d)^d_power`.
    pub fn add_term(&mut self, d_power: u32, p_power: u32, c: &Rational) {
        let slot = self.terms.entry(d_power).or_default();
        slot.add_term(p_power, c);
        if slot.is_zero() {
            self.terms.remove(&d_power);
        }
    }

    pub fn add_poly(&mut self, d_power: u32, poly: &PPolynomial) {
        for (k, c) in poly.terms() {
            self.add_term(d_power, k, c);
        }
    }

    pub fn d_powers(&self) -> impl Iterator<Item = u32> + '_ {
        self.terms.keys().copied()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &PPolynomial)> {
        self.terms.iter().map(|(&j, p)| (j, p))
    }

    /// Substitutes a concrete d, leaving a polynomial in p.
    pub fn at_d(&self, d: u32) -> PPolynomial {
        let inv_d = Rational::new(1, d as i64);
        let mut out = PPolynomial::zero();
        for (j, poly) in self.terms() {
            out = &out + &poly.scale(&inv_d.pow(j));
        }
        out
    }
}

/// The polynomial in p multiplying `(1/d)^j`; empty when `j` is not in the support.
pub fn collect_d_coefficient(series: &DSeries, j: u32) -> PPolynomial {
    series.terms.get(&j).cloned().unwrap_or_default()
}
