//! Exact rational arithmetic.
//!
//! `Rat` is an arbitrary-precision rational kept in lowest terms with a
//! positive denominator. Values that fit in a machine word pair are stored
//! inline; everything else falls back to [`num_rational::BigRational`]. The
//! solver path never rounds, so equality and comparison are always exact.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

#[derive(Clone, Debug)]
enum Repr {
    // num and den coprime, den > 0
    Small { num: i64, den: i64 },
    // only used when the value does not fit `Small`
    Big(Box<BigRational>),
}

/// Exact rational number, always in lowest terms with positive denominator.
#[derive(Clone, Debug)]
pub struct Rat(Repr);

fn gcd_i128(a: i128, b: i128) -> i128 {
    a.abs().gcd(&b.abs())
}

fn small_from_i128(mut num: i128, mut den: i128) -> Rat {
    debug_assert!(den != 0, "zero denominator");
    if den < 0 {
        num = -num;
        den = -den;
    }
    if num == 0 {
        return Rat(Repr::Small { num: 0, den: 1 });
    }
    let g = gcd_i128(num, den);
    num /= g;
    den /= g;
    if num >= i64::MIN as i128 && num <= i64::MAX as i128 && den <= i64::MAX as i128 {
        Rat(Repr::Small {
            num: num as i64,
            den: den as i64,
        })
    } else {
        Rat(Repr::Big(Box::new(BigRational::new(
            BigInt::from(num),
            BigInt::from(den),
        ))))
    }
}

fn demote(b: BigRational) -> Rat {
    if let (Some(num), Some(den)) = (b.numer().to_i64(), b.denom().to_i64()) {
        Rat(Repr::Small { num, den })
    } else {
        Rat(Repr::Big(Box::new(b)))
    }
}

impl Rat {
    pub fn zero() -> Self {
        Rat(Repr::Small { num: 0, den: 1 })
    }

    pub fn one() -> Self {
        Rat(Repr::Small { num: 1, den: 1 })
    }

    pub fn from_int(n: i64) -> Self {
        Rat(Repr::Small { num: n, den: 1 })
    }

    /// `num/den`, reduced. Panics on zero denominator.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        small_from_i128(num as i128, den as i128)
    }

    pub fn from_big(b: BigRational) -> Self {
        demote(b)
    }

    fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small { num, den } => BigRational::new(BigInt::from(*num), BigInt::from(*den)),
            Repr::Big(b) => (**b).clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.0 {
            Repr::Small { num, .. } => *num == 0,
            Repr::Big(_) => false, // zero always fits Small
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small { num, .. } => *num < 0,
            Repr::Big(b) => b.numer().sign() == Sign::Minus,
        }
    }

    pub fn is_positive(&self) -> bool {
        !self.is_zero() && !self.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small { den, .. } => *den == 1,
            Repr::Big(b) => b.is_integer(),
        }
    }

    pub fn abs(&self) -> Rat {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn min(self, other: Rat) -> Rat {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Rat) -> Rat {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn recip(&self) -> Rat {
        assert!(!self.is_zero(), "reciprocal of zero");
        match &self.0 {
            Repr::Small { num, den } => small_from_i128(*den as i128, *num as i128),
            Repr::Big(b) => demote(b.recip()),
        }
    }

    /// Integer power, negative exponents allowed (value must be nonzero then).
    pub fn pow(&self, exp: i64) -> Rat {
        if exp == 0 {
            return Rat::one();
        }
        let base = if exp < 0 { self.recip() } else { self.clone() };
        let mut result = Rat::one();
        let mut cur = base;
        let mut e = exp.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &cur;
            }
            e >>= 1;
            if e > 0 {
                cur = &cur * &cur;
            }
        }
        result
    }

    /// Largest integer not exceeding the value.
    pub fn floor_int(&self) -> BigInt {
        match &self.0 {
            Repr::Small { num, den } => BigInt::from((*num as i128).div_euclid(*den as i128)),
            Repr::Big(b) => b.floor().to_integer(),
        }
    }

    /// Approximation for reports only; the solver never consumes this.
    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small { num, den } => *num as f64 / *den as f64,
            Repr::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn numer_big(&self) -> BigInt {
        match &self.0 {
            Repr::Small { num, .. } => BigInt::from(*num),
            Repr::Big(b) => b.numer().clone(),
        }
    }

    pub fn denom_big(&self) -> BigInt {
        match &self.0 {
            Repr::Small { den, .. } => BigInt::from(*den),
            Repr::Big(b) => b.denom().clone(),
        }
    }
}

impl Default for Rat {
    fn default() -> Self {
        Rat::zero()
    }
}

impl PartialEq for Rat {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Rat {}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small { num: n1, den: d1 }, Repr::Small { num: n2, den: d2 }) => {
                let lhs = *n1 as i128 * *d2 as i128;
                let rhs = *n2 as i128 * *d1 as i128;
                lhs.cmp(&rhs)
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl std::hash::Hash for Rat {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        // reprs are canonical: a Big never fits Small
        match &self.0 {
            Repr::Small { num, den } => {
                BigInt::from(*num).hash(state);
                BigInt::from(*den).hash(state);
            }
            Repr::Big(b) => {
                b.numer().hash(state);
                b.denom().hash(state);
            }
        }
    }
}

impl Add for &Rat {
    type Output = Rat;
    fn add(self, rhs: &Rat) -> Rat {
        match (&self.0, &rhs.0) {
            (Repr::Small { num: n1, den: d1 }, Repr::Small { num: n2, den: d2 }) => {
                let (n1, d1, n2, d2) = (*n1 as i128, *d1 as i128, *n2 as i128, *d2 as i128);
                small_from_i128(n1 * d2 + n2 * d1, d1 * d2)
            }
            _ => demote(self.to_big() + rhs.to_big()),
        }
    }
}

impl Sub for &Rat {
    type Output = Rat;
    fn sub(self, rhs: &Rat) -> Rat {
        match (&self.0, &rhs.0) {
            (Repr::Small { num: n1, den: d1 }, Repr::Small { num: n2, den: d2 }) => {
                let (n1, d1, n2, d2) = (*n1 as i128, *d1 as i128, *n2 as i128, *d2 as i128);
                small_from_i128(n1 * d2 - n2 * d1, d1 * d2)
            }
            _ => demote(self.to_big() - rhs.to_big()),
        }
    }
}

impl Mul for &Rat {
    type Output = Rat;
    fn mul(self, rhs: &Rat) -> Rat {
        match (&self.0, &rhs.0) {
            (Repr::Small { num: n1, den: d1 }, Repr::Small { num: n2, den: d2 }) => {
                let (n1, d1, n2, d2) = (*n1 as i128, *d1 as i128, *n2 as i128, *d2 as i128);
                // cross-reduce first to keep products small
                let g1 = gcd_i128(n1, d2).max(1);
                let g2 = gcd_i128(n2, d1).max(1);
                small_from_i128((n1 / g1) * (n2 / g2), (d1 / g2) * (d2 / g1))
            }
            _ => demote(self.to_big() * rhs.to_big()),
        }
    }
}

impl Div for &Rat {
    type Output = Rat;
    fn div(self, rhs: &Rat) -> Rat {
        assert!(!rhs.is_zero(), "division by zero");
        match (&self.0, &rhs.0) {
            (Repr::Small { num: n1, den: d1 }, Repr::Small { num: n2, den: d2 }) => {
                let (n1, d1, n2, d2) = (*n1 as i128, *d1 as i128, *n2 as i128, *d2 as i128);
                let g1 = gcd_i128(n1, n2).max(1);
                let g2 = gcd_i128(d1, d2).max(1);
                small_from_i128((n1 / g1) * (d2 / g2), (d1 / g2) * (n2 / g1))
            }
            _ => demote(self.to_big() / rhs.to_big()),
        }
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        match self.0 {
            Repr::Small { num, den } => small_from_i128(-(num as i128), den as i128),
            Repr::Big(b) => demote(-*b),
        }
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        -self.clone()
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                (&self).$method(rhs)
            }
        }
        impl $trait<Rat> for &Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, rhs: &Rat) {
        *self = &*self + rhs;
    }
}

impl AddAssign for Rat {
    fn add_assign(&mut self, rhs: Rat) {
        *self = &*self + &rhs;
    }
}

impl SubAssign<&Rat> for Rat {
    fn sub_assign(&mut self, rhs: &Rat) {
        *self = &*self - rhs;
    }
}

impl MulAssign<&Rat> for Rat {
    fn mul_assign(&mut self, rhs: &Rat) {
        *self = &*self * rhs;
    }
}

impl Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| &acc + &x)
    }
}

impl<'a> Sum<&'a Rat> for Rat {
    fn sum<I: Iterator<Item = &'a Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| &acc + x)
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Self {
        Rat::from_int(n)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small { num, den } => {
                if *den == 1 {
                    write!(f, "{num}")
                } else {
                    write!(f, "{num}/{den}")
                }
            }
            Repr::Big(b) => {
                if b.is_integer() {
                    write!(f, "{}", b.numer())
                } else {
                    write!(f, "{}/{}", b.numer(), b.denom())
                }
            }
        }
    }
}

/// Failed to parse a rational literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseRatError(String);

impl fmt::Display for ParseRatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid rational literal `{}`", self.0)
    }
}

impl std::error::Error for ParseRatError {}

impl FromStr for Rat {
    type Err = ParseRatError;

    /// Accepts `p/q`, plain integers and exact decimal strings like `-3.25`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let err = || ParseRatError(s.to_string());
        if let Some((p, q)) = s.split_once('/') {
            let num = BigInt::from_str(p.trim()).map_err(|_| err())?;
            let den = BigInt::from_str(q.trim()).map_err(|_| err())?;
            if den.is_zero() {
                return Err(err());
            }
            return Ok(demote(BigRational::new(num, den)));
        }
        if let Some((int_part, frac_part)) = s.split_once('.') {
            if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err());
            }
            let negative = int_part.trim_start().starts_with('-');
            let int = if int_part.is_empty() || int_part == "-" || int_part == "+" {
                BigInt::zero()
            } else {
                BigInt::from_str(int_part).map_err(|_| err())?
            };
            let frac = BigInt::from_str(frac_part).map_err(|_| err())?;
            let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
            let frac_signed = if negative { -frac } else { frac };
            return Ok(demote(BigRational::new(int * &scale + frac_signed, scale)));
        }
        let num = BigInt::from_str(s).map_err(|_| err())?;
        Ok(demote(BigRational::from_integer(num)))
    }
}

impl serde::Serialize for Rat {
    fn serialize<S>(&self, serializer: S) -> Result<S::Ok, S::Error>
    where
        S: serde::Serializer,
    {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Rat {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RatVisitor;
        impl<'de> serde::de::Visitor<'de> for RatVisitor {
            type Value = Rat;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer or a rational string like \"3/10\" or \"0.3\"")
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Rat, E> {
                Ok(Rat::from_int(v))
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Rat, E> {
                i64::try_from(v)
                    .map(Rat::from_int)
                    .map_err(|_| E::custom("integer out of range"))
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Rat, E> {
                v.parse().map_err(E::custom)
            }
        }
        deserializer.deserialize_any(RatVisitor)
    }
}

/// Shorthand used throughout the tests: `rat!(3, 10)` or `rat!(5)`.
#[macro_export]
macro_rules! rat {
    ($n:expr) => {
        $crate::rat::Rat::from_int($n)
    };
    ($n:expr, $d:expr) => {
        $crate::rat::Rat::new($n, $d)
    };
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reduction_and_sign() {
        assert_eq!(Rat::new(2, 4), Rat::new(1, 2));
        assert_eq!(Rat::new(1, -2), Rat::new(-1, 2));
        assert_eq!(Rat::new(-3, -6), Rat::new(1, 2));
        assert_eq!(Rat::new(0, -7), Rat::zero());
    }

    #[test]
    fn parse_forms() {
        assert_eq!("3/10".parse::<Rat>().unwrap(), Rat::new(3, 10));
        assert_eq!("-7".parse::<Rat>().unwrap(), Rat::from_int(-7));
        assert_eq!("0.25".parse::<Rat>().unwrap(), Rat::new(1, 4));
        assert_eq!("-3.5".parse::<Rat>().unwrap(), Rat::new(-7, 2));
        assert_eq!("81765/100000".parse::<Rat>().unwrap(), Rat::new(16353, 20000));
        assert!("1/0".parse::<Rat>().is_err());
        assert!("abc".parse::<Rat>().is_err());
    }

    #[test]
    fn display_roundtrip() {
        for r in [Rat::new(3, 10), Rat::from_int(-4), Rat::new(-7, 3)] {
            assert_eq!(r.to_string().parse::<Rat>().unwrap(), r);
        }
    }

    #[test]
    fn pow_and_floor() {
        assert_eq!(Rat::new(5, 4).pow(3), Rat::new(125, 64));
        assert_eq!(Rat::new(5, 4).pow(-2), Rat::new(16, 25));
        assert_eq!(Rat::new(7, 2).floor_int(), BigInt::from(3));
        assert_eq!(Rat::new(-7, 2).floor_int(), BigInt::from(-4));
    }

    #[test]
    fn big_promotion_roundtrip() {
        let big = Rat::new(i64::MAX, 1) * Rat::new(i64::MAX, 7);
        let back = &big / &Rat::new(i64::MAX, 7);
        assert_eq!(back, Rat::new(i64::MAX, 1));
        assert!(big > Rat::from_int(0));
    }

    fn arb_rat() -> impl Strategy<Value = (i64, i64)> {
        (any::<i32>(), 1i32..=1_000_000).prop_map(|(n, d)| (n as i64, d as i64))
    }

    proptest! {
        // hybrid fast path must agree with the BigRational reference on all ops
        #[test]
        fn matches_bigrational_reference(a in arb_rat(), b in arb_rat()) {
            let (ra, rb) = (Rat::new(a.0, a.1), Rat::new(b.0, b.1));
            let (ba, bb) = (ra.to_big(), rb.to_big());
            prop_assert_eq!((&ra + &rb).to_big(), &ba + &bb);
            prop_assert_eq!((&ra - &rb).to_big(), &ba - &bb);
            prop_assert_eq!((&ra * &rb).to_big(), &ba * &bb);
            if !rb.is_zero() {
                prop_assert_eq!((&ra / &rb).to_big(), &ba / &bb);
            }
            prop_assert_eq!(ra.cmp(&rb), ba.cmp(&bb));
        }
    }
}
