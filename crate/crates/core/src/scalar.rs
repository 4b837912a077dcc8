//! Configurable-precision scalars: exact rationals or correctly rounded big floats.
//!
//! Every coefficient in the solver is a [`Scalar`]. The backend is fixed per
//! problem: exact rationals when orders are integers and data are rational,
//! arbitrary-precision floats otherwise. Mixed arithmetic promotes the
//! rational operand to the float operand's precision.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;
const LOG2_10: f64 = 3.321928094887362;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constants cache"));
}

/// Run a closure with the thread-local astro-float constants cache.
pub fn with_consts<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// Decimal precision configuration for the floating backend.
///
/// All scalar operations round to `digits` decimal digits worth of mantissa;
/// special functions evaluate internally with `guard` extra digits and round
/// once on storage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrecisionConfig {
    digits: u32,
    guard: u32,
}

impl PrecisionConfig {
    pub fn new(digits: u32) -> Result<Self> {
        if digits < 30 {
            return Err(Error::InvalidProblem(format!(
                "precision must be at least 30 decimal digits, got {digits}"
            )));
        }
        Ok(PrecisionConfig { digits, guard: 12 })
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn guard(&self) -> u32 {
        self.guard
    }

    /// Mantissa bits for stored values (word-aligned, matching the float backend).
    pub fn bits(&self) -> usize {
        word_align((self.digits as f64 * LOG2_10).ceil() as usize + 8)
    }

    /// Mantissa bits for internal special-function evaluation.
    pub fn working_bits(&self) -> usize {
        word_align(((self.digits + self.guard) as f64 * LOG2_10).ceil() as usize + 8)
    }

    /// 10^(-digits) as a float at storage precision.
    pub fn eps(&self) -> BigFloat {
        pow10(-(self.digits as i64), self.bits())
    }
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        PrecisionConfig {
            digits: 50,
            guard: 12,
        }
    }
}

/// Coefficient arithmetic backend, fixed per problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Backend {
    Rational,
    Float(PrecisionConfig),
}

impl Backend {
    pub fn float_default() -> Backend {
        Backend::Float(PrecisionConfig::default())
    }

    pub fn precision(&self) -> Option<PrecisionConfig> {
        match self {
            Backend::Rational => None,
            Backend::Float(p) => Some(*p),
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, Backend::Rational)
    }

    /// Stabilization tolerance: exact on rationals, 10^(5-P) on floats.
    pub fn default_tau(&self) -> Scalar {
        match self {
            Backend::Rational => Scalar::zero_rational(),
            Backend::Float(p) => Scalar::Big(pow10(5 - p.digits() as i64, p.bits())),
        }
    }

    pub fn from_rational(&self, r: &BigRational) -> Scalar {
        match self {
            Backend::Rational => Scalar::Rat(r.clone()),
            Backend::Float(p) => Scalar::Big(rat_to_big(r, p.bits())),
        }
    }

    pub fn from_i64(&self, v: i64) -> Scalar {
        match self {
            Backend::Rational => Scalar::Rat(BigRational::from(BigInt::from(v))),
            Backend::Float(p) => Scalar::Big(BigFloat::from_i64(v, p.bits())),
        }
    }

    pub fn zero(&self) -> Scalar {
        self.from_i64(0)
    }

    pub fn one(&self) -> Scalar {
        self.from_i64(1)
    }
}

/// A configurable-precision real number.
#[derive(Clone, Debug)]
pub enum Scalar {
    Rat(BigRational),
    Big(BigFloat),
}

pub fn rat_i64(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Convert an exact rational to a float with `bits` of mantissa.
pub fn rat_to_big(r: &BigRational, bits: usize) -> BigFloat {
    let wide = bits + 64;
    let num = bigint_to_big(r.numer(), wide);
    let den = bigint_to_big(r.denom(), wide);
    num.div(&den, bits, RM)
}

fn bigint_to_big(i: &BigInt, bits: usize) -> BigFloat {
    if let Some(v) = i.to_i64() {
        return BigFloat::from_i64(v, bits);
    }
    with_consts(|cc| BigFloat::parse(&i.to_string(), Radix::Dec, bits, RM, cc))
}

/// 10^e at the given precision.
pub fn pow10(e: i64, bits: usize) -> BigFloat {
    let ten = BigFloat::from_i64(10, bits + 64);
    if e >= 0 {
        ten.powi(e as usize, bits, RM)
    } else {
        BigFloat::from_i64(1, bits).div(&ten.powi((-e) as usize, bits + 64, RM), bits, RM)
    }
}

fn word_align(bits: usize) -> usize {
    bits.div_ceil(64) * 64
}

fn prec_of(v: &BigFloat) -> usize {
    v.mantissa_max_bit_len().unwrap_or(64)
}

impl Scalar {
    pub fn zero_rational() -> Scalar {
        Scalar::Rat(BigRational::zero())
    }

    pub fn from_rat(num: i64, den: i64) -> Scalar {
        Scalar::Rat(rat_i64(num, den))
    }

    pub fn big_from_i64(v: i64, bits: usize) -> Scalar {
        Scalar::Big(BigFloat::from_i64(v, bits))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rat(r) => r.is_zero(),
            Scalar::Big(b) => b.is_zero(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Scalar::Rat(r) => r.is_negative(),
            Scalar::Big(b) => b.is_negative(),
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, Scalar::Rat(_))
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Rat(r) => Some(r),
            Scalar::Big(_) => None,
        }
    }

    /// Mantissa precision of the float flavor; `None` for rationals.
    pub fn bits(&self) -> Option<usize> {
        match self {
            Scalar::Rat(_) => None,
            Scalar::Big(b) => Some(prec_of(b)),
        }
    }

    fn as_big(&self, bits: usize) -> BigFloat {
        match self {
            Scalar::Rat(r) => rat_to_big(r, bits),
            Scalar::Big(b) => b.clone(),
        }
    }

    /// Promote to the float flavor at `bits` precision.
    pub fn to_big(&self, bits: usize) -> BigFloat {
        self.as_big(bits)
    }

    fn join(a: &Scalar, b: &Scalar) -> Option<usize> {
        match (a, b) {
            (Scalar::Rat(_), Scalar::Rat(_)) => None,
            (x, y) => Some(x.bits().unwrap_or(0).max(y.bits().unwrap_or(0))),
        }
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        match Scalar::join(self, other) {
            None => Scalar::Rat(self.as_rational().unwrap() + other.as_rational().unwrap()),
            Some(p) => Scalar::Big(self.as_big(p).add(&other.as_big(p), p, RM)),
        }
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        match Scalar::join(self, other) {
            None => Scalar::Rat(self.as_rational().unwrap() - other.as_rational().unwrap()),
            Some(p) => Scalar::Big(self.as_big(p).sub(&other.as_big(p), p, RM)),
        }
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        match Scalar::join(self, other) {
            None => Scalar::Rat(self.as_rational().unwrap() * other.as_rational().unwrap()),
            Some(p) => Scalar::Big(self.as_big(p).mul(&other.as_big(p), p, RM)),
        }
    }

    pub fn div(&self, other: &Scalar) -> Result<Scalar> {
        if other.is_zero() {
            return Err(Error::Numeric("division by zero".into()));
        }
        Ok(match Scalar::join(self, other) {
            None => Scalar::Rat(self.as_rational().unwrap() / other.as_rational().unwrap()),
            Some(p) => Scalar::Big(self.as_big(p).div(&other.as_big(p), p, RM)),
        })
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Rat(r) => Scalar::Rat(-r),
            Scalar::Big(b) => Scalar::Big(b.neg()),
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Rat(r) => Scalar::Rat(r.abs()),
            Scalar::Big(b) => Scalar::Big(b.abs()),
        }
    }

    pub fn powi(&self, n: u32) -> Scalar {
        match self {
            Scalar::Rat(r) => {
                let mut acc = BigRational::one();
                for _ in 0..n {
                    acc *= r;
                }
                Scalar::Rat(acc)
            }
            Scalar::Big(b) => {
                let p = prec_of(b);
                if n == 0 {
                    Scalar::Big(BigFloat::from_i64(1, p))
                } else {
                    Scalar::Big(b.powi(n as usize, p, RM))
                }
            }
        }
    }

    pub fn cmp_val(&self, other: &Scalar) -> Option<Ordering> {
        match Scalar::join(self, other) {
            None => self
                .as_rational()
                .unwrap()
                .partial_cmp(other.as_rational().unwrap()),
            Some(p) => {
                let a = self.as_big(p);
                let b = other.as_big(p);
                a.cmp(&b).map(|s| s.cmp(&0))
            }
        }
    }

    pub fn lt(&self, other: &Scalar) -> bool {
        self.cmp_val(other) == Some(Ordering::Less)
    }

    pub fn le(&self, other: &Scalar) -> bool {
        matches!(
            self.cmp_val(other),
            Some(Ordering::Less) | Some(Ordering::Equal)
        )
    }

    pub fn max_abs(&self, other: &Scalar) -> Scalar {
        if self.abs().lt(&other.abs()) {
            other.clone()
        } else {
            self.clone()
        }
    }

    /// Lossy f64 view for fits and diagnostics.
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Rat(r) => r.to_f64().unwrap_or(f64::NAN),
            Scalar::Big(b) => format!("{b}").parse::<f64>().unwrap_or(f64::NAN),
        }
    }

    fn unary_big(
        &self,
        bits: usize,
        what: &str,
        f: impl FnOnce(&BigFloat, usize, &mut Consts) -> BigFloat,
    ) -> Result<Scalar> {
        let v = self.as_big(bits);
        let out = with_consts(|cc| f(&v, bits, cc));
        if out.is_nan() || out.is_inf() {
            return Err(Error::Numeric(format!("{what}({self}) is not finite")));
        }
        Ok(Scalar::Big(out))
    }

    pub fn exp(&self, bits: usize) -> Result<Scalar> {
        self.unary_big(bits, "exp", |v, p, cc| v.exp(p, RM, cc))
    }

    pub fn ln(&self, bits: usize) -> Result<Scalar> {
        if !self.is_positive() {
            return Err(Error::Domain(format!("ln of non-positive value {self}")));
        }
        self.unary_big(bits, "ln", |v, p, cc| v.ln(p, RM, cc))
    }

    pub fn sin(&self, bits: usize) -> Result<Scalar> {
        self.unary_big(bits, "sin", |v, p, cc| v.sin(p, RM, cc))
    }

    pub fn cos(&self, bits: usize) -> Result<Scalar> {
        self.unary_big(bits, "cos", |v, p, cc| v.cos(p, RM, cc))
    }

    pub fn tan(&self, bits: usize) -> Result<Scalar> {
        self.unary_big(bits, "tan", |v, p, cc| v.tan(p, RM, cc))
    }

    pub fn tanh(&self, bits: usize) -> Result<Scalar> {
        self.unary_big(bits, "tanh", |v, p, cc| v.tanh(p, RM, cc))
    }

    pub fn sqrt(&self, bits: usize) -> Result<Scalar> {
        if self.is_negative() {
            return Err(Error::Domain(format!("sqrt of negative value {self}")));
        }
        let v = self.as_big(bits);
        let out = v.sqrt(bits, RM);
        if out.is_nan() {
            return Err(Error::Numeric("sqrt produced NaN".into()));
        }
        Ok(Scalar::Big(out))
    }

    /// self^e for a real exponent; requires self > 0.
    pub fn pow(&self, e: &Scalar, bits: usize) -> Result<Scalar> {
        if !self.is_positive() {
            return Err(Error::Domain(format!(
                "power base must be positive, got {self}"
            )));
        }
        let b = self.as_big(bits);
        let ev = e.as_big(bits);
        let out = with_consts(|cc| b.pow(&ev, bits, RM, cc));
        if out.is_nan() || out.is_inf() {
            return Err(Error::Numeric("pow overflow".into()));
        }
        Ok(Scalar::Big(out))
    }

    pub fn is_positive(&self) -> bool {
        !self.is_zero() && !self.is_negative()
    }

    /// Round the float flavor to `bits`; rationals pass through.
    pub fn round_to(&self, bits: usize) -> Scalar {
        match self {
            Scalar::Rat(_) => self.clone(),
            Scalar::Big(b) => {
                let mut out = b.clone();
                if out.set_precision(bits, RM).is_err() {
                    return Scalar::Big(b.clone());
                }
                Scalar::Big(out)
            }
        }
    }

    /// Parse "n/d", integer, or decimal text into a backend scalar.
    pub fn parse(text: &str, backend: &Backend) -> Result<Scalar> {
        let r = parse_rational_text(text);
        match (r, backend) {
            (Some(q), b) => Ok(b.from_rational(&q)),
            (None, Backend::Float(p)) => {
                let v = with_consts(|cc| BigFloat::parse(text, Radix::Dec, p.bits(), RM, cc));
                if v.is_nan() {
                    Err(Error::Parse(format!("invalid number `{text}`")))
                } else {
                    Ok(Scalar::Big(v))
                }
            }
            (None, Backend::Rational) => Err(Error::Parse(format!(
                "`{text}` is not an exact rational literal"
            ))),
        }
    }
}

/// Exact rational from integer, fraction, or finite-decimal text.
pub fn parse_rational_text(text: &str) -> Option<BigRational> {
    let t = text.trim();
    if let Some((n, d)) = t.split_once('/') {
        let num: BigInt = n.trim().parse().ok()?;
        let den: BigInt = d.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    if let Ok(i) = t.parse::<BigInt>() {
        return Some(BigRational::from(i));
    }
    // decimal with optional exponent: 1.25e-3
    let (mant, exp) = match t.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().ok()?),
        None => (t, 0),
    };
    let (int_part, frac_part) = match mant.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mant, ""),
    };
    if frac_part.is_empty() && int_part.is_empty() {
        return None;
    }
    let joined = format!(
        "{}{}",
        if int_part.is_empty() { "0" } else { int_part },
        frac_part
    );
    let num: BigInt = joined.parse().ok()?;
    let shift = frac_part.len() as i64 - exp;
    let ten = BigInt::from(10);
    let mut r = BigRational::from(num);
    if shift > 0 {
        r /= BigRational::from(ten.pow(shift as u32));
    } else if shift < 0 {
        r *= BigRational::from(ten.pow((-shift) as u32));
    }
    Some(r)
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_val(other) == Some(Ordering::Equal)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rat(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Big(b) => write!(f, "{b}"),
        }
    }
}

/// Recover a small exact rational from a scalar, verifying exactness.
///
/// Used where a series constant term must sit on the exponent lattice
/// (variable exponents, orders). Returns `None` when the value is not
/// exactly representable with denominator at most `max_den`.
pub fn rationalize(s: &Scalar, max_den: i64) -> Option<(i64, i64)> {
    match s {
        Scalar::Rat(r) => {
            let num = r.numer().to_i64()?;
            let den = r.denom().to_i64()?;
            if den <= max_den {
                Some((num, den))
            } else {
                None
            }
        }
        Scalar::Big(b) => {
            let bits = prec_of(b);
            // convergents p/q of the continued fraction; accept the first exact match
            let (mut p1, mut q1, mut p0, mut q0) = (1i64, 0i64, 0i64, 1i64);
            let mut cur = b.clone();
            for _ in 0..64 {
                let fl = cur.floor();
                let af = format!("{fl}").parse::<f64>().ok()?;
                if af.abs() > 1e15 {
                    break;
                }
                let a = af as i64;
                let p2 = a.checked_mul(p1)?.checked_add(p0)?;
                let q2 = a.checked_mul(q1)?.checked_add(q0)?;
                if q2 > max_den {
                    break;
                }
                p0 = p1;
                q0 = q1;
                p1 = p2;
                q1 = q2;
                if q1 > 0 {
                    let candidate = rat_to_big(&rat_i64(p1, q1), bits);
                    if candidate.cmp(b) == Some(0) {
                        return Some((p1, q1));
                    }
                }
                let frac = cur.sub(&fl, bits, RM);
                if frac.is_zero() {
                    break;
                }
                cur = BigFloat::from_i64(1, bits).div(&frac, bits, RM);
            }
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_arithmetic_is_exact() {
        let b = Backend::Rational;
        let third = Scalar::from_rat(1, 3);
        let sum = third.add(&third).add(&third);
        assert_eq!(sum, b.one());
    }

    #[test]
    fn float_promotion_keeps_precision() {
        let p = PrecisionConfig::default();
        let half = Scalar::from_rat(1, 2);
        let one = Scalar::big_from_i64(1, p.bits());
        let v = one.add(&half);
        assert_eq!(v.bits(), Some(p.bits()));
        assert_eq!(v.to_f64(), 1.5);
    }

    #[test]
    fn parse_decimal_as_exact_rational() {
        let r = parse_rational_text("1.25e-2").unwrap();
        assert_eq!(r, rat_i64(1, 80));
        let r = parse_rational_text("-0.5").unwrap();
        assert_eq!(r, rat_i64(-1, 2));
        assert_eq!(parse_rational_text("8/3").unwrap(), rat_i64(8, 3));
    }

    #[test]
    fn rationalize_recovers_exact_floats() {
        let p = PrecisionConfig::default();
        let v = Scalar::Big(rat_to_big(&rat_i64(7, 4), p.bits()));
        assert_eq!(rationalize(&v, 128), Some((7, 4)));
        let pi_ish = Scalar::Big(with_consts(|cc| cc.pi(p.bits(), RoundingMode::ToEven)));
        assert_eq!(rationalize(&pi_ish, 4096), None);
    }

    #[test]
    fn pow10_matches_rational_conversion() {
        let p = PrecisionConfig::default();
        let a = pow10(-5, p.bits());
        let b = rat_to_big(&rat_i64(1, 100_000), p.bits());
        assert_eq!(a.cmp(&b), Some(0));
    }

    #[test]
    fn tau_default_scales_with_precision() {
        let tau = Backend::float_default().default_tau();
        let t = tau.to_f64();
        assert!(t > 0.9e-45 && t < 1.1e-45);
    }
}
