//! The shared number type.
//!
//! Every value the engine touches is a [`Scalar`]: either an exact rational
//! (the default, and the only mode in which identity checks are meaningful)
//! or a high-precision binary float. Float mode exists for non-integer
//! exponents p, where |x|^p leaves the rationals.

mod float;

pub use float::{BigFloat, DEFAULT_PRECISION};

use crate::error::{Error, Result};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

/// Evaluation mode: exact rational arithmetic or binary floats of a fixed
/// mantissa width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarMode {
    Exact,
    Float { precision: u32 },
}

impl ScalarMode {
    pub fn float_default() -> Self {
        ScalarMode::Float {
            precision: DEFAULT_PRECISION,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ScalarMode::Exact)
    }
}

impl fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarMode::Exact => write!(f, "exact"),
            ScalarMode::Float { precision } => write!(f, "float{precision}"),
        }
    }
}

/// Mode-tagged number. Clones are cheap (shared storage), values are
/// immutable.
#[derive(Debug, Clone)]
pub enum Scalar {
    Exact(Arc<BigRational>),
    Float(Arc<BigFloat>),
}

impl Scalar {
    pub fn from_rational(r: BigRational) -> Self {
        Scalar::Exact(Arc::new(r))
    }

    pub fn from_integer(v: i64) -> Self {
        Scalar::from_rational(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Scalar::from_rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn zero(mode: ScalarMode) -> Self {
        match mode {
            ScalarMode::Exact => Scalar::from_integer(0),
            ScalarMode::Float { precision } => Scalar::Float(Arc::new(BigFloat::zero(precision))),
        }
    }

    pub fn one(mode: ScalarMode) -> Self {
        Scalar::from_integer(1).to_mode(mode)
    }

    pub fn from_biguint(v: &BigUint, mode: ScalarMode) -> Self {
        match mode {
            ScalarMode::Exact => {
                Scalar::from_rational(BigRational::from_integer(BigInt::from(v.clone())))
            }
            ScalarMode::Float { precision } => {
                Scalar::Float(Arc::new(BigFloat::from_biguint(v, precision)))
            }
        }
    }

    pub fn mode(&self) -> ScalarMode {
        match self {
            Scalar::Exact(_) => ScalarMode::Exact,
            Scalar::Float(f) => ScalarMode::Float {
                precision: f.precision(),
            },
        }
    }

    /// Convert into the requested mode. Exact -> float rounds once; float ->
    /// exact takes the float's exact rational value.
    pub fn to_mode(&self, mode: ScalarMode) -> Self {
        match (self, mode) {
            (Scalar::Exact(_), ScalarMode::Exact) => self.clone(),
            (Scalar::Float(f), ScalarMode::Float { precision }) if f.precision() == precision => {
                self.clone()
            }
            (Scalar::Exact(r), ScalarMode::Float { precision }) => {
                Scalar::Float(Arc::new(BigFloat::from_rational(r, precision)))
            }
            (Scalar::Float(f), ScalarMode::Float { precision }) => Scalar::Float(Arc::new(
                BigFloat::from_rational(&f.to_rational(), precision),
            )),
            (Scalar::Float(f), ScalarMode::Exact) => Scalar::from_rational(f.to_rational()),
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    /// Exact rational view of the value in either mode.
    pub fn to_rational(&self) -> BigRational {
        match self {
            Scalar::Exact(r) => (**r).clone(),
            Scalar::Float(f) => f.to_rational(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Float(f) => f.is_zero(),
        }
    }

    pub fn signum(&self) -> i8 {
        match self {
            Scalar::Exact(r) => {
                if r.is_zero() {
                    0
                } else if r.is_negative() {
                    -1
                } else {
                    1
                }
            }
            Scalar::Float(f) => f.signum(),
        }
    }

    pub fn neg(&self) -> Self {
        match self {
            Scalar::Exact(r) => Scalar::from_rational(-(**r).clone()),
            Scalar::Float(f) => Scalar::Float(Arc::new(f.neg())),
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() >= 0 {
            self.clone()
        } else {
            self.neg()
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.binop(other, |a, b| a + b, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.binop(other, |a, b| a - b, |a, b| a.sub(b))
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.binop(other, |a, b| a * b, |a, b| a.mul(b))
    }

    pub fn div(&self, other: &Self) -> Self {
        self.binop(other, |a, b| a / b, |a, b| a.div(b))
    }

    fn binop(
        &self,
        other: &Self,
        exact: impl Fn(&BigRational, &BigRational) -> BigRational,
        float: impl Fn(&BigFloat, &BigFloat) -> BigFloat,
    ) -> Self {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::from_rational(exact(a, b)),
            (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(Arc::new(float(a, b))),
            (Scalar::Exact(a), Scalar::Float(b)) => {
                let fa = BigFloat::from_rational(a, b.precision());
                Scalar::Float(Arc::new(float(&fa, b)))
            }
            (Scalar::Float(a), Scalar::Exact(b)) => {
                let fb = BigFloat::from_rational(b, a.precision());
                Scalar::Float(Arc::new(float(a, &fb)))
            }
        }
    }

    /// Multiply by a nonnegative big-integer count (class multiplicities,
    /// level sizes).
    pub fn mul_nat(&self, n: &BigUint) -> Self {
        match self {
            Scalar::Exact(r) => Scalar::from_rational(BigRational::new(
                r.numer() * BigInt::from(n.clone()),
                r.denom().clone(),
            )),
            Scalar::Float(f) => {
                Scalar::Float(Arc::new(f.mul(&BigFloat::from_biguint(n, f.precision()))))
            }
        }
    }

    /// Integer power. Exact mode raises numerator and denominator directly
    /// (a reduced fraction stays reduced under powers).
    pub fn pow_int(&self, e: u32) -> Self {
        match self {
            Scalar::Exact(r) => {
                if e == 0 {
                    return Scalar::from_integer(1);
                }
                Scalar::from_rational(BigRational::new_raw(r.numer().pow(e), r.denom().pow(e)))
            }
            Scalar::Float(f) => Scalar::Float(Arc::new(f.pow_int(e))),
        }
    }

    /// |self|^p. Exact mode requires an integer exponent.
    pub fn abs_pow(&self, p: &Exponent) -> Result<Self> {
        match self {
            Scalar::Exact(_) => match p.as_u32() {
                Some(e) => Ok(self.abs().pow_int(e)),
                None => Err(Error::NonIntegerExponent(p.to_string())),
            },
            Scalar::Float(f) => Ok(Scalar::Float(Arc::new(f.pow_abs(p.value())))),
        }
    }

    pub fn cmp_value(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => {
                if Arc::ptr_eq(a, b) {
                    Ordering::Equal
                } else {
                    a.cmp(b)
                }
            }
            (Scalar::Float(a), Scalar::Float(b)) => a.cmp_value(b),
            // Cross-mode comparison goes through the exact rational values.
            _ => self.to_rational().cmp(&other.to_rational()),
        }
    }

    /// Render with the given number of significant decimal digits,
    /// round-half-even.
    pub fn decimal_string(&self, sig_digits: u32) -> String {
        decimal_string(&self.to_rational(), sig_digits)
    }

    /// Authoritative value string: `p/q` (or plain integer) in exact mode, a
    /// full-precision decimal in float mode.
    pub fn exact_string(&self) -> String {
        match self {
            Scalar::Exact(r) => r.to_string(),
            Scalar::Float(f) => {
                // ~0.302 decimal digits per bit, plus slack.
                let digits = (f.precision() as f64 * std::f64::consts::LOG10_2).ceil() as u32 + 2;
                decimal_string(&f.to_rational(), digits)
            }
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Arc::ptr_eq(a, b) || a == b,
            (Scalar::Float(a), Scalar::Float(b)) => a.cmp_value(b) == Ordering::Equal,
            _ => false,
        }
    }
}

impl Eq for Scalar {}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        // Total order: mode tag first, numeric value within a mode.
        match (self, other) {
            (Scalar::Exact(_), Scalar::Float(_)) => Ordering::Less,
            (Scalar::Float(_), Scalar::Exact(_)) => Ordering::Greater,
            _ => self.cmp_value(other),
        }
    }
}

impl Hash for Scalar {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Scalar::Exact(r) => {
                0u8.hash(state);
                r.hash(state);
            }
            Scalar::Float(f) => {
                1u8.hash(state);
                f.canonical().hash(state);
            }
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.exact_string())
    }
}

/// The exponent p of the functionals; a rational >= 1. Integer values keep
/// every computation inside the rationals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Exponent(BigRational);

impl Exponent {
    pub fn new(value: BigRational) -> Result<Self> {
        if value < BigRational::one() {
            return Err(Error::ExponentOutOfRange(value.to_string()));
        }
        Ok(Exponent(value))
    }

    pub fn integer(p: u32) -> Self {
        Exponent::new(BigRational::from_integer(BigInt::from(p))).expect("p >= 1")
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn as_u32(&self) -> Option<u32> {
        if self.0.is_integer() {
            self.0.numer().to_u32()
        } else {
            None
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Exponent::new(parse_rational(s)?)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Parse `p/q`, a plain integer, or a decimal literal into an exact rational.
pub fn parse_rational(input: &str) -> Result<BigRational> {
    let s = input.trim();
    let err = || Error::ParseRational {
        input: input.to_string(),
    };
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(den.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let int = if int.is_empty() || int == "-" || int == "+" {
            format!("{int}0")
        } else {
            int.to_string()
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let joined = format!("{int}{frac}");
        let n = BigInt::from_str(&joined).map_err(|_| err())?;
        let d = BigInt::from(10u32).pow(frac.len() as u32);
        return Ok(BigRational::new(n, d));
    }
    let n = BigInt::from_str(s).map_err(|_| err())?;
    Ok(BigRational::from_integer(n))
}

/// Significant-digit decimal rendering of an exact rational, round-half-even.
/// Plain notation for moderate magnitudes, `d.ddd...eN` otherwise.
pub fn decimal_string(value: &BigRational, sig_digits: u32) -> String {
    assert!(sig_digits >= 1);
    if value.is_zero() {
        return "0".to_string();
    }
    let neg = value.is_negative();
    let v = value.abs();

    // e = floor(log10(v)): the first significant digit sits at 10^e.
    let mut e = decimal_exponent_floor(&v);
    // digits = round(v * 10^(sig-1-e)), a sig_digits-long integer.
    let mut digits = round_half_even_shift(&v, sig_digits as i64 - 1 - e);
    let ten_pow_sig = BigInt::from(10u32).pow(sig_digits);
    if digits >= ten_pow_sig {
        // Rounding carried into one more digit (e.g. 9.99 -> 10.0).
        digits /= 10;
        e += 1;
    }

    let mut ds = digits.to_string();
    debug_assert_eq!(ds.len(), sig_digits as usize);
    // Trim trailing zeros; at least one digit stays.
    let trimmed_len = ds.trim_end_matches('0').len().max(1);
    ds.truncate(trimmed_len);

    let body = if (0..15).contains(&e) {
        let e = e as usize;
        if e + 1 >= ds.len() {
            // Integer: pad with zeros.
            format!("{}{}", ds, "0".repeat(e + 1 - ds.len()))
        } else {
            format!("{}.{}", &ds[..e + 1], &ds[e + 1..])
        }
    } else if (-4..0).contains(&e) {
        format!("0.{}{}", "0".repeat((-e - 1) as usize), ds)
    } else if ds.len() == 1 {
        format!("{ds}e{e}")
    } else {
        format!("{}.{}e{}", &ds[..1], &ds[1..], e)
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// floor(log10(v)) for positive rational v.
fn decimal_exponent_floor(v: &BigRational) -> i64 {
    let num_digits = v.numer().to_string().len() as i64;
    let den_digits = v.denom().to_string().len() as i64;
    let mut e = num_digits - den_digits;
    // v * 10^(-e) is in [0.1, 100); fix up to land in [1, 10).
    let ten = BigInt::from(10u32);
    let scaled = |e: i64| -> BigRational {
        if e >= 0 {
            BigRational::new(v.numer().clone(), v.denom() * ten.pow(e as u32))
        } else {
            BigRational::new(v.numer() * ten.pow((-e) as u32), v.denom().clone())
        }
    };
    while scaled(e) < BigRational::one() {
        e -= 1;
    }
    while scaled(e) >= BigRational::from_integer(ten.clone()) {
        e += 1;
    }
    e
}

/// round_half_even(v * 10^shift) as a nonnegative integer, for positive v.
fn round_half_even_shift(v: &BigRational, shift: i64) -> BigInt {
    use num_integer::Integer;
    let ten = BigInt::from(10u32);
    let (num, den) = if shift >= 0 {
        (v.numer() * ten.pow(shift as u32), v.denom().clone())
    } else {
        (v.numer().clone(), v.denom() * ten.pow((-shift) as u32))
    };
    let (q, r) = num.div_rem(&den);
    let twice = &r * BigInt::from(2);
    match twice.cmp(&den) {
        Ordering::Less => q,
        Ordering::Greater => q + 1,
        Ordering::Equal => {
            if q.is_even() {
                q
            } else {
                q + 1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(s: &str) -> Scalar {
        Scalar::from_rational(parse_rational(s).unwrap())
    }

    #[test]
    fn exact_field_ops_are_lossless() {
        let a = exact("3/7");
        let b = exact("-14/9");
        assert_eq!(a.mul(&b), exact("-2/3"));
        assert_eq!(a.add(&b), exact("-71/63"));
        assert_eq!(a.sub(&b), exact("125/63"));
        assert_eq!(a.div(&b), exact("-27/98"));
        // (a/b) * (b/a) = 1 for nonzero values
        assert_eq!(a.div(&b).mul(&b.div(&a)), exact("1"));
    }

    #[test]
    fn pow_int_uses_reduced_form() {
        assert_eq!(exact("-3/2").pow_int(3), exact("-27/8"));
        assert_eq!(exact("5").pow_int(0), exact("1"));
        assert_eq!(exact("0").pow_int(4), exact("0"));
    }

    #[test]
    fn abs_pow_exact_requires_integer_exponent() {
        let p = Exponent::integer(3);
        assert_eq!(exact("-2").abs_pow(&p).unwrap(), exact("8"));
        let frac: Exponent = "3/2".parse().unwrap();
        assert!(matches!(
            exact("2").abs_pow(&frac),
            Err(Error::NonIntegerExponent(_))
        ));
        let f = exact("4").to_mode(ScalarMode::float_default());
        let y = f.abs_pow(&frac).unwrap();
        let diff = y.to_rational() - parse_rational("8").unwrap();
        assert!(diff.abs() < parse_rational("1/1000000000000000000000000").unwrap());
    }

    #[test]
    fn mul_nat_reduces() {
        let m = BigUint::from(6u32);
        assert_eq!(exact("5/12").mul_nat(&m), exact("5/2"));
    }

    #[test]
    fn exponent_validation() {
        assert!(Exponent::new(parse_rational("1").unwrap()).is_ok());
        assert!(Exponent::new(parse_rational("1/2").unwrap()).is_err());
        let p: Exponent = "2.5".parse().unwrap();
        assert_eq!(p.value(), &parse_rational("5/2").unwrap());
        assert!(p.as_u32().is_none());
        assert_eq!(Exponent::integer(2).as_u32(), Some(2));
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(
            parse_rational("3/4").unwrap(),
            parse_rational("0.75").unwrap()
        );
        assert_eq!(
            parse_rational("-1/2").unwrap(),
            parse_rational("-0.5").unwrap()
        );
        assert_eq!(
            parse_rational(" 7 ").unwrap(),
            parse_rational("7/1").unwrap()
        );
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.2.3").is_err());
    }

    #[test]
    fn decimal_rendering() {
        let d = |s: &str| decimal_string(&parse_rational(s).unwrap(), 15);
        assert_eq!(d("0"), "0");
        assert_eq!(d("2"), "2");
        assert_eq!(d("3/2"), "1.5");
        assert_eq!(d("1/3"), "0.333333333333333");
        assert_eq!(d("2/3"), "0.666666666666667");
        assert_eq!(d("1/7"), "0.142857142857143");
        assert_eq!(d("-1/1024"), "-0.0009765625");
        assert_eq!(d("1/8"), "0.125");
        // ties round to even in the last kept digit
        assert_eq!(d("1000000000000005/1000000000000000"), "1");
        assert_eq!(d("1000000000000015/1000000000000000"), "1.00000000000002");
        // large and small magnitudes switch to e-notation
        assert_eq!(d("1267650600228229401496703205376"), "1.26765060022823e30"); // 2^100
        assert_eq!(d("1/100000"), "1e-5");
        assert_eq!(d("-123456789012345678"), "-1.23456789012346e17");
        assert_eq!(d("99999999999999999"), "1e17"); // carry into a new digit
    }

    #[test]
    fn ordering_and_hash_consistency() {
        let a = exact("1/2");
        let b = exact("2/4");
        assert_eq!(a, b);
        use std::collections::hash_map::DefaultHasher;
        let h = |s: &Scalar| {
            let mut hasher = DefaultHasher::new();
            s.hash(&mut hasher);
            hasher.finish()
        };
        assert_eq!(h(&a), h(&b));
        assert!(exact("-3") < exact("1/10"));
        let fa = a.to_mode(ScalarMode::float_default());
        let fb = b.to_mode(ScalarMode::Float { precision: 64 });
        assert_eq!(fa, fb);
        assert_eq!(h(&fa), h(&fb));
    }

    #[test]
    fn mode_conversions() {
        let x = exact("7/3");
        let f = x.to_mode(ScalarMode::Float { precision: 96 });
        assert_eq!(f.mode(), ScalarMode::Float { precision: 96 });
        let back = f.to_mode(ScalarMode::Exact);
        let diff = (back.to_rational() - x.to_rational()).abs();
        assert!(diff < parse_rational("1/4951760157141521099596496896").unwrap()); // 2^-92
                                                                                   // mixed-mode arithmetic promotes to float
        let y = x.add(&f);
        assert!(matches!(y, Scalar::Float(_)));
    }
}
