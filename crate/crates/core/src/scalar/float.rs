//! Arbitrary-precision binary floating point.
//!
//! A value is `sign * mant * 2^exp` with the mantissa normalized to exactly
//! `prec` bits (zero is the sole exception). All operations round to nearest,
//! ties to even. This is enough for the float evaluation mode: construction
//! from rationals, field arithmetic, comparisons, and `|x|^p` for real p
//! via exp/ln series.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::cmp::Ordering;

/// Default mantissa width in bits for float mode.
pub const DEFAULT_PRECISION: u32 = 128;

/// Extra working bits used inside transcendental evaluations.
const GUARD_BITS: u32 = 64;

#[derive(Debug, Clone)]
pub struct BigFloat {
    sign: i8,
    mant: BigUint,
    exp: i64,
    prec: u32,
}

impl BigFloat {
    pub fn zero(prec: u32) -> Self {
        BigFloat {
            sign: 0,
            mant: BigUint::zero(),
            exp: 0,
            prec,
        }
    }

    pub fn from_i64(v: i64, prec: u32) -> Self {
        Self::from_bigint(&BigInt::from(v), prec)
    }

    pub fn from_bigint(v: &BigInt, prec: u32) -> Self {
        let sign = match v.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        };
        round_to_prec(sign, v.magnitude().clone(), 0, prec)
    }

    pub fn from_biguint(v: &BigUint, prec: u32) -> Self {
        if v.is_zero() {
            Self::zero(prec)
        } else {
            round_to_prec(1, v.clone(), 0, prec)
        }
    }

    /// Nearest float of width `prec` to the exact ratio `num/den`.
    pub fn from_ratio(num: &BigInt, den: &BigInt, prec: u32) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let sign = match (num.sign(), den.sign()) {
            (Sign::NoSign, _) => return Self::zero(prec),
            (a, b) if a == b => 1,
            _ => -1,
        };
        let a = num.magnitude();
        let b = den.magnitude();
        // Target a quotient with prec + 3 bits so the final rounding sees
        // two guard bits plus a sticky bit.
        let shift = prec as i64 + 3 - (a.bits() as i64 - b.bits() as i64);
        let (q, r) = if shift >= 0 {
            (a << shift as u64).div_rem(b)
        } else {
            a.div_rem(&(b << (-shift) as u64))
        };
        let mut q = q;
        if !r.is_zero() {
            // Sticky: force the low bit so ties cannot be misdetected.
            q |= BigUint::one();
        }
        round_to_prec(sign, q, -shift, prec)
    }

    pub fn from_rational(r: &BigRational, prec: u32) -> Self {
        Self::from_ratio(r.numer(), r.denom(), prec)
    }

    /// Exact rational value of this float.
    pub fn to_rational(&self) -> BigRational {
        if self.sign == 0 {
            return BigRational::zero();
        }
        let m = BigInt::from_biguint(
            if self.sign < 0 {
                Sign::Minus
            } else {
                Sign::Plus
            },
            self.mant.clone(),
        );
        if self.exp >= 0 {
            BigRational::from_integer(m << self.exp as u64)
        } else {
            BigRational::new(m, BigInt::one() << (-self.exp) as u64)
        }
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn signum(&self) -> i8 {
        self.sign
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        out.sign = -out.sign;
        out
    }

    pub fn abs(&self) -> Self {
        let mut out = self.clone();
        out.sign = out.sign.abs();
        out
    }

    /// Exponent of the most significant bit: value magnitude is in
    /// `[2^msb, 2^(msb+1))`. Meaningless for zero.
    fn msb_exp(&self) -> i64 {
        self.exp + self.mant.bits() as i64 - 1
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_signed(other, 1)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_signed(other, -1)
    }

    fn add_signed(&self, other: &Self, flip: i8) -> Self {
        let prec = self.prec.max(other.prec);
        let osign = other.sign * flip;
        if self.sign == 0 {
            let mut out = other.clone();
            out.sign = osign;
            out.prec = prec;
            return round_to_prec(out.sign, out.mant, out.exp, prec);
        }
        if osign == 0 {
            return round_to_prec(self.sign, self.mant.clone(), self.exp, prec);
        }
        // If the magnitudes are too far apart the small operand acts as a
        // sticky bit only.
        let gap = self.msb_exp() - other.msb_exp();
        if gap > prec as i64 + 4 {
            return sticky_nudge(self, osign, prec);
        }
        if gap < -(prec as i64 + 4) {
            let mut big = other.clone();
            big.sign = osign;
            return sticky_nudge(&big, self.sign, prec);
        }
        let exp = self.exp.min(other.exp);
        let a = signed(self.sign, &self.mant) << (self.exp - exp) as u64;
        let b = signed(osign, &other.mant) << (other.exp - exp) as u64;
        let sum = a + b;
        let sign = match sum.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        };
        round_to_prec(sign, sum.magnitude().clone(), exp, prec)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        if self.sign == 0 || other.sign == 0 {
            return Self::zero(prec);
        }
        round_to_prec(
            self.sign * other.sign,
            &self.mant * &other.mant,
            self.exp + other.exp,
            prec,
        )
    }

    pub fn div(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        assert!(other.sign != 0, "division by zero");
        if self.sign == 0 {
            return Self::zero(prec);
        }
        let shift = prec as u64 + 3 + other.mant.bits();
        let (mut q, r) = (&self.mant << shift).div_rem(&other.mant);
        if !r.is_zero() {
            q |= BigUint::one();
        }
        round_to_prec(
            self.sign * other.sign,
            q,
            self.exp - other.exp - shift as i64,
            prec,
        )
    }

    pub fn cmp_value(&self, other: &Self) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => {}
            ord => return ord,
        }
        if self.sign == 0 {
            return Ordering::Equal;
        }
        let mag = match self.msb_exp().cmp(&other.msb_exp()) {
            Ordering::Equal => {
                // Align mantissas at a common exponent and compare exactly.
                let exp = self.exp.min(other.exp);
                let a = &self.mant << (self.exp - exp) as u64;
                let b = &other.mant << (other.exp - exp) as u64;
                a.cmp(&b)
            }
            ord => ord,
        };
        if self.sign > 0 {
            mag
        } else {
            mag.reverse()
        }
    }

    /// Canonical (mantissa-with-trailing-zeros-stripped, exponent) pair.
    /// Equal values produce equal pairs regardless of precision.
    pub fn canonical(&self) -> (i8, BigUint, i64) {
        if self.sign == 0 {
            return (0, BigUint::zero(), 0);
        }
        let tz = self.mant.trailing_zeros().unwrap_or(0);
        (self.sign, &self.mant >> tz, self.exp + tz as i64)
    }

    /// Integer power by repeated squaring, carried out with guard bits.
    pub fn pow_int(&self, e: u32) -> Self {
        let prec = self.prec;
        if e == 0 {
            return BigFloat::from_i64(1, prec);
        }
        let w = prec + 32;
        let mut base = round_to_prec(self.sign, self.mant.clone(), self.exp, w);
        let mut acc: Option<BigFloat> = None;
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.mul(&base),
                });
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        let out = acc.unwrap();
        round_to_prec(out.sign, out.mant, out.exp, prec)
    }

    /// Natural logarithm; requires a strictly positive value.
    pub fn ln(&self) -> Self {
        assert!(self.sign > 0, "ln of non-positive value");
        let prec = self.prec;
        let w = prec + GUARD_BITS;
        // value = m * 2^e with m in [1, 2)
        let e = self.msb_exp();
        let m = BigFloat {
            sign: 1,
            mant: self.mant.clone(),
            exp: -(self.mant.bits() as i64 - 1),
            prec: w,
        };
        let one = BigFloat::from_i64(1, w);
        let t = m.sub(&one).div(&m.add(&one));
        let mut acc = atanh_series(&t, w);
        acc = acc.add(&acc.clone()); // 2*atanh(t)
        if e != 0 {
            let l2 = ln2(w);
            let scaled = l2.mul(&BigFloat::from_i64(e, w));
            acc = acc.add(&scaled);
        }
        round_to_prec(acc.sign, acc.mant, acc.exp, prec)
    }

    /// Exponential function.
    pub fn exp(&self) -> Self {
        let prec = self.prec;
        let w = prec + GUARD_BITS;
        if self.sign == 0 {
            return BigFloat::from_i64(1, prec);
        }
        let x = round_to_prec(self.sign, self.mant.clone(), self.exp, w);
        let l2 = ln2(w);
        // Reduce: x = n*ln2 + r with |r| <= ln2/2 + eps.
        let n = x
            .div(&l2)
            .to_i64_nearest()
            .expect("exp argument out of range");
        let r = x.sub(&l2.mul(&BigFloat::from_i64(n, w)));
        let mut term = BigFloat::from_i64(1, w);
        let mut acc = BigFloat::from_i64(1, w);
        let mut k: i64 = 1;
        loop {
            term = term.mul(&r).div(&BigFloat::from_i64(k, w));
            if term.is_zero() || term.msb_exp() < acc.msb_exp() - (w as i64 + 8) {
                break;
            }
            acc = acc.add(&term);
            k += 1;
        }
        acc.exp += n;
        round_to_prec(acc.sign, acc.mant, acc.exp, prec)
    }

    /// `|self|^p` for a rational exponent, evaluated as exp(p * ln|self|).
    pub fn pow_abs(&self, p: &BigRational) -> Self {
        let prec = self.prec;
        if self.sign == 0 {
            return Self::zero(prec);
        }
        if p.is_integer() {
            if let Some(e) = p.numer().to_u32() {
                return self.abs().pow_int(e);
            }
        }
        let w = prec + GUARD_BITS;
        let base = round_to_prec(1, self.mant.clone(), self.exp, w);
        let pf = BigFloat::from_ratio(p.numer(), p.denom(), w);
        let out = base.ln().mul(&pf).exp();
        round_to_prec(out.sign, out.mant, out.exp, prec)
    }

    fn to_i64_nearest(&self) -> Option<i64> {
        if self.sign == 0 {
            return Some(0);
        }
        if self.msb_exp() > 62 {
            return None;
        }
        let r = self.to_rational().round();
        r.numer().to_i64()
    }
}

fn signed(sign: i8, mant: &BigUint) -> BigInt {
    BigInt::from_biguint(
        if sign < 0 { Sign::Minus } else { Sign::Plus },
        mant.clone(),
    )
}

/// Adjust `big` by an infinitesimal of sign `tiny_sign` (sticky rounding).
fn sticky_nudge(big: &BigFloat, tiny_sign: i8, prec: u32) -> BigFloat {
    // Append three guard bits and a sticky bit representing the tiny operand.
    let m = (&big.mant << 3u32) + BigUint::from(1u32);
    let sign = big.sign;
    if sign == tiny_sign {
        round_to_prec(sign, m, big.exp - 3, prec)
    } else {
        let m = m - BigUint::from(2u32);
        round_to_prec(sign, m, big.exp - 3, prec)
    }
}

/// Normalize a raw (sign, mantissa, exponent) triple to `prec` bits with
/// round-to-nearest-even.
fn round_to_prec(sign: i8, mant: BigUint, exp: i64, prec: u32) -> BigFloat {
    if sign == 0 || mant.is_zero() {
        return BigFloat::zero(prec);
    }
    let bits = mant.bits();
    if bits <= prec as u64 {
        let shift = prec as u64 - bits;
        return BigFloat {
            sign,
            mant: mant << shift,
            exp: exp - shift as i64,
            prec,
        };
    }
    let drop = bits - prec as u64;
    let low = &mant & ((BigUint::one() << drop) - BigUint::one());
    let mut kept = &mant >> drop;
    let half = BigUint::one() << (drop - 1);
    let round_up = match low.cmp(&half) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => kept.is_odd(),
    };
    let mut exp = exp + drop as i64;
    if round_up {
        kept += BigUint::one();
        if kept.bits() > prec as u64 {
            kept >>= 1u32;
            exp += 1;
        }
    }
    BigFloat {
        sign,
        mant: kept,
        exp,
        prec,
    }
}

/// atanh(t) = t + t^3/3 + t^5/5 + ... for |t| < 1.
fn atanh_series(t: &BigFloat, w: u32) -> BigFloat {
    let t2 = t.mul(t);
    let mut term = t.clone();
    let mut acc = t.clone();
    let mut k: i64 = 3;
    loop {
        term = term.mul(&t2);
        let contrib = term.div(&BigFloat::from_i64(k, w));
        if contrib.is_zero() || contrib.msb_exp() < acc.msb_exp() - (w as i64 + 8) {
            break;
        }
        acc = acc.add(&contrib);
        k += 2;
    }
    acc
}

/// ln 2 = 2 * atanh(1/3).
fn ln2(w: u32) -> BigFloat {
    let third = BigFloat::from_ratio(&BigInt::one(), &BigInt::from(3), w);
    let a = atanh_series(&third, w);
    a.add(&a.clone())
}
