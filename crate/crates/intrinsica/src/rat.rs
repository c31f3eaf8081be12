//! Exact rational scalars.
//!
//! All combinatorial decisions (intersection predicates, feasibility sweeps,
//! implicit fractal membership) run on arbitrary-precision rationals so they
//! are exact. Metric quantities (lengths, angles) involve square roots and
//! are reported as `f64`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Exact rational coordinate.
pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// 2^k for k >= 0, 2^-|k| for k < 0.
pub fn rat_pow2(k: i32) -> Rat {
    let one = BigInt::one();
    if k >= 0 {
        Rat::from_integer(one << k as usize)
    } else {
        Rat::new(one.clone(), one << (-k) as usize)
    }
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().expect("rational out of f64 range")
}

/// Exact conversion of a finite `f64` into a rational.
pub fn rat_from_f64(x: f64) -> Result<Rat> {
    Rat::from_float(x).ok_or_else(|| Error::InvalidInput(format!("non-finite coordinate {x}")))
}

/// Parses `"p/q"`, an integer, or a finite decimal like `"0.08"`.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim())
            .map_err(|_| Error::InvalidInput(format!("bad rational numerator in {s:?}")))?;
        let d = BigInt::from_str(den.trim())
            .map_err(|_| Error::InvalidInput(format!("bad rational denominator in {s:?}")))?;
        if d.is_zero() {
            return Err(Error::InvalidInput(format!("zero denominator in {s:?}")));
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let digits = format!(
            "{}{}",
            if int_part == "-" || int_part.is_empty() { "0" } else { int_part },
            frac_part
        );
        let neg = int_part.starts_with('-');
        let mut n = BigInt::from_str(digits.trim_start_matches('-'))
            .map_err(|_| Error::InvalidInput(format!("bad decimal {s:?}")))?;
        if neg {
            n = -n;
        }
        let d = BigInt::from(10u32).pow(frac_part.len() as u32);
        return Ok(Rat::new(n, d));
    }
    let n = BigInt::from_str(s).map_err(|_| Error::InvalidInput(format!("bad rational {s:?}")))?;
    Ok(Rat::from_integer(n))
}

/// Canonical `"p/q"` form (`"p"` when the denominator is one).
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Nearest rational with denominator at most `max_den`, via continued fractions.
///
/// Used by the CLI to turn a float angle into an exact slope parameter.
pub fn approx_rat(x: f64, max_den: u64) -> Rat {
    debug_assert!(max_den >= 1);
    let exact = Rat::from_float(x).unwrap_or_else(Rat::zero);
    if exact.denom() <= &BigInt::from(max_den) {
        return exact;
    }
    // Stern-Brocot style convergents of the continued fraction of |x|.
    let neg = x < 0.0;
    let mut v = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (
        BigInt::zero(),
        BigInt::one(),
        BigInt::one(),
        BigInt::zero(),
    );
    let bound = BigInt::from(max_den);
    for _ in 0..64 {
        let a = v.floor();
        let ai = BigInt::from(a as i64);
        let p2 = &ai * &p1 + &p0;
        let q2 = &ai * &q1 + &q0;
        if q2 > bound {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = v - a;
        if frac < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    let mut out = Rat::new(p1, if q1.is_zero() { BigInt::one() } else { q1 });
    if neg {
        out = -out;
    }
    out
}

/// floor(r) as a BigInt.
pub fn rat_floor(r: &Rat) -> BigInt {
    r.floor().to_integer()
}

pub fn rat_abs(r: &Rat) -> Rat {
    r.abs()
}
