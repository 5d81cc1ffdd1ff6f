//! Exact rational helpers and the small numeric trait shared by the exact
//! (rational) and floating evaluation paths.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// Exact rational number used for weights, probabilities and PMFs.
pub type Q = BigRational;

pub fn int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn frac(numer: i64, denom: i64) -> Q {
    Q::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn factorial(n: u64) -> Q {
    (1..=n).fold(Q::one(), |acc, k| acc * int(k as i64))
}

/// `x (x-1) ... (x-s+1)`
pub fn falling(x: &Q, s: u32) -> Q {
    (0..s).fold(Q::one(), |acc, k| acc * (x - int(k as i64)))
}

/// `x (x+1) ... (x+s-1)`
pub fn rising(x: &Q, s: u32) -> Q {
    (0..s).fold(Q::one(), |acc, k| acc * (x + int(k as i64)))
}

/// Generalised binomial coefficient `C(top, k)` for rational `top`.
pub fn binom(top: &Q, k: u32) -> Q {
    falling(top, k) / factorial(k as u64)
}

pub fn binom_int(top: i64, k: u32) -> Q {
    binom(&int(top), k)
}

/// `H_{x+n} - H_x = sum_{k=1}^{n} 1/(k+x)`, exact.
pub fn harmonic_shift(x: &Q, n: u32) -> Q {
    (1..=n).fold(Q::zero(), |acc, k| acc + (x + int(k as i64)).recip())
}

/// Parses `p`, `p/q` or a finite decimal such as `0.25` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Q> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Q::new(n, d));
    }
    if let Some((whole, dec)) = text.split_once('.') {
        if dec.is_empty() || !dec.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let negative = whole.starts_with('-');
        let whole: BigInt = if whole.is_empty() || whole == "-" {
            BigInt::zero()
        } else {
            whole.parse().ok()?
        };
        let scale = num_traits::pow(BigInt::from(10), dec.len());
        let frac_part: BigInt = dec.parse().ok()?;
        let magnitude = whole.abs() * &scale + frac_part;
        let numer = if negative { -magnitude } else { magnitude };
        return Some(Q::new(numer, scale));
    }
    text.parse::<BigInt>().ok().map(Q::from_integer)
}

/// Formats a rational as `p` or `p/q`.
pub fn fmt_rational(q: &Q) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Least common multiple of the denominators, used to scale rational weights
/// to integers for exact cumulative sampling.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Q>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| num_integer::lcm(acc, v.denom().clone()))
}

/// Field operations shared by the exact and floating evaluation paths.
pub trait Scalar: Num + Clone + Debug + Send + Sync + 'static {
    fn from_q(q: &Q) -> Self;
    fn as_f64(&self) -> f64;

    fn from_i64(v: i64) -> Self {
        Self::from_q(&int(v))
    }
}

impl Scalar for Q {
    fn from_q(q: &Q) -> Self {
        q.clone()
    }
    fn as_f64(&self) -> f64 {
        to_f64(self)
    }
}

impl Scalar for f64 {
    fn from_q(q: &Q) -> Self {
        to_f64(q)
    }
    fn as_f64(&self) -> f64 {
        *self
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binom(&frac(1, 2), 2), frac(-1, 8));
        assert_eq!(binom_int(5, 2), int(10));
        assert_eq!(binom_int(-1, 2), int(1));
        assert_eq!(binom_int(3, 0), int(1));
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3"), Some(int(3)));
        assert_eq!(parse_rational("1/2"), Some(frac(1, 2)));
        assert_eq!(parse_rational("0.25"), Some(frac(1, 4)));
        assert_eq!(parse_rational("-1.5"), Some(frac(-3, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
        assert_eq!(fmt_rational(&frac(6, 4)), "3/2");
    }

    #[test]
    fn harmonic() {
        assert_eq!(harmonic_shift(&int(0), 3), frac(11, 6));
    }
}
