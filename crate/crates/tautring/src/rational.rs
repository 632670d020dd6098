//! Exact rational scalars and small helpers around them.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Scalar type of the whole crate: arbitrary-precision rationals.
pub type Q = BigRational;

/// The rational `n`.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// The rational `n / d`.
pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// `1 / u` for an unsigned big integer.
pub fn q_inv(u: &BigUint) -> Q {
    Q::new(BigInt::one(), BigInt::from(u.clone()))
}

/// `u` as a rational.
pub fn q_from_biguint(u: &BigUint) -> Q {
    Q::from_integer(BigInt::from(u.clone()))
}

/// Renders `q` as `"p"` or `"p/q"` in lowest terms.
pub fn q_to_string(q: &Q) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parses `"p"` or `"p/q"`.
pub fn q_from_str(s: &str) -> Option<Q> {
    let s = s.trim();
    match s.split_once('/') {
        None => s.parse::<BigInt>().ok().map(Q::from_integer),
        Some((p, d)) => {
            let p = p.trim().parse::<BigInt>().ok()?;
            let d = d.trim().parse::<BigInt>().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Q::new(p, d))
            }
        }
    }
}

/// Odd double factorial `(2k+1)!! = 1 * 3 * ... * (2k+1)`, with `(-1)!! = 1`.
pub fn odd_double_factorial(k: i64) -> BigInt {
    if k < 0 {
        return BigInt::one();
    }
    let mut acc = BigInt::one();
    let mut f = BigInt::one();
    for _ in 0..=k {
        acc *= &f;
        f += 2;
    }
    acc
}

/// `n!` as a big unsigned integer.
pub fn factorial(n: u64) -> BigUint {
    let mut acc = BigUint::one();
    for i in 2..=n {
        acc *= BigUint::from(i);
    }
    acc
}

/// True when `q > 0`.
pub fn q_is_positive(q: &Q) -> bool {
    q.is_positive()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn string_round_trip() {
        for (num, den, s) in [(1i64, 2i64, "1/2"), (-7, 3, "-7/3"), (5, 1, "5"), (0, 1, "0")] {
            let q = qr(num, den);
            assert_eq!(q_to_string(&q), s);
            assert_eq!(q_from_str(s).unwrap(), q);
        }
        assert!(q_from_str("1/0").is_none());
        assert!(q_from_str("x").is_none());
    }

    #[test]
    fn double_factorials() {
        assert_eq!(odd_double_factorial(-1), BigInt::from(1));
        assert_eq!(odd_double_factorial(0), BigInt::from(1));
        assert_eq!(odd_double_factorial(1), BigInt::from(3));
        assert_eq!(odd_double_factorial(2), BigInt::from(15));
        assert_eq!(odd_double_factorial(3), BigInt::from(105));
    }

    #[test]
    fn factorials() {
        assert_eq!(factorial(0), BigUint::from(1u32));
        assert_eq!(factorial(5), BigUint::from(120u32));
        assert_eq!(factorial(10), BigUint::from(3628800u32));
    }
}
