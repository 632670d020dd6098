//! Intersection numbers of psi and kappa classes on a single moduli space.
//!
//! Pure psi numbers come from the KdV-type recursion on the largest
//! exponent; no string or dilaton shortcut is ever taken, so those
//! identities remain genuine cross-checks of this code rather than inputs
//! to it.  Mixed kappa-psi integrals reduce to pure psi numbers by trading
//! one kappa class for a psi class on an extra marking.
//!
//! Both computations memoize behind a mutex; concurrent callers may race to
//! compute the same value but always observe consistent results.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::rational::{odd_double_factorial, Q};
use crate::{Error, Result};

/// The integral of `psi_1^{a_1} ... psi_n^{a_n}` over the moduli space of
/// genus `g` curves with `n` markings.  Errors when the space is unstable
/// or the total degree misses the dimension `3g - 3 + n`.
pub fn psi_intersection(g: u32, exponents: &[u32]) -> Result<Q> {
    let n = exponents.len() as u32;
    if 2 * g as i64 - 2 + n as i64 <= 0 {
        return Err(Error::Unstable { g, n });
    }
    let dim = 3 * g as i64 - 3 + n as i64;
    let total: i64 = exponents.iter().map(|&a| a as i64).sum();
    if total != dim {
        return Err(Error::DegreeMismatch {
            got: total as u32,
            expected: dim.max(0) as u32,
        });
    }
    Ok(correlator(g, exponents))
}

/// The correlator with zero-extension: unstable targets and dimension
/// mismatches give 0 instead of an error.  This is the right convention
/// inside recursions, where such terms simply drop out.
pub fn correlator(g: u32, exponents: &[u32]) -> Q {
    let n = exponents.len() as u32;
    if 2 * g as i64 - 2 + n as i64 <= 0 {
        return Q::zero();
    }
    let dim = 3 * g as i64 - 3 + n as i64;
    let total: i64 = exponents.iter().map(|&a| a as i64).sum();
    if total != dim {
        return Q::zero();
    }
    let mut key: Vec<u32> = exponents.to_vec();
    key.sort_unstable_by(|a, b| b.cmp(a));
    memoized_correlator(g, key)
}

fn psi_memo() -> &'static Mutex<HashMap<(u32, Vec<u32>), Q>> {
    static MEMO: OnceLock<Mutex<HashMap<(u32, Vec<u32>), Q>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `exps` is sorted descending, stable, and of matching total degree.
fn memoized_correlator(g: u32, exps: Vec<u32>) -> Q {
    if let Some(q) = psi_memo().lock().unwrap().get(&(g, exps.clone())) {
        return q.clone();
    }
    let value = compute_correlator(g, &exps);
    psi_memo()
        .lock()
        .unwrap()
        .insert((g, exps), value.clone());
    value
}

fn compute_correlator(g: u32, exps: &[u32]) -> Q {
    let n = exps.len();
    if g == 0 && n == 3 {
        return Q::from_integer(1.into());
    }
    if g == 1 && n == 1 {
        return Q::new(BigInt::from(1), BigInt::from(24));
    }
    let a1 = exps[0];
    if a1 == 0 {
        // Only the two base cases have all exponents zero at the right
        // dimension, and both were handled above.
        return Q::zero();
    }
    let k = (a1 - 1) as i64;
    let rest: Vec<u32> = exps[1..].to_vec();
    let denom = odd_double_factorial(k + 1); // (2k+3)!!

    let mut acc = Q::zero();

    // Absorb the distinguished insertion into each remaining one.
    for j in 0..rest.len() {
        let aj = rest[j] as i64;
        let num = odd_double_factorial(k + aj); // (2(k + a_j) + 1)!!
        let den = &denom * odd_double_factorial(aj - 1); // (2a_j - 1)!!
        let mut child: Vec<u32> = rest.clone();
        child[j] = (aj + k) as u32;
        acc += Q::new(num, den) * correlator(g, &child);
    }

    // Split the distinguished insertion into two, either lowering the genus
    // or separating the curve into two components.
    for b in 0..k.max(0) {
        let c = k - 1 - b;
        let coeff = Q::new(
            odd_double_factorial(b) * odd_double_factorial(c),
            2 * &denom,
        );
        if coeff.is_zero() {
            continue;
        }

        if g >= 1 {
            let mut child: Vec<u32> = rest.clone();
            child.push(b as u32);
            child.push(c as u32);
            acc += coeff.clone() * correlator(g - 1, &child);
        }

        // All ordered splits of the genus and the remaining insertions.
        let m = rest.len();
        for mask in 0..(1u64 << m) {
            let mut left: Vec<u32> = vec![b as u32];
            let mut right: Vec<u32> = vec![c as u32];
            for (j, &a) in rest.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    left.push(a);
                } else {
                    right.push(a);
                }
            }
            for g1 in 0..=g {
                let g2 = g - g1;
                let l = correlator(g1, &left);
                if l.is_zero() {
                    continue;
                }
                let r = correlator(g2, &right);
                if r.is_zero() {
                    continue;
                }
                acc += coeff.clone() * l * r;
            }
        }
    }
    acc
}

fn kappa_memo() -> &'static Mutex<HashMap<(u32, Vec<u32>, Vec<u32>), Q>> {
    static MEMO: OnceLock<Mutex<HashMap<(u32, Vec<u32>, Vec<u32>), Q>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The integral of a mixed monomial over the moduli space of genus `g`
/// curves with `psis.len()` markings: psi exponents per marking and a
/// multiset of (positive) kappa indices.  Returns 0 when the total degree
/// misses the dimension; unstable targets are an error.
pub fn vertex_integral(g: u32, psis: &[u32], kappas: &[u32]) -> Result<Q> {
    let n = psis.len() as u32;
    if 2 * g as i64 - 2 + n as i64 <= 0 {
        return Err(Error::Unstable { g, n });
    }
    if kappas.iter().any(|&b| b == 0) {
        return Err(Error::InvalidInput(
            "kappa_0 must be folded into the coefficient before integrating".into(),
        ));
    }
    let dim = 3 * g as i64 - 3 + n as i64;
    let total: i64 = psis.iter().map(|&a| a as i64).sum::<i64>()
        + kappas.iter().map(|&b| b as i64).sum::<i64>();
    if total != dim {
        return Ok(Q::zero());
    }
    let mut psis = psis.to_vec();
    psis.sort_unstable_by(|a, b| b.cmp(a));
    let mut kappas = kappas.to_vec();
    kappas.sort_unstable();
    Ok(memoized_vertex_integral(g, psis, kappas))
}

fn memoized_vertex_integral(g: u32, psis: Vec<u32>, kappas: Vec<u32>) -> Q {
    if kappas.is_empty() {
        return correlator(g, &psis);
    }
    let key = (g, psis.clone(), kappas.clone());
    if let Some(q) = kappa_memo().lock().unwrap().get(&key) {
        return q.clone();
    }

    // Trade the largest kappa for a psi class on one extra marking: the
    // pullback of each remaining kappa differs from kappa upstairs by a
    // power of the new psi class, which the inclusion-exclusion below
    // accounts for.
    let (last, front) = kappas.split_last().expect("nonempty kappa multiset");
    let m = front.len();
    let mut acc = Q::zero();
    for mask in 0..(1u64 << m) {
        let mut extra = *last as i64 + 1;
        let mut rest_kappa: Vec<u32> = Vec::new();
        let mut sign = 1i64;
        for (j, &b) in front.iter().enumerate() {
            if mask & (1 << j) != 0 {
                extra += b as i64;
                sign = -sign;
            } else {
                rest_kappa.push(b);
            }
        }
        let mut psis_up: Vec<u32> = psis.clone();
        psis_up.push(extra as u32);
        psis_up.sort_unstable_by(|a, b| b.cmp(a));
        rest_kappa.sort_unstable();
        let sub = memoized_vertex_integral(g, psis_up, rest_kappa);
        acc += Q::from_integer(sign.into()) * sub;
    }

    kappa_memo().lock().unwrap().insert(key, acc.clone());
    acc
}
