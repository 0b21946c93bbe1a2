//! Exact integer and rational helpers shared by the orbit counts and the
//! analytic series coefficients.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub fn factorial(n: u64) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// `binom(n, k)`, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Multinomial `T! / (t_1! ... t_j!)` with `T = sum t_i`.
pub fn multinomial(parts: &[u64]) -> BigInt {
    let mut acc = BigInt::one();
    let mut total = 0u64;
    for &p in parts {
        total += p;
        acc *= binomial(total, p);
    }
    acc
}

pub fn ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

pub fn to_f64(q: &BigRational) -> f64 {
    // BigRational::to_f64 keeps full precision for huge numerators and
    // denominators; the naive numer/denom split would overflow.
    q.to_f64().unwrap_or(f64::NAN)
}

/// All compositions of `total` into `parts` nonnegative integers, in
/// lexicographic order.
pub fn weak_compositions(total: u64, parts: usize) -> Vec<Vec<u64>> {
    fn rec(left: u64, slots: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for first in 0..=left {
            cur.push(first);
            rec(left - first, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}
