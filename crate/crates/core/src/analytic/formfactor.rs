use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::poly::Poly;
use super::Truncation;
use crate::combinatorics::{binomial, factorial, to_f64};
use crate::error::{invalid, Error, Result};

/// Largest `tau` accepted by [`k_formfactor`]; the series is a small-time
/// expansion.
pub const K_DOMAIN: f64 = 0.5;

/// `C_M` for `M = 0..=m_max` at fixed `j`.
///
/// Each edge contributes a factor `sum_{k,n} binom(n+k, n) x^k y^n / ((n+1)! (k+1)!)`;
/// the `j`-th power gives the inner sums over compositions with totals
/// `(K, N)`, which are then weighted by `(K+j-1)! (N+j-1)! / (M+j-1)!`.
pub(crate) fn c_table(j: usize, m_max: usize) -> Vec<BigRational> {
    assert!(j >= 2, "C_M is defined for j >= 2");
    let m = m_max as u64;
    // common denominator making every single-edge weight an integer
    let scale = factorial(m + 1) * factorial(m + 1);
    let mut edge = Poly::default();
    for k in 0..=m {
        for n in 0..=m - k {
            let w = binomial(n + k, n) * &scale / (factorial(n + 1) * factorial(k + 1));
            edge.add_term([k as u16, n as u16, 0, 0], w);
        }
    }
    let keep = |e: &[u16; 4]| (e[0] + e[1]) as usize <= m_max;
    let mut power = Poly::one();
    for _ in 0..j {
        power = power.mul_truncated(&edge, keep);
    }
    let denom = num_traits::pow(scale, j);
    let jj = j as u64;
    let mut out = vec![BigRational::zero(); m_max + 1];
    for (e, c) in &power.terms {
        let (kk, nn) = (e[0] as u64, e[1] as u64);
        let total = kk + nn;
        let w = BigRational::new(
            c * factorial(kk + jj - 1) * factorial(nn + jj - 1),
            &denom * factorial(total + jj - 1),
        );
        out[total as usize] += w;
    }
    for (mm, c) in out.iter_mut().enumerate() {
        let sign = if mm % 2 == 1 { -1 } else { 1 };
        *c *= BigRational::from_integer(BigInt::from(sign) << mm);
    }
    out
}

/// `C_M = (-2)^M sum_{k_1..k_j, n_1..n_j summing to M}
///   (K+j-1)! (N+j-1)! / (M+j-1)! prod binom(n_i+k_i, n_i) / ((n_i+1)! (k_i+1)!)`.
pub fn c_coeff(j: usize, m: usize) -> Result<BigRational> {
    if j < 2 {
        return Err(invalid("C_M is defined for j >= 2"));
    }
    Ok(c_table(j, m).swap_remove(m))
}

/// `(power of tau, coefficient)` pairs of the truncated double series.
fn k_series(j_max: usize, m_max: usize) -> Arc<Vec<(i32, f64)>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Vec<(i32, f64)>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().expect("cache poisoned").get(&(j_max, m_max)) {
        return hit.clone();
    }
    let mut by_power: std::collections::BTreeMap<i32, BigRational> = Default::default();
    for j in 2..=j_max {
        let prefactor = BigRational::new(BigInt::from(1) << (2 * j), factorial(j as u64));
        for (m, c) in c_table(j, m_max).into_iter().enumerate() {
            *by_power.entry((m + j + 1) as i32).or_insert_with(BigRational::zero) += c * &prefactor;
        }
    }
    let table: Arc<Vec<(i32, f64)>> = Arc::new(by_power.iter().map(|(&p, c)| (p, to_f64(c))).collect());
    cache
        .lock()
        .expect("cache poisoned")
        .insert((j_max, m_max), table.clone());
    table
}

/// Two-point form factor
/// `K(tau) = exp(-4 tau) + sum_{j=2}^{j_max} sum_{M=0}^{m_max} 4^j / j! C_M tau^{M+j+1}`.
pub fn k_formfactor(tau: f64, trunc: &Truncation) -> Result<f64> {
    if !(0.0..=K_DOMAIN).contains(&tau) {
        return Err(Error::Domain {
            what: "tau",
            value: tau,
            limit: K_DOMAIN,
        });
    }
    let series: f64 = k_series(trunc.j_max, trunc.m_max)
        .iter()
        .map(|&(p, c)| c * tau.powi(p))
        .sum();
    Ok((-4.0 * tau).exp() + series)
}
