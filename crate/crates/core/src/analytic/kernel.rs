//! The three-point kernel `F = F1 + F2 + F3 + F4` and its quadratic
//! small-time expansion.
//!
//! `F1` comes from triples of single-edge orbits, `F2` from pairs of edges
//! with the block counts resummed into the Bessel kernel, and `F3`, `F4`
//! from orbits on `j >= 3` edges (without and with one degenerate
//! single-edge orbit). `F3` and `F4` are truncated power series.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use super::bessel::bessel_ratio;
use super::poly::Poly;
use super::Truncation;
use crate::combinatorics::{binomial, factorial, to_f64};
use crate::error::{Error, Result};
use crate::quadrature::UnitRule;

/// `F3` and `F4` are evaluated for `tau, tau' <= F_SERIES_DOMAIN` only.
pub const F_SERIES_DOMAIN: f64 = 1.0;

/// Largest accepted disagreement between the full and half-resolution
/// quadrature of `F2`, relative to `max(1, |F2|)`.
const F2_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Components {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
}

impl Components {
    pub fn total(&self) -> f64 {
        self.f1 + self.f2 + self.f3 + self.f4
    }

    pub fn evaluate(tau: f64, tau_p: f64, trunc: &Truncation) -> Result<Self> {
        Ok(Self {
            f1: f1(tau, tau_p),
            f2: f2(tau, tau_p, trunc)?,
            f3: f3(tau, tau_p, trunc)?,
            f4: f4(tau, tau_p, trunc)?,
        })
    }
}

fn check_nonnegative(tau: f64, tau_p: f64) -> Result<()> {
    for value in [tau, tau_p] {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::Domain {
                what: "tau",
                value,
                limit: 0.0,
            });
        }
    }
    Ok(())
}

fn check_series_domain(tau: f64, tau_p: f64) -> Result<()> {
    check_nonnegative(tau, tau_p)?;
    for value in [tau, tau_p] {
        if value > F_SERIES_DOMAIN {
            return Err(Error::Domain {
                what: "tau",
                value,
                limit: F_SERIES_DOMAIN,
            });
        }
    }
    Ok(())
}

pub fn f1(tau: f64, tau_p: f64) -> f64 {
    2.0 * (-4.0 * tau).exp() * (-4.0 * tau_p).exp()
}

/// Bracket of `F2` after substituting `q = tau u`, `q' = tau' u'`.
fn f2_bracket(t: f64, tp: f64, rule: &UnitRule) -> f64 {
    let s = t + tp;
    let single = |a: f64| {
        if a == 0.0 {
            return 0.0;
        }
        8.0 * a * a
            * rule
                .iter()
                .map(|(u, w)| w * bessel_ratio(a * u * (s - a * u)) * bessel_ratio(a * a * u * (1.0 - u)))
                .sum::<f64>()
    };
    let double = if t == 0.0 || tp == 0.0 {
        0.0
    } else {
        let inner_t: Vec<f64> = rule.nodes.iter().map(|&u| bessel_ratio(t * t * u * (1.0 - u))).collect();
        let inner_tp: Vec<f64> = rule.nodes.iter().map(|&u| bessel_ratio(tp * tp * u * (1.0 - u))).collect();
        let mut acc = 0.0;
        for (i, (u, w)) in rule.iter().enumerate() {
            let mut row = 0.0;
            for (k, (up, wp)) in rule.iter().enumerate() {
                let q = t * u + tp * up;
                row += wp * bessel_ratio(q * (s - q)) * inner_tp[k];
            }
            acc += w * inner_t[i] * row;
        }
        8.0 * t * t * tp * tp * acc
    };
    bessel_ratio(t * tp) + single(tp) + single(t) + double
}

/// `F2 = e^{-4 tau} e^{-4 tau'} (tau + tau') [I(tau tau') + 8 tau' int ... + 8 tau int ... + 8 tau tau' int int ...]`
/// by tensor Gauss–Legendre quadrature, checked against the rule with half
/// as many points.
pub fn f2(tau: f64, tau_p: f64, trunc: &Truncation) -> Result<f64> {
    check_nonnegative(tau, tau_p)?;
    let s = tau + tau_p;
    if s == 0.0 {
        return Ok(0.0);
    }
    let prefactor = (-4.0 * s).exp() * s;
    let full = prefactor * f2_bracket(tau, tau_p, &UnitRule::cached(trunc.quad_points));
    let coarse = prefactor * f2_bracket(tau, tau_p, &UnitRule::cached((trunc.quad_points / 2).max(1)));
    let delta = (full - coarse).abs();
    if delta > F2_TOLERANCE * full.abs().max(1.0) {
        return Err(Error::QuadratureNonConvergence { what: "F2", delta });
    }
    Ok(full)
}

/// Exact coefficient of `tau^a tau'^b` in one `j` block.
pub type BlockTerm = (u32, u32, BigRational);

fn sign_pow2(e: u64) -> BigRational {
    let v = BigInt::from(1) << e;
    BigRational::from_integer(if e % 2 == 1 { -v } else { v })
}

/// Blocks `j = 3..=j_max` of `F3` without the common `(tau + tau')`
/// factor: monomials `tau^{S+T} tau'^{T'+T''-S-j}`.
///
/// Per edge the generating function runs over `a = t-1`, `b = t'-1`,
/// `c = t''-1` and `s <= c` with weight
/// `binom(s+a, s) binom(c+b-s, b) / ((a+1)! (b+1)! (c+1)!)`; its `j`-th
/// power is kept up to total excess `a + b + c <= m_max`.
fn f3_blocks_exact(j_max: usize, m_max: usize) -> Vec<Vec<BlockTerm>> {
    let m = m_max as u64;
    let scale = num_traits::pow(factorial(m + 1), 3);
    let mut edge = Poly::default();
    for a in 0..=m {
        for b in 0..=m - a {
            for c in 0..=m - a - b {
                for s in 0..=c {
                    let w = binomial(s + a, s) * binomial(c + b - s, b) * &scale
                        / (factorial(a + 1) * factorial(b + 1) * factorial(c + 1));
                    edge.add_term([a as u16, b as u16, c as u16, s as u16], w);
                }
            }
        }
    }
    let keep = |e: &[u16; 4]| (e[0] + e[1] + e[2]) as usize <= m_max;
    let mut power = Poly::one();
    let mut blocks = Vec::new();
    for j in 1..=j_max {
        power = power.mul_truncated(&edge, keep);
        if j < 3 {
            continue;
        }
        let jj = j as u64;
        let denom = num_traits::pow(scale.clone(), j) * factorial(jj);
        let mut pooled: BTreeMap<(u32, u32), BigRational> = BTreeMap::new();
        for (e, c) in &power.terms {
            let (a, b, cc, s) = (e[0] as u64, e[1] as u64, e[2] as u64, e[3] as u64);
            let (t, tp, tpp) = (a + jj, b + jj, cc + jj);
            let w = BigRational::new(
                c * 2 * factorial(t - 1) * factorial(tp - 1) * factorial(tpp - 1),
                &denom * factorial(s + t - 1) * factorial(tpp + tp - s - jj - 1),
            ) * sign_pow2(t + tp + tpp);
            let key = ((s + t) as u32, (tp + tpp - s - jj) as u32);
            *pooled.entry(key).or_insert_with(BigRational::zero) += w;
        }
        blocks.push(pooled.into_iter().map(|((p, q), c)| (p, q, c)).collect());
    }
    blocks
}

/// Blocks `j = 3..=j_max` of `F4` without the `(tau + tau')` factor, as
/// `(p, u, c)` standing for `c [tau'^p tau^u e^{-2 tau} + tau^p tau'^u e^{-2 tau'}]`.
///
/// The degenerate edge carries `(b_1, c_1, s)` with weight
/// `binom(s+b_1, s) / ((c_1-s)! (b_1+1)! (c_1+1)!)` and is keyed by
/// `u = c_1 - s`; the other edges carry `binom(b+c, b) / ((b+1)! (c+1)!)`.
fn f4_blocks_exact(j_max: usize, m_max: usize) -> Vec<Vec<BlockTerm>> {
    let m = m_max as u64;
    let scale = factorial(m + 1) * factorial(m + 1);
    let scale_first = &scale * factorial(m);
    let mut first = Poly::default();
    let mut other = Poly::default();
    for b in 0..=m {
        for c in 0..=m - b {
            other.add_term(
                [b as u16, c as u16, 0, 0],
                binomial(b + c, b) * &scale / (factorial(b + 1) * factorial(c + 1)),
            );
            for s in 0..=c {
                first.add_term(
                    [b as u16, c as u16, (c - s) as u16, 0],
                    binomial(s + b, s) * &scale_first
                        / (factorial(c - s) * factorial(b + 1) * factorial(c + 1)),
                );
            }
        }
    }
    let keep = |e: &[u16; 4]| (e[0] + e[1]) as usize <= m_max;
    let mut power = first;
    let mut blocks = Vec::new();
    for j in 2..=j_max {
        power = power.mul_truncated(&other, keep);
        if j < 3 {
            continue;
        }
        let jj = j as u64;
        let denom = &scale_first * num_traits::pow(scale.clone(), j - 1) * factorial(jj - 1);
        let mut pooled: BTreeMap<(u32, u32), BigRational> = BTreeMap::new();
        for (e, c) in &power.terms {
            let (b, cc, u) = (e[0] as u64, e[1] as u64, e[2] as u64);
            let (tp, tpp) = (b + jj, cc + jj);
            let w = BigRational::new(
                c * 2 * factorial(tp - 1) * factorial(tpp - 1),
                &denom * factorial(tpp + tp - jj - u - 1),
            ) * sign_pow2(tp + tpp);
            let key = ((tpp + tp - jj - u) as u32, u as u32);
            *pooled.entry(key).or_insert_with(BigRational::zero) += w;
        }
        blocks.push(pooled.into_iter().map(|((p, q), c)| (p, q, c)).collect());
    }
    blocks
}

/// Exact terms of the `j`-th block of `F3` (see [`f3`]).
pub fn f3_degree_profile(j: usize, m_max: usize) -> Vec<BlockTerm> {
    if j < 3 {
        return Vec::new();
    }
    f3_blocks_exact(j, m_max).pop().unwrap_or_default()
}

/// Exact terms of the `j`-th block of `F4` (see [`f4`]).
pub fn f4_degree_profile(j: usize, m_max: usize) -> Vec<BlockTerm> {
    if j < 3 {
        return Vec::new();
    }
    f4_blocks_exact(j, m_max).pop().unwrap_or_default()
}

struct SeriesTables {
    f3: Vec<(i32, i32, f64)>,
    f4: Vec<(i32, i32, f64)>,
}

fn flatten(blocks: Vec<Vec<BlockTerm>>) -> Vec<(i32, i32, f64)> {
    let mut pooled: BTreeMap<(u32, u32), BigRational> = BTreeMap::new();
    for (p, q, c) in blocks.into_iter().flatten() {
        *pooled.entry((p, q)).or_insert_with(BigRational::zero) += c;
    }
    pooled
        .into_iter()
        .map(|((p, q), c)| (p as i32, q as i32, to_f64(&c)))
        .collect()
}

fn tables(trunc: &Truncation) -> Arc<SeriesTables> {
    type Cache = Mutex<HashMap<(usize, usize), Arc<SeriesTables>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let key = (trunc.j_max, trunc.m_max);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().expect("cache poisoned").get(&key) {
        return hit.clone();
    }
    let built = Arc::new(SeriesTables {
        f3: flatten(f3_blocks_exact(trunc.j_max, trunc.m_max)),
        f4: flatten(f4_blocks_exact(trunc.j_max, trunc.m_max)),
    });
    cache.lock().expect("cache poisoned").insert(key, built.clone());
    built
}

/// Orbits on `j >= 3` edges, none of them on a single edge.
pub fn f3(tau: f64, tau_p: f64, trunc: &Truncation) -> Result<f64> {
    check_series_domain(tau, tau_p)?;
    let sum: f64 = tables(trunc)
        .f3
        .iter()
        .map(|&(p, q, c)| c * tau.powi(p) * tau_p.powi(q))
        .sum();
    Ok((tau + tau_p) * sum)
}

/// Orbits on `j >= 3` edges with one degenerate single-edge orbit.
pub fn f4(tau: f64, tau_p: f64, trunc: &Truncation) -> Result<f64> {
    check_series_domain(tau, tau_p)?;
    let (e, ep) = ((-2.0 * tau).exp(), (-2.0 * tau_p).exp());
    let sum: f64 = tables(trunc)
        .f4
        .iter()
        .map(|&(p, u, c)| c * (tau_p.powi(p) * tau.powi(u) * e + tau.powi(p) * tau_p.powi(u) * ep))
        .sum();
    Ok((tau + tau_p) * sum)
}

pub fn f_total(tau: f64, tau_p: f64, trunc: &Truncation) -> Result<f64> {
    Ok(Components::evaluate(tau, tau_p, trunc)?.total())
}

/// `2 - 6 tau - 6 tau' + 16 tau tau' + 8 tau^2 + 8 tau'^2`.
pub fn f_expansion(tau: f64, tau_p: f64) -> f64 {
    2.0 - 6.0 * tau - 6.0 * tau_p + 16.0 * tau * tau_p + 8.0 * tau * tau + 8.0 * tau_p * tau_p
}
