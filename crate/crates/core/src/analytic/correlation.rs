//! Two- and three-point correlation functions as cosine transforms of
//! the form factor and of the three-point kernel.

use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use super::formfactor::k_formfactor;
use super::kernel::Components;
use super::Truncation;
use crate::error::Result;
use crate::quadrature::UnitRule;

/// Upper limit of every time integral in this module.
///
/// The `K` and `F3`/`F4` series are small-time expansions whose truncated
/// partial sums stop converging near `tau = 1/4`, so the transforms are
/// taken over `[0, min(tau_cutoff, TRANSFORM_WINDOW)]`.
pub const TRANSFORM_WINDOW: f64 = 0.15;

fn window(trunc: &Truncation) -> f64 {
    trunc.tau_cutoff.min(TRANSFORM_WINDOW)
}

/// `1 + int_{-W}^{W} k(|tau|) cos(2 pi x tau) d tau` for any form factor.
pub fn r2_with(x: f64, trunc: &Truncation, k: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    trunc.validate()?;
    let w = window(trunc);
    let rule = UnitRule::cached(trunc.quad_points);
    let mut acc = 0.0;
    for (u, weight) in rule.iter() {
        let tau = w * u;
        acc += weight * k(tau)? * (2.0 * PI * x * tau).cos();
    }
    Ok(1.0 + 2.0 * w * acc)
}

/// Two-point correlation function from the truncated form factor.
pub fn r2_analytic(x: f64, trunc: &Truncation) -> Result<f64> {
    r2_with(x, trunc, |tau| k_formfactor(tau, trunc))
}

/// Sum of the three cosines pairing the kernel with the offsets `(x, y)`.
fn three_cosines(x: f64, y: f64, t: f64, tp: f64) -> f64 {
    let c = |phase: f64| (2.0 * PI * phase).cos();
    c(y * t + (y - x) * tp) + c(y * tp - x * (t + tp)) + c(y * t + x * tp)
}

/// Kernel components tabulated on a tensor grid of times.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel3 {
    taus: Vec<f64>,
    values: Vec<Components>,
}

impl Kernel3 {
    /// Evaluates `F1..F4` at every `(taus[i], taus[k])`.
    pub fn evaluate(taus: &[f64], trunc: &Truncation) -> Result<Self> {
        let n = taus.len();
        let values = (0..n * n)
            .into_par_iter()
            .map(|idx| Components::evaluate(taus[idx / n], taus[idx % n], trunc))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            taus: taus.to_vec(),
            values,
        })
    }

    /// Tabulates an arbitrary kernel, stored as its `f1` component.
    pub fn from_fn(taus: &[f64], f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let n = taus.len();
        let values = (0..n * n)
            .into_par_iter()
            .map(|idx| Components {
                f1: f(taus[idx / n], taus[idx % n]),
                ..Default::default()
            })
            .collect();
        Self {
            taus: taus.to_vec(),
            values,
        }
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn components(&self, i: usize, k: usize) -> Components {
        self.values[i * self.taus.len() + k]
    }

    pub fn total(&self, i: usize, k: usize) -> f64 {
        self.components(i, k).total()
    }

    /// Largest `|F(a, b) - F(b, a)|` over the grid, for the total and for
    /// `F3` alone.
    pub fn asymmetry(&self) -> (f64, f64) {
        let n = self.taus.len();
        let mut worst = (0.0f64, 0.0f64);
        for i in 0..n {
            for k in i + 1..n {
                let (a, b) = (self.components(i, k), self.components(k, i));
                worst.0 = worst.0.max((a.total() - b.total()).abs());
                worst.1 = worst.1.max((a.f3 - b.f3).abs());
            }
        }
        worst
    }
}

/// Three-point connected part on a fixed quadrature grid, reusable across
/// many `(x, y)`.
#[derive(Debug, Clone)]
pub struct R3Evaluator {
    window: f64,
    weights: Vec<f64>,
    kernel: Kernel3,
}

impl R3Evaluator {
    pub fn new(trunc: &Truncation) -> Result<Self> {
        trunc.validate()?;
        let (window, rule) = (window(trunc), UnitRule::cached(trunc.quad_points));
        let taus: Vec<f64> = rule.nodes.iter().map(|&u| window * u).collect();
        Ok(Self {
            window,
            weights: rule.weights.clone(),
            kernel: Kernel3::evaluate(&taus, trunc)?,
        })
    }

    /// Same grid, arbitrary kernel (e.g. `F = 0` for Poisson levels).
    pub fn with_kernel(trunc: &Truncation, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        trunc.validate()?;
        let (window, rule) = (window(trunc), UnitRule::cached(trunc.quad_points));
        let taus: Vec<f64> = rule.nodes.iter().map(|&u| window * u).collect();
        Ok(Self {
            window,
            weights: rule.weights.clone(),
            kernel: Kernel3::from_fn(&taus, f),
        })
    }

    /// Shared evaluator for the true kernel, built once per truncation.
    pub fn cached(trunc: &Truncation) -> Result<Arc<Self>> {
        type Key = (usize, usize, usize, u64);
        static CACHE: OnceLock<Mutex<HashMap<Key, Arc<R3Evaluator>>>> = OnceLock::new();
        let key = (trunc.j_max, trunc.m_max, trunc.quad_points, trunc.tau_cutoff.to_bits());
        let cache = CACHE.get_or_init(Default::default);
        if let Some(hit) = cache.lock().expect("cache poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let built = Arc::new(Self::new(trunc)?);
        cache.lock().expect("cache poisoned").insert(key, built.clone());
        Ok(built)
    }

    pub fn kernel(&self) -> &Kernel3 {
        &self.kernel
    }

    pub fn connected(&self, x: f64, y: f64) -> f64 {
        let taus = self.kernel.taus();
        let mut acc = 0.0;
        for (i, (&t, &wi)) in taus.iter().zip(&self.weights).enumerate() {
            let mut row = 0.0;
            for (k, (&tp, &wk)) in taus.iter().zip(&self.weights).enumerate() {
                row += wk * three_cosines(x, y, t, tp) * self.kernel.total(i, k);
            }
            acc += wi * row;
        }
        acc * self.window * self.window
    }
}

/// `int int [cos 2pi(y tau + (y-x) tau') + cos 2pi(y tau' - x(tau+tau'))
///  + cos 2pi(y tau + x tau')] F(tau, tau') d tau d tau'`.
pub fn r3_connected(x: f64, y: f64, trunc: &Truncation) -> Result<f64> {
    Ok(R3Evaluator::cached(trunc)?.connected(x, y))
}

pub fn r3_connected_with(
    x: f64,
    y: f64,
    trunc: &Truncation,
    f: impl Fn(f64, f64) -> f64 + Sync,
) -> Result<f64> {
    Ok(R3Evaluator::with_kernel(trunc, f)?.connected(x, y))
}

/// `R2(x) + R2(y) + R2(x - y) - 2 + connected part`.
pub fn r3_full(x: f64, y: f64, trunc: &Truncation) -> Result<f64> {
    let pairs = r2_analytic(x, trunc)? + r2_analytic(y, trunc)? + r2_analytic(x - y, trunc)?;
    Ok(pairs - 2.0 + r3_connected(x, y, trunc)?)
}

/// [`r3_full`] with surrogate form factor and kernel.
pub fn r3_full_with(
    x: f64,
    y: f64,
    trunc: &Truncation,
    k: impl Fn(f64) -> Result<f64> + Copy,
    f: impl Fn(f64, f64) -> f64 + Sync,
) -> Result<f64> {
    let pairs = r2_with(x, trunc, k)? + r2_with(y, trunc, k)? + r2_with(x - y, trunc, k)?;
    Ok(pairs - 2.0 + r3_connected_with(x, y, trunc, f)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t() -> Truncation {
        Truncation::default()
    }

    #[test]
    fn poisson_surrogates() {
        for x in [0.0, 0.3, 1.7] {
            assert_eq!(r2_with(x, &t(), |_| Ok(0.0)).unwrap(), 1.0);
            let r3 = r3_full_with(x, 0.4, &t(), |_| Ok(0.0), |_, _| 0.0).unwrap();
            assert_eq!(r3, 1.0);
        }
    }

    #[test]
    fn r2_even_and_zero_frequency() {
        let a = r2_analytic(0.7, &t()).unwrap();
        let b = r2_analytic(-0.7, &t()).unwrap();
        assert!((a - b).abs() < 1e-14);
        let w = TRANSFORM_WINDOW;
        let integral = UnitRule::new(64).integrate(0.0, w, |tau| k_formfactor(tau, &t()).unwrap());
        assert!((r2_analytic(0.0, &t()).unwrap() - (1.0 + 2.0 * integral)).abs() < 1e-12);
    }

    #[test]
    fn constant_kernel_transform() {
        // F = 1 at x = y = 0 integrates to 3 W^2
        let w = TRANSFORM_WINDOW;
        let v = r3_connected_with(0.0, 0.0, &t(), |_, _| 1.0).unwrap();
        assert!((v - 3.0 * w * w).abs() < 1e-13);
        assert_eq!(three_cosines(0.4, 1.3, 0.0, 0.0), 3.0);
    }

    #[test]
    fn kernel_grid_is_symmetric() {
        let taus = [0.01, 0.05, 0.1, 0.14];
        let k = Kernel3::evaluate(&taus, &t()).unwrap();
        let (total, _) = k.asymmetry();
        assert!(total < 1e-8);
        let c = k.components(1, 2);
        assert!((c.total() - (c.f1 + c.f2 + c.f3 + c.f4)).abs() < 1e-15);
    }
}
