//! Composite Gauss–Legendre rules on the unit interval.

use gauss_quad::legendre::GaussLegendre;
use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

/// Points per panel for composite rules.
pub const PANEL_ORDER: usize = 16;

/// Nodes and weights on `[0, 1]`; weights sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl UnitRule {
    /// `points` nodes in total: panels of [`PANEL_ORDER`] when `points` is a
    /// multiple of it, otherwise a single Gauss–Legendre panel.
    pub fn new(points: usize) -> Self {
        let points = points.max(1);
        let (panels, order) = if points >= PANEL_ORDER && points % PANEL_ORDER == 0 {
            (points / PANEL_ORDER, PANEL_ORDER)
        } else {
            (1, points)
        };
        let gl = GaussLegendre::new(NonZeroUsize::new(order).expect("order >= 1"));
        let width = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(points);
        let mut weights = Vec::with_capacity(points);
        for p in 0..panels {
            let a = p as f64 * width;
            for &(x, w) in gl.as_node_weight_pairs() {
                nodes.push(a + 0.5 * width * (x + 1.0));
                weights.push(0.5 * width * w);
            }
        }
        Self { nodes, weights }
    }

    /// Shared, lazily built rule for `points` nodes.
    pub fn cached(points: usize) -> Arc<UnitRule> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<UnitRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(points)
            .or_insert_with(|| Arc::new(UnitRule::new(points)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(a + h * x))
            .sum::<f64>()
            * h
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for n in [1, 5, 16, 32, 64, 128] {
            let r = UnitRule::new(n);
            assert_eq!(r.len(), n);
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(r.nodes.iter().all(|&x| x > 0.0 && x < 1.0));
        }
    }

    #[test]
    fn integrates_smooth_functions() {
        let r = UnitRule::new(64);
        let v = r.integrate(0.0, std::f64::consts::PI, f64::sin);
        assert!((v - 2.0).abs() < 1e-14);
        let e = r.integrate(-1.0, 2.0, f64::exp);
        assert!((e - (2f64.exp() - (-1f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn cached_is_shared() {
        let a = UnitRule::cached(48);
        let b = UnitRule::cached(48);
        assert!(Arc::ptr_eq(&a, &b));
    }
}
