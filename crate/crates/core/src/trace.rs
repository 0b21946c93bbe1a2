//! Gaussian-smoothed spectral density, from the periodic-orbit sum and
//! from an explicit spectrum.

use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::graph::StarGraph;
use crate::orbits::{amplitude, necklaces, repetition_number};
use crate::spectrum::Spectrum;

/// Default cap on `v^k_max`, the size of the word space scanned.
pub const DEFAULT_ORBIT_BUDGET: u128 = 100_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedDensity {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub sigma: f64,
    /// Longest orbit period `2 k_max` included; 0 for spectral densities.
    pub max_period: usize,
}

/// All orbits sharing a visit vector have the same length; their weights
/// `(l_p / r_p) A_p` are pooled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitTerm {
    pub length: f64,
    pub weight: f64,
}

fn check_grid(grid: &[f64], sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma must be positive"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("grid must be strictly increasing"));
    }
    Ok(())
}

/// Pooled orbit contributions for half-periods `1..=k_max`.
pub fn orbit_terms(graph: &StarGraph, k_max: usize, budget: u128) -> Result<Vec<OrbitTerm>> {
    let v = graph.v();
    let needed = (v as u128).checked_pow(k_max as u32).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let lengths = graph.lengths();
    let per_k: Vec<Vec<OrbitTerm>> = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let mut pooled: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
            for word in necklaces(v as u32, k) {
                let mut visits = vec![0u32; v];
                for &c in word.letters() {
                    visits[c as usize - 1] += 1;
                }
                let a = amplitude(&word, v) / repetition_number(&word) as f64;
                *pooled.entry(visits).or_default() += a;
            }
            pooled
                .into_iter()
                .filter(|(_, a)| *a != 0.0)
                .map(|(visits, a)| {
                    let length = 2.0
                        * visits
                            .iter()
                            .zip(lengths)
                            .map(|(&n, &l)| n as f64 * l)
                            .sum::<f64>();
                    OrbitTerm {
                        length,
                        weight: length * a,
                    }
                })
                .collect()
        })
        .collect();
    Ok(per_k.into_iter().flatten().collect())
}

/// Truncated trace formula with each oscillatory term convolved with a
/// Gaussian of width `sigma`: `L / 2pi + (1/pi) sum w cos(lambda l) exp(-sigma^2 l^2 / 2)`.
pub fn density_from_orbits(
    graph: &StarGraph,
    grid: &[f64],
    sigma: f64,
    k_max: usize,
    budget: u128,
) -> Result<SmoothedDensity> {
    check_grid(grid, sigma)?;
    let terms = orbit_terms(graph, k_max, budget)?;
    let damped: Vec<(f64, f64)> = terms
        .iter()
        .map(|t| (t.length, t.weight * (-0.5 * (sigma * t.length).powi(2)).exp()))
        .collect();
    let weyl = graph.total_length() / (2.0 * PI);
    let values = grid
        .par_iter()
        .map(|&x| weyl + damped.iter().map(|&(l, w)| w * (x * l).cos()).sum::<f64>() / PI)
        .collect();
    Ok(SmoothedDensity {
        grid: grid.to_vec(),
        values,
        sigma,
        max_period: 2 * k_max,
    })
}

/// Sum of unit-mass Gaussians centred on the eigenvalues.
pub fn density_from_spectrum(spectrum: &Spectrum, grid: &[f64], sigma: f64) -> Result<SmoothedDensity> {
    check_grid(grid, sigma)?;
    let hi = spectrum.lambda_max() - 5.0 * sigma;
    if let Some(bad) = grid.iter().find(|&&x| !(x > 0.0 && x < hi)) {
        return Err(invalid(format!("grid point {bad} outside (0, {hi})")));
    }
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let levels = spectrum.eigenvalues();
    let values = grid
        .par_iter()
        .map(|&x| {
            // only levels within 12 sigma matter at double precision
            let lo = levels.partition_point(|&e| e < x - 12.0 * sigma);
            let hi = levels.partition_point(|&e| e <= x + 12.0 * sigma);
            levels[lo..hi]
                .iter()
                .map(|&e| norm * (-0.5 * ((x - e) / sigma).powi(2)).exp())
                .sum()
        })
        .collect();
    Ok(SmoothedDensity {
        grid: grid.to_vec(),
        values,
        sigma,
        max_period: 0,
    })
}

/// `||a - b|| / ||b||` over a shared grid.
pub fn relative_l2_distance(a: &SmoothedDensity, b: &SmoothedDensity) -> Result<f64> {
    if a.grid != b.grid {
        return Err(invalid("densities live on different grids"));
    }
    let diff: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).powi(2)).sum();
    let norm: f64 = b.values.iter().map(|y| y * y).sum();
    Ok((diff / norm).sqrt())
}

/// Evenly spaced grid from `start` to `end` inclusive.
pub fn uniform_grid(start: f64, end: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let h = (end - start) / (points - 1) as f64;
            (0..points).map(|i| start + i as f64 * h).collect()
        }
    }
}
