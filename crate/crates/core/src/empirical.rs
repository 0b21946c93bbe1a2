//! Monte Carlo estimates of the two- and three-point correlation
//! functions from unfolded spectra.
//!
//! Each realization contributes a kernel-smoothed pair (or triple)
//! density per reference level; reference levels are restricted to the
//! interior of the spectrum so that every partner they can see lies at
//! least five kernel widths inside the edges. Estimates are averages over
//! realizations and standard errors come from their scatter.

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::graph::{derive_seed, unit_interval, StarGraph};
use crate::spectrum::{solve_spectrum_window, Spectrum};

/// Kernel support in widths.
const SUPPORT: f64 = 5.0;

/// Below this many contributing pairs a grid point is flagged as sparse.
pub const SPARSE_PAIRS: u64 = 10_000;

/// Default Gaussian kernel width in mean spacings.
pub const DEFAULT_KERNEL_WIDTH: f64 = 0.08;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub v: usize,
    pub realizations: usize,
    pub lambda_max: f64,
    /// Levels at or below this wavenumber are discarded; the low end of a
    /// star spectrum is dominated by clusters near the tan poles.
    #[serde(default)]
    pub lambda_min: f64,
    pub seed: u64,
    pub kernel_width: f64,
    /// Offsets `x` for the two-point estimate.
    pub x_grid: Vec<f64>,
    /// Offset pairs `(x, y)` for the three-point estimate.
    pub xy_grid: Vec<(f64, f64)>,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.v == 0 {
            return Err(invalid("v must be at least 1"));
        }
        if self.realizations == 0 {
            return Err(invalid("realizations must be at least 1"));
        }
        if !(self.kernel_width > 0.0 && self.kernel_width.is_finite()) {
            return Err(invalid("kernel_width must be positive"));
        }
        if !(self.lambda_max > 0.0 && self.lambda_max.is_finite()) {
            return Err(invalid("lambda_max must be positive"));
        }
        if !(self.lambda_min >= 0.0 && self.lambda_min < self.lambda_max) {
            return Err(invalid("lambda_min must lie in [0, lambda_max)"));
        }
        Ok(())
    }
}

/// One unfolded realization: levels sorted inside `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Levels {
    pub values: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    /// Evaluation points: `[x]` or `[x, y]`.
    pub points: Vec<Vec<f64>>,
    pub estimate: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Contributing pairs (or triples) summed over realizations.
    pub pairs: Vec<u64>,
    pub kernel_width: f64,
    pub realizations: usize,
    pub warnings: Vec<String>,
    pub config: Option<EnsembleConfig>,
}

/// Eigenvalues rescaled by the mean density `L / 2pi`.
pub fn unfold(spectrum: &Spectrum) -> Vec<f64> {
    let scale = spectrum.graph().total_length / (2.0 * PI);
    spectrum.eigenvalues().iter().map(|&e| e * scale).collect()
}

fn unfolded_levels(spectrum: &Spectrum) -> Levels {
    let scale = spectrum.graph().total_length / (2.0 * PI);
    Levels {
        values: unfold(spectrum),
        lo: spectrum.lambda_min() * scale,
        hi: spectrum.lambda_max() * scale,
    }
}

/// Solved and unfolded spectra of `config.realizations` random graphs.
pub fn star_ensemble(config: &EnsembleConfig) -> Result<Vec<Levels>> {
    config.validate()?;
    (0..config.realizations as u64)
        .into_par_iter()
        .map(|i| {
            let graph = StarGraph::random(config.v, derive_seed(config.seed, i))?;
            Ok(unfolded_levels(&solve_spectrum_window(&graph, config.lambda_min, config.lambda_max)?))
        })
        .collect()
}

/// Unit-rate uncorrelated levels on `[0, n]`.
pub fn poisson_levels(n: usize, seed: u64) -> Levels {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut values: Vec<f64> = (0..n).map(|_| n as f64 * unit_interval(rng.next_u64())).collect();
    values.sort_by(f64::total_cmp);
    Levels {
        values,
        lo: 0.0,
        hi: n as f64,
    }
}

/// Integers shifted by one uniform offset, on `[0, n]`.
pub fn picket_fence(n: usize, seed: u64) -> Levels {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let shift = unit_interval(rng.next_u64());
    Levels {
        values: (0..n).map(|i| i as f64 + shift).collect(),
        lo: 0.0,
        hi: n as f64,
    }
}

struct Kernel {
    width: f64,
    norm: f64,
}

impl Kernel {
    fn new(width: f64) -> Self {
        // normalized over the truncated support
        let mass = erf_5_over_sqrt2();
        Self {
            width,
            norm: 1.0 / (width * (2.0 * PI).sqrt() * mass),
        }
    }

    fn reach(&self) -> f64 {
        SUPPORT * self.width
    }

    fn eval(&self, d: f64) -> f64 {
        if d.abs() > self.reach() {
            0.0
        } else {
            self.norm * (-0.5 * (d / self.width).powi(2)).exp()
        }
    }
}

/// Gaussian mass within five standard deviations.
fn erf_5_over_sqrt2() -> f64 {
    1.0 - 5.733_031_437_583_878_6e-7
}

/// Offsets `e_i - e_j` of the partners of each interior reference level.
fn neighbourhoods(levels: &Levels, reach: f64, margin: f64) -> Vec<Vec<f64>> {
    let v = &levels.values;
    let (lo, hi) = (levels.lo + margin, levels.hi - margin);
    let first = v.partition_point(|&e| e < lo);
    let last = v.partition_point(|&e| e <= hi);
    (first..last)
        .map(|i| {
            let a = v.partition_point(|&e| e < v[i] - reach);
            let b = v.partition_point(|&e| e <= v[i] + reach);
            (a..b).filter(|&j| j != i).map(|j| v[i] - v[j]).collect()
        })
        .collect()
}

fn summarize(per_realization: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let r = per_realization.len();
    let points = per_realization.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; points];
    let mut se = vec![0.0; points];
    for p in 0..points {
        let m = per_realization.iter().map(|row| row[p]).sum::<f64>() / r as f64;
        mean[p] = m;
        if r > 1 {
            let var = per_realization.iter().map(|row| (row[p] - m).powi(2)).sum::<f64>() / (r - 1) as f64;
            se[p] = (var / r as f64).sqrt();
        }
    }
    (mean, se)
}

fn sparse_warnings(points: &[Vec<f64>], pairs: &[u64]) -> Vec<String> {
    let sparse: Vec<String> = points
        .iter()
        .zip(pairs)
        .filter(|(_, &n)| n < SPARSE_PAIRS)
        .map(|(p, n)| format!("{p:?}: {n}"))
        .collect();
    if sparse.is_empty() {
        return Vec::new();
    }
    let msg = format!(
        "{} grid point(s) have fewer than {SPARSE_PAIRS} contributing pairs ({})",
        sparse.len(),
        sparse.join(", ")
    );
    log::warn!("{msg}");
    vec![msg]
}

fn check_levels(realizations: &[Levels], width: f64) -> Result<()> {
    if realizations.is_empty() {
        return Err(invalid("need at least one realization"));
    }
    if !(width > 0.0 && width.is_finite()) {
        return Err(invalid("kernel width must be positive"));
    }
    Ok(())
}

/// Two-point function at each `x` from already unfolded realizations.
pub fn estimate_r2_from_levels(realizations: &[Levels], grid: &[f64], width: f64) -> Result<CorrelationEstimate> {
    check_levels(realizations, width)?;
    let kernel = Kernel::new(width);
    let span = grid.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let reach = span + kernel.reach();
    let margin = reach + kernel.reach();
    let rows: Vec<(Vec<f64>, Vec<u64>)> = realizations
        .par_iter()
        .map(|levels| {
            let hoods = neighbourhoods(levels, reach, margin);
            let n_ref = hoods.len().max(1) as f64;
            let mut sums = vec![0.0; grid.len()];
            let mut pairs = vec![0u64; grid.len()];
            for offsets in &hoods {
                for (p, &x) in grid.iter().enumerate() {
                    for &d in offsets {
                        let g = kernel.eval(x - d);
                        if g > 0.0 {
                            sums[p] += g;
                            pairs[p] += 1;
                        }
                    }
                }
            }
            (sums.into_iter().map(|s| s / n_ref).collect(), pairs)
        })
        .collect();
    let values: Vec<Vec<f64>> = rows.iter().map(|r| r.0.clone()).collect();
    let pairs: Vec<u64> = (0..grid.len()).map(|p| rows.iter().map(|r| r.1[p]).sum()).collect();
    let (estimate, stderr) = summarize(&values);
    let points: Vec<Vec<f64>> = grid.iter().map(|&x| vec![x]).collect();
    Ok(CorrelationEstimate {
        warnings: sparse_warnings(&points, &pairs),
        points,
        estimate,
        stderr,
        pairs,
        kernel_width: width,
        realizations: realizations.len(),
        config: None,
    })
}

/// The six relabelings of a level triple, sorted so that the result does
/// not depend on which of them was asked for.
fn relabelings(x: f64, y: f64) -> [(f64, f64); 6] {
    let mut out = [(x, y), (y, x), (-x, y - x), (y - x, -x), (-y, x - y), (x - y, -y)];
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    out
}

/// Triple density at one `(x, y)` for one reference level:
/// `sum_{j != k} g(x - d_j) g(y - d_k)` and the number of contributing
/// ordered partner pairs.
fn triple_density(kernel: &Kernel, offsets: &[f64], x: f64, y: f64) -> (f64, u64) {
    let (mut sx, mut sy, mut sxy) = (0.0, 0.0, 0.0);
    let (mut nx, mut ny, mut nxy) = (0u64, 0u64, 0u64);
    for &d in offsets {
        let gx = kernel.eval(x - d);
        let gy = kernel.eval(y - d);
        if gx > 0.0 {
            sx += gx;
            nx += 1;
        }
        if gy > 0.0 {
            sy += gy;
            ny += 1;
        }
        if gx > 0.0 && gy > 0.0 {
            sxy += gx * gy;
            nxy += 1;
        }
    }
    (sx * sy - sxy, nx * ny - nxy)
}

/// Three-point function at each `(x, y)`, symmetrized over the six
/// relabelings of the level triple.
pub fn estimate_r3_from_levels(
    realizations: &[Levels],
    grid: &[(f64, f64)],
    width: f64,
) -> Result<CorrelationEstimate> {
    check_levels(realizations, width)?;
    let kernel = Kernel::new(width);
    let span = grid
        .iter()
        .fold(0.0f64, |m, &(x, y)| m.max(x.abs()).max(y.abs()).max((x - y).abs()));
    let reach = span + kernel.reach();
    let margin = reach + kernel.reach();
    let images: Vec<[(f64, f64); 6]> = grid.iter().map(|&(x, y)| relabelings(x, y)).collect();
    let rows: Vec<(Vec<f64>, Vec<u64>)> = realizations
        .par_iter()
        .map(|levels| {
            let hoods = neighbourhoods(levels, reach, margin);
            let n_ref = hoods.len().max(1) as f64;
            let mut sums = vec![[0.0f64; 6]; grid.len()];
            let mut triples = vec![0u64; grid.len()];
            for offsets in &hoods {
                for (p, imgs) in images.iter().enumerate() {
                    for (slot, &(x, y)) in imgs.iter().enumerate() {
                        let (s, n) = triple_density(&kernel, offsets, x, y);
                        sums[p][slot] += s;
                        if slot == 0 {
                            triples[p] += n;
                        }
                    }
                }
            }
            let values = sums
                .iter()
                .map(|s| s.iter().sum::<f64>() / (6.0 * n_ref))
                .collect();
            (values, triples)
        })
        .collect();
    let values: Vec<Vec<f64>> = rows.iter().map(|r| r.0.clone()).collect();
    let pairs: Vec<u64> = (0..grid.len()).map(|p| rows.iter().map(|r| r.1[p]).sum()).collect();
    let (estimate, stderr) = summarize(&values);
    let points: Vec<Vec<f64>> = grid.iter().map(|&(x, y)| vec![x, y]).collect();
    Ok(CorrelationEstimate {
        warnings: sparse_warnings(&points, &pairs),
        points,
        estimate,
        stderr,
        pairs,
        kernel_width: width,
        realizations: realizations.len(),
        config: None,
    })
}

/// Two-point estimate over a star-graph ensemble.
pub fn estimate_r2(config: &EnsembleConfig) -> Result<CorrelationEstimate> {
    let levels = star_ensemble(config)?;
    let mut est = estimate_r2_from_levels(&levels, &config.x_grid, config.kernel_width)?;
    est.config = Some(config.clone());
    Ok(est)
}

/// Three-point estimate over a star-graph ensemble.
pub fn estimate_r3(config: &EnsembleConfig) -> Result<CorrelationEstimate> {
    let levels = star_ensemble(config)?;
    let mut est = estimate_r3_from_levels(&levels, &config.xy_grid, config.kernel_width)?;
    est.config = Some(config.clone());
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{solve_spectrum, GraphId, Spectrum};

    fn poisson_set(count: usize, n: usize, seed: u64) -> Vec<Levels> {
        (0..count as u64).map(|i| poisson_levels(n, derive_seed(seed, i))).collect()
    }

    #[test]
    fn unfold_interval() {
        let g = StarGraph::from_lengths(vec![1.0], 0).unwrap();
        let s = solve_spectrum(&g, 10.0).unwrap();
        let u = unfold(&s);
        assert_eq!(u.len(), 3);
        for (k, x) in u.iter().enumerate() {
            assert!((x - (k + 1) as f64).abs() < 1e-12);
        }
        let single = Spectrum::new(vec![2.0], 10.0, GraphId { v: 1, seed: 0, total_length: 2.0 }).unwrap();
        assert_eq!(unfold(&single).len(), 1);
    }

    #[test]
    fn unfolded_spacing_is_one() {
        let g = StarGraph::random(20, 4).unwrap();
        let s = solve_spectrum(&g, 120.0).unwrap();
        let u = unfold(&s);
        assert!(u.len() >= 200);
        let mean = (u[u.len() - 1] - u[0]) / (u.len() - 1) as f64;
        assert!((mean - 1.0).abs() < 0.03, "{mean}");
    }

    #[test]
    fn kernel_has_unit_mass() {
        let k = Kernel::new(0.08);
        let n = 20_000;
        let h = 2.0 * k.reach() / n as f64;
        let mass: f64 = (0..=n).map(|i| k.eval(-k.reach() + i as f64 * h)).sum::<f64>() * h;
        assert!((mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn poisson_r2_is_flat() {
        let levels = poisson_set(40, 2000, 5);
        let grid: Vec<f64> = (0..12).map(|i| 0.25 + 0.25 * i as f64).collect();
        let est = estimate_r2_from_levels(&levels, &grid, 0.08).unwrap();
        for p in 0..grid.len() {
            assert!((est.estimate[p] - 1.0).abs() < 3.0 * est.stderr[p], "x={} {}", grid[p], est.estimate[p]);
        }
    }

    #[test]
    fn picket_fence_peaks() {
        let levels: Vec<Levels> = (0..5).map(|i| picket_fence(500, i)).collect();
        let est = estimate_r2_from_levels(&levels, &[0.5, 1.0, 1.5, 2.0], 0.08).unwrap();
        assert!(est.estimate[0] < 1e-6 && est.estimate[2] < 1e-6);
        let peak = 1.0 / (0.08 * (2.0 * PI).sqrt() * erf_5_over_sqrt2());
        assert!((est.estimate[1] - peak).abs() < 1e-9 && (est.estimate[3] - peak).abs() < 1e-9);
    }

    #[test]
    fn r3_exactly_symmetric() {
        let levels = poisson_set(4, 600, 9);
        let est = estimate_r3_from_levels(&levels, &[(0.5, 1.25), (1.25, 0.5), (-0.5, 0.75)], 0.08).unwrap();
        assert_eq!(est.estimate[0], est.estimate[1]);
        assert_eq!(est.estimate[0], est.estimate[2]);
    }

    #[test]
    fn poisson_r3_is_flat() {
        let levels = poisson_set(40, 2000, 6);
        let grid = [(0.5, 1.0), (1.0, 2.0), (0.4, 1.5), (1.5, 2.5)];
        let est = estimate_r3_from_levels(&levels, &grid, 0.08).unwrap();
        for p in 0..grid.len() {
            assert!((est.estimate[p] - 1.0).abs() < 3.0 * est.stderr[p], "{:?} {}", grid[p], est.estimate[p]);
        }
    }

    #[test]
    fn stderr_scales_with_ensemble_size() {
        let grid = [0.5, 1.0, 1.5, 2.0];
        let small = estimate_r2_from_levels(&poisson_set(50, 1000, 1), &grid, 0.08).unwrap();
        let large = estimate_r2_from_levels(&poisson_set(200, 1000, 2), &grid, 0.08).unwrap();
        for p in 0..grid.len() {
            let ratio = small.stderr[p] / large.stderr[p];
            assert!((1.5..2.6).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn edges_are_excluded() {
        // a level near the edge never acts as reference
        let levels = Levels {
            values: vec![0.1, 0.6],
            lo: 0.0,
            hi: 0.7,
        };
        let est = estimate_r2_from_levels(&[levels], &[0.5], 0.08).unwrap();
        assert_eq!(est.pairs[0], 0);
        assert_eq!(est.estimate[0], 0.0);
        assert_eq!(est.warnings.len(), 1);
    }

    #[test]
    fn ensemble_is_deterministic() {
        let cfg = EnsembleConfig {
            v: 5,
            realizations: 3,
            lambda_max: 40.0,
            lambda_min: 0.0,
            seed: 3,
            kernel_width: 0.08,
            x_grid: vec![0.5, 1.0],
            xy_grid: vec![(0.5, 1.0)],
        };
        let a = estimate_r2(&cfg).unwrap();
        let b = estimate_r2(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(estimate_r2(&EnsembleConfig { realizations: 0, ..cfg }).is_err());
    }
}
