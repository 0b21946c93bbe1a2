//! Eigenvalues of a star graph.
//!
//! On edge `i` (coordinate `x` measured from the center) a Neumann outer
//! vertex forces `psi_i(x) = a_i cos(lambda (l_i - x))`. Continuity and the
//! current condition at the center then reduce the eigenvalue problem to
//! `sum_i tan(lambda l_i) = 0`. Each branch of `tan` is increasing, so the
//! sum climbs from `-inf` to `+inf` between consecutive poles and carries
//! exactly one root per inter-pole interval.
//!
//! The determinant form `det(I - exp(-i lambda L) S)` over the `2v` directed
//! edges is kept as an independent check.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::graph::StarGraph;

/// Relative distance to a pole of `tan` below which [`secular_tan`] refuses
/// to evaluate (`|cos(lambda l_i)|` below this).
pub const POLE_TOLERANCE: f64 = 1e-10;

/// Target absolute accuracy of eigenvalues.
pub const ROOT_TOLERANCE: f64 = 1e-12;

const MAX_ITERATIONS: usize = 200;

/// Identifies the graph a spectrum came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphId {
    pub v: usize,
    pub seed: u64,
    pub total_length: f64,
}

impl From<&StarGraph> for GraphId {
    fn from(g: &StarGraph) -> Self {
        GraphId {
            v: g.v(),
            seed: g.seed(),
            total_length: g.total_length(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    lambda_max: f64,
    lambda_min: f64,
    graph: GraphId,
}

impl Spectrum {
    /// Wraps externally produced levels; they must be strictly increasing and
    /// lie in `(0, lambda_max]`.
    pub fn new(eigenvalues: Vec<f64>, lambda_max: f64, graph: GraphId) -> Result<Self> {
        if eigenvalues.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
            return Err(invalid("eigenvalues must be strictly increasing"));
        }
        if eigenvalues.iter().any(|&e| !(e > 0.0 && e <= lambda_max)) {
            return Err(invalid("eigenvalues must lie in (0, lambda_max]"));
        }
        Ok(Self {
            eigenvalues,
            lambda_max,
            lambda_min: 0.0,
            graph,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Lower edge of the solved window; 0 for full spectra.
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn graph(&self) -> GraphId {
        self.graph
    }
}

/// Directed-edge scattering matrix. Index `i` is the edge `(0, i)` leaving
/// the center, `v + i` the edge `(i, 0)` arriving at it. Entry `[a, b]` is the
/// amplitude for continuing from edge `b` into edge `a`.
fn scattering_matrix(v: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(2 * v, 2 * v);
    let t = 2.0 / v as f64;
    for i in 0..v {
        // (0,i) -> (i,0): reflection at the outer vertex
        s[(v + i, i)] = 1.0;
        for j in 0..v {
            // (i,0) -> (0,j) through the center
            s[(j, v + i)] = if i == j { t - 1.0 } else { t };
        }
    }
    s
}

/// Precomputed pieces of the determinant form of the secular equation.
pub struct SecularDeterminant<'g> {
    graph: &'g StarGraph,
    s: DMatrix<f64>,
    sqrt_det_s: Complex64,
}

impl<'g> SecularDeterminant<'g> {
    pub fn new(graph: &'g StarGraph) -> Self {
        let s = scattering_matrix(graph.v());
        // S is real orthogonal, so det S = +-1.
        let sqrt_det_s = if s.determinant() > 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 1.0)
        };
        Self {
            graph,
            s,
            sqrt_det_s,
        }
    }

    pub fn eval(&self, lambda: f64) -> Complex64 {
        let n = self.s.nrows();
        let v = self.graph.v();
        let mut m = DMatrix::<Complex64>::identity(n, n);
        for row in 0..n {
            let length = self.graph.lengths()[row % v];
            let phase = Complex64::from_polar(1.0, -lambda * length);
            for col in 0..n {
                let s = self.s[(row, col)];
                if s != 0.0 {
                    m[(row, col)] -= phase * s;
                }
            }
        }
        m.determinant()
    }

    /// The determinant times `exp(i lambda L / 2) / sqrt(det S)`, which strips
    /// the unitary phase and leaves a real function changing sign at every
    /// simple eigenvalue.
    pub fn eval_real(&self, lambda: f64) -> f64 {
        let phase = Complex64::from_polar(1.0, 0.5 * lambda * self.graph.total_length());
        (self.eval(lambda) * phase / self.sqrt_det_s).re
    }
}

/// `det(I - exp(-i lambda L) S)` over the `2v` directed edges.
pub fn secular_det(graph: &StarGraph, lambda: f64) -> Complex64 {
    SecularDeterminant::new(graph).eval(lambda)
}

/// Real-valued normalization of [`secular_det`]; see
/// [`SecularDeterminant::eval_real`].
pub fn secular_det_real(graph: &StarGraph, lambda: f64) -> f64 {
    SecularDeterminant::new(graph).eval_real(lambda)
}

/// `sum_i tan(lambda l_i)`; errors when `lambda` sits on a pole.
pub fn secular_tan(graph: &StarGraph, lambda: f64) -> Result<f64> {
    let mut sum = 0.0;
    for (edge, &l) in graph.lengths().iter().enumerate() {
        let (s, c) = (lambda * l).sin_cos();
        if c.abs() < POLE_TOLERANCE {
            return Err(Error::PoleProximity { lambda, edge });
        }
        sum += s / c;
    }
    Ok(sum)
}

/// Value and derivative of the tan-sum without pole checks.
fn tan_sum_with_derivative(lengths: &[f64], lambda: f64) -> (f64, f64) {
    lengths.iter().fold((0.0, 0.0), |(f, df), &l| {
        let (s, c) = (lambda * l).sin_cos();
        (f + s / c, df + l / (c * c))
    })
}

/// Sorted, de-duplicated poles `pi (n + 1/2) / l_i` in `(0, lambda_max]`.
pub fn poles(graph: &StarGraph, lambda_max: f64) -> Vec<f64> {
    poles_between(graph, 0.0, lambda_max)
}

fn poles_between(graph: &StarGraph, lambda_min: f64, lambda_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for &l in graph.lengths() {
        let mut n = (lambda_min * l / PI - 0.5).floor().max(0.0);
        loop {
            let p = PI * (n + 0.5) / l;
            if p > lambda_max {
                break;
            }
            if p > lambda_min {
                out.push(p);
            }
            n += 1.0;
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Safeguarded Newton iteration on an open interval where the tan-sum runs
/// from `-inf` (left) to `+inf` (right).
fn root_in_interval(lengths: &[f64], mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ITERATIONS {
        let (f, df) = tan_sum_with_derivative(lengths, x);
        if f == 0.0 {
            return Some(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - f / df;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        // iterate to machine precision; ROOT_TOLERANCE is the guaranteed floor
        let floor = 4.0 * f64::EPSILON * x.max(1.0);
        if (next - x).abs() <= floor || hi - lo <= floor {
            return Some(next);
        }
        x = next;
    }
    None
}

/// All eigenvalues in `(0, lambda_max]`.
///
/// Poles of the individual `tan` branches split the axis; one root is
/// polished in every interval between consecutive poles, plus one in the
/// final partial interval when the tan-sum is already nonnegative at
/// `lambda_max`. Exact pole hits (only possible for commensurate lengths)
/// and `lambda = 0` are never reported.
pub fn solve_spectrum(graph: &StarGraph, lambda_max: f64) -> Result<Spectrum> {
    solve_spectrum_window(graph, 0.0, lambda_max)
}

/// Eigenvalues in `(lambda_min, lambda_max]` only; the cost scales with the
/// window, not with `lambda_max`.
pub fn solve_spectrum_window(graph: &StarGraph, lambda_min: f64, lambda_max: f64) -> Result<Spectrum> {
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(invalid("lambda_max must be positive and finite"));
    }
    if !(lambda_min >= 0.0 && lambda_min < lambda_max) {
        return Err(invalid("lambda_min must lie in [0, lambda_max)"));
    }
    let lengths = graph.lengths();
    let poles = poles_between(graph, lambda_min, lambda_max);
    let f_at = |x: f64| tan_sum_with_derivative(lengths, x).0;
    let mut brackets: Vec<(f64, f64)> = Vec::with_capacity(poles.len() + 1);
    // below the first pole the tan-sum rises from f(lambda_min), which is 0 at lambda_min = 0
    let first = poles.first().copied().unwrap_or(lambda_max);
    if lambda_min > 0.0 && f_at(lambda_min) < 0.0 && (first < lambda_max || f_at(lambda_max) >= 0.0) {
        brackets.push((lambda_min, first));
    }
    brackets.extend(poles.windows(2).map(|w| (w[0], w[1])));
    if let Some(&last) = poles.last() {
        if last < lambda_max && f_at(lambda_max) >= 0.0 {
            brackets.push((last, lambda_max));
        }
    }

    let results: Vec<std::result::Result<f64, (f64, f64)>> = brackets
        .par_iter()
        .map(|&(a, b)| {
            if b == lambda_max && f_at(b) == 0.0 {
                return Ok(b);
            }
            root_in_interval(lengths, a, b).ok_or((a, b))
        })
        .collect();

    let mut eigenvalues = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for r in results {
        match r {
            Ok(x) => eigenvalues.push(x.min(lambda_max)),
            Err(interval) => failed.push(interval),
        }
    }
    if !failed.is_empty() {
        return Err(Error::BisectionFailed { intervals: failed });
    }
    eigenvalues.dedup();
    eigenvalues.retain(|&x| x > lambda_min);
    let mut spectrum = Spectrum::new(eigenvalues, lambda_max, GraphId::from(graph))?;
    spectrum.lambda_min = lambda_min;
    Ok(spectrum)
}

/// Counts eigenvalues in `(0, lambda_max]` from the unitary matrix
/// `U = exp(-i lambda L) S` alone.
///
/// Every eigenphase of `U` decreases strictly with `lambda` and an
/// eigenvalue occurs each time one of them crosses a multiple of `2 pi`.
/// Taking phases in `(0, 2 pi]` at `lambda = 0` and in `[0, 2 pi)` at
/// `lambda_max`, the number of crossings is
/// `(lambda_max L + sum phases(U(lambda_max)) - sum phases(S)) / 2 pi`,
/// which needs no root bracketing and is blind to how close roots lie.
pub fn count_det_roots(graph: &StarGraph, lambda_max: f64) -> Result<usize> {
    let s = scattering_matrix(graph.v());
    let v = graph.v();
    let phase_sum = |m: DMatrix<Complex64>, include_zero_as_full_turn: bool| -> Result<f64> {
        let eig = m
            .eigenvalues()
            .ok_or_else(|| invalid("eigenvalue iteration of the unitary matrix did not converge"))?;
        Ok(eig
            .iter()
            .map(|z| {
                let mut p = z.arg().rem_euclid(2.0 * PI);
                if include_zero_as_full_turn && p < 1e-9 {
                    p = 2.0 * PI;
                }
                p
            })
            .sum())
    };
    let s_complex = s.map(|x| Complex64::new(x, 0.0));
    let start = phase_sum(s_complex.clone(), true)?;
    let mut u = s_complex;
    for row in 0..2 * v {
        let phase = Complex64::from_polar(1.0, -lambda_max * graph.lengths()[row % v]);
        for col in 0..2 * v {
            u[(row, col)] *= phase;
        }
    }
    let end = phase_sum(u, false)?;
    let count = (lambda_max * graph.total_length() + end - start) / (2.0 * PI);
    let rounded = count.round();
    if (count - rounded).abs() > 1e-6 || rounded < 0.0 {
        return Err(invalid(format!(
            "eigenphase count {count} is not an integer; lambda_max sits on an eigenvalue"
        )));
    }
    Ok(rounded as usize)
}
