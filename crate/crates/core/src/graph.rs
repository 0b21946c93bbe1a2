//! Star graphs: one center joined to `v` outer vertices by edges whose
//! lengths are drawn independently and uniformly from
//! `[1 - 1/(2v), 1 + 1/(2v)]`.
//!
//! # Reproducibility
//!
//! Lengths come from a SplitMix64 stream seeded directly with the 64-bit
//! seed (state = seed, first output after one `+= 0x9e3779b97f4a7c15`
//! step). Each output `x` maps to `u = (x >> 11) * 2^-53` and then to
//! `lo + u * (hi - lo)`. Edge `i` uses the `i`-th output.

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform deviate in `[0, 1)` with 53 random bits.
pub fn unit_interval(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Stateless helper used for per-realization sub-seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = SplitMix64::seed_from_u64(seed ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03));
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct StarGraph {
    v: usize,
    seed: u64,
    lengths: Vec<f64>,
    total_length: f64,
}

/// On-disk form: `{"v": int, "seed": int, "lengths": [real, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub v: usize,
    pub seed: u64,
    pub lengths: Vec<f64>,
}

impl StarGraph {
    /// Draw a random star graph with `v` edges.
    pub fn random(v: usize, seed: u64) -> Result<Self> {
        if v == 0 {
            return Err(invalid("a star graph needs v >= 1 edges"));
        }
        let (lo, hi) = length_interval(v);
        let mut rng = SplitMix64::seed_from_u64(seed);
        let lengths = (0..v)
            .map(|_| lo + unit_interval(rng.next_u64()) * (hi - lo))
            .collect();
        Self::from_lengths(lengths, seed)
    }

    /// Build from explicit lengths; they must satisfy the same interval
    /// constraint as random draws.
    pub fn from_lengths(lengths: Vec<f64>, seed: u64) -> Result<Self> {
        let v = lengths.len();
        if v == 0 {
            return Err(invalid("a star graph needs v >= 1 edges"));
        }
        let (lo, hi) = length_interval(v);
        if let Some(bad) = lengths.iter().find(|l| !(lo..=hi).contains(*l)) {
            return Err(invalid(format!(
                "edge length {bad} outside [{lo}, {hi}] for v = {v}"
            )));
        }
        let total_length = 2.0 * lengths.iter().sum::<f64>();
        Ok(Self {
            v,
            seed,
            lengths,
            total_length,
        })
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// Total length `L` of the directed edges, i.e. twice the sum of the
    /// physical lengths. The mean level density is `L / (2 pi)`.
    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Expected number of eigenvalues in `(0, lambda]`.
    pub fn weyl_count(&self, lambda: f64) -> f64 {
        self.total_length * lambda / (2.0 * std::f64::consts::PI)
    }
}

/// Allowed length interval `[1 - 1/(2v), 1 + 1/(2v)]`.
pub fn length_interval(v: usize) -> (f64, f64) {
    let half = 1.0 / (2.0 * v as f64);
    (1.0 - half, 1.0 + half)
}

impl TryFrom<GraphFile> for StarGraph {
    type Error = crate::Error;

    fn try_from(file: GraphFile) -> Result<Self> {
        if file.lengths.len() != file.v {
            return Err(invalid(format!(
                "graph file declares v = {} but lists {} lengths",
                file.v,
                file.lengths.len()
            )));
        }
        Self::from_lengths(file.lengths, file.seed)
    }
}

impl From<StarGraph> for GraphFile {
    fn from(g: StarGraph) -> Self {
        GraphFile {
            v: g.v,
            seed: g.seed,
            lengths: g.lengths,
        }
    }
}

/// The three kinds of vertex scattering on a star graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scattering {
    /// Reflection at an outer vertex.
    Trivial,
    /// Return along the same edge through the center.
    Backscatter,
    /// Passage from one edge to another through the center.
    Transmit,
}

/// Scattering amplitude of the Neumann star vertex with `v` edges.
pub fn s_amplitude(kind: Scattering, v: usize) -> f64 {
    let two_over_v = 2.0 / v as f64;
    match kind {
        Scattering::Trivial => 1.0,
        Scattering::Backscatter => two_over_v - 1.0,
        Scattering::Transmit => two_over_v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths_in_interval() {
        let g = StarGraph::random(10, 42).unwrap();
        assert_eq!(g.lengths().len(), 10);
        assert!(g.lengths().iter().all(|&l| (0.95..=1.05).contains(&l)));
    }

    #[test]
    fn deterministic() {
        let a = StarGraph::random(10, 42).unwrap();
        let b = StarGraph::random(10, 42).unwrap();
        assert_eq!(a, b);
        let c = StarGraph::random(10, 43).unwrap();
        assert_ne!(a.lengths(), c.lengths());
    }

    #[test]
    fn total_length_close_to_2v() {
        for seed in 0..50 {
            let g = StarGraph::random(10, seed).unwrap();
            assert!((g.total_length() - 20.0).abs() <= 1.0);
            let per_edge = g.total_length() / 20.0;
            assert!((0.95..=1.05).contains(&per_edge));
        }
    }

    #[test]
    fn rejects_empty() {
        assert!(StarGraph::random(0, 1).is_err());
        assert!(StarGraph::from_lengths(vec![], 1).is_err());
        assert!(StarGraph::from_lengths(vec![0.7, 1.0], 1).is_err());
    }

    #[test]
    fn first_draw_matches_reference_splitmix() {
        // splitmix64.c with state 0: first output 0xe220a8397b1dcdaf
        let u = unit_interval(0xe220a8397b1dcdaf);
        let g = StarGraph::random(1, 0).unwrap();
        assert_eq!(g.lengths()[0], 0.5 + u);
    }

    #[test]
    fn amplitudes() {
        assert_eq!(s_amplitude(Scattering::Backscatter, 2), 0.0);
        assert_eq!(s_amplitude(Scattering::Backscatter, 4), -0.5);
        assert_eq!(s_amplitude(Scattering::Transmit, 4), 0.5);
        for v in 1..50 {
            assert_eq!(s_amplitude(Scattering::Trivial, v), 1.0);
            assert_eq!(
                s_amplitude(Scattering::Backscatter, v),
                s_amplitude(Scattering::Transmit, v) - 1.0
            );
        }
    }

    #[test]
    fn amplitudes_monotone_in_v() {
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for v in 1..200 {
            let b = s_amplitude(Scattering::Backscatter, v);
            let t = s_amplitude(Scattering::Transmit, v);
            assert!(b < prev.0 && t < prev.1);
            assert!(b > -1.0 && t > 0.0);
            prev = (b, t);
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let g = StarGraph::random(5, 9).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        assert!(text.starts_with("{\"v\":5,\"seed\":9,\"lengths\":["));
        let back: StarGraph = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
        let bad = r#"{"v": 3, "seed": 1, "lengths": [1.0, 1.0]}"#;
        assert!(serde_json::from_str::<StarGraph>(bad).is_err());
    }
}
