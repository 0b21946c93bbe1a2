//! Closed-form and series expressions for the form factor, the two-point
//! function and the three-point kernel of large star graphs.
//!
//! Times `tau` are in units of the Heisenberg time. All combinatorial
//! coefficients are exact rationals, converted to `f64` only when
//! multiplied by powers of `tau`.

mod bessel;
mod correlation;
mod dirichlet;
mod formfactor;
mod kernel;
mod poly;

pub use bessel::bessel_ratio;
pub use correlation::{
    r2_analytic, r2_with, r3_connected, r3_connected_with, r3_full, r3_full_with, Kernel3,
    R3Evaluator, TRANSFORM_WINDOW,
};
pub use dirichlet::{dirichlet_moment, dirichlet_moment_exact};
pub use formfactor::{c_coeff, k_formfactor, K_DOMAIN};
pub use kernel::{
    f1, f2, f3, f3_degree_profile, f4, f4_degree_profile, f_expansion, f_total, Components,
    F_SERIES_DOMAIN,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Cutoffs for every infinite sum and integral in this module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Largest number of distinct edges `j` kept in the orbit sums.
    pub j_max: usize,
    /// Cap on the summed excess `sum (t_i - 1)` of the block-count vectors.
    pub m_max: usize,
    /// Gauss–Legendre points per axis.
    pub quad_points: usize,
    /// Upper limit replacing infinity in the time integrals.
    pub tau_cutoff: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Self {
            j_max: 6,
            m_max: 8,
            quad_points: 64,
            tau_cutoff: 4.0,
        }
    }
}

impl Truncation {
    pub fn validate(&self) -> Result<()> {
        if self.j_max == 0 || self.m_max == 0 || self.quad_points == 0 {
            return Err(invalid("j_max, m_max and quad_points must be positive"));
        }
        if !(self.tau_cutoff >= 3.0) || !self.tau_cutoff.is_finite() {
            return Err(invalid(format!(
                "tau_cutoff must be finite and at least 3, got {}",
                self.tau_cutoff
            )));
        }
        Ok(())
    }

    pub fn with_j_max(self, j_max: usize) -> Self {
        Self { j_max, ..self }
    }

    pub fn with_quad_points(self, quad_points: usize) -> Self {
        Self {
            quad_points,
            ..self
        }
    }
}
