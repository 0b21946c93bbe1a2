//! Spectral statistics of quantum star graphs.
//!
//! * [`graph`]: random star graphs and their vertex scattering amplitudes.
//! * [`spectrum`]: eigenvalues from the secular equation.
//! * [`orbits`]: periodic orbits as cyclic words, their classes and counts.
//! * [`trace`]: smoothed spectral density from orbits and from spectra.
//! * [`analytic`]: form factor, two-point function and three-point kernel.
//! * [`empirical`]: ensemble estimates of two- and three-point functions.

pub mod analytic;
pub mod combinatorics;
pub mod empirical;
pub mod error;
pub mod graph;
pub mod orbits;
pub mod quadrature;
pub mod spectrum;
pub mod trace;

pub use analytic::{Kernel3, Truncation};
pub use empirical::{CorrelationEstimate, EnsembleConfig};
pub use error::{Error, Result};
pub use graph::{Scattering, StarGraph};
pub use orbits::{OrbitClass, OrbitWord};
pub use spectrum::Spectrum;
pub use trace::SmoothedDensity;
