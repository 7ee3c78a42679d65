//! Numerical laboratory for the spatially homogeneous linear Boltzmann
//! equation
//!
//! ```text
//!     d/dt f(t,v) = L f(t,v),      L f = K f - Sigma f,
//! ```
//!
//! where the background is the unit Maxwellian `M(v) = (2 pi)^{-d/2}
//! exp(-|v|^2/2)`, the scattering cross section is the power law
//! `Phi(r) = r^gamma` with an angular cutoff of total mass `ell_b`, the
//! loss term is the collision frequency `Sigma = ell_b (Phi * M)` and the
//! gain operator `K` is an integral operator with an explicit kernel
//! `k_gamma(v, w)`.
//!
//! The crate evaluates the kernel and its companion functionals
//! ([`carleman`]), the collision frequency and weights ([`model`]),
//! discretizes the generator on the isotropic (radial) sector by a
//! Nystrom rule ([`discretize`]), computes spectra, gaps and resolvent
//! norms ([`spectral`]), and runs the semigroup forward in time
//! ([`evolve`]).  Everything is dense `n x n` with `n` in the low
//! hundreds; the point is verifiable numbers, not scale.

pub mod bessel;
pub mod carleman;
pub mod discretize;
pub mod error;
pub mod evolve;
pub mod model;
pub mod quad;
pub mod report;
pub mod spectral;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
