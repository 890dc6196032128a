//! Spectral analysis of a discrete Dirac-type operator on the square lattice Z².
//!
//! The operator acts on pairs (vertex function, edge function) of a finite
//! L×L box of the standard lattice graph and has the block form
//!
//! ```text
//!         ⎛  m   d* ⎞
//!   H₀ =  ⎜         ⎟ ,      H± = H₀ ± V,   V ≥ 0 diagonal,
//!         ⎝  d   -m ⎠
//! ```
//!
//! where d is the coboundary (discrete gradient) from vertices to oriented
//! edges and d* its adjoint. Its spectrum consists of two symmetric bands
//! [m, √(m²+8)] and [-√(m²+8), -m] together with a flat band at -m carried
//! by plaquette loop states.
//!
//! The crate covers five areas:
//!
//! * [`lattice`]: finite boxes, cochains, potentials, sparse assembly of H±.
//! * [`fiber`]: the 3×3 Floquet symbol h₀(ξ) on the torus, band functions,
//!   gradients, resolvent, and threshold classification.
//! * [`levelset`]: quadrature on level curves of the band functions, the
//!   coarea density, and the asymptotic coefficients governing eigenvalue
//!   accumulation at the flat band.
//! * [`counting`]: eigenvalue counting by matrix inertia, finite-volume
//!   spectral-shift proxies, and power-law fits of counting functions.
//! * [`toroidal`]: truncated operators Σₖ Bₖ ℱ vₖ ℱ* B̄ₖ on ℓ²(Z²) built from
//!   decaying symbols, their eigenvalue counting functions, and weak Schatten
//!   quasi-norm estimates.
//!
//! [`series`] holds the counting-series record type shared by the counting
//! routines and the command-line runner, together with its CSV/JSON codecs.

pub mod counting;
pub mod fiber;
pub mod lattice;
pub mod levelset;
pub mod linalg;
pub mod quad;
pub mod series;
pub mod toroidal;
