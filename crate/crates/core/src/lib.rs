//! Rigid alignment of overlapping local views (patches) of a point cloud.
//!
//! Given a bipartite incidence between `n` points and `m` views, where each
//! view carries its own local coordinates for the points it contains, this
//! crate
//!
//! * builds the patch-stress matrix `C = D - B L† Bᵀ` whose quadratic form
//!   `F(S) = Tr(C S Sᵀ)` over `S ∈ 𝕆(d)ᵐ` measures the alignment error,
//! * minimizes `F` by Riemannian gradient descent on the quotient manifold
//!   `𝕆(d)ᵐ/∼` (alignments modulo a global orthogonal transform),
//! * certifies whether a critical alignment is a non-degenerate local minimum
//!   via the eigenvalues of the reduced Hessian matrix `𝕃(S)`, together with
//!   convergence radii and linear rates,
//! * tests infinitesimal / local / global / affine rigidity of the realization
//!   obtained from a perfect alignment, and
//! * provides spectral initialization and noise-sweep experiments.
//!
//! The `cli` companion crate wires these into `generate` / `align` /
//! `certify` / `rigidity` / `experiment` subcommands.

pub mod certify;
pub mod error;
pub mod fixtures;
pub mod framework;
pub mod linalg;
pub mod manifold;
pub mod rgd;
pub mod rigidity;
pub mod spectral;
pub mod stress;

pub use error::Error;
pub use framework::{NoiseSpec, PatchFramework, ValidationReport};
pub use manifold::{Alignment, HorizontalTangent, QuotientAlignment, TangentVector};
pub use rgd::{RgdConfig, RgdTrace, TerminationReason};
pub use stress::StressSystem;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
