//! Noisy tensor completion by tensor-ring nuclear norm minimization.
//!
//! The library recovers a low tensor-ring-rank tensor from a subset of
//! noisy entries by minimizing
//!
//! ```text
//!   1/2 * || y - X(T) ||^2  +  lambda * sum_k alpha_k * || T_(k,s) ||_*
//! ```
//!
//! subject to an entrywise bound `||T||_inf <= delta`, where `T_(k,s)` is
//! the circular unfolding that groups `s` cyclically contiguous modes into
//! columns. Two ADMM solvers are provided: [`solve::ntrc_solve`] operates
//! directly on the full tensor, while [`solve::fantrc_solve`] pushes the
//! nuclear-norm terms onto a small core tensor through orthonormal factor
//! matrices and is much faster when the extents are large.
//!
//! Supporting pieces: dense column-major tensors and their unfolding
//! families ([`tensor`]), tensor-ring and Tucker algebra ([`ring`]),
//! singular value thresholding and Procrustes steps ([`linalg`]),
//! observation sampling and noise ([`sampling`]), reproducible experiment
//! protocols ([`experiments`]), and simple binary/PPM file formats
//! ([`io`]).

pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod ring;
pub mod sampling;
pub mod solve;
pub mod tensor;

pub use error::{Error, Result};
pub use ring::{TrFormat, TuckerFormat};
pub use sampling::{NoiseFamily, NoiseModel, ObservationSet};
pub use solve::{SolveReport, SolverConfig, SolverKind};
pub use tensor::{DenseTensor, UnfoldingSpec};
