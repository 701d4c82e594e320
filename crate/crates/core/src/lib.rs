//! Sparse superposition (SS) codes over the real AWGN channel with
//! rotationally invariant coding matrices.
//!
//! The crate covers both the finite-size scheme and its asymptotic theory:
//!
//! * [`free_probability`]: asymptotic spectra of `B⁻¹AᵀA` for the built-in
//!   ensembles, with Cauchy transform, R-transform, their integrals and the
//!   small-aspect-ratio coefficient Ψ.
//! * [`operators`]: sampled coding matrices behind the [`CodingOperator`]
//!   interface (dense gaussian, row-orthogonal, discrete spectrum, and a fast
//!   subsampled DCT proxy with the `std` feature).
//! * [`codec`]: messages, encoding, the AWGN channel and the error metrics.
//! * [`vamp`]: the VAMP decoder with the section-wise softmax denoiser and the
//!   LMMSE stage.
//! * [`state_evolution`]: the effective scalar channel, the SE operator `T(E)`
//!   and the recursions tracking the decoder.
//! * [`potential`]: the replica-symmetric potential, its maxima and the
//!   algorithmic / information-theoretic thresholds, at finite and infinite
//!   section size.
//!
//! The crate is `no_std` (with `alloc`). The default `std` feature enables
//! parallel Monte Carlo reductions and the DCT proxy operator.
//!
//! ```
//! use sparc_core::free_probability::{Ensemble, SpectralModel};
//! use sparc_core::potential::{capacity, r_it_inf};
//!
//! let it = r_it_inf(15.0, &Ensemble::Gaussian).unwrap();
//! assert!((it - capacity(15.0)).abs() < 1e-9);
//! let model = SpectralModel::new(Ensemble::RowOrthogonal, 0.5).unwrap();
//! assert!((model.cauchy_transform(-1.0).unwrap() - 0.75).abs() < 1e-15);
//! ```

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod codec;
pub mod error;
pub mod free_probability;
pub mod math;
pub mod mc;
pub mod operators;
pub mod potential;
pub mod rng;
pub mod state_evolution;
pub mod vamp;

pub use codec::{ChannelOutput, Message};
pub use error::{Error, Result};
pub use free_probability::{Atom, Ensemble, RestrictedDensity, SpectralModel};
pub use mc::Estimate;
pub use operators::{CodeParams, CodingOperator, EnsembleSpec, OperatorKind};
pub use state_evolution::{SeParams, SeTrajectory, StateEvolution};
pub use vamp::{DecodeResult, VampConfig, VampState};
