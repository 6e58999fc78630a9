//! Fourier-based multi-party computation.
//!
//! Users hide secret codes inside the cosine coefficients of a shared main
//! function, mask them additively, and send the masked coefficient streams to
//! four (or `4 + 12ι`) nodes that never talk to each other. A public display
//! adds the node outputs and, thanks to the generalized Parseval identity and
//! the graded Θ-algebra, recovers `Σ x_j a_j + y Π a_j`.
//!
//! The crate is organised as:
//!
//! - [`theta`]: the Θ^[n] symbolic algebra (∗-product, formal roots, EvalT).
//! - [`fourier`]: coefficient sets, moments, convolution pipelines and the
//!   generalized Parseval identity.
//! - [`chebyshev`]: tensor Chebyshev lowering of two-variable expressions.
//! - [`protocol`]: the masking protocols as pure round functions, plus
//!   residual and view-simulation diagnostics.
//! - [`sim`]: a deterministic message-passing harness over the protocols.
//! - [`cli`]: the command-line driver behind the `fmpc` binary.

pub mod chebyshev;
pub mod cli;
pub mod fourier;
pub mod protocol;
pub mod sim;
pub mod theta;

pub use num_complex::Complex64;
