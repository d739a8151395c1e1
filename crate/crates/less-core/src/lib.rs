//! Randomized sketching for inverse covariance estimation.
//!
//! The crate implements the full family of sketching operators around
//! LEverage Score Sparsified (LESS) embeddings, the debiased sketched
//! inverse covariance (gamma A^T S^T S A)^{-1} with gamma = m/(m-d),
//! distributed averaging of independent estimates, and the exact and Monte
//! Carlo diagnostics that make the underlying structural conditions
//! checkable at desk scale: the quadratic-form variance identity, the
//! doubly stochastic leverage matrix, Binomial inverse-moment bounds, and
//! the coordinate lower-bound construction for row sampling.
//!
//! Monte Carlo loops run data-parallel over replicas (rayon, behind the
//! default `parallel` feature) with a sequential fallback; reductions fold
//! replicas in index order, so results are bit-identical for any thread
//! count and for both execution modes.

pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod leverage;
pub mod matrix;
pub mod newton;
pub mod rng;
pub mod sketch;
pub mod zoo;

pub use error::{Error, Result};
pub use estimator::{
    averaged_inverse, debiased_inverse, functional_query_trace, gamma_debias,
    haar_constant_estimate, inversion_bias_report, spectral_rel_error, BiasReport, BiasRunConfig,
    InverseEstimate,
};
pub use leverage::{
    approximate_leverage_scores, exact_leverage_scores, profile_quality, LeverageProfile,
};
pub use matrix::{
    gram, orthonormal_basis, randomized_hadamard_preprocess, spd_inverse, spectral_norm,
    walsh_hadamard, Matrix, OrthonormalBasis, SpdMatrix, TallMatrix,
};
pub use sketch::{apply, draw_sparsifier, SketchKind, SketchSpec, SparsifierDraw, SubgaussianLaw};
pub use zoo::{generate_matrix, MatrixKind};
