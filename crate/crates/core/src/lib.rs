//! Minimal Kolmogorov decompositions of positive-definite kernels and KSGNS
//! dilations of completely positive maps, over finite-dimensional
//! C*-algebras `A = ⊕ M_{n_k}(ℂ)`.

pub mod algebra;
pub mod cli;
pub mod error;
pub mod kolmogorov;
pub mod ksgns;
pub mod measures;
pub mod modules;
pub mod numkernel;

pub use error::{Error, Result};
pub use num_complex::Complex64;
