//! Core algorithms for branching random walks (BRWs) on countable site
//! spaces, truncated to finite working windows.
//!
//! The crate covers:
//!
//! - model construction: explicit finite models, rule-based models on the
//!   integer lines, tree-ball models, first-moment matrices and
//!   irreducibility structure ([`model`], [`registry`]);
//! - the multidimensional generating function and its monotone fixed-point
//!   iterations for global and in-set extinction probabilities, survival
//!   classification, sub-solution membership, fixed-point enumeration and
//!   convexity witnesses ([`genfun`], [`family`]);
//! - spectral survival parameters `M_s` / `M_w` and the first-return
//!   series characterization of `1/M_s` ([`spectral`]);
//! - continuous-time BRWs, discrete counterparts, critical parameters and
//!   phase classification under local modifications ([`ctbrw`]);
//! - projections between BRWs and branching-process reductions
//!   ([`project`]);
//! - reproducible Monte Carlo simulation with counter-based replicate
//!   streams ([`mc`]).
//!
//! Everything outside the window is handled by two bracketing boundary
//! policies (ghost-survive / ghost-die), and all quantities of truncated
//! infinite models are monotone in the window size.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature
//! (default) only switches float math from `libm` to the standard library
//! and enables `std::error::Error` impls.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub(crate) mod math;

pub mod ctbrw;
pub mod family;
pub mod genfun;
pub mod mc;
pub mod model;
pub mod project;
pub mod registry;
pub mod spectral;
pub mod tree;

pub use model::{BRWModel, BoundaryPolicy, Site, SiteSpace, Window};
