//! Conditional nonclassical-state preparation from a twin beam heralded by an
//! on/off photodetector, and verification of the prepared state by Monte Carlo
//! homodyne tomography of s-ordered Wigner functions at the phase-space origin.
//!
//! Every state handled here is diagonal in the photon-number basis, so states,
//! POVM elements and the Wigner operator at the origin are all weight vectors.
//!
//! Quadratures follow the convention `x = (a e^{-iφ} + a† e^{iφ}) / 2`, in which
//! the vacuum has quadrature variance 1/4.

pub mod detection;
pub mod error;
pub mod experiment;
pub mod fockstate;
pub mod homodyne;
pub mod report;
pub mod selfcheck;
pub mod specfun;
pub mod tomography;
pub mod wigner;

pub use detection::{ClickOutcome, DarkCounts, DarkModel, OnOffPovm};
pub use error::{Error, Result};
pub use fockstate::{FockDiagonalState, GainParams};
pub use homodyne::HomodyneDataset;
pub use tomography::{Kernel, KernelEstimate};
