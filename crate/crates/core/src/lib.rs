//! Magnitude-corrected and time-aligned (MCA) spatial upsampling of HRTF sets.
//!
//! A sparse HRTF set is upsampled by conventional time-aligned spherical
//! harmonics interpolation (rigid-sphere equalization before and after the
//! SH step) and then corrected in magnitude with per-direction filters
//! derived from interpolated, auditory-filtered spectra. The [`metrics`]
//! module evaluates upsampled sets against references in auditory bands and
//! through binaural cues.
//!
//! Module map:
//!
//! - [`grids`]: spherical sampling grids (Lebedev, Fliege, horizontal, files)
//! - [`sh`]: real SH basis, forward / inverse transforms
//! - [`sphere`]: rigid-sphere transfer functions and synthetic HRIR sets
//! - [`auditory`]: Gammatone filterbank and auditory energy accumulation
//! - [`pipeline`]: alignment, interpolation, correction filter design
//! - [`metrics`]: magnitude, ILD and ITD errors, JND references, reports
//! - [`container`]: the MCAH container and correction-filter dumps
//!
//! Heavy loops run on rayon when the `parallel` feature is enabled (default);
//! without it the same code runs sequentially. Results do not depend on the
//! thread count.

pub mod auditory;
pub mod container;
mod error;
mod fft;
pub mod grids;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod sh;
pub mod spectrum;
pub mod sphere;
mod table;

pub use error::{Error, ErrorClass, Result};
pub use spectrum::{Ear, HrirSet, HrtfSet};
pub use table::Table;

pub use num_complex::Complex64;
