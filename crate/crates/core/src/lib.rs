//! Low-dose CT toolkit: sinogram noise simulation, linear-time blockwise
//! LLMMSE denoising, fan-beam filtered backprojection, and evaluation.
//!
//! The pieces compose into the usual pipeline:
//!
//! ```no_run
//! use ldct::{boxstats::BoxRadius, ctgeom, filters, noise_model};
//!
//! let phantom = ctgeom::shepp_logan(128).unwrap();
//! let geom = ctgeom::FanBeamGeometry::new(444, 492, 2.5).unwrap();
//! let clean = ctgeom::forward_project_fan(&phantom, &geom).unwrap().scaled(1.0e4);
//!
//! let params = noise_model::NoiseParams::default();
//! let noisy = noise_model::add_noise(&clean, &params).unwrap();
//! let sigma2 = noise_model::estimate_noise_variance(&noisy, &params, BoxRadius(1)).unwrap();
//! let denoised = filters::llmmse_block(&noisy, &sigma2, &filters::FilterConfig::default()).unwrap();
//!
//! let recon = ctgeom::fbp_fan(
//!     &denoised.scaled(1.0e-4),
//!     &geom,
//!     &ctgeom::ReconFilter::default(),
//!     128,
//! )
//! .unwrap();
//! ```
// Parameter checks use `!(x > lo)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boxstats;
pub mod cli;
pub mod ctgeom;
mod error;
pub mod filters;
pub mod grid;
pub mod metrics;
pub mod noise_model;
pub mod rng;

pub use error::{Error, Result};
pub use grid::{Image2D, Sinogram};
