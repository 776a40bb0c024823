//! Coincidence ("ghost") imaging with thermal and entangled light.
//!
//! Two complementary models live here:
//!
//! * a wave-optics model built on arm transfer functions `h(x, q)` and the
//!   fourth-order correlations of thermal (Gaussian) and entangled
//!   (momentum-anticorrelated) sources, see [`kernels`] and [`coincidence`];
//! * a geometrical-optics model: the coincidence imaging equations, the
//!   real/virtual classification of coincidence images and the unfolded ray
//!   construction, see [`geometry`] and [`raydiagram`].
//!
//! [`montecarlo`] checks the thermal model by sampling Gaussian random fields.
//!
//! Lengths are in millimetres throughout; wavenumbers in rad/mm.

pub mod coincidence;
pub mod error;
pub mod fieldgrid;
pub mod geometry;
pub mod kernels;
pub mod montecarlo;
pub mod raydiagram;

pub use error::{Branch, Error, Result};
pub use num_complex::Complex64;
