//! Numerical toolkit for Gauss-Lucas type inclusions of entire functions.
//!
//! The crate is organised bottom-up:
//!
//! - [`roots`] generates root sequences and estimates their genus;
//! - [`product`] evaluates truncated canonical products and power sums;
//! - [`rearrange`] reorders roots so that the prefix power sums vanish;
//! - [`poly`] does dense complex polynomial arithmetic and root finding;
//! - [`geometry`] holds planar convex hulls and the separately convex grid hull;
//! - [`verify`] runs the inclusion and stability checks;
//! - [`config`] and [`scenario`] drive everything from a scenario file.

pub mod config;
pub mod error;
pub mod geometry;
pub mod poly;
pub mod product;
pub mod rearrange;
pub mod roots;
pub mod scenario;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
