//! Green and Robin functions of `-Δ-λ` on balls and annuli, multi-bubble
//! interaction matrices, and desk-scale checks of the reduced energy for the
//! critical problem `Δu + λu + u⁵ = 0` in three dimensions.

pub mod annulus;
pub mod bubble;
pub mod cli;
pub mod energy;
pub mod error;
pub mod greens;
pub mod interaction;
pub mod linalg;
pub mod point;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};
pub use point::Point3;
