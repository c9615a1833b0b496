//! Dynamics of the double standard family
//! `f_{a,b}(x) = 2x + a + (b/pi) sin(2 pi x)` and its complexification
//! `g_{a,b}(z) = e^{2 pi i a} z^2 e^{b(z - 1/z)}` on `C^*`.
//!
//! The crate computes attracting cycles and multipliers, the monotone
//! semiconjugacy to the doubling map and the binary-rational type of a cycle,
//! Arnold tongues with their unique superattracting parameter per type,
//! numerical connectedness checks, Koenigs linearization charts with the
//! radial-stretch deformation arithmetic, and deterministic parameter-plane
//! rasters of both the real and the complexified family.

pub mod atlas;
pub mod circle;
pub mod complex;
pub mod cycle;
pub mod error;
pub mod koenigs;
pub mod raster;
pub mod render;
pub mod semiconjugacy;

pub use circle::{Angle, CircleParams, SolverConfig};
pub use complex::{ComplexParams, OrbitClass};
pub use cycle::Cycle;
pub use error::{Error, Result};
pub use semiconjugacy::BinaryType;
