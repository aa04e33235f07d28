//! Pinning intervals and homogenized fronts for the one-phase free boundary
//! problem in periodic media.

pub mod cell;
pub mod direction;
pub mod energy;
pub mod envelope;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod medium;
pub mod planelike;
pub mod quad;
pub mod shapes;

pub use direction::{irreducible_directions, Direction};
pub use error::{Error, Result};
pub use medium::{MediumKind, PeriodicMedium};
