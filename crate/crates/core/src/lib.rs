pub mod config;
pub mod curvature;
pub mod error;
pub mod fuchsian;
pub mod pipeline;
pub mod qdiff;
pub mod rankone;
pub mod report;
pub mod smoothing;
pub mod surface;
pub mod surrogate;
pub mod wedge;

pub use error::{Error, Result};
