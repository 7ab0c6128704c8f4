pub mod error;
pub mod contact;
pub mod darboux;
pub mod extension;
pub mod fermi;
pub mod flatlands;
pub mod geometry;
pub mod pipeline;

pub use error::{LabError, Result};
