//! Data-driven reduced order model imaging for the acoustic wave equation.
//!
//! Everything numerical is generic over [`Real`]; the aliases below fix `f64`.

pub mod config;
pub mod error;
pub mod grid;
pub mod imaging;
pub mod internal;
pub mod io;
pub mod layered1d;
pub mod linalg;
pub mod medium;
pub mod oracle;
pub mod pipeline;
pub mod pulse;
pub mod rom;
pub mod scalar;
pub mod scenario;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix = linalg::Matrix<f64>;
pub type Medium = medium::Medium<f64>;
pub type ArrayGeometry = medium::ArrayGeometry<f64>;
pub type Pulse = pulse::Pulse<f64>;
pub type DataTensor = solver::DataTensor<f64>;
pub type BlockMatrix = rom::BlockMatrix<f64>;
pub type Rom = rom::Rom<f64>;
pub type SnapshotBasis = internal::SnapshotBasis<f64>;
pub type Image = imaging::Image<f64>;
pub type Scenario = scenario::Scenario<f64>;
