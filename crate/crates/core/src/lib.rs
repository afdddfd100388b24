//! Spectral Galerkin toolkit for fourth-order problems with steep potential
//! wells: sign-split quadratic forms, singular-pencil spectra, minimax descent
//! to nontrivial critical points, and concentration sweeps toward the
//! well-bottom limit problem.

pub mod acceptance;
pub mod basis;
pub mod constants;
pub mod energy;
pub mod error;
pub mod forms;
pub mod geometry;
pub mod limit;
pub mod model;
pub mod numerics;
pub mod report;
pub mod solver;
pub mod spectrum;
pub mod sweep;

pub use error::{Error, Result};
