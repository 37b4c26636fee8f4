//! Kalman decomposition of linear quantum systems.
//!
//! The pipeline runs bottom-up through the modules: [`matrix_core`] supplies
//! the doubled-up and symplectic algebra, [`system_model`] builds and converts
//! systems, [`subspaces`] computes the four Kalman subspaces,
//! [`decomposition`] assembles the coordinate transformations and canonical
//! forms, [`analysis`] labels the resulting subsystems, and [`cli_io`] handles
//! spec files, reports and the bundled corpus.

pub mod matrix_core;
pub mod system_model;
pub mod subspaces;
pub mod decomposition;
pub mod analysis;
pub mod cli_io;
