//! Six-vertex F model on even tori and its loop, random-cluster and spin
//! representations.

pub mod error;
pub mod geometry;
pub mod cluster;
pub mod loops;
pub mod mcmc;
pub mod observables;
pub mod omega;
pub mod oracle;
pub mod six_vertex;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{Dir, DirEdge, DualPath, Edge, Face, Torus, TorusGeometry, Vertex};
pub use mcmc::ChainConfig;
pub use oracle::Sector;
pub use six_vertex::{ArrowConfig, ModelParams, SpinConfig};
pub use stats::Estimate;
