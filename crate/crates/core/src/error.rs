use thiserror::Error;

/// Errors raised by the lattice, representation and estimation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("torus dimensions must be even and at least 2, got {width}x{height}")]
    Dimension { width: usize, height: usize },

    #[error("weight c = {0} outside the supported range [1, 2]")]
    Weight(f64),

    #[error("cannot parse weight {0:?}")]
    WeightSyntax(String),

    #[error("ice rule violated at vertex ({x}, {y})")]
    IceViolation { x: usize, y: usize },

    #[error("corner constraint violated at vertex ({x}, {y})")]
    CornerConstraint { x: usize, y: usize },

    #[error("configuration size does not match the {width}x{height} torus")]
    SizeMismatch { width: usize, height: usize },

    #[error("{what} needs {needed} {unit}, cap is {cap} (force lifts the cap)")]
    SizeCap {
        what: &'static str,
        needed: usize,
        unit: &'static str,
        cap: usize,
    },

    #[error("zipper needs as many sources as sinks, got {sources} and {sinks}")]
    UnbalancedZipper { sources: usize, sinks: usize },

    #[error("loop {0} is noncontractible")]
    Noncontractible(usize),

    #[error("face ({x}, {y}) is not black")]
    NotBlack { x: usize, y: usize },

    #[error("faces must be distinct")]
    SameFace,

    #[error("distance {distance} exceeds the quarter-diameter guard {limit}")]
    DistanceGuard { distance: usize, limit: usize },

    #[error("invalid chain configuration: {0}")]
    Chain(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
