//! Space-time coded MIMO links under symmetric α-stable impulsive noise.

// Reference constants are quoted at full mpmath precision.
#![allow(clippy::excessive_precision)]
pub mod cli_io;
pub mod codes;
pub mod linalg;
pub mod montecarlo;
pub mod quad;
pub mod receivers;
pub mod special;
pub mod stable;
pub mod theory;
