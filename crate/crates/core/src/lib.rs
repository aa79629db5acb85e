//! Hyperbolic distortion, injectivity radii and distance sequences along towers
//! of holomorphic maps between model hyperbolic surfaces.

pub mod hyp;
pub mod surfaces;
pub mod tower;
pub mod classify;
pub mod blaschke;
pub mod cli;
