//! Explicit self-similar mixing flows and the numerics needed to watch them
//! dissipate a passive scalar: pentadic/dyadic geometry on the box
//! `[0, sqrt 2] x [0, 1]`, the two-cell and universal dissipators, a
//! semi-Lagrangian/spectral advection-diffusion solver, Monte Carlo stochastic
//! characteristics, and the experiment drivers that tie them together.

pub mod characteristics;
pub mod compensated;
pub mod error;
pub mod experiments;
pub mod flow_fields;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod point;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Domain, Grid, ScalarField};
pub use point::Point;
