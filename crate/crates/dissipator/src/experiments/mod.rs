pub mod data;
pub mod fit;
pub mod plan;
pub mod sweeps;
pub mod checks;
pub mod atoms;
