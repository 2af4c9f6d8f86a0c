//! Simulation laboratory for two-sided level-set percolation of the planar
//! discrete Gaussian free field.

pub mod dgff;
pub mod geometry;
pub mod harness;
pub mod levelset;
pub mod pathtree;
pub mod schedule;
