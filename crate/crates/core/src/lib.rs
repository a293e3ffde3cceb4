//! Finite-stage experiments with level-indexed constructions over
//! model-complete theories.

pub mod formula;
pub mod eval;
pub mod structure;
pub mod theory;
pub mod construction;
pub mod dimension;
pub mod dividing;
pub mod config;
pub mod plot;
pub mod cli;
