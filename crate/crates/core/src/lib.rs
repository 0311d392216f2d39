pub mod cli;
pub mod eval;
pub mod features;
pub mod graph;
pub mod kstrata;
pub mod model;
pub mod rng;
pub mod synthetic;
pub mod tensor;
