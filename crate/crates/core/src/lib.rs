pub mod analysis;
pub mod datalog;
pub mod engine;
pub mod extractor;
pub mod factgraph;
pub mod featexpr;
pub mod synth;
pub mod tamodel;
