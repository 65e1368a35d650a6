//! Multi-tape two-level morphology.

pub mod cascade;
pub mod engine;
pub mod featstruct;
pub mod grammario;
pub mod lexicon;
pub mod rulebase;
pub mod throughput;
pub mod wordgrammar;
