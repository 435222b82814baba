//! Statistical bounded reachability for stochastic hybrid automata.
//!
//! Random variables of a (probabilistic) hybrid automaton are sampled, each
//! sampled concrete automaton is decided for k-step reachability by a
//! δ-complete interval branch-and-prune procedure, and the per-sample
//! verdicts feed a sequential statistical test.

pub mod dsl;
pub mod encoder;
pub mod engine;
pub mod interval;
pub mod model;
pub mod sampler;
pub mod solver;
pub mod stats;
