//! Scheduling jobs on identical machines that share one renewable resource.
//!
//! The crate provides a feasibility verifier, a greedy list scheduler with an exact
//! brute-force oracle for tiny instances, an asymptotic approximation scheme with additive
//! `p_max`, and a `(3/2 + eps)`-approximation built on the same pipeline.

pub mod aptas;
pub mod assemble;
pub mod baseline;
pub mod generate;
pub mod large;
pub mod lp;
pub mod model;
pub mod rational;
pub mod simplify;
pub mod skyline;
pub mod small;
pub mod solve;
pub mod three_halves;

pub use model::{Instance, Job, JobId, Schedule, VerificationReport};
pub use rational::Rational;
