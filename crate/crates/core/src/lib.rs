//! A greybox fuzzer for a small stateful contract VM, guided by branch and
//! store cost metrics with Secant-based input prediction and demand-driven
//! transaction-sequence generation.

pub mod cli;
pub mod fuzzcore;
pub mod metrics;
pub mod minivm;
pub mod oracles;
pub mod predictor;
pub mod seqfuzz;
