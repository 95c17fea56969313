//! Simulator for measurement-free quantum error correction with redundant
//! syndrome extraction.
//!
//! Three codes are supported — the 3-qubit bit-flip code, the 9-qubit
//! Bacon-Shor code, and the 7-qubit Steane code — each with a correction
//! cycle that copies an enlarged stabilizer set onto classical ancillas
//! and corrects data errors with multi-controlled gates, so no mid-circuit
//! measurement is ever needed.
//!
//! The crate estimates per-cycle logical error rates with a fault-path
//! expansion: exact binomial weights `P(i,j)` for paths with `i` memory
//! and `j` gate faults, conditional transition rows between five logical
//! classes (estimated exactly at low order, by Monte Carlo above), and an
//! absorbing 5x5 transfer matrix whose non-failed spectral radius gives
//! the logical rate. A bisection solver locates the threshold where
//! `p_log(p_gate) = p_gate`.
//!
//! Start with the runnable examples:
//!
//! ```text
//! cargo run --release -p cecsim --example verify_codes
//! cargo run --release -p cecsim --example dump_circuit
//! cargo run --release -p cecsim --example single_point
//! cargo run --release -p cecsim --example sweep_curves
//! cargo run --release -p cecsim --example threshold_search
//! cargo run --release -p cecsim --example monte_carlo_crosscheck
//! ```
//!
//! or the `cecsim` binary, which exposes the same capabilities as
//! subcommands (`simulate`, `threshold`, `sweep`, `dump-circuit`,
//! `verify`) driven by a JSON config.

pub mod circuit;
pub mod cli;
pub mod codes;
pub mod error;
pub mod estimator;
pub mod noise;
pub mod pauli;
pub mod rng;
pub mod threshold;
pub mod verify;

pub use circuit::{build_cycle, CecCircuit, CircuitOptions, Gate};
pub use codes::{classify, syndrome, Code, CodeSpec, LogicalClass, Syndrome};
pub use error::{Error, Result};
pub use estimator::{
    build_transfer, direct_monte_carlo_rate, enumerate_alpha, estimate_alpha, estimate_point,
    logical_rate, run_one_cycle, AlphaCache, AlphaParams, TransferMatrix,
};
pub use noise::{log_path_weight, sample_fault_path, truncation_set, ErrorModel, FaultPath, MemMode};
pub use rng::RngFactory;
pub use threshold::{find_threshold, simulate_point, sweep, RunConfig, ThresholdResult};
