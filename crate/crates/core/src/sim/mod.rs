//! Simulation engine: circuits, statevector shots and exact density oracles.

pub mod circuit;
pub mod density;
pub mod rng;
pub mod state;
pub mod statevector;

pub use circuit::{Circuit, Control, Instruction, StateId};
pub use density::{evolve, outcome_distribution, partial_trace, permutation_trace_check, signed_expectation, weighted_signed_expectation, Branch};
pub use rng::{derive, shot_rng, ShotRng};
pub use state::{MixedState, PureState, StateJson};
pub use statevector::{gate_matrix, max_qubits, par_shots, run_shot, run_shots, terminal_signed_expectation, with_threads, ShotRecord, ShotRunner};
