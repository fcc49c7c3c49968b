//! Simulation and estimation toolkit for quantum state moments.
//!
//! The crate builds the reset-based moment chain (a single `2m + 1` qubit
//! circuit whose running products of X outcomes estimate `Tr(ρ²) … Tr(ρᵏ)`
//! from one shot stream), the Gray-code state-function circuit for
//! polynomial functionals, observable-weighted variants, and the exact
//! oracles that certify each estimator is unbiased.
//!
//! Module map:
//!
//! * [`sim`]: statevector shot execution with mid-circuit measurement and
//!   reset, plus the signed-instrument density-operator oracle.
//! * [`moments`]: the moment chain, the shot planner and the generalized
//!   SWAP-test baseline.
//! * [`qsf`]: polynomial functionals via the Givens ladder.
//! * [`observables`]: Pauli observables, the LCU unitary and weighted moments.
//! * [`apps`]: eigenvalue intervals, virtual cooling and Rényi entropies.

pub mod apps;
pub mod error;
pub mod linalg;
pub mod moments;
pub mod presets;
pub mod observables;
pub mod pauli;
pub mod qsf;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
pub use pauli::{Pauli, PauliObservable, PauliString};
pub use sim::{Circuit, Instruction, MixedState, PureState, ShotRecord, StateId};
