//! Application studies: eigenvalue intervals, virtual cooling and Rényi entropies.

pub mod heisenberg;
pub mod interval;
pub mod qvc;
pub mod renyi;

pub use heisenberg::{gibbs_state, heisenberg_hamiltonian, HeisenbergSpec};
pub use interval::{interval_study, lambda_max_interval, perturb_moments, EigenInterval, IntervalRow, NoisyMoments};
pub use qvc::{error_scaling_study, exact_cooled_energy, virtual_cooling_estimate, QvcResult, QvcRow, QvcScheme, ScalingRow};
pub use renyi::{gibbs_z_circuit, renyi_entropy, renyi_experiment, LogBase, RenyiRow};
