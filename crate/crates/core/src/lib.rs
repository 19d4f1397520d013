//! Learning few-qubit Hamiltonians from time-dependent state tomography.
//!
//! A single evolving state ρ(t), sampled at N_T uniformly spaced times and
//! read out by full Pauli tomography, fixes the couplings of an unknown
//! Hamiltonian H = Σ_i h_i L_i. The couplings minimize a quadratic cost in
//! the finite-difference Liouville residual, and the minimizer reduces to a
//! linear solve h = V⁺B against the two-point quantum correlation matrix V.
//! How well that solve conditions depends on how delocalized the probe state
//! is across the eigenbasis of H, which the inverse participation ratio
//! tr(ρ̄²) of the dephased state quantifies.
//!
//! Modules:
//! - [`pauli`]: Pauli words and the orthonormal tomography basis.
//! - [`dynamics`]: Hamiltonian assembly and exact trajectory generation.
//! - [`tomography`]: simulated tomographic readout with shot noise.
//! - [`learner`]: correlation-matrix accumulation and the coupling solve.
//! - [`analysis`]: accuracy metrics, error bounds, and spectrum predictions.
//! - [`experiments`]: configuration-driven end-to-end runs and scans.

pub mod analysis;
pub mod dynamics;
pub mod experiments;
pub mod learner;
pub mod pauli;
#[cfg(test)]
pub(crate) mod testutil;
pub mod tomography;

pub use analysis::{
    delta_b_bound, error_bound, error_bound_from_spectrum, ipr, is_nonresonant, optimal_state,
    optimal_state_vector, predicted_tqcm_spectrum, relative_error, AccuracyReport, AnalysisError,
    RESONANCE_TOL,
};
pub use dynamics::{
    block_dephase, dephase, evolve, evolve_unitary, DensityMatrix, DynamicsError,
    ParamHamiltonian, StateTrajectory, UnitarySchedule, DEGENERACY_TOL,
};
pub use experiments::{
    cross_resonance_eq10, load_config, random_2body_config, report_json, run_learn, scan_shots,
    scan_states, two_body_words, write_report, ConfigError, ExperimentConfig, ExperimentError,
    HamiltonianSpec, HamiltonianTerm, InitialStateSpec, RunOutcome, ScanResult, ScanRow,
    SCAN_CSV_HEADER,
};
pub use learner::{
    b_vector, c_scalar, cost, qcm_at_time, solve_couplings, tqcm, CouplingSolution, LearnProblem,
    LearnReport, LearnerError, DEFAULT_PSEUDO_INVERSE_THRESHOLD, TQCM_ZERO_FLOOR,
};
pub use pauli::{
    commutator, enumerate_words, hs_inner, identity, operator_norm, pauli_matrix, OperatorBasis,
    Pauli, PauliError, PauliString, MAX_QUBITS,
};
pub use tomography::{
    coeff_sigma, measure, noise_amplitude, reconstruct, shot_budget, NoiseDistribution,
    TomographyError, TomographyTrajectory,
};
