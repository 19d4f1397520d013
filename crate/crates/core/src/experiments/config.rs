//! Experiment configuration: JSON schema, validation, and resolution of
//! builtin generators and initial states.

use crate::analysis::{optimal_state, AnalysisError};
use crate::dynamics::{DensityMatrix, DynamicsError, ParamHamiltonian, UnitarySchedule};
use crate::learner::DEFAULT_PSEUDO_INVERSE_THRESHOLD;
use crate::pauli::{Pauli, PauliString, MAX_QUBITS};
use crate::tomography::NoiseDistribution;
use ndarray as nd;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Builtin seven-term cross-resonance Hamiltonian (two qubits, MHz).
pub const BUILTIN_CROSS_RESONANCE: &str = "cross_resonance_eq10";
/// Builtin seeded three-qubit ensemble with all two-site couplings.
pub const BUILTIN_RANDOM_2BODY: &str = "random_2body_3q";
/// Builtin unitary schedule of the echoed cross-resonance gate.
pub const BUILTIN_CR_GATE: &str = "cross_resonance_gate";

/// RNG stream for Haar-random state amplitudes; high ids keep these streams
/// clear of the snapshot-indexed noise streams.
const HAAR_STREAM: u64 = u64::MAX;
/// RNG stream for random coupling draws.
const COUPLING_STREAM: u64 = u64::MAX - 1;

/// Errors in reading or validating a configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

/// One interaction term of an explicit Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianTerm {
    /// Pauli word, e.g. "ZX".
    pub word: String,
    /// Coupling coefficient h_i.
    pub coupling: f64,
}

/// The generator of the dynamics: a builtin name or explicit terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HamiltonianSpec {
    /// Builtin Hamiltonian or unitary-schedule name.
    Builtin(String),
    /// Explicit list of Pauli words with couplings.
    Terms(Vec<HamiltonianTerm>),
}

/// The probe state the experiment starts from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialStateSpec {
    /// Named state ("plus_all", "bell_plus", "ghz", "psi_opt", "eigen_pair")
    /// or a computational basis label of `u`/`d` or `0`/`1` characters.
    Named(String),
    /// Explicit amplitudes as (re, im) pairs; normalized on use.
    Amplitudes { amplitudes: Vec<[f64; 2]> },
    /// Haar-random pure state drawn from this seed.
    RandomSeed { random_seed: u64 },
}

/// Full description of one learning experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Register size N_q.
    pub n_qubits: usize,
    /// Generator of the dynamics.
    pub hamiltonian: HamiltonianSpec,
    /// Candidate interaction words the couplings are learned for.
    pub ansatz: Vec<String>,
    /// Probe state.
    pub initial_state: InitialStateSpec,
    /// Time step δt between snapshots.
    pub dt: f64,
    /// Snapshot count N_T for a single run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_t: Option<usize>,
    /// Strictly increasing snapshot counts for shot scans.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_t_schedule: Option<Vec<usize>>,
    /// Repetitions N_M per measurement setting.
    pub n_m: u64,
    /// Master seed for noise and sampling.
    #[serde(default)]
    pub seed: u64,
    /// Simulate shot noise on the tomography record.
    #[serde(default = "default_noise")]
    pub noise: bool,
    /// Distribution of the per-coefficient noise.
    #[serde(default)]
    pub noise_distribution: NoiseDistribution,
    /// Depolarization strength applied to the initial state.
    #[serde(default)]
    pub depolarization: f64,
    /// Relative eigenvalue cutoff for the pseudo-inverse.
    #[serde(default = "default_threshold")]
    pub pseudo_inverse_threshold: f64,
    /// Build the covariance matrix from the noiseless record.
    #[serde(default)]
    pub exact_tqcm: bool,
    /// Output directory for reports and scans.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn default_noise() -> bool {
    true
}

fn default_threshold() -> f64 {
    DEFAULT_PSEUDO_INVERSE_THRESHOLD
}

/// A resolved generator: Hamiltonian mode knows the eigensystem, schedule
/// mode only propagates.
#[derive(Debug)]
pub enum Generator {
    /// Known parametrized Hamiltonian.
    Hamiltonian(ParamHamiltonian),
    /// Black-box unitary schedule.
    Schedule(UnitarySchedule),
}

impl ExperimentConfig {
    /// Check every invariant, collecting all violations.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        if self.n_qubits == 0 || self.n_qubits > MAX_QUBITS {
            problems.push(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {}",
                self.n_qubits
            ));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            problems.push(format!("dt must be positive and finite, got {}", self.dt));
        }
        if self.n_m == 0 {
            problems.push("n_m must be at least 1".into());
        }
        match (&self.n_t, &self.n_t_schedule) {
            (None, None) => problems.push("one of n_t or n_t_schedule is required".into()),
            (Some(n), _) if *n < 2 => problems.push(format!("n_t must be at least 2, got {n}")),
            _ => {}
        }
        if let Some(schedule) = &self.n_t_schedule {
            if schedule.is_empty() {
                problems.push("n_t_schedule must be non-empty".into());
            }
            if schedule.first().is_some_and(|&n| n < 2) {
                problems.push("every scheduled n_t must be at least 2".into());
            }
            if !schedule.windows(2).all(|w| w[0] < w[1]) {
                problems.push("n_t_schedule must be strictly increasing".into());
            }
        }
        if !(0.0..=1.0).contains(&self.depolarization) {
            problems.push(format!(
                "depolarization must be in [0, 1], got {}",
                self.depolarization
            ));
        }
        if !(0.0..1.0).contains(&self.pseudo_inverse_threshold) {
            problems.push(format!(
                "pseudo_inverse_threshold must be in [0, 1), got {}",
                self.pseudo_inverse_threshold
            ));
        }
        self.validate_ansatz(&mut problems);
        self.validate_hamiltonian(&mut problems);
        self.validate_initial_state(&mut problems);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(problems))
        }
    }

    fn validate_ansatz(&self, problems: &mut Vec<String>) {
        if self.ansatz.is_empty() {
            problems.push("ansatz must be non-empty".into());
        }
        let mut seen = Vec::new();
        for word in &self.ansatz {
            match PauliString::parse(word) {
                Ok(parsed) => {
                    if parsed.n_qubits() != self.n_qubits {
                        problems.push(format!(
                            "ansatz word \"{word}\" has {} letters, expected {}",
                            parsed.n_qubits(),
                            self.n_qubits
                        ));
                    }
                    if parsed.is_identity() {
                        problems.push(format!("ansatz word \"{word}\" is the identity"));
                    }
                    if seen.contains(&parsed) {
                        problems.push(format!("ansatz word \"{word}\" is repeated"));
                    }
                    seen.push(parsed);
                }
                Err(e) => problems.push(format!("ansatz word \"{word}\": {e}")),
            }
        }
    }

    fn validate_hamiltonian(&self, problems: &mut Vec<String>) {
        match &self.hamiltonian {
            HamiltonianSpec::Builtin(name) => {
                let required = match name.as_str() {
                    BUILTIN_CROSS_RESONANCE | BUILTIN_CR_GATE => Some(2),
                    BUILTIN_RANDOM_2BODY => Some(3),
                    _ => {
                        problems.push(format!("unknown builtin hamiltonian \"{name}\""));
                        None
                    }
                };
                if let Some(r) = required {
                    if self.n_qubits != r {
                        problems.push(format!("builtin \"{name}\" needs n_qubits = {r}"));
                    }
                }
            }
            HamiltonianSpec::Terms(terms) => {
                if terms.is_empty() {
                    problems.push("hamiltonian term list must be non-empty".into());
                }
                for term in terms {
                    match PauliString::parse(&term.word) {
                        Ok(parsed) if parsed.n_qubits() != self.n_qubits => {
                            problems.push(format!(
                                "hamiltonian word \"{}\" has {} letters, expected {}",
                                term.word,
                                parsed.n_qubits(),
                                self.n_qubits
                            ));
                        }
                        Ok(_) => {}
                        Err(e) => problems.push(format!("hamiltonian word \"{}\": {e}", term.word)),
                    }
                    if !term.coupling.is_finite() {
                        problems.push(format!(
                            "coupling of \"{}\" must be finite, got {}",
                            term.word, term.coupling
                        ));
                    }
                }
            }
        }
    }

    fn validate_initial_state(&self, problems: &mut Vec<String>) {
        let schedule_mode =
            matches!(&self.hamiltonian, HamiltonianSpec::Builtin(n) if n == BUILTIN_CR_GATE);
        match &self.initial_state {
            InitialStateSpec::Named(name) => match name.as_str() {
                "plus_all" => {}
                "ghz" if self.n_qubits < 2 => {
                    problems.push("ghz needs at least 2 qubits".into());
                }
                "ghz" => {}
                "bell_plus" if self.n_qubits != 2 => {
                    problems.push("bell_plus needs n_qubits = 2".into());
                }
                "bell_plus" => {}
                "psi_opt" | "eigen_pair" if schedule_mode => {
                    problems.push(format!(
                        "state \"{name}\" needs a Hamiltonian, not a unitary schedule"
                    ));
                }
                "psi_opt" | "eigen_pair" => {}
                label => {
                    let well_formed = label.chars().all(|ch| "ud01".contains(ch));
                    if !well_formed {
                        problems.push(format!("unknown initial state \"{label}\""));
                    } else if label.len() != self.n_qubits {
                        problems.push(format!(
                            "basis label \"{label}\" has {} characters, expected {}",
                            label.len(),
                            self.n_qubits
                        ));
                    }
                }
            },
            InitialStateSpec::Amplitudes { amplitudes } => {
                let dim = 1usize << self.n_qubits.min(MAX_QUBITS);
                if amplitudes.len() != dim {
                    problems.push(format!(
                        "amplitude vector has {} entries, expected {dim}",
                        amplitudes.len()
                    ));
                }
                let norm_sq: f64 = amplitudes.iter().map(|[re, im]| re * re + im * im).sum();
                if !norm_sq.is_finite() || norm_sq == 0.0 {
                    problems.push("amplitude vector must be finite and nonzero".into());
                }
            }
            InitialStateSpec::RandomSeed { .. } => {}
        }
    }

    /// Snapshot count a single run uses: `n_t`, or the last scheduled value.
    pub fn effective_n_t(&self) -> Option<usize> {
        self.n_t
            .or_else(|| self.n_t_schedule.as_ref().and_then(|s| s.last().copied()))
    }

    /// Build the generator this config describes.
    pub fn resolve_generator(&self) -> Result<Generator, ConfigError> {
        match &self.hamiltonian {
            HamiltonianSpec::Builtin(name) => match name.as_str() {
                BUILTIN_CROSS_RESONANCE => {
                    Ok(Generator::Hamiltonian(cross_resonance_eq10()))
                }
                BUILTIN_RANDOM_2BODY => {
                    let terms = random_two_body_terms(self.seed);
                    Ok(Generator::Hamiltonian(assemble_terms(&terms)?))
                }
                BUILTIN_CR_GATE => Ok(Generator::Schedule(UnitarySchedule::cross_resonance_gate())),
                other => Err(ConfigError::Invalid(vec![format!(
                    "unknown builtin hamiltonian \"{other}\""
                )])),
            },
            HamiltonianSpec::Terms(terms) => Ok(Generator::Hamiltonian(assemble_terms(terms)?)),
        }
    }

    /// Parse the ansatz words.
    pub fn resolve_ansatz(&self) -> Result<Vec<PauliString>, ConfigError> {
        self.ansatz
            .iter()
            .map(|w| {
                PauliString::parse(w)
                    .map_err(|e| ConfigError::Invalid(vec![format!("ansatz word \"{w}\": {e}")]))
            })
            .collect()
    }

    /// Build the probe state, using the generator for eigenbasis states.
    pub fn resolve_initial_state(
        &self,
        generator: &Generator,
    ) -> Result<DensityMatrix, ConfigError> {
        let dim = 1usize << self.n_qubits;
        let state = match &self.initial_state {
            InitialStateSpec::Named(name) => match name.as_str() {
                "plus_all" => {
                    let amp = nd::Array1::from_elem(dim, C64::new(1.0, 0.0));
                    pure(&amp)?
                }
                "bell_plus" => {
                    let mut amp = nd::Array1::zeros(dim);
                    amp[0] = C64::new(1.0, 0.0);
                    amp[dim - 1] = C64::new(1.0, 0.0);
                    pure(&amp)?
                }
                "ghz" => {
                    let mut amp = nd::Array1::zeros(dim);
                    amp[0] = C64::new(1.0, 0.0);
                    amp[dim - 1] = C64::new(1.0, 0.0);
                    pure(&amp)?
                }
                "psi_opt" => {
                    let h = hamiltonian_mode(generator, name)?;
                    optimal_state(h, None).map_err(analysis_invalid)?
                }
                "eigen_pair" => {
                    let h = hamiltonian_mode(generator, name)?;
                    let amp = h.eigenvectors().column(0).to_owned()
                        + h.eigenvectors().column(1).to_owned();
                    pure(&amp)?
                }
                label => {
                    let mut index = 0usize;
                    for ch in label.chars() {
                        index = (index << 1) | usize::from(ch == 'd' || ch == '1');
                    }
                    let mut amp = nd::Array1::zeros(dim);
                    amp[index] = C64::new(1.0, 0.0);
                    pure(&amp)?
                }
            },
            InitialStateSpec::Amplitudes { amplitudes } => {
                let amp: nd::Array1<C64> = amplitudes
                    .iter()
                    .map(|[re, im]| C64::new(*re, *im))
                    .collect();
                pure(&amp)?
            }
            InitialStateSpec::RandomSeed { random_seed } => {
                let amp = haar_amplitudes(dim, *random_seed);
                pure(&amp)?
            }
        };
        Ok(state)
    }
}

fn pure(amp: &nd::Array1<C64>) -> Result<DensityMatrix, ConfigError> {
    DensityMatrix::pure(amp).map_err(dynamics_invalid)
}

fn dynamics_invalid(e: DynamicsError) -> ConfigError {
    ConfigError::Invalid(vec![e.to_string()])
}

fn analysis_invalid(e: AnalysisError) -> ConfigError {
    ConfigError::Invalid(vec![e.to_string()])
}

fn hamiltonian_mode<'a>(
    generator: &'a Generator,
    state: &str,
) -> Result<&'a ParamHamiltonian, ConfigError> {
    match generator {
        Generator::Hamiltonian(h) => Ok(h),
        Generator::Schedule(_) => Err(ConfigError::Invalid(vec![format!(
            "state \"{state}\" needs a Hamiltonian, not a unitary schedule"
        )])),
    }
}

fn assemble_terms(terms: &[HamiltonianTerm]) -> Result<ParamHamiltonian, ConfigError> {
    let mut words = Vec::with_capacity(terms.len());
    for term in terms {
        words.push(
            PauliString::parse(&term.word)
                .map_err(|e| ConfigError::Invalid(vec![format!("\"{}\": {e}", term.word)]))?,
        );
    }
    let couplings = terms.iter().map(|t| t.coupling).collect();
    ParamHamiltonian::assemble(words, couplings).map_err(dynamics_invalid)
}

/// Haar-random amplitude vector: normalized complex standard Gaussians.
fn haar_amplitudes(dim: usize, seed: u64) -> nd::Array1<C64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(HAAR_STREAM);
    nd::Array1::from_iter((0..dim).map(|_| {
        C64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    }))
}

/// The seven-term cross-resonance Hamiltonian of a two-transmon device (MHz).
pub fn cross_resonance_eq10() -> ParamHamiltonian {
    let words = ["IX", "IY", "IZ", "ZI", "ZX", "ZY", "ZZ"]
        .iter()
        .map(|w| PauliString::parse(w).expect("valid builtin word"))
        .collect();
    let couplings = vec![-1.548, -0.004, 0.006, 9.578, 5.316, -0.225, -0.340];
    ParamHamiltonian::assemble(words, couplings).expect("valid builtin Hamiltonian")
}

/// All 27 two-site Pauli words on three qubits, in (site pair, letters) order.
pub fn two_body_words() -> Vec<PauliString> {
    let letters = [Pauli::X, Pauli::Y, Pauli::Z];
    let mut words = Vec::with_capacity(27);
    for a in 0..3usize {
        for b in (a + 1)..3 {
            for &la in &letters {
                for &lb in &letters {
                    let mut w = vec![Pauli::I; 3];
                    w[a] = la;
                    w[b] = lb;
                    words.push(PauliString::new(w).expect("valid two-site word"));
                }
            }
        }
    }
    words
}

/// Seeded couplings drawn uniformly on [−5, 5] for every two-site word.
pub fn random_two_body_terms(seed: u64) -> Vec<HamiltonianTerm> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(COUPLING_STREAM);
    two_body_words()
        .iter()
        .map(|w| HamiltonianTerm {
            word: w.to_string(),
            coupling: rng.random_range(-5.0..5.0),
        })
        .collect()
}

/// A ready-to-run three-qubit experiment on the seeded two-body ensemble:
/// explicit drawn terms, full two-site ansatz, ψ_opt probe, δt = 0.01,
/// N_T = 370, N_M = 1000.
pub fn random_2body_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        n_qubits: 3,
        hamiltonian: HamiltonianSpec::Terms(random_two_body_terms(seed)),
        ansatz: two_body_words().iter().map(|w| w.to_string()).collect(),
        initial_state: InitialStateSpec::Named("psi_opt".into()),
        dt: 0.01,
        n_t: Some(370),
        n_t_schedule: None,
        n_m: 1000,
        seed,
        noise: true,
        noise_distribution: NoiseDistribution::default(),
        depolarization: 0.0,
        pseudo_inverse_threshold: DEFAULT_PSEUDO_INVERSE_THRESHOLD,
        exact_tqcm: false,
        out_dir: None,
    }
}

/// Read and validate a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    let config: ExperimentConfig = serde_json::from_str(&text)?;
    config.validate()?;
    Ok(config)
}
