//! End-to-end orchestration of one learning run and its JSON report.

use super::config::{ConfigError, ExperimentConfig, Generator};
use crate::analysis::{
    error_bound_from_spectrum, ipr, predicted_tqcm_spectrum, relative_error, AccuracyReport,
    AnalysisError,
};
use crate::dynamics::{evolve, evolve_unitary, DensityMatrix, DynamicsError, DEGENERACY_TOL};
use crate::learner::{LearnProblem, LearnReport, LearnerError};
use crate::pauli::PauliString;
use crate::tomography::{shot_budget, TomographyError, TomographyTrajectory};
use serde::Serialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Errors from running an experiment end to end.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Tomography(#[from] TomographyError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Pauli(#[from] crate::pauli::PauliError),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot serialize report: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// A finished run: the learned report, accuracy metrics when the generator
/// was a known Hamiltonian, and the configuration that produced it.
#[derive(Debug)]
pub struct RunOutcome {
    /// Learned couplings and diagnostics.
    pub report: LearnReport,
    /// Accuracy theory evaluated against the known generator.
    pub accuracy: Option<AccuracyReport>,
    /// Echo of the configuration.
    pub config: ExperimentConfig,
}

/// Run the full pipeline: assemble, evolve, measure, perturb, learn, analyze.
///
/// Deterministic given the configuration. A singular covariance matrix is
/// reported, not raised; only a fully uninformative trajectory errors.
pub fn run_learn(config: &ExperimentConfig) -> Result<RunOutcome, ExperimentError> {
    config.validate()?;
    let generator = config.resolve_generator()?;
    let ansatz = config.resolve_ansatz()?;
    let mut rho0 = config.resolve_initial_state(&generator)?;
    if config.depolarization > 0.0 {
        rho0 = rho0.depolarize(config.depolarization)?;
    }
    let n_t = config.effective_n_t().expect("validated snapshot count");

    let traj = match &generator {
        Generator::Hamiltonian(h) => evolve(&rho0, h, config.dt, n_t)?,
        Generator::Schedule(s) => evolve_unitary(&rho0, s, config.dt, n_t)?,
    };
    let basis = crate::pauli::OperatorBasis::build(config.n_qubits)?;
    let exact = crate::tomography::measure(&traj, &basis)?;
    let primary = if config.noise {
        exact.add_noise(config.n_m, config.noise_distribution, config.seed)?
    } else {
        exact.clone()
    };
    let v_source: Option<&TomographyTrajectory> = config.exact_tqcm.then_some(&exact);

    let problem = LearnProblem::new(primary, ansatz)?;
    let mut report = problem.learn(config.pseudo_inverse_threshold, v_source)?;

    let accuracy = match &generator {
        Generator::Hamiltonian(h) => Some(enrich(
            &mut report,
            config,
            h,
            &rho0,
            problem.ansatz(),
        )?),
        Generator::Schedule(_) => None,
    };
    Ok(RunOutcome {
        report,
        accuracy,
        config: config.clone(),
    })
}

/// Fill the accuracy fields of a report from the known generator.
fn enrich(
    report: &mut LearnReport,
    config: &ExperimentConfig,
    h: &crate::dynamics::ParamHamiltonian,
    rho0: &DensityMatrix,
    ansatz: &[PauliString],
) -> Result<AccuracyReport, ExperimentError> {
    report.degenerate = h.is_degenerate(DEGENERACY_TOL);
    let delocalization = ipr(rho0, h)?;
    report.ipr = Some(delocalization);

    let truth = truth_vector(h, ansatz);
    let epsilon = if truth.iter().any(|&t| t != 0.0) {
        Some(relative_error(
            report.h_opt.as_slice().expect("contiguous couplings"),
            &truth,
        )?)
    } else {
        None
    };
    report.epsilon = epsilon;

    report.bound = shot_budget(config.n_qubits, report.n_t, config.n_m)
        .ok()
        .map(|n_shots| {
            error_bound_from_spectrum(
                report.spectrum.as_slice().expect("contiguous spectrum"),
                config.n_qubits,
                report.n_t,
                n_shots,
                config.dt,
                h.operator_norm(),
                1.0,
                config.pseudo_inverse_threshold,
            )
        })
        .filter(|b| b.is_finite());

    report.spectrum_predicted =
        match predicted_tqcm_spectrum(rho0, h, &report.v_eigenvectors, ansatz, report.n_t) {
            Ok(predicted) => Some(predicted),
            Err(AnalysisError::Resonant) => None,
            Err(e) => return Err(e.into()),
        };

    Ok(AccuracyReport {
        ipr: delocalization,
        epsilon: epsilon.unwrap_or(f64::NAN),
        bound: report.bound,
        predicted_spectrum: report.spectrum_predicted.clone(),
        measured_spectrum: report.spectrum.to_vec(),
        degenerate: report.degenerate,
    })
}

/// True couplings indexed by the ansatz words; words absent from the
/// generator contribute zero.
pub fn truth_vector(h: &crate::dynamics::ParamHamiltonian, ansatz: &[PauliString]) -> Vec<f64> {
    ansatz
        .iter()
        .map(|word| {
            h.interactions()
                .iter()
                .position(|w| w == word)
                .map_or(0.0, |k| h.couplings()[k])
        })
        .collect()
}

/// JSON document of a learned report.
#[derive(Serialize)]
struct ReportDocument<'a> {
    h_opt: &'a [f64],
    #[serde(rename = "V")]
    v: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: &'a [f64],
    #[serde(rename = "C")]
    c: f64,
    residual: f64,
    spectrum: &'a [f64],
    rank: usize,
    singular: bool,
    epsilon: Option<f64>,
    bound: Option<f64>,
    ipr: Option<f64>,
    spectrum_predicted: Option<&'a [f64]>,
    config_echo: &'a ExperimentConfig,
}

/// Serialize an outcome to the report schema.
pub fn report_json(outcome: &RunOutcome) -> Result<String, ExperimentError> {
    let report = &outcome.report;
    let doc = ReportDocument {
        h_opt: report.h_opt.as_slice().expect("contiguous couplings"),
        v: report
            .v
            .rows()
            .into_iter()
            .map(|row| row.to_vec())
            .collect(),
        b: report.b.as_slice().expect("contiguous linear term"),
        c: report.c,
        residual: report.residual,
        spectrum: report.spectrum.as_slice().expect("contiguous spectrum"),
        rank: report.rank,
        singular: report.singular,
        epsilon: report.epsilon,
        bound: report.bound,
        ipr: report.ipr,
        spectrum_predicted: report.spectrum_predicted.as_deref(),
        config_echo: &outcome.config,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

/// Write `report.json` into the directory, creating it if needed.
pub fn write_report(outcome: &RunOutcome, dir: &Path) -> Result<PathBuf, ExperimentError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join("report.json");
    std::fs::write(&path, report_json(outcome)?)?;
    Ok(path)
}
