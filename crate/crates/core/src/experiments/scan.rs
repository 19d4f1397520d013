//! Scans over shot budgets and over random initial states.

use super::config::{ConfigError, ExperimentConfig, Generator, InitialStateSpec};
use super::runner::{run_learn, truth_vector, ExperimentError};
use crate::analysis::{ipr, relative_error};
use crate::learner::{ansatz_matrices, check_ansatz, solve_couplings, Accumulator};
use crate::pauli::OperatorBasis;
use crate::tomography::{reconstruct, shot_budget};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Column header of a scan CSV.
pub const SCAN_CSV_HEADER: &str = "N_S,N_T,epsilon,inv_frobenius_scaled,ipr,seed";

/// One observation of the learning problem at a given budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    /// Total shot budget 3^{N_q} · N_T · N_M.
    pub n_s: u64,
    /// Snapshot count.
    pub n_t: usize,
    /// Relative coupling error; NaN when the truth is unknown.
    pub epsilon: f64,
    /// N_T · √tr(V⁻²); infinite when the covariance matrix is singular.
    pub inv_frobenius_scaled: f64,
    /// Delocalization of the probe state; NaN in schedule mode.
    pub ipr: f64,
    /// Seed the row is reproducible from.
    pub seed: u64,
}

/// Rows of a scan, sorted by (N_T, seed).
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    /// Observations in output order.
    pub rows: Vec<ScanRow>,
}

impl ScanResult {
    /// Render the scan as CSV text.
    pub fn to_csv(&self) -> String {
        let mut text = String::from(SCAN_CSV_HEADER);
        text.push('\n');
        for row in &self.rows {
            text.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e},{}\n",
                row.n_s, row.n_t, row.epsilon, row.inv_frobenius_scaled, row.ipr, row.seed
            ));
        }
        text
    }

    /// Write the CSV rendering.
    pub fn write(&self, out: &mut impl Write) -> std::io::Result<()> {
        out.write_all(self.to_csv().as_bytes())
    }

    /// Write `scan.csv` into the directory, creating it if needed.
    pub fn write_csv(&self, dir: &Path) -> Result<PathBuf, ExperimentError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("scan.csv");
        std::fs::write(&path, self.to_csv())?;
        Ok(path)
    }
}

/// Scan the shot budget by growing N_T over one long trajectory.
///
/// The trajectory, tomography record, and noise draws are generated once at
/// the largest scheduled N_T; every row is the prefix of that record, so a
/// row equals a standalone run at its N_T with the same seed.
pub fn scan_shots(config: &ExperimentConfig) -> Result<ScanResult, ExperimentError> {
    config.validate()?;
    let schedule = config
        .n_t_schedule
        .clone()
        .ok_or_else(|| ConfigError::Invalid(vec!["scan over shots needs n_t_schedule".into()]))?;
    let max_n_t = *schedule.last().expect("validated non-empty schedule");

    let generator = config.resolve_generator()?;
    let ansatz = config.resolve_ansatz()?;
    check_ansatz(&ansatz, config.n_qubits)?;
    let mut rho0 = config.resolve_initial_state(&generator)?;
    if config.depolarization > 0.0 {
        rho0 = rho0.depolarize(config.depolarization)?;
    }

    let traj = match &generator {
        Generator::Hamiltonian(h) => crate::dynamics::evolve(&rho0, h, config.dt, max_n_t)?,
        Generator::Schedule(s) => crate::dynamics::evolve_unitary(&rho0, s, config.dt, max_n_t)?,
    };
    let basis = OperatorBasis::build(config.n_qubits)?;
    let exact = crate::tomography::measure(&traj, &basis)?;
    let primary = if config.noise {
        exact.add_noise(config.n_m, config.noise_distribution, config.seed)?
    } else {
        exact.clone()
    };

    let (truth, delocalization) = match &generator {
        Generator::Hamiltonian(h) => (Some(truth_vector(h, &ansatz)), ipr(&rho0, h)?),
        Generator::Schedule(_) => (None, f64::NAN),
    };

    let mats = ansatz_matrices(&ansatz);
    let mut acc = Accumulator::new(ansatz.len());
    let mut rows = Vec::with_capacity(schedule.len());
    let mut prev = reconstruct(primary.coeffs().row(0), &basis)?;
    let mut prev_v = if config.exact_tqcm {
        Some(reconstruct(exact.coeffs().row(0), &basis)?)
    } else {
        None
    };
    for n in 1..max_n_t {
        let next = reconstruct(primary.coeffs().row(n), &basis)?;
        match &prev_v {
            Some(rho_v) => acc.push_step(rho_v, &prev, &next, config.dt, &mats)?,
            None => acc.push_step(&prev, &prev, &next, config.dt, &mats)?,
        }
        prev = next;
        if config.exact_tqcm && n < max_n_t - 1 {
            prev_v = Some(reconstruct(exact.coeffs().row(n), &basis)?);
        }

        let n_t = n + 1;
        if !schedule.contains(&n_t) {
            continue;
        }
        let solution = solve_couplings(acc.v(), acc.b(), config.pseudo_inverse_threshold)?;
        let epsilon = match &truth {
            Some(t) if t.iter().any(|&x| x != 0.0) => relative_error(
                solution.h_opt.as_slice().expect("contiguous couplings"),
                t,
            )?,
            _ => f64::NAN,
        };
        rows.push(ScanRow {
            n_s: shot_budget(config.n_qubits, n_t, config.n_m)?,
            n_t,
            epsilon,
            inv_frobenius_scaled: n_t as f64 * solution.inv_frobenius,
            ipr: delocalization,
            seed: config.seed,
        });
    }
    Ok(ScanResult { rows })
}

/// Scan initial states at fixed N_T: the configured state first, then `count`
/// Haar-random states seeded from the master seed.
///
/// Runs in the noiseless-TQCM regime so the rows isolate how delocalization
/// conditions the information matrix; each random row is reproducible as a
/// `random_seed` initial state with the row's seed.
pub fn scan_states(config: &ExperimentConfig, count: usize) -> Result<ScanResult, ExperimentError> {
    config.validate()?;
    let mut problems = Vec::new();
    if count < 2 {
        problems.push(format!("state scan needs count >= 2, got {count}"));
    }
    if config.n_t.is_none() {
        problems.push("state scan needs a fixed n_t".into());
    }
    if !problems.is_empty() {
        return Err(ConfigError::Invalid(problems).into());
    }

    let mut base = config.clone();
    base.noise = false;
    base.exact_tqcm = false;

    let mut rows = Vec::with_capacity(count + 1);
    rows.push(state_row(&base, config.seed)?);
    for k in 0..count {
        let row_seed = config.seed.wrapping_add(1 + k as u64);
        let mut variant = base.clone();
        variant.initial_state = InitialStateSpec::RandomSeed {
            random_seed: row_seed,
        };
        rows.push(state_row(&variant, row_seed)?);
    }
    rows.sort_by_key(|row: &ScanRow| (row.n_t, row.seed));
    Ok(ScanResult { rows })
}

fn state_row(config: &ExperimentConfig, row_seed: u64) -> Result<ScanRow, ExperimentError> {
    let outcome = run_learn(config)?;
    let report = &outcome.report;
    Ok(ScanRow {
        n_s: shot_budget(config.n_qubits, report.n_t, config.n_m)?,
        n_t: report.n_t,
        epsilon: report.epsilon.unwrap_or(f64::NAN),
        inv_frobenius_scaled: report.inv_frobenius_scaled,
        ipr: report.ipr.unwrap_or(f64::NAN),
        seed: row_seed,
    })
}
