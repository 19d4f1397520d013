//! Simulated time-dependent state tomography.
//!
//! A trajectory of density matrices becomes a real coefficient table
//! r_α(t_n) = tr(O_α ρ(t_n)) over the orthonormal Pauli basis. Shot noise is
//! modeled as an independent additive draw on every non-identity coefficient
//! with amplitude a = 1/√(2^Nq · N_M), the statistical uncertainty of a
//! tomographic estimate from N_M repetitions per observable. The identity
//! coefficient is pinned to 1/√(2^Nq): tr(ρ) = 1 is bookkeeping, not a
//! measurement. Reconstructions are Hermitian and unit trace by construction
//! but deliberately not projected to positive semidefinite, so noisy snapshots
//! may carry small negative eigenvalues.

use crate::dynamics::StateTrajectory;
use crate::pauli::{trace_product, OperatorBasis, PauliError, PauliString};
use ndarray::{self as nd};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io;
use thiserror::Error;

/// Errors from measurement, noise injection, and trajectory serialization.
#[derive(Debug, Error)]
pub enum TomographyError {
    #[error("basis dimension {0} does not match state dimension {1}")]
    DimensionMismatch(usize, usize),
    #[error("repetition count N_M must be at least 1")]
    InvalidRepetitions,
    #[error("trajectory is already noisy")]
    AlreadyNoisy,
    #[error("shot budget overflows u64")]
    ShotOverflow,
    #[error("coefficient row has {got} entries, expected {expected}")]
    WrongCoefficientCount { expected: usize, got: usize },
    #[error("malformed tomography CSV: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// Support of the additive coefficient noise.
///
/// The amplitude formula fixes the scale a = 1/√(2^Nq · N_M) but not the
/// distribution; `Uniform` on [-a, a] is the default, the others are exposed
/// for sensitivity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDistribution {
    /// Uniform on [-a, a].
    #[default]
    Uniform,
    /// Uniform on [0, a].
    HalfUniform,
    /// Gaussian with standard deviation a.
    Gaussian,
}

/// Tomographic record of one trajectory: the coefficient table r_α(t_n).
#[derive(Debug, Clone)]
pub struct TomographyTrajectory {
    n_qubits: usize,
    dt: f64,
    times: Vec<f64>,
    coeffs: nd::Array2<f64>,
    n_meas: Option<u64>,
    total_shots: Option<u64>,
    noisy: bool,
    seed: Option<u64>,
}

/// Noise amplitude a = 1/√(2^Nq · N_M).
pub fn noise_amplitude(n_qubits: usize, n_meas: u64) -> f64 {
    1.0 / (((1u64 << n_qubits) * n_meas) as f64).sqrt()
}

/// Total shot count N_S = 3^Nq · N_T · N_M for full tomography of the run.
pub fn shot_budget(n_qubits: usize, n_t: usize, n_meas: u64) -> Result<u64, TomographyError> {
    3u64.checked_pow(n_qubits as u32)
        .and_then(|settings| settings.checked_mul(n_t as u64))
        .and_then(|per_rep| per_rep.checked_mul(n_meas))
        .ok_or(TomographyError::ShotOverflow)
}

/// Statistical uncertainty σ(r_α) = √(tr(O_α² ρ) / N_M) of one coefficient.
///
/// For the normalized Pauli basis O_α² = 1/2^Nq, so this reduces to the
/// state-independent noise amplitude.
pub fn coeff_sigma(
    observable: &nd::Array2<C64>,
    rho: &nd::Array2<C64>,
    n_meas: u64,
) -> Result<f64, TomographyError> {
    if n_meas == 0 {
        return Err(TomographyError::InvalidRepetitions);
    }
    if observable.nrows() != rho.nrows() {
        return Err(TomographyError::DimensionMismatch(
            observable.nrows(),
            rho.nrows(),
        ));
    }
    let squared = observable.dot(observable);
    let second_moment = trace_product(&squared, rho).re;
    Ok((second_moment.max(0.0) / n_meas as f64).sqrt())
}

/// Read out a trajectory over the full orthonormal basis: r_α(t_n) = tr(O_α ρ(t_n)).
///
/// The identity coefficient is pinned to 1/√(2^Nq) exactly.
pub fn measure(
    traj: &StateTrajectory,
    basis: &OperatorBasis,
) -> Result<TomographyTrajectory, TomographyError> {
    let dim = basis.dim();
    if traj.states()[0].dim() != dim {
        return Err(TomographyError::DimensionMismatch(
            dim,
            traj.states()[0].dim(),
        ));
    }
    let n_t = traj.len();
    let width = basis.len();
    let mut coeffs = nd::Array2::zeros((n_t, width));
    for (n, state) in traj.states().iter().enumerate() {
        coeffs[(n, 0)] = basis.normalization();
        for alpha in 1..width {
            let r = trace_product(basis.element(alpha), state.matrix());
            debug_assert!(
                r.im.abs() < 1e-10,
                "coefficient ({n}, {alpha}) has imaginary part {:.3e}",
                r.im
            );
            coeffs[(n, alpha)] = r.re;
        }
    }
    Ok(TomographyTrajectory {
        n_qubits: basis.n_qubits(),
        dt: traj.dt(),
        times: traj.times().to_vec(),
        coeffs,
        n_meas: None,
        total_shots: None,
        noisy: false,
        seed: None,
    })
}

/// Rebuild the Hermitian operator Σ_α r_α O_α from one coefficient row.
///
/// Unit trace follows from the pinned identity coefficient; the result is not
/// projected to positive semidefinite.
pub fn reconstruct(
    coeffs: nd::ArrayView1<f64>,
    basis: &OperatorBasis,
) -> Result<nd::Array2<C64>, TomographyError> {
    if coeffs.len() != basis.len() {
        return Err(TomographyError::WrongCoefficientCount {
            expected: basis.len(),
            got: coeffs.len(),
        });
    }
    let dim = basis.dim();
    let mut rho = nd::Array2::zeros((dim, dim));
    for (alpha, &r) in coeffs.iter().enumerate() {
        if r != 0.0 {
            rho += &(basis.element(alpha) * C64::new(r, 0.0));
        }
    }
    Ok(rho)
}

impl TomographyTrajectory {
    /// Number of qubits the coefficient table describes.
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Time step δt.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Sample times.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Coefficient table, one row per snapshot, one column per basis word.
    pub fn coeffs(&self) -> &nd::Array2<f64> {
        &self.coeffs
    }

    /// Number of snapshots N_T.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// Never true for a constructed trajectory.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Repetitions per observable, set once noise is applied.
    pub fn n_meas(&self) -> Option<u64> {
        self.n_meas
    }

    /// Total shot budget N_S, set once noise is applied.
    pub fn total_shots(&self) -> Option<u64> {
        self.total_shots
    }

    /// Whether noise has been applied.
    pub fn noisy(&self) -> bool {
        self.noisy
    }

    /// Seed of the applied noise, if any.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Add an independent noise draw to every non-identity coefficient.
    ///
    /// Each (snapshot, coefficient) pair owns a dedicated RNG stream derived
    /// from the seed, so results do not depend on evaluation order and a
    /// shorter trajectory is a bitwise prefix of a longer one.
    pub fn add_noise(
        &self,
        n_meas: u64,
        distribution: NoiseDistribution,
        seed: u64,
    ) -> Result<TomographyTrajectory, TomographyError> {
        if self.noisy {
            return Err(TomographyError::AlreadyNoisy);
        }
        if n_meas == 0 {
            return Err(TomographyError::InvalidRepetitions);
        }
        let amplitude = noise_amplitude(self.n_qubits, n_meas);
        let width = self.coeffs.ncols();
        let mut coeffs = self.coeffs.clone();
        for n in 0..self.coeffs.nrows() {
            for alpha in 1..width {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                rng.set_stream((n * width + alpha) as u64);
                let eta = match distribution {
                    NoiseDistribution::Uniform => amplitude * (2.0 * rng.random::<f64>() - 1.0),
                    NoiseDistribution::HalfUniform => amplitude * rng.random::<f64>(),
                    NoiseDistribution::Gaussian => {
                        amplitude * rng.sample::<f64, _>(StandardNormal)
                    }
                };
                coeffs[(n, alpha)] += eta;
            }
        }
        Ok(TomographyTrajectory {
            n_qubits: self.n_qubits,
            dt: self.dt,
            times: self.times.clone(),
            coeffs,
            n_meas: Some(n_meas),
            total_shots: shot_budget(self.n_qubits, self.len(), n_meas).ok(),
            noisy: true,
            seed: Some(seed),
        })
    }

    /// Write the coefficient table as CSV: header `t, <word>, …`, then one
    /// row per snapshot with 17 significant digits.
    pub fn write_csv<W: io::Write>(&self, out: &mut W) -> Result<(), TomographyError> {
        let basis_labels = crate::pauli::enumerate_words(self.n_qubits)?;
        write!(out, "t")?;
        for label in &basis_labels {
            write!(out, ", {label}")?;
        }
        writeln!(out)?;
        for (n, &t) in self.times.iter().enumerate() {
            write!(out, "{t:.16e}")?;
            for alpha in 0..self.coeffs.ncols() {
                write!(out, ", {:.16e}", self.coeffs[(n, alpha)])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Parse a coefficient table written by [`write_csv`](Self::write_csv).
    ///
    /// The register size is inferred from the column count; times must form a
    /// uniform grid and the identity column must equal 1/√(2^Nq), which is
    /// re-pinned exactly after validation.
    pub fn read_csv<R: io::BufRead>(input: R) -> Result<TomographyTrajectory, TomographyError> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| TomographyError::Format("empty input".into()))??;
        let mut fields = header.split(',').map(str::trim);
        match fields.next() {
            Some("t") => {}
            _ => return Err(TomographyError::Format("first column must be t".into())),
        }
        let words: Vec<PauliString> = fields
            .map(|w| {
                w.parse::<PauliString>()
                    .map_err(|e| TomographyError::Format(format!("bad basis word {w:?}: {e}")))
            })
            .collect::<Result<_, _>>()?;
        if words.is_empty() {
            return Err(TomographyError::Format("no basis columns".into()));
        }
        let n_qubits = words[0].n_qubits();
        let expected = crate::pauli::enumerate_words(n_qubits)?;
        if words != expected {
            return Err(TomographyError::Format(format!(
                "basis columns must be the {} lexicographic words on {n_qubits} qubits",
                expected.len()
            )));
        }
        let width = words.len();

        let mut times = Vec::new();
        let mut rows: Vec<f64> = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let values: Vec<f64> = line
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| TomographyError::Format(format!("bad number {v:?}: {e}")))
                })
                .collect::<Result<_, _>>()?;
            if values.len() != width + 1 {
                return Err(TomographyError::WrongCoefficientCount {
                    expected: width + 1,
                    got: values.len(),
                });
            }
            times.push(values[0]);
            rows.extend_from_slice(&values[1..]);
        }
        if times.len() < 2 {
            return Err(TomographyError::Format(
                "a trajectory needs at least two rows".into(),
            ));
        }
        let dt = times[1] - times[0];
        if !(dt.is_finite() && dt > 0.0) {
            return Err(TomographyError::Format(format!("bad time step {dt}")));
        }
        for (n, &t) in times.iter().enumerate() {
            let expected_t = times[0] + n as f64 * dt;
            if (t - expected_t).abs() > 1e-9 * dt.max(1.0) {
                return Err(TomographyError::Format(format!(
                    "non-uniform time grid at row {n}: {t} vs {expected_t}"
                )));
            }
        }
        let mut coeffs = nd::Array2::from_shape_vec((times.len(), width), rows)
            .expect("row count times width matches data length");
        let pinned = 1.0 / ((1u64 << n_qubits) as f64).sqrt();
        for n in 0..coeffs.nrows() {
            if (coeffs[(n, 0)] - pinned).abs() > 1e-12 {
                return Err(TomographyError::Format(format!(
                    "identity coefficient at row {n} is {}, expected {pinned}",
                    coeffs[(n, 0)]
                )));
            }
            coeffs[(n, 0)] = pinned;
        }
        Ok(TomographyTrajectory {
            n_qubits,
            dt,
            times,
            coeffs,
            n_meas: None,
            total_shots: None,
            noisy: true,
            seed: None,
        })
    }
}
