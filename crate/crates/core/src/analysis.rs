//! Accuracy theory: delocalization, error metrics, bounds, and spectrum
//! predictions.
//!
//! The reconstruction accuracy of the coupling solve is governed by how the
//! probe state spreads over the eigenbasis of the generator. The inverse
//! participation ratio IPR = tr(ρ̄²) of the dephased state ρ̄ measures that
//! spread; the flat superposition ψ_opt saturates its minimum 2^{-Nq}. The
//! closed-form error bound combines the statistical shot noise with the
//! finite-difference remainder, and the long-time limit of the TQCM
//! eigenvalues is predictable from the time-averaged state alone when the
//! spectrum is free of nontrivial resonances.

use crate::dynamics::{
    block_dephase, dephase, DensityMatrix, DynamicsError, ParamHamiltonian, DEGENERACY_TOL,
};
use crate::pauli::{pauli_matrix, trace_product, PauliError, PauliString};
use ndarray::{self as nd};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Tolerance for the non-resonance filter on eigenvalue gaps.
pub const RESONANCE_TOL: f64 = 1e-9;

/// Errors from the accuracy computations.
#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("coupling vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("true coupling vector is zero; relative error undefined")]
    ZeroTruth,
    #[error("spectrum is resonant; the prediction does not apply")]
    Resonant,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("eigensolver failed: {0}")]
    Eigensolver(#[from] ndarray_linalg::error::LinalgError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// Accuracy metrics attached to a learned report when the generator is known.
#[derive(Debug, Clone)]
pub struct AccuracyReport {
    /// Delocalization tr(ρ̄²) of the initial state over the eigenbasis.
    pub ipr: f64,
    /// Relative coupling error ‖h_opt − h_true‖ / ‖h_true‖.
    pub epsilon: f64,
    /// Closed-form error bound; `None` when the TQCM is singular.
    pub bound: Option<f64>,
    /// Long-time TQCM eigenvalue predictions; `None` when the spectrum is
    /// resonant.
    pub predicted_spectrum: Option<Vec<f64>>,
    /// Measured TQCM eigenvalues, ascending.
    pub measured_spectrum: Vec<f64>,
    /// True when the generator spectrum is degenerate; the reported IPR then
    /// depends on the eigenbasis the solver returned.
    pub degenerate: bool,
}

/// Inverse participation ratio tr(ρ̄²) with ρ̄ the dephased initial state.
///
/// For a pure ρ0 = |ψ⟩⟨ψ| this equals Σ_α |⟨α|ψ⟩|⁴. The value is
/// eigenbasis-dependent when H is degenerate; callers should surface
/// [`ParamHamiltonian::is_degenerate`] alongside it.
pub fn ipr(rho0: &DensityMatrix, h: &ParamHamiltonian) -> Result<f64, AnalysisError> {
    let bar = dephase(rho0, h)?;
    Ok(bar.purity())
}

/// Amplitude vector of the maximally delocalized probe state
/// |ψ_opt⟩ = 2^{-Nq/2} Σ_α e^{iφ_α} |α⟩; phases default to zero.
pub fn optimal_state_vector(
    h: &ParamHamiltonian,
    phases: Option<&[f64]>,
) -> Result<nd::Array1<C64>, AnalysisError> {
    let dim = h.dim();
    if let Some(p) = phases {
        if p.len() != dim {
            return Err(AnalysisError::Dimension(format!(
                "{} phases for dimension {dim}",
                p.len()
            )));
        }
    }
    let weight = 1.0 / (dim as f64).sqrt();
    let mut psi = nd::Array1::zeros(dim);
    for alpha in 0..dim {
        let phase = phases.map_or(C64::new(1.0, 0.0), |p| C64::from_polar(1.0, p[alpha]));
        let col = h.eigenvectors().column(alpha);
        psi = psi + col.mapv(|z| z * phase * weight);
    }
    Ok(psi)
}

/// The maximally delocalized probe state as a density matrix.
pub fn optimal_state(
    h: &ParamHamiltonian,
    phases: Option<&[f64]>,
) -> Result<DensityMatrix, AnalysisError> {
    let psi = optimal_state_vector(h, phases)?;
    Ok(DensityMatrix::pure(&psi)?)
}

/// Relative coupling error ε = ‖h_opt − h_true‖₂ / ‖h_true‖₂.
pub fn relative_error(h_opt: &[f64], h_true: &[f64]) -> Result<f64, AnalysisError> {
    if h_opt.len() != h_true.len() {
        return Err(AnalysisError::LengthMismatch(h_opt.len(), h_true.len()));
    }
    let truth_norm = h_true.iter().map(|x| x * x).sum::<f64>().sqrt();
    if truth_norm == 0.0 {
        return Err(AnalysisError::ZeroTruth);
    }
    let diff_norm = h_opt
        .iter()
        .zip(h_true)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(diff_norm / truth_norm)
}

/// Closed-form accuracy bound
/// ε ≤ √(l · tr[Ṽ⁻²]) · (16 (3/2)^{Nq/2} / √N_S + 4 ‖H‖ δt)
/// with Ṽ = V / (‖L‖² N_T).
///
/// Eigenvalues below `rel_threshold · ω_max` make the scaled TQCM singular
/// and the bound infinite.
#[allow(clippy::too_many_arguments)]
pub fn error_bound(
    v: &nd::Array2<f64>,
    n_qubits: usize,
    n_t: usize,
    n_shots: u64,
    dt: f64,
    h_norm: f64,
    l_norm: f64,
    rel_threshold: f64,
) -> Result<f64, AnalysisError> {
    let (spectrum, _) = v.eigh(UPLO::Lower)?;
    Ok(error_bound_from_spectrum(
        spectrum.as_slice().expect("contiguous spectrum"),
        n_qubits,
        n_t,
        n_shots,
        dt,
        h_norm,
        l_norm,
        rel_threshold,
    ))
}

/// [`error_bound`] evaluated from an already computed TQCM spectrum.
#[allow(clippy::too_many_arguments)]
pub fn error_bound_from_spectrum(
    spectrum: &[f64],
    n_qubits: usize,
    n_t: usize,
    n_shots: u64,
    dt: f64,
    h_norm: f64,
    l_norm: f64,
    rel_threshold: f64,
) -> f64 {
    let l = spectrum.len();
    let omega_max = spectrum.iter().fold(0.0f64, |m, &w| m.max(w));
    if omega_max <= crate::learner::TQCM_ZERO_FLOOR {
        return f64::INFINITY;
    }
    let cutoff = rel_threshold * omega_max;
    if spectrum.iter().any(|&w| w < cutoff) {
        return f64::INFINITY;
    }
    let scale = l_norm * l_norm * n_t as f64;
    let tr_inv_sq: f64 = spectrum.iter().map(|&w| (scale / w).powi(2)).sum();
    let statistical = 16.0 * 1.5f64.powf(n_qubits as f64 / 2.0) / (n_shots as f64).sqrt();
    let systematic = 4.0 * h_norm * dt;
    (l as f64 * tr_inv_sq).sqrt() * (statistical + systematic)
}

/// Per-component bound on the noise-induced shift of B:
/// |δB_i| ≤ 16 ‖H‖ ‖L‖ √(N_T / (2^Nq N_M)) + 4 δt ‖L‖ ‖H‖² N_T.
pub fn delta_b_bound(
    n_qubits: usize,
    n_meas: u64,
    n_t: usize,
    dt: f64,
    h_norm: f64,
    l_norm: f64,
) -> f64 {
    let statistical = 16.0 * h_norm * l_norm / ((1u64 << n_qubits) as f64 * n_meas as f64).sqrt()
        * (n_t as f64).sqrt();
    let systematic = 4.0 * dt * l_norm * h_norm * h_norm * n_t as f64;
    statistical + systematic
}

/// True when E_α − E_β + E_γ − E_δ = 0 has only trivial solutions, i.e. the
/// eigenvalues coincide pairwise.
///
/// Eigenvalues are clustered into distinct levels (gap ≤ `tol` merges), and
/// every positive inter-level gap must be unique: a repeated gap between
/// different level pairs lets oscillating terms of the time-averaged
/// covariance survive, breaking the long-time prediction. Degeneracy itself
/// is a trivial solution and does not count as a resonance.
pub fn is_nonresonant(h: &ParamHamiltonian, tol: f64) -> bool {
    let eigenvalues = h.eigenvalues().as_slice().expect("contiguous eigenvalues");
    let levels: Vec<f64> = crate::dynamics::level_blocks(eigenvalues, tol)
        .into_iter()
        .map(|block| {
            eigenvalues[block.clone()].iter().sum::<f64>() / block.len() as f64
        })
        .collect();
    let mut gaps = Vec::with_capacity(levels.len() * (levels.len() - 1) / 2);
    for a in 0..levels.len() {
        for b in (a + 1)..levels.len() {
            gaps.push(levels[b] - levels[a]);
        }
    }
    gaps.sort_by(|x, y| x.partial_cmp(y).expect("finite gaps"));
    gaps.windows(2).all(|w| w[1] - w[0] > tol)
}

/// Long-time predictions for the TQCM eigenvalues,
/// ω_i ≈ 2 N_T [ tr(ρ̄ A_i²) − tr(ρ̄ A_i)² − tr(ρ̄ A_i ρ̄ A_i) ],
/// where A_i = Σ_j q_{ji} L_j collects the ansatz words along the i-th
/// measured TQCM eigenvector and ρ̄ is the time-averaged initial state.
///
/// ρ̄ dephases over distinct levels ([`block_dephase`]), which keeps the
/// never-oscillating coherences inside degenerate eigenspaces; a nontrivial
/// resonance still defeats the average and is rejected. Predictions come back
/// in the eigenvector column order (ascending measured eigenvalues).
pub fn predicted_tqcm_spectrum(
    rho0: &DensityMatrix,
    h: &ParamHamiltonian,
    v_eigenvectors: &nd::Array2<f64>,
    ansatz: &[PauliString],
    n_t: usize,
) -> Result<Vec<f64>, AnalysisError> {
    if !is_nonresonant(h, RESONANCE_TOL) {
        return Err(AnalysisError::Resonant);
    }
    let l = ansatz.len();
    if v_eigenvectors.nrows() != l || v_eigenvectors.ncols() != l {
        return Err(AnalysisError::Dimension(format!(
            "eigenvector matrix is {}x{}, ansatz has {l} terms",
            v_eigenvectors.nrows(),
            v_eigenvectors.ncols()
        )));
    }
    let mats: Vec<nd::Array2<C64>> = ansatz.iter().map(pauli_matrix).collect();
    if mats[0].nrows() != h.dim() {
        return Err(AnalysisError::Dimension(format!(
            "ansatz dimension {} vs Hamiltonian dimension {}",
            mats[0].nrows(),
            h.dim()
        )));
    }
    let bar = block_dephase(rho0, h, DEGENERACY_TOL)?;
    let mut predictions = Vec::with_capacity(l);
    for i in 0..l {
        let mut a_i: nd::Array2<C64> = nd::Array2::zeros((h.dim(), h.dim()));
        for (j, m) in mats.iter().enumerate() {
            let q = v_eigenvectors[(j, i)];
            if q != 0.0 {
                a_i += &(m * C64::new(q, 0.0));
            }
        }
        predictions.push(2.0 * n_t as f64 * variance_terms(bar.matrix(), &a_i));
    }
    Ok(predictions)
}

/// tr(ρ̄A²) − tr(ρ̄A)² − tr(ρ̄Aρ̄A) for Hermitian ρ̄ and A.
fn variance_terms(bar: &nd::Array2<C64>, a: &nd::Array2<C64>) -> f64 {
    let bar_a = bar.dot(a);
    let second = trace_product(bar, &a.dot(a)).re;
    let first: C64 = bar_a.diag().sum();
    let cross = trace_product(&bar_a, &bar_a).re;
    second - first.re * first.re - cross
}
