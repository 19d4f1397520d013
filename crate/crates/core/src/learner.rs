//! Coupling reconstruction from tomographic trajectories.
//!
//! The finite-difference Liouville residual of a candidate Hamiltonian
//! H = Σ_i h_i L_i over a measured trajectory defines the quadratic cost
//! f(h) = C − 2 Σ_i h_i B_i + Σ_ij V_ij h_i h_j, where V is the total quantum
//! covariance matrix V_ij = −Σ_n tr([L_i, ρ_n][L_j, ρ_n]), B_j sums
//! tr(−i[L_j, ρ_n] Δρ_n/δt), and C sums tr(Δρ_n²)/δt². Both V and B run over
//! the N_T − 1 snapshots that own a forward difference, which makes the
//! stationarity condition V h = B the exact normal equation of the cost. The
//! minimizer is recovered through a spectral pseudo-inverse of V; eigenvalues
//! below a relative threshold mark the solution singular and unreliable.

use crate::pauli::{commutator, pauli_matrix, trace_product, OperatorBasis, PauliError, PauliString};
use crate::tomography::{reconstruct, TomographyError, TomographyTrajectory};
use ndarray::{self as nd};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Default relative eigenvalue cutoff for the pseudo-inverse of V.
pub const DEFAULT_PSEUDO_INVERSE_THRESHOLD: f64 = 1e-10;

/// Absolute floor below which the largest TQCM eigenvalue is pure roundoff.
///
/// Ansatz words have unit operator norm and states unit trace, so a single
/// informative step contributes O(1) to V; accumulated floating-point noise
/// from a stationary trajectory stays many orders below this.
pub const TQCM_ZERO_FLOOR: f64 = 1e-20;

/// Errors from problem assembly and the coupling solve.
#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("ansatz is empty")]
    EmptyAnsatz,
    #[error("the identity word is not traceless and cannot be an ansatz term")]
    IdentityAnsatz,
    #[error("duplicate ansatz term {0}")]
    DuplicateAnsatz(PauliString),
    #[error("ansatz word {word} acts on {got} qubits, trajectory has {expected}")]
    WordLength {
        word: PauliString,
        expected: usize,
        got: usize,
    },
    #[error("a trajectory needs at least two snapshots, got {0}")]
    ShortTrajectory(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("the trajectory carries no Hamiltonian information (TQCM is zero)")]
    NoInformation,
    #[error("TQCM source trajectory does not match: {0}")]
    VSourceMismatch(String),
    #[error("eigensolver failed: {0}")]
    Eigensolver(#[from] ndarray_linalg::error::LinalgError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Tomography(#[from] TomographyError),
}

/// A learning instance: tomographic data plus the interaction ansatz.
#[derive(Debug, Clone)]
pub struct LearnProblem {
    tomo: TomographyTrajectory,
    ansatz: Vec<PauliString>,
    basis: OperatorBasis,
    matrices: Vec<nd::Array2<C64>>,
}

/// Everything the coupling solve produces.
#[derive(Debug, Clone)]
pub struct LearnReport {
    /// Optimal couplings h_opt = V⁺ B.
    pub h_opt: nd::Array1<f64>,
    /// Total quantum covariance matrix.
    pub v: nd::Array2<f64>,
    /// Linear cost term B.
    pub b: nd::Array1<f64>,
    /// Constant cost term C.
    pub c: f64,
    /// Cost at the optimum, f(h_opt).
    pub residual: f64,
    /// Eigenvalues ω_i of V in ascending order.
    pub spectrum: nd::Array1<f64>,
    /// Eigenvector columns of V, ordered like the spectrum.
    pub v_eigenvectors: nd::Array2<f64>,
    /// Number of eigenvalues above the pseudo-inverse cutoff.
    pub rank: usize,
    /// True when V has a numerical kernel; h_opt is then minimum-norm and unreliable.
    pub singular: bool,
    /// √tr(V⁻²), infinite when singular.
    pub inv_frobenius: f64,
    /// N_T · √tr(V⁻²), the scaled diagnostic (ansatz words have unit norm).
    pub inv_frobenius_scaled: f64,
    /// Snapshot count N_T of the trajectory the report was learned from.
    pub n_t: usize,
    /// Relative coupling error vs a known truth, when available.
    pub epsilon: Option<f64>,
    /// Closed-form accuracy bound, when available and finite.
    pub bound: Option<f64>,
    /// Delocalization tr(ρ̄²) of the initial state, when the generator is known.
    pub ipr: Option<f64>,
    /// Long-time predictions for the TQCM eigenvalues, when non-resonant.
    pub spectrum_predicted: Option<Vec<f64>>,
    /// True when the generator spectrum is degenerate and the accuracy theory
    /// does not apply.
    pub degenerate: bool,
}

/// Spectral pseudo-inverse solve of V h = B.
#[derive(Debug, Clone)]
pub struct CouplingSolution {
    /// Minimum-norm stationary point of the cost.
    pub h_opt: nd::Array1<f64>,
    /// Eigenvalues of V in ascending order.
    pub spectrum: nd::Array1<f64>,
    /// Eigenvector columns of V.
    pub eigenvectors: nd::Array2<f64>,
    /// Eigenvalues at or above the cutoff.
    pub rank: usize,
    /// True when the kernel is nonempty at the cutoff.
    pub singular: bool,
    /// √tr(V⁻²), infinite when singular.
    pub inv_frobenius: f64,
}

/// Per-snapshot covariance V_{ij,n} = −tr([L_i, ρ_n][L_j, ρ_n]).
pub fn qcm_at_time(
    rho: &nd::Array2<C64>,
    ansatz_matrices: &[nd::Array2<C64>],
) -> Result<nd::Array2<f64>, LearnerError> {
    let comms = commutators(rho, ansatz_matrices)?;
    Ok(qcm_from_commutators(&comms))
}

fn commutators(
    rho: &nd::Array2<C64>,
    mats: &[nd::Array2<C64>],
) -> Result<Vec<nd::Array2<C64>>, LearnerError> {
    mats.iter()
        .map(|m| commutator(m, rho).map_err(LearnerError::from))
        .collect()
}

fn qcm_from_commutators(comms: &[nd::Array2<C64>]) -> nd::Array2<f64> {
    let l = comms.len();
    let mut v = nd::Array2::zeros((l, l));
    for i in 0..l {
        for j in i..l {
            let t = trace_product(&comms[i], &comms[j]);
            debug_assert!(
                t.im.abs() < 1e-10,
                "covariance entry ({i}, {j}) has imaginary part {:.3e}",
                t.im
            );
            v[(i, j)] = -t.re;
            v[(j, i)] = -t.re;
        }
    }
    v
}

/// Accumulates V, B, C over forward-difference steps, one snapshot at a time.
///
/// The V contribution may come from a different snapshot than the B and C
/// contributions, which supports learning with an exactly known TQCM while
/// the differences stay noisy.
#[derive(Debug, Clone)]
pub(crate) struct Accumulator {
    v: nd::Array2<f64>,
    b: nd::Array1<f64>,
    c: f64,
    steps: usize,
}

impl Accumulator {
    pub(crate) fn new(l: usize) -> Self {
        Accumulator {
            v: nd::Array2::zeros((l, l)),
            b: nd::Array1::zeros(l),
            c: 0.0,
            steps: 0,
        }
    }

    /// Add the step at snapshot n given ρ_n, ρ_{n+1}, and the snapshot that
    /// sources the V contribution (usually ρ_n itself).
    pub(crate) fn push_step(
        &mut self,
        rho_v: &nd::Array2<C64>,
        rho_n: &nd::Array2<C64>,
        rho_np1: &nd::Array2<C64>,
        dt: f64,
        mats: &[nd::Array2<C64>],
    ) -> Result<(), LearnerError> {
        let comms = commutators(rho_n, mats)?;
        let same_source = std::ptr::eq(rho_v, rho_n);
        if same_source {
            self.v += &qcm_from_commutators(&comms);
        } else {
            let comms_v = commutators(rho_v, mats)?;
            self.v += &qcm_from_commutators(&comms_v);
        }

        let inv_dt = 1.0 / dt;
        let diff = (rho_np1 - rho_n).mapv(|z| z * inv_dt);
        for (j, k) in comms.iter().enumerate() {
            let t = trace_product(k, &diff);
            debug_assert!(
                t.re.abs() < 1e-10,
                "linear term {j} has real commutator residue {:.3e}",
                t.re
            );
            self.b[j] += t.im;
        }
        let c_term = trace_product(&diff, &diff);
        debug_assert!(c_term.im.abs() < 1e-10);
        self.c += c_term.re;
        self.steps += 1;
        Ok(())
    }

    pub(crate) fn v(&self) -> &nd::Array2<f64> {
        &self.v
    }

    pub(crate) fn b(&self) -> &nd::Array1<f64> {
        &self.b
    }

    pub(crate) fn c(&self) -> f64 {
        self.c
    }
}

pub(crate) fn ansatz_matrices(ansatz: &[PauliString]) -> Vec<nd::Array2<C64>> {
    ansatz.iter().map(pauli_matrix).collect()
}

pub(crate) fn check_ansatz(ansatz: &[PauliString], n_qubits: usize) -> Result<(), LearnerError> {
    if ansatz.is_empty() {
        return Err(LearnerError::EmptyAnsatz);
    }
    for (i, w) in ansatz.iter().enumerate() {
        if w.is_identity() {
            return Err(LearnerError::IdentityAnsatz);
        }
        if w.n_qubits() != n_qubits {
            return Err(LearnerError::WordLength {
                word: w.clone(),
                expected: n_qubits,
                got: w.n_qubits(),
            });
        }
        if ansatz[..i].contains(w) {
            return Err(LearnerError::DuplicateAnsatz(w.clone()));
        }
    }
    Ok(())
}

/// Total quantum covariance matrix V = Σ_n V_{ij,n} over n = 0..N_T−2.
pub fn tqcm(
    tomo: &TomographyTrajectory,
    ansatz: &[PauliString],
) -> Result<nd::Array2<f64>, LearnerError> {
    check_ansatz(ansatz, tomo.n_qubits())?;
    if tomo.len() < 2 {
        return Err(LearnerError::ShortTrajectory(tomo.len()));
    }
    let basis = OperatorBasis::build(tomo.n_qubits())?;
    let mats = ansatz_matrices(ansatz);
    let mut v = nd::Array2::zeros((ansatz.len(), ansatz.len()));
    for n in 0..tomo.len() - 1 {
        let rho = reconstruct(tomo.coeffs().row(n), &basis)?;
        v += &qcm_at_time(&rho, &mats)?;
    }
    Ok(v)
}

/// Linear cost term B_j = Σ_n tr(−i[L_j, ρ_n](ρ_{n+1} − ρ_n)/δt).
pub fn b_vector(
    tomo: &TomographyTrajectory,
    ansatz: &[PauliString],
) -> Result<nd::Array1<f64>, LearnerError> {
    check_ansatz(ansatz, tomo.n_qubits())?;
    Ok(accumulate(tomo, ansatz, None)?.b)
}

/// Constant cost term C = Σ_n tr((ρ_{n+1} − ρ_n)²)/δt².
pub fn c_scalar(tomo: &TomographyTrajectory) -> Result<f64, LearnerError> {
    if tomo.len() < 2 {
        return Err(LearnerError::ShortTrajectory(tomo.len()));
    }
    let basis = OperatorBasis::build(tomo.n_qubits())?;
    let inv_dt = 1.0 / tomo.dt();
    let mut c = 0.0;
    let mut prev = reconstruct(tomo.coeffs().row(0), &basis)?;
    for n in 1..tomo.len() {
        let next = reconstruct(tomo.coeffs().row(n), &basis)?;
        let diff = (&next - &prev).mapv(|z| z * inv_dt);
        c += trace_product(&diff, &diff).re;
        prev = next;
    }
    Ok(c)
}

fn accumulate(
    tomo: &TomographyTrajectory,
    ansatz: &[PauliString],
    v_source: Option<&TomographyTrajectory>,
) -> Result<Accumulator, LearnerError> {
    if tomo.len() < 2 {
        return Err(LearnerError::ShortTrajectory(tomo.len()));
    }
    if let Some(src) = v_source {
        if src.n_qubits() != tomo.n_qubits() {
            return Err(LearnerError::VSourceMismatch(format!(
                "register size {} vs {}",
                src.n_qubits(),
                tomo.n_qubits()
            )));
        }
        if src.len() != tomo.len() {
            return Err(LearnerError::VSourceMismatch(format!(
                "snapshot count {} vs {}",
                src.len(),
                tomo.len()
            )));
        }
        if src.dt() != tomo.dt() {
            return Err(LearnerError::VSourceMismatch(format!(
                "time step {} vs {}",
                src.dt(),
                tomo.dt()
            )));
        }
    }
    let basis = OperatorBasis::build(tomo.n_qubits())?;
    let mats = ansatz_matrices(ansatz);
    let mut acc = Accumulator::new(ansatz.len());
    let mut prev = reconstruct(tomo.coeffs().row(0), &basis)?;
    let mut prev_v = match v_source {
        Some(src) => Some(reconstruct(src.coeffs().row(0), &basis)?),
        None => None,
    };
    for n in 1..tomo.len() {
        let next = reconstruct(tomo.coeffs().row(n), &basis)?;
        match &prev_v {
            Some(rho_v) => acc.push_step(rho_v, &prev, &next, tomo.dt(), &mats)?,
            None => acc.push_step(&prev, &prev, &next, tomo.dt(), &mats)?,
        }
        prev = next;
        if let Some(src) = v_source {
            if n < tomo.len() - 1 {
                prev_v = Some(reconstruct(src.coeffs().row(n), &basis)?);
            }
        }
    }
    Ok(acc)
}

/// Quadratic cost f(h) = C − 2 Σ_i h_i B_i + Σ_ij V_ij h_i h_j.
pub fn cost(h: &nd::Array1<f64>, v: &nd::Array2<f64>, b: &nd::Array1<f64>, c: f64) -> f64 {
    c - 2.0 * h.dot(b) + h.dot(&v.dot(h))
}

/// Solve V h = B by spectral pseudo-inverse.
///
/// Eigenvalues below `rel_threshold · ω_max` are excluded; if any are, the
/// result is the minimum-norm stationary point, flagged singular. A TQCM with
/// no positive eigenvalue at all is a hard error: the trajectory carries no
/// Hamiltonian information.
pub fn solve_couplings(
    v: &nd::Array2<f64>,
    b: &nd::Array1<f64>,
    rel_threshold: f64,
) -> Result<CouplingSolution, LearnerError> {
    let l = v.nrows();
    if v.ncols() != l {
        return Err(LearnerError::DimensionMismatch(format!(
            "V is {}x{}",
            v.nrows(),
            v.ncols()
        )));
    }
    if b.len() != l {
        return Err(LearnerError::DimensionMismatch(format!(
            "B has length {}, V is {l}x{l}",
            b.len()
        )));
    }
    let (spectrum, eigenvectors) = v.eigh(UPLO::Lower)?;
    let omega_max = spectrum[l - 1];
    if omega_max.is_nan() || omega_max <= TQCM_ZERO_FLOOR {
        return Err(LearnerError::NoInformation);
    }
    let cutoff = rel_threshold * omega_max;
    let mut h_opt = nd::Array1::zeros(l);
    let mut rank = 0;
    for (k, &omega) in spectrum.iter().enumerate() {
        if omega >= cutoff {
            rank += 1;
            let q = eigenvectors.column(k);
            let weight = q.dot(b) / omega;
            h_opt.scaled_add(weight, &q);
        }
    }
    let singular = rank < l;
    let inv_frobenius = if singular {
        f64::INFINITY
    } else {
        spectrum.iter().map(|&w| w.powi(-2)).sum::<f64>().sqrt()
    };
    Ok(CouplingSolution {
        h_opt,
        spectrum,
        eigenvectors,
        rank,
        singular,
        inv_frobenius,
    })
}

impl LearnProblem {
    /// Validate the ansatz against the trajectory and cache the word matrices.
    pub fn new(
        tomo: TomographyTrajectory,
        ansatz: Vec<PauliString>,
    ) -> Result<Self, LearnerError> {
        if tomo.len() < 2 {
            return Err(LearnerError::ShortTrajectory(tomo.len()));
        }
        check_ansatz(&ansatz, tomo.n_qubits())?;
        let basis = OperatorBasis::build(tomo.n_qubits())?;
        let matrices = ansatz_matrices(&ansatz);
        Ok(LearnProblem {
            tomo,
            ansatz,
            basis,
            matrices,
        })
    }

    /// Tomographic data the couplings are learned from.
    pub fn tomo(&self) -> &TomographyTrajectory {
        &self.tomo
    }

    /// Candidate interaction words L_i.
    pub fn ansatz(&self) -> &[PauliString] {
        &self.ansatz
    }

    /// Tomography basis of the register.
    pub fn basis(&self) -> &OperatorBasis {
        &self.basis
    }

    /// Dense matrices of the ansatz words.
    pub fn matrices(&self) -> &[nd::Array2<C64>] {
        &self.matrices
    }

    /// Accumulate V, B, C and solve for the couplings.
    ///
    /// When `v_source` is given, the covariance matrix comes from that
    /// trajectory (typically the noiseless record of the same evolution)
    /// while B and C keep using the primary data.
    pub fn learn(
        &self,
        rel_threshold: f64,
        v_source: Option<&TomographyTrajectory>,
    ) -> Result<LearnReport, LearnerError> {
        let acc = accumulate(&self.tomo, &self.ansatz, v_source)?;
        let v = acc.v().clone();
        let b = acc.b().clone();
        let c = acc.c();
        let solution = solve_couplings(&v, &b, rel_threshold)?;
        let residual = cost(&solution.h_opt, &v, &b, c);
        let n_t = self.tomo.len();
        Ok(LearnReport {
            h_opt: solution.h_opt,
            v,
            b,
            c,
            residual,
            spectrum: solution.spectrum,
            v_eigenvectors: solution.eigenvectors,
            rank: solution.rank,
            singular: solution.singular,
            inv_frobenius: solution.inv_frobenius,
            inv_frobenius_scaled: n_t as f64 * solution.inv_frobenius,
            n_t,
            epsilon: None,
            bound: None,
            ipr: None,
            spectrum_predicted: None,
            degenerate: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve, DensityMatrix, ParamHamiltonian};
    use crate::pauli::Pauli;
    use crate::testutil::random_state;
    use crate::tomography::measure;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn words(list: &[&str]) -> Vec<PauliString> {
        list.iter().map(|w| PauliString::parse(w).unwrap()).collect()
    }

    fn tomo_for(
        h: &ParamHamiltonian,
        rho0: &DensityMatrix,
        dt: f64,
        n_t: usize,
    ) -> TomographyTrajectory {
        let basis = OperatorBasis::build(h.n_qubits()).unwrap();
        measure(&evolve(rho0, h, dt, n_t).unwrap(), &basis).unwrap()
    }

    fn plus_state() -> DensityMatrix {
        DensityMatrix::pure(&nd::array![c(1.0, 0.0), c(1.0, 0.0)]).unwrap()
    }

    fn random_h(seed: u64) -> ParamHamiltonian {
        let mut rng = StdRng::seed_from_u64(seed);
        let interactions = words(&["IX", "ZY", "XZ", "YY", "ZI"]);
        let couplings: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        ParamHamiltonian::assemble(interactions, couplings).unwrap()
    }

    #[test]
    fn qcm_of_maximally_mixed_is_zero() {
        let mats: Vec<_> = words(&["IX", "ZZ", "YX"])
            .iter()
            .map(pauli_matrix)
            .collect();
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        let v = qcm_at_time(rho.matrix(), &mats).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn qcm_ground_state_sigma_x() {
        let mut zero = nd::Array1::zeros(2);
        zero[0] = c(1.0, 0.0);
        let rho = DensityMatrix::pure(&zero).unwrap();
        let mats = vec![Pauli::X.matrix()];
        let v = qcm_at_time(rho.matrix(), &mats).unwrap();
        assert_relative_eq!(v[(0, 0)], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn qcm_permutes_with_the_ansatz() {
        let mut rng = StdRng::seed_from_u64(3);
        let rho = DensityMatrix::pure(&random_state(4, &mut rng)).unwrap();
        let a = words(&["IX", "ZY", "XZ"]);
        let b = words(&["ZY", "XZ", "IX"]);
        let mats_a: Vec<_> = a.iter().map(pauli_matrix).collect();
        let mats_b: Vec<_> = b.iter().map(pauli_matrix).collect();
        let va = qcm_at_time(rho.matrix(), &mats_a).unwrap();
        let vb = qcm_at_time(rho.matrix(), &mats_b).unwrap();
        let perm = [1usize, 2, 0];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(va[(perm[i], perm[j])], vb[(i, j)], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn tqcm_of_stationary_trajectory_is_multiple_of_first_term() {
        let h = random_h(60);
        let eigenstate = DensityMatrix::pure(&h.eigenvectors().column(1).to_owned()).unwrap();
        let ansatz = words(&["IX", "ZY", "XZ"]);
        let tomo = tomo_for(&h, &eigenstate, 0.02, 40);
        let v = tqcm(&tomo, &ansatz).unwrap();
        let mats: Vec<_> = ansatz.iter().map(pauli_matrix).collect();
        let v0 = qcm_at_time(eigenstate.matrix(), &mats).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(v[(i, j)], 39.0 * v0[(i, j)], epsilon = 1e-9, max_relative = 1e-9);
            }
        }

        let b = b_vector(&tomo, &ansatz).unwrap();
        assert!(b.iter().all(|&x| x.abs() < 1e-8), "stationary B = {b}");
        let c = c_scalar(&tomo).unwrap();
        assert!(c.abs() < 1e-12);
    }

    #[test]
    fn learn_on_maximally_mixed_trajectory_has_no_information() {
        let h = random_h(61);
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        let tomo = tomo_for(&h, &mixed, 0.02, 10);
        let problem = LearnProblem::new(tomo, words(&["IX", "ZY"])).unwrap();
        let err = problem
            .learn(DEFAULT_PSEUDO_INVERSE_THRESHOLD, None)
            .unwrap_err();
        assert!(matches!(err, LearnerError::NoInformation));
        assert!(err
            .to_string()
            .contains("trajectory carries no Hamiltonian information"));
    }

    #[test]
    fn bloch_oracle_single_qubit() {
        // H = sigma_z on |+><+| precesses the Bloch vector: r(t) =
        // (cos 2t, sin 2t, 0). Every learner ingredient then has a scalar
        // closed form evaluated here without any operator algebra.
        let h = ParamHamiltonian::assemble(words(&["Z"]), vec![1.0]).unwrap();
        let dt = 0.01;
        let n_t = 100;
        let tomo = tomo_for(&h, &plus_state(), dt, n_t);
        let ansatz = words(&["X", "Y", "Z"]);

        let v = tqcm(&tomo, &ansatz).unwrap();
        let b = b_vector(&tomo, &ansatz).unwrap();
        let c = c_scalar(&tomo).unwrap();

        let mut vxx = 0.0;
        let mut vyy = 0.0;
        let mut vxy = 0.0;
        let mut bz = 0.0;
        let mut c_ref = 0.0;
        for n in 0..n_t - 1 {
            let t = n as f64 * dt;
            vxx += 2.0 * (2.0 * t).sin().powi(2);
            vyy += 2.0 * (2.0 * t).cos().powi(2);
            vxy -= (4.0 * t).sin();
            let r = [(2.0 * t).cos(), (2.0 * t).sin()];
            let r1 = [(2.0 * (t + dt)).cos(), (2.0 * (t + dt)).sin()];
            bz += (r[0] * (r1[1] - r[1]) - r[1] * (r1[0] - r[0])) / dt;
            c_ref += ((r1[0] - r[0]).powi(2) + (r1[1] - r[1]).powi(2)) / (2.0 * dt * dt);
        }
        let vzz = 2.0 * (n_t - 1) as f64;

        assert_relative_eq!(v[(0, 0)], vxx, max_relative = 1e-10);
        assert_relative_eq!(v[(1, 1)], vyy, max_relative = 1e-10);
        assert_relative_eq!(v[(2, 2)], vzz, max_relative = 1e-12);
        assert_relative_eq!(v[(0, 1)], vxy, max_relative = 1e-9);
        assert!(v[(0, 2)].abs() < 1e-10 && v[(1, 2)].abs() < 1e-10);
        assert_relative_eq!(b[2], bz, max_relative = 1e-10);
        assert!(b[0].abs() < 1e-10 && b[1].abs() < 1e-10);
        assert_relative_eq!(c, c_ref, max_relative = 1e-10);

        // The block structure makes the solve itself closed-form: h_z =
        // sin(2 dt) / (2 dt), the finite-difference image of h_z = 1.
        let problem = LearnProblem::new(tomo, ansatz).unwrap();
        let report = problem
            .learn(DEFAULT_PSEUDO_INVERSE_THRESHOLD, None)
            .unwrap();
        assert!(!report.singular);
        assert_relative_eq!(
            report.h_opt[2],
            (2.0 * dt).sin() / (2.0 * dt),
            max_relative = 1e-9
        );
        assert!(report.h_opt[0].abs() < 1e-8 && report.h_opt[1].abs() < 1e-8);
        assert_relative_eq!(
            report.residual,
            cost(&report.h_opt, &report.v, &report.b, report.c),
            epsilon = 1e-9
        );
        let gap = (&report.v.dot(&report.h_opt) - &report.b)
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        let b_norm = report.b.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(gap <= 1e-8 * b_norm);
    }

    #[test]
    fn b_approaches_v_times_truth_for_small_steps() {
        let h = random_h(62);
        let mut rng = StdRng::seed_from_u64(63);
        let rho0 = DensityMatrix::pure(&random_state(4, &mut rng)).unwrap();
        let tomo = tomo_for(&h, &rho0, 1e-4, 60);
        let ansatz = h.interactions().to_vec();
        let v = tqcm(&tomo, &ansatz).unwrap();
        let b = b_vector(&tomo, &ansatz).unwrap();
        let h_true = nd::Array1::from_vec(h.couplings().to_vec());
        let vh = v.dot(&h_true);
        let err = (&b - &vh).iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = vh.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(err < 1e-3 * scale, "|B - V h| = {err}, scale {scale}");
    }

    #[test]
    fn time_reversed_trajectory_flips_b() {
        let h = random_h(64);
        let mut rng = StdRng::seed_from_u64(65);
        let rho0 = DensityMatrix::pure(&random_state(4, &mut rng)).unwrap();
        let dt = 1e-3;
        let n_t = 150;
        let forward = evolve(&rho0, &h, dt, n_t).unwrap();
        let ansatz = h.interactions().to_vec();
        let basis = OperatorBasis::build(2).unwrap();
        let tomo_f = measure(&forward, &basis).unwrap();

        // Evolving the endpoint under -H rewinds through the same states.
        let minus =
            ParamHamiltonian::assemble(ansatz.clone(), h.couplings().iter().map(|g| -g).collect())
                .unwrap();
        let last = forward.states().last().unwrap().clone();
        let backward = evolve(&last, &minus, dt, n_t).unwrap();
        let tomo_b = measure(&backward, &basis).unwrap();

        let bf = b_vector(&tomo_f, &ansatz).unwrap();
        let bb = b_vector(&tomo_b, &ansatz).unwrap();
        let sum = (&bf + &bb).iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = bf.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(sum < 0.01 * scale, "|B_f + B_b| = {sum}, |B_f| = {scale}");

        let problem = LearnProblem::new(tomo_b, ansatz).unwrap();
        let report = problem
            .learn(DEFAULT_PSEUDO_INVERSE_THRESHOLD, None)
            .unwrap();
        for (got, want) in report.h_opt.iter().zip(h.couplings()) {
            assert_relative_eq!(*got, -want, epsilon = 0.03, max_relative = 0.02);
        }
    }

    #[test]
    fn cost_examples() {
        let v = nd::array![[2.0, 0.3], [0.3, 1.0]];
        let b = nd::array![1.0, -0.5];
        let c = 4.0;
        let zero = nd::Array1::zeros(2);
        assert_eq!(cost(&zero, &v, &b, c), c);

        let solution = solve_couplings(&v, &b, 1e-10).unwrap();
        let f_opt = cost(&solution.h_opt, &v, &b, c);
        let mut rng = StdRng::seed_from_u64(66);
        for _ in 0..20 {
            let d = nd::Array1::from_shape_fn(2, |_| rng.random_range(-1.0..1.0));
            let f = cost(&(&solution.h_opt + &d), &v, &b, c);
            assert!(f >= f_opt - 1e-12);
        }

        // Nonsingular optimum equals C - B . V^{-1} B.
        let det = v[(0, 0)] * v[(1, 1)] - v[(0, 1)] * v[(1, 0)];
        let v_inv_b = nd::array![
            (v[(1, 1)] * b[0] - v[(0, 1)] * b[1]) / det,
            (v[(0, 0)] * b[1] - v[(1, 0)] * b[0]) / det
        ];
        assert_relative_eq!(f_opt, c - b.dot(&v_inv_b), epsilon = 1e-12);
    }

    #[test]
    fn solve_identity_and_singular_cases() {
        let v = nd::Array2::eye(3);
        let b = nd::array![1.0, 0.0, 0.0];
        let sol = solve_couplings(&v, &b, 1e-10).unwrap();
        assert!(!sol.singular);
        assert_eq!(sol.rank, 3);
        assert_relative_eq!(sol.h_opt[0], 1.0, epsilon = 1e-14);
        assert!(sol.h_opt[1].abs() < 1e-14 && sol.h_opt[2].abs() < 1e-14);
        assert_relative_eq!(sol.inv_frobenius, 3.0f64.sqrt(), epsilon = 1e-14);

        let v = nd::array![[2.0, 0.0], [0.0, 0.0]];
        let b = nd::array![4.0, 3.0];
        let sol = solve_couplings(&v, &b, 1e-10).unwrap();
        assert!(sol.singular);
        assert_eq!(sol.rank, 1);
        assert_relative_eq!(sol.h_opt[0], 2.0, epsilon = 1e-12);
        assert!(sol.h_opt[1].abs() < 1e-12);
        assert!(sol.inv_frobenius.is_infinite());

        let zero = nd::Array2::zeros((2, 2));
        let err = solve_couplings(&zero, &b, 1e-10).unwrap_err();
        assert!(matches!(err, LearnerError::NoInformation));

        // Roundoff-scale leftovers of a stationary trajectory are no
        // information either, even though they are not exactly zero.
        let dust = nd::array![[3e-30, 1e-31], [1e-31, 8e-29]];
        assert!(matches!(
            solve_couplings(&dust, &b, 1e-10),
            Err(LearnerError::NoInformation)
        ));
    }

    #[test]
    fn spectrum_grows_with_observation_time() {
        let h = random_h(67);
        let mut rng = StdRng::seed_from_u64(68);
        let rho0 = DensityMatrix::pure(&random_state(4, &mut rng)).unwrap();
        let ansatz = words(&["IX", "ZY", "XZ", "ZZ"]);
        let short = tqcm(&tomo_for(&h, &rho0, 0.05, 40), &ansatz).unwrap();
        let long = tqcm(&tomo_for(&h, &rho0, 0.05, 80), &ansatz).unwrap();
        let (ws, _) = short.eigh(UPLO::Lower).unwrap();
        let (wl, _) = long.eigh(UPLO::Lower).unwrap();
        for (&s, &l) in ws.iter().zip(wl.iter()) {
            assert!(l >= s - 1e-10, "eigenvalue shrank: {s} -> {l}");
        }
        assert!(ws.iter().all(|&w| w > -1e-9), "TQCM not PSD: {ws}");
    }

    #[test]
    fn scaling_the_hamiltonian_scales_the_couplings() {
        let h = random_h(69);
        let scaled = ParamHamiltonian::assemble(
            h.interactions().to_vec(),
            h.couplings().iter().map(|g| 3.0 * g).collect(),
        )
        .unwrap();
        let mut rng = StdRng::seed_from_u64(70);
        let rho0 = DensityMatrix::pure(&random_state(4, &mut rng)).unwrap();
        let n_t = 50;
        let tomo_a = tomo_for(&h, &rho0, 3e-4, n_t);
        let tomo_b = tomo_for(&scaled, &rho0, 1e-4, n_t);
        let ansatz = h.interactions().to_vec();

        let va = tqcm(&tomo_a, &ansatz).unwrap();
        let vb = tqcm(&tomo_b, &ansatz).unwrap();
        let v_diff: f64 = (&va - &vb).iter().map(|x| x.abs()).sum();
        let v_scale: f64 = va.iter().map(|x| x.abs()).sum();
        assert!(v_diff < 1e-8 * v_scale, "V changed under rescaling: {v_diff}");

        let ba = b_vector(&tomo_a, &ansatz).unwrap();
        let bb = b_vector(&tomo_b, &ansatz).unwrap();
        let b_diff = (&bb - &ba.mapv(|x| 3.0 * x))
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        let b_scale = bb.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(b_diff < 1e-8 * b_scale);

        let ha = LearnProblem::new(tomo_a, ansatz.clone())
            .unwrap()
            .learn(DEFAULT_PSEUDO_INVERSE_THRESHOLD, None)
            .unwrap()
            .h_opt;
        let hb = LearnProblem::new(tomo_b, ansatz)
            .unwrap()
            .learn(DEFAULT_PSEUDO_INVERSE_THRESHOLD, None)
            .unwrap()
            .h_opt;
        let truth = nd::Array1::from_vec(h.couplings().iter().map(|g| 3.0 * g).collect());
        let err = (&hb - &truth).iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = truth.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(err < 0.005 * scale, "scaled solve off by {err} of {scale}");
        let rel = (&hb - &ha.mapv(|x| 3.0 * x))
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        assert!(rel < 1e-6 * scale);
    }

    #[test]
    fn permuting_the_ansatz_permutes_the_couplings() {
        let h = random_h(71);
        let mut rng = StdRng::seed_from_u64(72);
        let rho0 = DensityMatrix::pure(&random_state(4, &mut rng)).unwrap();
        let tomo = tomo_for(&h, &rho0, 0.01, 60);
        let ansatz = words(&["IX", "ZY", "XZ", "YY", "ZI"]);
        let perm = [3usize, 0, 4, 2, 1];
        let shuffled: Vec<PauliString> = perm.iter().map(|&i| ansatz[i].clone()).collect();

        let ha = LearnProblem::new(tomo.clone(), ansatz)
            .unwrap()
            .learn(DEFAULT_PSEUDO_INVERSE_THRESHOLD, None)
            .unwrap()
            .h_opt;
        let hb = LearnProblem::new(tomo, shuffled)
            .unwrap()
            .learn(DEFAULT_PSEUDO_INVERSE_THRESHOLD, None)
            .unwrap()
            .h_opt;
        for (k, &i) in perm.iter().enumerate() {
            assert_relative_eq!(hb[k], ha[i], epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn v_source_replaces_the_covariance_matrix() {
        let h = random_h(73);
        let mut rng = StdRng::seed_from_u64(74);
        let rho0 = DensityMatrix::pure(&random_state(4, &mut rng)).unwrap();
        let exact = tomo_for(&h, &rho0, 0.01, 40);
        let noisy = exact
            .add_noise(1000, crate::tomography::NoiseDistribution::Uniform, 5)
            .unwrap();
        let ansatz = h.interactions().to_vec();

        let problem = LearnProblem::new(noisy.clone(), ansatz.clone()).unwrap();
        let mixed = problem
            .learn(DEFAULT_PSEUDO_INVERSE_THRESHOLD, Some(&exact))
            .unwrap();
        let v_exact = tqcm(&exact, &ansatz).unwrap();
        let diff: f64 = (&mixed.v - &v_exact).iter().map(|x| x.abs()).sum();
        assert!(diff < 1e-12, "v_source not honored: {diff}");

        let plain = problem.learn(DEFAULT_PSEUDO_INVERSE_THRESHOLD, None).unwrap();
        let b_diff: f64 = (&mixed.b - &plain.b).iter().map(|x| x.abs()).sum();
        assert!(b_diff < 1e-12, "B must come from the noisy data");
        let v_gap: f64 = (&plain.v - &v_exact).iter().map(|x| x.abs()).sum();
        assert!(v_gap > 1e-3, "noisy and exact V should differ");

        let same = problem
            .learn(DEFAULT_PSEUDO_INVERSE_THRESHOLD, Some(&noisy))
            .unwrap();
        let self_diff: f64 = (&same.v - &plain.v).iter().map(|x| x.abs()).sum();
        assert!(self_diff < 1e-12);

        let shorter = tomo_for(&h, &rho0, 0.01, 30);
        assert!(matches!(
            problem.learn(DEFAULT_PSEUDO_INVERSE_THRESHOLD, Some(&shorter)),
            Err(LearnerError::VSourceMismatch(_))
        ));
    }

    #[test]
    fn problem_validation_rejects_bad_ansatz() {
        let h = random_h(75);
        let rho0 = DensityMatrix::maximally_mixed(2).unwrap();
        let tomo = tomo_for(&h, &rho0, 0.02, 4);
        assert!(matches!(
            LearnProblem::new(tomo.clone(), vec![]),
            Err(LearnerError::EmptyAnsatz)
        ));
        assert!(matches!(
            LearnProblem::new(tomo.clone(), words(&["II"])),
            Err(LearnerError::IdentityAnsatz)
        ));
        assert!(matches!(
            LearnProblem::new(tomo.clone(), words(&["IX", "IX"])),
            Err(LearnerError::DuplicateAnsatz(_))
        ));
        assert!(matches!(
            LearnProblem::new(tomo, words(&["X"])),
            Err(LearnerError::WordLength { .. })
        ));
    }
}
