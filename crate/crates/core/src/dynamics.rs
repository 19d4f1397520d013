//! Hamiltonian assembly and exact density-matrix propagation.
//!
//! Hamiltonians are sums of unnormalized Pauli words with real couplings and
//! are eigendecomposed once at assembly. Trajectories are generated directly
//! in the eigenbasis, ρ(t) = U e^(-iEt) U†ρ0 U e^(+iEt) U†, so the
//! finite-difference remainder of the learner is the only systematic error
//! anywhere in the pipeline. A separate unitary-schedule mode covers
//! externally specified gate dynamics U(t).

use crate::pauli::{identity, pauli_matrix, trace_product, PauliError, PauliString};
use ndarray::{self as nd};
use ndarray_linalg::{EigValsh, Eigh, UPLO};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

/// Eigenvalue gaps below this are treated as degenerate and flagged, since
/// the accuracy theory assumes a non-degenerate spectrum.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Errors from Hamiltonian assembly, state validation, and propagation.
#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("interaction and coupling lists have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no interaction terms supplied")]
    EmptyHamiltonian,
    #[error("interaction words must share one register, found lengths {0} and {1}")]
    MixedWordLengths(usize, usize),
    #[error("duplicate interaction term {0}")]
    DuplicateInteraction(PauliString),
    #[error("the identity word is not traceless and cannot be an interaction term")]
    IdentityInteraction,
    #[error("coupling {0} is not finite")]
    NonFiniteCoupling(f64),
    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),
    #[error("a trajectory needs at least two snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error("not a density matrix: {0}")]
    InvalidState(String),
    #[error("operator dimension {0} does not match state dimension {1}")]
    DimensionMismatch(usize, usize),
    #[error("schedule is not unitary at t = {t}: deviation {deviation:.3e}")]
    NonUnitary { t: f64, deviation: f64 },
    #[error("schedule does not start from the identity: deviation {0:.3e} at t = 0")]
    ScheduleNotIdentityAtZero(f64),
    #[error("eigensolver failed: {0}")]
    Eigensolver(#[from] ndarray_linalg::error::LinalgError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// Conjugate transpose.
fn dagger(m: &nd::Array2<C64>) -> nd::Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// Restore exact elementwise Hermiticity after float matrix products.
fn hermitize(m: nd::Array2<C64>) -> nd::Array2<C64> {
    let adj = dagger(&m);
    (m + adj) * C64::new(0.5, 0.0)
}

/// Eigendecompose a Hermitian matrix into ascending eigenvalues and
/// eigenvector columns of the matrix itself.
///
/// LAPACK reads the buffer column-major, so on row-major input the raw
/// `eigh` columns diagonalize the transpose instead; the residual of the
/// extremal eigenpair decides whether the columns need conjugating.
fn eigh_hermitian(
    m: &nd::Array2<C64>,
) -> Result<(nd::Array1<f64>, nd::Array2<C64>), ndarray_linalg::error::LinalgError> {
    let (vals, vecs) = m.eigh(UPLO::Lower)?;
    let k = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite eigenvalues"))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let residual = |v: &nd::Array1<C64>| -> f64 {
        (m.dot(v) - v.mapv(|z| z * vals[k]))
            .iter()
            .map(|z| z.norm())
            .sum()
    };
    let col = vecs.column(k).to_owned();
    let conj_col = col.mapv(|z| z.conj());
    if residual(&conj_col) < residual(&col) {
        Ok((vals, vecs.mapv(|z| z.conj())))
    } else {
        Ok((vals, vecs))
    }
}

/// Parameterized Hamiltonian H = Σ_i h_i L_i with cached eigendecomposition.
#[derive(Debug, Clone)]
pub struct ParamHamiltonian {
    interactions: Vec<PauliString>,
    couplings: Vec<f64>,
    matrix: nd::Array2<C64>,
    eigenvalues: nd::Array1<f64>,
    eigenvectors: nd::Array2<C64>,
}

impl ParamHamiltonian {
    /// Build the dense matrix and eigendecompose it once.
    ///
    /// Interaction words must be distinct, traceless (no identity word), and
    /// act on a common register.
    pub fn assemble(
        interactions: Vec<PauliString>,
        couplings: Vec<f64>,
    ) -> Result<Self, DynamicsError> {
        if interactions.len() != couplings.len() {
            return Err(DynamicsError::LengthMismatch(
                interactions.len(),
                couplings.len(),
            ));
        }
        if interactions.is_empty() {
            return Err(DynamicsError::EmptyHamiltonian);
        }
        let n_qubits = interactions[0].n_qubits();
        for w in &interactions {
            if w.n_qubits() != n_qubits {
                return Err(DynamicsError::MixedWordLengths(n_qubits, w.n_qubits()));
            }
            if w.is_identity() {
                return Err(DynamicsError::IdentityInteraction);
            }
        }
        for (i, w) in interactions.iter().enumerate() {
            if interactions[..i].contains(w) {
                return Err(DynamicsError::DuplicateInteraction(w.clone()));
            }
        }
        for &h in &couplings {
            if !h.is_finite() {
                return Err(DynamicsError::NonFiniteCoupling(h));
            }
        }

        let dim = 1 << n_qubits;
        let mut matrix: nd::Array2<C64> = nd::Array2::zeros((dim, dim));
        for (w, &h) in interactions.iter().zip(&couplings) {
            matrix += &(pauli_matrix(w) * C64::new(h, 0.0));
        }
        let (eigenvalues, eigenvectors) = eigh_hermitian(&matrix)?;
        Ok(ParamHamiltonian {
            interactions,
            couplings,
            matrix,
            eigenvalues,
            eigenvectors,
        })
    }

    /// Number of sites.
    pub fn n_qubits(&self) -> usize {
        self.interactions[0].n_qubits()
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Interaction words L_i.
    pub fn interactions(&self) -> &[PauliString] {
        &self.interactions
    }

    /// Couplings h_i.
    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// Dense Hamiltonian matrix.
    pub fn matrix(&self) -> &nd::Array2<C64> {
        &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &nd::Array1<f64> {
        &self.eigenvalues
    }

    /// Eigenvector columns, ordered like the eigenvalues.
    pub fn eigenvectors(&self) -> &nd::Array2<C64> {
        &self.eigenvectors
    }

    /// Spectral norm: largest |E_α|.
    pub fn operator_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |m, &e| m.max(e.abs()))
    }

    /// Smallest gap between adjacent sorted eigenvalues.
    pub fn min_gap(&self) -> f64 {
        self.eigenvalues
            .windows(2)
            .into_iter()
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// True when two eigenvalues are closer than `tol`.
    pub fn is_degenerate(&self, tol: f64) -> bool {
        self.min_gap() < tol
    }
}

/// Validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: nd::Array2<C64>,
}

impl DensityMatrix {
    /// Validate and wrap a dense matrix.
    ///
    /// Checks Hermiticity (1e-12 elementwise), unit trace (1e-10), and
    /// spectrum bounded below by -1e-10.
    pub fn new(matrix: nd::Array2<C64>) -> Result<Self, DynamicsError> {
        let dim = matrix.nrows();
        if dim != matrix.ncols() {
            return Err(DynamicsError::InvalidState(format!(
                "matrix is {}x{}, not square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if dim < 2 || !dim.is_power_of_two() {
            return Err(DynamicsError::InvalidState(format!(
                "dimension {dim} is not 2^n for n >= 1"
            )));
        }
        for i in 0..dim {
            for j in 0..dim {
                let resid = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                if resid > 1e-12 {
                    return Err(DynamicsError::InvalidState(format!(
                        "not Hermitian at ({i}, {j}): residual {resid:.3e}"
                    )));
                }
            }
        }
        let trace: C64 = matrix.diag().sum();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
            return Err(DynamicsError::InvalidState(format!(
                "trace is {trace}, expected 1"
            )));
        }
        let evals = matrix.eigvalsh(UPLO::Lower)?;
        if let Some(&min) = evals
            .iter()
            .min_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"))
        {
            if min < -1e-10 {
                return Err(DynamicsError::InvalidState(format!(
                    "negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(DensityMatrix { matrix })
    }

    /// Projector |ψ⟩⟨ψ| onto a state vector; the amplitudes are normalized.
    pub fn pure(amplitudes: &nd::Array1<C64>) -> Result<Self, DynamicsError> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(DynamicsError::InvalidState(format!(
                "amplitude vector length {dim} is not 2^n for n >= 1"
            )));
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(DynamicsError::InvalidState(
                "amplitude vector has zero norm".into(),
            ));
        }
        let psi = amplitudes.mapv(|z| z / norm);
        let matrix = nd::Array2::from_shape_fn((dim, dim), |(i, j)| psi[i] * psi[j].conj());
        Ok(DensityMatrix { matrix })
    }

    /// The fully mixed state 1/2^n.
    pub fn maximally_mixed(n_qubits: usize) -> Result<Self, DynamicsError> {
        if n_qubits == 0 || n_qubits > crate::pauli::MAX_QUBITS {
            return Err(DynamicsError::InvalidState(format!(
                "unsupported register size {n_qubits}"
            )));
        }
        let dim = 1 << n_qubits;
        let scale = C64::new(1.0 / dim as f64, 0.0);
        Ok(DensityMatrix {
            matrix: identity(dim) * scale,
        })
    }

    /// Wrap a matrix known to be a valid state (unitary images of validated
    /// states); skips the eigensolve.
    pub(crate) fn from_unchecked(matrix: nd::Array2<C64>) -> Self {
        DensityMatrix { matrix }
    }

    /// Dense matrix.
    pub fn matrix(&self) -> &nd::Array2<C64> {
        &self.matrix
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of qubits.
    pub fn n_qubits(&self) -> usize {
        self.matrix.nrows().trailing_zeros() as usize
    }

    /// Purity tr(ρ²).
    pub fn purity(&self) -> f64 {
        trace_product(&self.matrix, &self.matrix).re
    }

    /// Depolarize: (1-p) ρ + p 1/2^n.
    pub fn depolarize(&self, p: f64) -> Result<Self, DynamicsError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(DynamicsError::InvalidState(format!(
                "depolarization probability {p} outside [0, 1]"
            )));
        }
        let dim = self.dim();
        let mixed = identity(dim) * C64::new(p / dim as f64, 0.0);
        Ok(DensityMatrix {
            matrix: &self.matrix * C64::new(1.0 - p, 0.0) + mixed,
        })
    }
}

/// Uniformly sampled trajectory ρ(t_n) at t_n = n·δt, n = 0..N_T-1.
#[derive(Debug, Clone)]
pub struct StateTrajectory {
    dt: f64,
    times: Vec<f64>,
    states: Vec<DensityMatrix>,
}

impl StateTrajectory {
    /// Time step δt.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Sample times.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Snapshots in time order.
    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    /// Number of snapshots N_T.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    /// Never true for a constructed trajectory.
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Number of qubits.
    pub fn n_qubits(&self) -> usize {
        self.states[0].n_qubits()
    }
}

fn check_time_grid(dt: f64, n_t: usize) -> Result<(), DynamicsError> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(DynamicsError::InvalidTimeStep(dt));
    }
    if n_t < 2 {
        return Err(DynamicsError::TooFewSnapshots(n_t));
    }
    Ok(())
}

/// Propagate ρ0 exactly under H: ρ(t_n) = e^(-iHt_n) ρ0 e^(+iHt_n).
///
/// Work happens in the cached eigenbasis of H, so each snapshot is a diagonal
/// phase rotation plus two basis changes; there is no integrator error. The
/// first snapshot is ρ0 itself.
pub fn evolve(
    rho0: &DensityMatrix,
    h: &ParamHamiltonian,
    dt: f64,
    n_t: usize,
) -> Result<StateTrajectory, DynamicsError> {
    check_time_grid(dt, n_t)?;
    if rho0.dim() != h.dim() {
        return Err(DynamicsError::DimensionMismatch(h.dim(), rho0.dim()));
    }
    let dim = h.dim();
    let u = h.eigenvectors();
    let u_dag = dagger(u);
    let sigma0 = u_dag.dot(rho0.matrix()).dot(u);
    let energies = h.eigenvalues();

    let mut times = Vec::with_capacity(n_t);
    let mut states = Vec::with_capacity(n_t);
    for n in 0..n_t {
        let t = n as f64 * dt;
        times.push(t);
        if n == 0 {
            states.push(rho0.clone());
            continue;
        }
        let sigma_t = nd::Array2::from_shape_fn((dim, dim), |(a, b)| {
            let phase = C64::from_polar(1.0, -(energies[a] - energies[b]) * t);
            sigma0[(a, b)] * phase
        });
        let rho_t = hermitize(u.dot(&sigma_t).dot(&u_dag));
        states.push(DensityMatrix::from_unchecked(rho_t));
    }
    Ok(StateTrajectory { dt, times, states })
}

/// Time-dependent unitary schedule t -> U(t) with U(0) = 1.
pub struct UnitarySchedule {
    dim: usize,
    generator: Box<dyn Fn(f64) -> nd::Array2<C64> + Send + Sync>,
}

impl fmt::Debug for UnitarySchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnitarySchedule")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl UnitarySchedule {
    /// Wrap a time-to-unitary map; unitarity is checked at sampled times.
    pub fn new<F>(dim: usize, generator: F) -> Self
    where
        F: Fn(f64) -> nd::Array2<C64> + Send + Sync + 'static,
    {
        UnitarySchedule {
            dim,
            generator: Box::new(generator),
        }
    }

    /// Matrix dimension of the schedule.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluate U(t) as supplied.
    pub fn at(&self, t: f64) -> nd::Array2<C64> {
        (self.generator)(t)
    }

    /// Propagator family of a static Hamiltonian: U(t) = e^(-iHt).
    pub fn from_hamiltonian(h: &ParamHamiltonian) -> Self {
        let dim = h.dim();
        let u = h.eigenvectors().clone();
        let u_dag = dagger(&u);
        let energies = h.eigenvalues().clone();
        UnitarySchedule::new(dim, move |t| {
            let mut phased = u.clone();
            for (mut col, &e) in phased.columns_mut().into_iter().zip(energies.iter()) {
                let phase = C64::from_polar(1.0, -e * t);
                col.mapv_inplace(|z| z * phase);
            }
            phased.dot(&u_dag)
        })
    }

    /// Two-qubit cross-resonance gate schedule: a cos(4πt) / -i·sin(4πt)
    /// rotation on the {|00⟩, |01⟩} block, identity on the rest.
    pub fn cross_resonance_gate() -> Self {
        UnitarySchedule::new(4, |t| {
            let cos = C64::new((4.0 * PI * t).cos(), 0.0);
            let isin = C64::new(0.0, -(4.0 * PI * t).sin());
            let mut u = identity(4);
            u[(0, 0)] = cos;
            u[(0, 1)] = isin;
            u[(1, 0)] = isin;
            u[(1, 1)] = cos;
            u
        })
    }
}

/// Propagate ρ0 through an explicit unitary schedule: ρ(t_n) = U(t_n) ρ0 U(t_n)†.
///
/// Every sampled U(t_n) is validated to be unitary within 1e-8, and the
/// schedule must start from the identity.
pub fn evolve_unitary(
    rho0: &DensityMatrix,
    schedule: &UnitarySchedule,
    dt: f64,
    n_t: usize,
) -> Result<StateTrajectory, DynamicsError> {
    check_time_grid(dt, n_t)?;
    if rho0.dim() != schedule.dim() {
        return Err(DynamicsError::DimensionMismatch(schedule.dim(), rho0.dim()));
    }
    let dim = schedule.dim();

    let unitarity_deviation = |u: &nd::Array2<C64>| -> f64 {
        let gram = dagger(u).dot(u);
        let mut dev = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let expected = if i == j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                };
                dev = dev.max((gram[(i, j)] - expected).norm());
            }
        }
        dev
    };

    let u0 = schedule.at(0.0);
    let id_dev = (0..dim)
        .flat_map(|i| (0..dim).map(move |j| (i, j)))
        .map(|(i, j)| {
            let expected = if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            (u0[(i, j)] - expected).norm()
        })
        .fold(0.0f64, f64::max);
    if id_dev > 1e-8 {
        return Err(DynamicsError::ScheduleNotIdentityAtZero(id_dev));
    }

    let mut times = Vec::with_capacity(n_t);
    let mut states = Vec::with_capacity(n_t);
    for n in 0..n_t {
        let t = n as f64 * dt;
        times.push(t);
        if n == 0 {
            states.push(rho0.clone());
            continue;
        }
        let u = schedule.at(t);
        let deviation = unitarity_deviation(&u);
        if deviation > 1e-8 {
            return Err(DynamicsError::NonUnitary { t, deviation });
        }
        let rho_t = hermitize(u.dot(rho0.matrix()).dot(&dagger(&u)));
        states.push(DensityMatrix::from_unchecked(rho_t));
    }
    Ok(StateTrajectory { dt, times, states })
}

/// Dephase ρ in the eigenbasis of H: keep Σ_α |α⟩⟨α| ρ |α⟩⟨α|.
///
/// The result commutes with H and is the long-time average of the evolving
/// state when the spectrum is non-degenerate.
pub fn dephase(rho: &DensityMatrix, h: &ParamHamiltonian) -> Result<DensityMatrix, DynamicsError> {
    if rho.dim() != h.dim() {
        return Err(DynamicsError::DimensionMismatch(h.dim(), rho.dim()));
    }
    let dim = h.dim();
    let u = h.eigenvectors();
    let u_dag = dagger(u);
    let sigma = u_dag.dot(rho.matrix()).dot(u);
    let diag = nd::Array2::from_shape_fn((dim, dim), |(a, b)| {
        if a == b {
            C64::new(sigma[(a, a)].re, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let back = hermitize(u.dot(&diag).dot(&u_dag));
    Ok(DensityMatrix::from_unchecked(back))
}

/// Contiguous runs of eigenvalues closer than `tol`, as index ranges into the
/// ascending spectrum. Each run is one degenerate level.
pub(crate) fn level_blocks(eigenvalues: &[f64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for k in 1..=eigenvalues.len() {
        if k == eigenvalues.len() || eigenvalues[k] - eigenvalues[k - 1] > tol {
            blocks.push(start..k);
            start = k;
        }
    }
    blocks
}

/// Dephase ρ over the degenerate levels of H: keep Σ_s P_s ρ P_s with P_s the
/// projector onto the eigenspace of the s-th distinct eigenvalue (levels
/// separated by less than `tol` merge).
///
/// Coherences inside a degenerate eigenspace never oscillate, so this is the
/// true long-time average of the evolving state; for a non-degenerate
/// spectrum it coincides with [`dephase`].
pub fn block_dephase(
    rho: &DensityMatrix,
    h: &ParamHamiltonian,
    tol: f64,
) -> Result<DensityMatrix, DynamicsError> {
    if rho.dim() != h.dim() {
        return Err(DynamicsError::DimensionMismatch(h.dim(), rho.dim()));
    }
    let u = h.eigenvectors();
    let u_dag = dagger(u);
    let mut sigma = u_dag.dot(rho.matrix()).dot(u);
    let blocks = level_blocks(
        h.eigenvalues().as_slice().expect("contiguous eigenvalues"),
        tol,
    );
    let mut level = vec![0usize; h.dim()];
    for (s, block) in blocks.iter().enumerate() {
        for a in block.clone() {
            level[a] = s;
        }
    }
    for ((a, b), entry) in sigma.indexed_iter_mut() {
        if level[a] != level[b] {
            *entry = C64::new(0.0, 0.0);
        }
    }
    let back = hermitize(u.dot(&sigma).dot(&u_dag));
    Ok(DensityMatrix::from_unchecked(back))
}
