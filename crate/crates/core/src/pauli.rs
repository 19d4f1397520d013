//! Pauli words and the orthonormal operator basis they generate.
//!
//! Operators are dense complex matrices. A Pauli word acts on qubit 0 with
//! its leftmost letter, so the matrix of `"ZX"` is σ_z⊗σ_x. Tomography basis
//! elements carry the uniform normalization 2^(-n/2) that makes them
//! orthonormal under the Hilbert-Schmidt product tr(AB); interaction
//! operators stay unnormalized so their operator norm is 1 and couplings
//! keep their physical units.

use ndarray::{self as nd, linalg::kron};
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Largest supported register; the basis holds 4^n dense 2^n x 2^n matrices.
pub const MAX_QUBITS: usize = 6;

/// Errors from Pauli-word handling and basis construction.
#[derive(Debug, Error)]
pub enum PauliError {
    #[error("empty Pauli word")]
    EmptyWord,
    #[error("invalid Pauli letter '{0}', expected one of I, X, Y, Z")]
    InvalidLetter(char),
    #[error("{requested} qubits exceed the supported maximum of {max}")]
    TooManyQubits { requested: usize, max: usize },
    #[error("operator dimensions {0}x{0} and {1}x{1} do not match")]
    DimensionMismatch(usize, usize),
    #[error("eigensolver failed: {0}")]
    Eigensolver(#[from] ndarray_linalg::error::LinalgError),
}

/// Single-site Pauli operator label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// All labels in canonical (lexicographic) order.
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    /// Parse a single letter.
    pub fn from_letter(c: char) -> Result<Self, PauliError> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(PauliError::InvalidLetter(other)),
        }
    }

    /// Canonical letter of this label.
    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Dense 2x2 matrix of this operator.
    pub fn matrix(self) -> nd::Array2<C64> {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => nd::array![[l, o], [o, l]],
            Pauli::X => nd::array![[o, l], [l, o]],
            Pauli::Y => nd::array![[o, -i], [i, o]],
            Pauli::Z => nd::array![[l, o], [o, -l]],
        }
    }
}

/// Multi-qubit Pauli word such as "ZX"; the leftmost letter acts on qubit 0.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    /// Wrap a non-empty label sequence.
    pub fn new(letters: Vec<Pauli>) -> Result<Self, PauliError> {
        if letters.is_empty() {
            return Err(PauliError::EmptyWord);
        }
        if letters.len() > MAX_QUBITS {
            return Err(PauliError::TooManyQubits {
                requested: letters.len(),
                max: MAX_QUBITS,
            });
        }
        Ok(PauliString(letters))
    }

    /// Parse an uppercase word like "ZX".
    pub fn parse(word: &str) -> Result<Self, PauliError> {
        let letters = word
            .chars()
            .map(Pauli::from_letter)
            .collect::<Result<Vec<_>, _>>()?;
        PauliString::new(letters)
    }

    /// Number of sites the word acts on.
    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    /// The per-site labels, leftmost first.
    pub fn letters(&self) -> &[Pauli] {
        &self.0
    }

    /// True for the all-I word, the only non-traceless Pauli word.
    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.letter())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PauliString::parse(s)
    }
}

impl TryFrom<String> for PauliString {
    type Error = PauliError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        PauliString::parse(&s)
    }
}

impl From<PauliString> for String {
    fn from(word: PauliString) -> String {
        word.to_string()
    }
}

/// Dense matrix of an unnormalized Pauli word (eigenvalues ±1, operator norm 1).
pub fn pauli_matrix(word: &PauliString) -> nd::Array2<C64> {
    let mut m = word.letters()[0].matrix();
    for p in &word.letters()[1..] {
        m = kron(&m, &p.matrix());
    }
    m
}

/// Dense identity matrix on `dim` levels.
pub fn identity(dim: usize) -> nd::Array2<C64> {
    nd::Array2::eye(dim)
}

/// All 4^n Pauli words on `n_qubits` sites in lexicographic order (I < X < Y < Z),
/// so the identity word comes first.
pub fn enumerate_words(n_qubits: usize) -> Result<Vec<PauliString>, PauliError> {
    if n_qubits == 0 {
        return Err(PauliError::EmptyWord);
    }
    if n_qubits > MAX_QUBITS {
        return Err(PauliError::TooManyQubits {
            requested: n_qubits,
            max: MAX_QUBITS,
        });
    }
    let count = 4usize.pow(n_qubits as u32);
    let mut words = Vec::with_capacity(count);
    for idx in 0..count {
        let mut letters = vec![Pauli::I; n_qubits];
        let mut rest = idx;
        for site in (0..n_qubits).rev() {
            letters[site] = Pauli::ALL[rest % 4];
            rest /= 4;
        }
        words.push(PauliString(letters));
    }
    Ok(words)
}

/// Orthonormal tomography basis: every Pauli word, scaled by 2^(-n/2) so that
/// tr(O_α O_β) = δ_αβ. Element 0 is the normalized identity.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    n_qubits: usize,
    normalization: f64,
    labels: Vec<PauliString>,
    elements: Vec<nd::Array2<C64>>,
}

impl OperatorBasis {
    /// Build the full basis for `n_qubits` sites.
    pub fn build(n_qubits: usize) -> Result<Self, PauliError> {
        let labels = enumerate_words(n_qubits)?;
        let normalization = 1.0 / 2f64.powi(n_qubits as i32).sqrt();
        let scale = C64::new(normalization, 0.0);
        let elements = labels
            .iter()
            .map(|w| pauli_matrix(w) * scale)
            .collect::<Vec<_>>();
        Ok(OperatorBasis {
            n_qubits,
            normalization,
            labels,
            elements,
        })
    }

    /// Number of sites.
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Hilbert-space dimension 2^n.
    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Number of elements, 4^n.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    /// True only for an impossible empty basis; kept for iterator hygiene.
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Uniform scale 2^(-n/2) applied to every Pauli word.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Word labels in basis order.
    pub fn labels(&self) -> &[PauliString] {
        &self.labels
    }

    /// Normalized element α.
    pub fn element(&self, alpha: usize) -> &nd::Array2<C64> {
        &self.elements[alpha]
    }

    /// All normalized elements in basis order.
    pub fn elements(&self) -> &[nd::Array2<C64>] {
        &self.elements
    }

    /// Label of element α.
    pub fn label(&self, alpha: usize) -> &PauliString {
        &self.labels[alpha]
    }

    /// Basis index of a word, computed from its digits.
    pub fn index_of(&self, word: &PauliString) -> Option<usize> {
        if word.n_qubits() != self.n_qubits {
            return None;
        }
        let mut idx = 0usize;
        for &p in word.letters() {
            idx = idx * 4 + Pauli::ALL.iter().position(|&q| q == p).unwrap();
        }
        Some(idx)
    }
}

/// Matrix commutator [A, B] = AB − BA; anti-Hermitian for Hermitian inputs.
pub fn commutator(
    a: &nd::Array2<C64>,
    b: &nd::Array2<C64>,
) -> Result<nd::Array2<C64>, PauliError> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(PauliError::DimensionMismatch(a.nrows(), b.nrows()));
    }
    Ok(a.dot(b) - b.dot(a))
}

/// tr(AB) without allocation; callers interpret the complex result.
pub(crate) fn trace_product(a: &nd::Array2<C64>, b: &nd::Array2<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Hilbert-Schmidt inner product tr(AB) of two Hermitian operators.
///
/// The trace of a product of Hermitian matrices is real; the residual
/// imaginary part is asserted below 1e-12.
pub fn hs_inner(a: &nd::Array2<C64>, b: &nd::Array2<C64>) -> Result<f64, PauliError> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(PauliError::DimensionMismatch(a.nrows(), b.nrows()));
    }
    let t = trace_product(a, b);
    assert!(
        t.im.abs() < 1e-12,
        "tr(AB) of Hermitian inputs must be real, got imaginary part {:.3e}",
        t.im
    );
    Ok(t.re)
}

/// Operator (spectral) norm of a Hermitian matrix: its largest |eigenvalue|.
pub fn operator_norm(a: &nd::Array2<C64>) -> Result<f64, PauliError> {
    let evals = a.eigvalsh(UPLO::Lower)?;
    Ok(evals.iter().fold(0.0f64, |m, &e| m.max(e.abs())))
}
