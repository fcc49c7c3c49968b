//! Pure and mixed quantum states.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, c, CMatrix, C64};
use crate::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const NEGATIVE_TOL: f64 = 1e-12;

/// Density operator on `m` qubits with a cached eigendecomposition.
///
/// Eigenvalues are sorted in descending order and clamped at zero.
/// Register qubit `j` is the `j`-th Kronecker factor, i.e. the most
/// significant bit of the matrix index.
#[derive(Debug, Clone)]
pub struct MixedState {
    qubits: usize,
    matrix: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
    cumulative: Vec<f64>,
}

impl MixedState {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if !matrix.is_square() {
            return Err(Error::InvalidState("matrix is not square".into()));
        }
        let qubits = linalg::qubits_for_dim(dim)
            .filter(|&q| q > 0)
            .ok_or_else(|| Error::InvalidState(format!("dimension {dim} is not a power of two ≥ 2")))?;
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("matrix has non-finite entries".into()));
        }
        let asym = linalg::max_abs_diff(&matrix, &matrix.adjoint());
        if asym > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("matrix is not Hermitian (deviation {asym:.3e})")));
        }
        let tr = linalg::trace(&matrix);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let (mut values, vectors) = linalg::eigh(&matrix);
        values.reverse();
        let vectors = CMatrix::from_fn(dim, dim, |r, col| vectors[(r, dim - 1 - col)]);
        if let Some(bad) = values.iter().find(|&&v| v < -NEGATIVE_TOL) {
            return Err(Error::InvalidState(format!("negative eigenvalue {bad:.3e}")));
        }
        for v in &mut values {
            *v = v.max(0.0);
        }
        let mut acc = 0.0;
        let cumulative = values
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        Ok(MixedState {
            qubits,
            matrix,
            eigenvalues: values,
            eigenvectors: vectors,
            cumulative,
        })
    }

    /// Builds `Σ λ_i |v_i⟩⟨v_i|` from a spectrum and orthonormal columns.
    pub fn from_spectrum(values: &[f64], vectors: &CMatrix) -> Result<Self> {
        let m = linalg::from_spectrum(values, vectors);
        MixedState::from_matrix(linalg::hermitian_part(&m))
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        MixedState::from_matrix(linalg::diag(probs))
    }

    pub fn maximally_mixed(qubits: usize) -> Result<Self> {
        let dim = 1usize << qubits;
        MixedState::diagonal(&vec![1.0 / dim as f64; dim])
    }

    pub fn pure(state: &PureState) -> Result<Self> {
        let v = CMatrix::from_column_slice(state.amplitudes().len(), 1, state.amplitudes());
        MixedState::from_matrix(linalg::hermitian_part(&(&v * v.adjoint())))
    }

    pub fn zero(qubits: usize) -> Result<Self> {
        MixedState::pure(&PureState::zero(qubits))
    }

    /// Random state `G G† / Tr(G G†)` with a complex Gaussian `2^m × rank` matrix.
    pub fn random<R: Rng + ?Sized>(qubits: usize, rank: usize, rng: &mut R) -> Result<Self> {
        let dim = 1usize << qubits;
        if rank == 0 || rank > dim {
            return Err(Error::arg(format!("rank {rank} out of range 1..={dim}")));
        }
        let g = CMatrix::from_fn(dim, rank, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let gg = &g * g.adjoint();
        let tr = linalg::trace(&gg).re;
        MixedState::from_matrix(linalg::hermitian_part(&gg.unscale(tr)))
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    /// Amplitudes of eigenvector `i`.
    pub fn eigenvector(&self, i: usize) -> &[C64] {
        let d = self.dim();
        &self.eigenvectors.as_slice()[i * d..(i + 1) * d]
    }

    /// Samples an eigenvector index with probability `λ_i`.
    pub fn sample_eigenstate<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("nonempty spectrum");
        let u = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.cumulative.len() - 1)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `Tr(ρʲ)` from the spectrum.
    pub fn moment(&self, j: u32) -> f64 {
        self.eigenvalues.iter().map(|l| l.powi(j as i32)).sum()
    }

    /// `Tr(A ρʲ)` by dense algebra in the eigenbasis.
    pub fn weighted_moment(&self, a: &CMatrix, j: u32) -> f64 {
        let powered: Vec<f64> = self.eigenvalues.iter().map(|l| l.powi(j as i32)).collect();
        let rho_j = linalg::from_spectrum(&powered, &self.eigenvectors);
        (a * rho_j).trace().re
    }

    pub fn to_json(&self) -> StateJson {
        StateJson::Matrix {
            m: self.qubits,
            matrix: (0..self.dim())
                .map(|r| (0..self.dim()).map(|col| [self.matrix[(r, col)].re, self.matrix[(r, col)].im]).collect())
                .collect(),
        }
    }
}

/// The JSON form of a state: an explicit matrix or a named preset.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum StateJson {
    Matrix { m: usize, matrix: Vec<Vec<[f64; 2]>> },
    Preset {
        preset: String,
        #[serde(flatten)]
        params: serde_json::Map<String, serde_json::Value>,
    },
}

impl StateJson {
    pub fn matrix_state(&self) -> Option<Result<MixedState>> {
        let StateJson::Matrix { m, matrix } = self else {
            return None;
        };
        let dim = 1usize << m;
        if matrix.len() != dim || matrix.iter().any(|row| row.len() != dim) {
            return Some(Err(Error::Parse(format!("matrix must be {dim}×{dim} for m = {m}"))));
        }
        let mat = CMatrix::from_fn(dim, dim, |r, col| c(matrix[r][col][0], matrix[r][col][1]));
        Some(MixedState::from_matrix(mat))
    }
}

/// Normalized state vector on `n` qubits; qubit `q` is bit `q` of the index.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    qubits: usize,
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let qubits = linalg::qubits_for_dim(amplitudes.len())
            .ok_or_else(|| Error::InvalidState(format!("length {} is not a power of two", amplitudes.len())))?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("squared norm is {norm}, expected 1")));
        }
        Ok(PureState { qubits, amplitudes })
    }

    pub fn zero(qubits: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << qubits];
        amplitudes[0] = C64::new(1.0, 0.0);
        PureState { qubits, amplitudes }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// Reduced density matrix on `keep`, listed most significant first.
    pub fn reduced(&self, keep: &[usize]) -> CMatrix {
        let k = keep.len();
        let dk = 1usize << k;
        let mut out = CMatrix::zeros(dk, dk);
        let keep_mask: usize = keep.iter().map(|&q| 1usize << q).sum();
        let local = |idx: usize| -> usize {
            keep.iter().enumerate().fold(0, |acc, (j, &q)| acc | (((idx >> q) & 1) << (k - 1 - j)))
        };
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let rest = i & !keep_mask;
            for (j, b) in self.amplitudes.iter().enumerate() {
                if j & !keep_mask == rest {
                    out[(local(i), local(j))] += a * b.conj();
                }
            }
        }
        out
    }
}
