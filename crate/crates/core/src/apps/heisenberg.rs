//! Open-boundary Heisenberg chain and Gibbs states.

use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMatrix};
use crate::pauli::{Pauli, PauliObservable, PauliString, DENSE_MAX_QUBITS};
use crate::sim::MixedState;
use crate::{Error, Result};

/// `H = J Σ_i (X_iX_{i+1} + Y_iY_{i+1} + Z_iZ_{i+1}) + h Σ_i Z_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergSpec {
    pub n: usize,
    pub j: f64,
    pub h: f64,
}

impl HeisenbergSpec {
    pub fn new(n: usize, j: f64, h: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::arg("chain needs at least two sites"));
        }
        Ok(HeisenbergSpec { n, j, h })
    }
}

/// Zero-weight terms are omitted.
pub fn heisenberg_hamiltonian(spec: &HeisenbergSpec) -> Result<PauliObservable> {
    let n = spec.n;
    if n < 2 {
        return Err(Error::arg("chain needs at least two sites"));
    }
    if n > DENSE_MAX_QUBITS {
        return Err(Error::CapExceeded {
            what: "Heisenberg sites",
            needed: n,
            cap: DENSE_MAX_QUBITS,
        });
    }
    let mut terms = Vec::new();
    if spec.j != 0.0 {
        for i in 0..n - 1 {
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                let mut ops = vec![Pauli::I; n];
                ops[i] = p;
                ops[i + 1] = p;
                terms.push((spec.j, PauliString::new(ops)));
            }
        }
    }
    if spec.h != 0.0 {
        for i in 0..n {
            terms.push((spec.h, PauliString::single(n, i, Pauli::Z)));
        }
    }
    PauliObservable::new(n, terms)
}

/// `e^{−βH}/Tr e^{−βH}` via the eigendecomposition of `H`.
pub fn gibbs_state(h: &PauliObservable, beta: f64) -> Result<MixedState> {
    if !beta.is_finite() {
        return Err(Error::arg("beta must be finite"));
    }
    gibbs_from_dense(h.dense()?, beta)
}

pub(crate) fn gibbs_from_dense(h: &CMatrix, beta: f64) -> Result<MixedState> {
    let (values, vectors) = linalg::eigh(h);
    let shift = if beta >= 0.0 { values[0] } else { values[values.len() - 1] };
    let weights: Vec<f64> = values.iter().map(|e| (-beta * (e - shift)).exp()).collect();
    let z: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / z).collect();
    MixedState::from_spectrum(&probs, &vectors)
}

/// Lowest eigenvalue of `H`.
pub fn ground_energy(h: &PauliObservable) -> Result<f64> {
    Ok(linalg::eigh(h.dense()?).0[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_spectrum() {
        let h = heisenberg_hamiltonian(&HeisenbergSpec::new(2, 1.0, 1.0).unwrap()).unwrap();
        let (vals, _) = linalg::eigh(h.dense().unwrap());
        for (a, b) in vals.iter().zip([-3.0, -1.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn term_counts() {
        let h = heisenberg_hamiltonian(&HeisenbergSpec::new(3, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!((h.num_terms(), h.l1_norm()), (6, 6.0));
    }

    #[test]
    fn gibbs_of_z() {
        let z = PauliObservable::parse("1 Z").unwrap();
        let rho = gibbs_state(&z, 0.5).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 0.268941).abs() < 1e-6);
        assert!((rho.matrix()[(1, 1)].re - 0.731059).abs() < 1e-6);
        let flat = gibbs_state(&z, 0.0).unwrap();
        assert!((flat.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cold_two_site_energy() {
        let h = heisenberg_hamiltonian(&HeisenbergSpec::new(2, 1.0, 1.0).unwrap()).unwrap();
        let rho = gibbs_state(&h, 40.0).unwrap();
        assert!((rho.weighted_moment(h.dense().unwrap(), 1) + 3.0).abs() < 1e-9);
    }
}
