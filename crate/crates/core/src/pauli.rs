//! Pauli strings and weighted Pauli-sum observables.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::linalg::{self, c, CMatrix, C64};
use crate::{Error, Result};

/// Largest register for which dense matrices are built.
pub const DENSE_MAX_QUBITS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> CMatrix {
        let (a, b, cc, d) = match self {
            Pauli::I => (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)),
            Pauli::X => (c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)),
            Pauli::Y => (c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)),
            Pauli::Z => (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)),
        };
        CMatrix::from_row_slice(2, 2, &[a, b, cc, d])
    }

    fn from_char(ch: char) -> Option<Self> {
        match ch.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis. Character `j` acts on register
/// qubit `j`, which is the `j`-th Kronecker factor (most significant bit).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(ops: Vec<Pauli>) -> Self {
        PauliString(ops)
    }

    pub fn identity(m: usize) -> Self {
        PauliString(vec![Pauli::I; m])
    }

    /// Single non-identity factor `p` on register qubit `j` of an `m`-qubit string.
    pub fn single(m: usize, j: usize, p: Pauli) -> Self {
        let mut ops = vec![Pauli::I; m];
        ops[j] = p;
        PauliString(ops)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// Dense `2^m × 2^m` matrix.
    pub fn matrix(&self) -> CMatrix {
        let m = self.len();
        let dim = 1usize << m;
        let mut x_mask = 0usize;
        let mut z_mask = 0usize;
        let mut n_y = 0u32;
        for (j, &p) in self.0.iter().enumerate() {
            let bit = 1usize << (m - 1 - j);
            match p {
                Pauli::I => {}
                Pauli::X => x_mask |= bit,
                Pauli::Z => z_mask |= bit,
                Pauli::Y => {
                    x_mask |= bit;
                    z_mask |= bit;
                    n_y += 1;
                }
            }
        }
        let phase = C64::i().powu(n_y);
        let mut out = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            let sign = if (col & z_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            out[(col ^ x_mask, col)] = phase * sign;
        }
        out
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| Pauli::from_char(ch).ok_or_else(|| Error::Parse(format!("bad Pauli letter {ch:?} in {s:?}"))))
            .collect::<Result<Vec<_>>>()
            .map(PauliString)
    }
}

/// `O = Σ α_p P_p` with real coefficients over distinct Pauli strings.
#[derive(Debug, Clone)]
pub struct PauliObservable {
    qubits: usize,
    terms: Vec<(f64, PauliString)>,
    dense: OnceLock<CMatrix>,
    norm: OnceLock<f64>,
}

impl PauliObservable {
    pub fn new(qubits: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        if qubits == 0 {
            return Err(Error::arg("observable needs at least one qubit"));
        }
        for (i, (coeff, s)) in terms.iter().enumerate() {
            if s.len() != qubits {
                return Err(Error::Parse(format!("term {s} has length {}, expected {qubits}", s.len())));
            }
            if !coeff.is_finite() {
                return Err(Error::Parse(format!("term {s} has non-finite coefficient")));
            }
            if terms[..i].iter().any(|(_, t)| t == s) {
                return Err(Error::Parse(format!("duplicate Pauli string {s}")));
            }
        }
        Ok(PauliObservable {
            qubits,
            terms,
            dense: OnceLock::new(),
            norm: OnceLock::new(),
        })
    }

    /// Single-term observable `1.0 · P`.
    pub fn from_string(p: PauliString) -> Self {
        let m = p.len();
        PauliObservable::new(m, vec![(1.0, p)]).expect("single term is valid")
    }

    /// Parses the one-term-per-line `coeff PAULISTRING` text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(coeff), Some(string), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse(format!("line {}: expected `coeff PAULISTRING`", lineno + 1)));
            };
            let coeff: f64 = coeff
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad coefficient {coeff:?}", lineno + 1)))?;
            terms.push((coeff, string.parse::<PauliString>()?));
        }
        let Some(m) = terms.first().map(|(_, s)| s.len()) else {
            return Err(Error::Parse("observable has no terms".into()));
        };
        PauliObservable::new(m, terms)
    }

    pub fn to_text(&self) -> String {
        self.terms.iter().map(|(a, s)| format!("{a} {s}\n")).collect()
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// The ℓ1 norm `S = Σ |α_p|` over the Pauli decomposition.
    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|(a, _)| a.abs()).sum()
    }

    pub fn dense(&self) -> Result<&CMatrix> {
        if self.qubits > DENSE_MAX_QUBITS {
            return Err(Error::CapExceeded {
                what: "dense observable",
                needed: self.qubits,
                cap: DENSE_MAX_QUBITS,
            });
        }
        Ok(self.dense.get_or_init(|| {
            let dim = 1usize << self.qubits;
            let mut acc = CMatrix::zeros(dim, dim);
            for (a, s) in &self.terms {
                acc += s.matrix().scale(*a);
            }
            acc
        }))
    }

    /// Spectral norm `‖O‖` from a dense Hermitian eigensolve.
    pub fn spectral_norm(&self) -> Result<f64> {
        let dense = self.dense()?;
        Ok(*self.norm.get_or_init(|| linalg::hermitian_norm(dense)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    #[test]
    fn string_matrix_is_kron_product() {
        let s: PauliString = "XYZ".parse().unwrap();
        let expected = linalg::kron(&linalg::kron(&Pauli::X.matrix(), &Pauli::Y.matrix()), &Pauli::Z.matrix());
        assert!(max_abs_diff(&s.matrix(), &expected) < 1e-15);
    }

    #[test]
    fn parse_text_format() {
        let o = PauliObservable::parse("1.0 XX\n-0.5 ZI\n\n# comment\n").unwrap();
        assert_eq!(o.qubits(), 2);
        assert_eq!(o.num_terms(), 2);
        assert_eq!(o.l1_norm(), 1.5);
        assert!(PauliObservable::parse("1.0 XX\n2.0 Z").is_err());
        assert!(PauliObservable::parse("1.0 XX\n2.0 XX").is_err());
        assert!(PauliObservable::parse("abc XX").is_err());
        assert!(PauliObservable::parse("1.0 XQ").is_err());
        let back = PauliObservable::parse(&o.to_text()).unwrap();
        assert_eq!(back.terms(), o.terms());
    }

    #[test]
    fn spectral_norm_of_x_plus_z() {
        let o = PauliObservable::parse("1 X\n1 Z").unwrap();
        assert!((o.spectral_norm().unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }
}
