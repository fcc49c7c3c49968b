//! Exact density-operator evolution.
//!
//! The operator is stored vectorized on `2n` bits: row (ket) qubit `q` is
//! bit `q + n` and column (bra) qubit `q` is bit `q`, so every gate kernel
//! of the statevector engine doubles as a superoperator kernel. A recorded
//! measurement can be applied as the signed instrument
//! `σ ↦ M₊σM₊† − M₋σM₋†`, after which the trace of the final operator is
//! the exact expectation of the product of those outcomes.

use crate::linalg::{CMatrix, C64};
use crate::sim::circuit::{Circuit, Instruction};
use crate::sim::statevector::{apply_gate, apply_pauli_string};
use crate::{Error, Result};

/// Default limit on the row dimension of the simulated density operator.
pub const DEFAULT_DENSITY_CAP: usize = 1 << 14;

const PRUNE: f64 = 1e-15;

#[derive(Clone)]
struct Vectorized {
    n: usize,
    v: Vec<C64>,
}

impl Vectorized {
    fn new(n: usize) -> Self {
        let mut v = vec![C64::new(0.0, 0.0); 1 << (2 * n)];
        v[0] = C64::new(1.0, 0.0);
        Vectorized { n, v }
    }

    fn gate(&mut self, ins: &Instruction) {
        apply_gate(&mut self.v, ins, self.n, false);
        apply_gate(&mut self.v, ins, 0, true);
    }

    fn hadamard(&mut self, q: usize) {
        self.gate(&Instruction::Hadamard { qubit: q });
    }

    /// Keeps the block where qubit `q` reads `outcome` on both sides.
    fn project_z(&mut self, q: usize, outcome: bool) {
        let (kb, bb) = (1usize << (q + self.n), 1usize << q);
        for (i, a) in self.v.iter_mut().enumerate() {
            if (i & kb != 0) != outcome || (i & bb != 0) != outcome {
                *a = C64::new(0.0, 0.0);
            }
        }
    }

    fn measure_z(&mut self, q: usize, signed: bool) {
        let (kb, bb) = (1usize << (q + self.n), 1usize << q);
        for (i, a) in self.v.iter_mut().enumerate() {
            let (k, b) = (i & kb != 0, i & bb != 0);
            if k != b {
                *a = C64::new(0.0, 0.0);
            } else if signed && k {
                *a = -*a;
            }
        }
    }

    fn left_pauli(&self, string: &crate::PauliString, qubits: &[usize]) -> Vec<C64> {
        let mut out = self.v.clone();
        apply_pauli_string(&mut out, string, qubits, self.n, false);
        out
    }

    fn right_pauli(v: &[C64], string: &crate::PauliString, qubits: &[usize]) -> Vec<C64> {
        let mut out = v.to_vec();
        apply_pauli_string(&mut out, string, qubits, 0, true);
        out
    }

    fn measure_pauli(&mut self, string: &crate::PauliString, qubits: &[usize], mode: PauliMode) {
        let p_sigma = self.left_pauli(string, qubits);
        match mode {
            PauliMode::Signed => {
                let sigma_p = Self::right_pauli(&self.v, string, qubits);
                for ((a, x), y) in self.v.iter_mut().zip(p_sigma).zip(sigma_p) {
                    *a = (x + y) * 0.5;
                }
            }
            PauliMode::Unsigned => {
                let psp = Self::right_pauli(&p_sigma, string, qubits);
                for (a, y) in self.v.iter_mut().zip(psp) {
                    *a = (*a + y) * 0.5;
                }
            }
            PauliMode::Project(s) => {
                let sigma_p = Self::right_pauli(&self.v, string, qubits);
                let psp = Self::right_pauli(&p_sigma, string, qubits);
                for (((a, x), y), z) in self.v.iter_mut().zip(p_sigma).zip(sigma_p).zip(psp) {
                    *a = (*a + (x + y) * s + z) * 0.25;
                }
            }
        }
    }

    fn reset(&mut self, q: usize) {
        let (kb, bb) = (1usize << (q + self.n), 1usize << q);
        for i in 0..self.v.len() {
            if i & kb == 0 && i & bb == 0 {
                let add = self.v[i | kb | bb];
                self.v[i] += add;
            }
        }
        for (i, a) in self.v.iter_mut().enumerate() {
            if i & (kb | bb) != 0 {
                *a = C64::new(0.0, 0.0);
            }
        }
    }

    fn prepare(&mut self, qubits: &[usize], rho: &CMatrix) {
        let m = qubits.len();
        let n = self.n;
        let offs = |shift: usize| -> Vec<usize> {
            (0..1usize << m)
                .map(|a| qubits.iter().enumerate().fold(0, |acc, (j, &q)| acc | (((a >> (m - 1 - j)) & 1) << (q + shift))))
                .collect()
        };
        let ket = offs(n);
        let bra = offs(0);
        let mask = ket[ket.len() - 1] | bra[bra.len() - 1];
        for base in 0..self.v.len() {
            if base & mask != 0 {
                continue;
            }
            let val = self.v[base];
            if val.norm_sqr() == 0.0 {
                continue;
            }
            for (a, ko) in ket.iter().enumerate() {
                for (b, bo) in bra.iter().enumerate() {
                    self.v[base | ko | bo] = val * rho[(a, b)];
                }
            }
        }
    }

    fn trace(&self) -> f64 {
        let n = self.n;
        (0..1usize << n).map(|i| self.v[(i << n) | i].re).sum()
    }

    fn into_matrix(self) -> CMatrix {
        let d = 1usize << self.n;
        CMatrix::from_fn(d, d, |r, c| self.v[(r << self.n) | c])
    }
}

#[derive(Clone, Copy)]
enum PauliMode {
    Signed,
    Unsigned,
    Project(f64),
}

fn check_cap(circuit: &Circuit) -> Result<()> {
    let rows = 1usize.checked_shl(circuit.qubits() as u32).unwrap_or(usize::MAX);
    if rows > DEFAULT_DENSITY_CAP {
        return Err(Error::CapExceeded {
            what: "density operator dimension",
            needed: rows,
            cap: DEFAULT_DENSITY_CAP,
        });
    }
    circuit.validate()
}

fn fixed_term(circuit: &Circuit) -> Result<()> {
    if circuit
        .instructions()
        .iter()
        .any(|i| matches!(i, Instruction::MeasureSampledPauli { .. }))
    {
        return Err(Error::circuit("fix the sampled Pauli term with `with_sampled_term` first"));
    }
    Ok(())
}

fn run(circuit: &Circuit, signed: &[usize]) -> Result<Vectorized> {
    check_cap(circuit)?;
    fixed_term(circuit)?;
    let mut st = Vectorized::new(circuit.qubits());
    for ins in circuit.instructions() {
        match ins {
            Instruction::MeasureZ { qubit, slot } => st.measure_z(*qubit, signed.contains(slot)),
            Instruction::MeasureX { qubit, slot } => {
                st.hadamard(*qubit);
                st.measure_z(*qubit, signed.contains(slot));
            }
            Instruction::MeasurePauliString { string, qubits, slot } => {
                let mode = if signed.contains(slot) { PauliMode::Signed } else { PauliMode::Unsigned };
                st.measure_pauli(string, qubits, mode);
            }
            Instruction::ResetToZero { qubits } => qubits.iter().for_each(|&q| st.reset(q)),
            Instruction::PrepareMixed { qubits, state } => st.prepare(qubits, circuit.state(*state)?.matrix()),
            Instruction::MeasureSampledPauli { .. } => unreachable!("checked above"),
            gate => st.gate(gate),
        }
    }
    Ok(st)
}

/// Exact `E[∏_{s ∈ slots} x_s]` by signed-instrument evolution.
pub fn signed_expectation(circuit: &Circuit, slots: &[usize]) -> Result<f64> {
    if let Some(&s) = slots.iter().find(|&&s| s >= circuit.slots()) {
        return Err(Error::arg(format!("slot {s} out of range")));
    }
    Ok(run(circuit, slots)?.trace())
}

/// Exact expectation of `S · sgn(α_p) · ∏ x_s` for a circuit whose Pauli
/// measurements are importance-sampled from its observable, which equals
/// `Σ_p α_p E_p[∏ x_s]`.
pub fn weighted_signed_expectation(circuit: &Circuit, slots: &[usize]) -> Result<f64> {
    let obs = circuit.sampler().ok_or_else(|| Error::circuit("circuit has no sampler"))?;
    let mut total = 0.0;
    for (p, (alpha, _)) in obs.terms().iter().enumerate() {
        if *alpha != 0.0 {
            total += alpha * signed_expectation(&circuit.with_sampled_term(p)?, slots)?;
        }
    }
    Ok(total)
}

/// Final operator after unsigned evolution (`signed` empty) or with the
/// listed slots signed.
pub fn evolve(circuit: &Circuit, signed: &[usize]) -> Result<CMatrix> {
    Ok(run(circuit, signed)?.into_matrix())
}

/// One branch of the joint outcome distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub term: Option<usize>,
    pub outcomes: Vec<i8>,
    pub probability: f64,
}

/// Exact joint distribution of all record slots, by branching at every
/// measurement. Exponential in the slot count; meant for small oracles.
pub fn outcome_distribution(circuit: &Circuit) -> Result<Vec<Branch>> {
    check_cap(circuit)?;
    match circuit.sampler() {
        None => branches(circuit, None, 1.0),
        Some(obs) => {
            let s = obs.l1_norm();
            let mut out = Vec::new();
            for (p, (alpha, _)) in obs.terms().iter().enumerate() {
                if *alpha != 0.0 {
                    out.extend(branches(&circuit.with_sampled_term(p)?, Some(p), alpha.abs() / s)?);
                }
            }
            Ok(out)
        }
    }
}

fn branches(circuit: &Circuit, term: Option<usize>, weight: f64) -> Result<Vec<Branch>> {
    let mut live = vec![(Vectorized::new(circuit.qubits()), vec![0i8; circuit.slots()])];
    for ins in circuit.instructions() {
        let mut next = Vec::with_capacity(live.len() * 2);
        for (st, rec) in live {
            match ins {
                Instruction::MeasureZ { qubit, slot } | Instruction::MeasureX { qubit, slot } => {
                    let mut base = st;
                    if matches!(ins, Instruction::MeasureX { .. }) {
                        base.hadamard(*qubit);
                    }
                    for (one, x) in [(false, 1i8), (true, -1i8)] {
                        let mut b = base.clone();
                        b.project_z(*qubit, one);
                        let mut r = rec.clone();
                        r[*slot] = x;
                        next.push((b, r));
                    }
                }
                Instruction::MeasurePauliString { string, qubits, slot } => {
                    for x in [1i8, -1] {
                        let mut b = st.clone();
                        b.measure_pauli(string, qubits, PauliMode::Project(x as f64));
                        let mut r = rec.clone();
                        r[*slot] = x;
                        next.push((b, r));
                    }
                }
                Instruction::ResetToZero { qubits } => {
                    let mut b = st;
                    qubits.iter().for_each(|&q| b.reset(q));
                    next.push((b, rec));
                }
                Instruction::PrepareMixed { qubits, state } => {
                    let mut b = st;
                    b.prepare(qubits, circuit.state(*state)?.matrix());
                    next.push((b, rec));
                }
                Instruction::MeasureSampledPauli { .. } => unreachable!("term fixed by caller"),
                gate => {
                    let mut b = st;
                    b.gate(gate);
                    next.push((b, rec));
                }
            }
        }
        next.retain(|(b, _)| b.trace() > PRUNE);
        live = next;
    }
    Ok(live
        .into_iter()
        .map(|(b, outcomes)| Branch {
            term,
            outcomes,
            probability: weight * b.trace(),
        })
        .collect())
}

/// Partial trace keeping `keep` (circuit qubit indices, most significant first)
/// of an operator whose row index bit `q` is circuit qubit `q`.
pub fn partial_trace(matrix: &CMatrix, n: usize, keep: &[usize]) -> CMatrix {
    let k = keep.len();
    let keep_mask: usize = keep.iter().map(|&q| 1usize << q).sum();
    let local = |idx: usize| keep.iter().enumerate().fold(0, |acc, (j, &q)| acc | (((idx >> q) & 1) << (k - 1 - j)));
    let mut out = CMatrix::zeros(1 << k, 1 << k);
    for r in 0..1usize << n {
        for c in 0..1usize << n {
            if r & !keep_mask == c & !keep_mask {
                out[(local(r), local(c))] += matrix[(r, c)];
            }
        }
    }
    out
}

/// `Tr(P_k ρ^{⊗k})` with the cyclic shift `P_k` built as an explicit matrix.
pub fn permutation_trace_check(rho: &crate::MixedState, k: usize) -> Result<f64> {
    let m = rho.qubits();
    if k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    let total = k * m;
    if total > 14 {
        return Err(Error::CapExceeded {
            what: "permutation check qubits",
            needed: total,
            cap: 14,
        });
    }
    let d = rho.dim();
    let big = 1usize << total;
    // Copy c occupies digit c (most significant first) of a base-d index.
    let digits = |idx: usize| -> Vec<usize> { (0..k).map(|c| (idx >> ((k - 1 - c) * m)) & (d - 1)).collect() };
    let pack = |ds: &[usize]| ds.iter().fold(0usize, |acc, &x| (acc << m) | x);
    // P|i₁ … i_k⟩ = |i_k i₁ … i_{k-1}⟩, so Tr(Pρ^{⊗k}) = Σ_j (ρ^{⊗k})[P⁻¹ j, j].
    let mut tr = C64::new(0.0, 0.0);
    for col in 0..big {
        let ds = digits(col);
        let mut shifted = ds[1..].to_vec();
        shifted.push(ds[0]);
        let row = pack(&shifted);
        let rd = digits(row);
        let mut prod = C64::new(1.0, 0.0);
        for c in 0..k {
            prod *= rho.matrix()[(rd[c], ds[c])];
        }
        tr += prod;
    }
    if tr.im.abs() > 1e-9 {
        return Err(Error::Numerical(format!("permutation trace has imaginary part {}", tr.im)));
    }
    Ok(tr.re)
}
