//! Statevector shot execution.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::linalg::{CMatrix, C64};
use crate::pauli::{Pauli, PauliString};
use crate::sim::circuit::{Circuit, Control, Instruction};
use crate::sim::rng::{shot_rng, ShotRng};
use crate::sim::state::MixedState;
use crate::{Error, Result};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Default statevector size limit, overridable with `MOMENT_SPEC_MAX_QUBITS`.
pub const DEFAULT_MAX_QUBITS: usize = 14;

pub fn max_qubits() -> usize {
    std::env::var("MOMENT_SPEC_MAX_QUBITS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_QUBITS)
}

/// Outcomes of one shot, `+1` or `-1` per record slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotRecord {
    pub outcomes: Vec<i8>,
    /// Index and coefficient sign of the importance-sampled Pauli term.
    pub sampled: Option<(usize, i8)>,
}

impl ShotRecord {
    /// Product of the outcomes in `slots`.
    pub fn product(&self, slots: impl IntoIterator<Item = usize>) -> i8 {
        slots.into_iter().map(|s| self.outcomes[s]).product()
    }
}

// ---- kernels shared with the density engine ----

pub(crate) fn control_mask(controls: &[Control], offset: usize) -> (usize, usize) {
    controls.iter().fold((0, 0), |(m, v), c| {
        let bit = 1usize << (c.qubit + offset);
        (m | bit, if c.value { v | bit } else { v })
    })
}

pub(crate) fn apply_1q(amps: &mut [C64], q: usize, g: [C64; 4], mask: usize, val: usize) {
    let bit = 1usize << q;
    for i in 0..amps.len() {
        if i & bit == 0 && i & mask == val {
            let a = amps[i];
            let b = amps[i | bit];
            amps[i] = g[0] * a + g[1] * b;
            amps[i | bit] = g[2] * a + g[3] * b;
        }
    }
}

pub(crate) fn phase_if_one(amps: &mut [C64], q: usize, phase: f64, mask: usize, val: usize) {
    let bit = 1usize << q;
    for (i, a) in amps.iter_mut().enumerate() {
        if i & bit != 0 && i & mask == val {
            *a *= phase;
        }
    }
}

pub(crate) fn swap_qubits(amps: &mut [C64], qa: usize, qb: usize, mask: usize, val: usize) {
    let (ba, bb) = (1usize << qa, 1usize << qb);
    for i in 0..amps.len() {
        if i & ba != 0 && i & bb == 0 && i & mask == val {
            amps.swap(i, i ^ ba ^ bb);
        }
    }
}

pub(crate) fn apply_unitary(amps: &mut [C64], targets: &[usize], u: &CMatrix, mask: usize, val: usize) {
    let t = targets.len();
    let dim = 1usize << t;
    let offsets: Vec<usize> = (0..dim)
        .map(|a| {
            targets
                .iter()
                .enumerate()
                .fold(0, |acc, (j, &q)| acc | (((a >> (t - 1 - j)) & 1) << q))
        })
        .collect();
    let tmask = offsets[dim - 1];
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    for base in 0..amps.len() {
        if base & tmask != 0 || base & mask != val {
            continue;
        }
        for (a, off) in offsets.iter().enumerate() {
            buf[a] = amps[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (col, b) in buf.iter().enumerate() {
                acc += u[(r, col)] * b;
            }
            amps[base | off] = acc;
        }
    }
}

/// Applies a single-qubit Pauli, or its complex conjugate.
pub(crate) fn apply_pauli(amps: &mut [C64], q: usize, p: Pauli, conj: bool) {
    let bit = 1usize << q;
    match p {
        Pauli::I => {}
        Pauli::Z => phase_if_one(amps, q, -1.0, 0, 0),
        Pauli::X => swap_bit(amps, bit, C64::new(1.0, 0.0)),
        Pauli::Y => swap_bit(amps, bit, if conj { C64::new(0.0, -1.0) } else { C64::new(0.0, 1.0) }),
    }
}

// |0⟩ → w|1⟩, |1⟩ → w̄|0⟩ for w ∈ {1, ±i} (X or ±Y).
fn swap_bit(amps: &mut [C64], bit: usize, w: C64) {
    for i in 0..amps.len() {
        if i & bit == 0 {
            let a = amps[i];
            let b = amps[i | bit];
            amps[i | bit] = w * a;
            amps[i] = w.conj() * b;
        }
    }
}

pub(crate) fn apply_pauli_string(amps: &mut [C64], string: &PauliString, qubits: &[usize], offset: usize, conj: bool) {
    for (&p, &q) in string.ops().iter().zip(qubits) {
        apply_pauli(amps, q + offset, p, conj);
    }
}

pub(crate) fn hadamard_gate() -> [C64; 4] {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    [h, h, h, -h]
}

pub(crate) fn ry_gate(angle: f64) -> [C64; 4] {
    let (s, c) = (angle / 2.0).sin_cos();
    [C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)]
}

/// Applies a unitary instruction, shifting every qubit index by `offset`.
/// With `conj` set the complex conjugate gate is applied instead.
pub(crate) fn apply_gate(amps: &mut [C64], ins: &Instruction, offset: usize, conj: bool) {
    match ins {
        Instruction::Hadamard { qubit } => apply_1q(amps, qubit + offset, hadamard_gate(), 0, 0),
        Instruction::RotationY { qubit, angle } => apply_1q(amps, qubit + offset, ry_gate(*angle), 0, 0),
        Instruction::ControlledNot { control, target } => {
            let bit = 1usize << (control + offset);
            swap_or_flip(amps, target + offset, bit, bit)
        }
        Instruction::ControlledZ { controls, target } => {
            let (mask, val) = control_mask(controls, offset);
            phase_if_one(amps, target + offset, -1.0, mask, val)
        }
        Instruction::MultiControlledRotationY { controls, target, angle } => {
            let (mask, val) = control_mask(controls, offset);
            apply_1q(amps, target + offset, ry_gate(*angle), mask, val)
        }
        Instruction::ControlledSwap { controls, a, b } => {
            let (mask, val) = control_mask(controls, offset);
            for (&qa, &qb) in a.iter().zip(b) {
                swap_qubits(amps, qa + offset, qb + offset, mask, val);
            }
        }
        Instruction::ControlledUnitary { controls, targets, unitary } => {
            let (mask, val) = control_mask(controls, offset);
            let shifted: Vec<usize> = targets.iter().map(|q| q + offset).collect();
            if conj {
                apply_unitary(amps, &shifted, &unitary.map(|z| z.conj()), mask, val)
            } else {
                apply_unitary(amps, &shifted, unitary, mask, val)
            }
        }
        _ => unreachable!("not a unitary instruction"),
    }
}

fn swap_or_flip(amps: &mut [C64], target: usize, mask: usize, val: usize) {
    let bit = 1usize << target;
    for i in 0..amps.len() {
        if i & bit == 0 && i & mask == val {
            amps.swap(i, i | bit);
        }
    }
}

/// Dense matrix of a unitary instruction on `n` qubits, built column by column.
pub fn gate_matrix(ins: &Instruction, n: usize) -> Result<CMatrix> {
    if !ins.is_unitary() {
        return Err(Error::circuit("instruction is not unitary"));
    }
    let dim = 1usize << n;
    let mut out = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[col] = C64::new(1.0, 0.0);
        apply_gate(&mut v, ins, 0, false);
        for (r, a) in v.into_iter().enumerate() {
            out[(r, col)] = a;
        }
    }
    Ok(out)
}

// ---- shot execution ----

fn prob_one(amps: &[C64], q: usize) -> f64 {
    let bit = 1usize << q;
    amps.iter()
        .enumerate()
        .filter(|(i, _)| i & bit != 0)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

fn project(amps: &mut [C64], q: usize, one: bool, prob: f64) {
    let bit = 1usize << q;
    let scale = 1.0 / prob.sqrt();
    for (i, a) in amps.iter_mut().enumerate() {
        if (i & bit != 0) == one {
            *a *= scale;
        } else {
            *a = C64::new(0.0, 0.0);
        }
    }
}

fn measure_z<R: Rng + ?Sized>(amps: &mut [C64], q: usize, rng: &mut R) -> bool {
    let p1 = prob_one(amps, q).clamp(0.0, 1.0);
    let one = rng.random::<f64>() < p1;
    project(amps, q, one, if one { p1 } else { 1.0 - p1 });
    one
}

fn measure_pauli<R: Rng + ?Sized>(amps: &mut Vec<C64>, string: &PauliString, qubits: &[usize], rng: &mut R) -> i8 {
    let mut p_psi = amps.clone();
    apply_pauli_string(&mut p_psi, string, qubits, 0, false);
    let expect: f64 = amps.iter().zip(&p_psi).map(|(a, b)| (a.conj() * b).re).sum();
    let p_plus = ((1.0 + expect) / 2.0).clamp(0.0, 1.0);
    let plus = rng.random::<f64>() < p_plus;
    let (sign, prob) = if plus { (1.0, p_plus) } else { (-1.0, 1.0 - p_plus) };
    let scale = 0.5 / prob.sqrt();
    for (a, b) in amps.iter_mut().zip(p_psi) {
        *a = (*a + b * sign) * scale;
    }
    if plus {
        1
    } else {
        -1
    }
}

/// A validated circuit ready for repeated shots.
pub struct ShotRunner<'a> {
    circuit: &'a Circuit,
    states: Vec<Option<Arc<MixedState>>>,
    term_cdf: Vec<f64>,
}

impl<'a> ShotRunner<'a> {
    pub fn new(circuit: &'a Circuit) -> Result<Self> {
        circuit.validate()?;
        let cap = max_qubits();
        if circuit.qubits() > cap {
            return Err(Error::CapExceeded {
                what: "statevector qubits",
                needed: circuit.qubits(),
                cap,
            });
        }
        let mut states = Vec::new();
        for ins in circuit.instructions() {
            if let Instruction::PrepareMixed { state, .. } = ins {
                if states.len() <= state.0 {
                    states.resize(state.0 + 1, None);
                }
                states[state.0] = Some(circuit.state(*state)?.clone());
            }
        }
        let term_cdf = circuit
            .sampler()
            .map(|obs| {
                let mut acc = 0.0;
                obs.terms()
                    .iter()
                    .map(|(a, _)| {
                        acc += a.abs();
                        acc
                    })
                    .collect()
            })
            .unwrap_or_default();
        Ok(ShotRunner { circuit, states, term_cdf })
    }

    pub fn run(&self, rng: &mut ShotRng) -> ShotRecord {
        let n = self.circuit.qubits();
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        let mut outcomes = vec![0i8; self.circuit.slots()];
        let sampled = self.circuit.sampler().map(|obs| {
            let total = *self.term_cdf.last().expect("nonempty");
            let u = rng.random::<f64>() * total;
            let p = self.term_cdf.partition_point(|&c| c <= u).min(self.term_cdf.len() - 1);
            (p, if obs.terms()[p].0 < 0.0 { -1 } else { 1 })
        });
        for ins in self.circuit.instructions() {
            match ins {
                Instruction::MeasureZ { qubit, slot } => {
                    outcomes[*slot] = if measure_z(&mut amps, *qubit, rng) { -1 } else { 1 };
                }
                Instruction::MeasureX { qubit, slot } => {
                    apply_1q(&mut amps, *qubit, hadamard_gate(), 0, 0);
                    outcomes[*slot] = if measure_z(&mut amps, *qubit, rng) { -1 } else { 1 };
                }
                Instruction::MeasurePauliString { string, qubits, slot } => {
                    outcomes[*slot] = measure_pauli(&mut amps, string, qubits, rng);
                }
                Instruction::MeasureSampledPauli { qubits, slot } => {
                    let obs = self.circuit.sampler().expect("validated");
                    let (p, _) = sampled.expect("sampler present");
                    outcomes[*slot] = measure_pauli(&mut amps, &obs.terms()[p].1, qubits, rng);
                }
                Instruction::ResetToZero { qubits } => {
                    for &q in qubits {
                        if measure_z(&mut amps, q, rng) {
                            swap_or_flip(&mut amps, q, 0, 0);
                        }
                    }
                }
                Instruction::PrepareMixed { qubits, state } => {
                    let s = self.states[state.0].as_ref().expect("validated");
                    let idx = s.sample_eigenstate(rng);
                    write_register(&mut amps, qubits, s.eigenvector(idx));
                }
                gate => apply_gate(&mut amps, gate, 0, false),
            }
        }
        ShotRecord { outcomes, sampled }
    }
}

/// Writes `phi` into `qubits`, which must currently hold `|0…0⟩`.
fn write_register(amps: &mut [C64], qubits: &[usize], phi: &[C64]) {
    let m = qubits.len();
    let offsets: Vec<usize> = (0..1usize << m)
        .map(|a| qubits.iter().enumerate().fold(0, |acc, (j, &q)| acc | (((a >> (m - 1 - j)) & 1) << q)))
        .collect();
    let rmask = offsets[offsets.len() - 1];
    for base in 0..amps.len() {
        if base & rmask != 0 {
            continue;
        }
        let v = amps[base];
        if v.norm_sqr() == 0.0 {
            continue;
        }
        for (a, off) in offsets.iter().enumerate() {
            amps[base | off] = v * phi[a];
        }
    }
}

/// Exact `E[∏ slots]` for a circuit whose measurements all come after its
/// last gate and which has no resets, by summing over every eigenstate
/// assignment of its prepared registers. Used as an independent check on the
/// density oracle at sizes where the vectorized operator is too large.
pub fn terminal_signed_expectation(circuit: &Circuit, slots: &[usize]) -> Result<f64> {
    let runner = ShotRunner::new(circuit)?;
    if circuit.sampler().is_some() {
        return Err(Error::circuit("sampled measurements are not supported"));
    }
    let ins = circuit.instructions();
    let first_measure = ins.iter().position(|i| matches!(i, Instruction::MeasureX { .. } | Instruction::MeasureZ { .. } | Instruction::MeasurePauliString { .. } | Instruction::MeasureSampledPauli { .. })).unwrap_or(ins.len());
    let mut measured = Vec::new();
    for i in &ins[first_measure..] {
        match i {
            Instruction::MeasureX { qubit, slot } => measured.push((*qubit, *slot, true)),
            Instruction::MeasureZ { qubit, slot } => measured.push((*qubit, *slot, false)),
            _ => return Err(Error::circuit("only X and Z measurements may follow the first measurement")),
        }
    }
    let body = &ins[..first_measure];
    if body.iter().any(|i| matches!(i, Instruction::ResetToZero { .. })) {
        return Err(Error::circuit("resets are not supported"));
    }
    let preps: Vec<(&[usize], &MixedState)> = body
        .iter()
        .filter_map(|i| match i {
            Instruction::PrepareMixed { qubits, state } => Some((qubits.as_slice(), runner.states[state.0].as_deref().expect("validated"))),
            _ => None,
        })
        .collect();
    let mut mask = 0usize;
    for &(q, slot, _) in &measured {
        if slots.contains(&slot) {
            mask |= 1 << q;
        }
    }
    let support: Vec<Vec<usize>> = preps
        .iter()
        .map(|(_, s)| (0..s.eigenvalues().len()).filter(|&i| s.eigenvalues()[i] > 0.0).collect())
        .collect();
    let n = circuit.qubits();
    let mut total = 0.0;
    let mut choice = vec![0usize; preps.len()];
    loop {
        let mut weight = 1.0;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        let mut p = 0;
        for i in body {
            if let Instruction::PrepareMixed { qubits, .. } = i {
                let (_, s) = preps[p];
                let idx = support[p][choice[p]];
                weight *= s.eigenvalues()[idx];
                write_register(&mut amps, qubits, s.eigenvector(idx));
                p += 1;
            } else {
                apply_gate(&mut amps, i, 0, false);
            }
        }
        for &(q, _, x) in &measured {
            if x {
                apply_1q(&mut amps, q, hadamard_gate(), 0, 0);
            }
        }
        let e: f64 = amps
            .iter()
            .enumerate()
            .map(|(b, a)| if (b & mask).count_ones() % 2 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum();
        total += weight * e;
        // Next assignment, odometer style.
        let mut d = 0;
        while d < choice.len() {
            choice[d] += 1;
            if choice[d] < support[d].len() {
                break;
            }
            choice[d] = 0;
            d += 1;
        }
        if d == choice.len() {
            break;
        }
    }
    Ok(total)
}

pub fn run_shot(circuit: &Circuit, rng: &mut ShotRng) -> Result<ShotRecord> {
    Ok(ShotRunner::new(circuit)?.run(rng))
}

/// Runs `shots` independent tasks, task `i` drawing from `shot_rng(seed, i)`,
/// and folds their results. `merge` must be associative and commutative for
/// the result to be independent of the worker count.
pub fn par_shots<A, I, F, M>(seed: u64, shots: u64, init: I, fold: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, &mut ShotRng, u64) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    (0..shots as usize)
        .into_par_iter()
        .with_min_len(256)
        .fold(&init, |mut acc, i| {
            let mut rng = shot_rng(seed, i as u64);
            fold(&mut acc, &mut rng, i as u64);
            acc
        })
        .reduce(&init, merge)
}

/// Executes `shots` shots of `circuit` in parallel, folding each record.
pub fn run_shots<A, I, F, M>(circuit: &Circuit, seed: u64, shots: u64, init: I, fold: F, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, &ShotRecord) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    let runner = ShotRunner::new(circuit)?;
    Ok(par_shots(
        seed,
        shots,
        init,
        |acc, rng, _| {
            let rec = runner.run(rng);
            fold(acc, &rec)
        },
        merge,
    ))
}

/// Runs `f` on a pool of `threads` workers, or the global pool when `None`.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::arg(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::is_unitary;

    #[test]
    fn hadamard_then_measure_is_fair() {
        let mut c = Circuit::new(1);
        c.push(Instruction::Hadamard { qubit: 0 }).unwrap();
        c.push(Instruction::MeasureZ { qubit: 0, slot: 0 }).unwrap();
        let plus: u64 = run_shots(&c, 11, 100_000, || 0u64, |a, r| *a += (r.outcomes[0] == 1) as u64, |a, b| a + b).unwrap();
        assert!((plus as f64 / 1e5 - 0.5).abs() < 0.005);
    }

    #[test]
    fn gates_are_unitary() {
        let u = Arc::new(crate::pauli::Pauli::Y.matrix());
        let gates = vec![
            Instruction::Hadamard { qubit: 1 },
            Instruction::RotationY { qubit: 0, angle: 0.7 },
            Instruction::ControlledNot { control: 2, target: 0 },
            Instruction::ControlledZ { controls: vec![Control::off(0), Control::on(1)], target: 2 },
            Instruction::MultiControlledRotationY { controls: vec![Control::off(2)], target: 1, angle: 1.3 },
            Instruction::ControlledSwap { controls: vec![Control::on(0)], a: vec![1], b: vec![2] },
            Instruction::ControlledUnitary { controls: vec![Control::on(2)], targets: vec![0], unitary: u },
        ];
        for g in &gates {
            assert!(is_unitary(&gate_matrix(g, 3).unwrap(), 1e-12), "{g:?}");
        }
    }

    #[test]
    fn results_independent_of_thread_count() {
        let mut c = Circuit::new(2);
        c.push(Instruction::RotationY { qubit: 0, angle: 1.0 }).unwrap();
        c.push(Instruction::ControlledNot { control: 0, target: 1 }).unwrap();
        c.push(Instruction::MeasureX { qubit: 1, slot: 0 }).unwrap();
        c.push(Instruction::MeasureZ { qubit: 0, slot: 1 }).unwrap();
        let go = |t| {
            with_threads(Some(t), || {
                run_shots(&c, 3, 5000, Vec::new, |a: &mut Vec<i8>, r| a.extend(&r.outcomes), |mut a, b| {
                    a.extend(b);
                    a
                })
            })
            .unwrap()
            .unwrap()
        };
        let mut one = go(1);
        let mut four = go(4);
        one.sort();
        four.sort();
        assert_eq!(one, four);
    }
}
