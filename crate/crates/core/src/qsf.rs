//! Polynomial state functionals `f(ρ) = Σ_j α_j Tr(ρʲ)`.
//!
//! The direct circuit loads the normalized weights `|α_j|/‖f‖₁` into a
//! control register with a Gray-code Givens ladder, so that branch `j`
//! accumulates `j − 1` controlled swaps and a Hadamard test on one ancilla
//! returns `f(ρ)/‖f‖₁` in expectation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::linalg::C64;
use crate::moments::{estimate_moments, MomentEstimates, MomentPlan};
use crate::sim::{gate_matrix, run_shots, Circuit, Control, Instruction, MixedState, StateId};
use crate::stats::{sign_stderr, SignSums};
use crate::{Error, Result};

/// Coefficients `α₁ … α_k` of `Σ α_j Tr(ρʲ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFunctional {
    pub coeffs: Vec<f64>,
}

impl PolynomialFunctional {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::arg("functional needs at least one coefficient"));
        }
        if coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::arg("coefficients must be finite"));
        }
        Ok(PolynomialFunctional { coeffs })
    }

    /// Single moment `Tr(ρʲ)`.
    pub fn moment(j: usize) -> Self {
        let mut coeffs = vec![0.0; j];
        coeffs[j - 1] = 1.0;
        PolynomialFunctional { coeffs }
    }

    /// Parses a comma-separated coefficient list.
    pub fn parse_list(text: &str) -> Result<Self> {
        let coeffs = text
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad coefficient {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        PolynomialFunctional::new(coeffs)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: PolynomialFunctional = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        PolynomialFunctional::new(f.coeffs)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a.abs()).sum()
    }

    pub fn weights(&self) -> Vec<f64> {
        let n = self.l1_norm();
        self.coeffs.iter().map(|a| if n > 0.0 { a.abs() / n } else { 0.0 }).collect()
    }

    pub fn signs(&self) -> Vec<i8> {
        self.coeffs
            .iter()
            .map(|&a| if a > 0.0 { 1 } else if a < 0.0 { -1 } else { 0 })
            .collect()
    }

    /// True when negative coefficients outnumber positive ones.
    pub fn majority_negative(&self) -> bool {
        self.signs().iter().map(|&s| s as i32).sum::<i32>() < 0
    }

    /// 1-based orders whose branch receives a phase flip: the minority sign.
    pub fn negative_basis(&self) -> Vec<usize> {
        let flip = if self.majority_negative() { 1 } else { -1 };
        self.signs()
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == flip)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// `Σ α_j m_j` for moments given as `m₁ = 1, m₂, …`.
    pub fn evaluate(&self, moments: impl Fn(usize) -> f64) -> f64 {
        self.coeffs.iter().enumerate().map(|(i, a)| a * moments(i + 1)).sum()
    }

    pub fn exact(&self, rho: &MixedState) -> f64 {
        self.evaluate(|j| rho.moment(j as u32))
    }
}

/// Binary-reflected Gray code.
pub fn gray_code(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Gray code of `i` as a bitstring of `width`, most significant bit first.
pub fn gray_bits(i: usize, width: usize) -> String {
    let g = gray_code(i);
    (0..width).rev().map(|b| if (g >> b) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Control-register width `⌈log₂ k⌉`.
pub fn register_width(k: usize) -> usize {
    if k <= 1 {
        0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GivensRotation {
    /// Bit of the control register that is rotated.
    pub target_bit: usize,
    /// Required values of the other bits, as `(bit, value)`.
    pub controls: Vec<(usize, bool)>,
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GivensLadder {
    pub width: usize,
    pub rotations: Vec<GivensRotation>,
    /// `g(0) … g(k−1)`.
    pub labels: Vec<usize>,
    /// `Λ_j = Σ_{i ≥ j} λ_i`, index 0 is `Λ₁ = 1`.
    pub cumulative: Vec<f64>,
}

pub fn build_givens_ladder(f: &PolynomialFunctional) -> Result<GivensLadder> {
    if f.l1_norm() == 0.0 {
        return Err(Error::arg("functional has zero ℓ1 norm"));
    }
    let k = f.degree();
    let width = register_width(k);
    let lambda = f.weights();
    let mut cumulative = vec![0.0; k];
    let mut acc = 0.0;
    for j in (0..k).rev() {
        acc += lambda[j];
        cumulative[j] = acc;
    }
    let labels: Vec<usize> = (0..k).map(gray_code).collect();
    let mut rotations = Vec::with_capacity(k.saturating_sub(1));
    for j in 1..k {
        // Once the remaining weight vanishes every later rotation is the identity.
        if cumulative[j - 1] <= 0.0 {
            break;
        }
        let (prev, next) = (labels[j - 1], labels[j]);
        let target_bit = (prev ^ next).trailing_zeros() as usize;
        let ratio = (lambda[j - 1] / cumulative[j - 1]).clamp(0.0, 1.0);
        let mut angle = 2.0 * ratio.sqrt().acos();
        // Rotating from |1⟩ to |0⟩ needs the opposite sense to keep cos on the source.
        if (prev >> target_bit) & 1 == 1 {
            angle = -angle;
        }
        let controls = (0..width)
            .filter(|&b| b != target_bit)
            .map(|b| (b, (prev >> b) & 1 == 1))
            .collect();
        rotations.push(GivensRotation { target_bit, controls, angle });
    }
    Ok(GivensLadder {
        width,
        rotations,
        labels,
        cumulative,
    })
}

impl GivensLadder {
    fn instruction(&self, r: &GivensRotation, register: &[usize]) -> Instruction {
        Instruction::MultiControlledRotationY {
            controls: r
                .controls
                .iter()
                .map(|&(b, v)| Control { qubit: register[b], value: v })
                .collect(),
            target: register[r.target_bit],
            angle: r.angle,
        }
    }

    /// Ladder applied to `|0…0⟩`; entry `x` is the amplitude of code value `x`.
    pub fn amplitudes(&self) -> Vec<C64> {
        let w = self.width.max(1);
        let register: Vec<usize> = (0..w).collect();
        let mut v = vec![C64::new(0.0, 0.0); 1 << w];
        v[0] = C64::new(1.0, 0.0);
        for r in &self.rotations {
            let g = gate_matrix(&self.instruction(r, &register), w).expect("rotation is unitary");
            let col = nalgebra::DVector::from_vec(v);
            v = (g * col).data.into();
        }
        v
    }
}

fn code_controls(register: &[usize], code: usize) -> Vec<Control> {
    register
        .iter()
        .enumerate()
        .map(|(b, &q)| Control {
            qubit: q,
            value: (code >> b) & 1 == 1,
        })
        .collect()
}

/// Qubits of one functional's block inside a (possibly shared) circuit.
#[derive(Debug, Clone)]
pub struct QsfLayout {
    pub ancilla: usize,
    /// Control register; entry `b` holds code bit `b`.
    pub register: Vec<usize>,
    pub b1: Vec<usize>,
    pub b2: Vec<usize>,
    pub state: StateId,
}

/// Direct circuit for `f` on `2m + ⌈log₂k⌉ + 1` qubits. Requires `k ≥ 2`.
pub fn build_qsf_circuit(f: &PolynomialFunctional, m: usize) -> Result<(Circuit, QsfLayout)> {
    let (c, mut layouts) = build_parallel_qsf_circuit(std::slice::from_ref(f), m)?;
    Ok((c, layouts.remove(0)))
}

/// One circuit for several functionals sharing the copy registers B1 and B2;
/// functional `i` owns ancilla `A_i`, recorded in slot `i`, and its own
/// control register. Every functional needs degree ≥ 2.
pub fn build_parallel_qsf_circuit(fs: &[PolynomialFunctional], m: usize) -> Result<(Circuit, Vec<QsfLayout>)> {
    if fs.is_empty() {
        return Err(Error::arg("no functionals"));
    }
    if m == 0 {
        return Err(Error::arg("state must have at least one qubit"));
    }
    if let Some(f) = fs.iter().find(|f| f.degree() < 2) {
        return Err(Error::arg(format!("degree {} functional needs no circuit", f.degree())));
    }
    let ladders = fs.iter().map(build_givens_ladder).collect::<Result<Vec<_>>>()?;
    let mut next = 0;
    let mut blocks = Vec::new();
    for l in &ladders {
        let ancilla = next;
        let register: Vec<usize> = (next + 1..next + 1 + l.width).collect();
        next += 1 + l.width;
        blocks.push((ancilla, register));
    }
    let b1: Vec<usize> = (next..next + m).collect();
    let b2: Vec<usize> = (next + m..next + 2 * m).collect();
    let mut c = Circuit::new(next + 2 * m);
    let state = c.add_state();
    c.push(Instruction::PrepareMixed { qubits: b1.clone(), state })?;
    for (ancilla, _) in &blocks {
        c.push(Instruction::Hadamard { qubit: *ancilla })?;
    }
    let rounds = fs.iter().map(|f| f.degree()).max().unwrap_or(1) - 1;
    for j in 1..=rounds {
        for (l, (_, reg)) in ladders.iter().zip(&blocks) {
            if let Some(r) = l.rotations.get(j - 1) {
                c.push(l.instruction(r, reg))?;
            }
        }
        if j > 1 {
            c.push(Instruction::ResetToZero { qubits: b2.clone() })?;
        }
        c.push(Instruction::PrepareMixed { qubits: b2.clone(), state })?;
        for (f, (ancilla, reg)) in fs.iter().zip(&blocks) {
            if j < f.degree() {
                let mut controls = vec![Control::on(*ancilla)];
                controls.extend(code_controls(reg, gray_code(j)));
                c.push(Instruction::ControlledSwap {
                    controls,
                    a: b1.clone(),
                    b: b2.clone(),
                })?;
            }
        }
    }
    for (f, (ancilla, reg)) in fs.iter().zip(&blocks) {
        for i in f.negative_basis() {
            c.push(Instruction::ControlledZ {
                controls: code_controls(reg, gray_code(i - 1)),
                target: *ancilla,
            })?;
        }
    }
    for (slot, (ancilla, _)) in blocks.iter().enumerate() {
        c.push(Instruction::MeasureX { qubit: *ancilla, slot })?;
    }
    let layouts = blocks
        .into_iter()
        .map(|(ancilla, register)| QsfLayout {
            ancilla,
            register,
            b1: b1.clone(),
            b2: b2.clone(),
            state,
        })
        .collect();
    Ok((c, layouts))
}

/// Rescales an ancilla mean to `f(ρ)`: multiply by `‖f‖₁`, flip if the
/// negative sign is in the majority.
pub fn rescale(f: &PolynomialFunctional, mean: f64) -> f64 {
    let s = if f.majority_negative() { -1.0 } else { 1.0 };
    s * f.l1_norm() * mean
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub shots: u64,
}

impl FunctionalEstimate {
    fn constant(value: f64, shots: u64) -> Self {
        FunctionalEstimate {
            estimate: value,
            stderr: 0.0,
            shots,
        }
    }
}

/// Unbiased estimate of `f(ρ)` from `shots` runs of the direct circuit.
pub fn estimate_functional(rho: &MixedState, f: &PolynomialFunctional, shots: u64, seed: u64) -> Result<FunctionalEstimate> {
    Ok(estimate_parallel(rho, std::slice::from_ref(f), shots, seed)?.remove(0))
}

fn estimate_parallel(rho: &MixedState, fs: &[PolynomialFunctional], shots: u64, seed: u64) -> Result<Vec<FunctionalEstimate>> {
    if shots == 0 {
        return Err(Error::arg("shots must be at least 1"));
    }
    // Degree-one and all-zero functionals are constants.
    let live: Vec<usize> = (0..fs.len()).filter(|&i| fs[i].degree() >= 2 && fs[i].l1_norm() > 0.0).collect();
    let mut out: Vec<FunctionalEstimate> = fs
        .iter()
        .map(|f| FunctionalEstimate::constant(f.coeffs.first().copied().filter(|_| f.degree() == 1).unwrap_or(0.0), shots))
        .collect();
    if live.is_empty() {
        return Ok(out);
    }
    let chosen: Vec<PolynomialFunctional> = live.iter().map(|&i| fs[i].clone()).collect();
    let (mut circuit, layouts) = build_parallel_qsf_circuit(&chosen, rho.qubits())?;
    circuit.bind(layouts[0].state, Arc::new(rho.clone()))?;
    let n = chosen.len();
    let sums = run_shots(
        &circuit,
        seed,
        shots,
        || SignSums::new(n),
        |acc, rec| {
            acc.shots += 1;
            for (s, x) in acc.sums.iter_mut().zip(&rec.outcomes) {
                *s += *x as i64;
            }
        },
        SignSums::merge,
    )?;
    for (slot, &i) in live.iter().enumerate() {
        let mean = sums.means()[slot];
        out[i] = FunctionalEstimate {
            estimate: rescale(&fs[i], mean),
            stderr: fs[i].l1_norm() * sign_stderr(mean, shots),
            shots,
        };
    }
    Ok(out)
}

/// `α₁ + Σ_{j≥2} α_j p̂_j` and the bound `Σ_{j≥2} |α_j|·stderr_j`.
pub fn functional_from_moments(est: &MomentEstimates, f: &PolynomialFunctional) -> Result<(f64, f64)> {
    if f.degree() > est.k.max(1) {
        return Err(Error::arg(format!("functional degree {} exceeds estimated order {}", f.degree(), est.k)));
    }
    let value = f.evaluate(|j| est.order(j).expect("checked degree"));
    let bound = f
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, a)| a.abs() * est.order_stderr(i + 1).expect("checked degree"))
        .sum();
    Ok((value, bound))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiStrategy {
    MomentReuse,
    ParallelCircuit,
}

/// Largest circuit the parallel strategy will build.
pub const PARALLEL_MAX_QUBITS: usize = 12;

pub fn estimate_multiple_functionals(
    rho: &MixedState,
    fs: &[PolynomialFunctional],
    shots: u64,
    strategy: MultiStrategy,
    seed: u64,
) -> Result<Vec<FunctionalEstimate>> {
    if shots == 0 {
        return Err(Error::arg("shots must be at least 1"));
    }
    match strategy {
        MultiStrategy::MomentReuse => {
            let k = fs.iter().map(|f| f.degree()).max().unwrap_or(1);
            if k < 2 {
                return Ok(fs.iter().map(|f| FunctionalEstimate::constant(f.coeffs[0], shots)).collect());
            }
            let plan = MomentPlan::new(k, 1.0 / (shots as f64).sqrt(), shots, seed)?;
            let est = estimate_moments(rho, &plan)?;
            fs.iter()
                .map(|f| {
                    let (estimate, stderr) = functional_from_moments(&est, f)?;
                    Ok(FunctionalEstimate { estimate, stderr, shots })
                })
                .collect()
        }
        MultiStrategy::ParallelCircuit => {
            let needed: usize = 2 * rho.qubits()
                + fs
                    .iter()
                    .filter(|f| f.degree() >= 2 && f.l1_norm() > 0.0)
                    .map(|f| 1 + register_width(f.degree()))
                    .sum::<usize>();
            if needed > PARALLEL_MAX_QUBITS {
                return Err(Error::arg(format!(
                    "parallel circuit needs {needed} qubits (limit {PARALLEL_MAX_QUBITS}); use the moment-reuse strategy"
                )));
            }
            estimate_parallel(rho, fs, shots, seed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::signed_expectation;

    #[test]
    fn gray_codes() {
        assert_eq!(gray_bits(0, 2), "00");
        let seq: Vec<String> = (0..4).map(|i| gray_bits(i, 2)).collect();
        assert_eq!(seq, ["00", "01", "11", "10"]);
        assert_eq!(gray_bits(5, 3), "111");
        assert_eq!(register_width(1), 0);
        assert_eq!(register_width(2), 1);
        assert_eq!(register_width(4), 2);
        assert_eq!(register_width(5), 3);
    }

    #[test]
    fn ladder_angles() {
        let l = build_givens_ladder(&PolynomialFunctional::new(vec![0.5, 0.3, 0.2]).unwrap()).unwrap();
        assert!((l.rotations[0].angle.abs() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((l.rotations[1].angle.abs() - 1.369438).abs() < 1e-6);
        let l = build_givens_ladder(&PolynomialFunctional::new(vec![1.0]).unwrap()).unwrap();
        assert!(l.rotations.is_empty());
        assert!(build_givens_ladder(&PolynomialFunctional::new(vec![0.0, 0.0]).unwrap()).is_err());
    }

    #[test]
    fn ladder_amplitudes_match_weights() {
        for coeffs in [vec![0.5, 0.5], vec![0.1, 0.0, 0.4, 0.2, 0.3], vec![1.0, 2.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]] {
            let f = PolynomialFunctional::new(coeffs).unwrap();
            let l = build_givens_ladder(&f).unwrap();
            let amps = l.amplitudes();
            for (i, lam) in f.weights().iter().enumerate() {
                assert!((amps[gray_code(i)].norm_sqr() - lam).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sign_bookkeeping() {
        let f = PolynomialFunctional::new(vec![0.2, -0.5, 0.3]).unwrap();
        assert!(!f.majority_negative());
        assert_eq!(f.negative_basis(), vec![2]);
        let (c, _) = build_qsf_circuit(&f, 1).unwrap();
        assert_eq!(c.count(|i| matches!(i, Instruction::ControlledZ { .. })), 1);
        let g = PolynomialFunctional::new(vec![0.0, -1.0]).unwrap();
        assert!(g.majority_negative());
        assert!(g.negative_basis().is_empty());
    }

    #[test]
    fn circuit_oracle_gives_functional() {
        let p = 1.0 / (1.0 + (-1.0f64).exp());
        let rho = Arc::new(MixedState::diagonal(&[1.0 - p, p]).unwrap());
        let f = PolynomialFunctional::new(vec![0.2, -0.5, 0.3, 0.7]).unwrap();
        let (mut c, layout) = build_qsf_circuit(&f, 1).unwrap();
        c.bind(layout.state, rho.clone()).unwrap();
        let e = signed_expectation(&c, &[0]).unwrap();
        assert!((rescale(&f, e) - f.exact(&rho)).abs() < 1e-12);
    }

    #[test]
    fn trace_functional_is_constant() {
        let rho = MixedState::maximally_mixed(1).unwrap();
        let e = estimate_functional(&rho, &PolynomialFunctional::new(vec![1.0]).unwrap(), 10, 0).unwrap();
        assert_eq!(e.estimate, 1.0);
    }
}
