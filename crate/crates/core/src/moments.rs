//! Simultaneous moment estimation with the reset-based SWAP-test chain.
//!
//! One circuit on `2m + 1` qubits: register B1 holds the first copy for the
//! whole run, B2 is reset and refilled every round, and the running product
//! of the ancilla X outcomes after `l` rounds is an unbiased `±1` estimate of
//! `Tr(ρ^{l+1})`.

use std::sync::Arc;

use serde::Serialize;

use crate::pauli::PauliObservable;
use crate::sim::{run_shots, Circuit, Control, Instruction, MixedState, StateId};
use crate::stats::{sign_stderr, SignSums};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPlan {
    pub k: usize,
    pub epsilon: f64,
    pub shots: u64,
    pub seed: u64,
}

impl MomentPlan {
    pub fn new(k: usize, epsilon: f64, shots: u64, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::arg("order k must be at least 2"));
        }
        if !(epsilon > 0.0) {
            return Err(Error::arg("epsilon must be positive"));
        }
        if shots == 0 {
            return Err(Error::arg("shots must be at least 1"));
        }
        Ok(MomentPlan { k, epsilon, shots, seed })
    }

    /// Plan with the shot count set by [`required_shots`].
    pub fn auto(k: usize, epsilon: f64, seed: u64) -> Result<Self> {
        MomentPlan::new(k, epsilon, required_shots(k, epsilon)?, seed)
    }
}

/// Estimates of `Tr(ρ²) … Tr(ρᵏ)` (index 0 is order 2).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimates {
    pub k: usize,
    pub shots: u64,
    pub seed: u64,
    pub estimates: Vec<f64>,
    pub stderr: Vec<f64>,
    pub exact: Vec<f64>,
}

impl MomentEstimates {
    /// Estimate of `Tr(ρʲ)`; order 1 is exactly 1.
    pub fn order(&self, j: usize) -> Option<f64> {
        match j {
            1 => Some(1.0),
            j if j >= 2 && j <= self.k => Some(self.estimates[j - 2]),
            _ => None,
        }
    }

    pub fn order_stderr(&self, j: usize) -> Option<f64> {
        match j {
            1 => Some(0.0),
            j if j >= 2 && j <= self.k => Some(self.stderr[j - 2]),
            _ => None,
        }
    }
}

/// Hoeffding shot count `⌈2 ln(6k)/ε²⌉`.
pub fn required_shots(k: usize, epsilon: f64) -> Result<u64> {
    if k < 2 {
        return Err(Error::arg("order k must be at least 2"));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::arg("epsilon must be positive and finite"));
    }
    Ok((2.0 * (6.0 * k as f64).ln() / (epsilon * epsilon)).ceil() as u64)
}

/// `Tr(ρ²) … Tr(ρᵏ)` from the spectrum.
pub fn exact_moments(rho: &MixedState, k: usize) -> Vec<f64> {
    (2..=k as u32).map(|j| rho.moment(j)).collect()
}

/// Qubit assignment of a chain circuit.
#[derive(Debug, Clone)]
pub struct ChainLayout {
    pub k: usize,
    pub ancilla: usize,
    /// Extra ancillas placed between the chain ancilla and B1.
    pub extra: Vec<usize>,
    pub b1: Vec<usize>,
    pub b2: Vec<usize>,
    pub state: StateId,
}

impl ChainLayout {
    /// Record slot of the ancilla in round `j` (1-based).
    pub fn x_slot(&self, j: usize) -> usize {
        j - 1
    }
}

/// Builds the chain on `2m + 1 + extra` qubits. `hook` runs after the X
/// measurement of each round, while the fresh copy in B2 is still live.
pub(crate) fn chain_with_hook(
    m: usize,
    k: usize,
    extra: usize,
    mut hook: impl FnMut(&mut Circuit, &ChainLayout, usize) -> Result<()>,
) -> Result<(Circuit, ChainLayout)> {
    if k < 2 {
        return Err(Error::arg("order k must be at least 2"));
    }
    if m == 0 {
        return Err(Error::arg("state must have at least one qubit"));
    }
    let mut c = Circuit::new(2 * m + 1 + extra);
    let state = c.add_state();
    let layout = ChainLayout {
        k,
        ancilla: 0,
        extra: (1..=extra).collect(),
        b1: (1 + extra..1 + extra + m).collect(),
        b2: (1 + extra + m..1 + extra + 2 * m).collect(),
        state,
    };
    c.push(Instruction::PrepareMixed {
        qubits: layout.b1.clone(),
        state,
    })?;
    for j in 1..k {
        if j > 1 {
            c.push(Instruction::ResetToZero { qubits: layout.b2.clone() })?;
        }
        c.push(Instruction::PrepareMixed {
            qubits: layout.b2.clone(),
            state,
        })?;
        if j > 1 {
            c.push(Instruction::ResetToZero { qubits: vec![layout.ancilla] })?;
        }
        c.push(Instruction::Hadamard { qubit: layout.ancilla })?;
        c.push(Instruction::ControlledSwap {
            controls: vec![Control::on(layout.ancilla)],
            a: layout.b1.clone(),
            b: layout.b2.clone(),
        })?;
        c.push(Instruction::MeasureX {
            qubit: layout.ancilla,
            slot: layout.x_slot(j),
        })?;
        hook(&mut c, &layout, j)?;
    }
    Ok((c, layout))
}

/// The moment chain on `2m + 1` qubits with `k − 1` rounds and one record
/// slot per round. The state slot is left unbound.
pub fn build_moment_chain_circuit(m: usize, k: usize) -> Result<(Circuit, ChainLayout)> {
    chain_with_hook(m, k, 0, |_, _, _| Ok(()))
}

/// Runs `plan.shots` shots of the chain and returns all `k − 1` estimates.
pub fn estimate_moments(rho: &MixedState, plan: &MomentPlan) -> Result<MomentEstimates> {
    let (mut circuit, layout) = build_moment_chain_circuit(rho.qubits(), plan.k)?;
    circuit.bind(layout.state, Arc::new(rho.clone()))?;
    let orders = plan.k - 1;
    let sums = run_shots(
        &circuit,
        plan.seed,
        plan.shots,
        || SignSums::new(orders),
        |acc, rec| {
            acc.shots += 1;
            let mut prod = 1i64;
            for (l, x) in rec.outcomes.iter().enumerate() {
                prod *= *x as i64;
                acc.sums[l] += prod;
            }
        },
        SignSums::merge,
    )?;
    Ok(MomentEstimates {
        k: plan.k,
        shots: sums.shots,
        seed: plan.seed,
        estimates: sums.means(),
        stderr: sums.stderrs(),
        exact: exact_moments(rho, plan.k),
    })
}

/// Generalized SWAP test on `k·m + 1` qubits: a Hadamard test of the
/// controlled `k`-cycle on `k` copies. With an observable, the sampled Pauli
/// term is measured on the first copy in slot 1.
pub fn build_swap_test_circuit(m: usize, k: usize, weighted: Option<Arc<PauliObservable>>) -> Result<(Circuit, StateId)> {
    if k == 0 || m == 0 {
        return Err(Error::arg("k and m must be positive"));
    }
    let mut c = Circuit::new(k * m + 1);
    let state = c.add_state();
    let copy = |i: usize| -> Vec<usize> { (1 + i * m..1 + (i + 1) * m).collect() };
    for i in 0..k {
        c.push(Instruction::PrepareMixed { qubits: copy(i), state })?;
    }
    c.push(Instruction::Hadamard { qubit: 0 })?;
    for i in 1..k {
        c.push(Instruction::ControlledSwap {
            controls: vec![Control::on(0)],
            a: copy(0),
            b: copy(i),
        })?;
    }
    c.push(Instruction::MeasureX { qubit: 0, slot: 0 })?;
    if let Some(obs) = weighted {
        if obs.qubits() != m {
            return Err(Error::arg("observable size does not match the state"));
        }
        c.set_sampler(obs);
        c.push(Instruction::MeasureSampledPauli { qubits: copy(0), slot: 1 })?;
    }
    Ok((c, state))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwapTestEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub shots: u64,
}

/// Unbiased estimate of `Tr(ρᵏ)`, or of `Tr(Oρᵏ)` when `weighted_by` is set.
pub fn generalized_swap_test(
    rho: &MixedState,
    k: usize,
    shots: u64,
    weighted_by: Option<&PauliObservable>,
    seed: u64,
) -> Result<SwapTestEstimate> {
    if shots == 0 {
        return Err(Error::arg("shots must be at least 1"));
    }
    let (mut circuit, state) = build_swap_test_circuit(rho.qubits(), k, weighted_by.map(|o| Arc::new(o.clone())))?;
    circuit.bind(state, Arc::new(rho.clone()))?;
    let sums = run_shots(
        &circuit,
        seed,
        shots,
        || SignSums::new(1),
        |acc, rec| {
            acc.shots += 1;
            let sign = rec.sampled.map_or(1, |(_, s)| s as i64);
            acc.sums[0] += sign * rec.outcomes.iter().map(|&x| x as i64).product::<i64>();
        },
        SignSums::merge,
    )?;
    let scale = weighted_by.map_or(1.0, |o| o.l1_norm());
    let mean = sums.means()[0];
    Ok(SwapTestEstimate {
        estimate: scale * mean,
        stderr: scale * sign_stderr(mean, shots),
        shots,
    })
}

/// The ancilla-per-round reference circuit without resets: `k − 1`
/// ancillas, `k` copies, ancilla `i` controlling `SWAP(B₁, B_{i+1})`, all
/// ancillas measured in X at the end (ancilla `i` in slot `i`).
pub fn build_multicopy_circuit(m: usize, k: usize) -> Result<(Circuit, StateId)> {
    if k < 2 || m == 0 {
        return Err(Error::arg("need k ≥ 2 and m ≥ 1"));
    }
    let a = k - 1;
    let mut c = Circuit::new(a + k * m);
    let state = c.add_state();
    let copy = |i: usize| -> Vec<usize> { (a + i * m..a + (i + 1) * m).collect() };
    for i in 0..k {
        c.push(Instruction::PrepareMixed { qubits: copy(i), state })?;
    }
    for i in 0..a {
        c.push(Instruction::Hadamard { qubit: i })?;
    }
    for i in 0..a {
        c.push(Instruction::ControlledSwap {
            controls: vec![Control::on(i)],
            a: copy(0),
            b: copy(i + 1),
        })?;
    }
    for i in 0..a {
        c.push(Instruction::MeasureX { qubit: i, slot: i })?;
    }
    Ok((c, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::signed_expectation;

    fn gibbs_z() -> MixedState {
        let p = 1.0 / (1.0 + (-1.0f64).exp());
        MixedState::diagonal(&[1.0 - p, p]).unwrap()
    }

    #[test]
    fn shot_formula() {
        assert_eq!(required_shots(4, 0.1).unwrap(), 636);
        assert_eq!(required_shots(2, 1.0).unwrap(), 5);
        assert_eq!(required_shots(16, 0.05).unwrap(), 3652);
        assert_eq!(required_shots(4, 0.01).unwrap(), 63562);
        assert!(required_shots(4, 0.0).is_err());
        assert!(required_shots(1, 0.1).is_err());
    }

    #[test]
    fn chain_shape() {
        let (c, _) = build_moment_chain_circuit(1, 2).unwrap();
        assert_eq!((c.qubits(), c.slots()), (3, 1));
        let (c, _) = build_moment_chain_circuit(1, 5).unwrap();
        assert_eq!((c.qubits(), c.slots()), (3, 4));
        assert_eq!(c.count(|i| matches!(i, Instruction::ControlledSwap { .. })), 4);
        let (c, _) = build_moment_chain_circuit(2, 3).unwrap();
        assert_eq!(c.qubits(), 5);
        assert!(c
            .instructions()
            .iter()
            .all(|i| !matches!(i, Instruction::ControlledSwap { a, .. } if a.len() != 2)));
        assert!(build_moment_chain_circuit(1, 1).is_err());
    }

    #[test]
    fn exact_moments_of_gibbs_z() {
        let m = exact_moments(&gibbs_z(), 4);
        for (a, b) in m.iter().zip([0.606776, 0.410166, 0.290865]) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn chain_oracle_matches_moments() {
        let rho = Arc::new(gibbs_z());
        let (mut c, layout) = build_moment_chain_circuit(1, 4).unwrap();
        c.bind(layout.state, rho.clone()).unwrap();
        for l in 1..4 {
            let slots: Vec<usize> = (0..l).collect();
            let e = signed_expectation(&c, &slots).unwrap();
            assert!((e - rho.moment(l as u32 + 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_state_estimates_are_one() {
        let plan = MomentPlan::new(4, 0.1, 2000, 9).unwrap();
        let est = estimate_moments(&MixedState::zero(1).unwrap(), &plan).unwrap();
        assert_eq!(est.estimates, vec![1.0, 1.0, 1.0]);
        assert_eq!(est.shots, 2000);
    }

    #[test]
    fn swap_test_on_pure_state() {
        let est = generalized_swap_test(&MixedState::zero(1).unwrap(), 3, 500, None, 1).unwrap();
        assert_eq!(est.estimate, 1.0);
    }
}
