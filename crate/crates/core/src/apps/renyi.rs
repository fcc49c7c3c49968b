//! Integer-order Rényi entropies from moments.


use serde::{Deserialize, Serialize};

use crate::moments::{estimate_moments, MomentPlan};
use crate::sim::{run_shots, Circuit, Control, Instruction, MixedState};
use crate::stats::SignSums;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

/// `S_α = log Tr(ρ^α) / (1 − α)` from a moment value.
pub fn renyi_entropy(moment: f64, alpha: usize, base: LogBase) -> Result<f64> {
    if alpha < 2 {
        return Err(Error::arg("order alpha must be at least 2"));
    }
    if !(moment > 0.0) {
        return Err(Error::Numerical(format!(
            "moment estimate {moment} is not positive; increase the number of shots"
        )));
    }
    Ok(base.log(moment) / (1.0 - alpha as f64))
}

/// Two-qubit purification of the Gibbs state of `H = Z`: `R_y(θ)` on
/// `system` with `θ = 2 arctan e^β`, then `CNOT(system → env)`.
pub fn gibbs_z_circuit(beta: f64, system: usize, env: usize) -> Vec<Instruction> {
    let theta = 2.0 * beta.exp().atan();
    vec![
        Instruction::RotationY { qubit: system, angle: theta },
        Instruction::ControlledNot { control: system, target: env },
    ]
}

/// Moment chain where each copy is prepared by the purification circuit on
/// a system and environment qubit: ancilla 0, B1 = (1, 2), B2 = (3, 4).
/// Only the system qubits are swapped.
pub fn purified_chain_circuit(beta: f64, k: usize) -> Result<Circuit> {
    if k < 2 {
        return Err(Error::arg("order k must be at least 2"));
    }
    let mut c = Circuit::new(5);
    c.extend(gibbs_z_circuit(beta, 1, 2))?;
    for j in 1..k {
        if j > 1 {
            c.push(Instruction::ResetToZero { qubits: vec![3, 4] })?;
            c.push(Instruction::ResetToZero { qubits: vec![0] })?;
        }
        c.extend(gibbs_z_circuit(beta, 3, 4))?;
        c.push(Instruction::Hadamard { qubit: 0 })?;
        c.push(Instruction::ControlledSwap {
            controls: vec![Control::on(0)],
            a: vec![1],
            b: vec![3],
        })?;
        c.push(Instruction::MeasureX { qubit: 0, slot: j - 1 })?;
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenyiRow {
    pub alpha: usize,
    pub moment_estimate: f64,
    pub moment_stderr: f64,
    pub moment_exact: f64,
    pub estimate: f64,
    pub exact: f64,
}

/// Running-product sums of the purified chain of order `k`; mean `j` is the
/// estimate of `Tr(ρ^{j+2})`.
pub fn purified_moments(beta: f64, k: usize, shots: u64, seed: u64) -> Result<SignSums> {
    if shots == 0 {
        return Err(Error::arg("shots must be at least 1"));
    }
    let circuit = purified_chain_circuit(beta, k)?;
    run_shots(
        &circuit,
        seed,
        shots,
        || SignSums::new(k - 1),
        |acc, rec| {
            acc.shots += 1;
            let mut prod = 1i64;
            for (l, x) in rec.outcomes.iter().enumerate() {
                prod *= *x as i64;
                acc.sums[l] += prod;
            }
        },
        SignSums::merge,
    )
}

/// Rényi entropies of the Gibbs state of `H = Z` from one run of the
/// purified chain of order `max(alphas)`.
pub fn renyi_experiment(beta: f64, alphas: &[usize], shots: u64, seed: u64, base: LogBase) -> Result<Vec<RenyiRow>> {
    let k = alphas.iter().copied().max().ok_or_else(|| Error::arg("no orders given"))?;
    if alphas.iter().any(|&a| a < 2) {
        return Err(Error::arg("orders must be at least 2"));
    }
    let sums = purified_moments(beta, k, shots, seed)?;
    let rho = gibbs_z(beta)?;
    let (means, errs) = (sums.means(), sums.stderrs());
    alphas
        .iter()
        .map(|&a| {
            let exact_m = rho.moment(a as u32);
            Ok(RenyiRow {
                alpha: a,
                moment_estimate: means[a - 2],
                moment_stderr: errs[a - 2],
                moment_exact: exact_m,
                estimate: renyi_entropy(means[a - 2], a, base)?,
                exact: renyi_entropy(exact_m, a, base)?,
            })
        })
        .collect()
}

/// `diag(e^{−β}, e^{β})/(e^{−β} + e^{β})`.
pub fn gibbs_z(beta: f64) -> Result<MixedState> {
    let p1 = 1.0 / (1.0 + (-2.0 * beta).exp());
    MixedState::diagonal(&[1.0 - p1, p1])
}

/// Rényi entropies from moments estimated with the plain chain on `ρ`.
pub fn renyi_from_chain(rho: &MixedState, alphas: &[usize], shots: u64, seed: u64, base: LogBase) -> Result<Vec<RenyiRow>> {
    let k = alphas.iter().copied().max().ok_or_else(|| Error::arg("no orders given"))?;
    let plan = MomentPlan::new(k, 1.0 / (shots.max(1) as f64).sqrt(), shots, seed)?;
    let est = estimate_moments(rho, &plan)?;
    alphas
        .iter()
        .map(|&a| {
            let m = est.order(a).ok_or_else(|| Error::arg("order out of range"))?;
            Ok(RenyiRow {
                alpha: a,
                moment_estimate: m,
                moment_stderr: est.order_stderr(a).unwrap_or(0.0),
                moment_exact: rho.moment(a as u32),
                estimate: renyi_entropy(m, a, base)?,
                exact: renyi_entropy(rho.moment(a as u32), a, base)?,
            })
        })
        .collect()
}
