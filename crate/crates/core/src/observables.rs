//! Observable-weighted moments `Tr(Oρʲ)` and functionals `f(O, ρ)`.
//!
//! Two schemes extend the moment chain. The Pauli scheme samples one term
//! `P_p` of `O = Σ α_p P_p` per shot with probability `|α_p|/S` and measures
//! it on the freshly swapped copy of each round. The LCU scheme writes
//! `O = ‖O‖ (U + U†)/2` and runs a controlled-`U` Hadamard test on the same
//! copy with a second ancilla. Both give, for every order, a `±1` product
//! whose rescaled mean is unbiased.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::linalg::{self, c, CMatrix};
use crate::moments::{chain_with_hook, ChainLayout};
use crate::pauli::{PauliObservable, DENSE_MAX_QUBITS};
use crate::qsf::PolynomialFunctional;
use crate::sim::{par_shots, run_shots, Circuit, Control, Instruction, MixedState, ShotRecord};
use crate::stats::sign_stderr;
use crate::{Error, Result};

/// `U = O′ + i√(I − O′²)` with `O′ = O/‖O‖`, so that `‖O‖(U + U†)/2 = O`.
#[derive(Debug, Clone)]
pub struct LcuUnitary {
    pub unitary: CMatrix,
    pub norm: f64,
    pub observable: PauliObservable,
}

pub fn lcu_unitary(observable: &PauliObservable) -> Result<LcuUnitary> {
    let dense = observable.dense()?;
    let norm = observable.spectral_norm()?;
    if norm <= 0.0 {
        return Err(Error::arg("observable has zero norm"));
    }
    let (values, vectors) = linalg::eigh(&dense.unscale(norm));
    let dim = values.len();
    let phases = CMatrix::from_fn(dim, dim, |r, col| {
        let l = values[col].clamp(-1.0, 1.0);
        vectors[(r, col)] * c(l, (1.0 - l * l).max(0.0).sqrt())
    });
    Ok(LcuUnitary {
        unitary: phases * vectors.adjoint(),
        norm,
        observable: observable.clone(),
    })
}

impl LcuUnitary {
    /// `‖O‖ (U + U†)/2`.
    pub fn reconstruct(&self) -> CMatrix {
        (&self.unitary + self.unitary.adjoint()).scale(self.norm / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormReport {
    pub spectral: f64,
    pub l1: f64,
    pub sqrt_terms_times_spectral: f64,
}

/// `(‖O‖, S, √n_P ‖O‖)`, checking `‖O‖ ≤ S ≤ √n_P ‖O‖`.
pub fn norm_report(observable: &PauliObservable) -> Result<NormReport> {
    let spectral = observable.spectral_norm()?;
    let l1 = observable.l1_norm();
    let upper = (observable.num_terms() as f64).sqrt() * spectral;
    let tol = 1e-9 * (1.0 + l1);
    if spectral > l1 + tol || l1 > upper + tol {
        return Err(Error::Numerical(format!("norm chain violated: {spectral} ≤ {l1} ≤ {upper}")));
    }
    Ok(NormReport {
        spectral,
        l1,
        sqrt_terms_times_spectral: upper,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightedScheme {
    Lcu,
    Pauli,
}

/// How shots are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Statevector execution of the circuit, shot by shot.
    Statevector,
    /// Draws from the exact joint outcome distribution of the same circuit.
    OutcomeTable,
    /// Statevector up to [`AUTO_STATEVECTOR_QUBITS`], outcome table above.
    Auto,
}

pub const AUTO_STATEVECTOR_QUBITS: usize = 9;

/// Record slots of a weighted chain of order `k`: round `j` ancilla in slot
/// `j − 1`, round `j` observable outcome in slot `k − 2 + j`, and the final
/// measurement on B1 in slot `2k − 2`.
pub fn weighted_slot(k: usize, j: usize) -> usize {
    if j == 0 {
        2 * k - 2
    } else {
        k - 2 + j
    }
}

/// Pauli-scheme chain on `2m + 1` qubits; the observable is attached as the
/// circuit's sampler.
pub fn build_pauli_chain_circuit(observable: &PauliObservable, k: usize) -> Result<(Circuit, ChainLayout)> {
    let m = observable.qubits();
    let (mut c, layout) = chain_with_hook(m, k, 0, |c, layout, j| {
        c.push(Instruction::MeasureSampledPauli {
            qubits: layout.b2.clone(),
            slot: weighted_slot(k, j),
        })
    })?;
    c.set_sampler(Arc::new(observable.clone()));
    c.push(Instruction::MeasureSampledPauli {
        qubits: layout.b1.clone(),
        slot: weighted_slot(k, 0),
    })?;
    Ok((c, layout))
}

/// LCU-scheme chain on `2m + 2` qubits; qubit 1 is the LCU ancilla.
pub fn build_lcu_chain_circuit(lcu: &LcuUnitary, k: usize) -> Result<(Circuit, ChainLayout)> {
    let m = lcu.observable.qubits();
    let u = Arc::new(lcu.unitary.clone());
    let test = |c: &mut Circuit, reset: bool, targets: &[usize], slot: usize| -> Result<()> {
        if reset {
            c.push(Instruction::ResetToZero { qubits: vec![1] })?;
        }
        c.push(Instruction::Hadamard { qubit: 1 })?;
        c.push(Instruction::ControlledUnitary {
            controls: vec![Control::on(1)],
            targets: targets.to_vec(),
            unitary: u.clone(),
        })?;
        c.push(Instruction::MeasureX { qubit: 1, slot })
    };
    let (mut c, layout) = chain_with_hook(m, k, 1, |c, layout, j| test(c, j > 1, &layout.b2, weighted_slot(k, j)))?;
    test(&mut c, true, &layout.b1.clone(), weighted_slot(k, 0))?;
    Ok((c, layout))
}

/// Integer sums over shots: `weighted[j]` for `Tr(Oρ^{j+1})` (before
/// rescaling) and `plain[j]` for `Tr(ρ^{j+2})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedSums {
    pub shots: u64,
    pub weighted: Vec<i64>,
    pub plain: Vec<i64>,
}

impl WeightedSums {
    pub fn new(k: usize) -> Self {
        WeightedSums {
            shots: 0,
            weighted: vec![0; k],
            plain: vec![0; k.saturating_sub(1)],
        }
    }

    pub fn merge(mut self, o: WeightedSums) -> WeightedSums {
        self.shots += o.shots;
        self.weighted.iter_mut().zip(o.weighted).for_each(|(a, b)| *a += b);
        self.plain.iter_mut().zip(o.plain).for_each(|(a, b)| *a += b);
        self
    }

    fn add_record(&mut self, k: usize, rec: &ShotRecord) {
        self.shots += 1;
        let sign = rec.sampled.map_or(1, |(_, s)| s as i64);
        self.weighted[0] += sign * rec.outcomes[weighted_slot(k, 0)] as i64;
        let mut prod = 1i64;
        for j in 1..k {
            prod *= rec.outcomes[j - 1] as i64;
            self.plain[j - 1] += prod;
            self.weighted[j] += sign * prod * rec.outcomes[weighted_slot(k, j)] as i64;
        }
    }

    pub fn weighted_means(&self) -> Vec<f64> {
        self.weighted.iter().map(|&s| s as f64 / self.shots as f64).collect()
    }

    pub fn plain_means(&self) -> Vec<f64> {
        self.plain.iter().map(|&s| s as f64 / self.shots as f64).collect()
    }
}

/// Estimates of `Tr(Oρ) … Tr(Oρᵏ)` (index `j` is order `j + 1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedMomentEstimates {
    pub k: usize,
    pub shots: u64,
    pub seed: u64,
    pub scheme: WeightedScheme,
    /// Rescaling constant: `S` for the Pauli scheme, `‖O‖` for LCU.
    pub scale: f64,
    pub estimates: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Plain moments `Tr(ρ²) … Tr(ρᵏ)` from the same shots.
    pub moments: Vec<f64>,
    pub exact: Vec<f64>,
}

/// `Tr(Oρ) … Tr(Oρᵏ)` by dense algebra.
pub fn exact_weighted_moments(rho: &MixedState, observable: &PauliObservable, k: usize) -> Result<Vec<f64>> {
    let dense = observable.dense()?;
    Ok((1..=k as u32).map(|j| rho.weighted_moment(dense, j)).collect())
}

pub fn estimate_weighted_moments(
    rho: &MixedState,
    observable: &PauliObservable,
    k: usize,
    shots: u64,
    scheme: WeightedScheme,
    seed: u64,
) -> Result<WeightedMomentEstimates> {
    estimate_weighted_moments_with(rho, observable, k, shots, scheme, seed, Backend::Auto)
}

pub fn estimate_weighted_moments_with(
    rho: &MixedState,
    observable: &PauliObservable,
    k: usize,
    shots: u64,
    scheme: WeightedScheme,
    seed: u64,
    backend: Backend,
) -> Result<WeightedMomentEstimates> {
    if shots == 0 {
        return Err(Error::arg("shots must be at least 1"));
    }
    if observable.qubits() != rho.qubits() {
        return Err(Error::arg("observable and state sizes differ"));
    }
    if k < 2 {
        return Err(Error::arg("order k must be at least 2"));
    }
    let lcu = match scheme {
        WeightedScheme::Lcu => Some(lcu_unitary(observable)?),
        WeightedScheme::Pauli => None,
    };
    let scale = match &lcu {
        Some(l) => l.norm,
        None => observable.l1_norm(),
    };
    if scale == 0.0 {
        return Err(Error::arg("observable is zero"));
    }
    let qubits = 2 * rho.qubits() + 1 + usize::from(lcu.is_some());
    let use_table = match backend {
        Backend::Statevector => false,
        Backend::OutcomeTable => true,
        Backend::Auto => qubits > AUTO_STATEVECTOR_QUBITS,
    };
    let sums = if use_table {
        let table = match &lcu {
            Some(l) => OutcomeTable::lcu_chain(rho, l, k)?,
            None => OutcomeTable::pauli_chain(rho, observable, k)?,
        };
        table.sample(seed, shots)
    } else {
        let (mut circuit, layout) = match &lcu {
            Some(l) => build_lcu_chain_circuit(l, k)?,
            None => build_pauli_chain_circuit(observable, k)?,
        };
        circuit.bind(layout.state, Arc::new(rho.clone()))?;
        run_shots(&circuit, seed, shots, || WeightedSums::new(k), |acc, rec| acc.add_record(k, rec), WeightedSums::merge)?
    };
    let means = sums.weighted_means();
    Ok(WeightedMomentEstimates {
        k,
        shots,
        seed,
        scheme,
        scale,
        estimates: means.iter().map(|m| scale * m).collect(),
        stderr: means.iter().map(|&m| scale * sign_stderr(m, shots)).collect(),
        moments: sums.plain_means(),
        exact: exact_weighted_moments(rho, observable, k)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedFunctionalEstimate {
    pub estimate: f64,
    pub bound: f64,
    pub exact: f64,
}

/// `f_i(O, ρ) = Σ_j β_{i,j} Tr(Oρʲ)` for every `f_i`, all from one shot stream.
pub fn estimate_weighted_functionals(
    rho: &MixedState,
    observable: &PauliObservable,
    fs: &[PolynomialFunctional],
    shots: u64,
    scheme: WeightedScheme,
    seed: u64,
) -> Result<Vec<WeightedFunctionalEstimate>> {
    let k = fs.iter().map(|f| f.degree()).max().unwrap_or(1).max(2);
    let est = estimate_weighted_moments(rho, observable, k, shots, scheme, seed)?;
    Ok(contract(&est, fs))
}

/// Coefficient contraction of weighted moment estimates.
pub fn contract(est: &WeightedMomentEstimates, fs: &[PolynomialFunctional]) -> Vec<WeightedFunctionalEstimate> {
    fs.iter()
        .map(|f| WeightedFunctionalEstimate {
            estimate: f.evaluate(|j| est.estimates[j - 1]),
            bound: f.coeffs.iter().enumerate().map(|(i, b)| b.abs() * est.stderr[i]).sum(),
            exact: f.evaluate(|j| est.exact[j - 1]),
        })
        .collect()
}

/// Joint outcome distribution of a weighted chain or SWAP test, flattened
/// to per-entry contributions so shots can be drawn without simulation.
#[derive(Debug, Clone)]
pub struct OutcomeTable {
    k: usize,
    cdf: Vec<f64>,
    /// Per entry: `k` weighted products then `k − 1` plain products.
    contributions: Vec<i8>,
}

struct Effect {
    weight: f64,
    sign: i8,
    plus: CMatrix,
    minus: CMatrix,
}

fn pauli_effects(observable: &PauliObservable) -> Result<Vec<Effect>> {
    if observable.qubits() > DENSE_MAX_QUBITS {
        return Err(Error::CapExceeded {
            what: "outcome table qubits",
            needed: observable.qubits(),
            cap: DENSE_MAX_QUBITS,
        });
    }
    let s = observable.l1_norm();
    let id = linalg::identity(1 << observable.qubits());
    Ok(observable
        .terms()
        .iter()
        .filter(|(a, _)| *a != 0.0)
        .map(|(a, p)| {
            let pm = p.matrix();
            Effect {
                weight: a.abs() / s,
                sign: if *a < 0.0 { -1 } else { 1 },
                plus: (&id + &pm).scale(0.5),
                minus: (&id - &pm).scale(0.5),
            }
        })
        .collect())
}

fn trace_prod(a: &CMatrix, b: &CMatrix) -> f64 {
    // Re Tr(AB) without forming the product.
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

impl OutcomeTable {
    fn push(&mut self, p: f64, contrib: &[i8]) {
        let last = self.cdf.last().copied().unwrap_or(0.0);
        self.cdf.push(last + p.max(0.0));
        self.contributions.extend_from_slice(contrib);
    }

    fn chain(rho: &MixedState, k: usize, effects: &[Effect]) -> Result<Self> {
        if k < 2 {
            return Err(Error::arg("order k must be at least 2"));
        }
        if k > 8 {
            return Err(Error::CapExceeded {
                what: "outcome table order",
                needed: k,
                cap: 8,
            });
        }
        let r = rho.matrix();
        let mut table = OutcomeTable {
            k,
            cdf: Vec::new(),
            contributions: Vec::new(),
        };
        let stride = 2 * k - 1;
        for e in effects {
            let pr = [trace_prod(&e.plus, r), trace_prod(&e.minus, r)];
            let mut contrib = vec![0i8; stride];
            table.descend(r, &r.scale(e.weight), 1, 1, e, &pr, &mut contrib);
        }
        Ok(table)
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(&mut self, r: &CMatrix, sigma: &CMatrix, j: usize, prod: i8, e: &Effect, pr: &[f64; 2], contrib: &mut Vec<i8>) {
        let k = self.k;
        if j == k {
            for (l, eff) in [(1i8, &e.plus), (-1i8, &e.minus)] {
                contrib[0] = e.sign * l;
                let p = trace_prod(eff, sigma);
                self.push(p, contrib);
            }
            return;
        }
        for (li, (l, eff)) in [(1i8, &e.plus), (-1i8, &e.minus)].into_iter().enumerate() {
            let spr = sigma * eff * r;
            let cross = &spr + spr.adjoint();
            let base = sigma.scale(pr[li]) + r.scale(trace_prod(eff, sigma));
            for x in [1i8, -1] {
                let next = (&base + cross.scale(x as f64)).scale(0.25);
                let px = prod * x;
                contrib[j] = e.sign * l * px;
                contrib[k - 1 + j] = px;
                self.descend(r, &next, j + 1, px, e, pr, contrib);
            }
        }
    }

    /// Exact table of the Pauli-scheme chain of order `k`.
    pub fn pauli_chain(rho: &MixedState, observable: &PauliObservable, k: usize) -> Result<Self> {
        OutcomeTable::chain(rho, k, &pauli_effects(observable)?)
    }

    /// Exact table of the LCU-scheme chain; the Hadamard test of `U` acts on
    /// the copy through the effects `(I ± O′)/2`.
    pub fn lcu_chain(rho: &MixedState, lcu: &LcuUnitary, k: usize) -> Result<Self> {
        let o = lcu.observable.dense()?.unscale(lcu.norm);
        let id = linalg::identity(o.nrows());
        let e = Effect {
            weight: 1.0,
            sign: 1,
            plus: (&id + &o).scale(0.5),
            minus: (&id - &o).scale(0.5),
        };
        OutcomeTable::chain(rho, k, &[e])
    }

    /// Exact table of the weighted generalized SWAP test on `k` copies, in
    /// the same layout with `k = 2`: `[sgn·x·s, x]`.
    pub fn weighted_swap_test(rho: &MixedState, observable: &PauliObservable, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::arg("k must be at least 1"));
        }
        let r = rho.matrix();
        let (values, vectors) = (rho.eigenvalues(), rho.eigenvectors());
        let powered: Vec<f64> = values.iter().map(|l| l.powi(k as i32)).collect();
        let rk = linalg::from_spectrum(&powered, vectors);
        let mut table = OutcomeTable {
            k: 2,
            cdf: Vec::new(),
            contributions: Vec::new(),
        };
        for e in pauli_effects(observable)? {
            for (s, eff) in [(1i8, &e.plus), (-1i8, &e.minus)] {
                let (a, b) = (trace_prod(eff, r), trace_prod(eff, &rk));
                for x in [1i8, -1] {
                    let p = e.weight * 0.5 * (a + x as f64 * b);
                    table.push(p, &[e.sign * s * x, 0, x]);
                }
            }
        }
        Ok(table)
    }

    /// Total probability; 1 up to rounding.
    pub fn total(&self) -> f64 {
        self.cdf.last().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    /// `(probability, contributions)` per entry: `k` weighted products then
    /// `k − 1` plain products.
    pub fn entries(&self) -> impl Iterator<Item = (f64, &[i8])> + '_ {
        let stride = 2 * self.k - 1;
        self.cdf.iter().enumerate().map(move |(i, &c)| {
            let prev = if i == 0 { 0.0 } else { self.cdf[i - 1] };
            (c - prev, &self.contributions[i * stride..(i + 1) * stride])
        })
    }

    /// Exact expectations of the weighted and plain products.
    pub fn expectations(&self) -> (Vec<f64>, Vec<f64>) {
        let mut w = vec![0.0; self.k];
        let mut p = vec![0.0; self.k - 1];
        for (prob, row) in self.entries() {
            for j in 0..self.k {
                w[j] += prob * row[j] as f64;
            }
            for j in 0..self.k - 1 {
                p[j] += prob * row[self.k + j] as f64;
            }
        }
        (w, p)
    }

    /// Draws `shots` outcomes, shot `i` from stream `(seed, i)`.
    pub fn sample(&self, seed: u64, shots: u64) -> WeightedSums {
        use rand::Rng;
        let k = self.k;
        let stride = 2 * k - 1;
        let total = self.total();
        par_shots(
            seed,
            shots,
            || WeightedSums::new(k),
            |acc, rng, _| {
                let u = rng.random::<f64>() * total;
                let i = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
                let row = &self.contributions[i * stride..(i + 1) * stride];
                acc.shots += 1;
                for j in 0..k {
                    acc.weighted[j] += row[j] as i64;
                }
                for j in 0..k - 1 {
                    acc.plain[j] += row[k + j] as i64;
                }
            },
            WeightedSums::merge,
        )
    }
}
