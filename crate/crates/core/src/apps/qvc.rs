//! Virtual cooling: `Tr(Hρᵏ)/Tr(ρᵏ)` is the energy of the Gibbs state at
//! `k` times the inverse temperature.

use serde::{Deserialize, Serialize};

use crate::observables::{Backend, OutcomeTable, WeightedSums};
use crate::pauli::PauliObservable;
use crate::sim::{derive, MixedState};
use crate::stats::{mean, slope, std_dev};
use crate::{observables, Error, Result};

/// `Tr(Hρᵏ)/Tr(ρᵏ)` by dense algebra.
pub fn exact_cooled_energy(rho: &MixedState, h: &PauliObservable, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    let den = rho.moment(k as u32);
    if den < 1e-300 {
        return Err(Error::Numerical(format!("Tr(ρ^{k}) underflows")));
    }
    Ok(rho.weighted_moment(h.dense()?, k as u32) / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QvcScheme {
    /// All numerators and denominators from one weighted-chain shot stream.
    Chain,
    /// Independent weighted SWAP tests per order at equal total copy budget.
    SwapBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QvcRow {
    pub k: usize,
    pub mean_energy: f64,
    pub sigma_energy: f64,
    pub mad: f64,
    pub exact_energy: f64,
    pub shots: u64,
    pub runs: usize,
    pub invalid_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QvcResult {
    pub scheme: QvcScheme,
    pub rows: Vec<QvcRow>,
    /// Prepared copies of `ρ` per run.
    pub copies_per_run: u64,
    /// Energies per run, `energies[run][i]` for order `ks[i]`; `None` marks a
    /// nonpositive denominator estimate.
    pub energies: Vec<Vec<Option<f64>>>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

fn chain_energies(sums: &WeightedSums, scale: f64, ks: &[usize]) -> Vec<Option<f64>> {
    let w = sums.weighted_means();
    let p = sums.plain_means();
    ks.iter()
        .map(|&k| {
            let den = if k == 1 { 1.0 } else { p[k - 2] };
            ratio(scale * w[k - 1], den)
        })
        .collect()
}

/// Shots for order `k` in the baseline so that each order gets an equal
/// share of the chain's copy budget `shots · K`.
pub fn baseline_shots(shots: u64, ks: &[usize], k: usize) -> u64 {
    let big_k = ks.iter().copied().max().unwrap_or(1).max(2) as u64;
    (shots * big_k / (ks.len() as u64 * k as u64)).max(1)
}

/// Virtual-cooling estimates for each order in `ks` over `runs` independent
/// runs of `shots` shots each. Shots are drawn from the exact outcome table
/// of the circuit (`Backend::OutcomeTable`) or by statevector execution.
#[allow(clippy::too_many_arguments)]
pub fn virtual_cooling_estimate(
    rho: &MixedState,
    h: &PauliObservable,
    ks: &[usize],
    shots: u64,
    runs: usize,
    seed: u64,
    scheme: QvcScheme,
    backend: Backend,
) -> Result<QvcResult> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::arg("orders must be positive"));
    }
    if runs == 0 || shots == 0 {
        return Err(Error::arg("runs and shots must be positive"));
    }
    if h.qubits() != rho.qubits() {
        return Err(Error::arg("Hamiltonian and state sizes differ"));
    }
    let scale = h.l1_norm();
    let big_k = ks.iter().copied().max().unwrap_or(1).max(2);
    let exact = ks
        .iter()
        .map(|&k| exact_cooled_energy(rho, h, k))
        .collect::<Result<Vec<_>>>()?;
    let mut energies = Vec::with_capacity(runs);
    let copies_per_run;
    match scheme {
        QvcScheme::Chain => {
            copies_per_run = shots * big_k as u64;
            let table = match backend {
                Backend::Statevector => None,
                _ => Some(OutcomeTable::pauli_chain(rho, h, big_k)?),
            };
            for r in 0..runs {
                let s = derive(seed, r as u64);
                let sums = match &table {
                    Some(t) => t.sample(s, shots),
                    None => {
                        let est = observables::estimate_weighted_moments_with(
                            rho,
                            h,
                            big_k,
                            shots,
                            observables::WeightedScheme::Pauli,
                            s,
                            Backend::Statevector,
                        )?;
                        return_sums(&est, scale)
                    }
                };
                energies.push(chain_energies(&sums, scale, ks));
            }
        }
        QvcScheme::SwapBaseline => {
            let tables = ks
                .iter()
                .map(|&k| OutcomeTable::weighted_swap_test(rho, h, k))
                .collect::<Result<Vec<_>>>()?;
            copies_per_run = ks.iter().map(|&k| baseline_shots(shots, ks, k) * k as u64).sum();
            for r in 0..runs {
                let row = ks
                    .iter()
                    .zip(&tables)
                    .enumerate()
                    .map(|(i, (&k, t))| {
                        let n = baseline_shots(shots, ks, k);
                        let sums = t.sample(derive(derive(seed, r as u64), i as u64), n);
                        ratio(scale * sums.weighted_means()[0], sums.plain_means()[0])
                    })
                    .collect();
                energies.push(row);
            }
        }
    }
    let rows = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let valid: Vec<f64> = energies.iter().filter_map(|e| e[i]).collect();
            let errs: Vec<f64> = valid.iter().map(|e| (e - exact[i]).abs()).collect();
            QvcRow {
                k,
                mean_energy: if valid.is_empty() { f64::NAN } else { mean(&valid) },
                sigma_energy: std_dev(&valid),
                mad: if errs.is_empty() { f64::NAN } else { mean(&errs) },
                exact_energy: exact[i],
                shots: match scheme {
                    QvcScheme::Chain => shots,
                    QvcScheme::SwapBaseline => baseline_shots(shots, ks, k),
                },
                runs,
                invalid_runs: runs - valid.len(),
            }
        })
        .collect();
    Ok(QvcResult {
        scheme,
        rows,
        copies_per_run,
        energies,
    })
}

// Rebuilds integer sums from a statevector estimate so both backends share
// the ratio code.
fn return_sums(est: &observables::WeightedMomentEstimates, scale: f64) -> WeightedSums {
    let n = est.shots as f64;
    WeightedSums {
        shots: est.shots,
        weighted: est.estimates.iter().map(|e| (e / scale * n).round() as i64).collect(),
        plain: est.moments.iter().map(|m| (m * n).round() as i64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub k: usize,
    pub shots: u64,
    pub mean_abs_err: f64,
    pub invalid_runs: usize,
    /// Fitted exponent of `mean_abs_err ∝ shots^slope` for this `(n, k)`.
    pub slope: f64,
}

/// Mean absolute cooled-energy error versus shots, with a least-squares
/// fit of `log error` against `log shots` per order.
pub fn error_scaling_study(
    n: usize,
    rho: &MixedState,
    h: &PauliObservable,
    ks: &[usize],
    shot_grid: &[u64],
    runs: usize,
    seed: u64,
) -> Result<Vec<ScalingRow>> {
    if shot_grid.len() < 2 {
        return Err(Error::arg("need at least two shot counts"));
    }
    let mut per_k: Vec<Vec<(u64, f64, usize)>> = vec![Vec::new(); ks.len()];
    for (g, &shots) in shot_grid.iter().enumerate() {
        let res = virtual_cooling_estimate(rho, h, ks, shots, runs, derive(seed, g as u64), QvcScheme::Chain, Backend::OutcomeTable)?;
        for (i, row) in res.rows.iter().enumerate() {
            per_k[i].push((shots, row.mad, row.invalid_runs));
        }
    }
    let mut out = Vec::new();
    for (i, &k) in ks.iter().enumerate() {
        let xs: Vec<f64> = per_k[i].iter().map(|(s, _, _)| (*s as f64).ln()).collect();
        let ys: Vec<f64> = per_k[i].iter().map(|(_, e, _)| e.ln()).collect();
        let fitted = slope(&xs, &ys);
        for &(shots, err, invalid) in &per_k[i] {
            out.push(ScalingRow {
                n,
                k,
                shots,
                mean_abs_err: err,
                invalid_runs: invalid,
                slope: fitted,
            });
        }
    }
    Ok(out)
}
