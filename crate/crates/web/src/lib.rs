//! Browser bindings. Each export takes plain numbers and returns a JSON
//! string; errors come back as a rejected string.

use qmoments::apps::interval::dirichlet_spectrum;
use qmoments::apps::renyi::{gibbs_z, purified_moments};
use qmoments::apps::{
    gibbs_state, heisenberg_hamiltonian, lambda_max_interval, perturb_moments, renyi_entropy,
    virtual_cooling_estimate, HeisenbergSpec, LogBase, QvcScheme,
};
use qmoments::observables::Backend;
use qmoments::sim::shot_rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest chain the page will simulate.
const MAX_SITES: usize = 5;
const MAX_SHOTS: u64 = 1_000_000;

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn check_shots(shots: u32) -> Result<u64, String> {
    match shots as u64 {
        0 => Err("shots must be at least 1".into()),
        s if s > MAX_SHOTS => Err(format!("at most {MAX_SHOTS} shots in the browser")),
        s => Ok(s),
    }
}

#[derive(Serialize)]
struct RenyiPoint {
    beta: f64,
    alpha: usize,
    exact: f64,
    estimate: Option<f64>,
    moment_estimate: f64,
    moment_stderr: f64,
}

/// Rényi entropies of the Gibbs state of `H = Z` over `steps` values of β in
/// `[0, beta_max]`, exact and from the purified chain.
pub fn renyi_profile_json(beta_max: f64, steps: u32, max_alpha: u32, shots: u32, seed: u64, base2: bool) -> Result<String, String> {
    if !(beta_max >= 0.0) || steps < 2 || steps > 41 {
        return Err("need beta_max ≥ 0 and 2..=41 steps".into());
    }
    if !(2..=6).contains(&max_alpha) {
        return Err("max_alpha must be in 2..=6".into());
    }
    let shots = check_shots(shots)?;
    let base = if base2 { LogBase::Two } else { LogBase::Natural };
    let alphas: Vec<usize> = (2..=max_alpha as usize).collect();
    let mut points = Vec::new();
    for i in 0..steps {
        let beta = beta_max * i as f64 / (steps - 1) as f64;
        let rho = gibbs_z(beta).map_err(|e| e.to_string())?;
        let sums = purified_moments(beta, max_alpha as usize, shots, seed.wrapping_add(i as u64)).map_err(|e| e.to_string())?;
        let sampled: Vec<(f64, f64)> = sums.means().into_iter().zip(sums.stderrs()).collect();
        // A low shot count can give a nonpositive moment; the entropy is then left empty.
        for (a, (m, se)) in alphas.iter().zip(sampled) {
            points.push(RenyiPoint {
                beta,
                alpha: *a,
                exact: renyi_entropy(rho.moment(*a as u32), *a, base).map_err(|e| e.to_string())?,
                estimate: renyi_entropy(m, *a, base).ok(),
                moment_estimate: m,
                moment_stderr: se,
            });
        }
    }
    to_json(&points)
}

#[derive(Serialize)]
struct IntervalDemo {
    spectrum: Vec<f64>,
    lambda_max: f64,
    exact_moments: Vec<f64>,
    noisy_moments: Vec<f64>,
    lower: f64,
    upper: f64,
    consistent: bool,
    contains: bool,
}

/// One Dirichlet spectrum of the given rank, its noisy moments up to order
/// `k` and the resulting interval for the largest eigenvalue.
pub fn eigen_interval_json(rank: u32, eps: f64, k: u32, seed: u64) -> Result<String, String> {
    if !(1..=256).contains(&rank) {
        return Err("rank must be in 1..=256".into());
    }
    if !(2..=10).contains(&k) {
        return Err("k must be in 2..=10".into());
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err("eps must be in (0, 1)".into());
    }
    let mut rng = shot_rng(seed, 0);
    let mut spectrum = dirichlet_spectrum(rank as usize, &mut rng);
    spectrum.sort_by(|a, b| b.total_cmp(a));
    let exact: Vec<f64> = (2..=k as i32).map(|j| spectrum.iter().map(|l| l.powi(j)).sum()).collect();
    let noisy = perturb_moments(&exact, eps, &mut rng);
    let iv = lambda_max_interval(&noisy).map_err(|e| e.to_string())?;
    to_json(&IntervalDemo {
        lambda_max: spectrum[0],
        contains: iv.contains(spectrum[0]),
        spectrum,
        exact_moments: exact,
        noisy_moments: noisy.moments,
        lower: iv.lower,
        upper: iv.upper,
        consistent: iv.consistent,
    })
}

#[derive(Serialize)]
struct CoolingPoint {
    k: usize,
    exact: f64,
    mean: f64,
    sigma: f64,
    invalid_runs: usize,
}

/// Cooled energies `Tr(Hρᵏ)/Tr(ρᵏ)` of the open Heisenberg chain for
/// `k = 1..=max_k`, exact and from `runs` runs of the weighted chain.
pub fn cooling_profile_json(n: u32, beta: f64, max_k: u32, shots: u32, runs: u32, seed: u64) -> Result<String, String> {
    if !(2..=MAX_SITES as u32).contains(&n) {
        return Err(format!("n must be in 2..={MAX_SITES}"));
    }
    if !(1..=6).contains(&max_k) || !(1..=50).contains(&runs) {
        return Err("need 1 ≤ max_k ≤ 6 and 1 ≤ runs ≤ 50".into());
    }
    let shots = check_shots(shots)?;
    let err = |e: qmoments::Error| e.to_string();
    let h = heisenberg_hamiltonian(&HeisenbergSpec::new(n as usize, 1.0, 1.0).map_err(err)?).map_err(err)?;
    let rho = gibbs_state(&h, beta).map_err(err)?;
    let ks: Vec<usize> = (1..=max_k as usize).collect();
    let res = virtual_cooling_estimate(&rho, &h, &ks, shots, runs as usize, seed, QvcScheme::Chain, Backend::OutcomeTable).map_err(err)?;
    let points: Vec<CoolingPoint> = res
        .rows
        .iter()
        .map(|r| CoolingPoint {
            k: r.k,
            exact: r.exact_energy,
            mean: r.mean_energy,
            sigma: r.sigma_energy,
            invalid_runs: r.invalid_runs,
        })
        .collect();
    to_json(&points)
}

#[wasm_bindgen]
pub fn renyi_profile(beta_max: f64, steps: u32, max_alpha: u32, shots: u32, seed: u32, base2: bool) -> Result<String, JsValue> {
    renyi_profile_json(beta_max, steps, max_alpha, shots, seed as u64, base2).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn eigen_interval(rank: u32, eps: f64, k: u32, seed: u32) -> Result<String, JsValue> {
    eigen_interval_json(rank, eps, k, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn cooling_profile(n: u32, beta: f64, max_k: u32, shots: u32, runs: u32, seed: u32) -> Result<String, JsValue> {
    cooling_profile_json(n, beta, max_k, shots, runs, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renyi_profile_endpoints() {
        let v: serde_json::Value = serde_json::from_str(&renyi_profile_json(0.5, 2, 3, 20_000, 1, false).unwrap()).unwrap();
        let pts = v.as_array().unwrap();
        assert_eq!(pts.len(), 4);
        // β = 0 is maximally mixed: S_α = ln 2.
        assert!((pts[0]["exact"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!((pts[2]["exact"].as_f64().unwrap() - 0.499596).abs() < 1e-5);
        assert!(renyi_profile_json(0.5, 1, 3, 10, 1, false).is_err());
    }

    #[test]
    fn interval_contains_truth() {
        for seed in 0..20 {
            let v: serde_json::Value = serde_json::from_str(&eigen_interval_json(16, 1e-3, 4, seed).unwrap()).unwrap();
            assert_eq!(v["contains"], true);
        }
        assert!(eigen_interval_json(0, 1e-3, 4, 0).is_err());
    }

    #[test]
    fn cooling_profile_shape() {
        let v: serde_json::Value = serde_json::from_str(&cooling_profile_json(2, 0.5, 3, 5000, 3, 2).unwrap()).unwrap();
        let pts = v.as_array().unwrap();
        assert_eq!(pts.len(), 3);
        let e: Vec<f64> = pts.iter().map(|p| p["exact"].as_f64().unwrap()).collect();
        assert!(e[0] >= e[1] && e[1] >= e[2]);
        assert!(cooling_profile_json(9, 0.5, 3, 10, 1, 0).is_err());
    }
}
