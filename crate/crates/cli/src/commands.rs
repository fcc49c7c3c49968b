use std::path::{Path, PathBuf};

use qmoments::apps::qvc::baseline_shots;
use qmoments::apps::{
    error_scaling_study, gibbs_state, heisenberg_hamiltonian, interval_study, renyi_experiment, virtual_cooling_estimate, HeisenbergSpec,
    LogBase, QvcResult, QvcScheme,
};
use qmoments::moments::{estimate_moments, required_shots, MomentPlan};
use qmoments::observables::{estimate_weighted_moments_with, Backend, WeightedScheme};
use qmoments::presets::parse_state_preset;
use qmoments::qsf::{estimate_functional, estimate_multiple_functionals, MultiStrategy, PolynomialFunctional};
use qmoments::PauliObservable;
use serde::Serialize;

use crate::args::{BackendArg, Command, LogBaseArg, Scheme, Strategy};
use crate::report::{write_csv, write_json};
use crate::CliError;

fn functional(text: &str) -> Result<PolynomialFunctional, CliError> {
    Ok(PolynomialFunctional::parse_list(text)?)
}

fn observable(text: &str) -> Result<PauliObservable, CliError> {
    if let Some(args) = text.strip_prefix("heisenberg:") {
        let v: Vec<f64> = args
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::config(format!("bad number '{s}' in observable"))))
            .collect::<Result<_, _>>()?;
        if v.is_empty() || v.len() > 3 || v[0] < 0.0 || v[0].fract() != 0.0 {
            return Err(CliError::config("observable heisenberg:n[,J,h] needs an integer n"));
        }
        let spec = HeisenbergSpec::new(v[0] as usize, v.get(1).copied().unwrap_or(1.0), v.get(2).copied().unwrap_or(1.0))?;
        return Ok(heisenberg_hamiltonian(&spec)?);
    }
    let body = std::fs::read_to_string(text).map_err(|e| CliError::config(format!("observable file {text}: {e}")))?;
    Ok(PauliObservable::parse(&body)?)
}

fn backend(b: BackendArg) -> Backend {
    match b {
        BackendArg::Auto => Backend::Auto,
        BackendArg::Statevector => Backend::Statevector,
        BackendArg::Table => Backend::OutcomeTable,
    }
}

fn moments_shots(k: usize, eps: f64, shots: Option<u64>) -> Result<u64, CliError> {
    match shots {
        Some(s) => Ok(s),
        None => Ok(required_shots(k, eps)?),
    }
}

fn degree(list: &str) -> Result<u64, CliError> {
    Ok(functional(list)?.degree() as u64)
}

/// Prepared copies of the input state a run consumes.
pub fn copies(cmd: &Command) -> Result<u64, CliError> {
    let total = match cmd {
        Command::Moments(a) => moments_shots(a.k, a.eps, a.shots)?.saturating_mul(a.k as u64),
        Command::Qsf(a) => a.shots.saturating_mul(degree(&a.coeffs)?),
        Command::Multi(a) => {
            let mut k = 0;
            for c in &a.coeffs {
                k = k.max(degree(c)?);
            }
            a.shots.saturating_mul(k)
        }
        Command::Weighted(a) => a.shots.saturating_mul(a.k as u64),
        Command::EigInterval(_) => 0,
        Command::Qvc(a) => {
            let ks: Vec<usize> = (1..=a.k).collect();
            let per_run = a.shots.saturating_mul(a.k.max(2) as u64);
            let base: u64 = if a.baseline {
                ks.iter().map(|&k| baseline_shots(a.shots, &ks, k) * k as u64).sum()
            } else {
                0
            };
            (a.runs as u64).saturating_mul(per_run.saturating_add(base))
        }
        Command::Scaling(a) => {
            let kk = a.k.iter().copied().max().unwrap_or(1).max(2) as u64;
            let per_n: u64 = a.shots.iter().fold(0u64, |acc, s| acc.saturating_add(s.saturating_mul(kk)));
            per_n.saturating_mul(a.runs as u64).saturating_mul(a.n.len() as u64)
        }
        Command::Renyi(a) => a.shots.saturating_mul(a.alpha.iter().copied().max().unwrap_or(0) as u64),
    };
    Ok(total)
}

#[derive(Serialize)]
struct MomentRow {
    order: usize,
    estimate: f64,
    stderr: f64,
    exact: f64,
}

#[derive(Serialize)]
struct FunctionalRow {
    index: usize,
    coeffs: String,
    estimate: f64,
    stderr: f64,
    exact: f64,
    shots: u64,
}

#[derive(Serialize)]
struct WeightedRow {
    order: usize,
    estimate: f64,
    stderr: f64,
    exact: f64,
    moment_estimate: f64,
    moment_exact: f64,
}

#[derive(Serialize)]
struct QvcCsvRow {
    n: usize,
    k: usize,
    #[serde(rename = "mean_E")]
    mean_e: f64,
    #[serde(rename = "sigma_E")]
    sigma_e: f64,
    mad: f64,
    #[serde(rename = "exact_E")]
    exact_e: f64,
    shots: u64,
    runs: usize,
    invalid_runs: usize,
}

fn qvc_rows(n: usize, res: &QvcResult) -> Vec<QvcCsvRow> {
    res.rows
        .iter()
        .map(|r| QvcCsvRow {
            n,
            k: r.k,
            mean_e: r.mean_energy,
            sigma_e: r.sigma_energy,
            mad: r.mad,
            exact_e: r.exact_energy,
            shots: r.shots,
            runs: r.runs,
            invalid_runs: r.invalid_runs,
        })
        .collect()
}

fn coeff_text(f: &PolynomialFunctional) -> String {
    f.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn execute(cmd: &Command, seed: u64, copies: u64, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    match cmd {
        Command::Moments(a) => {
            let rho = parse_state_preset(&a.state)?;
            let plan = MomentPlan::new(a.k, a.eps, moments_shots(a.k, a.eps, a.shots)?, seed)?;
            let est = estimate_moments(&rho, &plan)?;
            let rows: Vec<MomentRow> = (0..est.estimates.len())
                .map(|i| MomentRow {
                    order: i + 2,
                    estimate: est.estimates[i],
                    stderr: est.stderr[i],
                    exact: est.exact[i],
                })
                .collect();
            written.push(write_csv(out, "moments.csv", &rows)?);
            written.push(write_json(out, "moments.json", cmd, seed, copies, &est)?);
        }
        Command::Qsf(a) => {
            let rho = parse_state_preset(&a.state)?;
            let f = functional(&a.coeffs)?;
            let e = estimate_functional(&rho, &f, a.shots, seed)?;
            let rows = [FunctionalRow {
                index: 0,
                coeffs: coeff_text(&f),
                estimate: e.estimate,
                stderr: e.stderr,
                exact: f.exact(&rho),
                shots: e.shots,
            }];
            written.push(write_csv(out, "qsf.csv", &rows)?);
            written.push(write_json(out, "qsf.json", cmd, seed, copies, &rows)?);
        }
        Command::Multi(a) => {
            let rho = parse_state_preset(&a.state)?;
            let fs = a.coeffs.iter().map(|c| functional(c)).collect::<Result<Vec<_>, _>>()?;
            let strategy = match a.strategy {
                Strategy::MomentReuse => MultiStrategy::MomentReuse,
                Strategy::ParallelCircuit => MultiStrategy::ParallelCircuit,
            };
            let est = estimate_multiple_functionals(&rho, &fs, a.shots, strategy, seed)?;
            let rows: Vec<FunctionalRow> = fs
                .iter()
                .zip(&est)
                .enumerate()
                .map(|(i, (f, e))| FunctionalRow {
                    index: i,
                    coeffs: coeff_text(f),
                    estimate: e.estimate,
                    stderr: e.stderr,
                    exact: f.exact(&rho),
                    shots: e.shots,
                })
                .collect();
            written.push(write_csv(out, "multi.csv", &rows)?);
            written.push(write_json(out, "multi.json", cmd, seed, copies, &rows)?);
        }
        Command::Weighted(a) => {
            let rho = parse_state_preset(&a.state)?;
            let obs = observable(&a.observable)?;
            let scheme = match a.scheme {
                Scheme::Lcu => WeightedScheme::Lcu,
                Scheme::Pauli => WeightedScheme::Pauli,
            };
            let est = estimate_weighted_moments_with(&rho, &obs, a.k, a.shots, scheme, seed, backend(a.backend))?;
            let rows: Vec<WeightedRow> = (0..a.k)
                .map(|j| WeightedRow {
                    order: j + 1,
                    estimate: est.estimates[j],
                    stderr: est.stderr[j],
                    exact: est.exact[j],
                    moment_estimate: if j == 0 { 1.0 } else { est.moments[j - 1] },
                    moment_exact: rho.moment(j as u32 + 1),
                })
                .collect();
            written.push(write_csv(out, "weighted.csv", &rows)?);
            written.push(write_json(out, "weighted.json", cmd, seed, copies, &est)?);
        }
        Command::EigInterval(a) => {
            let rows = interval_study(&a.ranks, &a.eps, a.trials, a.k, seed)?;
            written.push(write_csv(out, "interval_study.csv", &rows)?);
            written.push(write_json(out, "interval_study.json", cmd, seed, copies, &rows)?);
        }
        Command::Qvc(a) => {
            let h = heisenberg_hamiltonian(&HeisenbergSpec::new(a.n, a.j, a.h)?)?;
            let rho = gibbs_state(&h, a.beta)?;
            let ks: Vec<usize> = (1..=a.k).collect();
            let chain = virtual_cooling_estimate(&rho, &h, &ks, a.shots, a.runs, seed, QvcScheme::Chain, backend(a.backend))?;
            written.push(write_csv(out, "qvc.csv", &qvc_rows(a.n, &chain))?);
            let base = if a.baseline {
                let b = virtual_cooling_estimate(
                    &rho,
                    &h,
                    &ks,
                    a.shots,
                    a.runs,
                    qmoments::sim::derive(seed, 1),
                    QvcScheme::SwapBaseline,
                    backend(a.backend),
                )?;
                written.push(write_csv(out, "qvc_baseline.csv", &qvc_rows(a.n, &b))?);
                Some(b)
            } else {
                None
            };
            written.push(write_json(out, "qvc.json", cmd, seed, copies, (&chain, &base))?);
        }
        Command::Scaling(a) => {
            let mut rows = Vec::new();
            for (i, &n) in a.n.iter().enumerate() {
                let h = heisenberg_hamiltonian(&HeisenbergSpec::new(n, 1.0, 1.0)?)?;
                let rho = gibbs_state(&h, a.beta)?;
                rows.extend(error_scaling_study(n, &rho, &h, &a.k, &a.shots, a.runs, qmoments::sim::derive(seed, i as u64))?);
            }
            written.push(write_csv(out, "scaling.csv", &rows)?);
            written.push(write_json(out, "scaling.json", cmd, seed, copies, &rows)?);
        }
        Command::Renyi(a) => {
            let base = match a.log_base {
                LogBaseArg::Natural => LogBase::Natural,
                LogBaseArg::Two => LogBase::Two,
            };
            let rows = renyi_experiment(a.beta, &a.alpha, a.shots, seed, base)?;
            written.push(write_csv(out, "renyi.csv", &rows)?);
            written.push(write_json(out, "renyi.json", cmd, seed, copies, &rows)?);
        }
    }
    Ok(written)
}
