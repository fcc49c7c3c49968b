//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use qmoments::apps::heisenberg::ground_energy;
use qmoments::apps::{
    error_scaling_study, exact_cooled_energy, gibbs_state, gibbs_z_circuit, heisenberg_hamiltonian, interval_study, renyi_entropy,
    renyi_experiment, virtual_cooling_estimate, HeisenbergSpec, LogBase, QvcScheme,
};
use qmoments::moments::{build_moment_chain_circuit, build_multicopy_circuit, estimate_moments, required_shots, MomentPlan};
use qmoments::observables::{
    build_lcu_chain_circuit, build_pauli_chain_circuit, estimate_weighted_moments, exact_weighted_moments, lcu_unitary, norm_report,
    weighted_slot, Backend, WeightedScheme,
};
use qmoments::qsf::{build_givens_ladder, build_qsf_circuit, gray_code, rescale, PolynomialFunctional};
use qmoments::sim::{gate_matrix, shot_rng, signed_expectation, terminal_signed_expectation, weighted_signed_expectation};
use qmoments::{linalg, CMatrix, Instruction, MixedState, Pauli, PauliObservable, PauliString, PureState, C64};
use rand::Rng;

type Outcome = (bool, String);

fn gibbs_z_state() -> MixedState {
    let p = 1.0 / (1.0 + (-1.0f64).exp());
    MixedState::diagonal(&[1.0 - p, p]).unwrap()
}

fn random_state(qubits: usize, seed: u64) -> MixedState {
    let mut rng = shot_rng(seed, 0);
    let rank = rng.random_range(1..=1usize << qubits);
    MixedState::random(qubits, rank, &mut rng).unwrap()
}

fn random_observable(qubits: usize, seed: u64) -> PauliObservable {
    let mut rng = shot_rng(seed, 3);
    let all = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let mut terms: Vec<(f64, PauliString)> = Vec::new();
    for _ in 0..rng.random_range(1..=6) {
        let p = PauliString::new((0..qubits).map(|_| all[rng.random_range(0..4)]).collect());
        if terms.iter().all(|(_, q)| *q != p) {
            terms.push((rng.random_range(-2.0..2.0), p));
        }
    }
    PauliObservable::new(qubits, terms).unwrap()
}

fn heisenberg(n: usize) -> PauliObservable {
    heisenberg_hamiltonian(&HeisenbergSpec::new(n, 1.0, 1.0).unwrap()).unwrap()
}

fn c1_chain_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_ref: f64 = 0.0;
    let cases: Vec<(usize, u64)> = (0..20).map(|s| (1, s)).chain((0..5).map(|s| (2, 100 + s))).collect();
    for (m, s) in cases {
        let rho = Arc::new(random_state(m, s));
        for k in 2..=5 {
            let (mut c, layout) = build_moment_chain_circuit(m, k).unwrap();
            c.bind(layout.state, rho.clone()).unwrap();
            let (mut multi, id) = build_multicopy_circuit(m, k).unwrap();
            multi.bind(id, rho.clone()).unwrap();
            for l in 1..k {
                let slots: Vec<usize> = (1..=l).map(|j| layout.x_slot(j)).collect();
                let e = signed_expectation(&c, &slots).unwrap();
                worst = worst.max((e - rho.moment(l as u32 + 1)).abs());
                let r = terminal_signed_expectation(&multi, &(0..l).collect::<Vec<_>>()).unwrap();
                worst_ref = worst_ref.max((e - r).abs());
            }
        }
    }
    (
        worst <= 1e-9 && worst_ref <= 1e-9,
        format!("max |oracle - Tr ρ^(l+1)| = {worst:.2e}, max |chain - multicopy| = {worst_ref:.2e}"),
    )
}

fn c2_sampling() -> Outcome {
    let est = estimate_moments(&gibbs_z_state(), &MomentPlan::new(4, 0.01, 100_000, 2).unwrap()).unwrap();
    let targets = [0.606776, 0.410166, 0.290865];
    let z: Vec<f64> = est.estimates.iter().zip(&est.stderr).zip(targets).map(|((m, e), t)| (m - t) / e).collect();
    let published = (est.estimates[1] - 0.41016) / est.stderr[1];
    (
        z.iter().all(|v| v.abs() < 5.0) && published.abs() < 5.0,
        format!("estimates {:?}, z-scores {:?}, Tr ρ³ vs 0.41016 z = {published:.2}", est.estimates, z),
    )
}

fn c3_shot_formula() -> Outcome {
    let n = required_shots(4, 0.1).unwrap();
    (n == 636, format!("required_shots(4, 0.1) = {n}"))
}

fn c4_qsf() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut counts_ok = true;
    for s in 0..20u64 {
        let mut rng = shot_rng(s, 7);
        let k = rng.random_range(2..=5);
        let mut coeffs: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        coeffs[0] = coeffs[0].abs();
        coeffs[1] = -coeffs[1].abs();
        let f = PolynomialFunctional::new(coeffs).unwrap();
        let m = 1 + s as usize % 2;
        let rho = Arc::new(random_state(m, 500 + s));
        let (mut c, layout) = build_qsf_circuit(&f, m).unwrap();
        c.bind(layout.state, rho.clone()).unwrap();
        let e = signed_expectation(&c, &[0]).unwrap();
        worst = worst.max((rescale(&f, e) - f.exact(&rho)).abs());
        let swaps = c.count(|i| matches!(i, Instruction::ControlledSwap { .. }));
        let czs = c.count(|i| matches!(i, Instruction::ControlledZ { .. }));
        counts_ok &= swaps == k - 1 && czs <= k / 2;
    }
    let mut ladder: f64 = 0.0;
    for k in 2..=8 {
        let f = PolynomialFunctional::new((1..=k).map(|i| (i as f64 * 1.3).cos()).collect()).unwrap();
        let amps = build_givens_ladder(&f).unwrap().amplitudes();
        for (i, lam) in f.weights().iter().enumerate() {
            ladder = ladder.max((amps[gray_code(i)].norm_sqr() - lam).abs());
        }
    }
    (
        worst <= 1e-9 && ladder <= 1e-12 && counts_ok,
        format!("max functional error {worst:.2e}, max ladder error {ladder:.2e}, gate counts ok = {counts_ok}"),
    )
}

fn c5_observables() -> Outcome {
    let mut lcu_err: f64 = 0.0;
    for s in 0..20 {
        let obs = random_observable(1 + s as usize % 3, s);
        if obs.spectral_norm().unwrap() == 0.0 {
            continue;
        }
        lcu_err = lcu_err.max(linalg::max_abs_diff(&lcu_unitary(&obs).unwrap().reconstruct(), obs.dense().unwrap()));
    }
    let mut oracle_err: f64 = 0.0;
    for s in 0..10 {
        let rho = Arc::new(random_state(1, 300 + s));
        let obs = random_observable(1, 400 + s);
        let k = 2 + s as usize % 3;
        let exact = exact_weighted_moments(&rho, &obs, k).unwrap();
        let (mut c, layout) = build_pauli_chain_circuit(&obs, k).unwrap();
        c.bind(layout.state, rho.clone()).unwrap();
        let lcu = lcu_unitary(&obs).unwrap();
        let (mut d, dl) = build_lcu_chain_circuit(&lcu, k).unwrap();
        d.bind(dl.state, rho.clone()).unwrap();
        for j in 0..k {
            let mut slots: Vec<usize> = (1..=j).map(|i| layout.x_slot(i)).collect();
            slots.push(weighted_slot(k, j));
            oracle_err = oracle_err.max((weighted_signed_expectation(&c, &slots).unwrap() - exact[j]).abs());
            oracle_err = oracle_err.max((lcu.norm * signed_expectation(&d, &slots).unwrap() - exact[j]).abs());
        }
    }
    let obs = PauliObservable::parse("0.9 X\n-0.5 Z\n0.3 Y").unwrap();
    let shots = 50_000;
    let est = estimate_weighted_moments(&gibbs_z_state(), &obs, 3, shots, WeightedScheme::Pauli, 5).unwrap();
    let s2 = obs.l1_norm().powi(2);
    let var_ratio = est.stderr.iter().map(|e| e * e * shots as f64 / s2).fold(0.0, f64::max);
    let mut chain_ok = true;
    let mut all: Vec<PauliObservable> = (0..50).map(|s| random_observable(1 + s as usize % 4, 1000 + s)).collect();
    all.extend((2..=4).map(heisenberg));
    for o in &all {
        let r = norm_report(o).unwrap();
        chain_ok &= r.spectral <= r.l1 + 1e-10 && r.l1 <= r.sqrt_terms_times_spectral + 1e-10;
    }
    (
        lcu_err <= 1e-10 && oracle_err <= 1e-9 && var_ratio <= 1.1 && chain_ok,
        format!("LCU error {lcu_err:.2e}, oracle error {oracle_err:.2e}, max variance / S² = {var_ratio:.3}, norm chain ok = {chain_ok}"),
    )
}

fn c6_intervals() -> Outcome {
    let eps = [1e-6, 1e-5, 1e-4, 1e-3];
    let rows = interval_study(&[2, 4, 8, 16, 32], &eps, 1000, 4, 11).unwrap();
    let contained = rows.iter().all(|r| r.containment == 1.0);
    let sd_max = rows.iter().map(|r| r.sd_width).fold(0.0, f64::max);
    let w32 = rows.iter().find(|r| r.rank == 32 && r.eps == 1e-3).unwrap().mean_width;
    // Rows for one rank come in ascending ε; the width must not grow as ε shrinks.
    let monotone = rows.chunks(eps.len()).all(|c| c.windows(2).all(|w| w[0].mean_width <= w[1].mean_width));
    (
        contained && (0.04..=0.13).contains(&w32) && sd_max <= 0.05 && monotone,
        format!("containment 100% = {contained}, width(32, 1e-3) = {w32:.4}, max sd = {sd_max:.4}, monotone = {monotone}"),
    )
}

fn c7_qvc_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 3..=5 {
        let h = heisenberg(n);
        let rho = gibbs_state(&h, 0.5).unwrap();
        for k in 1..=4 {
            let direct = gibbs_state(&h, 0.5 * k as f64).unwrap().weighted_moment(h.dense().unwrap(), 1);
            worst = worst.max((exact_cooled_energy(&rho, &h, k).unwrap() - direct).abs());
        }
    }
    let g = ground_energy(&heisenberg(4)).unwrap();
    let h5 = heisenberg(5);
    let e5 = exact_cooled_energy(&gibbs_state(&h5, 0.5).unwrap(), &h5, 2).unwrap();
    (
        worst <= 1e-9 && (g + 6.464).abs() <= 0.005 && (e5 + 8.062).abs() <= 0.01,
        format!("identity error {worst:.2e}, ground(4) = {g:.4}, cooled(5, k=2) = {e5:.4}"),
    )
}

fn c8_qvc_sampling() -> Outcome {
    let h = heisenberg(4);
    let rho = gibbs_state(&h, 0.5).unwrap();
    let res = virtual_cooling_estimate(&rho, &h, &[1, 2, 3, 4], 100_000, 10, 3, QvcScheme::Chain, Backend::OutcomeTable).unwrap();
    let published = [(-4.854, 0.011), (-6.001, 0.043), (-6.282, 0.098), (-6.310, 0.259)];
    let near_exact = res.rows.iter().all(|r| (r.mean_energy - r.exact_energy).abs() <= 3.0 * r.sigma_energy);
    let increasing = res.rows.windows(2).all(|w| w[0].sigma_energy < w[1].sigma_energy);
    let near_published = res
        .rows
        .iter()
        .zip(published)
        .all(|(r, (m, s))| (r.mean_energy - m).abs() <= 3.0 * (r.sigma_energy.powi(2) + s * s).sqrt());
    let means: Vec<String> = res.rows.iter().map(|r| format!("{:.3}±{:.3}", r.mean_energy, r.sigma_energy)).collect();
    (
        near_exact && increasing && near_published,
        format!("means {means:?}, within 3σ of exact = {near_exact}, σ increasing = {increasing}, matches published table = {near_published}"),
    )
}

fn c9_scaling() -> Outcome {
    let mut slopes = Vec::new();
    for n in [3, 4] {
        let h = heisenberg(n);
        let rho = gibbs_state(&h, 0.5).unwrap();
        let rows = error_scaling_study(n, &rho, &h, &[1, 2, 3], &[1_000, 10_000, 100_000, 1_000_000], 50, 17 + n as u64).unwrap();
        for k in 1..=3 {
            slopes.push((n, k, rows.iter().find(|r| r.k == k).unwrap().slope));
        }
    }
    let ok = slopes.iter().all(|&(_, _, s)| (-0.65..=-0.35).contains(&s));
    let text: Vec<String> = slopes.iter().map(|(n, k, s)| format!("({n},{k}) {s:.3}")).collect();
    (ok, format!("slopes {}", text.join(", ")))
}

fn c10_baseline() -> Outcome {
    let mut ok = true;
    let mut text = Vec::new();
    for n in [4, 5, 6] {
        let h = heisenberg(n);
        let rho = gibbs_state(&h, 0.5).unwrap();
        let ks = [1, 2, 3, 4];
        let mut wins = 0;
        for rep in 0..10u64 {
            let seed = 1000 * n as u64 + rep;
            let chain = virtual_cooling_estimate(&rho, &h, &ks, 100_000, 10, seed, QvcScheme::Chain, Backend::OutcomeTable).unwrap();
            let base = virtual_cooling_estimate(&rho, &h, &ks, 100_000, 10, seed + 500, QvcScheme::SwapBaseline, Backend::OutcomeTable).unwrap();
            if chain.rows[3].sigma_energy < base.rows[3].sigma_energy {
                wins += 1;
            }
        }
        ok &= wins >= 8;
        text.push(format!("n={n}: {wins}/10"));
    }
    (ok, format!("chain σ_E below baseline at k=4: {}", text.join(", ")))
}

fn c11_renyi() -> Outcome {
    let rho = gibbs_z_state();
    let mut exact_err: f64 = 0.0;
    for (a, s) in [(2usize, 0.499596), (3, 0.445597), (4, 0.411632)] {
        exact_err = exact_err.max((renyi_entropy(rho.moment(a as u32), a, LogBase::Natural).unwrap() - s).abs());
    }
    let mut v = vec![C64::new(0.0, 0.0); 4];
    v[0] = C64::new(1.0, 0.0);
    for g in gibbs_z_circuit(0.5, 0, 1) {
        let m = gate_matrix(&g, 2).unwrap();
        v = (m * CMatrix::from_column_slice(4, 1, &v)).as_slice().to_vec();
    }
    let reduced = PureState::new(v).unwrap().reduced(&[0]);
    let red_err = linalg::max_abs_diff(&reduced, gibbs_state(&PauliObservable::parse("1 Z").unwrap(), 0.5).unwrap().matrix());
    let rows = renyi_experiment(0.5, &[2, 3, 4], 1_000_000, 1, LogBase::Natural).unwrap();
    let m3 = rows[1].moment_estimate;
    (
        exact_err <= 1e-4 && red_err <= 1e-12 && (m3 - 0.41016).abs() <= 0.005,
        format!("entropy error {exact_err:.2e}, reduced-state error {red_err:.2e}, simulated Tr ρ³ = {m3:.5}"),
    )
}

fn c12_replay() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_qmoments");
    let runs: &[(&str, &[&str])] = &[
        ("moments.csv", &["moments", "--state", "gibbs-z:0.5", "--k", "4", "--shots", "20000"]),
        ("qsf.csv", &["qsf", "--state", "max-mixed:1", "--coeffs", "0.5,-0.3,0.2", "--shots", "5000"]),
        ("multi.csv", &["multi", "--state", "gibbs-z:0.5", "--coeffs", "0,1", "--coeffs", "1,-1,0.5", "--shots", "5000", "--strategy", "parallel-circuit"]),
        ("weighted.csv", &["weighted", "--state", "heisenberg-gibbs:2,0.5", "--observable", "heisenberg:2", "--k", "3", "--shots", "5000", "--scheme", "lcu"]),
        ("interval_study.csv", &["eig-interval", "--trials", "200"]),
        ("qvc_baseline.csv", &["qvc", "--n", "3", "--shots", "5000", "--runs", "4", "--baseline"]),
        ("scaling.csv", &["scaling", "--n", "3", "--k", "1,2", "--shots", "1000,10000", "--runs", "5"]),
        ("renyi.csv", &["renyi", "--shots", "20000"]),
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut bad = Vec::new();
    for (file, args) in runs {
        let mut outputs = Vec::new();
        for threads in ["1", "3"] {
            let out = dir.path().join(format!("{}-{threads}", args[0]));
            let status = Command::new(bin)
                .args(*args)
                .args(["--seed", "42", "--threads", threads, "--out"])
                .arg(&out)
                .output()
                .unwrap();
            if !status.status.success() {
                bad.push(format!("{} failed: {}", args[0], String::from_utf8_lossy(&status.stderr).trim()));
                break;
            }
            outputs.push(std::fs::read(out.join(file)).unwrap());
        }
        if outputs.len() == 2 && outputs[0] != outputs[1] {
            bad.push(format!("{} differs across thread counts", args[0]));
        }
    }
    (bad.is_empty(), if bad.is_empty() { format!("{} subcommands byte-identical", runs.len()) } else { bad.join("; ") })
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 12] = [
        (1, c1_chain_oracle),
        (2, c2_sampling),
        (3, c3_shot_formula),
        (4, c4_qsf),
        (5, c5_observables),
        (6, c6_intervals),
        (7, c7_qvc_identity),
        (8, c8_qvc_sampling),
        (9, c9_scaling),
        (10, c10_baseline),
        (11, c11_renyi),
        (12, c12_replay),
    ];
    let mut failed = 0;
    for (n, check) in criteria {
        let start = Instant::now();
        let (ok, detail) = check();
        let secs = start.elapsed().as_secs_f64();
        println!("{} criterion {n}: {detail} ({secs:.1}s)", if ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
