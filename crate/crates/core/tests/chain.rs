use std::sync::Arc;

use proptest::prelude::*;
use qmoments::moments::{build_moment_chain_circuit, build_multicopy_circuit, estimate_moments, MomentPlan};
use qmoments::sim::{evolve, permutation_trace_check, run_shots, shot_rng, signed_expectation, terminal_signed_expectation, with_threads};
use qmoments::stats::SignSums;
use qmoments::{Circuit, Instruction, MixedState};

fn random_state(qubits: usize, seed: u64) -> MixedState {
    let mut rng = shot_rng(seed, 0);
    let rank = 1 + (seed as usize % (1 << qubits));
    MixedState::random(qubits, rank, &mut rng).unwrap()
}

fn chain_oracle_holds(rho: MixedState, k: usize, with_reference: bool) {
    let rho = Arc::new(rho);
    let (mut c, layout) = build_moment_chain_circuit(rho.qubits(), k).unwrap();
    c.bind(layout.state, rho.clone()).unwrap();
    let (mut multi, id) = build_multicopy_circuit(rho.qubits(), k).unwrap();
    multi.bind(id, rho.clone()).unwrap();
    for l in 1..k {
        let slots: Vec<usize> = (1..=l).map(|j| layout.x_slot(j)).collect();
        let chain = signed_expectation(&c, &slots).unwrap();
        let exact = rho.moment(l as u32 + 1);
        assert!((chain - exact).abs() <= 1e-9, "l={l}: {chain} vs {exact}");
        if with_reference {
            // The ancilla-per-round circuit without resets, evaluated on
            // explicit product states.
            let reference = terminal_signed_expectation(&multi, &(0..l).collect::<Vec<_>>()).unwrap();
            assert!((chain - reference).abs() <= 1e-9);
        }
    }
}

#[test]
fn chain_is_unbiased_on_random_states() {
    for s in 0..20 {
        chain_oracle_holds(random_state(1, s), 2 + s as usize % 4, true);
    }
    for s in 0..5 {
        chain_oracle_holds(random_state(2, 100 + s), 2 + s as usize % 4, true);
    }
    chain_oracle_holds(random_state(1, 77), 5, true);
    chain_oracle_holds(random_state(2, 78), 5, true);
}

#[test]
fn reference_evaluators_agree() {
    let rho = Arc::new(random_state(1, 5));
    let (mut multi, id) = build_multicopy_circuit(1, 4).unwrap();
    multi.bind(id, rho.clone()).unwrap();
    for l in 1..4 {
        let slots: Vec<usize> = (0..l).collect();
        let a = signed_expectation(&multi, &slots).unwrap();
        let b = terminal_signed_expectation(&multi, &slots).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn cyclic_shift_agrees_with_spectrum() {
    let rho = random_state(2, 3);
    for k in 2..=4 {
        let t = permutation_trace_check(&rho, k).unwrap();
        assert!((t - rho.moment(k as u32)).abs() < 1e-12);
    }
}

#[test]
fn reset_is_trace_and_replace() {
    let mut c = Circuit::new(2);
    c.push(Instruction::Hadamard { qubit: 0 }).unwrap();
    c.push(Instruction::ControlledNot { control: 0, target: 1 }).unwrap();
    c.push(Instruction::ResetToZero { qubits: vec![1] }).unwrap();
    let out = evolve(&c, &[]).unwrap();
    // Qubit 0 ends maximally mixed and qubit 1 in |0⟩.
    let mut nonzero = 0;
    for r in 0..4 {
        for col in 0..4 {
            let v = out[(r, col)];
            if v.norm() > 1e-12 {
                nonzero += 1;
                assert!(r == col && (v.re - 0.5).abs() < 1e-12, "({r},{col}) = {v}");
            }
        }
    }
    assert_eq!(nonzero, 2);
}

#[test]
fn sampled_products_agree_with_oracle() {
    let rho = Arc::new(random_state(1, 11));
    let k = 4;
    let (mut c, layout) = build_moment_chain_circuit(1, k).unwrap();
    c.bind(layout.state, rho.clone()).unwrap();
    let shots = 40_000;
    let sums = run_shots(
        &c,
        5,
        shots,
        || SignSums::new(k - 1),
        |acc, rec| {
            acc.shots += 1;
            for l in 1..k {
                acc.sums[l - 1] += rec.product(0..l) as i64;
            }
        },
        SignSums::merge,
    )
    .unwrap();
    for (l, (m, e)) in sums.means().iter().zip(sums.stderrs()).enumerate() {
        let exact = signed_expectation(&c, &(0..=l).collect::<Vec<_>>()).unwrap();
        assert!((m - exact).abs() < 5.0 * e.max(1e-3), "l={l}: {m} vs {exact}");
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let rho = random_state(2, 4);
    let plan = MomentPlan::new(4, 0.05, 5000, 21).unwrap();
    let one = with_threads(Some(1), || estimate_moments(&rho, &plan)).unwrap().unwrap();
    let four = with_threads(Some(4), || estimate_moments(&rho, &plan)).unwrap().unwrap();
    assert_eq!(one, four);
}

#[test]
fn gibbs_z_sampling_is_consistent() {
    let p = 1.0 / (1.0 + (-1.0f64).exp());
    let rho = MixedState::diagonal(&[1.0 - p, p]).unwrap();
    let est = estimate_moments(&rho, &MomentPlan::new(4, 0.01, 100_000, 7).unwrap()).unwrap();
    for ((m, e), x) in est.estimates.iter().zip(&est.stderr).zip(&est.exact) {
        assert!((m - x).abs() < 5.0 * e);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chain_unbiased_for_arbitrary_spectra(a in 0.0f64..1.0, b in 0.0f64..1.0, k in 2usize..6) {
        let total = 1.0 + a + b;
        let rho = MixedState::diagonal(&[1.0 / total, a / total, b / total, 0.0]).unwrap();
        chain_oracle_holds(rho, k, false);
    }
}
