//! Crossover oracle agreement and trade-off curve properties.

use noisy_qpe::faultcost::layout::{pareto_front, tradeoff_curve, ResourcePoint};
use noisy_qpe::faultcost::{
    crossover_cell, crossover_max_depth, crossover_max_depth_bruteforce, hubbard_workload, optimize_layout,
    Ccz2tFactory, CrossoverMode, PhysicalAssumptions,
};
use proptest::prelude::*;

const MODES: [CrossoverMode; 3] = [CrossoverMode::QemOnly, CrossoverMode::QecOnly, CrossoverMode::QecQem];

fn dominates(a: &ResourcePoint, b: &ResourcePoint) -> bool {
    a.physical_qubits <= b.physical_qubits
        && a.wall_clock <= b.wall_clock
        && (a.physical_qubits < b.physical_qubits || a.wall_clock < b.wall_clock)
}

#[test]
fn pareto_front_of_hubbard_curve() {
    let w = hubbard_workload(5, None).unwrap();
    let gammas: Vec<f64> = (0..16).map(|i| 10f64.powf(-8.0 + 5.5 * i as f64 / 15.0)).collect();
    let a = PhysicalAssumptions::default();
    let f = Ccz2tFactory::default();
    let pts = tradeoff_curve(&w, &gammas, &a, &f, 1).unwrap();
    assert!(pts.len() >= 8, "only {} feasible points", pts.len());
    let front = pareto_front(&pts);
    for p in &front {
        assert!(!pts.iter().any(|q| dominates(q, p)));
    }
    for p in &pts {
        assert!(front.iter().any(|q| q == p || dominates(q, p)));
    }
    for w in front.windows(2) {
        assert!(w[0].physical_qubits < w[1].physical_qubits);
        assert!(w[0].wall_clock > w[1].wall_clock);
    }
    // a second factory never slows the same γ down
    let two = tradeoff_curve(&hubbard_workload(5, None).unwrap(), &gammas, &a, &f, 2).unwrap();
    for p in &two {
        if let Some(q) = pts.iter().find(|q| q.gamma == p.gamma) {
            assert!(p.wall_clock <= q.wall_clock * (1.0 + 1e-12));
        }
    }
}

#[test]
fn layouts_meet_their_failure_budget() {
    let w = hubbard_workload(2, None).unwrap();
    let a = PhysicalAssumptions::default();
    for g in [1e-7, 1e-5, 1e-3] {
        let p = optimize_layout(&w, g, &a, &Ccz2tFactory::default(), 1).unwrap();
        assert!(p.failure_per_circuit <= p.failure_budget, "{p:?}");
        assert!(p.physical_qubits > 0.0 && p.wall_clock > 0.0);
        assert!(p.total_steps >= p.depth);
    }
}

#[test]
fn combined_mode_dominates_both_single_modes() {
    for i in 0..8 {
        for j in 0..8 {
            let p = 10f64.powf(-4.0 + 1.9 * i as f64 / 7.0);
            let n = 10f64.powf(2.0 + 6.0 * j as f64 / 7.0);
            let c = crossover_cell(p, n).unwrap();
            assert!(c.combined >= c.qem_only.max(c.qec_only), "{c:?}");
            assert!(c.gain() >= 1.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn crossover_matches_bruteforce(lp in -4.0f64..-2.1, ln in 2.0f64..8.0, m in 0usize..3) {
        let (p, n) = (10f64.powf(lp), 10f64.powf(ln));
        prop_assert_eq!(
            crossover_max_depth(p, n, MODES[m]).unwrap(),
            crossover_max_depth_bruteforce(p, n, MODES[m]).unwrap()
        );
    }

    #[test]
    fn depth_monotone_in_noise_and_qubit_budget(lp in -4.0f64..-2.2, ln in 2.0f64..7.5, m in 0usize..3) {
        let (p, n) = (10f64.powf(lp), 10f64.powf(ln));
        let base = crossover_max_depth(p, n, MODES[m]).unwrap();
        prop_assert!(crossover_max_depth(p * 1.25, n, MODES[m]).unwrap() <= base);
        // more qubits only add parallel copies
        prop_assert!(crossover_max_depth(p, n * 3.0, MODES[m]).unwrap() >= base);
    }
}
