use noisy_qpe::distributions::{circular_distance, sin_qpe_pmf, wrap_signed, Pmf, TAU};
use noisy_qpe::eumle::*;
use noisy_qpe::harness::rng::TrialRng;
use noisy_qpe::information::fisher_sinqpe_noiseless_exact;
use noisy_qpe::stats::Summary;

const K: usize = 64;
const T: u64 = 63;
const PHASE: f64 = 1.234;
const SAMPLES: u64 = 20_000;
const REPS: u64 = 150;

fn errors(d: &QuasiprobDecomposition, m: &RegularizedModel, window: Option<FilterWindow>, tag: &str) -> Summary {
    let errs: Vec<f64> = (0..REPS)
        .map(|r| {
            let mut rng = TrialRng::for_trial(7, tag, r);
            let run = match window {
                Some(w) => filtered_eumle_estimate(d, m, w, SAMPLES, &mut rng),
                None => eumle_estimate(d, m, SAMPLES, &mut rng),
            }
            .unwrap();
            wrap_signed(run.run.estimate - PHASE)
        })
        .collect();
    Summary::of(&errs).unwrap()
}

#[test]
fn pseudo_count_estimator_is_unbiased_and_matches_sandwich() {
    let gamma = -(0.7f64).ln() / T as f64;
    let d = synth_pauli_decomposition(gamma, T, K, PHASE).unwrap();
    let m = RegularizedModel::with_default_regularization(K, T).unwrap();
    let s = errors(&d, &m, None, "unbiased");
    assert!(s.mean.abs() < 3.5 * s.std_error(), "{s:?}");
    let v = eumle_variance(&d, &m, PHASE).unwrap();
    let measured = s.variance * SAMPLES as f64;
    assert!((measured / v.sandwich - 1.0).abs() < 0.3, "{measured} vs {}", v.sandwich);
    // printed expression overestimates at this regularization
    assert!(v.formula > 1.3 * v.sandwich);
}

#[test]
fn benign_noise_filtering_costs_one_norm() {
    let f = 0.7;
    let delta = 0.5;
    let p = sin_qpe_pmf(K, PHASE, 0.0).unwrap();
    let outside: Vec<bool> = (0..K)
        .map(|x| circular_distance(TAU * x as f64 / K as f64, PHASE) >= delta)
        .collect();
    let n_out = outside.iter().filter(|&&o| o).count() as f64;
    let noise: Vec<f64> = outside.iter().map(|&o| if o { 1.0 / n_out } else { 0.0 }).collect();
    let q0: Vec<f64> = p.iter().zip(&noise).map(|(p, n)| f * p + (1.0 - f) * n).collect();
    let d = QuasiprobDecomposition::new(
        vec![1.0 / f, -(1.0 - f) / f],
        vec![Pmf::new(q0).unwrap(), Pmf::new(noise).unwrap()],
        p,
        T,
    )
    .unwrap();
    let m = RegularizedModel::new(K, 0.0).unwrap();
    let w = FilterWindow::new(PHASE, delta).unwrap();
    let s = errors(&d, &m, Some(w), "benign");
    let fisher = fisher_sinqpe_noiseless_exact(K).unwrap();
    let overhead = s.variance * SAMPLES as f64 * fisher;
    assert!((overhead / d.one_norm() - 1.0).abs() < 0.3, "{overhead}");
}

#[test]
fn edge_window_stays_below_halved_fidelity_bound() {
    let f: f64 = 0.7;
    let gamma = -f.ln() / T as f64;
    let d = synth_pauli_decomposition(gamma, T, K, PHASE).unwrap();
    let m = RegularizedModel::with_default_regularization(K, T).unwrap();
    let w = FilterWindow::new(PHASE + 0.49, 0.5).unwrap();
    let s = errors(&d, &m, Some(w), "edge");
    let fisher = fisher_sinqpe_noiseless_exact(K).unwrap();
    let overhead = s.variance * SAMPLES as f64 * fisher;
    assert!(overhead <= 5.0 / (f / 2.0).powi(4), "{overhead}");
}
