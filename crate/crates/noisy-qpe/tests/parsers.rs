//! Config and workload parsers: shipped files, fuzz corpus replay, and
//! never-panic properties.

use std::fs;
use std::path::{Path, PathBuf};

use noisy_qpe::faultcost::parse_workload;
use noisy_qpe::faultcost::workload::{hubbard_workload, HUBBARD_TOFFOLI_DEFAULTS};
use noisy_qpe::harness::{parse_config, validate_config, ExperimentKind};
use proptest::prelude::*;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn files(dir: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(root().join(dir))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    v.sort();
    assert!(!v.is_empty(), "{dir} is empty");
    v
}

#[test]
fn shipped_configs_validate() {
    let mut kinds = Vec::new();
    for path in files("configs") {
        let c = validate_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(c.check().is_ok());
        kinds.push(c.experiment);
    }
    for k in [
        ExperimentKind::BenchmarkPair,
        ExperimentKind::EumleStudy,
        ExperimentKind::CrossoverMap,
        ExperimentKind::ResourceTradeoff,
        ExperimentKind::StandardFt,
    ] {
        assert!(kinds.contains(&k), "no shipped config for {k}");
    }
}

#[test]
fn shipped_workloads_match_builtin_hubbard_models() {
    for (l, toffoli) in HUBBARD_TOFFOLI_DEFAULTS {
        let path = root().join(format!("data/workloads/hubbard-L{l}.toml"));
        let w = parse_workload(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(w, hubbard_workload(l, None).unwrap(), "{}", path.display());
        assert_eq!(w.toffoli_per_step, toffoli);
    }
}

#[test]
fn config_corpus_replays_without_panic() {
    for path in files("fuzz/corpus/config") {
        let text = fs::read_to_string(&path).unwrap();
        if let Ok(c) = parse_config(&text, Some(Path::new("/nonexistent"))) {
            assert!(c.trials >= 1);
            assert!(c.check().is_ok(), "{}", path.display());
        }
    }
    for bad in ["invalid.toml", "syntax.toml"] {
        let text = fs::read_to_string(root().join("fuzz/corpus/config").join(bad)).unwrap();
        assert!(parse_config(&text, None).is_err(), "{bad} should be rejected");
    }
}

#[test]
fn workload_corpus_replays_without_panic() {
    for path in files("fuzz/corpus/workload") {
        let text = fs::read_to_string(&path).unwrap();
        match parse_workload(&text) {
            Ok(w) => assert!(w.eps() > 0.0 && w.eps() < 1.0),
            Err(_) => assert!(path.ends_with("invalid.toml"), "{} rejected", path.display()),
        }
    }
}

#[test]
fn syntax_errors_carry_a_location() {
    let e = parse_config("experiment = \"crossover-map\"\nseed = \n", None).unwrap_err();
    assert!(e.to_string().contains("2:"), "{e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parse_config_never_panics(text in "\\PC{0,200}") {
        let _ = parse_config(&text, Some(Path::new("/nonexistent")));
    }

    #[test]
    fn parse_config_handles_mutated_keys(
        trials in any::<i64>(),
        seed in any::<i64>(),
        gamma in any::<f64>(),
        key in "[a-z_]{1,12}",
    ) {
        let text = format!(
            "experiment = \"msqpe-curve\"\nseed = {seed}\ntrials = {trials}\ngammas = [{gamma:?}]\n{key} = 1\n"
        );
        if let Ok(c) = parse_config(&text, None) {
            prop_assert!(c.trials >= 1);
            prop_assert!(c.check().is_ok());
        }
    }

    #[test]
    fn parse_workload_never_panics(text in "\\PC{0,200}") {
        let _ = parse_workload(&text);
    }

    #[test]
    fn accepted_workloads_are_valid(
        q in any::<u64>(),
        t in any::<u64>(),
        lambda in any::<f64>(),
        de in any::<f64>(),
    ) {
        let text = format!(
            "name = \"w\"\nlogical_qubits = {}\ntoffoli_per_step = {}\nlambda = {lambda:?}\ndelta_E = {de:?}\n",
            q as i64, t as i64
        );
        if let Ok(w) = parse_workload(&text) {
            prop_assert!(w.validate().is_ok());
            prop_assert!(w.eps() > 0.0 && w.eps() < 1.0);
        }
    }
}
