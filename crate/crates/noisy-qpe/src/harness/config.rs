//! Sweep configuration files.
//!
//! A config is flat TOML plus two optional tables:
//!
//! ```toml
//! experiment = "benchmark-pair"   # or msqpe-curve, rpe-curve, eumle-study,
//!                                 # crossover-map, resource-tradeoff, standard-ft
//! seed = 7                        # required
//! trials = 1000
//! gammas = [3.0517578125e-5]
//! epsilons = [0.125, 0.0625]
//! lattice_sizes = [5]
//! workloads = ["molecules/n2.toml"]   # relative to the config file
//! fidelities = [0.5, 0.7, 0.9]
//! samples = 100000
//! control_dim = 64
//! p_phys = [1e-3]
//! n_phys = [1e6]
//! deltas = [0.01]
//! n_factories = [1]
//! output = "out.csv"
//! format = "csv"
//!
//! [assumptions]   # PhysicalAssumptions fields
//! [factory]       # Ccz2tFactory fields
//! ```
//!
//! Grids left out take per-experiment defaults. Validation reports every
//! violation at once.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::Error;
use crate::faultcost::workload::{line_col, toml_message};
use crate::faultcost::{parse_workload, Ccz2tFactory, PhysicalAssumptions};

pub const DEFAULT_TRIALS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    BenchmarkPair,
    MsqpeCurve,
    RpeCurve,
    EumleStudy,
    CrossoverMap,
    ResourceTradeoff,
    StandardFt,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::BenchmarkPair,
        ExperimentKind::MsqpeCurve,
        ExperimentKind::RpeCurve,
        ExperimentKind::EumleStudy,
        ExperimentKind::CrossoverMap,
        ExperimentKind::ResourceTradeoff,
        ExperimentKind::StandardFt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::BenchmarkPair => "benchmark-pair",
            ExperimentKind::MsqpeCurve => "msqpe-curve",
            ExperimentKind::RpeCurve => "rpe-curve",
            ExperimentKind::EumleStudy => "eumle-study",
            ExperimentKind::CrossoverMap => "crossover-map",
            ExperimentKind::ResourceTradeoff => "resource-tradeoff",
            ExperimentKind::StandardFt => "standard-ft",
        }
    }

    /// Grid keys this experiment reads.
    fn grids(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::BenchmarkPair | ExperimentKind::MsqpeCurve | ExperimentKind::RpeCurve => {
                &["gammas", "epsilons"]
            }
            ExperimentKind::EumleStudy => &["fidelities"],
            ExperimentKind::CrossoverMap => &["p_phys", "n_phys"],
            ExperimentKind::ResourceTradeoff => &["gammas", "lattice_sizes", "workloads", "n_factories"],
            ExperimentKind::StandardFt => &["deltas", "lattice_sizes", "workloads", "n_factories"],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                format!("unknown experiment kind {s:?} (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(format!("unknown format {s:?} (expected csv or json)")),
        }
    }
}

/// Fully defaulted sweep description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub trials: u64,
    pub gammas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub lattice_sizes: Vec<u32>,
    pub workloads: Vec<PathBuf>,
    pub fidelities: Vec<f64>,
    pub samples: u64,
    pub control_dim: usize,
    pub p_phys: Vec<f64>,
    pub n_phys: Vec<f64>,
    pub deltas: Vec<f64>,
    pub n_factories: Vec<u32>,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub assumptions: PhysicalAssumptions,
    pub factory: Ccz2tFactory,
    /// Normalization notes, emitted as warning rows.
    pub warnings: Vec<String>,
}

/// Every violation found in a config.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("\n"))
    }
}

impl std::error::Error for ConfigErrors {}

impl From<ConfigErrors> for Error {
    fn from(e: ConfigErrors) -> Self {
        Error::Config(e.to_string())
    }
}

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64))
        .collect()
}

/// `2^{-j}` for `j` in `lo..=hi`.
pub fn dyadic_targets(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|j| 2f64.powi(-j)).collect()
}

impl SweepConfig {
    /// Defaults for `experiment` with the given seed.
    pub fn defaults(experiment: ExperimentKind, seed: u64) -> SweepConfig {
        let mut c = SweepConfig {
            experiment,
            seed,
            trials: DEFAULT_TRIALS,
            gammas: Vec::new(),
            epsilons: Vec::new(),
            lattice_sizes: Vec::new(),
            workloads: Vec::new(),
            fidelities: Vec::new(),
            samples: 100_000,
            control_dim: 64,
            p_phys: Vec::new(),
            n_phys: Vec::new(),
            deltas: Vec::new(),
            n_factories: Vec::new(),
            output: None,
            format: OutputFormat::Csv,
            assumptions: PhysicalAssumptions::default(),
            factory: Ccz2tFactory::default(),
            warnings: Vec::new(),
        };
        c.fill_grids(&[]);
        c
    }

    fn fill_grids(&mut self, given: &[&str]) {
        let missing = |k: &str| !given.contains(&k);
        match self.experiment {
            ExperimentKind::BenchmarkPair | ExperimentKind::MsqpeCurve | ExperimentKind::RpeCurve => {
                if missing("gammas") {
                    self.gammas = vec![2f64.powi(-15)];
                }
                if missing("epsilons") {
                    self.epsilons = dyadic_targets(2, 17);
                }
            }
            ExperimentKind::EumleStudy => {
                if missing("fidelities") {
                    self.fidelities = vec![0.5, 0.7, 0.9];
                }
            }
            ExperimentKind::CrossoverMap => {
                if missing("p_phys") {
                    self.p_phys = geometric(-4.0, -2.1, 12);
                }
                if missing("n_phys") {
                    self.n_phys = geometric(2.0, 8.0, 13);
                }
            }
            ExperimentKind::ResourceTradeoff | ExperimentKind::StandardFt => {
                if missing("lattice_sizes") {
                    self.lattice_sizes = if missing("workloads") { vec![5] } else { Vec::new() };
                }
                if missing("n_factories") {
                    self.n_factories = vec![1];
                }
                if self.experiment == ExperimentKind::ResourceTradeoff && missing("gammas") {
                    self.gammas = geometric(-8.0, -2.5, 16);
                }
                if self.experiment == ExperimentKind::StandardFt && missing("deltas") {
                    self.deltas = vec![0.01];
                }
            }
        }
    }

    /// Re-check after command-line overrides.
    pub fn check(&self) -> Result<(), ConfigErrors> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(issues))
        }
    }

    fn issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.trials < 1 {
            out.push("trials must be >= 1".to_string());
        }
        for key in self.experiment.grids() {
            let empty = match *key {
                "gammas" => self.gammas.is_empty(),
                "epsilons" => self.epsilons.is_empty(),
                "fidelities" => self.fidelities.is_empty(),
                "p_phys" => self.p_phys.is_empty(),
                "n_phys" => self.n_phys.is_empty(),
                "deltas" => self.deltas.is_empty(),
                "n_factories" => self.n_factories.is_empty(),
                "lattice_sizes" => {
                    if self.lattice_sizes.is_empty() && self.workloads.is_empty() {
                        out.push("lattice_sizes or workloads must not be empty".to_string());
                    }
                    false
                }
                _ => false,
            };
            if empty {
                out.push(format!("{key} must not be empty"));
            }
        }
        let curve = matches!(
            self.experiment,
            ExperimentKind::BenchmarkPair | ExperimentKind::MsqpeCurve | ExperimentKind::RpeCurve
        );
        for &g in &self.gammas {
            if !(g.is_finite() && (0.0..1.0).contains(&g)) {
                out.push(format!("gamma {g} must lie in [0, 1)"));
            } else if g == 0.0 && !curve {
                out.push("gamma 0 is only meaningful for estimator curves".to_string());
            }
        }
        for &e in &self.epsilons {
            if !(e > 0.0 && e < 1.0) {
                out.push(format!("epsilon {e} must lie in (0, 1)"));
            }
        }
        for &l in &self.lattice_sizes {
            if l < 2 {
                out.push(format!("lattice size {l} must be >= 2"));
            }
        }
        for &f in &self.fidelities {
            if !(f >= 0.05 && f <= 1.0) {
                out.push(format!("fidelity {f} must lie in [0.05, 1]"));
            }
        }
        if self.experiment == ExperimentKind::EumleStudy {
            if self.samples < 1 {
                out.push("samples must be >= 1".to_string());
            }
            if self.control_dim < 2 {
                out.push("control_dim must be >= 2".to_string());
            }
        }
        for &p in &self.p_phys {
            if !(p > 0.0 && p < 0.01) {
                out.push(format!("p_phys {p} must lie in (0, 0.01)"));
            }
        }
        for &n in &self.n_phys {
            if !(n.is_finite() && n >= 100.0) {
                out.push(format!("n_phys {n} must be at least 100"));
            }
        }
        for &d in &self.deltas {
            if !(d > 0.0 && d < 0.5) {
                out.push(format!("delta {d} must lie in (0, 0.5)"));
            }
        }
        for &n in &self.n_factories {
            if n < 1 {
                out.push("n_factories entries must be >= 1".to_string());
            }
        }
        if let Err(e) = self.assumptions.validate() {
            out.push(format!("assumptions: {e}"));
        }
        for w in &self.workloads {
            match std::fs::read_to_string(w) {
                Ok(text) => {
                    if let Err(e) = parse_workload(&text) {
                        out.push(format!("workload {}: {e}", w.display()));
                    }
                }
                Err(e) => out.push(format!("workload {}: {e}", w.display())),
            }
        }
        out
    }
}

/// 1-based `line:col` of `key = …` at the top level, for messages.
fn key_location(text: &str, key: &str) -> String {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix(key) {
            if rest.trim_start().starts_with('=') {
                let (l, c) = line_col(text, offset + line.len() - trimmed.len());
                return format!("{l}:{c}: ");
            }
        }
        offset += line.len();
    }
    String::new()
}

struct Reader<'a> {
    text: &'a str,
    table: Table,
    errors: Vec<String>,
    given: Vec<&'static str>,
}

impl Reader<'_> {
    fn take(&mut self, key: &'static str) -> Option<Value> {
        let v = self.table.remove(key)?;
        self.given.push(key);
        Some(v)
    }

    fn fail(&mut self, key: &str, msg: String) {
        let at = key_location(self.text, key);
        self.errors.push(format!("{at}{key}: {msg}"));
    }

    fn uint(&mut self, key: &'static str) -> Option<u64> {
        match self.take(key)? {
            Value::Integer(i) if i >= 0 => Some(i as u64),
            other => {
                self.fail(key, format!("expected a non-negative integer, got {other}"));
                None
            }
        }
    }

    fn text_value(&mut self, key: &'static str) -> Option<String> {
        match self.take(key)? {
            Value::String(s) => Some(s),
            other => {
                self.fail(key, format!("expected a string, got {other}"));
                None
            }
        }
    }

    fn list<T>(&mut self, key: &'static str, what: &str, conv: impl Fn(&Value) -> Option<T>) -> Option<Vec<T>> {
        let v = self.take(key)?;
        let Value::Array(items) = v else {
            self.fail(key, format!("expected an array of {what}, got {v}"));
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        for item in &items {
            match conv(item) {
                Some(x) => out.push(x),
                None => {
                    self.fail(key, format!("expected {what}, got {item}"));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn floats(&mut self, key: &'static str) -> Option<Vec<f64>> {
        self.list(key, "numbers", |v| match v {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            _ => None,
        })
    }

    fn small_uints(&mut self, key: &'static str) -> Option<Vec<u32>> {
        self.list(key, "non-negative integers", |v| match v {
            Value::Integer(i) => u32::try_from(*i).ok(),
            _ => None,
        })
    }

    fn section<T: for<'de> Deserialize<'de> + Default>(&mut self, key: &'static str) -> T {
        match self.take(key) {
            None => T::default(),
            Some(Value::Table(t)) => match t.try_into::<T>() {
                Ok(v) => v,
                Err(e) => {
                    self.fail(key, e.message().to_string());
                    T::default()
                }
            },
            Some(other) => {
                self.fail(key, format!("expected a table, got {other}"));
                T::default()
            }
        }
    }
}

/// Parse and normalize config text. Relative workload and output paths are
/// resolved against `base`.
pub fn parse_config(text: &str, base: Option<&Path>) -> Result<SweepConfig, ConfigErrors> {
    let table: Table = toml::from_str(text).map_err(|e| ConfigErrors(vec![toml_message(text, &e)]))?;
    let mut r = Reader {
        text,
        table,
        errors: Vec::new(),
        given: Vec::new(),
    };
    let experiment = match r.text_value("experiment") {
        Some(s) => match s.parse::<ExperimentKind>() {
            Ok(k) => Some(k),
            Err(e) => {
                r.fail("experiment", e);
                None
            }
        },
        None => {
            if !r.given.contains(&"experiment") {
                r.errors.push("experiment required".to_string());
            }
            None
        }
    };
    let seed = r.uint("seed");
    if seed.is_none() && !r.given.contains(&"seed") {
        r.errors.push("seed required".to_string());
    }
    let trials = r.uint("trials");
    let gammas = r.floats("gammas");
    let epsilons = r.floats("epsilons");
    let lattice_sizes = r.small_uints("lattice_sizes");
    let workloads = r.list("workloads", "paths", |v| v.as_str().map(PathBuf::from));
    let fidelities = r.floats("fidelities");
    let samples = r.uint("samples");
    let control_dim = r.uint("control_dim");
    let p_phys = r.floats("p_phys");
    let n_phys = r.floats("n_phys");
    let deltas = r.floats("deltas");
    let n_factories = r.small_uints("n_factories");
    let output = r.text_value("output").map(PathBuf::from);
    let format = match r.text_value("format") {
        Some(s) => match s.parse::<OutputFormat>() {
            Ok(f) => Some(f),
            Err(e) => {
                r.fail("format", e);
                None
            }
        },
        None => None,
    };
    let assumptions: PhysicalAssumptions = r.section("assumptions");
    let factory: Ccz2tFactory = r.section("factory");
    let unknown: Vec<String> = r.table.keys().cloned().collect();
    for k in unknown {
        r.fail(&k, "unknown key".to_string());
    }
    let (Some(experiment), Some(seed)) = (experiment, seed) else {
        return Err(ConfigErrors(r.errors));
    };
    let resolve = |p: PathBuf| match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    };
    let mut c = SweepConfig::defaults(experiment, seed);
    let given = r.given.clone();
    c.fill_grids(&given);
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = $field {
                c.$field = v;
            }
        };
    }
    set!(trials);
    set!(gammas);
    set!(epsilons);
    set!(lattice_sizes);
    set!(fidelities);
    set!(samples);
    set!(p_phys);
    set!(n_phys);
    set!(deltas);
    set!(n_factories);
    set!(format);
    if let Some(w) = workloads {
        c.workloads = w.into_iter().map(resolve).collect();
    }
    if let Some(k) = control_dim {
        c.control_dim = k as usize;
    }
    c.output = output.map(resolve);
    c.assumptions = assumptions;
    c.factory = factory;
    for key in &given {
        let used = matches!(
            *key,
            "experiment" | "seed" | "trials" | "output" | "format" | "assumptions" | "factory"
        ) || c.experiment.grids().contains(key)
            || (c.experiment == ExperimentKind::EumleStudy && matches!(*key, "samples" | "control_dim"));
        if !used {
            c.warnings.push(format!("{key} is not used by {}", c.experiment));
        }
    }
    if c.experiment == ExperimentKind::MsqpeCurve && c.gammas.contains(&0.0) {
        c.warnings
            .push("gamma = 0 runs the noiseless single-circuit branch".to_string());
    }
    let mut errors = r.errors;
    errors.extend(c.issues());
    if errors.is_empty() {
        Ok(c)
    } else {
        Err(ConfigErrors(errors))
    }
}

/// Read, parse and normalize a config file.
pub fn validate_config(path: &Path) -> Result<SweepConfig, ConfigErrors> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigErrors(vec![format!("cannot read {}: {e}", path.display())]))?;
    parse_config(&text, path.parent())
}
