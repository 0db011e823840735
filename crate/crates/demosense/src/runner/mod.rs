//! Experiment orchestration: expand a config into run coordinates, execute
//! them against a backend, and persist one JSONL record per run.
//!
//! A coordinate is `(dataset, method, condition, alpha?, seed)`; its record
//! is fully determined by the config, so sweeps are resumable (coordinates
//! already in the records file are skipped) and thread-count invariant.
//! Records are appended write-then-sync, one JSON object per line.

pub mod report;
pub mod synthetic;

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{
    load_dataset, majority_class_rate, sample_balanced, sample_examples, Dataset,
};
use crate::demos::{
    apply_prior_free, corrupt_alpha, corrupt_random, corrupt_shuffle, DemoSet, RenamingScheme,
};
use crate::error::{Error, Result};
use crate::modelio::{Backend, EndpointConfig, HttpBackend, SyntheticTopicModel};
use crate::prompting::{PromptTemplate, TemplateTier};
use crate::scoring::{
    apply_calibration, compute_cbu_calibration, predict_label, score_channel, score_direct,
    Method, CONTENT_FREE_INPUTS,
};
use crate::stats::{mean, sample_std};

/// Demonstration condition for one run. Alpha-bearing conditions (gold
/// fraction, balanced sampling, prior-free renaming) expand over the
/// config's alpha grid; the others produce a single run per seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// Uniform sampling, alpha percent gold labels.
    AlphaCorrect,
    /// Class-balanced sampling, alpha percent gold labels.
    Balanced,
    /// i.i.d. uniform labels.
    RandomLabel,
    /// Seeded permutation of the gold labels.
    ShuffledLabel,
    /// Zero-shot.
    NoDemo,
    /// Uniform sampling, alpha percent gold labels, renamed label surfaces.
    PriorFree(RenamingScheme),
}

impl Condition {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "alpha_correct" => Some(Condition::AlphaCorrect),
            "balanced" => Some(Condition::Balanced),
            "random_label" => Some(Condition::RandomLabel),
            "shuffled_label" => Some(Condition::ShuffledLabel),
            "no_demo" => Some(Condition::NoDemo),
            _ => {
                let scheme = s.strip_prefix("prior_free:")?;
                RenamingScheme::parse(scheme).map(Condition::PriorFree)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Condition::AlphaCorrect => "alpha_correct".into(),
            Condition::Balanced => "balanced".into(),
            Condition::RandomLabel => "random_label".into(),
            Condition::ShuffledLabel => "shuffled_label".into(),
            Condition::NoDemo => "no_demo".into(),
            Condition::PriorFree(scheme) => format!("prior_free:{}", scheme.as_str()),
        }
    }

    /// Whether runs of this condition expand over the alpha grid.
    pub fn uses_alpha_grid(&self) -> bool {
        matches!(
            self,
            Condition::AlphaCorrect | Condition::Balanced | Condition::PriorFree(_)
        )
    }
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for Condition {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for Condition {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Condition::parse(&s).ok_or_else(|| {
            serde::de::Error::custom(format!(
                "unknown condition {s:?} (expected alpha_correct, balanced, random_label, \
                 shuffled_label, no_demo, or prior_free:<identity|alphabet|numeric|random_token>)"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendChoice {
    /// In-process synthetic model; datasets must declare `[mock]` topics.
    Mock,
    /// Wire-protocol endpoint.
    Endpoint {
        #[serde(flatten)]
        endpoint: EndpointConfig,
    },
}

impl Default for BackendChoice {
    fn default() -> Self {
        BackendChoice::Mock
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Dataset sidecar configs, resolved relative to this file.
    pub datasets: Vec<PathBuf>,
    #[serde(default)]
    pub backend: BackendChoice,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_conditions")]
    pub conditions: Vec<Condition>,
    #[serde(default = "default_alpha_grid")]
    pub alpha_grid: Vec<u8>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_tier")]
    pub template_tier: TemplateTier,
    #[serde(default)]
    pub calibrate: bool,
    /// Max eval examples per run. Unset: the full split on the mock
    /// backend, 200 on an endpoint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_cap: Option<usize>,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Token file (one per line) for `prior_free:random_token`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_pool: Option<PathBuf>,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Direct]
}

fn default_conditions() -> Vec<Condition> {
    vec![
        Condition::AlphaCorrect,
        Condition::RandomLabel,
        Condition::ShuffledLabel,
        Condition::NoDemo,
    ]
}

fn default_alpha_grid() -> Vec<u8> {
    vec![0, 25, 50, 75, 100]
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

fn default_k() -> usize {
    16
}

fn default_tier() -> TemplateTier {
    TemplateTier::Minimal
}

fn default_concurrency() -> usize {
    4
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

impl ExperimentConfig {
    /// Parses a TOML experiment config and re-anchors its relative paths on
    /// the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: ExperimentConfig =
            toml::from_str(&raw).map_err(|e| Error::config(path, e.to_string()))?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        for ds in &mut config.datasets {
            *ds = dir.join(&*ds);
        }
        if let Some(pool) = &mut config.token_pool {
            *pool = dir.join(&*pool);
        }
        config.out_dir = dir.join(&config.out_dir);
        config.validate().map_err(|m| Error::config(path, m))?;
        Ok(config)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        fn dup<T: PartialEq + std::fmt::Debug>(items: &[T]) -> Option<String> {
            for (i, item) in items.iter().enumerate() {
                if items[..i].contains(item) {
                    return Some(format!("{item:?}"));
                }
            }
            None
        }
        if self.datasets.is_empty() {
            return Err("datasets is empty".into());
        }
        if self.methods.is_empty() {
            return Err("methods is empty".into());
        }
        if self.conditions.is_empty() {
            return Err("conditions is empty".into());
        }
        if self.seeds.is_empty() {
            return Err("seeds is empty".into());
        }
        if self.k == 0 {
            return Err("k must be at least 1 (use the no_demo condition for zero-shot)".into());
        }
        if self.concurrency == 0 {
            return Err("concurrency must be at least 1".into());
        }
        if let Some(d) = dup(&self.methods) {
            return Err(format!("duplicate method {d}"));
        }
        if let Some(d) = dup(&self.seeds) {
            return Err(format!("duplicate seed {d}"));
        }
        if let Some(d) = dup(&self.alpha_grid) {
            return Err(format!("duplicate alpha {d}"));
        }
        for (i, c) in self.conditions.iter().enumerate() {
            if self.conditions[..i].contains(c) {
                return Err(format!("duplicate condition {}", c.label()));
            }
        }
        if let Some(a) = self.alpha_grid.iter().find(|&&a| a > 100) {
            return Err(format!("alpha {a} is outside 0..=100"));
        }
        if self.conditions.iter().any(Condition::uses_alpha_grid) && self.alpha_grid.is_empty() {
            return Err("alpha_grid is empty but an alpha-bearing condition is configured".into());
        }
        let needs_pool = self
            .conditions
            .iter()
            .any(|c| matches!(c, Condition::PriorFree(RenamingScheme::RandomToken)));
        if needs_pool && self.token_pool.is_none() {
            return Err("prior_free:random_token needs token_pool".into());
        }
        Ok(())
    }
}

/// One cell of the sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Coordinate {
    pub dataset: String,
    pub method: Method,
    pub condition: Condition,
    pub alpha: Option<u8>,
    pub seed: u64,
    pub run_id: String,
}

/// Result of a single run; one JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub dataset: String,
    pub method: Method,
    pub template_tier: TemplateTier,
    pub calibrate: bool,
    pub condition: Condition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<u8>,
    pub k: usize,
    pub seed: u64,
    pub n_eval: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub n_classes: usize,
    /// Majority-class rate of the evaluated slice; baseline for relative
    /// performance.
    pub majority_class_rate: f64,
    pub wall_time_secs: f64,
}

/// Supplies the scoring backend for each run. The label tokens are the
/// surfaces the rendered prompts will carry, which the synthetic backend
/// needs as its vocabulary (renamed labels differ per seed).
pub trait BackendProvider: Send + Sync {
    fn backend_for(&self, dataset: &Dataset, label_tokens: &[String]) -> Result<Arc<dyn Backend>>;
}

pub struct MockProvider;

impl BackendProvider for MockProvider {
    fn backend_for(&self, dataset: &Dataset, label_tokens: &[String]) -> Result<Arc<dyn Backend>> {
        Ok(Arc::new(SyntheticTopicModel::for_dataset(
            dataset,
            label_tokens.to_vec(),
        )?))
    }
}

/// One shared HTTP client regardless of dataset.
pub struct EndpointProvider {
    backend: Arc<HttpBackend>,
}

impl EndpointProvider {
    pub fn new(config: &EndpointConfig) -> Result<Self> {
        Ok(EndpointProvider {
            backend: Arc::new(HttpBackend::new(config)?),
        })
    }
}

impl BackendProvider for EndpointProvider {
    fn backend_for(&self, _dataset: &Dataset, _label_tokens: &[String]) -> Result<Arc<dyn Backend>> {
        Ok(self.backend.clone())
    }
}

pub struct Runner {
    config: ExperimentConfig,
    datasets: Vec<(Dataset, PromptTemplate)>,
    provider: Arc<dyn BackendProvider>,
    token_pool: Option<Vec<String>>,
    eval_cap: Option<usize>,
}

/// What a sweep did: freshly computed records, skipped (already persisted)
/// coordinates, and per-coordinate failures.
#[derive(Debug)]
pub struct SweepOutcome {
    pub new_records: Vec<RunRecord>,
    pub skipped: usize,
    pub failures: Vec<(String, String)>,
    pub records_path: PathBuf,
}

impl SweepOutcome {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }
}

const ENDPOINT_DEFAULT_EVAL_CAP: usize = 200;

impl Runner {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let provider: Arc<dyn BackendProvider> = match &config.backend {
            BackendChoice::Mock => Arc::new(MockProvider),
            BackendChoice::Endpoint { endpoint } => Arc::new(EndpointProvider::new(endpoint)?),
        };
        Self::with_provider(config, provider)
    }

    /// Uses a caller-supplied backend factory; `config.backend` then only
    /// determines the default eval cap.
    pub fn with_provider(
        config: ExperimentConfig,
        provider: Arc<dyn BackendProvider>,
    ) -> Result<Self> {
        config
            .validate()
            .map_err(|m| Error::config("experiment config", m))?;
        let mut datasets = Vec::new();
        for path in &config.datasets {
            let dataset = load_dataset(path)?;
            if datasets.iter().any(|(d, _): &(Dataset, _)| d.name == dataset.name) {
                return Err(Error::config(
                    path,
                    format!("duplicate dataset name {:?}", dataset.name),
                ));
            }
            let template = PromptTemplate::for_dataset(&dataset, config.template_tier)?;
            if matches!(config.backend, BackendChoice::Mock) {
                if dataset.mock_topics.is_none() {
                    return Err(Error::config(
                        path,
                        "the mock backend needs a [mock] topics lexicon in the dataset config",
                    ));
                }
                if !template.label_prefix.is_empty() {
                    return Err(Error::config(
                        path,
                        format!(
                            "the mock backend cannot segment {} templates with a label \
                             prefix; use a prefix-free template",
                            config.template_tier
                        ),
                    ));
                }
            }
            datasets.push((dataset, template));
        }
        let token_pool = match &config.token_pool {
            Some(path) => {
                let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let tokens: Vec<String> = raw
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(String::from)
                    .collect();
                Some(tokens)
            }
            None => None,
        };
        let eval_cap = config.eval_cap.or(match &config.backend {
            BackendChoice::Mock => None,
            BackendChoice::Endpoint { .. } => Some(ENDPOINT_DEFAULT_EVAL_CAP),
        });
        Ok(Runner {
            config,
            datasets,
            provider,
            token_pool,
            eval_cap,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn datasets(&self) -> impl Iterator<Item = &Dataset> {
        self.datasets.iter().map(|(d, _)| d)
    }

    fn run_id(&self, dataset: &str, method: Method, condition: Condition, alpha: Option<u8>, seed: u64) -> String {
        let alpha = match alpha {
            Some(a) => format!("a{a}"),
            None => "a-".into(),
        };
        let cal = if self.config.calibrate { "cal" } else { "raw" };
        format!(
            "{dataset}|{method}|{tier}|{cal}|{cond}|{alpha}|k{k}|s{seed}",
            tier = self.config.template_tier,
            cond = condition.label(),
            k = self.config.k,
        )
    }

    /// The full sweep grid in deterministic order: datasets x methods x
    /// conditions x alpha grid x seeds.
    pub fn coordinates(&self) -> Vec<Coordinate> {
        let mut out = Vec::new();
        for (dataset, _) in &self.datasets {
            for &method in &self.config.methods {
                for &condition in &self.config.conditions {
                    let alphas: Vec<Option<u8>> = if condition.uses_alpha_grid() {
                        self.config.alpha_grid.iter().map(|&a| Some(a)).collect()
                    } else {
                        vec![None]
                    };
                    for alpha in alphas {
                        for &seed in &self.config.seeds {
                            out.push(Coordinate {
                                dataset: dataset.name.clone(),
                                method,
                                condition,
                                alpha,
                                seed,
                                run_id: self.run_id(&dataset.name, method, condition, alpha, seed),
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// Executes one coordinate. Pure up to wall time: the same coordinate
    /// and config always yield the same metrics.
    pub fn run_coordinate(&self, coord: &Coordinate) -> Result<RunRecord> {
        let started = Instant::now();
        let (dataset, template) = self
            .datasets
            .iter()
            .find(|(d, _)| d.name == coord.dataset)
            .ok_or_else(|| Error::config("experiment config", format!("unknown dataset {:?}", coord.dataset)))?;

        let (demos, renaming) = match coord.condition {
            Condition::NoDemo => (DemoSet::empty(), None),
            condition => {
                let sampled = if condition == Condition::Balanced {
                    sample_balanced(dataset, self.config.k, coord.seed)?
                } else {
                    sample_examples(dataset, self.config.k, coord.seed)?
                };
                let set = match condition {
                    Condition::AlphaCorrect | Condition::Balanced | Condition::PriorFree(_) => {
                        let alpha = coord.alpha.ok_or_else(|| {
                            Error::config("experiment config", "alpha-bearing condition without alpha")
                        })?;
                        corrupt_alpha(&sampled, &dataset.labels, alpha, coord.seed)?
                    }
                    Condition::RandomLabel => corrupt_random(&sampled, &dataset.labels, coord.seed),
                    Condition::ShuffledLabel => corrupt_shuffle(&sampled, coord.seed)?,
                    Condition::NoDemo => unreachable!(),
                };
                let renaming = match condition {
                    Condition::PriorFree(scheme) => Some(apply_prior_free(
                        &template.verbalizer,
                        scheme,
                        coord.seed,
                        self.token_pool.as_deref(),
                    )?),
                    _ => None,
                };
                (set, renaming)
            }
        };

        let label_tokens: Vec<String> = match &renaming {
            Some(r) => r.mapping().to_vec(),
            None => template.verbalizer.tokens().to_vec(),
        };
        let backend = self.provider.backend_for(dataset, &label_tokens)?;

        let calibration = if self.config.calibrate {
            Some(compute_cbu_calibration(
                backend.as_ref(),
                template,
                &demos,
                renaming.as_ref(),
                &CONTENT_FREE_INPUTS,
            )?)
        } else {
            None
        };

        let n_eval = self
            .eval_cap
            .map_or(dataset.eval.len(), |cap| cap.min(dataset.eval.len()));
        let eval_slice = &dataset.eval[..n_eval];
        let mut predictions = Vec::with_capacity(n_eval);
        let mut golds = Vec::with_capacity(n_eval);
        for test in eval_slice {
            let scores = match coord.method {
                Method::Direct => {
                    score_direct(backend.as_ref(), template, &demos, renaming.as_ref(), test)?
                }
                Method::Channel => {
                    score_channel(backend.as_ref(), template, &demos, renaming.as_ref(), test)?
                }
            };
            let scores = match &calibration {
                Some(c) => apply_calibration(&scores, c)?,
                None => scores,
            };
            predictions.push(predict_label(&scores));
            golds.push(test.gold);
        }

        Ok(RunRecord {
            run_id: coord.run_id.clone(),
            dataset: coord.dataset.clone(),
            method: coord.method,
            template_tier: self.config.template_tier,
            calibrate: self.config.calibrate,
            condition: coord.condition,
            alpha: coord.alpha,
            k: self.config.k,
            seed: coord.seed,
            n_eval,
            accuracy: crate::metrics::accuracy(&predictions, &golds)?,
            macro_f1: crate::metrics::macro_f1(&predictions, &golds, dataset.n_classes())?,
            n_classes: dataset.n_classes(),
            majority_class_rate: majority_class_rate(eval_slice, dataset.n_classes())?,
            wall_time_secs: started.elapsed().as_secs_f64(),
        })
    }

    /// Runs every coordinate not yet present in `records.jsonl` under
    /// `out_dir`, appending each finished record durably before moving on.
    /// Failures are collected, not fatal; rerunning a partial sweep picks
    /// up exactly the missing coordinates.
    pub fn sweep(&self, out_dir: &Path) -> Result<SweepOutcome> {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let records_path = out_dir.join("records.jsonl");
        let existing = if records_path.exists() {
            recover_records(&records_path)?
        } else {
            Vec::new()
        };
        let done: HashSet<&str> = existing.iter().map(|r| r.run_id.as_str()).collect();
        let all = self.coordinates();
        let pending: Vec<&Coordinate> =
            all.iter().filter(|c| !done.contains(c.run_id.as_str())).collect();
        let skipped = all.len() - pending.len();

        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&records_path)
            .map_err(|e| Error::io(&records_path, e))?;

        let mut new_records = Vec::with_capacity(pending.len());
        let mut failures = Vec::new();
        let next = AtomicUsize::new(0);
        let workers = self.config.concurrency.min(pending.len().max(1));
        let (tx, rx) = mpsc::channel::<(String, Result<RunRecord>)>();

        std::thread::scope(|scope| -> Result<()> {
            for _ in 0..workers {
                let tx = tx.clone();
                let pending = &pending;
                let next = &next;
                scope.spawn(move || loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(coord) = pending.get(i).copied() else { break };
                    let result = self.run_coordinate(coord);
                    if tx.send((coord.run_id.clone(), result)).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            for (run_id, result) in rx {
                match result {
                    Ok(record) => {
                        let line = serde_json::to_string(&record)
                            .map_err(|e| Error::Protocol(format!("record encode: {e}")))?;
                        writeln!(file, "{line}").map_err(|e| Error::io(&records_path, e))?;
                        file.flush().map_err(|e| Error::io(&records_path, e))?;
                        file.sync_data().map_err(|e| Error::io(&records_path, e))?;
                        new_records.push(record);
                    }
                    Err(e) => failures.push((run_id, e.to_string())),
                }
            }
            Ok(())
        })?;

        Ok(SweepOutcome {
            new_records,
            skipped,
            failures,
            records_path,
        })
    }
}

/// Reads a records file strictly: any malformed line is an error.
pub fn load_records(path: &Path) -> Result<Vec<RunRecord>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: RunRecord = serde_json::from_str(line).map_err(|e| Error::BadRecord {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Resume-time reader. A crash between write and sync can leave a torn
/// final line; that record was never durable, so it is truncated away here
/// (the rerun recomputes it) and the file is left ending on a clean line
/// boundary for appending. A malformed line that IS newline-terminated was
/// written whole and means real corruption: still an error.
fn recover_records(path: &Path) -> Result<Vec<RunRecord>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut offset = 0usize;
    let mut segments = raw.split_inclusive('\n').enumerate().peekable();
    while let Some((i, segment)) = segments.next() {
        let last = segments.peek().is_none();
        let terminated = segment.ends_with('\n');
        let line = segment.strip_suffix('\n').unwrap_or(segment);
        if !line.trim().is_empty() {
            match serde_json::from_str::<RunRecord>(line) {
                Ok(record) => {
                    if last && !terminated {
                        let mut f = fs::OpenOptions::new()
                            .append(true)
                            .open(path)
                            .map_err(|e| Error::io(path, e))?;
                        writeln!(f).map_err(|e| Error::io(path, e))?;
                    }
                    out.push(record);
                }
                Err(e) if last && !terminated => {
                    eprintln!(
                        "note: dropping torn final record in {}: {e}",
                        path.display()
                    );
                    let f = fs::OpenOptions::new()
                        .write(true)
                        .open(path)
                        .map_err(|e| Error::io(path, e))?;
                    f.set_len(offset as u64).map_err(|e| Error::io(path, e))?;
                }
                Err(e) => {
                    return Err(Error::BadRecord {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: e.to_string(),
                    })
                }
            }
        }
        offset += segment.len();
    }
    Ok(out)
}

/// Per-condition aggregate over seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub method: Method,
    pub template_tier: TemplateTier,
    pub calibrate: bool,
    pub condition: Condition,
    pub alpha: Option<u8>,
    pub k: usize,
    pub n_seeds: usize,
    pub accuracy_mean: f64,
    /// Sample standard deviation (n-1); 0 when only one seed ran.
    pub accuracy_std: f64,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
}

/// Groups records by everything except the seed and reduces each group to
/// mean and sample standard deviation, in deterministic key order.
pub fn aggregate(records: &[RunRecord]) -> Vec<SummaryRow> {
    use std::collections::BTreeMap;
    type Key = (String, Method, TemplateTier, bool, String, Option<u8>, usize);
    let mut groups: BTreeMap<Key, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((
                r.dataset.clone(),
                r.method,
                r.template_tier,
                r.calibrate,
                r.condition.label(),
                r.alpha,
                r.k,
            ))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((dataset, method, tier, calibrate, _, alpha, k), rows)| {
            let acc: Vec<f64> = rows.iter().map(|r| r.accuracy).collect();
            let f1: Vec<f64> = rows.iter().map(|r| r.macro_f1).collect();
            SummaryRow {
                dataset,
                method,
                template_tier: tier,
                calibrate,
                condition: rows[0].condition,
                alpha,
                k,
                n_seeds: rows.len(),
                accuracy_mean: mean(&acc),
                accuracy_std: sample_std(&acc),
                macro_f1_mean: mean(&f1),
                macro_f1_std: sample_std(&f1),
            }
        })
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes the aggregate table as CSV.
pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut out = String::from(
        "dataset,method,template_tier,calibrate,condition,alpha,k,n_seeds,\
         accuracy_mean,accuracy_std,macro_f1_mean,macro_f1_std\n",
    );
    for r in rows {
        let alpha = r.alpha.map_or(String::new(), |a| a.to_string());
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            csv_field(&r.dataset),
            r.method,
            r.template_tier,
            r.calibrate,
            csv_field(&r.condition.label()),
            alpha,
            r.k,
            r.n_seeds,
            r.accuracy_mean,
            r.accuracy_std,
            r.macro_f1_mean,
            r.macro_f1_std,
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
