//! Datasets: classification examples plus the label space and verbalizer
//! that turn label indices into prompt tokens.
//!
//! A dataset is a sidecar TOML config pointing at JSONL splits. Each row is
//! one JSON object; field names default to `text` / `text2` / `label` and
//! can be remapped in the config. Labels are stored as indices into the
//! config's `labels` list, whose order is the canonical class order
//! everywhere downstream (candidate order, tie-breaking, reports).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Ordered, distinct class names. Index is class identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSpace {
    names: Vec<String>,
}

impl LabelSpace {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::LabelSpace("no classes".into()));
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::LabelSpace(format!("class {i} has an empty name")));
            }
            if names[..i].contains(name) {
                return Err(Error::LabelSpace(format!("duplicate class name {name:?}")));
            }
        }
        Ok(LabelSpace { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Surface tokens for each class, aligned with a [`LabelSpace`]. Total and
/// injective: every class has exactly one token and no two classes share one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verbalizer {
    tokens: Vec<String>,
}

impl Verbalizer {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Verbalizer("no tokens".into()));
        }
        for (i, tok) in tokens.iter().enumerate() {
            if tok.is_empty() {
                return Err(Error::Verbalizer(format!("class {i} has an empty token")));
            }
            if tokens[..i].contains(tok) {
                return Err(Error::Verbalizer(format!("duplicate token {tok:?}")));
            }
        }
        Ok(Verbalizer { tokens })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub text: String,
    pub text2: Option<String>,
    /// Gold class, an index into the dataset's [`LabelSpace`].
    pub gold: usize,
}

/// Template bindings for one tier, from the dataset config. The minimal
/// tier is pinned in code and cannot be overridden here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSpec {
    /// Pattern with `{input}` and, for pair tasks, `{input2}` placeholders.
    pub input_pattern: String,
    /// Text before the label slot, e.g. `"Sentiment:"`. Empty means the
    /// label stands alone on its line.
    #[serde(default)]
    pub label_prefix: String,
    /// Tier-specific label tokens; defaults to the dataset verbalizer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verbalizer: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub name: String,
    /// Split paths, relative to the config file.
    pub train: PathBuf,
    pub eval: PathBuf,
    pub labels: Vec<String>,
    /// Defaults to `labels`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verbalizer: Option<Vec<String>>,
    #[serde(default = "default_text_field")]
    pub text_field: String,
    /// When set, every row must carry this second text field (pair task).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text2_field: Option<String>,
    #[serde(default = "default_label_field")]
    pub label_field: String,
    /// Keys are template tiers: `manual` or `verbose`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub templates: BTreeMap<String, TemplateSpec>,
    /// Topic lexicon for the built-in synthetic backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock: Option<MockSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MockSpec {
    pub topics: Vec<String>,
}

fn default_text_field() -> String {
    "text".into()
}

fn default_label_field() -> String {
    "label".into()
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub train: Vec<Example>,
    pub eval: Vec<Example>,
    pub labels: LabelSpace,
    pub verbalizer: Verbalizer,
    pub templates: BTreeMap<String, TemplateSpec>,
    pub mock_topics: Option<Vec<String>>,
    pub pair_task: bool,
}

impl Dataset {
    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }
}

/// Loads a dataset from its sidecar config. Split paths resolve relative to
/// the config file's directory.
pub fn load_dataset(config_path: &Path) -> Result<Dataset> {
    let raw = fs::read_to_string(config_path).map_err(|e| Error::io(config_path, e))?;
    let cfg: DatasetConfig =
        toml::from_str(&raw).map_err(|e| Error::config(config_path, e.to_string()))?;
    let dir = config_path.parent().unwrap_or_else(|| Path::new("."));
    build_dataset(cfg, dir).map_err(|e| match e {
        // Re-anchor validation errors on the config path for context.
        Error::LabelSpace(m) | Error::Verbalizer(m) => Error::config(config_path, m),
        other => other,
    })
}

/// Assembles a dataset from an already-parsed config; split paths resolve
/// against `dir`.
pub fn build_dataset(cfg: DatasetConfig, dir: &Path) -> Result<Dataset> {
    if cfg.name.is_empty() {
        return Err(Error::LabelSpace("dataset name is empty".into()));
    }
    if cfg.labels.len() < 2 {
        return Err(Error::LabelSpace(format!(
            "dataset {:?} needs at least 2 classes, got {}",
            cfg.name,
            cfg.labels.len()
        )));
    }
    let labels = LabelSpace::new(cfg.labels.clone())?;
    let verbalizer = Verbalizer::new(cfg.verbalizer.clone().unwrap_or_else(|| cfg.labels.clone()))?;
    if verbalizer.len() != labels.len() {
        return Err(Error::Verbalizer(format!(
            "{} tokens for {} classes",
            verbalizer.len(),
            labels.len()
        )));
    }
    if cfg.templates.contains_key("minimal") {
        return Err(Error::LabelSpace(
            "the minimal template tier is pinned and cannot be overridden".into(),
        ));
    }
    for (tier, spec) in &cfg.templates {
        if let Some(v) = &spec.verbalizer {
            let v = Verbalizer::new(v.clone())
                .map_err(|e| Error::Verbalizer(format!("{tier} template: {e}")))?;
            if v.len() != labels.len() {
                return Err(Error::Verbalizer(format!(
                    "{tier} template: {} tokens for {} classes",
                    v.len(),
                    labels.len()
                )));
            }
        }
    }

    let train = load_split(&dir.join(&cfg.train), &cfg, &labels)?;
    let eval = load_split(&dir.join(&cfg.eval), &cfg, &labels)?;
    for (split, rows) in [("train", &train), ("eval", &eval)] {
        if rows.is_empty() {
            return Err(Error::EmptySplit {
                dataset: cfg.name.clone(),
                split: split.into(),
            });
        }
    }

    Ok(Dataset {
        name: cfg.name,
        train,
        eval,
        labels,
        verbalizer,
        templates: cfg.templates,
        mock_topics: cfg.mock.map(|m| m.topics),
        pair_task: cfg.text2_field.is_some(),
    })
}

fn load_split(path: &Path, cfg: &DatasetConfig, labels: &LabelSpace) -> Result<Vec<Example>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let row_err = |line: usize, message: String| Error::DatasetRow {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut out = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| row_err(lineno, format!("invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| row_err(lineno, "row is not a JSON object".into()))?;
        let field = |name: &str| -> Result<String> {
            match obj.get(name) {
                Some(serde_json::Value::String(s)) => Ok(s.clone()),
                Some(_) => Err(row_err(lineno, format!("field {name:?} is not a string"))),
                None => Err(row_err(lineno, format!("missing field {name:?}"))),
            }
        };
        let text = field(&cfg.text_field)?;
        if text.trim().is_empty() {
            return Err(row_err(lineno, format!("field {:?} is empty", cfg.text_field)));
        }
        let text2 = match &cfg.text2_field {
            Some(name) => {
                let t = field(name)?;
                if t.trim().is_empty() {
                    return Err(row_err(lineno, format!("field {name:?} is empty")));
                }
                Some(t)
            }
            None => None,
        };
        let label = field(&cfg.label_field)?;
        let gold = labels
            .index_of(&label)
            .ok_or_else(|| row_err(lineno, format!("unknown label {label:?}")))?;
        out.push(Example { text, text2, gold });
    }
    Ok(out)
}

/// Draws `k` distinct training examples, uniformly without replacement.
/// Output order is the draw order. Fully determined by
/// `(seed, dataset name, k)`.
pub fn sample_examples(dataset: &Dataset, k: usize, seed: u64) -> Result<Vec<Example>> {
    if k > dataset.train.len() {
        return Err(Error::InsufficientExamples {
            requested: k,
            available: dataset.train.len(),
        });
    }
    let mut rng = StreamRng::keyed(seed, &["sample", &dataset.name]);
    Ok(rng
        .sample_indices(dataset.train.len(), k)
        .into_iter()
        .map(|i| dataset.train[i].clone())
        .collect())
}

/// Draws `k` training examples with per-class counts as equal as possible:
/// every class gets `k / |C|`, and `k % |C|` seeded-chosen classes get one
/// more. The combined draw is shuffled so class blocks do not cluster.
pub fn sample_balanced(dataset: &Dataset, k: usize, seed: u64) -> Result<Vec<Example>> {
    let c = dataset.n_classes();
    let base = k / c;
    let extra = k % c;

    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, ex) in dataset.train.iter().enumerate() {
        pools[ex.gold].push(i);
    }
    for (class, pool) in pools.iter().enumerate() {
        if pool.len() < base {
            return Err(Error::InsufficientClassExamples {
                class: dataset.labels.name(class).into(),
                available: pool.len(),
                needed: base,
            });
        }
    }

    let mut rng = StreamRng::keyed(seed, &["sample-balanced", &dataset.name]);
    let mut quota = vec![base; c];
    for class in rng.sample_indices(c, extra) {
        quota[class] += 1;
    }
    let mut picked = Vec::with_capacity(k);
    for class in 0..c {
        if pools[class].len() < quota[class] {
            return Err(Error::InsufficientClassExamples {
                class: dataset.labels.name(class).into(),
                available: pools[class].len(),
                needed: quota[class],
            });
        }
        for j in rng.sample_indices(pools[class].len(), quota[class]) {
            picked.push(pools[class][j]);
        }
    }
    rng.shuffle(&mut picked);
    Ok(picked.into_iter().map(|i| dataset.train[i].clone()).collect())
}

/// Fraction held by the most frequent gold class. The majority-class
/// baseline for relative performance.
pub fn majority_class_rate(examples: &[Example], n_classes: usize) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counts = vec![0usize; n_classes];
    for ex in examples {
        if ex.gold >= n_classes {
            return Err(Error::LabelIndexOutOfRange {
                index: ex.gold,
                classes: n_classes,
            });
        }
        counts[ex.gold] += 1;
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    Ok(max as f64 / examples.len() as f64)
}

#[cfg(test)]
pub(crate) fn toy_dataset(n_train: usize, n_classes: usize) -> Dataset {
    // Round-robin golds: train[i] has gold i % n_classes.
    let names: Vec<String> = (0..n_classes).map(|c| format!("class{c}")).collect();
    let mk = |i: usize| Example {
        text: format!("item {i}"),
        text2: None,
        gold: i % n_classes,
    };
    Dataset {
        name: "toy".into(),
        train: (0..n_train).map(mk).collect(),
        eval: (0..n_classes.max(2)).map(mk).collect(),
        labels: LabelSpace::new(names.clone()).unwrap(),
        verbalizer: Verbalizer::new(names).unwrap(),
        templates: BTreeMap::new(),
        mock_topics: None,
        pair_task: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &Path, name: &str, content: &str) -> PathBuf {
        let path = dir.join(name);
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    fn basic_config() -> &'static str {
        r#"
name = "moods"
train = "train.jsonl"
eval = "eval.jsonl"
labels = ["negative", "positive"]

[templates.manual]
input_pattern = "Review: {input}"
label_prefix = "Sentiment:"
"#
    }

    #[test]
    fn loads_config_and_splits() {
        let dir = tempfile::tempdir().unwrap();
        write_file(
            dir.path(),
            "train.jsonl",
            r#"{"text": "great film", "label": "positive"}
{"text": "dull plot", "label": "negative"}
"#,
        );
        write_file(dir.path(), "eval.jsonl", r#"{"text": "fine", "label": "positive"}"#);
        let cfg = write_file(dir.path(), "moods.toml", basic_config());

        let ds = load_dataset(&cfg).unwrap();
        assert_eq!(ds.name, "moods");
        assert_eq!(ds.train.len(), 2);
        assert_eq!(ds.eval.len(), 1);
        assert_eq!(ds.train[0].gold, 1);
        assert_eq!(ds.train[1].gold, 0);
        assert_eq!(ds.verbalizer.token(1), "positive");
        assert!(ds.templates.contains_key("manual"));
        assert!(!ds.pair_task);
    }

    #[test]
    fn unknown_label_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        write_file(
            dir.path(),
            "train.jsonl",
            "{\"text\": \"a\", \"label\": \"positive\"}\n{\"text\": \"b\", \"label\": \"meh\"}\n",
        );
        write_file(dir.path(), "eval.jsonl", r#"{"text": "c", "label": "negative"}"#);
        let cfg = write_file(dir.path(), "moods.toml", basic_config());

        let err = load_dataset(&cfg).unwrap_err();
        match err {
            Error::DatasetRow { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("meh"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_labels_and_single_class() {
        let err = LabelSpace::new(vec!["a".into(), "a".into()]).unwrap_err();
        assert!(matches!(err, Error::LabelSpace(_)));

        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "train.jsonl", r#"{"text": "a", "label": "only"}"#);
        write_file(dir.path(), "eval.jsonl", r#"{"text": "b", "label": "only"}"#);
        let cfg = write_file(
            dir.path(),
            "one.toml",
            "name = \"one\"\ntrain = \"train.jsonl\"\neval = \"eval.jsonl\"\nlabels = [\"only\"]\n",
        );
        assert!(matches!(load_dataset(&cfg), Err(Error::Config { .. })));
    }

    #[test]
    fn empty_split_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "train.jsonl", "\n");
        write_file(dir.path(), "eval.jsonl", r#"{"text": "a", "label": "negative"}"#);
        let cfg = write_file(dir.path(), "moods.toml", basic_config());
        assert!(matches!(load_dataset(&cfg), Err(Error::EmptySplit { .. })));
    }

    #[test]
    fn pair_task_requires_second_field() {
        let dir = tempfile::tempdir().unwrap();
        write_file(
            dir.path(),
            "train.jsonl",
            r#"{"text": "a", "text2": "b", "label": "no"}"#,
        );
        write_file(dir.path(), "eval.jsonl", r#"{"text": "c", "label": "yes"}"#);
        let cfg = write_file(
            dir.path(),
            "pairs.toml",
            r#"
name = "pairs"
train = "train.jsonl"
eval = "eval.jsonl"
labels = ["no", "yes"]
text2_field = "text2"
"#,
        );
        let err = load_dataset(&cfg).unwrap_err();
        match err {
            Error::DatasetRow { message, .. } => assert!(message.contains("text2"), "{message}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn sampling_is_deterministic_and_distinct() {
        let ds = toy_dataset(40, 4);
        let a = sample_examples(&ds, 16, 3).unwrap();
        let b = sample_examples(&ds, 16, 3).unwrap();
        assert_eq!(a, b);
        let c = sample_examples(&ds, 16, 4).unwrap();
        assert_ne!(a, c);

        let texts: std::collections::HashSet<&str> =
            a.iter().map(|e| e.text.as_str()).collect();
        assert_eq!(texts.len(), 16);

        assert!(matches!(
            sample_examples(&ds, 41, 0),
            Err(Error::InsufficientExamples { .. })
        ));
    }

    #[test]
    fn balanced_counts_differ_by_at_most_one() {
        let ds = toy_dataset(40, 4);
        let picked = sample_balanced(&ds, 10, 7).unwrap();
        assert_eq!(picked.len(), 10);
        let mut counts = [0usize; 4];
        for ex in &picked {
            counts[ex.gold] += 1;
        }
        let mut sorted = counts;
        sorted.sort_unstable();
        assert_eq!(sorted, [2, 2, 3, 3], "counts {counts:?}");
    }

    #[test]
    fn balanced_divisible_is_exact() {
        let ds = toy_dataset(64, 4);
        let picked = sample_balanced(&ds, 16, 0).unwrap();
        let mut counts = [0usize; 4];
        for ex in &picked {
            counts[ex.gold] += 1;
        }
        assert_eq!(counts, [4, 4, 4, 4]);
    }

    #[test]
    fn balanced_rejects_starved_class() {
        // Class 3 of 4 has 2 examples; k=16 needs 4 per class.
        let mut ds = toy_dataset(40, 4);
        ds.train.retain(|e| e.gold != 3);
        ds.train.push(Example { text: "x".into(), text2: None, gold: 3 });
        ds.train.push(Example { text: "y".into(), text2: None, gold: 3 });
        match sample_balanced(&ds, 16, 0) {
            Err(Error::InsufficientClassExamples { class, available, needed }) => {
                assert_eq!(class, "class3");
                assert_eq!(available, 2);
                assert_eq!(needed, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn majority_rate_counts_the_mode() {
        let exs: Vec<Example> = [0, 0, 0, 1, 2]
            .iter()
            .map(|&g| Example { text: "t".into(), text2: None, gold: g })
            .collect();
        assert!((majority_class_rate(&exs, 3).unwrap() - 0.6).abs() < 1e-12);
        assert!(matches!(majority_class_rate(&[], 3), Err(Error::EmptyInput)));
    }

    #[test]
    fn majority_rate_bounded_below_by_uniform() {
        for seed in 0..50u64 {
            let mut rng = StreamRng::keyed(seed, &["majority"]);
            let n_classes = 2 + rng.gen_index(5);
            let exs: Vec<Example> = (0..1 + rng.gen_index(30))
                .map(|_| Example {
                    text: "t".into(),
                    text2: None,
                    gold: rng.gen_index(n_classes),
                })
                .collect();
            let rate = majority_class_rate(&exs, n_classes).unwrap();
            assert!(rate >= 1.0 / n_classes as f64 - 1e-12);
            assert!(rate <= 1.0);
        }
    }
}
