//! Deterministic synthetic classification datasets for the built-in
//! backend. Every row's text carries exactly one topic token from a fixed
//! lexicon and the gold class is `topic % classes`, so expected accuracy
//! under any demo corruption can be enumerated by hand.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::corpus::{self, Dataset, DatasetConfig, MockSpec, TemplateSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub name: String,
    pub topics: usize,
    pub classes: usize,
    pub train: usize,
    pub eval: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            name: "synthetic".into(),
            topics: 4,
            classes: 2,
            train: 16,
            eval: 64,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::SyntheticSpec("name is empty".into()));
        }
        if self.classes < 2 {
            return Err(Error::SyntheticSpec(format!(
                "need at least 2 classes, got {}",
                self.classes
            )));
        }
        if self.topics < self.classes {
            return Err(Error::SyntheticSpec(format!(
                "{} topics cannot cover {} classes",
                self.topics, self.classes
            )));
        }
        if self.train < self.topics {
            return Err(Error::SyntheticSpec(format!(
                "{} train rows cannot cover {} topics",
                self.train, self.topics
            )));
        }
        if self.eval == 0 {
            return Err(Error::SyntheticSpec("eval split is empty".into()));
        }
        Ok(())
    }
}

pub fn topic_tokens(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("t{i:02}")).collect()
}

/// Word-like label names: a fixed list first, then `labelN`. Distinct from
/// every topic token.
pub fn label_names(n: usize) -> Vec<String> {
    const WORDS: [&str; 10] = [
        "red", "blue", "green", "yellow", "purple", "orange", "brown", "black", "white", "pink",
    ];
    (0..n)
        .map(|i| {
            WORDS
                .get(i)
                .map_or_else(|| format!("label{i}"), |w| (*w).to_string())
        })
        .collect()
}

fn config_for(spec: &SyntheticSpec) -> DatasetConfig {
    let mut templates = BTreeMap::new();
    templates.insert(
        "manual".to_string(),
        TemplateSpec {
            input_pattern: "text: {input}".into(),
            label_prefix: String::new(),
            verbalizer: None,
        },
    );
    templates.insert(
        "verbose".to_string(),
        TemplateSpec {
            input_pattern: "The topic code appears somewhere in the following text. {input}"
                .into(),
            label_prefix: String::new(),
            verbalizer: None,
        },
    );
    DatasetConfig {
        name: spec.name.clone(),
        train: PathBuf::from("train.jsonl"),
        eval: PathBuf::from("eval.jsonl"),
        labels: label_names(spec.classes),
        verbalizer: None,
        text_field: "text".into(),
        text2_field: None,
        label_field: "label".into(),
        templates,
        mock: Some(MockSpec {
            topics: topic_tokens(spec.topics),
        }),
    }
}

fn rows(spec: &SyntheticSpec, split: &str, n: usize) -> Vec<(String, usize)> {
    let topics = topic_tokens(spec.topics);
    (0..n)
        .map(|j| {
            let topic = j % spec.topics;
            let text = format!("{} {split} {j}", topics[topic]);
            (text, topic % spec.classes)
        })
        .collect()
}

/// Builds the dataset in memory, without touching the filesystem.
pub fn build_dataset(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let cfg = config_for(spec);
    let to_examples = |rows: Vec<(String, usize)>| {
        rows.into_iter()
            .map(|(text, gold)| corpus::Example {
                text,
                text2: None,
                gold,
            })
            .collect()
    };
    Ok(Dataset {
        name: cfg.name,
        train: to_examples(rows(spec, "sample", spec.train)),
        eval: to_examples(rows(spec, "case", spec.eval)),
        labels: corpus::LabelSpace::new(cfg.labels.clone())?,
        verbalizer: corpus::Verbalizer::new(cfg.labels)?,
        templates: cfg.templates,
        mock_topics: cfg.mock.map(|m| m.topics),
        pair_task: false,
    })
}

fn write_split(path: &Path, spec: &SyntheticSpec, split: &str, n: usize) -> Result<()> {
    let labels = label_names(spec.classes);
    let mut out = String::new();
    for (text, gold) in rows(spec, split, n) {
        let row = serde_json::json!({ "text": text, "label": labels[gold] });
        out.push_str(&row.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes `train.jsonl`, `eval.jsonl`, and `config.toml` into `dir` and
/// returns the config path, ready for an experiment's `datasets` list.
pub fn write_dataset(spec: &SyntheticSpec, dir: &Path) -> Result<PathBuf> {
    spec.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_split(&dir.join("train.jsonl"), spec, "sample", spec.train)?;
    write_split(&dir.join("eval.jsonl"), spec, "case", spec.eval)?;
    let config = config_for(spec);
    let toml = toml::to_string_pretty(&config)
        .map_err(|e| Error::SyntheticSpec(format!("config encode: {e}")))?;
    let config_path = dir.join("config.toml");
    fs::write(&config_path, toml).map_err(|e| Error::io(&config_path, e))?;
    Ok(config_path)
}
