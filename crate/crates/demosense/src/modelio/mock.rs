//! Deterministic synthetic backend.
//!
//! The model knows a topic lexicon and a label vocabulary. It segments the
//! prompt back into demonstration pairs under the minimal template grammar,
//! counts label/topic co-occurrences, and returns Laplace-smoothed
//! (`epsilon = 1`) log probabilities:
//!
//! * direct, test topic `t`: `ln((1 + n_label(t)) / (|C| + n(t)))` where
//!   `n(t)` counts demos whose input has topic `t`; if no demo shares the
//!   test topic, global shown-label counts substitute for the topic counts.
//! * channel, conditioning label `c`: `ln((1 + d_t(c)) / (|T| + d(c)))`
//!   where `d(c)` counts demos shown label `c` and `d_t(c)` those whose
//!   input has the continuation's topic `t`.
//!
//! The topic of a text is its first whitespace-separated word found in the
//! lexicon. Per-layout probabilities sum to one by construction, so the
//! mock exercises calibration and prediction code with exact arithmetic.
//! Everything is a pure function of the request: same bytes, same score.

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::modelio::{Backend, ScoringRequest, ScoringResponse};
use crate::prompting::{FIELD_SEPARATOR, PAIR_SEPARATOR};

const SMOOTHING: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct SyntheticTopicModel {
    topics: Vec<String>,
    labels: Vec<String>,
    pair_separator: String,
    field_separator: String,
}

/// A prompt decomposed under the minimal grammar. The final block decides
/// the layout: a bare label token means channel, anything else is the
/// direct test input.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentedPrompt {
    Direct {
        /// `(input, shown label)` per demonstration.
        demos: Vec<(String, String)>,
        test_input: String,
    },
    Channel {
        /// `(shown label, input)` per demonstration.
        demos: Vec<(String, String)>,
        conditioning_label: String,
    },
}

impl SyntheticTopicModel {
    pub fn new(topics: Vec<String>, labels: Vec<String>) -> Result<Self> {
        let model = SyntheticTopicModel {
            topics,
            labels,
            pair_separator: PAIR_SEPARATOR.into(),
            field_separator: FIELD_SEPARATOR.into(),
        };
        model.validate()?;
        Ok(model)
    }

    /// Builds the backend for a dataset that declares a `[mock]` topic
    /// lexicon. `label_tokens` are the surface tokens the prompts will
    /// actually carry (tier verbalizer, possibly renamed).
    pub fn for_dataset(dataset: &Dataset, label_tokens: Vec<String>) -> Result<Self> {
        let topics = dataset.mock_topics.clone().ok_or_else(|| {
            Error::MockModel(format!(
                "dataset {:?} declares no [mock] topic lexicon",
                dataset.name
            ))
        })?;
        Self::new(topics, label_tokens)
    }

    fn validate(&self) -> Result<()> {
        if self.topics.is_empty() {
            return Err(Error::MockModel("topic lexicon is empty".into()));
        }
        if self.labels.is_empty() {
            return Err(Error::MockModel("label vocabulary is empty".into()));
        }
        for (i, t) in self.topics.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::MockModel(format!(
                    "topic {t:?} must be a single non-empty word"
                )));
            }
            if self.topics[..i].contains(t) {
                return Err(Error::MockModel(format!("duplicate topic {t:?}")));
            }
        }
        for (i, l) in self.labels.iter().enumerate() {
            if l.is_empty()
                || l.contains(&self.pair_separator)
                || l.contains(&self.field_separator)
            {
                return Err(Error::MockModel(format!(
                    "label token {l:?} is empty or contains a separator"
                )));
            }
            if self.labels[..i].contains(l) {
                return Err(Error::MockModel(format!("duplicate label token {l:?}")));
            }
        }
        Ok(())
    }

    pub fn topics(&self) -> &[String] {
        &self.topics
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// First whitespace-separated word of `text` found in the lexicon.
    pub fn first_topic<'a>(&'a self, text: &str) -> Option<&'a str> {
        text.split_whitespace()
            .find_map(|word| self.topics.iter().find(|t| t.as_str() == word))
            .map(String::as_str)
    }

    fn known_label(&self, token: &str) -> bool {
        self.labels.iter().any(|l| l == token)
    }

    /// Splits a prompt into demonstration pairs plus the open slot. The
    /// prompt must end with a dangling field separator (an open label slot
    /// in direct layout, an open input slot in channel layout), which is
    /// how the minimal grammar renders every scoring prompt.
    pub fn segment(&self, prompt: &str) -> Result<SegmentedPrompt> {
        if prompt.is_empty() {
            return Err(Error::Grammar("empty prompt".into()));
        }
        let blocks: Vec<&str> = prompt.split(&self.pair_separator).collect();
        let last = blocks[blocks.len() - 1];
        let body = last.strip_suffix(&self.field_separator).ok_or_else(|| {
            Error::Grammar("prompt does not end with an open slot".into())
        })?;

        let demo_blocks = &blocks[..blocks.len() - 1];
        if self.known_label(body) {
            let demos = demo_blocks
                .iter()
                .map(|block| {
                    let (label, input) =
                        block.split_once(&self.field_separator).ok_or_else(|| {
                            Error::Grammar(format!("demo block {block:?} has no input line"))
                        })?;
                    if !self.known_label(label) {
                        return Err(Error::Grammar(format!(
                            "demo block starts with unknown label {label:?}"
                        )));
                    }
                    Ok((label.to_string(), input.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SegmentedPrompt::Channel {
                demos,
                conditioning_label: body.to_string(),
            })
        } else {
            let demos = demo_blocks
                .iter()
                .map(|block| {
                    let (input, label) =
                        block.rsplit_once(&self.field_separator).ok_or_else(|| {
                            Error::Grammar(format!("demo block {block:?} has no label line"))
                        })?;
                    if !self.known_label(label) {
                        return Err(Error::Grammar(format!(
                            "demo block ends with unknown label {label:?}"
                        )));
                    }
                    Ok((input.to_string(), label.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SegmentedPrompt::Direct {
                demos,
                test_input: body.to_string(),
            })
        }
    }

    /// Smoothed probability of `label` for a direct-layout prompt, from
    /// `(input, label)` demos. Falls back to global shown-label counts when
    /// no demo shares the test input's topic.
    pub fn direct_logprob(&self, demos: &[(String, String)], test_input: &str, label: &str) -> f64 {
        let c = self.labels.len() as f64;
        let test_topic = self.first_topic(test_input);
        let topical: Vec<&(String, String)> = match test_topic {
            Some(topic) => demos
                .iter()
                .filter(|(input, _)| self.first_topic(input) == Some(topic))
                .collect(),
            None => Vec::new(),
        };
        let (n_label, n_total) = if topical.is_empty() {
            let n_label = demos.iter().filter(|(_, l)| l == label).count();
            (n_label, demos.len())
        } else {
            let n_label = topical.iter().filter(|(_, l)| l == label).count();
            (n_label, topical.len())
        };
        ((SMOOTHING + n_label as f64) / (c * SMOOTHING + n_total as f64)).ln()
    }

    /// Smoothed probability of the continuation's topic given the
    /// conditioning label, from `(label, input)` demos.
    pub fn channel_logprob(
        &self,
        demos: &[(String, String)],
        conditioning_label: &str,
        continuation: &str,
    ) -> f64 {
        let t = self.topics.len() as f64;
        let cont_topic = self.first_topic(continuation);
        let with_label = demos.iter().filter(|(l, _)| l == conditioning_label);
        let (d_topic, d_label) = with_label.fold((0usize, 0usize), |(dt, dl), (_, input)| {
            let hit = cont_topic.is_some() && self.first_topic(input) == cont_topic;
            (dt + hit as usize, dl + 1)
        });
        ((SMOOTHING + d_topic as f64) / (t * SMOOTHING + d_label as f64)).ln()
    }
}

impl Backend for SyntheticTopicModel {
    fn score(&self, request: &ScoringRequest) -> Result<ScoringResponse> {
        if request.continuation.trim().is_empty() {
            return Err(Error::Protocol("continuation is empty".into()));
        }
        let logprob = match self.segment(&request.prompt)? {
            SegmentedPrompt::Direct { demos, test_input } => {
                let label = request.continuation.trim_start();
                if !self.known_label(label) {
                    return Err(Error::Grammar(format!(
                        "direct continuation {label:?} is not a label token"
                    )));
                }
                self.direct_logprob(&demos, &test_input, label)
            }
            SegmentedPrompt::Channel { demos, conditioning_label } => {
                self.channel_logprob(&demos, &conditioning_label, &request.continuation)
            }
        };
        Ok(ScoringResponse {
            logprob,
            tokens: request.continuation.split_whitespace().count() as u32,
        })
    }
}
