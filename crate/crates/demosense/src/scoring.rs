//! Inference methods: turning rendered prompts and backend log
//! probabilities into per-label scores and predictions.
//!
//! Direct scoring asks the backend for each verbalized label as a
//! continuation of one prompt. Channel scoring asks for the test input as a
//! continuation of one label-conditioned prompt per class, with a uniform
//! label prior. Calibrate-before-use rescales direct probabilities by the
//! model's response to content-free inputs. Scores are assembled by label
//! index, so backend completion order can never reorder them, and no path
//! divides a score by its token count.

use serde::{Deserialize, Serialize};

use crate::corpus::Example;
use crate::demos::{DemoSet, LabelRenaming};
use crate::error::{Error, Result};
use crate::modelio::{Backend, ScoringRequest};
use crate::prompting::PromptTemplate;

/// Inputs that carry no task signal, used to probe label bias.
pub const CONTENT_FREE_INPUTS: [&str; 3] = ["N/A", "", "[MASK]"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Channel,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Channel => "channel",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "direct" => Some(Method::Direct),
            "channel" => Some(Method::Channel),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One log score per class, indexed by label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelScores {
    pub scores: Vec<f64>,
    pub method: Method,
    pub calibrated: bool,
}

/// Mean content-free probability vector; the denominator of
/// calibrate-before-use.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationVector {
    pub p_cf: Vec<f64>,
}

/// Scores every label as a continuation of the direct-layout prompt.
pub fn score_direct(
    backend: &dyn Backend,
    template: &PromptTemplate,
    demos: &DemoSet,
    renaming: Option<&LabelRenaming>,
    test: &Example,
) -> Result<LabelScores> {
    let rendered = template.render_direct(demos, renaming, test)?;
    let requests: Vec<ScoringRequest> = rendered
        .candidates
        .iter()
        .map(|c| ScoringRequest::new(rendered.prompt.clone(), c.continuation.clone()))
        .collect();
    let responses = backend.score_batch(&requests)?;
    if responses.len() != requests.len() {
        return Err(Error::Protocol(format!(
            "{} responses for {} candidates",
            responses.len(),
            requests.len()
        )));
    }
    let mut scores = vec![f64::NAN; rendered.candidates.len()];
    for (candidate, response) in rendered.candidates.iter().zip(responses) {
        scores[candidate.label] = response.logprob;
    }
    Ok(LabelScores {
        scores,
        method: Method::Direct,
        calibrated: false,
    })
}

/// Scores the test input as a continuation of each label-conditioned
/// prompt. The label prior is uniform, so these likelihoods compare
/// directly.
pub fn score_channel(
    backend: &dyn Backend,
    template: &PromptTemplate,
    demos: &DemoSet,
    renaming: Option<&LabelRenaming>,
    test: &Example,
) -> Result<LabelScores> {
    let prompts = template.render_channel(demos, renaming, test)?;
    let requests: Vec<ScoringRequest> = prompts
        .iter()
        .map(|p| ScoringRequest::new(p.prompt.clone(), p.candidates[0].continuation.clone()))
        .collect();
    let responses = backend.score_batch(&requests)?;
    if responses.len() != requests.len() {
        return Err(Error::Protocol(format!(
            "{} responses for {} prompts",
            responses.len(),
            requests.len()
        )));
    }
    let mut scores = vec![f64::NAN; prompts.len()];
    for (prompt, response) in prompts.iter().zip(responses) {
        scores[prompt.candidates[0].label] = response.logprob;
    }
    Ok(LabelScores {
        scores,
        method: Method::Channel,
        calibrated: false,
    })
}

/// Log scores to a probability vector (softmax; stable under shifts).
pub fn probabilities(scores: &LabelScores) -> Vec<f64> {
    let max = scores
        .scores
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Direct-scores each content-free input with the same demos and template,
/// normalizes each score vector to probabilities, and averages them.
pub fn compute_cbu_calibration(
    backend: &dyn Backend,
    template: &PromptTemplate,
    demos: &DemoSet,
    renaming: Option<&LabelRenaming>,
    content_free: &[&str],
) -> Result<CalibrationVector> {
    if content_free.is_empty() {
        return Err(Error::EmptyInput);
    }
    let pair_task = template.input_pattern.contains("{input2}");
    let n_classes = template.verbalizer.len();
    let mut p_cf = vec![0.0; n_classes];
    for input in content_free {
        let probe = Example {
            text: (*input).to_string(),
            // Pair tasks get the same content-free text in both slots.
            text2: pair_task.then(|| (*input).to_string()),
            gold: 0,
        };
        let scores = score_direct(backend, template, demos, renaming, &probe)?;
        for (acc, p) in p_cf.iter_mut().zip(probabilities(&scores)) {
            *acc += p;
        }
    }
    for acc in &mut p_cf {
        *acc /= content_free.len() as f64;
    }
    Ok(CalibrationVector { p_cf })
}

/// Divides the score probabilities by the content-free vector and
/// renormalizes, returning log scores again. Refuses to calibrate twice and
/// refuses a calibration vector with a zero entry.
pub fn apply_calibration(
    scores: &LabelScores,
    calibration: &CalibrationVector,
) -> Result<LabelScores> {
    if scores.calibrated {
        return Err(Error::AlreadyCalibrated);
    }
    if scores.scores.len() != calibration.p_cf.len() {
        return Err(Error::LengthMismatch {
            left: scores.scores.len(),
            right: calibration.p_cf.len(),
        });
    }
    for (label, &p) in calibration.p_cf.iter().enumerate() {
        if p <= 0.0 {
            return Err(Error::DegenerateCalibration { label });
        }
    }
    let probs = probabilities(scores);
    let rescaled: Vec<f64> = probs
        .iter()
        .zip(&calibration.p_cf)
        .map(|(p, cf)| p / cf)
        .collect();
    let z: f64 = rescaled.iter().sum();
    Ok(LabelScores {
        scores: rescaled.into_iter().map(|q| (q / z).ln()).collect(),
        method: scores.method,
        calibrated: true,
    })
}

/// Highest score wins; ties go to the lowest label index.
pub fn predict_label(scores: &LabelScores) -> usize {
    assert!(!scores.scores.is_empty(), "no scores to predict from");
    let mut best = 0;
    for (i, &s) in scores.scores.iter().enumerate().skip(1) {
        if s > scores.scores[best] {
            best = i;
        }
    }
    best
}
