//! Prompt rendering under a pinned template grammar.
//!
//! A prompt is blocks joined by the pair separator (`"\n\n"`); within a
//! block, fields are joined by the field separator (`"\n"`). The grammar is
//! layout-dependent and exact, byte for byte:
//!
//! * direct demo block: `rendered_input + "\n" + label_slot`
//! * direct test block: `rendered_input + "\n" + label_prefix` (the label
//!   slot stays open; candidates are scored as continuations)
//! * channel demo block: `label_slot + "\n" + rendered_input`
//! * channel final block: `label_slot + "\n"` (the input slot stays open)
//!
//! where `label_slot` is the bare label token when `label_prefix` is empty
//! and `prefix + " " + token` otherwise. Candidate continuations always
//! carry one leading space. Field values are escaped before substitution:
//! pair-separator occurrences collapse to a single space and surrounding
//! whitespace is trimmed, so a rendered block can never fabricate a block
//! boundary.

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Example, Verbalizer};
use crate::demos::{DemoSet, LabelRenaming};
use crate::error::{Error, Result};

pub const PAIR_SEPARATOR: &str = "\n\n";
pub const FIELD_SEPARATOR: &str = "\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateTier {
    /// Pinned bare grammar: input line(s), label line, nothing else.
    Minimal,
    /// Hand-written pattern and prefix from the dataset config.
    Manual,
    /// Like manual but with instruction-style wording.
    Verbose,
}

impl TemplateTier {
    pub fn as_str(&self) -> &'static str {
        match self {
            TemplateTier::Minimal => "minimal",
            TemplateTier::Manual => "manual",
            TemplateTier::Verbose => "verbose",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "minimal" => Some(TemplateTier::Minimal),
            "manual" => Some(TemplateTier::Manual),
            "verbose" => Some(TemplateTier::Verbose),
            _ => None,
        }
    }
}

impl std::fmt::Display for TemplateTier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    Direct,
    Channel,
    ZeroShot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub label: usize,
    pub continuation: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedPrompt {
    pub prompt: String,
    pub candidates: Vec<Candidate>,
    pub layout: Layout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pub tier: TemplateTier,
    /// Pattern with `{input}` and, for pair tasks, `{input2}`.
    pub input_pattern: String,
    pub label_prefix: String,
    pub pair_separator: String,
    pub field_separator: String,
    /// Effective label tokens for this tier.
    pub verbalizer: Verbalizer,
}

impl PromptTemplate {
    /// The pinned minimal template. Pair tasks stack the two inputs on
    /// separate lines of the same block.
    pub fn minimal(verbalizer: Verbalizer, pair_task: bool) -> Self {
        PromptTemplate {
            tier: TemplateTier::Minimal,
            input_pattern: if pair_task {
                "{input}\n{input2}".into()
            } else {
                "{input}".into()
            },
            label_prefix: String::new(),
            pair_separator: PAIR_SEPARATOR.into(),
            field_separator: FIELD_SEPARATOR.into(),
            verbalizer,
        }
    }

    /// Resolves the template for `tier` against a dataset: minimal is built
    /// in; manual and verbose must be defined in the dataset config.
    pub fn for_dataset(dataset: &Dataset, tier: TemplateTier) -> Result<Self> {
        let template = match tier {
            TemplateTier::Minimal => {
                Self::minimal(dataset.verbalizer.clone(), dataset.pair_task)
            }
            TemplateTier::Manual | TemplateTier::Verbose => {
                let spec = dataset.templates.get(tier.as_str()).ok_or_else(|| {
                    Error::MissingTemplate {
                        dataset: dataset.name.clone(),
                        tier: tier.as_str().into(),
                    }
                })?;
                let verbalizer = match &spec.verbalizer {
                    Some(tokens) => Verbalizer::new(tokens.clone())?,
                    None => dataset.verbalizer.clone(),
                };
                PromptTemplate {
                    tier,
                    input_pattern: spec.input_pattern.clone(),
                    label_prefix: spec.label_prefix.clone(),
                    pair_separator: PAIR_SEPARATOR.into(),
                    field_separator: FIELD_SEPARATOR.into(),
                    verbalizer,
                }
            }
        };
        template.validate(dataset.pair_task)?;
        Ok(template)
    }

    /// Checks a template against the grammar rules; call this after
    /// building one by hand rather than via [`PromptTemplate::for_dataset`].
    pub fn validate(&self, pair_task: bool) -> Result<()> {
        let p = &self.input_pattern;
        if !p.contains("{input}") {
            return Err(Error::Template(format!(
                "pattern {p:?} is missing the {{input}} placeholder"
            )));
        }
        if pair_task != p.contains("{input2}") {
            return Err(Error::Template(if pair_task {
                format!("pattern {p:?} lacks {{input2}} but the dataset is a pair task")
            } else {
                format!("pattern {p:?} uses {{input2}} but the dataset has no second field")
            }));
        }
        // Any brace group other than the two known placeholders is a typo.
        let stripped = p.replace("{input2}", "").replace("{input}", "");
        if let (Some(open), _) | (_, Some(open)) =
            (stripped.find('{'), stripped.find('}'))
        {
            let tail: String = stripped[open..].chars().take(12).collect();
            return Err(Error::Template(format!(
                "unrecognized placeholder near {tail:?}"
            )));
        }
        if p.contains(&self.pair_separator) || self.label_prefix.contains(&self.pair_separator) {
            return Err(Error::Template(
                "pattern and prefix must not contain the pair separator".into(),
            ));
        }
        if self.label_prefix.contains(&self.field_separator) {
            return Err(Error::Template(
                "label prefix must not contain the field separator".into(),
            ));
        }
        Ok(())
    }

    /// Escapes a field value: pair-separator occurrences collapse to a
    /// space (repeatedly, so overlaps cannot survive) and the ends are
    /// trimmed so a field cannot recreate a separator at a block edge.
    fn escape_field(&self, value: &str) -> String {
        let mut v = value.to_string();
        while v.contains(&self.pair_separator) {
            v = v.replace(&self.pair_separator, " ");
        }
        v.trim().to_string()
    }

    /// Substitutes an example's fields into the input pattern.
    pub fn render_input(&self, example: &Example) -> Result<String> {
        let mut rendered = self
            .input_pattern
            .replace("{input}", &self.escape_field(&example.text));
        if self.input_pattern.contains("{input2}") {
            let text2 = example.text2.as_deref().ok_or_else(|| {
                Error::Template("pattern needs {input2} but the example has no second field".into())
            })?;
            rendered = rendered.replace("{input2}", &self.escape_field(text2));
        } else if example.text2.is_some() {
            return Err(Error::Template(
                "example has a second field but the pattern has no {input2}".into(),
            ));
        }
        if rendered.contains(&self.pair_separator) {
            return Err(Error::Grammar(
                "rendered input collides with the pair separator".into(),
            ));
        }
        Ok(rendered)
    }

    fn effective_token<'a>(&'a self, renaming: Option<&'a LabelRenaming>, class: usize) -> &'a str {
        match renaming {
            Some(r) => r.token(class),
            None => self.verbalizer.token(class),
        }
    }

    fn checked_token<'a>(
        &'a self,
        renaming: Option<&'a LabelRenaming>,
        class: usize,
    ) -> Result<&'a str> {
        if class >= self.verbalizer.len() {
            return Err(Error::LabelIndexOutOfRange {
                index: class,
                classes: self.verbalizer.len(),
            });
        }
        if let Some(r) = renaming {
            if r.len() != self.verbalizer.len() {
                return Err(Error::Template(format!(
                    "renaming covers {} classes, template has {}",
                    r.len(),
                    self.verbalizer.len()
                )));
            }
        }
        let tok = self.effective_token(renaming, class);
        if tok.is_empty()
            || tok.contains(&self.pair_separator)
            || tok.contains(&self.field_separator)
        {
            return Err(Error::Grammar(format!(
                "label token {tok:?} is empty or contains a separator"
            )));
        }
        Ok(tok)
    }

    fn label_slot(&self, token: &str) -> String {
        if self.label_prefix.is_empty() {
            token.to_string()
        } else {
            format!("{} {}", self.label_prefix, token)
        }
    }

    /// Direct layout: demos with visible labels, then the test input with
    /// an open label slot. One candidate continuation per class, in label
    /// space order, each with one leading space. With zero demos this is
    /// the zero-shot prompt.
    pub fn render_direct(
        &self,
        demos: &DemoSet,
        renaming: Option<&LabelRenaming>,
        test: &Example,
    ) -> Result<RenderedPrompt> {
        let mut blocks = Vec::with_capacity(demos.k() + 1);
        for pair in &demos.pairs {
            let token = self.checked_token(renaming, pair.shown)?;
            let input = self.render_input(&pair.example)?;
            blocks.push(format!(
                "{input}{fs}{slot}",
                fs = self.field_separator,
                slot = self.label_slot(token)
            ));
        }
        let test_input = self.render_input(test)?;
        blocks.push(format!(
            "{test_input}{fs}{prefix}",
            fs = self.field_separator,
            prefix = self.label_prefix
        ));

        let candidates = (0..self.verbalizer.len())
            .map(|class| {
                Ok(Candidate {
                    label: class,
                    continuation: format!(" {}", self.checked_token(renaming, class)?),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(RenderedPrompt {
            prompt: blocks.join(&self.pair_separator),
            candidates,
            layout: if demos.k() == 0 { Layout::ZeroShot } else { Layout::Direct },
        })
    }

    /// Channel layout: labels condition their inputs, so each class gets
    /// its own prompt ending in an open input slot, and the single
    /// candidate is the test input with one leading space. Prompts differ
    /// only in label tokens.
    pub fn render_channel(
        &self,
        demos: &DemoSet,
        renaming: Option<&LabelRenaming>,
        test: &Example,
    ) -> Result<Vec<RenderedPrompt>> {
        let mut demo_blocks = Vec::with_capacity(demos.k());
        for pair in &demos.pairs {
            let token = self.checked_token(renaming, pair.shown)?;
            let input = self.render_input(&pair.example)?;
            // An empty input puts the block's field separator flush against
            // the pair separator, which no longer splits where it was
            // written. The input-first layout tolerates that (the leftover
            // newline stays on the empty-input side); label-first cannot.
            if input.is_empty() {
                return Err(Error::Grammar(
                    "demo input collapses to empty, which the label-first layout cannot carry"
                        .into(),
                ));
            }
            demo_blocks.push(format!(
                "{slot}{fs}{input}",
                slot = self.label_slot(token),
                fs = self.field_separator
            ));
        }
        let continuation = format!(" {}", self.render_input(test)?);

        (0..self.verbalizer.len())
            .map(|class| {
                let token = self.checked_token(renaming, class)?;
                let mut blocks = demo_blocks.clone();
                blocks.push(format!(
                    "{slot}{fs}",
                    slot = self.label_slot(token),
                    fs = self.field_separator
                ));
                Ok(RenderedPrompt {
                    prompt: blocks.join(&self.pair_separator),
                    candidates: vec![Candidate {
                        label: class,
                        continuation: continuation.clone(),
                    }],
                    layout: Layout::Channel,
                })
            })
            .collect()
    }

    /// Zero-shot direct prompt: the test input alone.
    pub fn render_zero_shot(
        &self,
        renaming: Option<&LabelRenaming>,
        test: &Example,
    ) -> Result<RenderedPrompt> {
        self.render_direct(&DemoSet::empty(), renaming, test)
    }
}
