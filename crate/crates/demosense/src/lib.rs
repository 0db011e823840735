//! demosense measures how in-context-learning classifiers react when the
//! labels of their demonstration examples are corrupted.
//!
//! The pipeline: load a labeled dataset ([`corpus`]), sample and corrupt
//! demonstration pairs ([`demos`]), render prompts under a pinned template
//! grammar ([`prompting`]), score label candidates against a log-probability
//! backend ([`modelio`], [`scoring`]), and summarize the resulting accuracy
//! curves as sensitivity slopes and ground-truth label effect ratios
//! ([`metrics`]). [`runner`] ties the stages into resumable sweeps.
//!
//! Every randomized step draws from a counter-based splittable generator
//! ([`rng`]) keyed by `(seed, purpose, dataset)`, so identical configs yield
//! identical records regardless of thread count or resume points.
//!
//! Each major capability has a runnable demo under `examples/`; start with
//! `cargo run --example synthetic_sweep`.

pub mod corpus;
pub mod demos;
pub mod error;
pub mod metrics;
pub mod modelio;
pub mod prompting;
pub mod rng;
pub mod runner;
pub mod scoring;
pub mod stats;

pub use error::{Error, Result};
