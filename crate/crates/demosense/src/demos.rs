//! Demonstration sets and their corruption protocols.
//!
//! A demonstration pair carries the example plus the label actually shown
//! in the prompt, which corruption may decouple from the gold label:
//!
//! * alpha-correct: exactly `round_half_up(k * alpha / 100)` pairs keep the
//!   gold label; the rest get a uniform draw from the other classes.
//! * random label: every pair gets an i.i.d. uniform draw over all classes,
//!   gold included.
//! * shuffled label: shown labels are a seeded permutation of the gold
//!   labels, preserving the multiset.
//!
//! Prior-free renaming replaces the surface tokens of all classes at once
//! (letters, digits, or pool tokens) so the model cannot lean on label
//! priors; it remaps surfaces only and never touches gold/shown indices.

use crate::corpus::{Example, LabelSpace, Verbalizer};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

#[derive(Debug, Clone, PartialEq)]
pub struct DemoPair {
    pub example: Example,
    /// Class index rendered into the prompt; equals `example.gold` unless
    /// corruption replaced it.
    pub shown: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptionMode {
    Uncorrupted,
    AlphaCorrect,
    RandomLabel,
    ShuffledLabel,
}

/// How a demo set's shown labels were produced; kept for record-keeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionSpec {
    pub mode: CorruptionMode,
    pub alpha: Option<u8>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoSet {
    pub pairs: Vec<DemoPair>,
    pub provenance: CorruptionSpec,
}

impl DemoSet {
    /// Zero-shot: no demonstrations at all.
    pub fn empty() -> Self {
        DemoSet {
            pairs: Vec::new(),
            provenance: CorruptionSpec {
                mode: CorruptionMode::Uncorrupted,
                alpha: None,
                seed: None,
            },
        }
    }

    /// Wraps sampled examples with their gold labels shown as-is.
    pub fn uncorrupted(sampled: &[Example]) -> Self {
        DemoSet {
            pairs: sampled
                .iter()
                .map(|ex| DemoPair {
                    example: ex.clone(),
                    shown: ex.gold,
                })
                .collect(),
            provenance: CorruptionSpec {
                mode: CorruptionMode::Uncorrupted,
                alpha: None,
                seed: None,
            },
        }
    }

    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    pub fn correct_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.shown == p.example.gold).count()
    }
}

/// Number of pairs that keep their gold label under alpha-percent
/// corruption: `k * alpha / 100`, rounded half up. Exact in integer
/// arithmetic.
pub fn correct_label_count(k: usize, alpha: u8) -> usize {
    (k * alpha as usize + 50) / 100
}

/// Keeps exactly [`correct_label_count`] gold labels (positions seeded
/// uniform), replacing the rest with uniform draws from the other classes.
/// `alpha = 100` reproduces the gold labels; `alpha = 0` corrupts every pair.
pub fn corrupt_alpha(
    sampled: &[Example],
    labels: &LabelSpace,
    alpha: u8,
    seed: u64,
) -> Result<DemoSet> {
    if alpha > 100 {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let k = sampled.len();
    let correct = correct_label_count(k, alpha);
    let corrupted = k - correct;
    if corrupted > 0 && labels.len() < 2 {
        return Err(Error::CannotCorrupt);
    }

    let mut rng = StreamRng::keyed(seed, &["corrupt-alpha", &alpha.to_string()]);
    let positions = rng.subset_indices(k, corrupted);
    let mut pairs: Vec<DemoPair> = sampled
        .iter()
        .map(|ex| DemoPair {
            example: ex.clone(),
            shown: ex.gold,
        })
        .collect();
    // Replacement draws happen in ascending position order.
    for pos in positions {
        let gold = pairs[pos].example.gold;
        let draw = rng.gen_index(labels.len() - 1);
        pairs[pos].shown = if draw >= gold { draw + 1 } else { draw };
    }

    Ok(DemoSet {
        pairs,
        provenance: CorruptionSpec {
            mode: CorruptionMode::AlphaCorrect,
            alpha: Some(alpha),
            seed: Some(seed),
        },
    })
}

/// Replaces every shown label with an i.i.d. uniform draw over all classes;
/// a draw may coincide with the gold label.
pub fn corrupt_random(sampled: &[Example], labels: &LabelSpace, seed: u64) -> DemoSet {
    let mut rng = StreamRng::keyed(seed, &["corrupt-random"]);
    let pairs = sampled
        .iter()
        .map(|ex| DemoPair {
            example: ex.clone(),
            shown: rng.gen_index(labels.len()),
        })
        .collect();
    DemoSet {
        pairs,
        provenance: CorruptionSpec {
            mode: CorruptionMode::RandomLabel,
            alpha: None,
            seed: Some(seed),
        },
    }
}

/// Shown labels become a seeded uniform permutation of the gold labels;
/// the label multiset is preserved exactly. Fixed points are allowed.
pub fn corrupt_shuffle(sampled: &[Example], seed: u64) -> Result<DemoSet> {
    if sampled.len() < 2 {
        return Err(Error::TooFewForShuffle(sampled.len()));
    }
    let mut rng = StreamRng::keyed(seed, &["corrupt-shuffle"]);
    let mut perm: Vec<usize> = sampled.iter().map(|ex| ex.gold).collect();
    rng.shuffle(&mut perm);
    let pairs = sampled
        .iter()
        .zip(perm)
        .map(|(ex, shown)| DemoPair {
            example: ex.clone(),
            shown,
        })
        .collect();
    Ok(DemoSet {
        pairs,
        provenance: CorruptionSpec {
            mode: CorruptionMode::ShuffledLabel,
            alpha: None,
            seed: Some(seed),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenamingScheme {
    /// Keep the verbalizer tokens unchanged.
    Identity,
    /// Lowercase letters `a`, `b`, ... assigned to classes in seeded order.
    Alphabet,
    /// Digit strings `1` ..= `|C|` assigned in seeded order. `0` is never
    /// used: some tokenizers bind it to null-ish priors.
    Numeric,
    /// Distinct tokens drawn from a caller-supplied pool.
    RandomToken,
}

impl RenamingScheme {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "identity" => Some(RenamingScheme::Identity),
            "alphabet" => Some(RenamingScheme::Alphabet),
            "numeric" => Some(RenamingScheme::Numeric),
            "random_token" => Some(RenamingScheme::RandomToken),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RenamingScheme::Identity => "identity",
            RenamingScheme::Alphabet => "alphabet",
            RenamingScheme::Numeric => "numeric",
            RenamingScheme::RandomToken => "random_token",
        }
    }
}

/// A total, injective replacement of class surface tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRenaming {
    pub scheme: RenamingScheme,
    mapping: Vec<String>,
}

impl LabelRenaming {
    pub fn token(&self, class: usize) -> &str {
        &self.mapping[class]
    }

    pub fn mapping(&self) -> &[String] {
        &self.mapping
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }
}

/// Builds the renamed surface tokens for every class under `scheme`.
/// `token_pool` is only consulted for [`RenamingScheme::RandomToken`], which
/// needs at least `|C|` distinct entries.
pub fn apply_prior_free(
    verbalizer: &Verbalizer,
    scheme: RenamingScheme,
    seed: u64,
    token_pool: Option<&[String]>,
) -> Result<LabelRenaming> {
    let c = verbalizer.len();
    let mut rng = StreamRng::keyed(seed, &["prior-free", scheme.as_str()]);
    let mapping = match scheme {
        RenamingScheme::Identity => verbalizer.tokens().to_vec(),
        RenamingScheme::Alphabet => {
            if c > 26 {
                return Err(Error::AlphabetExhausted(c));
            }
            let mut symbols: Vec<String> =
                (0..c).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
            rng.shuffle(&mut symbols);
            symbols
        }
        RenamingScheme::Numeric => {
            let mut symbols: Vec<String> = (1..=c).map(|i| i.to_string()).collect();
            rng.shuffle(&mut symbols);
            symbols
        }
        RenamingScheme::RandomToken => {
            let pool = token_pool.unwrap_or(&[]);
            let mut distinct: Vec<&String> = Vec::new();
            for tok in pool {
                if !distinct.contains(&tok) {
                    distinct.push(tok);
                }
            }
            if distinct.len() < c {
                return Err(Error::PoolTooSmall {
                    available: distinct.len(),
                    needed: c,
                });
            }
            rng.sample_indices(distinct.len(), c)
                .into_iter()
                .map(|i| distinct[i].clone())
                .collect()
        }
    };
    Ok(LabelRenaming { scheme, mapping })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::toy_dataset;

    fn golds(set: &DemoSet) -> Vec<usize> {
        set.pairs.iter().map(|p| p.example.gold).collect()
    }

    fn showns(set: &DemoSet) -> Vec<usize> {
        set.pairs.iter().map(|p| p.shown).collect()
    }

    #[test]
    fn correct_count_rounds_half_up() {
        assert_eq!(correct_label_count(16, 75), 12);
        assert_eq!(correct_label_count(3, 50), 2); // 1.5 rounds up
        assert_eq!(correct_label_count(1, 49), 0);
        assert_eq!(correct_label_count(1, 50), 1);
        assert_eq!(correct_label_count(0, 100), 0);
        // Cross-check the integer form against the real-valued definition.
        for k in 0..=64usize {
            for alpha in 0..=100u8 {
                let real = (k as f64 * alpha as f64 / 100.0 + 0.5).floor() as usize;
                assert_eq!(correct_label_count(k, alpha), real, "k={k} alpha={alpha}");
            }
        }
    }

    #[test]
    fn alpha_extremes() {
        let ds = toy_dataset(16, 4);
        let sampled = &ds.train[..16];

        let all_good = corrupt_alpha(sampled, &ds.labels, 100, 9).unwrap();
        assert_eq!(showns(&all_good), golds(&all_good));

        let all_bad = corrupt_alpha(sampled, &ds.labels, 0, 9).unwrap();
        assert!(all_bad
            .pairs
            .iter()
            .all(|p| p.shown != p.example.gold && p.shown < 4));
    }

    #[test]
    fn alpha_count_is_exact_for_every_seed() {
        let ds = toy_dataset(16, 4);
        let sampled = &ds.train[..16];
        for alpha in [0u8, 25, 50, 75, 100] {
            for seed in 0..20u64 {
                let set = corrupt_alpha(sampled, &ds.labels, alpha, seed).unwrap();
                assert_eq!(set.correct_count(), correct_label_count(16, alpha));
            }
        }
    }

    #[test]
    fn alpha_out_of_range_and_single_class() {
        let ds = toy_dataset(8, 2);
        assert!(matches!(
            corrupt_alpha(&ds.train[..4], &ds.labels, 101, 0),
            Err(Error::AlphaOutOfRange(101))
        ));

        let one = LabelSpace::new(vec!["only".into()]).unwrap();
        let exs: Vec<Example> = (0..4)
            .map(|i| Example { text: format!("e{i}"), text2: None, gold: 0 })
            .collect();
        assert!(matches!(
            corrupt_alpha(&exs, &one, 0, 0),
            Err(Error::CannotCorrupt)
        ));
        // alpha=100 corrupts nothing, so a single class is fine.
        let set = corrupt_alpha(&exs, &one, 100, 0).unwrap();
        assert_eq!(set.correct_count(), 4);
    }

    #[test]
    fn corrupted_replacements_are_uniform_over_other_classes() {
        // Gold is always class 0 of 4; replacements land on 1, 2, 3
        // uniformly. Chi-square df=2 critical value at p=0.001 is 13.82.
        let exs: Vec<Example> = (0..10)
            .map(|i| Example { text: format!("e{i}"), text2: None, gold: 0 })
            .collect();
        let labels = LabelSpace::new(
            (0..4).map(|c| format!("c{c}")).collect::<Vec<_>>(),
        )
        .unwrap();
        let mut counts = [0u64; 4];
        for seed in 0..3000u64 {
            let set = corrupt_alpha(&exs, &labels, 0, seed).unwrap();
            for p in &set.pairs {
                counts[p.shown] += 1;
            }
        }
        assert_eq!(counts[0], 0);
        let total: u64 = counts.iter().sum();
        let expected = total as f64 / 3.0;
        let chi2: f64 = counts[1..]
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 13.82, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn random_label_can_hit_gold_and_is_uniform() {
        let ds = toy_dataset(400, 4);
        let set = corrupt_random(&ds.train, &ds.labels, 5);
        let hits = set.correct_count();
        // ~100 of 400 expected; 6-sigma bounds.
        assert!((55..=145).contains(&hits), "gold hits {hits}");

        let mut counts = [0u64; 4];
        for p in &set.pairs {
            counts[p.shown] += 1;
        }
        let expected = 100.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 16.27, "chi2 = {chi2}"); // df=3, p=0.001
    }

    #[test]
    fn shuffle_preserves_multiset_and_needs_two() {
        let ds = toy_dataset(12, 3);
        let set = corrupt_shuffle(&ds.train, 2).unwrap();
        let mut shown = showns(&set);
        let mut gold = golds(&set);
        shown.sort_unstable();
        gold.sort_unstable();
        assert_eq!(shown, gold);

        assert!(matches!(
            corrupt_shuffle(&ds.train[..1], 0),
            Err(Error::TooFewForShuffle(1))
        ));
    }

    #[test]
    fn corruption_is_deterministic_per_seed() {
        let ds = toy_dataset(16, 4);
        let s = &ds.train[..16];
        assert_eq!(
            corrupt_alpha(s, &ds.labels, 50, 7).unwrap(),
            corrupt_alpha(s, &ds.labels, 50, 7).unwrap()
        );
        assert_ne!(
            showns(&corrupt_alpha(s, &ds.labels, 50, 7).unwrap()),
            showns(&corrupt_alpha(s, &ds.labels, 50, 8).unwrap())
        );
        assert_eq!(
            showns(&corrupt_random(s, &ds.labels, 7)),
            showns(&corrupt_random(s, &ds.labels, 7))
        );
        assert_eq!(
            showns(&corrupt_shuffle(s, 7).unwrap()),
            showns(&corrupt_shuffle(s, 7).unwrap())
        );
    }

    fn verbalizer(n: usize) -> Verbalizer {
        Verbalizer::new((0..n).map(|i| format!("tok{i}")).collect()).unwrap()
    }

    #[test]
    fn identity_renaming_returns_verbalizer_tokens() {
        let v = verbalizer(3);
        let r = apply_prior_free(&v, RenamingScheme::Identity, 99, None).unwrap();
        assert_eq!(r.mapping(), v.tokens());
    }

    #[test]
    fn alphabet_renaming_is_a_seeded_bijection() {
        let v = verbalizer(4);
        let r = apply_prior_free(&v, RenamingScheme::Alphabet, 1, None).unwrap();
        let mut tokens: Vec<&str> = (0..4).map(|c| r.token(c)).collect();
        tokens.sort_unstable();
        assert_eq!(tokens, ["a", "b", "c", "d"]);

        // Some seed pair must disagree on the assignment.
        let r2 = apply_prior_free(&v, RenamingScheme::Alphabet, 2, None).unwrap();
        let r3 = apply_prior_free(&v, RenamingScheme::Alphabet, 3, None).unwrap();
        assert!(r.mapping() != r2.mapping() || r2.mapping() != r3.mapping());

        assert!(matches!(
            apply_prior_free(&verbalizer(27), RenamingScheme::Alphabet, 0, None),
            Err(Error::AlphabetExhausted(27))
        ));
    }

    #[test]
    fn numeric_renaming_never_uses_zero() {
        let v = verbalizer(10);
        let r = apply_prior_free(&v, RenamingScheme::Numeric, 4, None).unwrap();
        let mut tokens: Vec<&str> = (0..10).map(|c| r.token(c)).collect();
        assert!(!tokens.contains(&"0"));
        tokens.sort_unstable();
        let mut expected: Vec<String> = (1..=10).map(|i| i.to_string()).collect();
        expected.sort_unstable();
        assert_eq!(tokens, expected);
    }

    #[test]
    fn random_token_renaming_draws_distinct_pool_entries() {
        let v = verbalizer(3);
        let pool: Vec<String> = ["oak", "elm", "ash", "fir", "oak"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let r = apply_prior_free(&v, RenamingScheme::RandomToken, 0, Some(&pool)).unwrap();
        let tokens: Vec<&str> = (0..3).map(|c| r.token(c)).collect();
        let set: std::collections::HashSet<&str> = tokens.iter().copied().collect();
        assert_eq!(set.len(), 3);
        assert!(tokens.iter().all(|t| pool.iter().any(|p| p == t)));

        // Pool has 2 distinct tokens after deduplication, 3 needed.
        let small: Vec<String> = ["oak", "elm", "oak"].iter().map(|s| s.to_string()).collect();
        assert!(matches!(
            apply_prior_free(&v, RenamingScheme::RandomToken, 0, Some(&small)),
            Err(Error::PoolTooSmall { available: 2, needed: 3 })
        ));
        assert!(matches!(
            apply_prior_free(&v, RenamingScheme::RandomToken, 0, None),
            Err(Error::PoolTooSmall { .. })
        ));
    }

    #[test]
    fn renaming_is_deterministic_per_seed() {
        let v = verbalizer(5);
        for scheme in [RenamingScheme::Alphabet, RenamingScheme::Numeric] {
            let a = apply_prior_free(&v, scheme, 11, None).unwrap();
            let b = apply_prior_free(&v, scheme, 11, None).unwrap();
            assert_eq!(a, b);
        }
    }
}
