//! Randomized invariants. Where the unit tests pin single values, these
//! assert the laws that must hold for every input: exact correctness
//! counts, multiset preservation, renaming bijectivity, grammar round
//! trips, and agreement between the regression and correlation paths.

use proptest::prelude::*;

use demosense::corpus::{Example, LabelSpace, Verbalizer};
use demosense::demos::{
    apply_prior_free, correct_label_count, corrupt_alpha, corrupt_random, corrupt_shuffle,
    CorruptionMode, DemoPair, DemoSet, RenamingScheme,
};
use demosense::metrics::{compute_gler, fit_sensitivity, pearson};
use demosense::modelio::{SegmentedPrompt, SyntheticTopicModel};
use demosense::prompting::PromptTemplate;
use demosense::scoring::{
    apply_calibration, predict_label, probabilities, CalibrationVector, LabelScores, Method,
};

fn label_space(c: usize) -> LabelSpace {
    LabelSpace::new((0..c).map(|i| format!("l{i}")).collect()).unwrap()
}

fn examples_from(golds: &[usize]) -> Vec<Example> {
    golds
        .iter()
        .enumerate()
        .map(|(j, &gold)| Example { text: format!("item {j}"), text2: None, gold })
        .collect()
}

fn golds_strategy(max_k: usize) -> impl Strategy<Value = (usize, Vec<usize>)> {
    (2..8usize).prop_flat_map(move |c| {
        (Just(c), proptest::collection::vec(0..c, 0..max_k))
    })
}

proptest! {
    #[test]
    fn graded_count_is_exact_and_monotone(k in 0..=64usize, a1 in 0..=100u8, a2 in 0..=100u8) {
        let count = correct_label_count(k, a1);
        let oracle = (k as f64 * f64::from(a1) / 100.0).round() as usize;
        prop_assert_eq!(count, oracle);
        prop_assert!(count <= k);
        if a1 <= a2 {
            prop_assert!(count <= correct_label_count(k, a2));
        }
    }

    #[test]
    fn graded_corruption_keeps_examples_and_counts(
        (c, golds) in golds_strategy(48),
        alpha in 0..=100u8,
        seed in 0..1_000u64,
    ) {
        let labels = label_space(c);
        let sampled = examples_from(&golds);
        let set = corrupt_alpha(&sampled, &labels, alpha, seed).unwrap();
        prop_assert_eq!(set.k(), sampled.len());
        prop_assert_eq!(set.correct_count(), correct_label_count(sampled.len(), alpha));
        for (pair, original) in set.pairs.iter().zip(&sampled) {
            prop_assert_eq!(&pair.example, original);
            prop_assert!(pair.shown < c);
        }
        prop_assert_eq!(set.provenance.mode, CorruptionMode::AlphaCorrect);
        prop_assert_eq!(set.provenance.alpha, Some(alpha));
    }

    #[test]
    fn shuffle_preserves_the_label_multiset((c, golds) in golds_strategy(48), seed in 0..1_000u64) {
        prop_assume!(golds.len() >= 2);
        let _ = c;
        let sampled = examples_from(&golds);
        let set = corrupt_shuffle(&sampled, seed).unwrap();
        let mut shown: Vec<usize> = set.pairs.iter().map(|p| p.shown).collect();
        let mut gold = golds.clone();
        shown.sort_unstable();
        gold.sort_unstable();
        prop_assert_eq!(shown, gold);
        for (pair, original) in set.pairs.iter().zip(&sampled) {
            prop_assert_eq!(&pair.example, original);
        }
    }

    #[test]
    fn random_labels_stay_in_range((c, golds) in golds_strategy(32), seed in 0..1_000u64) {
        let labels = label_space(c);
        let sampled = examples_from(&golds);
        let set = corrupt_random(&sampled, &labels, seed);
        prop_assert_eq!(set.k(), sampled.len());
        for pair in &set.pairs {
            prop_assert!(pair.shown < c);
        }
        prop_assert_eq!(set.provenance.mode, CorruptionMode::RandomLabel);
    }

    #[test]
    fn renaming_is_a_bijection(
        c in 2..=10usize,
        seed in 0..1_000u64,
        which in 0..4usize,
    ) {
        let scheme = [
            RenamingScheme::Identity,
            RenamingScheme::Alphabet,
            RenamingScheme::Numeric,
            RenamingScheme::RandomToken,
        ][which];
        let verbalizer = Verbalizer::new((0..c).map(|i| format!("name{i}")).collect()).unwrap();
        let pool: Vec<String> = (0..c + 6).map(|i| format!("tok{i}")).collect();
        let renaming = apply_prior_free(&verbalizer, scheme, seed, Some(&pool)).unwrap();
        prop_assert_eq!(renaming.len(), c);

        let mut surfaces: Vec<&str> = renaming.mapping().iter().map(String::as_str).collect();
        surfaces.sort_unstable();
        surfaces.dedup();
        prop_assert_eq!(surfaces.len(), c, "classes collided under {:?}", scheme);

        match scheme {
            RenamingScheme::Identity => prop_assert_eq!(renaming.mapping(), verbalizer.tokens()),
            RenamingScheme::Alphabet => {
                for t in renaming.mapping() {
                    prop_assert!(t.len() == 1 && t.chars().all(|ch| ch.is_ascii_lowercase()));
                }
            }
            RenamingScheme::Numeric => {
                for t in renaming.mapping() {
                    prop_assert!(t != "0");
                    let v: usize = t.parse().unwrap();
                    prop_assert!((1..=c).contains(&v));
                }
            }
            RenamingScheme::RandomToken => {
                for t in renaming.mapping() {
                    prop_assert!(pool.iter().any(|p| p == t));
                }
            }
        }
    }

    /// Rendering then segmenting recovers exactly the escaped pairs, for
    /// arbitrary texts including embedded separators.
    #[test]
    fn rendered_prompts_segment_back_to_the_escaped_pairs(
        texts in proptest::collection::vec("[ -~\\n]{0,40}", 0..5),
        shown in proptest::collection::vec(0..2usize, 0..5),
        test_text in "[ -~\\n]{0,40}",
    ) {
        let template = PromptTemplate::minimal(
            Verbalizer::new(vec!["refuse".into(), "accept".into()]).unwrap(),
            false,
        );
        let model = SyntheticTopicModel::new(
            vec!["tt0".into(), "tt1".into()],
            vec!["refuse".into(), "accept".into()],
        )
        .unwrap();

        let mut set = DemoSet::empty();
        for (text, &label) in texts.iter().zip(&shown) {
            set.pairs.push(DemoPair {
                example: Example { text: text.clone(), text2: None, gold: label },
                shown: label,
            });
        }
        let test = Example { text: test_text, text2: None, gold: 0 };

        // A test input that collapses to exactly a label token is the one
        // string the bare grammar cannot distinguish from a channel slot.
        let escaped_test = template.render_input(&test).unwrap();
        prop_assume!(escaped_test != "refuse" && escaped_test != "accept");

        let expected: Vec<(String, String)> = set
            .pairs
            .iter()
            .map(|p| {
                (
                    template.render_input(&p.example).unwrap(),
                    template.verbalizer.token(p.shown).to_string(),
                )
            })
            .collect();

        let direct = template.render_direct(&set, None, &test).unwrap();
        match model.segment(&direct.prompt).unwrap() {
            SegmentedPrompt::Direct { demos, test_input } => {
                prop_assert_eq!(demos, expected.clone());
                prop_assert_eq!(test_input, escaped_test);
            }
            other => prop_assert!(false, "direct prompt segmented as {:?}", other),
        }

        // The label-first layout cannot carry a demo whose input escapes
        // to empty; it must refuse rather than render ambiguously.
        if expected.iter().any(|(input, _)| input.is_empty()) {
            prop_assert!(template.render_channel(&set, None, &test).is_err());
            return Ok(());
        }
        let channel = template.render_channel(&set, None, &test).unwrap();
        let swapped: Vec<(String, String)> =
            expected.iter().map(|(i, l)| (l.clone(), i.clone())).collect();
        for (class, rendered) in channel.iter().enumerate() {
            match model.segment(&rendered.prompt).unwrap() {
                SegmentedPrompt::Channel { demos, conditioning_label } => {
                    prop_assert_eq!(demos, swapped.clone());
                    prop_assert_eq!(conditioning_label, template.verbalizer.token(class));
                }
                other => prop_assert!(false, "channel prompt segmented as {:?}", other),
            }
        }
    }

    /// Simple regression and correlation agree: the fit's coefficient of
    /// determination is the squared correlation of the same points.
    #[test]
    fn fit_r_squared_matches_squared_pearson(
        n in 3..20usize,
        jitter in proptest::collection::vec(0.0..0.5f64, 20),
        ys in proptest::collection::vec(0.0..1.0f64, 20),
    ) {
        let points: Vec<(f64, f64)> = (0..n).map(|i| (i as f64 + jitter[i], ys[i])).collect();
        let mean = points.iter().map(|p| p.1).sum::<f64>() / n as f64;
        let spread: f64 = points.iter().map(|p| (p.1 - mean) * (p.1 - mean)).sum();
        prop_assume!(spread > 1e-6);

        let fit = fit_sensitivity(&points).unwrap();
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let yv: Vec<f64> = points.iter().map(|p| p.1).collect();
        let r = pearson(&xs, &yv).unwrap().r;
        prop_assert!(
            (fit.r_squared - r * r).abs() <= 1e-9,
            "r_squared {} vs r^2 {}",
            fit.r_squared,
            r * r
        );
    }

    #[test]
    fn gler_is_clipped_and_degeneracy_flagged(
        y_gt in 0.0..=1.0f64,
        y_rl in 0.0..=1.0f64,
        y_zero in 0.0..=1.0f64,
    ) {
        let gler = compute_gler(y_gt, y_rl, y_zero);
        if y_gt <= y_zero {
            prop_assert!(gler.degenerate);
            prop_assert!(gler.value.is_none());
        } else {
            prop_assert!(!gler.degenerate);
            let v = gler.value.unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!((v - gler.raw.clamp(0.0, 1.0)).abs() <= 1e-15);
        }
    }

    #[test]
    fn probabilities_form_a_distribution_and_keep_the_argmax(
        scores in proptest::collection::vec(-30.0..0.0f64, 1..8),
    ) {
        let raw = LabelScores { scores: scores.clone(), method: Method::Direct, calibrated: false };
        let probs = probabilities(&raw);
        let total: f64 = probs.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        for p in &probs {
            prop_assert!(*p > 0.0);
        }

        let best = predict_label(&raw);
        for (i, &s) in scores.iter().enumerate() {
            prop_assert!(s <= scores[best] );
            if s == scores[best] {
                prop_assert!(best <= i, "ties must go to the lowest index");
            }
        }

        let uniform = CalibrationVector { p_cf: vec![1.0 / scores.len() as f64; scores.len()] };
        let calibrated = apply_calibration(&raw, &uniform).unwrap();
        prop_assert_eq!(predict_label(&calibrated), best);
    }
}
