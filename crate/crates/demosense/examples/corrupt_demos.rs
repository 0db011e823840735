//! Walks the demonstration corruption protocols over one fixed sample:
//! graded gold fraction, i.i.d. random labels, and a label shuffle that
//! preserves the multiset.
//!
//!     cargo run -p demosense --example corrupt_demos

use demosense::corpus::sample_examples;
use demosense::demos::{correct_label_count, corrupt_alpha, corrupt_random, corrupt_shuffle, DemoSet};
use demosense::runner::synthetic::{build_dataset, SyntheticSpec};

fn shown_row(set: &DemoSet, names: &[String]) -> String {
    set.pairs
        .iter()
        .map(|p| {
            if p.shown == p.example.gold {
                names[p.shown].clone()
            } else {
                format!("{}*", names[p.shown])
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> demosense::Result<()> {
    let dataset = build_dataset(&SyntheticSpec {
        topics: 6,
        classes: 3,
        train: 30,
        eval: 6,
        ..SyntheticSpec::default()
    })?;
    let names = dataset.labels.names().to_vec();
    let k = 8;
    let seed = 7;
    let sampled = sample_examples(&dataset, k, seed)?;

    println!("gold labels:  {}", shown_row(&DemoSet::uncorrupted(&sampled), &names));
    println!();

    // Alpha-percent corruption keeps an exact count of gold labels; the
    // replacement for a corrupted pair is never the gold label itself.
    println!("graded corruption (seed {seed}, * marks a corrupted label):");
    for alpha in [0u8, 25, 50, 75, 100] {
        let set = corrupt_alpha(&sampled, &dataset.labels, alpha, seed)?;
        assert_eq!(set.correct_count(), correct_label_count(k, alpha));
        println!(
            "  alpha={alpha:3}  {}/{k} gold   {}",
            set.correct_count(),
            shown_row(&set, &names)
        );
    }

    // Random labels are drawn uniformly over all classes, so some pairs
    // stay accidentally correct.
    println!("\ni.i.d. random labels over 3 seeds:");
    for seed in 0..3 {
        let set = corrupt_random(&sampled, &dataset.labels, seed);
        println!(
            "  seed {seed}  {}/{k} gold   {}",
            set.correct_count(),
            shown_row(&set, &names)
        );
    }

    // Shuffling permutes the gold labels, keeping the class histogram.
    println!("\nshuffled labels over 3 seeds (multiset preserved):");
    for seed in 0..3 {
        let set = corrupt_shuffle(&sampled, seed)?;
        let mut gold: Vec<usize> = set.pairs.iter().map(|p| p.example.gold).collect();
        let mut shown: Vec<usize> = set.pairs.iter().map(|p| p.shown).collect();
        gold.sort_unstable();
        shown.sort_unstable();
        assert_eq!(gold, shown);
        println!(
            "  seed {seed}  {}/{k} gold   {}",
            set.correct_count(),
            shown_row(&set, &names)
        );
    }
    Ok(())
}
