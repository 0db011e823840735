//! Scores prompts with the in-process synthetic backend and checks the
//! numbers against the model's closed form: Laplace-smoothed label counts
//! among demos sharing the test input's topic.
//!
//!     cargo run -p demosense --example mock_scoring

use demosense::corpus::Example;
use demosense::demos::DemoSet;
use demosense::modelio::SyntheticTopicModel;
use demosense::prompting::PromptTemplate;
use demosense::scoring::{predict_label, probabilities, score_channel, score_direct};

fn main() -> demosense::Result<()> {
    let topics = vec!["sports".to_string(), "finance".to_string()];
    let labels = vec!["games".to_string(), "money".to_string()];
    let model = SyntheticTopicModel::new(topics, labels.clone())?;
    let template = PromptTemplate::minimal(
        demosense::corpus::Verbalizer::new(labels.clone())?,
        false,
    );

    let ex = |text: &str, gold: usize| Example {
        text: text.into(),
        text2: None,
        gold,
    };
    let demos = DemoSet::uncorrupted(&[
        ex("sports on sunday", 0),
        ex("sports annual final", 0),
        ex("finance quarterly report", 1),
        ex("sports injury list", 0),
    ]);
    let test = ex("sports recap", 0);

    // Direct: p(label | topic) from demos of the same topic. Three sports
    // demos all labeled "games": (1+3)/(2+3) vs (1+0)/(2+3).
    let direct = score_direct(&model, &template, &demos, None, &test)?;
    println!("direct log scores:   {:?}", direct.scores);
    println!("direct probabilities: {:?}", probabilities(&direct));
    assert!((direct.scores[0] - (4.0f64 / 5.0).ln()).abs() < 1e-12);
    assert!((direct.scores[1] - (1.0f64 / 5.0).ln()).abs() < 1e-12);
    assert_eq!(predict_label(&direct), 0);

    // Channel: p(input topic | label) from demos sharing the candidate
    // label. "games" saw sports 3 times: (1+3)/(2+3); "money" never:
    // (1+0)/(2+1).
    let channel = score_channel(&model, &template, &demos, None, &test)?;
    println!("channel log scores:  {:?}", channel.scores);
    assert!((channel.scores[0] - (4.0f64 / 5.0).ln()).abs() < 1e-12);
    assert!((channel.scores[1] - (1.0f64 / 3.0).ln()).abs() < 1e-12);
    assert_eq!(predict_label(&channel), 0);

    // A test input with no known topic falls back to the global shown-label
    // counts: (1+3)/(2+4) vs (1+1)/(2+4).
    let off_topic = score_direct(&model, &template, &demos, None, &ex("weather tomorrow", 0))?;
    println!("off-topic fallback:  {:?}", probabilities(&off_topic));
    assert!((off_topic.scores[0] - (4.0f64 / 6.0).ln()).abs() < 1e-12);

    println!("all closed-form checks passed");
    Ok(())
}
