//! Contextual calibration: estimate the bias a demo set induces by scoring
//! content-free inputs, then divide it out. With demos all labeled the
//! same way, the raw scores lean to that label on any input; calibration
//! restores the topical signal.
//!
//!     cargo run -p demosense --example calibration

use demosense::corpus::{Example, Verbalizer};
use demosense::demos::DemoSet;
use demosense::modelio::SyntheticTopicModel;
use demosense::prompting::PromptTemplate;
use demosense::scoring::{
    apply_calibration, compute_cbu_calibration, predict_label, probabilities, score_direct,
    CONTENT_FREE_INPUTS,
};

fn main() -> demosense::Result<()> {
    let topics = vec!["sports".to_string(), "finance".to_string()];
    let labels = vec!["games".to_string(), "money".to_string()];
    let model = SyntheticTopicModel::new(topics, labels.clone())?;
    let template = PromptTemplate::minimal(Verbalizer::new(labels)?, false);

    let ex = |text: &str, gold: usize| Example {
        text: text.into(),
        text2: None,
        gold,
    };
    // Every shown label is "money": a heavily biased context.
    let demos = DemoSet::uncorrupted(&[
        ex("sports roundup", 1),
        ex("sports final score", 1),
        ex("sports highlights", 1),
        ex("finance briefing", 1),
    ]);

    let calibration = compute_cbu_calibration(
        &model,
        &template,
        &demos,
        None,
        &CONTENT_FREE_INPUTS,
    )?;
    println!("content-free bias vector: {:?}", calibration.p_cf);

    // The single finance demo still says "money", so the raw scores pick
    // class 1; dividing out the bias flips the call.
    let test = ex("finance outlook", 0);
    let raw = score_direct(&model, &template, &demos, None, &test)?;
    let calibrated = apply_calibration(&raw, &calibration)?;
    println!("raw probabilities:        {:?}", probabilities(&raw));
    println!("calibrated probabilities: {:?}", probabilities(&calibrated));
    println!(
        "prediction: raw = class {}, calibrated = class {}",
        predict_label(&raw),
        predict_label(&calibrated)
    );
    assert_eq!(predict_label(&raw), 1);
    assert_eq!(predict_label(&calibrated), 0);

    let total: f64 = probabilities(&calibrated).iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    println!("calibrated vector sums to 1");
    Ok(())
}
