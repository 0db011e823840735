//! Serves the synthetic backend over the wire protocol on a loopback port,
//! scores against it with the HTTP client, and checks the round trip
//! matches in-process scoring bit for bit.
//!
//!     cargo run -p demosense --example serve_and_score

use demosense::corpus::Example;
use demosense::demos::DemoSet;
use demosense::modelio::{serve_mock, Backend, EndpointConfig, HttpBackend, ScoringRequest, SyntheticTopicModel};
use demosense::prompting::PromptTemplate;
use demosense::scoring::score_direct;

fn main() -> demosense::Result<()> {
    let topics = vec!["sports".to_string(), "finance".to_string()];
    let labels = vec!["games".to_string(), "money".to_string()];
    let model = SyntheticTopicModel::new(topics, labels.clone())?;

    // Port 0 picks a free port; the server runs on a background thread.
    let server = serve_mock(model.clone(), 0)?;
    println!("serving at {}", server.base_url());

    let client = HttpBackend::new(&EndpointConfig::new(server.base_url()))?;

    // Raw wire call.
    let request = ScoringRequest::new("sports on sunday\ngames\n\nsports recap\n", " games");
    let over_wire = client.score(&request)?;
    let in_process = model.score(&request)?;
    println!(
        "single score: wire {:.6}, in-process {:.6}",
        over_wire.logprob, in_process.logprob
    );
    assert_eq!(over_wire.logprob.to_bits(), in_process.logprob.to_bits());

    // Batched wire call.
    let requests = vec![
        ScoringRequest::new("finance report\n", " games"),
        ScoringRequest::new("finance report\n", " money"),
    ];
    let batch = client.score_batch(&requests)?;
    assert_eq!(batch.len(), 2);
    println!("batch scores: {:?}", batch.iter().map(|r| r.logprob).collect::<Vec<_>>());

    // The client slots in anywhere the in-process backend does.
    let template = PromptTemplate::minimal(
        demosense::corpus::Verbalizer::new(labels)?,
        false,
    );
    let demos = DemoSet::uncorrupted(&[Example {
        text: "sports on sunday".into(),
        text2: None,
        gold: 0,
    }]);
    let test = Example { text: "sports recap".into(), text2: None, gold: 0 };
    let wire_scores = score_direct(&client, &template, &demos, None, &test)?;
    let local_scores = score_direct(&model, &template, &demos, None, &test)?;
    assert_eq!(wire_scores.scores, local_scores.scores);
    println!("pipeline scores agree over the wire: {:?}", wire_scores.scores);

    server.shutdown();
    println!("server stopped");
    Ok(())
}
