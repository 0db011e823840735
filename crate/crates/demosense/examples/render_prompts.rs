//! Renders the three prompt layouts from the pinned grammar: direct
//! (input then label), channel (label then input, one prompt per class),
//! and zero-shot. Also shows a template tier with decoration and how
//! separator collisions in raw text are escaped.
//!
//!     cargo run -p demosense --example render_prompts

use demosense::corpus::{Example, Verbalizer};
use demosense::demos::DemoSet;
use demosense::prompting::PromptTemplate;

fn show(title: &str, prompt: &str) {
    println!("--- {title}\n{}", prompt.replace('\n', "\\n\n"));
}

fn main() -> demosense::Result<()> {
    let verbalizer = Verbalizer::new(vec!["negative".into(), "positive".into()])?;
    let template = PromptTemplate::minimal(verbalizer, false);

    let demos = DemoSet::uncorrupted(&[
        Example { text: "great film".into(), text2: None, gold: 1 },
        Example { text: "dull plot".into(), text2: None, gold: 0 },
    ]);
    let test = Example { text: "watchable but thin".into(), text2: None, gold: 0 };

    let direct = template.render_direct(&demos, None, &test)?;
    show("direct layout, minimal tier", &direct.prompt);
    println!("candidates scored as continuations:");
    for c in &direct.candidates {
        println!("  label {} -> {:?}", c.label, c.continuation);
    }

    // Channel scoring conditions on the label and scores the input, so
    // each class gets its own prompt; only the final label block differs.
    let channel = template.render_channel(&demos, None, &test)?;
    for p in &channel {
        show(
            &format!("channel layout, candidate {:?}", p.candidates[0].continuation),
            &p.prompt,
        );
    }

    let zero = template.render_zero_shot(None, &test)?;
    show("zero-shot", &zero.prompt);

    // A decorated tier wraps the input and prefixes the label slot; the
    // candidate continuation stays a single leading-space token.
    let manual = PromptTemplate {
        input_pattern: "Review: {input}".into(),
        label_prefix: "Sentiment:".into(),
        ..template.clone()
    };
    manual.validate(false)?;
    let decorated = manual.render_direct(&demos, None, &test)?;
    show("direct layout, decorated tier", &decorated.prompt);

    // Raw text may contain the pair separator; escaping collapses it so
    // block boundaries stay unambiguous.
    let tricky = Example {
        text: "line one\n\nline two\n".into(),
        text2: None,
        gold: 0,
    };
    println!("--- escaped input: {:?}", template.render_input(&tricky)?);
    Ok(())
}
