//! All three modes on the same sentences, using the offline keyword backend.
//!
//!     cargo run --example stub_pipeline -- "grab the apple with the gripper"

use robocmd::assets;
use robocmd::llm::StubBackend;
use robocmd::pipeline::{run, Mode, PipelineConfig};

fn main() {
    let mut sentences: Vec<String> = std::env::args().skip(1).collect();
    if sentences.is_empty() {
        sentences = vec![
            "grab the apple".into(),
            "look at the door".into(),
            "please open the fridge".into(),
        ];
    }
    let grammar = assets::grammar();
    let schema = assets::schema();
    let backend = StubBackend::new(assets::stub_rules());
    for s in &sentences {
        println!("{s}");
        for mode in [Mode::NluOnly, Mode::LlmOnly, Mode::Hybrid] {
            let config = PipelineConfig { mode, ..Default::default() };
            let r = run(s, Some(&backend), &grammar, &schema, &config).unwrap();
            println!("  {:<6} {:>2} attempt(s)  {}", mode.as_str(), r.attempts_used, r.final_frames.to_json());
        }
    }
}
