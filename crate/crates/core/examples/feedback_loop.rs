//! The hybrid retry loop driven by a scripted backend: the first reply uses a
//! frame name the schema does not know, the second is corrected.

use robocmd::assets;
use robocmd::llm::ReplayBackend;
use robocmd::pipeline::{run_hybrid, PipelineConfig};

fn main() {
    let backend = ReplayBackend::new([
        r#"{"frames":[{"frame":"Fetch","elements":{"Theme":"the box"}}]}"#,
        r#"{"frames":[{"frame":"Bringing","elements":{"Theme":"the box"}}]}"#,
    ]);
    let schema = assets::schema();
    let result = run_hybrid("fetch the box", &backend, &schema, &PipelineConfig::default()).unwrap();
    for (i, attempt) in result.transcript.iter().enumerate() {
        println!("--- attempt {} ({:?})", i + 1, attempt.report.status);
        if let Some(p) = &attempt.prompt {
            println!("{}", p.user);
        }
        println!(">>> {}", attempt.raw_response);
    }
    println!("{:?}: {}", result.outcome, result.final_frames.to_json());
}
