//! Evaluate the hybrid pipeline on the held-out split of the bundled corpus.

use robocmd::assets;
use robocmd::evaluator::{evaluate, render_report, split_corpus, EvalOptions, ReportFormat};
use robocmd::llm::StubBackend;
use robocmd::pipeline::{run_hybrid, PipelineConfig};

fn main() {
    let corpus = assets::corpus();
    let (train, test) = split_corpus(&corpus, 0.2, 7).unwrap();
    println!("{} train / {} test\n", train.len(), test.len());

    let schema = assets::schema();
    let backend = StubBackend::new(assets::stub_rules());
    let config = PipelineConfig::default();
    let options = EvalOptions {
        label: "hybrid".into(),
        jobs: 4,
        ..Default::default()
    };
    let report = evaluate(&test, |s| run_hybrid(s, &backend, &schema, &config), &schema, &options).unwrap();
    print!("{}", render_report(&report, ReportFormat::Table));
}
