//! Corpus loading, splitting, metrics and reports.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::frames::{self, FrameSet};
use crate::pipeline::{Outcome, PipelineError, PipelineResult};
use crate::schema::FrameSchema;
use crate::validator::validate_strict;

pub const DEFAULT_THRESHOLD: f64 = 0.75;
pub const EMPTY_POPULATION_NOTE: &str = "empty population: no successful outputs, similarity reported as 0";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    /// 1-based line number in the corpus file.
    pub id: usize,
    pub instruction: String,
    pub reference: FrameSet,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
}

#[derive(Deserialize)]
struct RawRecord {
    instruction: Option<String>,
    output: Option<Value>,
}

fn parse_line(line: usize, text: &str) -> Result<CorpusRecord, CorpusError> {
    let err = |message: String| CorpusError::Line { line, message };
    let raw: RawRecord = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
    let instruction = raw.instruction.ok_or_else(|| err("missing field `instruction`".into()))?;
    if instruction.trim().is_empty() {
        return Err(err("empty instruction".into()));
    }
    let reference = match raw.output.ok_or_else(|| err("missing field `output`".into()))? {
        Value::String(s) => frames::from_json_str(&s).map(|d| d.frames).map_err(|e| err(format!("output: {e}")))?,
        v @ Value::Object(_) => serde_json::from_value::<FrameSet>(v).map_err(|e| err(format!("output: {e}")))?,
        _ => return Err(err("output must be a JSON string or object".into())),
    };
    Ok(CorpusRecord {
        id: line,
        instruction,
        reference,
    })
}

/// JSONL text to records; blank lines are skipped, the first bad line rejects the corpus.
pub fn parse_corpus(text: &str) -> Result<Vec<CorpusRecord>, CorpusError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_line(i + 1, l))
        .collect()
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusRecord>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("test fraction must be strictly between 0 and 1, got {0}")]
pub struct SplitError(pub f64);

/// Number of test records for `n` records at `fraction`: the ceiling of
/// `n * fraction`, guarded against products like `30 * 0.1` landing just
/// above an integer.
pub fn test_size(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction) - 1e-9).ceil().max(0.0) as usize
}

/// Seeded shuffle into (train, test). Both halves keep corpus order.
pub fn split_corpus<T: Clone>(records: &[T], test_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>), SplitError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(SplitError(test_fraction));
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = test_size(records.len(), test_fraction);
    let test_idx: BTreeSet<usize> = order[..k].iter().copied().collect();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, r) in records.iter().enumerate() {
        if test_idx.contains(&i) {
            test.push(r.clone());
        } else {
            train.push(r.clone());
        }
    }
    Ok((train, test))
}

/// Same frames in the same order, each with the same set of elements.
pub fn exact_match(pred: &FrameSet, reference: &FrameSet) -> bool {
    pred.len() == reference.len()
        && pred.frames.iter().zip(&reference.frames).all(|(a, b)| {
            let ea: BTreeSet<_> = a.elements().iter().collect();
            let eb: BTreeSet<_> = b.elements().iter().collect();
            a.name() == b.name() && ea == eb
        })
}

/// (|A ∩ B|, |A ∪ B|) over the flattened key-value pairs.
pub fn similarity_ratio(pred: &FrameSet, reference: &FrameSet) -> (usize, usize) {
    let a = pred.kv_pairs();
    let b = reference.kv_pairs();
    let inter = a.intersection(&b).count();
    (inter, a.len() + b.len() - inter)
}

/// Jaccard index of the key-value pair sets; two empty sets score 1.
pub fn json_similarity(pred: &FrameSet, reference: &FrameSet) -> f64 {
    match similarity_ratio(pred, reference) {
        (_, 0) => 1.0,
        (i, u) => i as f64 / u as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordOutcome {
    Success,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordResult {
    pub id: usize,
    pub outcome: RecordOutcome,
    pub exact_match: bool,
    /// 0 for failed records.
    pub similarity: f64,
    pub attempts_used: usize,
    /// Whether the final frames pass strict validation.
    pub strict_valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BucketCounts {
    pub exact_match: usize,
    pub sim_at_least_threshold: usize,
    pub sim_below_threshold: usize,
    pub failed: usize,
}

impl BucketCounts {
    pub fn total(&self) -> usize {
        self.exact_match + self.sim_at_least_threshold + self.sim_below_threshold + self.failed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub label: String,
    pub total: usize,
    pub success_count: usize,
    pub em_count: usize,
    pub failed_count: usize,
    pub strict_valid_count: usize,
    pub success_rate: f64,
    /// Exact matches over all records.
    pub em_rate: f64,
    /// Exact matches over successful records.
    pub em_rate_over_successes: f64,
    pub failed_rate: f64,
    /// Mean similarity over successful records.
    pub mean_similarity: f64,
    /// Mean similarity over all records, failures counting 0.
    pub mean_similarity_all: f64,
    pub threshold: f64,
    pub bucket_counts: BucketCounts,
    /// Over successful records; absent when there are none.
    pub similarity_quartiles: Option<Quartiles>,
    pub notes: Vec<String>,
    pub per_record: Vec<RecordResult>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn ratio(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// Scores one pipeline result against its reference.
pub fn score(id: usize, result: &PipelineResult, reference: &FrameSet, schema: &FrameSchema) -> RecordResult {
    let success = result.outcome == Outcome::ValidCommand;
    RecordResult {
        id,
        outcome: if success {
            RecordOutcome::Success
        } else {
            RecordOutcome::Failed
        },
        exact_match: success && exact_match(&result.final_frames, reference),
        similarity: if success {
            json_similarity(&result.final_frames, reference)
        } else {
            0.0
        },
        attempts_used: result.attempts_used,
        strict_valid: !result.final_frames.is_empty() && validate_strict(&result.final_frames, schema).is_valid(),
    }
}

/// Folds per-record results (in any order) into a report.
pub fn aggregate(label: &str, mut per_record: Vec<RecordResult>, threshold: f64) -> EvalReport {
    per_record.sort_by_key(|r| r.id);
    let total = per_record.len();
    let mut buckets = BucketCounts::default();
    let mut sims = Vec::new();
    let mut strict_valid_count = 0;
    for r in &per_record {
        strict_valid_count += usize::from(r.strict_valid);
        match r.outcome {
            RecordOutcome::Failed => buckets.failed += 1,
            RecordOutcome::Success => {
                sims.push(r.similarity);
                if r.exact_match {
                    buckets.exact_match += 1;
                } else if r.similarity >= threshold {
                    buckets.sim_at_least_threshold += 1;
                } else {
                    buckets.sim_below_threshold += 1;
                }
            }
        }
    }
    let success_count = sims.len();
    let sum: f64 = sims.iter().sum();
    let mut notes = Vec::new();
    let similarity_quartiles = if sims.is_empty() {
        notes.push(EMPTY_POPULATION_NOTE.to_string());
        None
    } else {
        sims.sort_by(f64::total_cmp);
        Some(Quartiles {
            q25: quantile(&sims, 0.25),
            median: quantile(&sims, 0.5),
            q75: quantile(&sims, 0.75),
        })
    };
    EvalReport {
        label: label.to_string(),
        total,
        success_count,
        em_count: buckets.exact_match,
        failed_count: buckets.failed,
        strict_valid_count,
        success_rate: ratio(success_count, total),
        em_rate: ratio(buckets.exact_match, total),
        em_rate_over_successes: ratio(buckets.exact_match, success_count),
        failed_rate: ratio(buckets.failed, total),
        mean_similarity: if success_count == 0 { 0.0 } else { sum / success_count as f64 },
        mean_similarity_all: if total == 0 { 0.0 } else { sum / total as f64 },
        threshold,
        bucket_counts: buckets,
        similarity_quartiles,
        notes,
        per_record,
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no records to evaluate")]
    EmptyCorpus,
    #[error("evaluation aborted at record {id}: {source}")]
    Aborted {
        id: usize,
        #[source]
        source: PipelineError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub label: String,
    pub threshold: f64,
    /// Worker threads; only use more than 1 with a concurrency-capable backend.
    pub jobs: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            label: "eval".into(),
            threshold: DEFAULT_THRESHOLD,
            jobs: 1,
        }
    }
}

/// Runs `runner` on every record and aggregates. The first infrastructure
/// failure aborts the evaluation.
pub fn evaluate<F>(
    records: &[CorpusRecord],
    runner: F,
    schema: &FrameSchema,
    options: &EvalOptions,
) -> Result<EvalReport, EvalError>
where
    F: Fn(&str) -> Result<PipelineResult, PipelineError> + Sync,
{
    if records.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let run_one = |rec: &CorpusRecord| {
        runner(&rec.instruction)
            .map(|res| score(rec.id, &res, &rec.reference, schema))
            .map_err(|source| EvalError::Aborted { id: rec.id, source })
    };
    let jobs = options.jobs.clamp(1, records.len());
    let results = if jobs == 1 {
        records.iter().map(run_one).collect::<Result<Vec<_>, _>>()?
    } else {
        let next = AtomicUsize::new(0);
        let out = Mutex::new(Vec::with_capacity(records.len()));
        let failure: Mutex<Option<EvalError>> = Mutex::new(None);
        std::thread::scope(|s| {
            for _ in 0..jobs {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= records.len() || failure.lock().expect("poisoned").is_some() {
                        break;
                    }
                    match run_one(&records[i]) {
                        Ok(r) => out.lock().expect("poisoned").push(r),
                        Err(e) => {
                            let mut f = failure.lock().expect("poisoned");
                            // keep the failure with the lowest record id for a stable message
                            match &*f {
                                Some(EvalError::Aborted { id, .. }) if *id <= records[i].id => {}
                                _ => *f = Some(e),
                            }
                        }
                    }
                });
            }
        });
        if let Some(e) = failure.into_inner().expect("poisoned") {
            return Err(e);
        }
        out.into_inner().expect("poisoned")
    };
    Ok(aggregate(&options.label, results, options.threshold))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Table,
    Json,
    Csv,
}

fn pct(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

/// Renders a report. Table: one row of percentages plus a bucket summary.
/// JSON: the full report. CSV: one row per record.
pub fn render_report(report: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["id", "outcome", "exact_match", "similarity", "attempts_used", "strict_valid"])
                .expect("in-memory write");
            for r in &report.per_record {
                let outcome = match r.outcome {
                    RecordOutcome::Success => "success",
                    RecordOutcome::Failed => "failed",
                };
                w.write_record([
                    r.id.to_string(),
                    outcome.to_string(),
                    r.exact_match.to_string(),
                    r.similarity.to_string(),
                    r.attempts_used.to_string(),
                    r.strict_valid.to_string(),
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
        }
        ReportFormat::Table => {
            let mut s = String::new();
            let width = report.label.len().max("Mode".len());
            let _ = writeln!(
                s,
                "{:<width$}  {:>14}  {:>11}  {:>15}  {:>13}",
                "Mode", "Success Output", "Exact Match", "JSON Similarity", "Failed Output"
            );
            let _ = writeln!(
                s,
                "{:<width$}  {:>14}  {:>11}  {:>15}  {:>13}",
                report.label,
                pct(report.success_rate),
                pct(report.em_rate),
                pct(report.mean_similarity),
                pct(report.failed_rate)
            );
            let b = &report.bucket_counts;
            let _ = writeln!(s);
            let _ = writeln!(s, "records: {}", report.total);
            let _ = writeln!(
                s,
                "buckets: exact_match={} sim>={t}={} sim<{t}={} failed={}",
                b.exact_match,
                b.sim_at_least_threshold,
                b.sim_below_threshold,
                b.failed,
                t = report.threshold
            );
            match &report.similarity_quartiles {
                Some(q) => {
                    let _ = writeln!(
                        s,
                        "similarity over successes: mean={} q25={} median={} q75={}",
                        pct(report.mean_similarity),
                        pct(q.q25),
                        pct(q.median),
                        pct(q.q75)
                    );
                }
                None => {
                    let _ = writeln!(s, "similarity over successes: n/a");
                }
            }
            let _ = writeln!(s, "similarity over all records: mean={}", pct(report.mean_similarity_all));
            for n in &report.notes {
                let _ = writeln!(s, "note: {n}");
            }
            s
        }
    }
}
