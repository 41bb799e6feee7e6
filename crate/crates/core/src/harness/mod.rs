//! Experiment harness: corpus generation, control-vs-treatment
//! evaluation with OR-combined verdicts, the 80% site coverage filter,
//! and report rendering.

mod corpus;
mod eval;
mod pipeline;
mod report;

pub use corpus::{generate_corpus, CorpusSpec, GeneratedCorpus, LabeledScript, PIPE_SCRIPT_RATE};
pub use eval::{
    combine_or, coverage_filter, evaluate, ConfusionMatrix, ControlScriptEval, DiscardRecord,
    EvalError, EvalMetrics, EvalOutcome, FlipCounts, FlipDirection, FlipRecord, ModelKind,
    ModelTriple, NodeDelta, ObfuscatorEval, Ratio, RowMetrics, SiteBundle, TreatmentScriptEval,
};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineError, PipelineOutcome};
pub use report::{render_text, CorpusSummary, EvalReport, REPORT_FORMAT_VERSION};
