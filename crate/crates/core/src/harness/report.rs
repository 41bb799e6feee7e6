//! Evaluation report: versioned JSON plus a rendered text table with
//! one obfuscator per row and FPR/FNR/accuracy columns for the
//! combined, static, and dynamic models.

use crate::harness::eval::{EvalMetrics, ModelTriple, NodeDelta, ObfuscatorEval, Ratio};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub sites: u64,
    pub kept_sites: u64,
    pub discarded_sites: u64,
    pub control_scripts: u64,
    pub analysis_scripts: u64,
    pub fp_scripts: u64,
    pub nonfp_scripts: u64,
    pub unobfuscatable_pairs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub report_format_version: u32,
    pub seed: u64,
    pub trace_format_version: u32,
    pub registry_version: u32,
    pub model_format_version: u32,
    pub coverage_threshold: f64,
    pub corpus: CorpusSummary,
    /// Control-group verdicts scored against ground-truth labels.
    pub control: ModelTriple,
    pub obfuscators: BTreeMap<String, ObfuscatorEval>,
}

fn cell(m: &Option<Ratio>) -> String {
    match m {
        Some(r) => r.pct_string(),
        None => "n/a".to_string(),
    }
}

fn metric_cells(m: &EvalMetrics) -> String {
    format!(
        "{:>7} {:>7} {:>8}",
        cell(&m.fpr),
        cell(&m.fnr),
        cell(&m.accuracy)
    )
}

fn triple_cells(t: &ModelTriple) -> String {
    format!(
        "{} | {} | {}",
        metric_cells(&t.combined.metrics),
        metric_cells(&t.static_model.metrics),
        metric_cells(&t.dynamic_model.metrics)
    )
}

fn node_cells(d: &NodeDelta) -> String {
    format!(
        "nodes {:>7.1} -> {:>7.1}  (-{} / ={} / +{})",
        d.mean_before, d.mean_after, d.decreased, d.unchanged, d.increased
    )
}

/// Text table mirroring the classification-results layout.
pub fn render_text(report: &EvalReport) -> String {
    let mut out = String::new();
    let name_w = report
        .obfuscators
        .keys()
        .map(|k| k.len())
        .chain(["(control)".len()].into_iter())
        .max()
        .unwrap_or(12)
        .max(10);
    out.push_str(&format!(
        "{:name_w$} | {:>7} {:>7} {:>8} | {:>7} {:>7} {:>8} | {:>7} {:>7} {:>8}\n",
        "obfuscator", "c.FPR", "c.FNR", "c.Acc", "s.FPR", "s.FNR", "s.Acc", "d.FPR", "d.FNR",
        "d.Acc",
    ));
    out.push_str(&"-".repeat(name_w + 3 * 26 + 9));
    out.push('\n');
    out.push_str(&format!(
        "{:name_w$} | {}\n",
        "(control)",
        triple_cells(&report.control)
    ));
    for (name, eval) in &report.obfuscators {
        out.push_str(&format!(
            "{name:name_w$} | {}\n",
            triple_cells(&eval.truth_mode)
        ));
    }
    out.push('\n');
    out.push_str("paper mode (control verdicts as reference):\n");
    for (name, eval) in &report.obfuscators {
        out.push_str(&format!(
            "{name:name_w$} | {}\n",
            triple_cells(&eval.paper_mode)
        ));
    }
    out.push('\n');
    out.push_str("AST size and flips:\n");
    for (name, eval) in &report.obfuscators {
        let flips: u64 = eval
            .flip_counts
            .values()
            .map(|c| c.induced_false_negative + c.induced_false_positive)
            .sum();
        out.push_str(&format!(
            "{name:name_w$} | {}  flips: {flips}\n",
            node_cells(&eval.node_delta)
        ));
    }
    out.push('\n');
    out.push_str(&format!(
        "corpus: {} control scripts ({} fp / {} nonfp), {} analyzed; sites kept {}/{}; unobfuscatable pairs {}\n",
        report.corpus.control_scripts,
        report.corpus.fp_scripts,
        report.corpus.nonfp_scripts,
        report.corpus.analysis_scripts,
        report.corpus.kept_sites,
        report.corpus.sites,
        report.corpus.unobfuscatable_pairs,
    ));
    out.push_str(&format!("seed: {}\n", report.seed));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::eval::{ConfusionMatrix, FlipCounts, ModelKind, RowMetrics};

    fn row(tp: u64, tn: u64, fp: u64, fn_: u64) -> RowMetrics {
        ConfusionMatrix { tp, tn, fp, fn_ }.into()
    }

    fn triple() -> ModelTriple {
        ModelTriple {
            static_model: row(9, 90, 0, 1),
            dynamic_model: row(10, 89, 1, 0),
            combined: row(10, 89, 1, 0),
        }
    }

    #[test]
    fn text_table_has_one_row_per_obfuscator() {
        let mut obfuscators = BTreeMap::new();
        for name in ["beautify_fastdecode", "closure_like"] {
            let mut flip_counts = BTreeMap::new();
            flip_counts.insert(ModelKind::Static, FlipCounts::default());
            obfuscators.insert(
                name.to_string(),
                ObfuscatorEval {
                    truth_mode: triple(),
                    paper_mode: triple(),
                    flip_counts,
                    node_delta: NodeDelta {
                        scripts: 100,
                        mean_before: 250.0,
                        mean_after: 90.0,
                        decreased: 100,
                        increased: 0,
                        unchanged: 0,
                    },
                },
            );
        }
        let report = EvalReport {
            report_format_version: REPORT_FORMAT_VERSION,
            seed: 7,
            trace_format_version: 1,
            registry_version: 1,
            model_format_version: 1,
            coverage_threshold: 0.8,
            corpus: CorpusSummary {
                sites: 100,
                kept_sites: 98,
                discarded_sites: 2,
                control_scripts: 550,
                analysis_scripts: 540,
                fp_scripts: 50,
                nonfp_scripts: 500,
                unobfuscatable_pairs: 20,
            },
            control: triple(),
            obfuscators,
        };
        let text = render_text(&report);
        assert!(text.contains("beautify_fastdecode"));
        assert!(text.contains("closure_like"));
        assert!(text.contains("(control)"));
        assert!(text.contains("10.0%")); // fnr 1/10 on the static row
        assert!(text.contains("seed: 7"));
        // JSON round-trip.
        let json = serde_json::to_string_pretty(&report).unwrap();
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
