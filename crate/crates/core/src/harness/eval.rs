//! Confusion-matrix evaluation, OR-combination, verdict-flip analysis,
//! and the site coverage filter.
//!
//! Two truth modes are reported side by side: `truth_mode` scores
//! verdicts against the corpus generator's labels, while `paper_mode`
//! treats each script's control-run verdict as the reference and scores
//! the treatment verdict against it (the flip methodology).

use crate::detect::Label;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// FP if either model says FP.
pub fn combine_or(static_v: Label, dynamic_v: Label) -> Label {
    if static_v == Label::Fp || dynamic_v == Label::Fp {
        Label::Fp
    } else {
        Label::NonFp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: Label, verdict: Label) {
        match (truth, verdict) {
            (Label::Fp, Label::Fp) => self.tp += 1,
            (Label::Fp, Label::NonFp) => self.fn_ += 1,
            (Label::NonFp, Label::Fp) => self.fp += 1,
            (Label::NonFp, Label::NonFp) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn metrics(&self) -> EvalMetrics {
        EvalMetrics {
            fpr: Ratio::checked(self.fp, self.fp + self.tn),
            fnr: Ratio::checked(self.fn_, self.fn_ + self.tp),
            accuracy: Ratio::checked(self.tp + self.tn, self.total()),
        }
    }
}

/// Exact rational; rendered as a 1-decimal percentage in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    /// `None` when the denominator is zero (reported as not-applicable,
    /// never coerced to 0).
    pub fn checked(num: u64, den: u64) -> Option<Ratio> {
        if den == 0 {
            None
        } else {
            Some(Ratio { num, den })
        }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn pct_string(&self) -> String {
        format!("{:.1}%", self.value() * 100.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub fpr: Option<Ratio>,
    pub fnr: Option<Ratio>,
    pub accuracy: Option<Ratio>,
}

impl EvalMetrics {
    pub fn fpr_value(&self) -> Option<f64> {
        self.fpr.as_ref().map(Ratio::value)
    }

    pub fn fnr_value(&self) -> Option<f64> {
        self.fnr.as_ref().map(Ratio::value)
    }

    pub fn accuracy_value(&self) -> Option<f64> {
        self.accuracy.as_ref().map(Ratio::value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Static,
    Dynamic,
    Combined,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Static => write!(f, "static"),
            ModelKind::Dynamic => write!(f, "dynamic"),
            ModelKind::Combined => write!(f, "combined"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipDirection {
    InducedFalseNegative,
    InducedFalsePositive,
}

/// A verdict flip caused by obfuscation alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipRecord {
    pub script_hash: String,
    pub obfuscator_id: String,
    pub model: ModelKind,
    pub direction: FlipDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowMetrics {
    pub cm: ConfusionMatrix,
    pub metrics: EvalMetrics,
}

impl From<ConfusionMatrix> for RowMetrics {
    fn from(cm: ConfusionMatrix) -> Self {
        RowMetrics {
            metrics: cm.metrics(),
            cm,
        }
    }
}

/// One confusion row per model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelTriple {
    pub static_model: RowMetrics,
    pub dynamic_model: RowMetrics,
    pub combined: RowMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FlipCounts {
    pub induced_false_negative: u64,
    pub induced_false_positive: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NodeDelta {
    pub scripts: u64,
    pub mean_before: f64,
    pub mean_after: f64,
    pub decreased: u64,
    pub increased: u64,
    pub unchanged: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObfuscatorEval {
    pub truth_mode: ModelTriple,
    pub paper_mode: ModelTriple,
    pub flip_counts: BTreeMap<ModelKind, FlipCounts>,
    pub node_delta: NodeDelta,
}

/// Control-group verdicts for one script.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlScriptEval {
    pub hash: String,
    pub truth: Label,
    pub static_v: Label,
    pub dynamic_v: Label,
}

/// Treatment-group verdicts, keyed back to the control script.
#[derive(Debug, Clone, PartialEq)]
pub struct TreatmentScriptEval {
    pub original_hash: String,
    pub obfuscator_id: String,
    pub static_v: Label,
    pub dynamic_v: Label,
    pub node_count_before: u64,
    pub node_count_after: u64,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("treatment script references unknown control hash {original_hash}")]
    UnmatchedTreatmentScript { original_hash: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub control: ModelTriple,
    pub obfuscators: BTreeMap<String, ObfuscatorEval>,
    pub flips: Vec<FlipRecord>,
}

fn triple_from(
    rows: impl Iterator<Item = (Label, Label, Label)> + Clone,
) -> ModelTriple {
    let mut s = ConfusionMatrix::default();
    let mut d = ConfusionMatrix::default();
    let mut c = ConfusionMatrix::default();
    for (truth, static_v, dynamic_v) in rows {
        s.record(truth, static_v);
        d.record(truth, dynamic_v);
        c.record(truth, combine_or(static_v, dynamic_v));
    }
    ModelTriple {
        static_model: s.into(),
        dynamic_model: d.into(),
        combined: c.into(),
    }
}

/// Score control and treatment verdicts; three metric rows per
/// obfuscator in both truth modes, plus flip records.
pub fn evaluate(
    control: &[ControlScriptEval],
    treatments: &[TreatmentScriptEval],
) -> Result<EvalOutcome, EvalError> {
    let by_hash: BTreeMap<&str, &ControlScriptEval> =
        control.iter().map(|c| (c.hash.as_str(), c)).collect();
    for t in treatments {
        if !by_hash.contains_key(t.original_hash.as_str()) {
            return Err(EvalError::UnmatchedTreatmentScript {
                original_hash: t.original_hash.clone(),
            });
        }
    }

    let control_triple = triple_from(
        control
            .iter()
            .map(|c| (c.truth, c.static_v, c.dynamic_v))
            .collect::<Vec<_>>()
            .into_iter(),
    );

    let mut grouped: BTreeMap<&str, Vec<&TreatmentScriptEval>> = BTreeMap::new();
    for t in treatments {
        grouped.entry(t.obfuscator_id.as_str()).or_default().push(t);
    }

    let mut obfuscators = BTreeMap::new();
    let mut flips = Vec::new();
    for (obf, list) in grouped {
        let truth_mode = triple_from(
            list.iter()
                .map(|t| {
                    let c = by_hash[t.original_hash.as_str()];
                    (c.truth, t.static_v, t.dynamic_v)
                })
                .collect::<Vec<_>>()
                .into_iter(),
        );
        // Paper mode: the control verdict of the same model is the truth.
        let mut ps = ConfusionMatrix::default();
        let mut pd = ConfusionMatrix::default();
        let mut pc = ConfusionMatrix::default();
        for t in &list {
            let c = by_hash[t.original_hash.as_str()];
            ps.record(c.static_v, t.static_v);
            pd.record(c.dynamic_v, t.dynamic_v);
            pc.record(
                combine_or(c.static_v, c.dynamic_v),
                combine_or(t.static_v, t.dynamic_v),
            );
        }
        let paper_mode = ModelTriple {
            static_model: ps.into(),
            dynamic_model: pd.into(),
            combined: pc.into(),
        };

        let mut flip_counts: BTreeMap<ModelKind, FlipCounts> = BTreeMap::new();
        for kind in [ModelKind::Static, ModelKind::Dynamic, ModelKind::Combined] {
            flip_counts.insert(kind, FlipCounts::default());
        }
        for t in &list {
            let c = by_hash[t.original_hash.as_str()];
            let pairs = [
                (ModelKind::Static, c.static_v, t.static_v),
                (ModelKind::Dynamic, c.dynamic_v, t.dynamic_v),
                (
                    ModelKind::Combined,
                    combine_or(c.static_v, c.dynamic_v),
                    combine_or(t.static_v, t.dynamic_v),
                ),
            ];
            for (model, control_v, treat_v) in pairs {
                let direction = match (c.truth, control_v, treat_v) {
                    (Label::Fp, Label::Fp, Label::NonFp) => {
                        Some(FlipDirection::InducedFalseNegative)
                    }
                    (Label::NonFp, Label::NonFp, Label::Fp) => {
                        Some(FlipDirection::InducedFalsePositive)
                    }
                    _ => None,
                };
                if let Some(direction) = direction {
                    let counts = flip_counts.get_mut(&model).unwrap();
                    match direction {
                        FlipDirection::InducedFalseNegative => {
                            counts.induced_false_negative += 1
                        }
                        FlipDirection::InducedFalsePositive => {
                            counts.induced_false_positive += 1
                        }
                    }
                    flips.push(FlipRecord {
                        script_hash: t.original_hash.clone(),
                        obfuscator_id: obf.to_string(),
                        model,
                        direction,
                    });
                }
            }
        }

        let scripts = list.len() as u64;
        let sum_before: u64 = list.iter().map(|t| t.node_count_before).sum();
        let sum_after: u64 = list.iter().map(|t| t.node_count_after).sum();
        let node_delta = NodeDelta {
            scripts,
            mean_before: if scripts > 0 {
                sum_before as f64 / scripts as f64
            } else {
                0.0
            },
            mean_after: if scripts > 0 {
                sum_after as f64 / scripts as f64
            } else {
                0.0
            },
            decreased: list
                .iter()
                .filter(|t| t.node_count_after < t.node_count_before)
                .count() as u64,
            increased: list
                .iter()
                .filter(|t| t.node_count_after > t.node_count_before)
                .count() as u64,
            unchanged: list
                .iter()
                .filter(|t| t.node_count_after == t.node_count_before)
                .count() as u64,
        };

        obfuscators.insert(
            obf.to_string(),
            ObfuscatorEval {
                truth_mode,
                paper_mode,
                flip_counts,
                node_delta,
            },
        );
    }

    Ok(EvalOutcome {
        control: control_triple,
        obfuscators,
        flips,
    })
}

// --------------------------------------------------------------------------
// Site coverage filter
// --------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteBundle {
    pub site_id: String,
    pub script_hashes: Vec<String>,
    /// obfuscator id → all scripts on the site obfuscated successfully.
    pub successes: BTreeMap<String, bool>,
}

impl SiteBundle {
    pub fn coverage(&self) -> f64 {
        if self.successes.is_empty() {
            return 0.0;
        }
        let ok = self.successes.values().filter(|v| **v).count();
        ok as f64 / self.successes.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscardRecord {
    pub site_id: String,
    pub coverage: f64,
    pub successes: u64,
    pub total: u64,
}

/// Keep sites whose obfuscator coverage meets the threshold (default
/// 0.8); the rest go to the discard log.
pub fn coverage_filter(
    bundles: &[SiteBundle],
    min_coverage: f64,
) -> (Vec<SiteBundle>, Vec<DiscardRecord>) {
    let mut kept = Vec::new();
    let mut discards = Vec::new();
    for b in bundles {
        let coverage = b.coverage();
        if coverage >= min_coverage {
            kept.push(b.clone());
        } else {
            discards.push(DiscardRecord {
                site_id: b.site_id.clone(),
                coverage,
                successes: b.successes.values().filter(|v| **v).count() as u64,
                total: b.successes.len() as u64,
            });
        }
    }
    (kept, discards)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn or_truth_table() {
        use Label::*;
        assert_eq!(combine_or(NonFp, NonFp), NonFp);
        assert_eq!(combine_or(NonFp, Fp), Fp);
        assert_eq!(combine_or(Fp, NonFp), Fp);
        assert_eq!(combine_or(Fp, Fp), Fp);
    }

    #[test]
    fn metrics_arithmetic_identity() {
        let cm = ConfusionMatrix {
            tp: 9,
            fn_: 1,
            fp: 0,
            tn: 90,
        };
        let m = cm.metrics();
        assert_eq!(m.fnr_value(), Some(0.10));
        assert_eq!(m.fpr_value(), Some(0.0));
        assert_eq!(m.accuracy_value(), Some(0.99));
        assert_eq!(m.fnr.unwrap().pct_string(), "10.0%");
    }

    #[test]
    fn undefined_denominators_are_none_not_zero() {
        let cm = ConfusionMatrix {
            tp: 0,
            fn_: 0,
            fp: 1,
            tn: 9,
        };
        let m = cm.metrics();
        assert!(m.fnr.is_none());
        assert_eq!(m.fpr_value(), Some(0.1));
    }

    fn ctl(hash: &str, truth: Label, s: Label, d: Label) -> ControlScriptEval {
        ControlScriptEval {
            hash: hash.into(),
            truth,
            static_v: s,
            dynamic_v: d,
        }
    }

    fn trt(
        hash: &str,
        obf: &str,
        s: Label,
        d: Label,
        before: u64,
        after: u64,
    ) -> TreatmentScriptEval {
        TreatmentScriptEval {
            original_hash: hash.into(),
            obfuscator_id: obf.into(),
            static_v: s,
            dynamic_v: d,
            node_count_before: before,
            node_count_after: after,
        }
    }

    #[test]
    fn all_correct_verdicts_score_perfectly() {
        use Label::*;
        let control = vec![ctl("a", Fp, Fp, Fp), ctl("b", NonFp, NonFp, NonFp)];
        let treatments = vec![
            trt("a", "tool", Fp, Fp, 100, 120),
            trt("b", "tool", NonFp, NonFp, 100, 120),
        ];
        let out = evaluate(&control, &treatments).unwrap();
        let t = &out.obfuscators["tool"].truth_mode;
        assert_eq!(t.combined.metrics.accuracy_value(), Some(1.0));
        assert_eq!(t.combined.metrics.fnr_value(), Some(0.0));
        assert_eq!(t.combined.metrics.fpr_value(), Some(0.0));
        assert!(out.flips.is_empty());
    }

    #[test]
    fn induced_false_negative_is_recorded() {
        use Label::*;
        // Truth FP, control said FP, treatment says NONFP under static.
        let control = vec![ctl("a", Fp, Fp, Fp)];
        let treatments = vec![trt("a", "packer", NonFp, Fp, 500, 90)];
        let out = evaluate(&control, &treatments).unwrap();
        let flips = &out.flips;
        assert_eq!(flips.len(), 1);
        assert_eq!(flips[0].model, ModelKind::Static);
        assert_eq!(flips[0].direction, FlipDirection::InducedFalseNegative);
        // Combined stays FP through the dynamic side: no combined flip.
        let counts = &out.obfuscators["packer"].flip_counts;
        assert_eq!(counts[&ModelKind::Static].induced_false_negative, 1);
        assert_eq!(counts[&ModelKind::Combined].induced_false_negative, 0);
        // Node delta captured the packer collapse.
        assert_eq!(out.obfuscators["packer"].node_delta.decreased, 1);
    }

    #[test]
    fn flip_soundness_requires_control_fp() {
        use Label::*;
        // Truth FP but the control run already missed it: no flip.
        let control = vec![ctl("a", Fp, NonFp, Fp)];
        let treatments = vec![trt("a", "t", NonFp, Fp, 10, 20)];
        let out = evaluate(&control, &treatments).unwrap();
        assert!(out
            .flips
            .iter()
            .all(|f| f.model != ModelKind::Static));
    }

    #[test]
    fn unmatched_treatment_is_an_error() {
        use Label::*;
        let control = vec![ctl("a", Fp, Fp, Fp)];
        let treatments = vec![trt("zzz", "t", Fp, Fp, 1, 1)];
        assert_eq!(
            evaluate(&control, &treatments).unwrap_err(),
            EvalError::UnmatchedTreatmentScript {
                original_hash: "zzz".into()
            }
        );
    }

    #[test]
    fn or_conservation_inequalities_hold() {
        use Label::*;
        // Random-ish fixed table; verify fn_combined <= min(fn_s, fn_d)
        // and fp_combined >= max(fp_s, fp_d).
        let control = vec![
            ctl("a", Fp, Fp, NonFp),
            ctl("b", Fp, NonFp, Fp),
            ctl("c", Fp, NonFp, NonFp),
            ctl("d", NonFp, Fp, NonFp),
            ctl("e", NonFp, NonFp, Fp),
            ctl("f", NonFp, NonFp, NonFp),
        ];
        let treatments: Vec<_> = control
            .iter()
            .map(|c| trt(&c.hash, "t", c.static_v, c.dynamic_v, 10, 10))
            .collect();
        let out = evaluate(&control, &treatments).unwrap();
        let t = &out.obfuscators["t"].truth_mode;
        assert!(
            t.combined.cm.fn_ <= t.static_model.cm.fn_.min(t.dynamic_model.cm.fn_)
        );
        assert!(
            t.combined.cm.fp >= t.static_model.cm.fp.max(t.dynamic_model.cm.fp)
        );
        let total = t.combined.cm.total();
        assert_eq!(total, control.len() as u64);
    }

    #[test]
    fn coverage_filter_thresholds() {
        let bundle = |id: &str, ok: usize| {
            let mut successes = BTreeMap::new();
            for i in 0..7 {
                successes.insert(format!("obf{i}"), i < ok);
            }
            SiteBundle {
                site_id: id.into(),
                script_hashes: vec![],
                successes,
            }
        };
        let bundles = vec![bundle("five", 5), bundle("six", 6), bundle("seven", 7)];
        let (kept, discards) = coverage_filter(&bundles, 0.8);
        let kept_ids: Vec<&str> = kept.iter().map(|b| b.site_id.as_str()).collect();
        assert_eq!(kept_ids, vec!["six", "seven"]); // 6/7 ≈ .857, 7/7
        assert_eq!(discards.len(), 1);
        assert_eq!(discards[0].site_id, "five"); // 5/7 ≈ .714
        assert_eq!(discards[0].successes, 5);
    }
}
