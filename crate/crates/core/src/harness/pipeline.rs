//! End-to-end pipeline: generate → obfuscate → execute → train →
//! classify → evaluate, with every artifact written to disk.
//!
//! Outputs are a pure function of (config, seed, existing model files):
//! per-script work fans out over a thread pool but results are collected
//! in deterministic order, maps are sorted, and no artifact embeds
//! timestamps.

use crate::detect::{
    classify, dynamic_schema, extract_dynamic_features, extract_static_features, static_schema,
    train_tree, ClassifyError, DecisionTree, Label, TrainError, TrainParams,
};
use crate::harness::corpus::{generate_corpus, CorpusSpec, GeneratedCorpus};
use crate::harness::eval::{
    coverage_filter, evaluate, ControlScriptEval, EvalError, SiteBundle, TreatmentScriptEval,
};
use crate::harness::report::{CorpusSummary, EvalReport, REPORT_FORMAT_VERSION};
use crate::obfuscate::{apply_profile, ObfuscatedScript, ObfuscationProfile};
use crate::parser::parse;
use crate::sandbox::{execute, ExecLimits, REGISTRY_VERSION, TRACE_FORMAT_VERSION};
use crate::script::{self, ManifestEntry, ManifestError};
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub corpus_dir: PathBuf,
    pub models_dir: PathBuf,
    pub reports_dir: PathBuf,
    pub corpus: CorpusSpec,
    pub profiles: Vec<ObfuscationProfile>,
    pub limits: ExecLimits,
    pub coverage_threshold: f64,
    pub train_params: TrainParams,
}

impl PipelineConfig {
    /// Conventional layout under one root directory, all seven preset
    /// profiles, desk-scale corpus.
    pub fn under_root(root: &Path, seed: u64) -> Self {
        Self {
            corpus_dir: root.join("corpus"),
            models_dir: root.join("models"),
            reports_dir: root.join("reports"),
            corpus: CorpusSpec {
                seed,
                ..CorpusSpec::default()
            },
            profiles: ObfuscationProfile::all_presets(seed),
            limits: ExecLimits::default(),
            coverage_threshold: 0.8,
            train_params: TrainParams::default(),
        }
    }
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub report: EvalReport,
    pub manifest_path: PathBuf,
    pub report_json_path: PathBuf,
    pub report_text_path: PathBuf,
    pub flips_path: PathBuf,
    pub discards_path: PathBuf,
    pub static_model_path: PathBuf,
    pub dynamic_model_path: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("training failed: {0}")]
    Train(#[from] TrainError),
    #[error("classification failed: {0}")]
    Classify(#[from] ClassifyError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("model file {path} is invalid: {source}")]
    BadModel {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(path, contents).map_err(io_err(path))
}

fn url_basename(url: &str) -> String {
    url.rsplit('/').next().unwrap_or("script.js").to_string()
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome, PipelineError> {
    let seed = config.corpus.seed;
    let corpus = generate_corpus(&config.corpus);

    // 1. Control scripts on disk + manifest entries.
    let mut manifest: Vec<ManifestEntry> = Vec::new();
    for s in &corpus.scripts {
        let rel = format!("control/{}", url_basename(&s.script.url));
        write_file(&config.corpus_dir.join(&rel), &s.script.source)?;
        manifest.push(ManifestEntry {
            url: s.script.url.clone(),
            path: rel,
            sha256: s.script.content_hash.clone(),
            group: script::Group::Control,
            obfuscator_id: None,
            label: s.label.to_string().to_lowercase(),
            site_id: Some(s.site_id.clone()),
            original_hash: None,
            node_count_before: None,
            node_count_after: None,
        });
    }

    // 2. Obfuscate every (script, profile) pair.
    let results: Vec<Vec<Result<ObfuscatedScript, String>>> = corpus
        .scripts
        .par_iter()
        .map(|s| {
            config
                .profiles
                .iter()
                .map(|p| apply_profile(&s.script, p).map_err(|e| e.to_string()))
                .collect()
        })
        .collect();

    let mut unobfuscatable = 0u64;
    for (s, per_profile) in corpus.scripts.iter().zip(&results) {
        for (profile, result) in config.profiles.iter().zip(per_profile) {
            match result {
                Ok(obf) => {
                    let rel = format!(
                        "treatment/{}/{}",
                        profile.tool.id(),
                        url_basename(&s.script.url)
                    );
                    write_file(&config.corpus_dir.join(&rel), &obf.obfuscated.source)?;
                    manifest.push(ManifestEntry {
                        url: obf.obfuscated.url.clone(),
                        path: rel,
                        sha256: obf.obfuscated.content_hash.clone(),
                        group: script::Group::Treatment,
                        obfuscator_id: Some(profile.tool.id().to_string()),
                        label: s.label.to_string().to_lowercase(),
                        site_id: Some(s.site_id.clone()),
                        original_hash: Some(obf.original_hash.clone()),
                        node_count_before: Some(obf.node_count_before),
                        node_count_after: Some(obf.node_count_after),
                    });
                }
                Err(_) => unobfuscatable += 1,
            }
        }
    }
    let manifest_path = config.corpus_dir.join("manifest.jsonl");
    script::write_manifest(&manifest_path, &manifest)?;

    // 3. Site success flags and the coverage filter.
    let bundles = fill_bundle_flags(&corpus, &results, &config.profiles);
    let (kept, discards) = coverage_filter(&bundles, config.coverage_threshold);
    let kept_sites: BTreeSet<&str> = kept.iter().map(|b| b.site_id.as_str()).collect();

    // Analysis set: scripts on kept sites that every profile obfuscated.
    let analysis: Vec<usize> = corpus
        .scripts
        .iter()
        .enumerate()
        .filter(|(i, s)| {
            kept_sites.contains(s.site_id.as_str()) && results[*i].iter().all(Result::is_ok)
        })
        .map(|(i, _)| i)
        .collect();

    // 4. Features for every control script (training uses all of them).
    let static_features: Vec<_> = corpus
        .scripts
        .par_iter()
        .map(|s| {
            let ast = parse(&s.script.source).expect("generated scripts parse");
            extract_static_features(&ast)
        })
        .collect();
    let dynamic_features: Vec<_> = corpus
        .scripts
        .par_iter()
        .map(|s| {
            let trace = execute(&s.script.source, config.limits);
            extract_dynamic_features(&trace)
        })
        .collect();

    // 5. Train (or load) the two models.
    let static_model_path = config.models_dir.join("static_model.json");
    let dynamic_model_path = config.models_dir.join("dynamic_model.json");
    let static_tree = load_or_train(&static_model_path, || {
        let data: Vec<_> = corpus
            .scripts
            .iter()
            .zip(&static_features)
            .map(|(s, fv)| (fv.clone(), s.label))
            .collect();
        train_tree(&data, config.train_params)
    })?;
    let dynamic_tree = load_or_train(&dynamic_model_path, || {
        let data: Vec<_> = corpus
            .scripts
            .iter()
            .zip(&dynamic_features)
            .map(|(s, fv)| (fv.clone(), s.label))
            .collect();
        train_tree(&data, config.train_params)
    })?;
    let schemas = serde_json::json!({
        "static": static_schema(),
        "dynamic": dynamic_schema(),
    });
    write_file(
        &config.models_dir.join("feature_schemas.json"),
        &serde_json::to_string_pretty(&schemas).expect("schemas serialize"),
    )?;

    // 6. Classify the control group (analysis set).
    let mut control_evals = Vec::with_capacity(analysis.len());
    for &i in &analysis {
        let s = &corpus.scripts[i];
        control_evals.push(ControlScriptEval {
            hash: s.script.content_hash.clone(),
            truth: s.label,
            static_v: classify(&static_tree, &static_features[i])?,
            dynamic_v: classify(&dynamic_tree, &dynamic_features[i])?,
        });
    }

    // 7. Classify every treatment of the analysis set.
    let mut treatment_refs: Vec<&ObfuscatedScript> = Vec::new();
    for &i in &analysis {
        for result in &results[i] {
            if let Ok(obf) = result {
                treatment_refs.push(obf);
            }
        }
    }
    let treatment_evals: Vec<TreatmentScriptEval> = treatment_refs
        .par_iter()
        .map(|obf| {
            let ast = parse(&obf.obfuscated.source).expect("obfuscated output parses");
            let static_fv = extract_static_features(&ast);
            let trace = execute(&obf.obfuscated.source, config.limits);
            let dynamic_fv = extract_dynamic_features(&trace);
            Ok(TreatmentScriptEval {
                original_hash: obf.original_hash.clone(),
                obfuscator_id: obf.profile.tool.id().to_string(),
                static_v: classify(&static_tree, &static_fv)?,
                dynamic_v: classify(&dynamic_tree, &dynamic_fv)?,
                node_count_before: obf.node_count_before,
                node_count_after: obf.node_count_after,
            })
        })
        .collect::<Result<Vec<_>, ClassifyError>>()?;

    // 8. Score and write the report artifacts.
    let outcome = evaluate(&control_evals, &treatment_evals)?;
    let fp_scripts = corpus
        .scripts
        .iter()
        .filter(|s| s.label == Label::Fp)
        .count() as u64;
    let report = EvalReport {
        report_format_version: REPORT_FORMAT_VERSION,
        seed,
        trace_format_version: TRACE_FORMAT_VERSION,
        registry_version: REGISTRY_VERSION,
        model_format_version: crate::detect::MODEL_FORMAT_VERSION,
        coverage_threshold: config.coverage_threshold,
        corpus: CorpusSummary {
            sites: bundles.len() as u64,
            kept_sites: kept.len() as u64,
            discarded_sites: discards.len() as u64,
            control_scripts: corpus.scripts.len() as u64,
            analysis_scripts: analysis.len() as u64,
            fp_scripts,
            nonfp_scripts: corpus.scripts.len() as u64 - fp_scripts,
            unobfuscatable_pairs: unobfuscatable,
        },
        control: outcome.control,
        obfuscators: outcome.obfuscators,
    };

    let report_json_path = config.reports_dir.join("report.json");
    write_file(
        &report_json_path,
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    let report_text_path = config.reports_dir.join("report.txt");
    write_file(
        &report_text_path,
        &crate::harness::report::render_text(&report),
    )?;
    let flips_path = config.reports_dir.join("flips.jsonl");
    write_jsonl(&flips_path, &outcome.flips)?;
    let discards_path = config.reports_dir.join("discards.jsonl");
    write_jsonl(&discards_path, &discards)?;

    Ok(PipelineOutcome {
        report,
        manifest_path,
        report_json_path,
        report_text_path,
        flips_path,
        discards_path,
        static_model_path,
        dynamic_model_path,
    })
}

fn fill_bundle_flags(
    corpus: &GeneratedCorpus,
    results: &[Vec<Result<ObfuscatedScript, String>>],
    profiles: &[ObfuscationProfile],
) -> Vec<SiteBundle> {
    // success[site][tool] = every script on the site obfuscated.
    let mut site_tool_ok: BTreeMap<&str, BTreeMap<String, bool>> = BTreeMap::new();
    for (s, per_profile) in corpus.scripts.iter().zip(results) {
        let entry = site_tool_ok.entry(s.site_id.as_str()).or_default();
        for (profile, result) in profiles.iter().zip(per_profile) {
            let ok = entry.entry(profile.tool.id().to_string()).or_insert(true);
            *ok &= result.is_ok();
        }
    }
    corpus
        .bundles
        .iter()
        .map(|b| {
            let mut bundle = b.clone();
            bundle.successes = site_tool_ok
                .get(b.site_id.as_str())
                .cloned()
                .unwrap_or_default();
            bundle
        })
        .collect()
}

fn load_or_train(
    path: &Path,
    train: impl FnOnce() -> Result<DecisionTree, TrainError>,
) -> Result<DecisionTree, PipelineError> {
    if path.exists() {
        let json = std::fs::read_to_string(path).map_err(io_err(path))?;
        return DecisionTree::from_json(&json).map_err(|source| PipelineError::BadModel {
            path: path.display().to_string(),
            source,
        });
    }
    let tree = train()?;
    write_file(path, &tree.to_json())?;
    Ok(tree)
}

fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut file = std::fs::File::create(path).map_err(io_err(path))?;
    for item in items {
        let line = serde_json::to_string(item).expect("jsonl item serializes");
        writeln!(file, "{line}").map_err(io_err(path))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn small_config(root: &Path, seed: u64) -> PipelineConfig {
        let mut config = PipelineConfig::under_root(root, seed);
        config.corpus = CorpusSpec {
            n_fp: 6,
            n_benign: 24,
            sites: 6,
            seed,
        };
        config
    }

    #[test]
    fn small_pipeline_produces_all_artifacts() {
        let dir = tempdir().unwrap();
        let config = small_config(dir.path(), 77);
        let outcome = run_pipeline(&config).unwrap();
        assert!(outcome.report_json_path.exists());
        assert!(outcome.report_text_path.exists());
        assert!(outcome.flips_path.exists());
        assert!(outcome.discards_path.exists());
        assert!(outcome.static_model_path.exists());
        assert!(outcome.dynamic_model_path.exists());
        assert!(outcome.manifest_path.exists());
        assert_eq!(outcome.report.obfuscators.len(), 7);
        assert_eq!(outcome.report.corpus.control_scripts, 30);
        // Control metrics exist and the corpus trained cleanly.
        let acc = outcome
            .report
            .control
            .combined
            .metrics
            .accuracy_value()
            .unwrap();
        assert!(acc >= 0.9, "control accuracy {acc}");
    }

    #[test]
    fn reruns_with_same_seed_are_byte_identical() {
        let dir_a = tempdir().unwrap();
        let dir_b = tempdir().unwrap();
        let out_a = run_pipeline(&small_config(dir_a.path(), 123)).unwrap();
        let out_b = run_pipeline(&small_config(dir_b.path(), 123)).unwrap();
        let json_a = std::fs::read_to_string(&out_a.report_json_path).unwrap();
        let json_b = std::fs::read_to_string(&out_b.report_json_path).unwrap();
        assert_eq!(json_a, json_b);
        let model_a = std::fs::read_to_string(&out_a.static_model_path).unwrap();
        let model_b = std::fs::read_to_string(&out_b.static_model_path).unwrap();
        assert_eq!(model_a, model_b);
    }

    #[test]
    fn existing_models_are_reused() {
        let dir = tempdir().unwrap();
        let config = small_config(dir.path(), 9);
        let first = run_pipeline(&config).unwrap();
        let model_before = std::fs::read_to_string(&first.static_model_path).unwrap();
        // Second run must load, not retrain (byte-identical file remains).
        let second = run_pipeline(&config).unwrap();
        let model_after = std::fs::read_to_string(&second.static_model_path).unwrap();
        assert_eq!(model_before, model_after);
    }
}
