//! Seeded synthetic corpus: labeled fingerprinting and benign scripts
//! grouped into site bundles.
//!
//! Every fingerprinting script exercises at least three distinct stub
//! APIs from one of the classic surface families (canvas text, canvas
//! pixels, WebGL parameters, audio, navigator/screen combos). Benign
//! scripts stick to console, math, string and array work, plus the
//! occasional single-API touch (UA sniffing, a div element) so that the
//! class boundary is carried by API usage rather than script size. A
//! small seeded fraction of benign scripts contains a raw `|` in a
//! string, which the eval packers reject — exercising the coverage
//! filter path end to end.

use crate::detect::Label;
use crate::harness::eval::SiteBundle;
use crate::rng::SplitMix64;
use crate::script::Script;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub n_fp: usize,
    pub n_benign: usize,
    pub sites: usize,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        // Desk-scale default: minority-FP skew, 100 sites.
        Self {
            n_fp: 50,
            n_benign: 500,
            sites: 100,
            seed: 0xF1A6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScript {
    pub script: Script,
    pub label: Label,
    pub site_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedCorpus {
    pub scripts: Vec<LabeledScript>,
    pub bundles: Vec<SiteBundle>,
}

/// Fraction of benign scripts that carry a raw pipe character in a
/// string literal (unpackable by the eval packers).
pub const PIPE_SCRIPT_RATE: f64 = 0.02;

pub fn generate_corpus(spec: &CorpusSpec) -> GeneratedCorpus {
    assert!(spec.n_fp > 0 && spec.n_benign > 0 && spec.sites > 0);
    let mut scripts = Vec::with_capacity(spec.n_fp + spec.n_benign);

    for i in 0..spec.n_fp {
        let mut rng = SplitMix64::new(spec.seed).fork(0x4650_0000 + i as u64);
        let source = fp_script(&mut rng, i);
        let site = i % spec.sites;
        let site_id = format!("site-{site:03}");
        let url = format!("http://site-{site:03}.test/static/fp{i:03}.js");
        scripts.push(LabeledScript {
            script: Script::control(&url, source),
            label: Label::Fp,
            site_id,
        });
    }
    for i in 0..spec.n_benign {
        let mut rng = SplitMix64::new(spec.seed).fork(0xBE60_0000 + i as u64);
        let source = benign_script(&mut rng, i);
        let site = i % spec.sites;
        let site_id = format!("site-{site:03}");
        let url = format!("http://site-{site:03}.test/static/app{i:03}.js");
        scripts.push(LabeledScript {
            script: Script::control(&url, source),
            label: Label::NonFp,
            site_id,
        });
    }

    let mut by_site: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for s in &scripts {
        by_site
            .entry(s.site_id.clone())
            .or_default()
            .push(s.script.content_hash.clone());
    }
    let bundles = by_site
        .into_iter()
        .map(|(site_id, script_hashes)| SiteBundle {
            site_id,
            script_hashes,
            successes: BTreeMap::new(),
        })
        .collect();

    GeneratedCorpus { scripts, bundles }
}

const WORDS: &[&str] = &[
    "report", "queue", "metric", "widget", "ticket", "banner", "signal", "record", "invoice",
    "basket", "stream", "folder", "packet", "anchor", "bridge", "column",
];

fn word(rng: &mut SplitMix64) -> &'static str {
    WORDS[rng.next_below(WORDS.len() as u64) as usize]
}

/// A helper function unrelated to fingerprinting; pads node counts and
/// gives the minifier and flattener real work.
fn filler(rng: &mut SplitMix64, idx: usize, tag: usize) -> (String, String) {
    let name = format!("{}Helper{tag}_{idx}", word(rng));
    let k1 = rng.next_range(2, 19);
    let k2 = rng.next_range(1, 9);
    let limit = rng.next_range(40, 240);
    let drop = rng.next_range(3, 17);
    let w = word(rng);
    let def = format!(
        "function {name}(first, second) {{\n    var acc = first * {k1} + second;\n    var text = \"{w}\" + acc;\n    if (acc % 2 === 0) {{ acc = acc + {k2}; }} else {{ acc = acc - 1; }}\n    while (acc > {limit}) {{ acc = acc - {drop}; }}\n    return text + \":\" + acc;\n}}\n"
    );
    (def, name)
}

fn fillers(rng: &mut SplitMix64, idx: usize) -> (String, Vec<String>) {
    let count = rng.next_range(1, 4) as usize;
    let mut defs = String::new();
    let mut names = Vec::new();
    for tag in 0..count {
        let (def, name) = filler(rng, idx, tag);
        defs.push_str(&def);
        names.push(name);
    }
    (defs, names)
}

fn call_fillers(rng: &mut SplitMix64, names: &[String]) -> String {
    let mut out = String::new();
    for name in names {
        let a = rng.next_range(1, 30);
        let b = rng.next_range(1, 30);
        out.push_str(&format!("console.log({name}({a}, {b}));\n"));
    }
    out
}

// -- benign families ---------------------------------------------------------

fn benign_script(rng: &mut SplitMix64, idx: usize) -> String {
    let (defs, names) = fillers(rng, idx);
    let family = rng.next_below(6);
    let mut body = match family {
        0 => benign_logger(rng, idx),
        1 => benign_math(rng, idx),
        2 => benign_strings(rng, idx),
        3 => benign_ua_sniffer(rng),
        4 => benign_munger(rng),
        _ => benign_widget(rng),
    };
    if rng.coin(PIPE_SCRIPT_RATE) {
        body.push_str("var rawSeparator = \"a|b\";\nconsole.log(rawSeparator.length);\n");
    }
    format!("{defs}{body}{}", call_fillers(rng, &names))
}

fn benign_logger(rng: &mut SplitMix64, idx: usize) -> String {
    let n = rng.next_range(3, 9);
    let w = word(rng);
    format!(
        "function formatEntry{idx}(level, text) {{\n    var line = \"[\" + level + \"] \" + text;\n    return line;\n}}\nvar entries = [];\nvar cursor = 0;\nwhile (cursor < {n}) {{\n    entries.push(formatEntry{idx}(\"info\", \"{w}-\" + cursor));\n    cursor = cursor + 1;\n}}\nconsole.log(entries.join(\"; \"));\n"
    )
}

fn benign_math(rng: &mut SplitMix64, idx: usize) -> String {
    let k = rng.next_range(4, 9);
    let m = rng.next_range(5, 11);
    format!(
        "function factorial{idx}(n) {{\n    var result = 1;\n    var step = 2;\n    while (step <= n) {{ result = result * step; step = step + 1; }}\n    return result;\n}}\nfunction fib{idx}(n) {{\n    if (n < 2) {{ return n; }}\n    return fib{idx}(n - 1) + fib{idx}(n - 2);\n}}\nvar total = factorial{idx}({k}) + fib{idx}({m});\nconsole.log(\"total\", total, Math.floor(Math.sqrt(total)));\n"
    )
}

fn benign_strings(rng: &mut SplitMix64, idx: usize) -> String {
    let w1 = word(rng);
    let w2 = word(rng);
    format!(
        "function scramble{idx}(text) {{\n    var parts = text.split(\"-\");\n    var out = [];\n    var i = parts.length - 1;\n    while (i >= 0) {{ out.push(parts[i].toUpperCase()); i = i - 1; }}\n    return out.join(\"-\");\n}}\nvar phrase = \"{w1}-{w2}-{idx}\";\nvar sum = 0;\nvar j = 0;\nwhile (j < phrase.length) {{ sum = sum + phrase.charCodeAt(j); j = j + 1; }}\nconsole.log(scramble{idx}(phrase), sum);\n"
    )
}

fn benign_ua_sniffer(rng: &mut SplitMix64) -> String {
    let w = word(rng);
    format!(
        "var agent = navigator.userAgent;\nfunction detectBrowser(ua) {{\n    if (ua.indexOf(\"Chrome\") >= 0) {{ return \"chrome\"; }}\n    if (ua.indexOf(\"Safari\") >= 0) {{ return \"safari\"; }}\n    return \"other\";\n}}\nconsole.log(\"{w}\", detectBrowser(agent));\n"
    )
}

fn benign_munger(rng: &mut SplitMix64) -> String {
    let k1 = rng.next_range(1, 80);
    let k2 = rng.next_range(1, 80);
    let k3 = rng.next_range(1, 80);
    format!(
        "var records = [{{id: 1, score: {k1}}}, {{id: 2, score: {k2}}}, {{id: 3, score: {k3}}}];\nfunction tallyScores(items) {{\n    var total = 0;\n    var i = 0;\n    while (i < items.length) {{ total = total + items[i].score; i = i + 1; }}\n    return total;\n}}\nvar summary = {{count: records.length, total: tallyScores(records)}};\nconsole.log(summary.count + \"/\" + summary.total);\n"
    )
}

fn benign_widget(rng: &mut SplitMix64) -> String {
    let w1 = word(rng);
    let w2 = word(rng);
    format!(
        "var box = document.createElement(\"div\");\nbox.title = \"{w1}\";\nbox.note = \"{w2}\";\nfunction describeBox(el) {{\n    return el.title + \"#\" + el.note;\n}}\nconsole.log(describeBox(box));\n"
    )
}

// -- fingerprinting families ---------------------------------------------------

fn fp_script(rng: &mut SplitMix64, idx: usize) -> String {
    let (defs, names) = fillers(rng, idx);
    let family = rng.next_below(6);
    let body = match family {
        0 => fp_canvas_text(rng, idx),
        1 => fp_canvas_pixels(rng, idx),
        2 => fp_webgl(rng, idx),
        3 => fp_audio(rng, idx),
        4 => fp_nav_combo(rng, idx),
        _ => fp_kitchen_sink(rng, idx),
    };
    format!("{defs}{body}{}", call_fillers(rng, &names))
}

fn digest_helper(idx: usize) -> String {
    format!(
        "function digest{idx}(data) {{\n    var h = 0;\n    var i = 0;\n    while (i < data.length) {{ h = (h * 31 + data.charCodeAt(i)) % 1000003; i = i + 1; }}\n    return h;\n}}\n"
    )
}

fn fp_canvas_text(rng: &mut SplitMix64, idx: usize) -> String {
    let w = word(rng);
    let x = rng.next_range(1, 9);
    format!(
        "{digest}function renderProbe{idx}(text) {{\n    var canvas = document.createElement(\"canvas\");\n    canvas.width = 280;\n    canvas.height = 60;\n    var ctx = canvas.getContext(\"2d\");\n    ctx.fillText(text, {x}, 15);\n    var metrics = ctx.measureText(text);\n    return canvas.toDataURL() + \":\" + metrics.width;\n}}\nvar signature{idx} = digest{idx}(renderProbe{idx}(\"{w} glyphs {idx}\"));\nconsole.log(\"sig\", signature{idx});\n",
        digest = digest_helper(idx)
    )
}

fn fp_canvas_pixels(rng: &mut SplitMix64, idx: usize) -> String {
    let w = word(rng);
    format!(
        "function samplePixels{idx}() {{\n    var canvas = document.createElement(\"canvas\");\n    var ctx = canvas.getContext(\"2d\");\n    ctx.fillText(\"{w}\", 1, 1);\n    var image = ctx.getImageData(0, 0, 2, 1);\n    var acc = 0;\n    var i = 0;\n    while (i < image.data.length) {{ acc = acc + image.data[i]; i = i + 1; }}\n    return acc + \":\" + canvas.toDataURL().length;\n}}\nconsole.log(\"pixels\", samplePixels{idx}());\n"
    )
}

fn fp_webgl(rng: &mut SplitMix64, idx: usize) -> String {
    let extra = if rng.coin(0.5) {
        "    fields.push(gl.getParameter(7938));\n"
    } else {
        ""
    };
    format!(
        "function glInfo{idx}() {{\n    var canvas = document.createElement(\"canvas\");\n    var gl = canvas.getContext(\"webgl\");\n    var fields = [];\n    fields.push(gl.getParameter(7936));\n    fields.push(gl.getParameter(7937));\n    fields.push(gl.getParameter(37445));\n    fields.push(gl.getParameter(37446));\n{extra}    fields.push(gl.getSupportedExtensions().join(\"+\"));\n    return fields.join(\";\");\n}}\nconsole.log(\"gl\", glInfo{idx}());\n"
    )
}

fn fp_audio(rng: &mut SplitMix64, idx: usize) -> String {
    let w = word(rng);
    format!(
        "function audioSignature{idx}() {{\n    var context = new AudioContext();\n    var osc = context.createOscillator();\n    var analyser = context.createAnalyser();\n    osc.connect(analyser);\n    osc.start();\n    var bins = [];\n    var n = analyser.frequencyBinCount;\n    var i = 0;\n    while (i < n) {{ bins.push(0); i = i + 1; }}\n    analyser.getFloatFrequencyData(bins);\n    var sum = 0;\n    i = 0;\n    while (i < bins.length) {{ sum = sum + bins[i]; i = i + 1; }}\n    osc.stop();\n    return sum;\n}}\nconsole.log(\"{w}\", audioSignature{idx}());\n"
    )
}

fn fp_nav_combo(rng: &mut SplitMix64, idx: usize) -> String {
    let w = word(rng);
    format!(
        "{digest}function platformFingerprint{idx}() {{\n    var parts = [];\n    parts.push(navigator.userAgent);\n    parts.push(navigator.platform);\n    parts.push(navigator.plugins.length);\n    parts.push(navigator.languages.join(\",\"));\n    parts.push(screen.width + \"x\" + screen.height + \"x\" + screen.colorDepth);\n    return parts.join(\"~\");\n}}\nconsole.log(\"{w}\", digest{idx}(platformFingerprint{idx}()));\n",
        digest = digest_helper(idx)
    )
}

fn fp_kitchen_sink(rng: &mut SplitMix64, idx: usize) -> String {
    let w = word(rng);
    format!(
        "{digest}function mixedProbe{idx}() {{\n    var canvas = document.createElement(\"canvas\");\n    var ctx = canvas.getContext(\"2d\");\n    ctx.fillText(\"{w}\", 4, 8);\n    var parts = [canvas.toDataURL(), navigator.userAgent, screen.colorDepth];\n    return parts.join(\"~\");\n}}\nconsole.log(\"mixed\", digest{idx}(mixedProbe{idx}()));\n",
        digest = digest_helper(idx)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::count_nodes;
    use crate::parser::parse;
    use crate::sandbox::{execute, ExecLimits, FINGERPRINTING_API_NAMES};

    #[test]
    fn minimal_spec_yields_one_of_each_label() {
        let corpus = generate_corpus(&CorpusSpec {
            n_fp: 1,
            n_benign: 1,
            sites: 1,
            seed: 11,
        });
        assert_eq!(corpus.scripts.len(), 2);
        assert_eq!(corpus.scripts[0].label, Label::Fp);
        assert_eq!(corpus.scripts[1].label, Label::NonFp);
        assert_eq!(corpus.bundles.len(), 1);
        assert_eq!(corpus.bundles[0].script_hashes.len(), 2);
    }

    #[test]
    fn default_spec_keeps_the_minority_skew() {
        let spec = CorpusSpec::default();
        assert_eq!(spec.n_fp, 50);
        assert_eq!(spec.n_benign, 500);
        assert_eq!(spec.sites, 100);
        // 1:10 matches the order of magnitude of the reference skew.
        assert!(spec.n_benign / spec.n_fp >= 5);
    }

    #[test]
    fn every_script_parses_and_completes() {
        let corpus = generate_corpus(&CorpusSpec {
            n_fp: 12,
            n_benign: 24,
            sites: 6,
            seed: 5,
        });
        for s in &corpus.scripts {
            let ast = parse(&s.script.source)
                .unwrap_or_else(|e| panic!("{}: {e}\n{}", s.script.url, s.script.source));
            assert!(count_nodes(&ast) > 1);
            let t = execute(&s.script.source, ExecLimits::default());
            assert!(
                t.completed(),
                "{} did not complete: {:?}",
                s.script.url,
                t.terminated
            );
        }
    }

    #[test]
    fn fp_scripts_touch_three_distinct_fingerprinting_apis() {
        let corpus = generate_corpus(&CorpusSpec {
            n_fp: 30,
            n_benign: 1,
            sites: 10,
            seed: 77,
        });
        for s in corpus.scripts.iter().filter(|s| s.label == Label::Fp) {
            let t = execute(&s.script.source, ExecLimits::default());
            let distinct = t
                .freq
                .keys()
                .filter(|k| FINGERPRINTING_API_NAMES.contains(&k.as_str()))
                .count();
            assert!(
                distinct >= 3,
                "{} touches only {distinct} fingerprinting APIs",
                s.script.url
            );
        }
    }

    #[test]
    fn benign_scripts_stay_below_the_fp_api_bar() {
        let corpus = generate_corpus(&CorpusSpec {
            n_fp: 1,
            n_benign: 60,
            sites: 10,
            seed: 99,
        });
        for s in corpus.scripts.iter().filter(|s| s.label == Label::NonFp) {
            let t = execute(&s.script.source, ExecLimits::default());
            let distinct = t
                .freq
                .keys()
                .filter(|k| FINGERPRINTING_API_NAMES.contains(&k.as_str()))
                .count();
            assert!(
                distinct < 3,
                "benign {} touches {distinct} fingerprinting APIs",
                s.script.url
            );
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = CorpusSpec {
            n_fp: 5,
            n_benign: 10,
            sites: 3,
            seed: 1234,
        };
        let a = generate_corpus(&spec);
        let b = generate_corpus(&spec);
        assert_eq!(a.scripts, b.scripts);
        let c = generate_corpus(&CorpusSpec { seed: 4321, ..spec });
        assert_ne!(a.scripts, c.scripts);
    }

    #[test]
    fn some_scripts_are_large_enough_for_packer_comparisons() {
        let corpus = generate_corpus(&CorpusSpec {
            n_fp: 10,
            n_benign: 40,
            sites: 10,
            seed: 2,
        });
        let big = corpus
            .scripts
            .iter()
            .filter(|s| count_nodes(&parse(&s.script.source).unwrap()) > 150)
            .count();
        assert!(
            big * 2 > corpus.scripts.len(),
            "only {big}/{} scripts exceed 150 nodes",
            corpus.scripts.len()
        );
    }
}
