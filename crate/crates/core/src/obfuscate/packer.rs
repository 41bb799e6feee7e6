//! Eval packer of the `p,a,c,k,e,d` family.
//!
//! The payload is the source text with identifier/keyword words (length
//! ≥ 2) replaced by base-36 indices into a pipe-joined dictionary; the
//! emitted decoder substitutes them back with `\b`-bounded regex
//! replaces and feeds the result to `eval`. With `fast_decode` the
//! decoder predefines the token→word table up front before the decode
//! loop; without it, the minimal loop reads the dictionary directly.
//!
//! Words that could collide with a token (runs that already look like a
//! canonical base-36 index: minified single letters, digit runs) are
//! left unpacked and their index slots reserved as empty dictionary
//! entries, which the decoder skips or self-maps. A packed word that is
//! itself canonical base-36 stays packable only at its own index.

use crate::ast::Span;
use crate::lexer::{Lexer, Tok};
use crate::parser::{parse, ParseDiagnostics};
use crate::sandbox::MiniRegex;
use std::collections::{HashMap, HashSet};
use std::fmt;

/// Lowercase base-36 rendering (token alphabet).
fn to_base36(mut n: u128) -> String {
    if n == 0 {
        return "0".to_string();
    }
    let digits = b"0123456789abcdefghijklmnopqrstuvwxyz";
    let mut buf = Vec::new();
    while n > 0 {
        buf.push(digits[(n % 36) as usize]);
        n /= 36;
    }
    buf.reverse();
    String::from_utf8(buf).unwrap()
}

#[derive(Debug)]
pub enum PackError {
    /// The source does not parse in the subset.
    Syntax(ParseDiagnostics),
    /// A string literal contains a raw `|`, which the pipe-joined
    /// dictionary encoding cannot carry. Hex-encoding the string first
    /// (`\x7C`) works around this.
    PipeInStringLiteral { span: Span },
}

impl fmt::Display for PackError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PackError::Syntax(d) => write!(f, "pack: {d}"),
            PackError::PipeInStringLiteral { span } => write!(
                f,
                "pack: string literal at {}..{} contains a raw '|'",
                span.start, span.end
            ),
        }
    }
}

impl std::error::Error for PackError {}

/// Pack `source` into an `eval(function(p,a,c,k,e,d){…}(…))` form.
pub fn eval_pack(source: &str, fast_decode: bool) -> Result<String, PackError> {
    parse(source).map_err(PackError::Syntax)?;

    // Raw pipes inside string literals would be split apart by the
    // dictionary decoding; reject them up front.
    let tokens = Lexer::new(source)
        .tokenize()
        .expect("parsed source lexes");
    for t in &tokens {
        if matches!(t.tok, Tok::Str(_)) {
            let raw = &source[t.span.start as usize..t.span.end as usize];
            if raw.contains('|') {
                return Err(PackError::PipeInStringLiteral { span: t.span });
            }
        }
    }

    let runs = scan_word_runs(source);
    let dictionary = build_dictionary(&runs);
    let payload = encode_payload(source, &dictionary.index_of);
    let dict_string = dictionary.entries.join("|");
    let count = dictionary.entries.len().max(1);

    debug_assert_eq!(
        simulate_decode(&payload, &dictionary.entries),
        source,
        "packer round-trip failed"
    );

    let payload_lit = single_quote(&payload);
    let dict_lit = single_quote(&dict_string);
    let packed = if fast_decode {
        format!(
            "eval(function(p,a,c,k,e,d){{e=function(c){{return c.toString(a)}};\
if(!''.replace(/^/,String)){{while(c--){{d[e(c)]=k[c]||e(c)}}c=k.length}}\
while(c--){{p=p.replace(new RegExp('\\\\b'+e(c)+'\\\\b','g'),d[e(c)])}}\
return p}}({payload_lit},36,{count},{dict_lit}.split('|'),0,{{}}))"
        )
    } else {
        format!(
            "eval(function(p,a,c,k,e,d){{while(c--){{if(k[c]){{\
p=p.replace(new RegExp('\\\\b'+c.toString(a)+'\\\\b','g'),k[c])}}}}\
return p}}({payload_lit},36,{count},{dict_lit}.split('|')))"
        )
    };
    Ok(packed)
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

#[derive(Debug)]
struct WordRuns {
    /// Distinct runs in first-occurrence order.
    distinct: Vec<String>,
    freq: HashMap<String, usize>,
}

fn scan_word_runs(source: &str) -> WordRuns {
    let bytes = source.as_bytes();
    let mut distinct = Vec::new();
    let mut freq: HashMap<String, usize> = HashMap::new();
    let mut i = 0;
    while i < bytes.len() {
        if is_word_byte(bytes[i]) {
            let start = i;
            while i < bytes.len() && is_word_byte(bytes[i]) {
                i += 1;
            }
            let run = &source[start..i];
            match freq.get_mut(run) {
                Some(n) => *n += 1,
                None => {
                    freq.insert(run.to_string(), 1);
                    distinct.push(run.to_string());
                }
            }
        } else {
            i += 1;
            while i < bytes.len() && (bytes[i] & 0xC0) == 0x80 {
                i += 1; // continuation bytes of a UTF-8 sequence
            }
        }
    }
    WordRuns { distinct, freq }
}

/// Value of a run that is exactly the lowercase base-36 rendering of
/// some integer (no leading zeros, no uppercase). Only such runs can
/// ever collide with an emitted token.
fn canonical_base36(run: &str) -> Option<u128> {
    let mut value: u128 = 0;
    for b in run.bytes() {
        let digit = match b {
            b'0'..=b'9' => (b - b'0') as u128,
            b'a'..=b'z' => (b - b'a') as u128 + 10,
            _ => return None,
        };
        value = value.checked_mul(36)?.checked_add(digit)?;
    }
    if !run.is_empty() && to_base36(value) == run {
        Some(value)
    } else {
        None
    }
}

fn token_for(index: usize) -> String {
    to_base36(index as u128)
}

struct Dictionary {
    /// Entry per slot; empty strings are reserved (skipped) slots.
    entries: Vec<String>,
    /// Packed word → slot index.
    index_of: HashMap<String, usize>,
}

fn is_packable(run: &str) -> bool {
    run.len() >= 2
        && run
            .bytes()
            .next()
            .is_some_and(|b| b.is_ascii_alphabetic() || b == b'_')
}

fn build_dictionary(runs: &WordRuns) -> Dictionary {
    // Most-frequent-first, ties by first occurrence.
    let mut packable: Vec<String> = runs
        .distinct
        .iter()
        .filter(|r| is_packable(r))
        .cloned()
        .collect();
    packable.sort_by(|a, b| {
        runs.freq[b].cmp(&runs.freq[a]).then_with(|| {
            let pa = runs.distinct.iter().position(|r| r == a).unwrap();
            let pb = runs.distinct.iter().position(|r| r == b).unwrap();
            pa.cmp(&pb)
        })
    });

    loop {
        let packed_set: HashSet<&String> = packable.iter().collect();
        // Runs that must keep their literal spelling and would read as a
        // token: reserve their slots.
        let stray: HashSet<&String> = runs
            .distinct
            .iter()
            .filter(|r| !packed_set.contains(*r) && canonical_base36(r).is_some())
            .collect();

        let mut entries: Vec<String> = Vec::new();
        let mut index_of: HashMap<String, usize> = HashMap::new();
        for word in &packable {
            while stray.contains(&token_for(entries.len())) {
                entries.push(String::new());
            }
            index_of.insert(word.clone(), entries.len());
            entries.push(word.clone());
        }
        let size = entries.len() as u128;

        // A packed word that itself reads as a token must sit at its own
        // slot, otherwise decoding would rewrite it; demote violators.
        let violator = packable.iter().position(|w| {
            canonical_base36(w)
                .is_some_and(|v| v < size && entries[v as usize] != *w)
        });
        match violator {
            Some(i) => {
                packable.remove(i);
            }
            None => {
                return Dictionary { entries, index_of };
            }
        }
    }
}

fn encode_payload(source: &str, index_of: &HashMap<String, usize>) -> String {
    let bytes = source.as_bytes();
    let mut out = String::with_capacity(source.len());
    let mut i = 0;
    while i < bytes.len() {
        if is_word_byte(bytes[i]) {
            let start = i;
            while i < bytes.len() && is_word_byte(bytes[i]) {
                i += 1;
            }
            let run = &source[start..i];
            match index_of.get(run) {
                Some(idx) => out.push_str(&token_for(*idx)),
                None => out.push_str(run),
            }
        } else {
            let start = i;
            i += 1;
            while i < bytes.len() && (bytes[i] & 0xC0) == 0x80 {
                i += 1;
            }
            out.push_str(&source[start..i]);
        }
    }
    out
}

/// Rust-side inverse of the emitted decoder, for self-checks and tests.
pub fn simulate_decode(payload: &str, entries: &[String]) -> String {
    let mut p = payload.to_string();
    for c in (0..entries.len()).rev() {
        if entries[c].is_empty() {
            continue;
        }
        let re = MiniRegex::parse(&format!("\\b{}\\b", token_for(c)), "g")
            .expect("token regex is valid");
        let matches = re.find_matches(&p);
        if matches.is_empty() {
            continue;
        }
        let mut out = String::with_capacity(p.len());
        let mut last = 0;
        for (s, e) in matches {
            out.push_str(&p[last..s]);
            out.push_str(&entries[c]);
            last = e;
        }
        out.push_str(&p[last..]);
        p = out;
    }
    p
}

fn single_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\x{:02X}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::count_nodes;
    use crate::sandbox::{execute, trace_equal, EventKind, ExecLimits};

    const WELCOME: &str =
        "function welcome(){console.log(\"Hi, how are you?\")}welcome();";

    #[test]
    fn welcome_dictionary_is_the_expected_permutation() {
        let packed = eval_pack(WELCOME, false).unwrap();
        // The dictionary literal sits in the final argument list.
        let dict_start = packed.rfind(",'").unwrap() + 2;
        let dict_end = packed[dict_start..].find('\'').unwrap() + dict_start;
        let dict = &packed[dict_start..dict_end];
        let mut words: Vec<&str> = dict.split('|').filter(|w| !w.is_empty()).collect();
        words.sort_unstable();
        let mut expected = vec![
            "welcome", "you", "are", "how", "Hi", "log", "console", "function",
        ];
        expected.sort_unstable();
        assert_eq!(words, expected);
    }

    #[test]
    fn packed_welcome_executes_to_the_golden_trace() {
        for fast in [false, true] {
            let packed = eval_pack(WELCOME, fast).unwrap();
            let t = execute(&packed, ExecLimits::default());
            assert!(t.completed(), "fast={fast}: {:?}\n{packed}", t.terminated);
            assert_eq!(t.events.len(), 1, "fast={fast}");
            assert_eq!(t.events[0].name, "console.log");
            assert_eq!(t.events[0].kind, EventKind::Call);
            assert_eq!(t.events[0].args, vec!["Hi, how are you?".to_string()]);
        }
    }

    #[test]
    fn packed_node_count_is_payload_independent() {
        // Scripts of very different sizes pack to the same tree shape:
        // the payload only changes string literal contents.
        let small = "function tiny(){console.log(\"x\")}tiny();";
        let mut big = String::new();
        for i in 0..40 {
            big.push_str(&format!("function helper{i}(value){{return value+{i};}}"));
        }
        big.push_str("console.log(helper0(1));");
        let count = |src: &str, fast: bool| {
            let packed = eval_pack(src, fast).unwrap();
            count_nodes(&parse(&packed).unwrap())
        };
        for fast in [false, true] {
            let a = count(small, fast);
            let b = count(&big, fast);
            assert_eq!(a, b, "fast={fast}: packed tree shape must not vary");
            assert!(a < 150, "fast={fast}: packed node count {a} too large");
        }
    }

    #[test]
    fn pipe_in_string_is_rejected_and_hex_encoding_works_around_it() {
        let src = "console.log(\"a|b\");";
        match eval_pack(src, false) {
            Err(PackError::PipeInStringLiteral { .. }) => {}
            other => panic!("expected pipe error, got {other:?}"),
        }
        // Hex-escaped pipe passes and still prints the right text.
        let hex_src = "console.log(\"a\\x7Cb\");";
        let packed = eval_pack(hex_src, false).unwrap();
        let t = execute(&packed, ExecLimits::default());
        assert!(t.completed());
        assert_eq!(t.events[0].args, vec!["a|b".to_string()]);
    }

    #[test]
    fn minified_single_letter_locals_survive_packing() {
        // Single-letter identifiers collide with base-36 tokens unless
        // their slots are reserved.
        let src = "var a=1;var b=2;function f(c){return c+a+b;}console.log(f(3));";
        let packed = eval_pack(src, false).unwrap();
        let t1 = execute(src, ExecLimits::default());
        let t2 = execute(&packed, ExecLimits::default());
        assert!(trace_equal(&t1, &t2), "{packed}");
    }

    #[test]
    fn digit_runs_survive_packing() {
        let src = "console.log(10 + 5, \"v2 7 z\");";
        for fast in [false, true] {
            let packed = eval_pack(src, fast).unwrap();
            let t1 = execute(src, ExecLimits::default());
            let t2 = execute(&packed, ExecLimits::default());
            assert!(trace_equal(&t1, &t2), "fast={fast}: {packed}");
        }
    }

    #[test]
    fn canonical_base36_words_selfmap_or_stay_literal() {
        // "do" is reserved; "go"/"ab" are plain words that read as
        // base-36 numbers. With a small dictionary they pack normally.
        let src = "function go(ab){return ab+1;}console.log(go(1));";
        for fast in [false, true] {
            let packed = eval_pack(src, fast).unwrap();
            let t1 = execute(src, ExecLimits::default());
            let t2 = execute(&packed, ExecLimits::default());
            assert!(trace_equal(&t1, &t2), "fast={fast}: {packed}");
        }
    }

    #[test]
    fn empty_and_trivial_sources_pack() {
        for (src, fast) in [("", false), ("", true), ("a=0;", false), ("a=0;", true)] {
            let packed = eval_pack(src, fast).unwrap();
            let t = execute(&packed, ExecLimits::default());
            assert!(t.completed(), "src={src:?} fast={fast}: {:?}", t.terminated);
            assert!(t.events.is_empty());
        }
    }

    #[test]
    fn syntax_errors_are_reported() {
        assert!(matches!(
            eval_pack("function f({a}){}", false),
            Err(PackError::Syntax(_))
        ));
    }

    #[test]
    fn multiline_source_round_trips_through_escaping() {
        let src = "var message = \"line\";\nfunction show() {\n    console.log(message);\n}\nshow();";
        let packed = eval_pack(src, true).unwrap();
        let t1 = execute(src, ExecLimits::default());
        let t2 = execute(&packed, ExecLimits::default());
        assert!(trace_equal(&t1, &t2), "{packed}");
    }

    use crate::parser::parse;
}
