//! Deterministic execution of subset JavaScript with stubbed browser
//! APIs; produces normalized [`ExecutionTrace`]s, the dynamic-analysis
//! signal.
//!
//! One interpreter instance per execution; instances share nothing.
//! Every trace is a pure function of the source text and the limits:
//! fixed stub constants, a fixed-seed `Math.random`, no timers, no
//! host entropy.

mod interp;
mod jsregex;
mod stubs;
mod trace;
mod value;

pub use interp::ExecLimits;
pub use jsregex::MiniRegex;
pub use stubs::{
    StubId, FINGERPRINTING_API_NAMES, REGISTRY_VERSION, TRACED_API_NAMES,
};
pub use trace::{
    trace_diff, trace_equal, EventKind, ExecutionTrace, Termination, TraceDivergence,
    TraceEvent, MAX_ARG_CHARS, TRACE_FORMAT_VERSION,
};

use crate::parser::parse;
use interp::{Interp, Interrupt};

/// Execute a script and collect its trace. Parse failures become
/// `runtime_error` terminations rather than operation-level errors.
pub fn execute(source: &str, limits: ExecLimits) -> ExecutionTrace {
    run(source, limits, false).0
}

/// Like [`execute`], also reporting which statement spans ran at least
/// once (byte offsets into `source`). Used to assert that decoy code
/// stays unvisited.
pub fn execute_with_coverage(
    source: &str,
    limits: ExecLimits,
) -> (ExecutionTrace, Vec<(u32, u32)>) {
    let (trace, cov) = run(source, limits, true);
    (trace, cov)
}

fn run(source: &str, limits: ExecLimits, coverage: bool) -> (ExecutionTrace, Vec<(u32, u32)>) {
    let program = match parse(source) {
        Ok(p) => p,
        Err(diag) => {
            let trace = ExecutionTrace::new(
                Vec::new(),
                Termination::RuntimeError {
                    message: format!("SyntaxError: {diag}"),
                },
            );
            return (trace, Vec::new());
        }
    };
    let mut interp = Interp::new(limits, coverage);
    let terminated = match interp.run_program(&program) {
        Ok(()) => Termination::Completed,
        Err(Interrupt::Throw(v)) => {
            let message = interp
                .to_string(&v)
                .unwrap_or_else(|_| "<unprintable exception>".to_string());
            Termination::RuntimeError {
                message: format!("uncaught: {message}"),
            }
        }
        Err(Interrupt::Fatal(t)) => t,
    };
    let events = std::mem::take(&mut interp.events);
    let trace = ExecutionTrace::new(events, terminated);
    debug_assert!(trace.check_freq_consistency());
    let mut cov: Vec<(u32, u32)> = interp
        .coverage
        .take()
        .map(|set| set.into_iter().collect())
        .unwrap_or_default();
    cov.sort_unstable();
    (trace, cov)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exec(src: &str) -> ExecutionTrace {
        execute(src, ExecLimits::default())
    }

    #[test]
    fn welcome_trace_golden() {
        let t = exec(r#"function welcome(){console.log("Hi, how are you?")}welcome();"#);
        assert_eq!(t.terminated, Termination::Completed);
        assert_eq!(t.events.len(), 1);
        assert_eq!(t.events[0].name, "console.log");
        assert_eq!(t.events[0].kind, EventKind::Call);
        assert_eq!(t.events[0].args, vec!["Hi, how are you?".to_string()]);
        assert_eq!(t.freq.get("console.log"), Some(&1));
    }

    #[test]
    fn infinite_loop_hits_step_limit() {
        let t = execute(
            "while(true){}",
            ExecLimits {
                max_steps: 10_000,
                ..Default::default()
            },
        );
        assert_eq!(t.terminated, Termination::StepLimit);
        assert!(t.events.is_empty());
    }

    #[test]
    fn parse_failure_becomes_runtime_error() {
        let t = exec("function f({a}){}");
        assert!(matches!(t.terminated, Termination::RuntimeError { .. }));
    }

    #[test]
    fn eval_executes_in_calling_scope() {
        let t = exec(r#"eval("var x=\"from eval\";");console.log(x);"#);
        assert_eq!(t.terminated, Termination::Completed);
        assert_eq!(t.events[0].args, vec!["from eval".to_string()]);
    }

    #[test]
    fn eval_depth_is_limited() {
        // Each eval level re-enters eval; depth 8 is the default cap.
        let src = r#"
var depth = 0;
function go() {
    depth = depth + 1;
    eval("go();");
}
go();
"#;
        let t = exec(src);
        assert!(matches!(
            &t.terminated,
            Termination::RuntimeError { message } if message.contains("eval depth")
        ));
    }

    #[test]
    fn eval_transparency() {
        // trace(eval(Q(s))) == trace(s) for quoted source Q(s).
        let inner = r#"function welcome(){console.log("Hi, how are you?")}welcome();"#;
        let quoted = crate::printer::quote_string(inner, false);
        let t_direct = exec(inner);
        let t_eval = exec(&format!("eval({quoted});"));
        assert!(trace_equal(&t_direct, &t_eval));
    }

    #[test]
    fn fingerprinting_apis_are_traced() {
        let src = r#"
var canvas = document.createElement("canvas");
var ctx = canvas.getContext("2d");
ctx.fillText("fp", 2, 2);
var m = ctx.measureText("fp");
var data = canvas.toDataURL();
var ua = navigator.userAgent;
console.log(m.width, data, ua);
"#;
        let t = exec(src);
        assert_eq!(t.terminated, Termination::Completed);
        let names: Vec<&str> = t.events.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "document.createElement",
                "HTMLCanvasElement.getContext",
                "CanvasRenderingContext2D.fillText",
                "CanvasRenderingContext2D.measureText",
                "HTMLCanvasElement.toDataURL",
                "navigator.userAgent",
                "console.log",
            ]
        );
        // Method calls collapse to a single call event (no get).
        assert!(t.events.iter().all(|e| e.kind == EventKind::Call || e.name == "navigator.userAgent"));
    }

    #[test]
    fn language_builtins_are_untraced() {
        let src = r#"
var s = "a|b|c".split("|").join("-");
var n = parseInt("0x10");
var r = Math.floor(Math.random() * 10);
var w = "abc".charCodeAt(1);
console.log(s, n, r, w);
"#;
        let t = exec(src);
        assert_eq!(t.terminated, Termination::Completed);
        assert_eq!(t.events.len(), 1);
        assert_eq!(t.events[0].name, "console.log");
    }

    #[test]
    fn stub_values_are_fixed_constants() {
        let t1 = exec("console.log(navigator.userAgent, screen.width, screen.colorDepth);");
        let t2 = exec("console.log(navigator.userAgent, screen.width, screen.colorDepth);");
        assert_eq!(t1, t2);
        let log = t1.events.last().unwrap();
        assert!(log.args[0].starts_with("Mozilla/5.0 (X11; Linux x86_64)"));
        assert_eq!(log.args[1], "1920");
        assert_eq!(log.args[2], "24");
    }

    #[test]
    fn math_random_is_deterministic_across_runs() {
        let src = "console.log(Math.random(), Math.random());";
        assert!(trace_equal(&exec(src), &exec(src)));
    }

    #[test]
    fn audio_and_webgl_surfaces() {
        let src = r#"
var ac = new AudioContext();
var osc = ac.createOscillator();
var an = ac.createAnalyser();
osc.connect(an);
osc.start();
var bins = [];
var n = an.frequencyBinCount;
var i = 0;
while (i < n) { bins.push(0); i = i + 1; }
an.getFloatFrequencyData(bins);
var canvas = document.createElement("canvas");
var gl = canvas.getContext("webgl");
var vendor = gl.getParameter(37445);
var exts = gl.getSupportedExtensions();
console.log(bins[0], vendor, exts.join(","));
"#;
        let t = exec(src);
        assert_eq!(t.terminated, Termination::Completed);
        assert_eq!(t.freq.get("AudioContext"), Some(&1));
        assert_eq!(t.freq.get("AudioContext.createOscillator"), Some(&1));
        assert_eq!(t.freq.get("AnalyserNode.getFloatFrequencyData"), Some(&1));
        assert_eq!(t.freq.get("AnalyserNode.frequencyBinCount"), Some(&1));
        assert_eq!(t.freq.get("WebGLRenderingContext.getParameter"), Some(&1));
        let log = t.events.last().unwrap();
        assert_eq!(log.args[0], "-100");
        assert_eq!(log.args[1], "Stub Inc.");
    }

    #[test]
    fn uncaught_throw_is_a_runtime_error() {
        let t = exec(r#"throw "boom";"#);
        assert!(matches!(
            &t.terminated,
            Termination::RuntimeError { message } if message.contains("boom")
        ));
    }

    #[test]
    fn try_catch_catches_reference_errors() {
        let t = exec(r#"try{missing();}catch(e){console.log("caught");}"#);
        assert_eq!(t.terminated, Termination::Completed);
        assert_eq!(t.events[0].args, vec!["caught".to_string()]);
    }

    #[test]
    fn switch_falls_through_without_break() {
        let t = exec(
            r#"
var out = [];
switch (2) {
    case 1: out.push("one");
    case 2: out.push("two");
    case 3: out.push("three");
    default: out.push("done");
}
console.log(out.join("|"));
"#,
        );
        assert_eq!(t.events[0].args, vec!["two|three|done".to_string()]);
    }

    #[test]
    fn var_hoisting_within_functions() {
        let t = exec(
            r#"
function f() {
    console.log(typeof x);
    if (false) { var x = 1; }
    return x;
}
console.log(f());
"#,
        );
        assert_eq!(t.terminated, Termination::Completed);
        assert_eq!(t.events[0].args, vec!["undefined".to_string()]);
        assert_eq!(t.events[1].args, vec!["undefined".to_string()]);
    }

    #[test]
    fn closures_capture_environment() {
        let t = exec(
            r#"
function counter() {
    var n = 0;
    return function() { n = n + 1; return n; };
}
var c = counter();
c();
c();
console.log(c());
"#,
        );
        assert_eq!(t.events[0].args, vec!["3".to_string()]);
    }

    #[test]
    fn string_limit_aborts() {
        let t = execute(
            r#"var s="x";while(true){s=s+s;}"#,
            ExecLimits {
                max_string_len: 4096,
                ..Default::default()
            },
        );
        assert!(matches!(
            &t.terminated,
            Termination::RuntimeError { message } if message.contains("string length")
        ));
    }

    #[test]
    fn packer_decoder_primitives_work() {
        // The exact constructs the eval packer relies on.
        let src = r#"
var p = "1 0(){2.3(\"4\")}0();";
var k = "welcome|function|console|log|Hi".split("|");
var c = k.length;
var a = 36;
while (c--) {
    if (k[c]) {
        p = p.replace(new RegExp("\\b" + c.toString(a) + "\\b", "g"), k[c]);
    }
}
console.log(p);
"#;
        let t = exec(src);
        assert_eq!(t.terminated, Termination::Completed);
        assert_eq!(
            t.events[0].args,
            vec!["function welcome(){console.log(\"Hi\")}welcome();".to_string()]
        );
    }

    #[test]
    fn caret_replace_probe_works() {
        let t = exec(r#"console.log(!''.replace(/^/, String) ? "empty" : "nonempty");"#);
        assert_eq!(t.events[0].args, vec!["empty".to_string()]);
    }

    #[test]
    fn coverage_reports_visited_statements() {
        let src = "var a=1;if(7*3<20){a=2;}console.log(a);";
        let (t, cov) = execute_with_coverage(src, ExecLimits::default());
        assert_eq!(t.terminated, Termination::Completed);
        assert_eq!(t.events[0].args, vec!["1".to_string()]);
        // The guarded assignment never runs.
        let guarded_start = src.find("a=2").unwrap() as u32;
        assert!(!cov.iter().any(|(s, e)| *s <= guarded_start && guarded_start < *e
            && (*e - *s) < 10));
    }

    #[test]
    fn window_access_is_traced_and_aliases_globals() {
        let t = exec("console.log(window.navigator.userAgent === navigator.userAgent);");
        let names: Vec<&str> = t.events.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "window.navigator",
                "navigator.userAgent",
                "navigator.userAgent",
                "console.log"
            ]
        );
        assert_eq!(t.events.last().unwrap().args, vec!["true".to_string()]);
    }
}
