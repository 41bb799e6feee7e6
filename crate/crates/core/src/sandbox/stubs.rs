//! Stubbed browser-API surface (the trace registry).
//!
//! The sandbox exposes a curated, fingerprinting-relevant set of host
//! objects. Every get or call on a registry entry is traced under the
//! canonical names listed in [`TRACED_API_NAMES`]. Pure ECMAScript
//! builtins (`Math`, `String`, `parseInt`, `eval`, string/array methods,
//! `RegExp`) are available but deliberately untraced: they are language
//! features, not host APIs, so decoder and dispatcher code injected by
//! obfuscators leaves traces unchanged.
//!
//! Registry rules:
//! - Stub return values are fixed constants (`REGISTRY_VERSION` pins
//!   them); nothing depends on the host machine.
//! - Property writes on stubs are ignored.
//! - Reads outside the listed surface yield `undefined` untraced.
//! - `Math.random` is a fixed-seed generator, identical for every
//!   execution.

pub const REGISTRY_VERSION: u32 = 1;

/// Stub identities. Singletons use their global name; instances use
/// their class name as the canonical trace prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StubId {
    Window,
    Document,
    Navigator,
    Screen,
    Console,
    Math,
    Canvas,
    Ctx2d,
    WebGl,
    Audio,
    Oscillator,
    Analyser,
}

impl StubId {
    pub fn canonical_name(self) -> &'static str {
        match self {
            StubId::Window => "window",
            StubId::Document => "document",
            StubId::Navigator => "navigator",
            StubId::Screen => "screen",
            StubId::Console => "console",
            StubId::Math => "Math",
            StubId::Canvas => "HTMLCanvasElement",
            StubId::Ctx2d => "CanvasRenderingContext2D",
            StubId::WebGl => "WebGLRenderingContext",
            StubId::Audio => "AudioContext",
            StubId::Oscillator => "OscillatorNode",
            StubId::Analyser => "AnalyserNode",
        }
    }

    /// Math is a language builtin, exempt from tracing.
    pub fn traced(self) -> bool {
        !matches!(self, StubId::Math)
    }
}

// Fixed constants. Changing any of these is a registry version bump.
pub const USER_AGENT: &str =
    "Mozilla/5.0 (X11; Linux x86_64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/91.0.4472.114 Safari/537.36";
pub const PLATFORM: &str = "Linux x86_64";
pub const LANGUAGES: &[&str] = &["en-US", "en"];
pub const PLUGINS: &[&str] = &[
    "Chrome PDF Plugin",
    "Chrome PDF Viewer",
    "Native Client",
];
pub const SCREEN_WIDTH: f64 = 1920.0;
pub const SCREEN_HEIGHT: f64 = 1080.0;
pub const SCREEN_COLOR_DEPTH: f64 = 24.0;
pub const CANVAS_DATA_URL: &str =
    "data:image/png;base64,iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR42mP8z8BQDwAEhQGAhKmMIQAAAABJRU5ErkJggg==";
pub const MEASURE_TEXT_WIDTH: f64 = 87.5;
/// RGBA byte pattern returned by `getImageData` (2x1 pixels).
pub const IMAGE_DATA_BYTES: &[f64] = &[17.0, 34.0, 51.0, 255.0, 68.0, 85.0, 102.0, 255.0];
pub const WEBGL_EXTENSIONS: &[&str] = &[
    "ANGLE_instanced_arrays",
    "EXT_blend_minmax",
    "OES_texture_float",
];
pub const ANALYSER_BIN_COUNT: f64 = 32.0;
/// Values cycled into the caller's array by `getFloatFrequencyData`.
pub const FREQUENCY_DATA_PATTERN: &[f64] = &[-100.0, -99.5, -101.25, -98.0];
pub const OSCILLATOR_FREQUENCY: f64 = 440.0;
/// Fixed seed for the in-sandbox `Math.random` stream.
pub const MATH_RANDOM_SEED: u64 = 0x5EED_CAFE_F00D_0001;

/// `getParameter` lookup: GL enum → fixed value. Unknown codes return
/// the string "stub".
pub fn webgl_parameter(code: f64) -> Option<&'static str> {
    match code as i64 {
        7936 => Some("Stub Vendor"),          // VENDOR
        7937 => Some("Stub Renderer"),        // RENDERER
        7938 => Some("WebGL 1.0 (stub)"),     // VERSION
        35724 => Some("WebGL GLSL ES 1.0"),   // SHADING_LANGUAGE_VERSION
        37445 => Some("Stub Inc."),           // UNMASKED_VENDOR_WEBGL
        37446 => Some("Stub Renderer 9000"),  // UNMASKED_RENDERER_WEBGL
        _ => None,
    }
}

/// Every canonical API name the sandbox can emit, in schema order. The
/// dynamic feature schema is derived from this list, so reorder only
/// with a registry version bump.
pub const TRACED_API_NAMES: &[&str] = &[
    "window.navigator",
    "window.document",
    "window.screen",
    "window.console",
    "document.createElement",
    "navigator.userAgent",
    "navigator.platform",
    "navigator.languages",
    "navigator.plugins",
    "screen.width",
    "screen.height",
    "screen.colorDepth",
    "console.log",
    "console.info",
    "console.warn",
    "console.error",
    "HTMLCanvasElement.getContext",
    "HTMLCanvasElement.toDataURL",
    "CanvasRenderingContext2D.fillText",
    "CanvasRenderingContext2D.measureText",
    "CanvasRenderingContext2D.getImageData",
    "WebGLRenderingContext.getParameter",
    "WebGLRenderingContext.getSupportedExtensions",
    "AudioContext",
    "AudioContext.createOscillator",
    "AudioContext.createAnalyser",
    "OscillatorNode.connect",
    "OscillatorNode.start",
    "OscillatorNode.stop",
    "OscillatorNode.frequency",
    "AnalyserNode.frequencyBinCount",
    "AnalyserNode.getFloatFrequencyData",
];

/// API names treated as fingerprinting signals by the evaluation
/// reports (a subset of [`TRACED_API_NAMES`]).
pub const FINGERPRINTING_API_NAMES: &[&str] = &[
    "navigator.userAgent",
    "navigator.platform",
    "navigator.languages",
    "navigator.plugins",
    "screen.width",
    "screen.height",
    "screen.colorDepth",
    "HTMLCanvasElement.getContext",
    "HTMLCanvasElement.toDataURL",
    "CanvasRenderingContext2D.fillText",
    "CanvasRenderingContext2D.measureText",
    "CanvasRenderingContext2D.getImageData",
    "WebGLRenderingContext.getParameter",
    "WebGLRenderingContext.getSupportedExtensions",
    "AudioContext",
    "AudioContext.createOscillator",
    "AudioContext.createAnalyser",
    "OscillatorNode.connect",
    "OscillatorNode.start",
    "OscillatorNode.stop",
    "OscillatorNode.frequency",
    "AnalyserNode.frequencyBinCount",
    "AnalyserNode.getFloatFrequencyData",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprinting_names_are_registered() {
        for name in FINGERPRINTING_API_NAMES {
            assert!(
                TRACED_API_NAMES.contains(name),
                "{name} missing from registry"
            );
        }
    }

    #[test]
    fn registry_names_are_unique() {
        let mut seen = std::collections::HashSet::new();
        for name in TRACED_API_NAMES {
            assert!(seen.insert(name), "duplicate registry entry {name}");
        }
    }
}
