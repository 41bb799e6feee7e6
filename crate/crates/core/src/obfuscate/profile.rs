//! Obfuscation tool profiles: which transforms run, at which
//! probabilities, under which seed.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub const THRESHOLD_CONTROL_FLOW: &str = "control_flow_flattening";
pub const THRESHOLD_DEAD_CODE: &str = "dead_code";
pub const THRESHOLD_STRING_ARRAY: &str = "string_array";

/// The seven modeled tools: the four javascript-obfuscator presets, a
/// Closure-style minifier, and the two eval packers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Tool {
    JsobfDefault,
    JsobfLow,
    JsobfMedium,
    JsobfHigh,
    ClosureLike,
    DaftlogicLike,
    BeautifyFastdecode,
}

impl Tool {
    pub const ALL: [Tool; 7] = [
        Tool::JsobfDefault,
        Tool::JsobfLow,
        Tool::JsobfMedium,
        Tool::JsobfHigh,
        Tool::ClosureLike,
        Tool::DaftlogicLike,
        Tool::BeautifyFastdecode,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Tool::JsobfDefault => "jsobf_default",
            Tool::JsobfLow => "jsobf_low",
            Tool::JsobfMedium => "jsobf_medium",
            Tool::JsobfHigh => "jsobf_high",
            Tool::ClosureLike => "closure_like",
            Tool::DaftlogicLike => "daftlogic_like",
            Tool::BeautifyFastdecode => "beautify_fastdecode",
        }
    }

    /// The two profiles that wrap the whole script in an eval packer.
    pub fn is_eval_packer(self) -> bool {
        matches!(self, Tool::DaftlogicLike | Tool::BeautifyFastdecode)
    }
}

impl fmt::Display for Tool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownTool(pub String);

impl fmt::Display for UnknownTool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown obfuscation profile {:?}", self.0)
    }
}

impl std::error::Error for UnknownTool {}

impl FromStr for Tool {
    type Err = UnknownTool;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Tool::ALL
            .into_iter()
            .find(|t| t.id() == s)
            .ok_or_else(|| UnknownTool(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProfileFlags {
    pub fast_decode: bool,
    pub rotate_string_array: bool,
    pub hex_encode_strings: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObfuscationProfile {
    pub tool: Tool,
    /// Transform name → probability in [0,1].
    pub thresholds: BTreeMap<String, f64>,
    pub seed: u64,
    pub flags: ProfileFlags,
}

impl ObfuscationProfile {
    /// Preset threshold table for a tool. The one published datum is the
    /// medium preset's 0.75 control-flow-flattening probability (high is
    /// 1.0); dead-code and string-array values follow the presets' spirit
    /// and are plain configuration.
    pub fn preset(tool: Tool, seed: u64) -> Self {
        let (cff, dead, strarr, rotate, hex) = match tool {
            Tool::JsobfLow => (0.0, 0.0, 1.0, false, false),
            Tool::JsobfDefault => (0.0, 0.1, 1.0, false, false),
            Tool::JsobfMedium => (0.75, 0.4, 1.0, true, false),
            Tool::JsobfHigh => (1.0, 1.0, 1.0, true, true),
            Tool::ClosureLike | Tool::DaftlogicLike | Tool::BeautifyFastdecode => {
                (0.0, 0.0, 0.0, false, false)
            }
        };
        let mut thresholds = BTreeMap::new();
        if matches!(
            tool,
            Tool::JsobfDefault | Tool::JsobfLow | Tool::JsobfMedium | Tool::JsobfHigh
        ) {
            thresholds.insert(THRESHOLD_CONTROL_FLOW.to_string(), cff);
            thresholds.insert(THRESHOLD_DEAD_CODE.to_string(), dead);
            thresholds.insert(THRESHOLD_STRING_ARRAY.to_string(), strarr);
        }
        Self {
            tool,
            thresholds,
            seed,
            flags: ProfileFlags {
                fast_decode: tool == Tool::BeautifyFastdecode,
                rotate_string_array: rotate,
                hex_encode_strings: hex,
            },
        }
    }

    /// All seven presets under one seed.
    pub fn all_presets(seed: u64) -> Vec<Self> {
        Tool::ALL
            .into_iter()
            .map(|t| Self::preset(t, seed))
            .collect()
    }

    pub fn threshold(&self, name: &str) -> f64 {
        self.thresholds.get(name).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, value) in &self.thresholds {
            if !(0.0..=1.0).contains(value) {
                return Err(format!("threshold {name} = {value} outside [0,1]"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_thresholds_are_monotone_across_modes() {
        let seed = 1;
        let low = ObfuscationProfile::preset(Tool::JsobfLow, seed);
        let def = ObfuscationProfile::preset(Tool::JsobfDefault, seed);
        let med = ObfuscationProfile::preset(Tool::JsobfMedium, seed);
        let high = ObfuscationProfile::preset(Tool::JsobfHigh, seed);
        for key in [
            THRESHOLD_CONTROL_FLOW,
            THRESHOLD_DEAD_CODE,
            THRESHOLD_STRING_ARRAY,
        ] {
            let chain = [
                low.threshold(key),
                def.threshold(key),
                med.threshold(key),
                high.threshold(key),
            ];
            assert!(
                chain.windows(2).all(|w| w[0] <= w[1]),
                "{key} not monotone: {chain:?}"
            );
        }
        assert_eq!(med.threshold(THRESHOLD_CONTROL_FLOW), 0.75);
        assert_eq!(high.threshold(THRESHOLD_CONTROL_FLOW), 1.0);
    }

    #[test]
    fn tool_ids_round_trip() {
        for tool in Tool::ALL {
            assert_eq!(tool.id().parse::<Tool>().unwrap(), tool);
        }
        assert!("mystery".parse::<Tool>().is_err());
    }

    #[test]
    fn profiles_serialize_to_json() {
        let p = ObfuscationProfile::preset(Tool::JsobfMedium, 99);
        let json = serde_json::to_string(&p).unwrap();
        let back: ObfuscationProfile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn validation_rejects_bad_thresholds() {
        let mut p = ObfuscationProfile::preset(Tool::JsobfLow, 1);
        p.thresholds.insert(THRESHOLD_DEAD_CODE.into(), 1.5);
        assert!(p.validate().is_err());
    }
}
