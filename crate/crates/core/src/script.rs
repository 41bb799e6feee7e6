//! Script identity: URL + source + content hash, and the JSON-lines
//! corpus manifest that ties scripts on disk to their labels and
//! obfuscation provenance.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

/// SHA-256 of the exact source bytes, lowercase hex.
pub fn hash_source(source: &str) -> String {
    let digest = Sha256::digest(source.as_bytes());
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Control scripts are originals; treatment scripts are obfuscated
/// replacements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Control,
    Treatment,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::Control => write!(f, "control"),
            Group::Treatment => write!(f, "treatment"),
        }
    }
}

/// One unit of JavaScript with its identity and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    pub url: String,
    pub source: String,
    pub content_hash: String,
    pub group: Group,
    pub obfuscator_id: Option<String>,
}

impl Script {
    /// Build a control-group script; the URL is stripped of any fragment
    /// and the hash computed from the source bytes.
    pub fn control(url: &str, source: impl Into<String>) -> Self {
        let source = source.into();
        Self {
            url: strip_fragment(url),
            content_hash: hash_source(&source),
            source,
            group: Group::Control,
            obfuscator_id: None,
        }
    }

    pub fn treatment(url: &str, source: impl Into<String>, obfuscator_id: &str) -> Self {
        let source = source.into();
        Self {
            url: strip_fragment(url),
            content_hash: hash_source(&source),
            source,
            group: Group::Treatment,
            obfuscator_id: Some(obfuscator_id.to_string()),
        }
    }

    /// Invariant check: the stored hash matches the source bytes and the
    /// URL carries no fragment.
    pub fn verify(&self) -> bool {
        self.content_hash == hash_source(&self.source) && !self.url.contains('#')
    }
}

/// Drop the `#fragment` component of a URL, if any.
pub fn strip_fragment(url: &str) -> String {
    match url.find('#') {
        Some(i) => url[..i].to_string(),
        None => url.to_string(),
    }
}

/// One line of the corpus manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub url: String,
    /// Path of the `.js` file, relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
    pub group: Group,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub obfuscator_id: Option<String>,
    /// Ground-truth label from the corpus generator: "fp" or "nonfp".
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub site_id: Option<String>,
    /// Hash of the original control script (treatment entries only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub original_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub node_count_before: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub node_count_after: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad manifest line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Read a JSON-lines manifest.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, ManifestError> {
    let file = std::fs::File::open(path).map_err(|source| ManifestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = std::io::BufReader::new(file);
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| ManifestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let entry =
            serde_json::from_str(&line).map_err(|source| ManifestError::Parse {
                line: i + 1,
                source,
            })?;
        entries.push(entry);
    }
    Ok(entries)
}

/// Write a JSON-lines manifest (one entry per line, in order).
pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<(), ManifestError> {
    let mut file = std::fs::File::create(path).map_err(|source| ManifestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    for entry in entries {
        let line = serde_json::to_string(entry).expect("manifest entry serializes");
        writeln!(file, "{line}").map_err(|source| ManifestError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_hash_is_the_published_vector() {
        assert_eq!(
            hash_source(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn hashing_is_deterministic_and_byte_sensitive() {
        let a = hash_source("var a=1;");
        let b = hash_source("var a=1;");
        let c = hash_source("var a=1;\n");
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn fragment_is_stripped() {
        let s = Script::control("http://example.test/app.js#frag", "var a=1;");
        assert_eq!(s.url, "http://example.test/app.js");
        assert!(s.verify());
    }

    #[test]
    fn manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.jsonl");
        let entries = vec![
            ManifestEntry {
                url: "http://a.test/x.js".into(),
                path: "control/x.js".into(),
                sha256: hash_source("var a=1;"),
                group: Group::Control,
                obfuscator_id: None,
                label: "nonfp".into(),
                site_id: Some("site-0".into()),
                original_hash: None,
                node_count_before: None,
                node_count_after: None,
            },
            ManifestEntry {
                url: "http://a.test/x.js".into(),
                path: "treatment/jsobf_high/x.js".into(),
                sha256: hash_source("var b=2;"),
                group: Group::Treatment,
                obfuscator_id: Some("jsobf_high".into()),
                label: "nonfp".into(),
                site_id: Some("site-0".into()),
                original_hash: Some(hash_source("var a=1;")),
                node_count_before: Some(5),
                node_count_after: Some(9),
            },
        ];
        write_manifest(&path, &entries).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(back, entries);
    }
}
