//! Minimal regex support: exactly the forms the eval packer emits.
//!
//! Two shapes are recognized: the bare `^` anchor (used by the packer's
//! environment probe `''.replace(/^/,String)`) and `\b<token>\b` where
//! the token is a run of word characters (the per-token decode replace).
//! Anything else is rejected at construction.

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MiniRegex {
    /// `/^/` — empty match at position 0.
    CaretAnchor { global: bool },
    /// `/\btoken\b/` — whole-word literal token.
    WordBounded { token: String, global: bool },
}

// JS regex `\w` excludes `$`; boundary checks must agree with it.
fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl MiniRegex {
    /// Parse a pattern/flags pair; `None` when the pattern is outside the
    /// supported subset.
    pub fn parse(pattern: &str, flags: &str) -> Option<MiniRegex> {
        if !flags.chars().all(|c| c == 'g') {
            return None;
        }
        let global = flags.contains('g');
        if pattern == "^" {
            return Some(MiniRegex::CaretAnchor { global });
        }
        let token = pattern
            .strip_prefix("\\b")
            .and_then(|rest| rest.strip_suffix("\\b"))?;
        if token.is_empty() || !token.chars().all(is_word_char) {
            return None;
        }
        Some(MiniRegex::WordBounded {
            token: token.to_string(),
            global,
        })
    }

    pub fn source(&self) -> String {
        match self {
            MiniRegex::CaretAnchor { .. } => "^".to_string(),
            MiniRegex::WordBounded { token, .. } => format!("\\b{token}\\b"),
        }
    }

    /// All match ranges (byte offsets) in `haystack`, honoring the global
    /// flag.
    pub fn find_matches(&self, haystack: &str) -> Vec<(usize, usize)> {
        match self {
            MiniRegex::CaretAnchor { .. } => vec![(0, 0)],
            MiniRegex::WordBounded { token, global } => {
                let mut out = Vec::new();
                let bytes = haystack.as_bytes();
                let tlen = token.len();
                let mut at = 0;
                while let Some(rel) = haystack[at..].find(token.as_str()) {
                    let start = at + rel;
                    let end = start + tlen;
                    let before_ok = start == 0
                        || !is_word_char(prev_char(haystack, start));
                    let after_ok =
                        end == bytes.len() || !is_word_char(next_char(haystack, end));
                    if before_ok && after_ok {
                        out.push((start, end));
                        if !global {
                            return out;
                        }
                        at = end;
                    } else {
                        at = start + token[..].chars().next().map_or(1, char::len_utf8);
                    }
                }
                out
            }
        }
    }
}

fn prev_char(s: &str, at: usize) -> char {
    s[..at].chars().next_back().unwrap()
}

fn next_char(s: &str, at: usize) -> char {
    s[at..].chars().next().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_supported_shapes() {
        assert_eq!(
            MiniRegex::parse("^", ""),
            Some(MiniRegex::CaretAnchor { global: false })
        );
        assert_eq!(
            MiniRegex::parse("\\b7\\b", "g"),
            Some(MiniRegex::WordBounded {
                token: "7".into(),
                global: true
            })
        );
        assert_eq!(
            MiniRegex::parse("\\bwelcome\\b", "g"),
            Some(MiniRegex::WordBounded {
                token: "welcome".into(),
                global: true
            })
        );
        assert!(MiniRegex::parse("a+", "").is_none());
        assert!(MiniRegex::parse("\\b\\b", "g").is_none());
        assert!(MiniRegex::parse("^", "i").is_none());
    }

    #[test]
    fn word_boundaries_are_respected() {
        let re = MiniRegex::parse("\\b7\\b", "g").unwrap();
        // `7` inside `17` or `7a` must not match.
        assert_eq!(re.find_matches("7 17 a7a 7;7"), vec![(0, 1), (9, 10), (11, 12)]);
    }

    #[test]
    fn non_global_stops_after_first() {
        let re = MiniRegex::parse("\\bab\\b", "").unwrap();
        assert_eq!(re.find_matches("ab ab"), vec![(0, 2)]);
    }

    #[test]
    fn caret_matches_empty_at_start() {
        let re = MiniRegex::parse("^", "").unwrap();
        assert_eq!(re.find_matches("xyz"), vec![(0, 0)]);
    }
}
