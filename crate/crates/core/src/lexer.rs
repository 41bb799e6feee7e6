//! Hand-rolled lexer for the ES5 subset.
//!
//! Comments (line and block) are dropped here and never resurface in
//! printed output. String escapes are decoded into the token value;
//! surrogate-pair `\uXXXX` escapes are recombined and unpaired surrogates
//! rejected. Regex literals are recognized with the usual
//! previous-token heuristic (a `/` after an identifier, literal, `)` or
//! `]` is division, otherwise a regex).

use crate::ast::Span;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Keyword(&'static str),
    Num(f64),
    Str(String),
    Regex { pattern: String, flags: String },
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexError {
    pub message: String,
    pub span: Span,
}

/// Reserved words of ES5 (keywords, future reserved words, and literal
/// keywords). Names in this set cannot be used as identifiers.
pub const RESERVED: &[&str] = &[
    "break", "case", "catch", "continue", "debugger", "default", "delete", "do", "else", "enum",
    "export", "extends", "false", "finally", "for", "function", "if", "implements", "import",
    "in", "instanceof", "interface", "let", "new", "null", "package", "private", "protected",
    "public", "return", "static", "super", "switch", "this", "throw", "true", "try", "typeof",
    "var", "void", "while", "with", "yield",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word)
}

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

pub fn is_ident_part(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// True when `name` is usable as an identifier in the subset.
pub fn is_valid_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if is_ident_start(c) => {}
        _ => return false,
    }
    chars.all(is_ident_part) && !is_reserved(name)
}

/// Multi-character punctuators, longest first so greedy matching works.
const PUNCTS: &[&str] = &[
    ">>>=", "===", "!==", ">>>", "<<=", ">>=", "==", "!=", "<=", ">=", "&&", "||", "++", "--",
    "<<", ">>", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "{", "}", "(", ")", "[", "]",
    ";", ",", "<", ">", "+", "-", "*", "%", "&", "|", "^", "!", "~", "?", ":", "=", ".", "/",
];

pub struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    /// Last significant token kind, for the regex-vs-division decision.
    prev_allows_regex: bool,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Self {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            prev_allows_regex: true,
        }
    }

    /// Tokenize the whole input. Returns tokens ending with `Eof`.
    pub fn tokenize(mut self) -> Result<Vec<Token>, LexError> {
        let mut out = Vec::new();
        loop {
            let token = self.next_token()?;
            let done = token.tok == Tok::Eof;
            self.prev_allows_regex = match &token.tok {
                Tok::Ident(_) | Tok::Num(_) | Tok::Str(_) | Tok::Regex { .. } => false,
                Tok::Keyword(k) => !matches!(*k, "this" | "true" | "false" | "null"),
                Tok::Punct(p) => !matches!(*p, ")" | "]"),
                Tok::Eof => false,
            };
            out.push(token);
            if done {
                return Ok(out);
            }
        }
    }

    fn error(&self, message: impl Into<String>, start: usize) -> LexError {
        LexError {
            message: message.into(),
            span: Span::new(start as u32, self.pos.max(start + 1).min(self.src.len()) as u32),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<u8> {
        self.bytes.get(self.pos + offset).copied()
    }

    fn skip_trivia(&mut self) -> Result<(), LexError> {
        loop {
            match self.peek() {
                Some(b' ') | Some(b'\t') | Some(b'\r') | Some(b'\n') | Some(0x0b) | Some(0x0c) => {
                    self.pos += 1;
                }
                Some(b'/') if self.peek_at(1) == Some(b'/') => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.pos += 1;
                    }
                }
                Some(b'/') if self.peek_at(1) == Some(b'*') => {
                    let start = self.pos;
                    self.pos += 2;
                    loop {
                        match self.peek() {
                            Some(b'*') if self.peek_at(1) == Some(b'/') => {
                                self.pos += 2;
                                break;
                            }
                            Some(_) => self.pos += 1,
                            None => return Err(self.error("unterminated block comment", start)),
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn next_token(&mut self) -> Result<Token, LexError> {
        self.skip_trivia()?;
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok(Token {
                tok: Tok::Eof,
                span: Span::new(start as u32, start as u32),
            });
        };

        if is_ident_start(c as char) {
            return Ok(self.lex_word(start));
        }
        if c.is_ascii_digit() || (c == b'.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()))
        {
            return self.lex_number(start);
        }
        if c == b'"' || c == b'\'' {
            return self.lex_string(start, c);
        }
        if c == b'/' && self.prev_allows_regex {
            return self.lex_regex(start);
        }
        if !c.is_ascii() {
            return Err(self.error("unexpected non-ASCII character outside string literal", start));
        }
        for p in PUNCTS {
            if self.src[self.pos..].starts_with(p) {
                self.pos += p.len();
                return Ok(Token {
                    tok: Tok::Punct(p),
                    span: Span::new(start as u32, self.pos as u32),
                });
            }
        }
        Err(self.error(format!("unexpected character {:?}", c as char), start))
    }

    fn lex_word(&mut self, start: usize) -> Token {
        while self
            .peek()
            .is_some_and(|c| c.is_ascii() && is_ident_part(c as char))
        {
            self.pos += 1;
        }
        let word = &self.src[start..self.pos];
        let tok = match RESERVED.iter().find(|k| **k == word) {
            Some(k) => Tok::Keyword(k),
            None => Tok::Ident(word.to_string()),
        };
        Token {
            tok,
            span: Span::new(start as u32, self.pos as u32),
        }
    }

    fn lex_number(&mut self, start: usize) -> Result<Token, LexError> {
        // Hex literal
        if self.peek() == Some(b'0')
            && matches!(self.peek_at(1), Some(b'x') | Some(b'X'))
        {
            self.pos += 2;
            let digits_start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_hexdigit()) {
                self.pos += 1;
            }
            if self.pos == digits_start {
                return Err(self.error("missing hex digits", start));
            }
            let value = u64::from_str_radix(&self.src[digits_start..self.pos], 16)
                .map_err(|_| self.error("hex literal too large", start))?;
            return Ok(Token {
                tok: Tok::Num(value as f64),
                span: Span::new(start as u32, self.pos as u32),
            });
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark;
            }
        }
        let text = &self.src[start..self.pos];
        let value: f64 = text
            .parse()
            .map_err(|_| self.error(format!("bad number literal {text:?}"), start))?;
        if self.peek().is_some_and(|c| is_ident_start(c as char)) {
            return Err(self.error("identifier immediately after number", start));
        }
        Ok(Token {
            tok: Tok::Num(value),
            span: Span::new(start as u32, self.pos as u32),
        })
    }

    fn lex_string(&mut self, start: usize, quote: u8) -> Result<Token, LexError> {
        self.pos += 1;
        let mut value = String::new();
        let mut pending_high_surrogate: Option<u16> = None;
        loop {
            let Some(c) = self.peek() else {
                return Err(self.error("unterminated string literal", start));
            };
            if c == quote {
                if pending_high_surrogate.is_some() {
                    return Err(self.error("unpaired surrogate escape in string", start));
                }
                self.pos += 1;
                break;
            }
            if c == b'\n' || c == b'\r' {
                return Err(self.error("newline in string literal", start));
            }
            if c != b'\\' {
                // Raw UTF-8 character (possibly multi-byte).
                if pending_high_surrogate.is_some() {
                    return Err(self.error("unpaired surrogate escape in string", start));
                }
                let ch = self.src[self.pos..].chars().next().unwrap();
                value.push(ch);
                self.pos += ch.len_utf8();
                continue;
            }
            // Escape sequence
            self.pos += 1;
            let Some(e) = self.peek() else {
                return Err(self.error("unterminated escape", start));
            };
            self.pos += 1;
            let decoded: Option<char> = match e {
                b'n' => Some('\n'),
                b't' => Some('\t'),
                b'r' => Some('\r'),
                b'b' => Some('\u{8}'),
                b'f' => Some('\u{c}'),
                b'v' => Some('\u{b}'),
                b'0' if !self.peek().is_some_and(|d| d.is_ascii_digit()) => Some('\0'),
                b'x' => {
                    let hex = self.take_hex(2, start)?;
                    Some(char::from_u32(hex).unwrap())
                }
                b'u' => {
                    let unit = self.take_hex(4, start)? as u16;
                    if (0xD800..0xDC00).contains(&unit) {
                        if pending_high_surrogate.is_some() {
                            return Err(self.error("unpaired surrogate escape in string", start));
                        }
                        pending_high_surrogate = Some(unit);
                        None
                    } else if (0xDC00..0xE000).contains(&unit) {
                        let Some(high) = pending_high_surrogate.take() else {
                            return Err(self.error("unpaired surrogate escape in string", start));
                        };
                        let combined = 0x10000
                            + (((high as u32) - 0xD800) << 10)
                            + ((unit as u32) - 0xDC00);
                        Some(char::from_u32(combined).ok_or_else(|| {
                            self.error("invalid surrogate pair", start)
                        })?)
                    } else {
                        Some(char::from_u32(unit as u32).unwrap())
                    }
                }
                b'\\' => Some('\\'),
                b'\'' => Some('\''),
                b'"' => Some('"'),
                b'/' => Some('/'),
                other if other.is_ascii_digit() => {
                    return Err(self.error("octal escapes are not supported", start));
                }
                other => {
                    // ES5: unknown escapes yield the character itself.
                    Some(other as char)
                }
            };
            if let Some(ch) = decoded {
                if pending_high_surrogate.is_some() {
                    return Err(self.error("unpaired surrogate escape in string", start));
                }
                value.push(ch);
            }
        }
        Ok(Token {
            tok: Tok::Str(value),
            span: Span::new(start as u32, self.pos as u32),
        })
    }

    fn take_hex(&mut self, n: usize, start: usize) -> Result<u32, LexError> {
        let slice_start = self.pos;
        for _ in 0..n {
            if !self.peek().is_some_and(|c| c.is_ascii_hexdigit()) {
                return Err(self.error("bad hex escape", start));
            }
            self.pos += 1;
        }
        Ok(u32::from_str_radix(&self.src[slice_start..self.pos], 16).unwrap())
    }

    fn lex_regex(&mut self, start: usize) -> Result<Token, LexError> {
        self.pos += 1; // opening slash
        let body_start = self.pos;
        let mut in_class = false;
        loop {
            let Some(c) = self.peek() else {
                return Err(self.error("unterminated regex literal", start));
            };
            match c {
                b'\\' => {
                    self.pos += 2;
                    if self.pos > self.bytes.len() {
                        return Err(self.error("unterminated regex literal", start));
                    }
                }
                b'[' => {
                    in_class = true;
                    self.pos += 1;
                }
                b']' => {
                    in_class = false;
                    self.pos += 1;
                }
                b'/' if !in_class => break,
                b'\n' => return Err(self.error("unterminated regex literal", start)),
                _ => self.pos += 1,
            }
        }
        let pattern = self.src[body_start..self.pos].to_string();
        self.pos += 1; // closing slash
        let flags_start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii() && is_ident_part(c as char))
        {
            self.pos += 1;
        }
        let flags = self.src[flags_start..self.pos].to_string();
        Ok(Token {
            tok: Tok::Regex { pattern, flags },
            span: Span::new(start as u32, self.pos as u32),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        Lexer::new(src)
            .tokenize()
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect()
    }

    #[test]
    fn words_and_puncts() {
        assert_eq!(
            toks("var a = 1;"),
            vec![
                Tok::Keyword("var"),
                Tok::Ident("a".into()),
                Tok::Punct("="),
                Tok::Num(1.0),
                Tok::Punct(";"),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_are_dropped() {
        assert_eq!(
            toks("a /* block */ + b // line\n;"),
            vec![
                Tok::Ident("a".into()),
                Tok::Punct("+"),
                Tok::Ident("b".into()),
                Tok::Punct(";"),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn hex_escapes_decode() {
        assert_eq!(
            toks(r#""\x48\x69""#),
            vec![Tok::Str("Hi".into()), Tok::Eof]
        );
        assert_eq!(
            toks(r#""Hi""#),
            vec![Tok::Str("Hi".into()), Tok::Eof]
        );
    }

    #[test]
    fn surrogate_pairs_recombine() {
        assert_eq!(
            toks(r#""😀""#),
            vec![Tok::Str("\u{1F600}".into()), Tok::Eof]
        );
        assert!(Lexer::new(r#""\ud83d""#).tokenize().is_err());
    }

    #[test]
    fn regex_vs_division() {
        assert_eq!(
            toks("a / b"),
            vec![
                Tok::Ident("a".into()),
                Tok::Punct("/"),
                Tok::Ident("b".into()),
                Tok::Eof
            ]
        );
        assert_eq!(
            toks("x = /^/"),
            vec![
                Tok::Ident("x".into()),
                Tok::Punct("="),
                Tok::Regex {
                    pattern: "^".into(),
                    flags: String::new()
                },
                Tok::Eof
            ]
        );
    }

    #[test]
    fn hex_numbers() {
        assert_eq!(toks("0x1f"), vec![Tok::Num(31.0), Tok::Eof]);
    }

    #[test]
    fn unterminated_string_errors() {
        assert!(Lexer::new("\"abc").tokenize().is_err());
    }
}
