//! Tokenizer for the `.evb` evidence format.

use chrono::NaiveDate;

use super::{ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Str(String),
    Int(u32),
    Date(NaiveDate),
    /// `@id` cross-reference.
    AtRef(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Slash,
    Equals,
    DotDot,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Str(_) => "string".into(),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Date(d) => format!("date `{d}`"),
            Tok::AtRef(s) => format!("reference `@{s}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Equals => "`=`".into(),
            Tok::DotDot => "`..`".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor::new(text);
    let mut out = Vec::new();

    while let Some(c) = cur.peek() {
        let line = cur.line;
        let column = cur.column;
        let span = |len: usize| SourceSpan { line, column, length: len };

        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }

        let simple = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ':' => Some(Tok::Colon),
            ',' => Some(Tok::Comma),
            '/' => Some(Tok::Slash),
            '=' => Some(Tok::Equals),
            _ => None,
        };
        if let Some(tok) = simple {
            cur.bump();
            out.push(Token { tok, span: span(1) });
            continue;
        }

        match c {
            '"' => {
                cur.bump();
                let mut s = String::new();
                let mut len = 1;
                loop {
                    match cur.bump() {
                        None | Some('\n') => {
                            return Err(ParseError::new(span(len), "unterminated string"));
                        }
                        Some('"') => break,
                        Some('\\') => {
                            len += 1;
                            match cur.bump() {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n') => s.push('\n'),
                                Some('t') => s.push('\t'),
                                other => {
                                    return Err(ParseError::new(
                                        span(len),
                                        format!(
                                            "unknown escape `\\{}`",
                                            other.map(String::from).unwrap_or_default()
                                        ),
                                    ));
                                }
                            }
                            len += 1;
                        }
                        Some(c) => {
                            s.push(c);
                            len += 1;
                        }
                    }
                }
                len += 1;
                out.push(Token { tok: Tok::Str(s), span: span(len) });
            }
            '@' => {
                cur.bump();
                let mut id = String::new();
                while let Some(c) = cur.peek() {
                    if is_ident_continue(c) {
                        id.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                if id.is_empty() {
                    return Err(ParseError::new(span(1), "`@` must be followed by an identifier"));
                }
                let len = id.len() + 1;
                out.push(Token { tok: Tok::AtRef(id), span: span(len) });
            }
            c if c.is_ascii_digit() => {
                let mut raw = String::new();
                while let Some(c) = cur.peek() {
                    if c.is_ascii_digit() || c == '-' {
                        raw.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                let len = raw.len();
                let tok = if raw.contains('-') {
                    let date = parse_iso_date(&raw).ok_or_else(|| {
                        ParseError::with_expected(
                            span(len),
                            format!("malformed date `{raw}`"),
                            "an ISO 8601 calendar date (YYYY-MM-DD)",
                        )
                    })?;
                    Tok::Date(date)
                } else {
                    let n = raw.parse::<u32>().map_err(|_| {
                        ParseError::new(span(len), format!("integer `{raw}` out of range"))
                    })?;
                    Tok::Int(n)
                };
                out.push(Token { tok, span: span(len) });
            }
            '.' => {
                cur.bump();
                if cur.peek() == Some('.') {
                    cur.bump();
                    out.push(Token { tok: Tok::DotDot, span: span(2) });
                } else {
                    return Err(ParseError::new(span(1), "unexpected `.`"));
                }
            }
            c if is_ident_start(c) => {
                let mut id = String::new();
                while let Some(c) = cur.peek() {
                    if is_ident_continue(c) {
                        id.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                let len = id.len();
                out.push(Token { tok: Tok::Ident(id), span: span(len) });
            }
            other => {
                return Err(ParseError::new(span(1), format!("unexpected character `{other}`")));
            }
        }
    }
    Ok(out)
}

fn parse_iso_date(raw: &str) -> Option<NaiveDate> {
    let parts: Vec<&str> = raw.split('-').collect();
    if parts.len() != 3 || parts[0].len() != 4 || parts[1].len() != 2 || parts[2].len() != 2 {
        return None;
    }
    NaiveDate::from_ymd_opt(
        parts[0].parse().ok()?,
        parts[1].parse().ok()?,
        parts[2].parse().ok()?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_a_factor_line() {
        let toks = tokenize(r#""Domain characteristics" / "Application type" : "Computation-intensive system""#).unwrap();
        assert_eq!(toks.len(), 5);
        assert_eq!(toks[1].tok, Tok::Slash);
        assert_eq!(toks[3].tok, Tok::Colon);
    }

    #[test]
    fn us_style_dates_are_rejected_with_hint() {
        let err = tokenize("period: 7-22-2001 .. 12-31-2002").unwrap_err();
        assert!(err.message.contains("malformed date"));
        assert!(err.expected.as_deref().unwrap().contains("ISO 8601"));
    }

    #[test]
    fn spans_are_one_based() {
        let toks = tokenize("a\n  b").unwrap();
        assert_eq!((toks[0].span.line, toks[0].span.column), (1, 1));
        assert_eq!((toks[1].span.line, toks[1].span.column), (2, 3));
    }

    #[test]
    fn comments_are_skipped() {
        let toks = tokenize("# heading\nlesson").unwrap();
        assert_eq!(toks.len(), 1);
        assert_eq!(toks[0].span.line, 2);
    }
}
