use super::SyntaxError;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    /// Lowercase-initial identifier: a predicate or a constant.
    Ident(String),
    /// Uppercase- or underscore-initial identifier.
    Var(String),
    Number(String),
    Str(String),
    Null(u32),
    LParen,
    RParen,
    Comma,
    Dot,
    Arrow,
    Eq,
    Neq,
    Question,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Var(s) | Tok::Number(s) => format!("'{s}'"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Null(n) => format!("'_:n{n}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Dot => "'.'".into(),
            Tok::Arrow => "'->'".into(),
            Tok::Eq => "'='".into(),
            Tok::Neq => "'!='".into(),
            Tok::Question => "'?'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, message: String| SyntaxError::Parse { line, col, message };

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let mut bump = |i: &mut usize, n: usize| {
            *i += n;
            col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                bump(&mut i, 1);
                continue;
            }
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' => {
                bump(&mut i, 1);
                out.push(Spanned { tok: Tok::LParen, line: tl, col: tc });
            }
            ')' => {
                bump(&mut i, 1);
                out.push(Spanned { tok: Tok::RParen, line: tl, col: tc });
            }
            ',' => {
                bump(&mut i, 1);
                out.push(Spanned { tok: Tok::Comma, line: tl, col: tc });
            }
            '.' => {
                bump(&mut i, 1);
                out.push(Spanned { tok: Tok::Dot, line: tl, col: tc });
            }
            '?' => {
                bump(&mut i, 1);
                out.push(Spanned { tok: Tok::Question, line: tl, col: tc });
            }
            '=' => {
                bump(&mut i, 1);
                out.push(Spanned { tok: Tok::Eq, line: tl, col: tc });
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                bump(&mut i, 2);
                out.push(Spanned { tok: Tok::Arrow, line: tl, col: tc });
            }
            '!' if chars.get(i + 1) == Some(&'=') => {
                bump(&mut i, 2);
                out.push(Spanned { tok: Tok::Neq, line: tl, col: tc });
            }
            '"' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None | Some('\n') => {
                            return Err(err(tl, tc, "unterminated string literal".into()));
                        }
                        Some('"') => break,
                        Some('\\') => {
                            match chars.get(j + 1) {
                                Some('n') => s.push('\n'),
                                Some(&e @ ('"' | '\\')) => s.push(e),
                                _ => return Err(err(tl, tc + (j - i), "invalid escape in string".into())),
                            }
                            j += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            j += 1;
                        }
                    }
                }
                let n = j + 1 - i;
                bump(&mut i, n);
                out.push(Spanned { tok: Tok::Str(s), line: tl, col: tc });
            }
            '_' if chars.get(i + 1) == Some(&':') => {
                let mut j = i + 2;
                if chars.get(j) != Some(&'n') {
                    return Err(err(tl, tc, "labelled nulls are written _:nK".into()));
                }
                j += 1;
                let start = j;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let digits: String = chars[start..j].iter().collect();
                let id: u32 = digits
                    .parse()
                    .map_err(|_| err(tl, tc, "labelled nulls are written _:nK".into()))?;
                let n = j - i;
                bump(&mut i, n);
                out.push(Spanned { tok: Tok::Null(id), line: tl, col: tc });
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if chars.get(j) == Some(&'.') && chars.get(j + 1).is_some_and(|d| d.is_ascii_digit()) {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                let s: String = chars[i..j].iter().collect();
                let n = j - i;
                bump(&mut i, n);
                out.push(Spanned { tok: Tok::Number(s), line: tl, col: tc });
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                let n = j - i;
                bump(&mut i, n);
                let tok = if c.is_uppercase() || c == '_' { Tok::Var(s) } else { Tok::Ident(s) };
                out.push(Spanned { tok, line: tl, col: tc });
            }
            other => return Err(err(tl, tc, format!("unexpected character '{other}'"))),
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}
