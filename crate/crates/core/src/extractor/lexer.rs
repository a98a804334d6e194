use super::ast::Pos;
use super::ExtractError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

// longest first
const PUNCTS: &[&str] = &[
    "<<=", ">>=", "...", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "<=", ">=", "==",
    "!=", "&&", "||", "::", "{", "}", "(", ")", "[", "]", ";", ",", ":", "=", "+", "-", "*", "/", "%", "<", ">", "!",
    "~", "&", "|", "^", "?", ".",
];

pub(crate) fn tokenize(src: &str, path: &str) -> Result<Vec<Token>, ExtractError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let err = |line, col, message: String| ExtractError::Syntax {
        path: path.to_string(),
        pos: Pos { line, col },
        message,
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if src[i..].starts_with("/*") {
            let (sl, sc) = (line, col);
            i += 2;
            col += 2;
            loop {
                if i >= bytes.len() {
                    return Err(err(sl, sc, "unterminated block comment".into()));
                }
                if src[i..].starts_with("*/") {
                    i += 2;
                    col += 2;
                    break;
                }
                if bytes[i] == b'\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
            continue;
        }
        let pos = Pos { line, col };
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            col += (i - start) as u32;
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                pos,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let text = &src[start..i];
            col += (i - start) as u32;
            let digits = text.trim_end_matches(['u', 'U', 'l', 'L']);
            let value = if let Some(hex) = digits.strip_prefix("0x").or_else(|| digits.strip_prefix("0X")) {
                i64::from_str_radix(hex, 16)
            } else {
                digits.parse()
            }
            .map_err(|_| err(pos.line, pos.col, format!("bad integer literal `{text}`")))?;
            out.push(Token {
                tok: Tok::Int(value),
                pos,
            });
            continue;
        }
        match PUNCTS.iter().find(|p| src[i..].starts_with(**p)) {
            Some(p) => {
                i += p.len();
                col += p.len() as u32;
                out.push(Token {
                    tok: Tok::Punct(p),
                    pos,
                });
            }
            None => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(err(line, col, format!("unexpected character {ch:?}")));
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_and_comments() {
        let toks = tokenize("int x; // c\n/* a\n b */ x += 0x1F;", "t.c").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Ident("int".into()),
                Tok::Ident("x".into()),
                Tok::Punct(";"),
                Tok::Ident("x".into()),
                Tok::Punct("+="),
                Tok::Int(31),
                Tok::Punct(";"),
                Tok::Eof
            ]
        );
        assert_eq!(toks[3].pos, Pos { line: 3, col: 7 });
    }

    #[test]
    fn bad_character() {
        assert!(matches!(
            tokenize("int @", "t.c"),
            Err(ExtractError::Syntax {
                pos: Pos { line: 1, col: 5 },
                ..
            })
        ));
    }
}
