//! Indentation-aware tokenizer for the analyzed Python subset.
//!
//! Produces logical-line NEWLINE tokens plus INDENT/DEDENT pairs, joins lines
//! implicitly inside brackets, and keeps string literals (including f- and
//! triple-quoted strings) as single opaque tokens.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum TokKind {
    Name(String),
    Number(String),
    Str { text: String, is_fstring: bool },
    Op(String),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone)]
pub struct Tok {
    pub kind: TokKind,
    pub line: u32,
    pub col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

#[derive(Debug, Clone)]
pub struct LexError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

const THREE_CHAR_OPS: [&str; 5] = ["**=", "//=", "<<=", ">>=", "..."];
const TWO_CHAR_OPS: [&str; 19] = [
    "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "->", ":=", "+=", "-=", "*=", "/=", "%=",
    "@=", "&=", "|=", "^=",
];
const ONE_CHAR_OPS: &str = "+-*/%@&|^~<>=()[]{},:.;";

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    depth: usize,
    indents: Vec<usize>,
    toks: Vec<Tok>,
}

/// Tokenize a whole source file.
pub fn lex(source: &str) -> Result<Vec<Tok>, LexError> {
    let mut lexer = Lexer {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        depth: 0,
        indents: vec![0],
        toks: Vec::new(),
    };
    lexer.run()?;
    Ok(lexer.toks)
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> LexError {
        LexError {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    fn push(&mut self, kind: TokKind, line: u32, col: u32) {
        self.toks.push(Tok {
            kind,
            line,
            col,
            end_line: self.line,
            end_col: self.col,
        });
    }

    fn run(&mut self) -> Result<(), LexError> {
        let mut at_line_start = true;
        loop {
            if at_line_start && self.depth == 0 {
                if !self.handle_indentation()? {
                    break; // end of input reached on a blank tail
                }
                at_line_start = false;
            }
            let (line, col) = (self.line, self.col);
            let c = match self.peek() {
                Some(c) => c,
                None => break,
            };
            match c {
                ' ' | '\t' | '\r' => {
                    self.bump();
                }
                '#' => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                '\\' if self.peek_at(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                }
                '\n' => {
                    self.bump();
                    if self.depth == 0 {
                        self.push(TokKind::Newline, line, col);
                        at_line_start = true;
                    }
                }
                '\'' | '"' => self.string(String::new(), line, col)?,
                c if c.is_ascii_digit() => self.number(line, col),
                '.' if self.peek_at(1).map_or(false, |c| c.is_ascii_digit()) => {
                    self.number(line, col)
                }
                c if c == '_' || c.is_alphabetic() => {
                    let mut name = String::new();
                    while let Some(c) = self.peek() {
                        if c == '_' || c.is_alphanumeric() {
                            name.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    let is_prefix = name.len() <= 2
                        && name.chars().all(|c| "rbufRBUF".contains(c))
                        && matches!(self.peek(), Some('\'') | Some('"'));
                    if is_prefix {
                        self.string(name, line, col)?;
                    } else {
                        self.push(TokKind::Name(name), line, col);
                    }
                }
                _ => self.operator(line, col)?,
            }
        }
        if self
            .toks
            .last()
            .map_or(false, |t| !matches!(t.kind, TokKind::Newline))
        {
            let (line, col) = (self.line, self.col);
            self.push(TokKind::Newline, line, col);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            let (line, col) = (self.line, self.col);
            self.push(TokKind::Dedent, line, col);
        }
        let (line, col) = (self.line, self.col);
        self.push(TokKind::Eof, line, col);
        Ok(())
    }

    /// Measure leading whitespace of the next non-blank line and emit
    /// INDENT/DEDENT tokens. Returns false when only blank input remains.
    fn handle_indentation(&mut self) -> Result<bool, LexError> {
        loop {
            let mut width = 0usize;
            loop {
                match self.peek() {
                    Some(' ') => {
                        width += 1;
                        self.bump();
                    }
                    Some('\t') => {
                        width = (width / 8 + 1) * 8;
                        self.bump();
                    }
                    Some('\r') => {
                        self.bump();
                    }
                    _ => break,
                }
            }
            match self.peek() {
                None => return Ok(false),
                Some('\n') => {
                    self.bump();
                    continue; // blank line
                }
                Some('#') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                    continue;
                }
                Some(_) => {
                    let current = *self.indents.last().unwrap();
                    if width > current {
                        self.indents.push(width);
                        let (line, col) = (self.line, self.col);
                        self.push(TokKind::Indent, line, col);
                    } else if width < current {
                        while *self.indents.last().unwrap() > width {
                            self.indents.pop();
                            let (line, col) = (self.line, self.col);
                            self.push(TokKind::Dedent, line, col);
                        }
                        if *self.indents.last().unwrap() != width {
                            return Err(self.error("unindent does not match any outer level"));
                        }
                    }
                    return Ok(true);
                }
            }
        }
    }

    fn string(&mut self, prefix: String, line: u32, col: u32) -> Result<(), LexError> {
        let is_fstring = prefix.contains('f') || prefix.contains('F');
        let mut text = prefix;
        let quote = self.peek().unwrap();
        let triple = self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote);
        let closer: usize = if triple { 3 } else { 1 };
        for _ in 0..closer {
            text.push(self.bump().unwrap());
        }
        loop {
            match self.peek() {
                None => return Err(self.error("unterminated string literal")),
                Some('\n') if !triple => return Err(self.error("unterminated string literal")),
                Some('\\') => {
                    text.push(self.bump().unwrap());
                    if let Some(c) = self.bump() {
                        text.push(c);
                    }
                }
                Some(c) if c == quote => {
                    if triple {
                        if self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote) {
                            for _ in 0..3 {
                                text.push(self.bump().unwrap());
                            }
                            break;
                        }
                        text.push(self.bump().unwrap());
                    } else {
                        text.push(self.bump().unwrap());
                        break;
                    }
                }
                Some(_) => text.push(self.bump().unwrap()),
            }
        }
        self.push(TokKind::Str { text, is_fstring }, line, col);
        Ok(())
    }

    fn number(&mut self, line: u32, col: u32) {
        let mut text = String::new();
        let mut allow_sign = false;
        while let Some(c) = self.peek() {
            let take = c.is_ascii_alphanumeric()
                || c == '_'
                || c == '.'
                || ((c == '+' || c == '-') && allow_sign);
            if !take {
                break;
            }
            allow_sign = c == 'e' || c == 'E';
            // A trailing 'e' in a hex literal is a digit, not an exponent;
            // the sign heuristic only matters for decimal floats, where it holds.
            if text.starts_with("0x") || text.starts_with("0X") {
                allow_sign = false;
            }
            text.push(c);
            self.bump();
        }
        self.push(TokKind::Number(text), line, col);
    }

    fn operator(&mut self, line: u32, col: u32) -> Result<(), LexError> {
        let take = |lexer: &Self, n: usize| -> String {
            (0..n).filter_map(|i| lexer.peek_at(i)).collect::<String>()
        };
        let three = take(self, 3);
        if THREE_CHAR_OPS.contains(&three.as_str()) {
            for _ in 0..3 {
                self.bump();
            }
            self.push(TokKind::Op(three), line, col);
            return Ok(());
        }
        let two = take(self, 2);
        if two.len() == 2 && TWO_CHAR_OPS.contains(&two.as_str()) {
            for _ in 0..2 {
                self.bump();
            }
            self.push(TokKind::Op(two), line, col);
            return Ok(());
        }
        let c = self.peek().unwrap();
        if ONE_CHAR_OPS.contains(c) {
            self.bump();
            match c {
                '(' | '[' | '{' => self.depth += 1,
                ')' | ']' | '}' => self.depth = self.depth.saturating_sub(1),
                _ => {}
            }
            self.push(TokKind::Op(c.to_string()), line, col);
            return Ok(());
        }
        Err(self.error(format!("unexpected character {c:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(source: &str) -> Vec<TokKind> {
        lex(source).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn simple_assignment() {
        assert_eq!(
            kinds("x = 1\n"),
            vec![
                TokKind::Name("x".into()),
                TokKind::Op("=".into()),
                TokKind::Number("1".into()),
                TokKind::Newline,
                TokKind::Eof,
            ]
        );
    }

    #[test]
    fn indentation_tracking() {
        let toks = kinds("if a:\n    b = 1\nc = 2\n");
        assert!(toks.contains(&TokKind::Indent));
        assert!(toks.contains(&TokKind::Dedent));
        let indent_pos = toks.iter().position(|t| *t == TokKind::Indent).unwrap();
        let dedent_pos = toks.iter().position(|t| *t == TokKind::Dedent).unwrap();
        assert!(indent_pos < dedent_pos);
    }

    #[test]
    fn implicit_line_joining_suppresses_newlines() {
        let toks = kinds("xs = [1,\n      2]\n");
        let newlines = toks
            .iter()
            .filter(|t| matches!(t, TokKind::Newline))
            .count();
        assert_eq!(newlines, 1);
        assert!(!toks.contains(&TokKind::Indent));
    }

    #[test]
    fn blank_and_comment_lines_are_silent() {
        let toks = kinds("a = 1\n\n# note\n    \nb = 2\n");
        let newlines = toks
            .iter()
            .filter(|t| matches!(t, TokKind::Newline))
            .count();
        assert_eq!(newlines, 2);
        assert!(!toks.contains(&TokKind::Indent));
    }

    #[test]
    fn strings_stay_single_tokens() {
        let toks = kinds("s = f\"{name}!\"\nt = '''multi\nline'''\n");
        let strings: Vec<_> = toks
            .iter()
            .filter_map(|t| match t {
                TokKind::Str { text, is_fstring } => Some((text.clone(), *is_fstring)),
                _ => None,
            })
            .collect();
        assert_eq!(strings.len(), 2);
        assert!(strings[0].1);
        assert_eq!(strings[1].0, "'''multi\nline'''");
        assert!(!strings[1].1);
    }

    #[test]
    fn bad_dedent_reports_position() {
        let err = lex("if a:\n    b = 1\n  c = 2\n").unwrap_err();
        assert_eq!(err.line, 3);
    }

    #[test]
    fn walrus_and_arrow_operators() {
        let toks = kinds("def f(a) -> int:\n    return (b := a)\n");
        assert!(toks.contains(&TokKind::Op("->".into())));
        assert!(toks.contains(&TokKind::Op(":=".into())));
    }
}
