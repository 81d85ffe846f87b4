//! Recursive-descent parser from the token stream to [`SyntaxNode`] trees.
//!
//! Grammar coverage is deliberately partial: functions, assignments, loops,
//! conditionals, imports, and the expression language are parsed structurally;
//! classes, decorators, `with`, `try`, `async`, pattern matching, lambdas, and
//! ternaries collapse into opaque nodes that retain their name references.

use super::lexer::{Tok, TokKind};
use super::{is_keyword, LiteralKind, NodeKind, ParseError, Span, SyntaxNode};

const AUG_OPS: [&str; 12] = [
    "+=", "-=", "*=", "/=", "//=", "%=", "**=", "<<=", ">>=", "&=", "|=", "^=",
];

pub(crate) fn parse_module(toks: &[Tok], source: &str) -> Result<SyntaxNode, ParseError> {
    let mut parser = Parser {
        toks,
        pos: 0,
        source,
        last_end: (1, 1),
    };
    let mut children = Vec::new();
    loop {
        match parser.peek() {
            TokKind::Eof => break,
            TokKind::Newline => {
                parser.bump();
            }
            TokKind::Indent => return Err(parser.err("unexpected indent")),
            TokKind::Dedent => return Err(parser.err("unexpected unindent")),
            _ => children.extend(parser.statement()?),
        }
    }
    Ok(parser.node(NodeKind::Module, None, children, (1, 1)))
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
    source: &'a str,
    last_end: (u32, u32),
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn tok(&self) -> &Tok {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek(&self) -> &TokKind {
        &self.tok().kind
    }

    fn peek_next(&self) -> &TokKind {
        let next = (self.pos + 1).min(self.toks.len() - 1);
        &self.toks[next].kind
    }

    fn bump(&mut self) -> Tok {
        let tok = self.tok().clone();
        if matches!(
            tok.kind,
            TokKind::Name(_) | TokKind::Number(_) | TokKind::Str { .. } | TokKind::Op(_)
        ) {
            self.last_end = (tok.end_line, tok.end_col);
        }
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        tok
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        let tok = self.tok();
        ParseError {
            line: tok.line,
            col: tok.col,
            message: message.into(),
        }
    }

    fn start(&self) -> (u32, u32) {
        let tok = self.tok();
        (tok.line, tok.col)
    }

    fn node(
        &self,
        kind: NodeKind,
        label: Option<String>,
        children: Vec<SyntaxNode>,
        start: (u32, u32),
    ) -> SyntaxNode {
        let span = Span::new(start.0, start.1, self.last_end.0, self.last_end.1);
        SyntaxNode {
            kind,
            span,
            text: span.slice(self.source),
            children,
            label,
        }
    }

    fn respan(&self, mut node: SyntaxNode, start: (u32, u32)) -> SyntaxNode {
        node.span = Span::new(start.0, start.1, self.last_end.0, self.last_end.1);
        node.text = node.span.slice(self.source);
        node
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(self.peek(), TokKind::Op(o) if o == op)
    }

    fn at_name(&self, name: &str) -> bool {
        matches!(self.peek(), TokKind::Name(n) if n == name)
    }

    fn accept_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn accept_name(&mut self, name: &str) -> bool {
        if self.at_name(name) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.accept_op(op) {
            Ok(())
        } else {
            Err(self.err(format!("expected {op:?}")))
        }
    }

    fn expect_name(&mut self, name: &str) -> PResult<()> {
        if self.accept_name(name) {
            Ok(())
        } else {
            Err(self.err(format!("expected {name:?}")))
        }
    }

    fn expect_newline(&mut self) -> PResult<()> {
        match self.peek() {
            TokKind::Newline => {
                self.bump();
                Ok(())
            }
            TokKind::Eof => Ok(()),
            _ => Err(self.err("expected end of line")),
        }
    }

    /// A plain (non-keyword) identifier token.
    fn expect_ident(&mut self, what: &str) -> PResult<Tok> {
        match self.peek() {
            TokKind::Name(n) if !is_keyword(n) => Ok(self.bump()),
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn name_node(&self, tok: &Tok) -> SyntaxNode {
        let name = match &tok.kind {
            TokKind::Name(n) => n.clone(),
            _ => String::new(),
        };
        let span = Span::new(tok.line, tok.col, tok.end_line, tok.end_col);
        SyntaxNode {
            kind: NodeKind::NameRef,
            span,
            children: Vec::new(),
            text: name.clone(),
            label: Some(name),
        }
    }

    fn param_node(&self, tok: &Tok, children: Vec<SyntaxNode>) -> SyntaxNode {
        let mut node = self.name_node(tok);
        node.kind = NodeKind::Parameter;
        node.children = children;
        node
    }

    /// Does the next token begin an expression?
    fn expr_starts(&self) -> bool {
        match self.peek() {
            TokKind::Name(n) => {
                !is_keyword(n)
                    || matches!(n.as_str(), "True" | "False" | "None" | "not" | "lambda" | "await")
            }
            TokKind::Number(_) | TokKind::Str { .. } => true,
            TokKind::Op(o) => {
                matches!(o.as_str(), "(" | "[" | "{" | "-" | "+" | "~" | "*" | "**" | "...")
            }
            _ => false,
        }
    }

    /// Is there a ':' outside brackets before the end of this logical line?
    fn line_has_colon(&self) -> bool {
        let mut depth = 0i32;
        for tok in &self.toks[self.pos..] {
            match &tok.kind {
                TokKind::Op(o) => match o.as_str() {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => depth -= 1,
                    ":" if depth == 0 => return true,
                    _ => {}
                },
                TokKind::Newline | TokKind::Eof => return false,
                _ => {}
            }
        }
        false
    }

    // ---- statements ----

    fn statement(&mut self) -> PResult<Vec<SyntaxNode>> {
        match self.peek() {
            TokKind::Name(n) => match n.as_str() {
                "if" => Ok(vec![self.conditional()?]),
                "while" => Ok(vec![self.while_loop()?]),
                "for" => Ok(vec![self.for_loop()?]),
                "def" => Ok(vec![self.function_def()?]),
                "class" | "with" | "try" | "async" => Ok(vec![self.opaque_statement()?]),
                "match" if self.line_has_colon() => Ok(vec![self.opaque_statement()?]),
                _ => self.simple_line(),
            },
            TokKind::Op(o) if o == "@" => Ok(vec![self.opaque_statement()?]),
            TokKind::Indent => Err(self.err("unexpected indent")),
            _ => self.simple_line(),
        }
    }

    fn simple_line(&mut self) -> PResult<Vec<SyntaxNode>> {
        let mut stmts = vec![self.small_statement()?];
        while self.accept_op(";") {
            if matches!(self.peek(), TokKind::Newline | TokKind::Eof) {
                break;
            }
            stmts.push(self.small_statement()?);
        }
        self.expect_newline()?;
        Ok(stmts)
    }

    fn small_statement(&mut self) -> PResult<SyntaxNode> {
        match self.peek() {
            TokKind::Name(n) => match n.as_str() {
                "return" => self.return_statement(),
                "break" => {
                    let start = self.start();
                    self.bump();
                    Ok(self.node(NodeKind::BreakStmt, None, Vec::new(), start))
                }
                "continue" => {
                    let start = self.start();
                    self.bump();
                    Ok(self.node(NodeKind::ContinueStmt, None, Vec::new(), start))
                }
                "import" | "from" => self.import_statement(),
                "pass" | "del" | "global" | "nonlocal" | "assert" | "raise" | "yield" => {
                    self.opaque_simple()
                }
                _ => self.expr_statement(),
            },
            _ => self.expr_statement(),
        }
    }

    fn return_statement(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        self.bump();
        let mut children = Vec::new();
        if self.expr_starts() {
            children.push(self.testlist()?);
        }
        Ok(self.node(NodeKind::ReturnStmt, None, children, start))
    }

    /// Small statements outside the modeled subset keep their keyword as the
    /// label and their name references as children.
    fn opaque_simple(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let keyword = match self.bump().kind {
            TokKind::Name(n) => n,
            _ => unreachable!(),
        };
        let mut names = Vec::new();
        loop {
            match self.peek() {
                TokKind::Newline | TokKind::Eof => break,
                TokKind::Op(o) if o == ";" => break,
                TokKind::Name(n) if !is_keyword(n) => {
                    let tok = self.bump();
                    names.push(self.name_node(&tok));
                }
                _ => {
                    self.bump();
                }
            }
        }
        Ok(self.node(NodeKind::Opaque, Some(keyword), names, start))
    }

    fn import_statement(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let mut binds = Vec::new();
        if self.accept_name("import") {
            loop {
                let first = self.expect_ident("module name")?;
                while self.accept_op(".") {
                    self.expect_ident("module name")?;
                }
                if self.accept_name("as") {
                    let alias = self.expect_ident("import alias")?;
                    binds.push(self.param_node(&alias, Vec::new()));
                } else {
                    binds.push(self.param_node(&first, Vec::new()));
                }
                if !self.accept_op(",") {
                    break;
                }
            }
        } else {
            self.expect_name("from")?;
            while self.at_op(".") || self.at_op("...") {
                self.bump();
            }
            if !self.at_name("import") {
                self.expect_ident("module name")?;
                while self.accept_op(".") {
                    self.expect_ident("module name")?;
                }
            }
            self.expect_name("import")?;
            if self.accept_op("*") {
                return Ok(self.node(NodeKind::ImportStmt, None, binds, start));
            }
            let parened = self.accept_op("(");
            loop {
                if parened && self.at_op(")") {
                    break;
                }
                let name = self.expect_ident("imported name")?;
                if self.accept_name("as") {
                    let alias = self.expect_ident("import alias")?;
                    binds.push(self.param_node(&alias, Vec::new()));
                } else {
                    binds.push(self.param_node(&name, Vec::new()));
                }
                if !self.accept_op(",") {
                    break;
                }
            }
            if parened {
                self.expect_op(")")?;
            }
        }
        Ok(self.node(NodeKind::ImportStmt, None, binds, start))
    }

    fn expr_statement(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let first = self.testlist()?;
        if self.at_op("=") {
            let mut children = vec![first];
            while self.accept_op("=") {
                children.push(self.testlist()?);
            }
            return Ok(self.node(NodeKind::Assignment, None, children, start));
        }
        if let TokKind::Op(op) = self.peek() {
            if AUG_OPS.contains(&op.as_str()) {
                let op = op.clone();
                self.bump();
                let value = self.testlist()?;
                return Ok(self.node(
                    NodeKind::AugAssignment,
                    Some(op),
                    vec![first, value],
                    start,
                ));
            }
        }
        if self.accept_op(":") {
            let _annotation = self.expr()?;
            if self.accept_op("=") {
                let value = self.testlist()?;
                return Ok(self.node(NodeKind::Assignment, None, vec![first, value], start));
            }
            return Ok(self.node(NodeKind::ExpressionStmt, None, vec![first], start));
        }
        Ok(self.node(NodeKind::ExpressionStmt, None, vec![first], start))
    }

    // ---- compound statements ----

    fn suite(&mut self) -> PResult<SyntaxNode> {
        if matches!(self.peek(), TokKind::Newline) {
            self.bump();
            if !matches!(self.peek(), TokKind::Indent) {
                return Err(self.err("expected an indented block"));
            }
            self.bump();
            let start = self.start();
            let mut stmts = Vec::new();
            loop {
                match self.peek() {
                    TokKind::Dedent => {
                        self.bump();
                        break;
                    }
                    TokKind::Eof => break,
                    TokKind::Newline => {
                        self.bump();
                    }
                    _ => stmts.extend(self.statement()?),
                }
            }
            Ok(self.node(NodeKind::Body, None, stmts, start))
        } else {
            let start = self.start();
            let stmts = self.simple_line()?;
            Ok(self.node(NodeKind::Body, None, stmts, start))
        }
    }

    /// Parses an `if`/`elif` chain; an `elif` becomes a nested conditional
    /// inside the else block.
    fn conditional(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        self.bump(); // "if" or "elif"
        let cond = self.expr()?;
        self.expect_op(":")?;
        let body = self.suite()?;
        let mut children = vec![cond, body];
        if self.at_name("elif") {
            let nested = self.conditional()?;
            let span = nested.span;
            let text = nested.text.clone();
            children.push(SyntaxNode {
                kind: NodeKind::Body,
                span,
                children: vec![nested],
                text,
                label: None,
            });
        } else if self.accept_name("else") {
            self.expect_op(":")?;
            children.push(self.suite()?);
        }
        Ok(self.node(NodeKind::Conditional, None, children, start))
    }

    fn while_loop(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        self.bump();
        let cond = self.expr()?;
        self.expect_op(":")?;
        let body = self.suite()?;
        let mut children = vec![cond, body];
        if self.accept_name("else") {
            self.expect_op(":")?;
            children.push(self.suite()?);
        }
        Ok(self.node(NodeKind::LoopWhile, None, children, start))
    }

    fn for_loop(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        self.bump();
        let target = self.target_list()?;
        self.expect_name("in")?;
        let iter = self.iter_list()?;
        self.expect_op(":")?;
        let body = self.suite()?;
        let mut children = vec![target, iter, body];
        if self.accept_name("else") {
            self.expect_op(":")?;
            children.push(self.suite()?);
        }
        Ok(self.node(NodeKind::LoopFor, None, children, start))
    }

    fn function_def(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        self.bump();
        let name = self.expect_ident("function name")?;
        self.expect_op("(")?;
        let mut children = Vec::new();
        while !self.at_op(")") {
            if self.accept_op("*") || self.accept_op("**") {
                if self.at_op(",") || self.at_op(")") {
                    // bare "*" keyword-only marker
                    if !self.accept_op(",") {
                        break;
                    }
                    continue;
                }
                children.push(self.parameter()?);
            } else if self.accept_op("/") {
                // positional-only marker
            } else {
                children.push(self.parameter()?);
            }
            if !self.accept_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        if self.accept_op("->") {
            let _annotation = self.expr()?;
        }
        self.expect_op(":")?;
        children.push(self.suite()?);
        let label = match name.kind {
            TokKind::Name(n) => n,
            _ => unreachable!(),
        };
        Ok(self.node(NodeKind::FunctionDef, Some(label), children, start))
    }

    fn parameter(&mut self) -> PResult<SyntaxNode> {
        let name = self.expect_ident("parameter name")?;
        if self.accept_op(":") {
            let _annotation = self.expr()?;
        }
        let mut children = Vec::new();
        if self.accept_op("=") {
            children.push(self.expr()?);
        }
        Ok(self.param_node(&name, children))
    }

    /// Swallow a statement we do not model (class, with, try, async, match,
    /// decorated def) through its entire indented extent, keeping every
    /// non-keyword name as a child.
    fn opaque_statement(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let mut names = Vec::new();
        while self.at_op("@") {
            loop {
                match self.peek() {
                    TokKind::Newline => {
                        self.bump();
                        break;
                    }
                    TokKind::Eof => return Err(self.err("unexpected end of input")),
                    TokKind::Name(n) if !is_keyword(n) => {
                        let tok = self.bump();
                        names.push(self.name_node(&tok));
                    }
                    _ => {
                        self.bump();
                    }
                }
            }
        }
        self.accept_name("async");
        let keyword = match self.peek() {
            TokKind::Name(n) => n.clone(),
            _ => return Err(self.err("expected a statement")),
        };
        self.opaque_block(&mut names)?;
        while self.at_name("except")
            || self.at_name("finally")
            || (keyword == "try" && self.at_name("else"))
        {
            self.opaque_block(&mut names)?;
        }
        Ok(self.node(NodeKind::Opaque, Some(keyword), names, start))
    }

    /// One `header: suite` block, consumed token-by-token.
    fn opaque_block(&mut self, names: &mut Vec<SyntaxNode>) -> PResult<()> {
        let mut depth = 0i32;
        loop {
            match self.peek() {
                TokKind::Op(o) => {
                    match o.as_str() {
                        "(" | "[" | "{" => depth += 1,
                        ")" | "]" | "}" => depth -= 1,
                        ":" if depth == 0 => {
                            self.bump();
                            break;
                        }
                        _ => {}
                    }
                    self.bump();
                }
                TokKind::Name(n) => {
                    if !is_keyword(n) {
                        let tok = self.bump();
                        names.push(self.name_node(&tok));
                    } else {
                        self.bump();
                    }
                }
                TokKind::Newline | TokKind::Eof => return Err(self.err("expected ':'")),
                _ => {
                    self.bump();
                }
            }
        }
        if matches!(self.peek(), TokKind::Newline) {
            self.bump();
            if !matches!(self.peek(), TokKind::Indent) {
                return Err(self.err("expected an indented block"));
            }
            self.bump();
            let mut level = 1u32;
            loop {
                match self.peek() {
                    TokKind::Indent => {
                        level += 1;
                        self.bump();
                    }
                    TokKind::Dedent => {
                        level -= 1;
                        self.bump();
                        if level == 0 {
                            break;
                        }
                    }
                    TokKind::Eof => break,
                    TokKind::Name(n) if !is_keyword(n) => {
                        let tok = self.bump();
                        names.push(self.name_node(&tok));
                    }
                    _ => {
                        self.bump();
                    }
                }
            }
        } else {
            loop {
                match self.peek() {
                    TokKind::Newline => {
                        self.bump();
                        break;
                    }
                    TokKind::Eof => break,
                    TokKind::Name(n) if !is_keyword(n) => {
                        let tok = self.bump();
                        names.push(self.name_node(&tok));
                    }
                    _ => {
                        self.bump();
                    }
                }
            }
        }
        Ok(())
    }

    // ---- expressions ----

    /// Expression list with tuple building: `a, b` and the trailing-comma
    /// form `a,` become tuple literals.
    fn testlist(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let first = self.star_item()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.accept_op(",") {
            if !self.expr_starts() {
                break;
            }
            items.push(self.star_item()?);
        }
        Ok(self.node(NodeKind::Literal(LiteralKind::Tuple), None, items, start))
    }

    fn star_item(&mut self) -> PResult<SyntaxNode> {
        if self.at_op("*") || self.at_op("**") {
            let start = self.start();
            let op = match self.bump().kind {
                TokKind::Op(o) => o,
                _ => unreachable!(),
            };
            let inner = self.expr()?;
            return Ok(self.node(NodeKind::UnaryOp, Some(op), vec![inner], start));
        }
        self.expr()
    }

    fn expr(&mut self) -> PResult<SyntaxNode> {
        if self.at_name("lambda") {
            return self.lambda_opaque();
        }
        let start = self.start();
        let value = self.or_test()?;
        if self.at_name("if") {
            self.bump();
            let cond = self.or_test()?;
            self.expect_name("else")?;
            let alt = self.expr()?;
            return Ok(self.node(
                NodeKind::Opaque,
                Some("ternary".to_string()),
                vec![value, cond, alt],
                start,
            ));
        }
        Ok(value)
    }

    fn lambda_opaque(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        self.bump();
        let mut children = Vec::new();
        let mut depth = 0i32;
        loop {
            match self.peek() {
                TokKind::Op(o) => {
                    match o.as_str() {
                        "(" | "[" | "{" => depth += 1,
                        ")" | "]" | "}" => depth -= 1,
                        ":" if depth == 0 => {
                            self.bump();
                            break;
                        }
                        _ => {}
                    }
                    self.bump();
                }
                TokKind::Name(n) if !is_keyword(n) => {
                    let tok = self.bump();
                    children.push(self.name_node(&tok));
                }
                TokKind::Newline | TokKind::Eof => return Err(self.err("expected ':'")),
                _ => {
                    self.bump();
                }
            }
        }
        let body = self.expr()?;
        children.push(body);
        Ok(self.node(NodeKind::Opaque, Some("lambda".to_string()), children, start))
    }

    fn or_test(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let first = self.and_test()?;
        if !self.at_name("or") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.accept_name("or") {
            items.push(self.and_test()?);
        }
        Ok(self.node(NodeKind::BooleanOp, Some("or".to_string()), items, start))
    }

    fn and_test(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let first = self.not_test()?;
        if !self.at_name("and") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.accept_name("and") {
            items.push(self.not_test()?);
        }
        Ok(self.node(NodeKind::BooleanOp, Some("and".to_string()), items, start))
    }

    fn not_test(&mut self) -> PResult<SyntaxNode> {
        if self.at_name("not") {
            let start = self.start();
            self.bump();
            let inner = self.not_test()?;
            return Ok(self.node(NodeKind::UnaryOp, Some("not".to_string()), vec![inner], start));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let first = self.bit_or()?;
        let mut items = vec![first];
        let mut ops: Vec<String> = Vec::new();
        loop {
            let op = match self.peek() {
                TokKind::Op(o)
                    if matches!(o.as_str(), "<" | ">" | "<=" | ">=" | "==" | "!=") =>
                {
                    let op = o.clone();
                    self.bump();
                    Some(op)
                }
                TokKind::Name(n) if n == "in" => {
                    self.bump();
                    Some("in".to_string())
                }
                TokKind::Name(n)
                    if n == "not" && matches!(self.peek_next(), TokKind::Name(m) if m == "in") =>
                {
                    self.bump();
                    self.bump();
                    Some("not in".to_string())
                }
                TokKind::Name(n) if n == "is" => {
                    self.bump();
                    if self.accept_name("not") {
                        Some("is not".to_string())
                    } else {
                        Some("is".to_string())
                    }
                }
                _ => None,
            };
            match op {
                Some(op) => {
                    ops.push(op);
                    items.push(self.bit_or()?);
                }
                None => break,
            }
        }
        if ops.is_empty() {
            Ok(items.pop().unwrap())
        } else {
            Ok(self.node(NodeKind::Comparison, Some(ops.join(" ")), items, start))
        }
    }

    fn binary_level(
        &mut self,
        ops: &[&str],
        next: fn(&mut Self) -> PResult<SyntaxNode>,
    ) -> PResult<SyntaxNode> {
        let start = self.start();
        let mut lhs = next(self)?;
        loop {
            let op = match self.peek() {
                TokKind::Op(o) if ops.contains(&o.as_str()) => o.clone(),
                _ => break,
            };
            self.bump();
            let rhs = next(self)?;
            lhs = self.node(NodeKind::BinaryOp, Some(op), vec![lhs, rhs], start);
        }
        Ok(lhs)
    }

    fn bit_or(&mut self) -> PResult<SyntaxNode> {
        self.binary_level(&["|"], Self::bit_xor)
    }

    fn bit_xor(&mut self) -> PResult<SyntaxNode> {
        self.binary_level(&["^"], Self::bit_and)
    }

    fn bit_and(&mut self) -> PResult<SyntaxNode> {
        self.binary_level(&["&"], Self::shift)
    }

    fn shift(&mut self) -> PResult<SyntaxNode> {
        self.binary_level(&["<<", ">>"], Self::arith)
    }

    fn arith(&mut self) -> PResult<SyntaxNode> {
        self.binary_level(&["+", "-"], Self::term)
    }

    fn term(&mut self) -> PResult<SyntaxNode> {
        self.binary_level(&["*", "/", "//", "%", "@"], Self::factor)
    }

    fn factor(&mut self) -> PResult<SyntaxNode> {
        if self.at_op("-") || self.at_op("+") || self.at_op("~") {
            let start = self.start();
            let op = match self.bump().kind {
                TokKind::Op(o) => o,
                _ => unreachable!(),
            };
            let inner = self.factor()?;
            return Ok(self.node(NodeKind::UnaryOp, Some(op), vec![inner], start));
        }
        self.power()
    }

    fn power(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let base = self.atom_expr()?;
        if self.at_op("**") {
            self.bump();
            let exp = self.factor()?;
            return Ok(self.node(
                NodeKind::BinaryOp,
                Some("**".to_string()),
                vec![base, exp],
                start,
            ));
        }
        Ok(base)
    }

    fn atom_expr(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let mut value = self.atom()?;
        loop {
            if self.at_op("(") {
                value = self.call_trailer(value, start)?;
            } else if self.at_op("[") {
                value = self.subscript_trailer(value, start)?;
            } else if self.at_op(".") && matches!(self.peek_next(), TokKind::Name(_)) {
                self.bump();
                let attr = self.bump();
                let label = match attr.kind {
                    TokKind::Name(n) => n,
                    _ => unreachable!(),
                };
                value = self.node(NodeKind::AttributeRef, Some(label), vec![value], start);
            } else {
                break;
            }
        }
        Ok(value)
    }

    fn call_trailer(&mut self, callee: SyntaxNode, start: (u32, u32)) -> PResult<SyntaxNode> {
        self.expect_op("(")?;
        let mut args = Vec::new();
        if !self.at_op(")") {
            let arg_start = self.start();
            let first = self.call_arg()?;
            if self.at_name("for") {
                args.push(self.comp_rest(vec![first], "gen", arg_start)?);
            } else {
                args.push(first);
                while self.accept_op(",") {
                    if self.at_op(")") {
                        break;
                    }
                    args.push(self.call_arg()?);
                }
            }
        }
        self.expect_op(")")?;
        let label = dotted_name(&callee);
        let mut children = vec![callee];
        children.extend(args);
        Ok(self.node(NodeKind::Call, label, children, start))
    }

    fn call_arg(&mut self) -> PResult<SyntaxNode> {
        if let TokKind::Name(n) = self.peek() {
            if !is_keyword(n) && matches!(self.peek_next(), TokKind::Op(o) if o == "=") {
                self.bump(); // keyword-argument name is not a variable use
                self.bump();
                return self.expr();
            }
        }
        self.star_item()
    }

    fn subscript_trailer(&mut self, base: SyntaxNode, start: (u32, u32)) -> PResult<SyntaxNode> {
        self.expect_op("[")?;
        let mut children = vec![base];
        loop {
            match self.peek() {
                TokKind::Op(o) if o == "]" => break,
                TokKind::Op(o) if o == ":" || o == "," => {
                    self.bump();
                }
                TokKind::Eof => return Err(self.err("expected \"]\"")),
                _ => children.push(self.expr()?),
            }
        }
        self.expect_op("]")?;
        Ok(self.node(NodeKind::Subscript, None, children, start))
    }

    fn atom(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        match self.peek().clone() {
            TokKind::Name(n) => match n.as_str() {
                "True" | "False" => {
                    self.bump();
                    Ok(self.node(NodeKind::Literal(LiteralKind::Bool), Some(n), Vec::new(), start))
                }
                "None" => {
                    self.bump();
                    Ok(self.node(NodeKind::Literal(LiteralKind::None), Some(n), Vec::new(), start))
                }
                "await" => {
                    self.bump();
                    let inner = self.factor()?;
                    Ok(self.node(NodeKind::Opaque, Some("await".to_string()), vec![inner], start))
                }
                "lambda" => self.lambda_opaque(),
                _ if is_keyword(&n) => Err(self.err(format!("unexpected keyword {n:?}"))),
                _ => {
                    self.bump();
                    Ok(self.node(NodeKind::NameRef, Some(n), Vec::new(), start))
                }
            },
            TokKind::Number(_) => {
                self.bump();
                Ok(self.node(NodeKind::Literal(LiteralKind::Number), None, Vec::new(), start))
            }
            TokKind::Str { .. } => {
                let mut any_fstring = false;
                while let TokKind::Str { is_fstring, .. } = self.peek() {
                    any_fstring |= *is_fstring;
                    self.bump();
                }
                let label = any_fstring.then(|| "f".to_string());
                Ok(self.node(NodeKind::Literal(LiteralKind::Str), label, Vec::new(), start))
            }
            TokKind::Op(o) => match o.as_str() {
                "(" => self.paren_atom(),
                "[" => self.list_atom(),
                "{" => self.brace_atom(),
                "..." => {
                    self.bump();
                    Ok(self.node(NodeKind::Opaque, Some("...".to_string()), Vec::new(), start))
                }
                _ => Err(self.err("expected an expression")),
            },
            _ => Err(self.err("expected an expression")),
        }
    }

    fn paren_atom(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        self.bump();
        if self.at_op(")") {
            self.bump();
            return Ok(self.node(NodeKind::Literal(LiteralKind::Tuple), None, Vec::new(), start));
        }
        let first = self.star_item()?;
        if self.at_op(":=") {
            self.bump();
            let value = self.expr()?;
            self.expect_op(")")?;
            return Ok(self.node(
                NodeKind::Opaque,
                Some("walrus".to_string()),
                vec![first, value],
                start,
            ));
        }
        if self.at_name("for") {
            let comp = self.comp_rest(vec![first], "gen", start)?;
            self.expect_op(")")?;
            return Ok(self.respan(comp, start));
        }
        if self.at_op(",") {
            let mut items = vec![first];
            while self.accept_op(",") {
                if self.at_op(")") {
                    break;
                }
                items.push(self.star_item()?);
            }
            self.expect_op(")")?;
            return Ok(self.node(NodeKind::Literal(LiteralKind::Tuple), None, items, start));
        }
        self.expect_op(")")?;
        Ok(first)
    }

    fn list_atom(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        self.bump();
        if self.at_op("]") {
            self.bump();
            return Ok(self.node(NodeKind::Literal(LiteralKind::List), None, Vec::new(), start));
        }
        let first = self.star_item()?;
        if self.at_name("for") {
            let comp = self.comp_rest(vec![first], "list", start)?;
            self.expect_op("]")?;
            return Ok(self.respan(comp, start));
        }
        let mut items = vec![first];
        while self.accept_op(",") {
            if self.at_op("]") {
                break;
            }
            items.push(self.star_item()?);
        }
        self.expect_op("]")?;
        Ok(self.node(NodeKind::Literal(LiteralKind::List), None, items, start))
    }

    fn brace_atom(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        self.bump();
        if self.at_op("}") {
            self.bump();
            return Ok(self.node(NodeKind::Literal(LiteralKind::Dict), None, Vec::new(), start));
        }
        if self.at_op("**") {
            return self.dict_literal_rest(Vec::new(), start);
        }
        let first = self.star_item()?;
        if self.at_op(":") {
            self.bump();
            let value = self.expr()?;
            if self.at_name("for") {
                let comp = self.comp_rest(vec![first, value], "dict", start)?;
                self.expect_op("}")?;
                return Ok(self.respan(comp, start));
            }
            let children = vec![first, value];
            if self.accept_op(",") {
                return self.dict_literal_rest(children, start);
            }
            self.expect_op("}")?;
            return Ok(self.node(NodeKind::Literal(LiteralKind::Dict), None, children, start));
        }
        if self.at_name("for") {
            let comp = self.comp_rest(vec![first], "set", start)?;
            self.expect_op("}")?;
            return Ok(self.respan(comp, start));
        }
        let mut items = vec![first];
        while self.accept_op(",") {
            if self.at_op("}") {
                break;
            }
            items.push(self.star_item()?);
        }
        self.expect_op("}")?;
        Ok(self.node(NodeKind::Literal(LiteralKind::Set), None, items, start))
    }

    /// Remaining `key: value` and `**mapping` items of a dict literal;
    /// children alternate key, value (unpacked mappings contribute one child).
    fn dict_literal_rest(
        &mut self,
        mut children: Vec<SyntaxNode>,
        start: (u32, u32),
    ) -> PResult<SyntaxNode> {
        loop {
            if self.at_op("}") {
                break;
            }
            if self.at_op("**") {
                children.push(self.star_item()?);
            } else {
                children.push(self.expr()?);
                self.expect_op(":")?;
                children.push(self.expr()?);
            }
            if !self.accept_op(",") {
                break;
            }
        }
        self.expect_op("}")?;
        Ok(self.node(NodeKind::Literal(LiteralKind::Dict), None, children, start))
    }

    /// `for target in iter [if cond]*` clauses of a comprehension. Each
    /// clause's target is wrapped in a Parameter node; iters and conditions
    /// follow as plain children.
    fn comp_rest(
        &mut self,
        mut children: Vec<SyntaxNode>,
        flavor: &str,
        start: (u32, u32),
    ) -> PResult<SyntaxNode> {
        while self.at_name("for") || self.at_name("async") {
            self.accept_name("async");
            self.expect_name("for")?;
            let target_start = self.start();
            let target = self.target_list()?;
            let wrapped = self.node(NodeKind::Parameter, None, vec![target], target_start);
            self.expect_name("in")?;
            let iter = self.or_test()?;
            children.push(wrapped);
            children.push(iter);
            while self.accept_name("if") {
                children.push(self.or_test()?);
            }
        }
        Ok(self.node(
            NodeKind::Comprehension,
            Some(flavor.to_string()),
            children,
            start,
        ))
    }

    /// Assignment/loop target list; `in` never binds here, so targets parse
    /// below the comparison level.
    fn target_list(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let first = self.target_item()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.accept_op(",") {
            if !self.expr_starts() {
                break;
            }
            items.push(self.target_item()?);
        }
        Ok(self.node(NodeKind::Literal(LiteralKind::Tuple), None, items, start))
    }

    fn target_item(&mut self) -> PResult<SyntaxNode> {
        if self.at_op("*") {
            let start = self.start();
            self.bump();
            let inner = self.target_item()?;
            return Ok(self.node(
                NodeKind::UnaryOp,
                Some("*".to_string()),
                vec![inner],
                start,
            ));
        }
        self.bit_or()
    }

    /// Iterable of a for statement: one or more or-tests, `a, b` forming a
    /// tuple.
    fn iter_list(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let first = self.or_test()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.accept_op(",") {
            if !self.expr_starts() {
                break;
            }
            items.push(self.or_test()?);
        }
        Ok(self.node(NodeKind::Literal(LiteralKind::Tuple), None, items, start))
    }
}

/// Dotted path of a callee built from plain names (`a.b.c`), when it is one.
fn dotted_name(node: &SyntaxNode) -> Option<String> {
    match node.kind {
        NodeKind::NameRef => node.label.clone(),
        NodeKind::AttributeRef => {
            let base = dotted_name(&node.children[0])?;
            Some(format!("{}.{}", base, node.label()))
        }
        _ => None,
    }
}
