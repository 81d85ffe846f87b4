//! Source model for the analyzed Python subset.
//!
//! [`parse`] turns source text into a [`SourceModel`]: a syntax tree of
//! [`SyntaxNode`]s plus the semantic facts the detection rules need
//! (per-scope def/use events, loop nesting, purity and mutation queries).
//! Constructs outside the subset (classes, decorators, async, pattern
//! matching, lambdas, ternaries) become opaque nodes that keep their name
//! references visible but are never descended into by rules.

mod lexer;
mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub const KEYWORDS: [&str; 35] = [
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
    "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global",
    "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return",
    "try", "while", "with", "yield",
];

/// Built-in calls assumed side-effect free unless a caller supplies its own
/// allowlist.
pub const DEFAULT_PURE_BUILTINS: [&str; 6] = ["len", "abs", "min", "max", "ord", "chr"];

/// Methods that mutate their receiver in place.
pub const MUTATING_METHODS: [&str; 10] = [
    "append", "pop", "extend", "insert", "remove", "clear", "sort", "update", "add", "discard",
];

pub fn is_keyword(name: &str) -> bool {
    KEYWORDS.contains(&name)
}

/// 1-based source region; the end column is exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Span {
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl Span {
    pub fn new(start_line: u32, start_col: u32, end_line: u32, end_col: u32) -> Span {
        Span {
            start_line,
            start_col,
            end_line,
            end_col,
        }
    }

    /// Cut this region back out of the original text.
    pub fn slice(&self, source: &str) -> String {
        let lines: Vec<&str> = source.split('\n').collect();
        let line_at = |n: u32| -> &str { lines.get(n as usize - 1).copied().unwrap_or("") };
        let take = |line: &str, from: u32, to: Option<u32>| -> String {
            let chars = line.chars();
            match to {
                Some(to) => chars
                    .skip(from as usize - 1)
                    .take((to - from) as usize)
                    .collect(),
                None => chars.skip(from as usize - 1).collect(),
            }
        };
        if self.start_line == self.end_line {
            return take(line_at(self.start_line), self.start_col, Some(self.end_col));
        }
        let mut out = take(line_at(self.start_line), self.start_col, None);
        for line in self.start_line + 1..self.end_line {
            out.push('\n');
            out.push_str(line_at(line));
        }
        out.push('\n');
        out.push_str(&take(line_at(self.end_line), 1, Some(self.end_col)));
        out
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start_line, self.start_col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiteralKind {
    List,
    Dict,
    Set,
    Tuple,
    Str,
    Number,
    Bool,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Module,
    FunctionDef,
    Parameter,
    Assignment,
    AugAssignment,
    LoopFor,
    LoopWhile,
    Comprehension,
    Conditional,
    Call,
    NameRef,
    AttributeRef,
    Subscript,
    Literal(LiteralKind),
    ImportStmt,
    ReturnStmt,
    BreakStmt,
    ContinueStmt,
    ExpressionStmt,
    BinaryOp,
    Comparison,
    BooleanOp,
    UnaryOp,
    Body,
    Opaque,
}

/// One node of the syntax tree. `label` carries the node-specific symbol:
/// the identifier for name refs, parameters, and function defs, the operator
/// for operator nodes, the dotted callee for calls, and the flavor for
/// comprehensions ("list", "set", "dict", "gen").
#[derive(Debug, Clone, PartialEq)]
pub struct SyntaxNode {
    pub kind: NodeKind,
    pub span: Span,
    pub children: Vec<SyntaxNode>,
    pub text: String,
    pub label: Option<String>,
}

impl SyntaxNode {
    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or("")
    }

    pub fn is_loop(&self) -> bool {
        matches!(self.kind, NodeKind::LoopFor | NodeKind::LoopWhile)
    }

    /// Condition of a conditional or while loop.
    pub fn cond(&self) -> Option<&SyntaxNode> {
        match self.kind {
            NodeKind::Conditional | NodeKind::LoopWhile => self.children.first(),
            _ => None,
        }
    }

    /// Main body block of a loop, conditional, or function.
    pub fn body(&self) -> Option<&SyntaxNode> {
        match self.kind {
            NodeKind::LoopFor => self.children.get(2),
            NodeKind::LoopWhile | NodeKind::Conditional => self.children.get(1),
            NodeKind::FunctionDef => self.children.last(),
            _ => None,
        }
    }

    /// Else block of a loop or conditional, when present.
    pub fn else_body(&self) -> Option<&SyntaxNode> {
        match self.kind {
            NodeKind::LoopFor => self.children.get(3),
            NodeKind::LoopWhile | NodeKind::Conditional => self.children.get(2),
            _ => None,
        }
    }

    pub fn for_target(&self) -> Option<&SyntaxNode> {
        match self.kind {
            NodeKind::LoopFor => self.children.first(),
            _ => None,
        }
    }

    pub fn for_iter(&self) -> Option<&SyntaxNode> {
        match self.kind {
            NodeKind::LoopFor => self.children.get(1),
            _ => None,
        }
    }

    /// Last dotted segment of a call's callee ("nums.pop" -> "pop").
    pub fn call_method(&self) -> Option<&str> {
        match self.kind {
            NodeKind::Call => self.label.as_deref().map(|l| l.rsplit('.').next().unwrap()),
            _ => None,
        }
    }

    /// First dotted segment of a call's callee ("nums.pop" -> "nums").
    pub fn call_receiver(&self) -> Option<&str> {
        match self.kind {
            NodeKind::Call => self
                .label
                .as_deref()
                .filter(|l| l.contains('.'))
                .map(|l| l.split('.').next().unwrap()),
            _ => None,
        }
    }

    pub fn call_args(&self) -> &[SyntaxNode] {
        match self.kind {
            NodeKind::Call => &self.children[1..],
            _ => &[],
        }
    }

    pub fn is_comprehension_of(&self, flavor: &str) -> bool {
        self.kind == NodeKind::Comprehension && self.label() == flavor
    }

    pub fn is_literal(&self, kind: LiteralKind) -> bool {
        self.kind == NodeKind::Literal(kind)
    }

    pub fn is_any_literal(&self) -> bool {
        matches!(self.kind, NodeKind::Literal(_))
    }

    /// Pre-order walk of this subtree, including `self`.
    pub fn walk(&self, f: &mut impl FnMut(&SyntaxNode)) {
        f(self);
        for child in &self.children {
            child.walk(f);
        }
    }

    /// Pre-order walk that does not descend into opaque nodes (the opaque
    /// node itself is still visited).
    pub fn walk_non_opaque(&self, f: &mut impl FnMut(&SyntaxNode)) {
        f(self);
        if self.kind == NodeKind::Opaque {
            return;
        }
        for child in &self.children {
            child.walk_non_opaque(f);
        }
    }
}

#[derive(Debug, Clone, Error)]
#[error("syntax error at {line}:{col}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl From<lexer::LexError> for ParseError {
    fn from(err: lexer::LexError) -> ParseError {
        ParseError {
            line: err.line,
            col: err.col,
            message: err.message,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Def,
    Use,
}

/// One definition or use of a name, in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub kind: EventKind,
    pub line: u32,
    pub col: u32,
}

/// A function scope discovered in the tree. Scope 0 is the module itself;
/// functions get 1-based indices in discovery order.
#[derive(Debug, Clone)]
pub struct FunctionScope {
    pub name: String,
    pub path: Vec<usize>,
    pub params: Vec<String>,
    pub scope: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopKind {
    For,
    While,
    Comprehension,
}

#[derive(Debug, Clone)]
pub struct LoopEntry {
    pub path: Vec<usize>,
    pub kind: LoopKind,
    /// 1-based nesting depth; an unnested loop has depth 1.
    pub depth: usize,
}

pub type DefUse = BTreeMap<usize, BTreeMap<String, Vec<Event>>>;

#[derive(Debug, Clone)]
pub struct SourceModel {
    pub root: SyntaxNode,
    pub functions: Vec<FunctionScope>,
    pub def_use: DefUse,
    pub loop_index: Vec<LoopEntry>,
    source: String,
}

/// Parse source text into a model. An empty input is a valid empty module.
pub fn parse(source: &str) -> Result<SourceModel, ParseError> {
    let toks = lexer::lex(source)?;
    let root = parser::parse_module(&toks, source)?;
    Ok(build_model(root, source))
}

fn build_model(root: SyntaxNode, source: &str) -> SourceModel {
    let mut builder = ModelBuilder {
        functions: Vec::new(),
        def_use: BTreeMap::new(),
        loop_index: Vec::new(),
        scope_stack: vec![0],
        loop_depth: 0,
    };
    builder.def_use.insert(0, BTreeMap::new());
    let mut path = Vec::new();
    for (index, child) in root.children.iter().enumerate() {
        builder.visit_child(child, index, &mut path);
    }
    SourceModel {
        root,
        functions: builder.functions,
        def_use: builder.def_use,
        loop_index: builder.loop_index,
        source: source.to_string(),
    }
}

struct ModelBuilder {
    functions: Vec<FunctionScope>,
    def_use: DefUse,
    loop_index: Vec<LoopEntry>,
    scope_stack: Vec<usize>,
    loop_depth: usize,
}

impl ModelBuilder {
    fn scope(&self) -> usize {
        *self.scope_stack.last().unwrap()
    }

    fn record(&mut self, name: &str, kind: EventKind, span: Span) {
        let scope = self.scope();
        self.def_use
            .entry(scope)
            .or_default()
            .entry(name.to_string())
            .or_default()
            .push(Event {
                kind,
                line: span.start_line,
                col: span.start_col,
            });
    }

    /// Visit `node`, which sits at child position `index` of the node `path`
    /// currently addresses, keeping `path` exact so loop entries can be
    /// resolved back to their nodes.
    fn visit_child(&mut self, node: &SyntaxNode, index: usize, path: &mut Vec<usize>) {
        path.push(index);
        self.visit(node, path);
        path.pop();
    }

    fn visit(&mut self, node: &SyntaxNode, path: &mut Vec<usize>) {
        match node.kind {
            NodeKind::FunctionDef => {
                self.record(node.label(), EventKind::Def, node.span);
                let scope = self.functions.len() + 1;
                let param_count = node.children.len() - 1;
                let params: Vec<String> = node.children[..param_count]
                    .iter()
                    .map(|p| p.label().to_string())
                    .collect();
                self.functions.push(FunctionScope {
                    name: node.label().to_string(),
                    path: path.clone(),
                    params,
                    scope,
                });
                self.def_use.entry(scope).or_default();
                // Defaults evaluate in the enclosing scope.
                for (pi, param) in node.children[..param_count].iter().enumerate() {
                    path.push(pi);
                    for (di, default) in param.children.iter().enumerate() {
                        self.visit_child(default, di, path);
                    }
                    path.pop();
                }
                self.scope_stack.push(scope);
                let outer_depth = std::mem::take(&mut self.loop_depth);
                for param in &node.children[..param_count] {
                    self.record(param.label(), EventKind::Def, param.span);
                }
                if let Some(body) = node.body() {
                    self.visit_child(body, param_count, path);
                }
                self.loop_depth = outer_depth;
                self.scope_stack.pop();
            }
            NodeKind::Assignment => {
                let value_index = node.children.len() - 1;
                self.visit_child(&node.children[value_index], value_index, path);
                for (ti, target) in node.children[..value_index].iter().enumerate() {
                    self.visit_target(target, ti, path);
                }
            }
            NodeKind::AugAssignment => {
                let target = &node.children[0];
                if target.kind == NodeKind::NameRef {
                    self.record(target.label(), EventKind::Use, target.span);
                    self.record(target.label(), EventKind::Def, target.span);
                } else {
                    self.visit_child(target, 0, path);
                }
                self.visit_child(&node.children[1], 1, path);
            }
            NodeKind::LoopFor => {
                self.loop_index.push(LoopEntry {
                    path: path.clone(),
                    kind: LoopKind::For,
                    depth: self.loop_depth + 1,
                });
                if let Some(iter) = node.for_iter() {
                    self.visit_child(iter, 1, path);
                }
                if let Some(target) = node.for_target() {
                    self.visit_target(target, 0, path);
                }
                self.loop_depth += 1;
                if let Some(body) = node.body() {
                    self.visit_child(body, 2, path);
                }
                self.loop_depth -= 1;
                if let Some(els) = node.else_body() {
                    self.visit_child(els, 3, path);
                }
            }
            NodeKind::LoopWhile => {
                self.loop_index.push(LoopEntry {
                    path: path.clone(),
                    kind: LoopKind::While,
                    depth: self.loop_depth + 1,
                });
                if let Some(cond) = node.cond() {
                    self.visit_child(cond, 0, path);
                }
                self.loop_depth += 1;
                if let Some(body) = node.body() {
                    self.visit_child(body, 1, path);
                }
                self.loop_depth -= 1;
                if let Some(els) = node.else_body() {
                    self.visit_child(els, 2, path);
                }
            }
            NodeKind::Comprehension => {
                self.loop_index.push(LoopEntry {
                    path: path.clone(),
                    kind: LoopKind::Comprehension,
                    depth: self.loop_depth + 1,
                });
                self.loop_depth += 1;
                for (index, child) in node.children.iter().enumerate() {
                    if child.kind == NodeKind::Parameter {
                        path.push(index);
                        for (ti, target) in child.children.iter().enumerate() {
                            self.visit_target(target, ti, path);
                        }
                        path.pop();
                    } else {
                        self.visit_child(child, index, path);
                    }
                }
                self.loop_depth -= 1;
            }
            NodeKind::ImportStmt => {
                for param in &node.children {
                    self.record(param.label(), EventKind::Def, param.span);
                }
            }
            NodeKind::NameRef => {
                self.record(node.label(), EventKind::Use, node.span);
            }
            NodeKind::Literal(LiteralKind::Str) => {
                if node.label() == "f" {
                    for name in f_string_names(&node.text) {
                        self.record(&name, EventKind::Use, node.span);
                    }
                }
            }
            NodeKind::Opaque => {
                let mut names = Vec::new();
                node.walk(&mut |n| {
                    if n.kind == NodeKind::NameRef {
                        names.push((n.label().to_string(), n.span));
                    }
                });
                for (name, span) in names {
                    self.record(&name, EventKind::Use, span);
                }
            }
            _ => {
                for (index, child) in node.children.iter().enumerate() {
                    self.visit_child(child, index, path);
                }
            }
        }
    }

    fn visit_target(&mut self, target: &SyntaxNode, index: usize, path: &mut Vec<usize>) {
        match target.kind {
            NodeKind::NameRef => self.record(target.label(), EventKind::Def, target.span),
            NodeKind::Literal(LiteralKind::Tuple) | NodeKind::Literal(LiteralKind::List) => {
                path.push(index);
                for (ti, child) in target.children.iter().enumerate() {
                    self.visit_target(child, ti, path);
                }
                path.pop();
            }
            NodeKind::UnaryOp if target.label() == "*" => {
                path.push(index);
                for (ti, child) in target.children.iter().enumerate() {
                    self.visit_target(child, ti, path);
                }
                path.pop();
            }
            // Subscript and attribute stores read their base binding.
            _ => self.visit_child(target, index, path),
        }
    }
}

/// Identifier-looking tokens inside the replacement fields of an f-string.
fn f_string_names(text: &str) -> Vec<String> {
    let mut names = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut in_field = false;
    while i < chars.len() {
        let c = chars[i];
        if c == '{' {
            if chars.get(i + 1) == Some(&'{') {
                i += 2;
                continue;
            }
            in_field = true;
            i += 1;
            continue;
        }
        if c == '}' {
            in_field = false;
            i += 1;
            continue;
        }
        if in_field && (c == '_' || c.is_alphabetic()) {
            let start = i;
            while i < chars.len() && (chars[i] == '_' || chars[i].is_alphanumeric()) {
                i += 1;
            }
            let name: String = chars[start..i].iter().collect();
            let is_attr = start > 0 && chars[start - 1] == '.';
            if !is_keyword(&name) && !is_attr {
                names.push(name);
            }
            continue;
        }
        i += 1;
    }
    names
}

impl SourceModel {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn node_at(&self, path: &[usize]) -> &SyntaxNode {
        let mut node = &self.root;
        for &index in path {
            node = &node.children[index];
        }
        node
    }

    /// All names referenced in a subtree, including names used inside
    /// f-string replacement fields.
    pub fn names_in(node: &SyntaxNode) -> BTreeSet<String> {
        let mut names = BTreeSet::new();
        node.walk(&mut |n| match n.kind {
            NodeKind::NameRef => {
                names.insert(n.label().to_string());
            }
            NodeKind::Literal(LiteralKind::Str) if n.label() == "f" => {
                names.extend(f_string_names(&n.text));
            }
            _ => {}
        });
        names
    }

    /// Whether a name is read anywhere in the file, in any scope.
    pub fn has_use(&self, name: &str) -> bool {
        self.def_use.values().any(|scope| {
            scope
                .get(name)
                .map_or(false, |events| events.iter().any(|e| e.kind == EventKind::Use))
        })
    }

    /// Conservative purity check: true only for expressions built from name
    /// refs, literals, operators, subscripts, and calls to allowlisted
    /// builtins.
    pub fn is_pure_expression(&self, node: &SyntaxNode, allowlist: &BTreeSet<String>) -> bool {
        match node.kind {
            NodeKind::NameRef | NodeKind::Literal(_) => true,
            NodeKind::BinaryOp
            | NodeKind::Comparison
            | NodeKind::BooleanOp
            | NodeKind::UnaryOp
            | NodeKind::Subscript => node
                .children
                .iter()
                .all(|child| self.is_pure_expression(child, allowlist)),
            NodeKind::Call => {
                let simple = node.children[0].kind == NodeKind::NameRef;
                simple
                    && allowlist.contains(node.label())
                    && node
                        .call_args()
                        .iter()
                        .all(|arg| self.is_pure_expression(arg, allowlist))
            }
            _ => false,
        }
    }

    /// Every name the loop body may change: assignment and aug-assignment
    /// targets (including subscript/attribute store bases), loop targets,
    /// receivers of known-mutating method calls, plain-name arguments of
    /// unknown calls, everything named in nested functions, and everything
    /// named under opaque statements.
    pub fn mutated_names(&self, loop_node: &SyntaxNode) -> BTreeSet<String> {
        let allowlist: BTreeSet<String> = DEFAULT_PURE_BUILTINS
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut out = BTreeSet::new();
        if let Some(target) = loop_node.for_target() {
            collect_target_names(target, &mut out);
        }
        if loop_node.kind == NodeKind::Comprehension {
            for child in &loop_node.children {
                if child.kind == NodeKind::Parameter {
                    for target in &child.children {
                        collect_target_names(target, &mut out);
                    }
                }
            }
        }
        let body: Vec<&SyntaxNode> = match loop_node.kind {
            NodeKind::Comprehension => loop_node
                .children
                .iter()
                .filter(|c| c.kind != NodeKind::Parameter)
                .collect(),
            _ => loop_node
                .body()
                .into_iter()
                .chain(loop_node.else_body())
                .collect(),
        };
        for part in body {
            collect_mutations(part, &allowlist, &mut out);
        }
        out
    }

    /// Names a single statement (or any subtree) may rebind or mutate, by the
    /// same conservative reasoning as [`SourceModel::mutated_names`].
    pub fn mutations_of(&self, node: &SyntaxNode) -> BTreeSet<String> {
        let allowlist: BTreeSet<String> = DEFAULT_PURE_BUILTINS
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut out = BTreeSet::new();
        collect_mutations(node, &allowlist, &mut out);
        out
    }
}

fn collect_target_names(target: &SyntaxNode, out: &mut BTreeSet<String>) {
    match target.kind {
        NodeKind::NameRef => {
            out.insert(target.label().to_string());
        }
        NodeKind::Literal(LiteralKind::Tuple) | NodeKind::Literal(LiteralKind::List) => {
            for child in &target.children {
                collect_target_names(child, out);
            }
        }
        NodeKind::UnaryOp | NodeKind::Subscript | NodeKind::AttributeRef => {
            if let Some(base) = base_name(target) {
                out.insert(base);
            }
        }
        _ => {}
    }
}

/// Leftmost plain name of a subscript/attribute chain (`a.b[i].c` -> `a`).
fn base_name(node: &SyntaxNode) -> Option<String> {
    match node.kind {
        NodeKind::NameRef => Some(node.label().to_string()),
        NodeKind::Subscript | NodeKind::AttributeRef | NodeKind::UnaryOp => {
            node.children.first().and_then(base_name)
        }
        _ => None,
    }
}

fn collect_mutations(node: &SyntaxNode, allowlist: &BTreeSet<String>, out: &mut BTreeSet<String>) {
    match node.kind {
        NodeKind::Assignment => {
            let (targets, value) = node.children.split_at(node.children.len() - 1);
            for target in targets {
                collect_target_names(target, out);
            }
            collect_mutations(&value[0], allowlist, out);
        }
        NodeKind::AugAssignment => {
            collect_target_names(&node.children[0], out);
            collect_mutations(&node.children[1], allowlist, out);
        }
        NodeKind::LoopFor => {
            if let Some(target) = node.for_target() {
                collect_target_names(target, out);
            }
            for child in &node.children[1..] {
                collect_mutations(child, allowlist, out);
            }
        }
        NodeKind::Comprehension => {
            for child in &node.children {
                if child.kind == NodeKind::Parameter {
                    for target in &child.children {
                        collect_target_names(target, out);
                    }
                } else {
                    collect_mutations(child, allowlist, out);
                }
            }
        }
        NodeKind::Call => {
            let callee = &node.children[0];
            let method = node.call_method().unwrap_or("");
            if callee.kind == NodeKind::NameRef && allowlist.contains(node.label()) {
                // Known-pure builtin: arguments survive untouched.
            } else if callee.kind != NodeKind::NameRef && MUTATING_METHODS.contains(&method) {
                if let Some(base) = base_name(&callee.children[0]) {
                    out.insert(base);
                }
            } else {
                // Unknown call: any plain-name argument may be mutated, and a
                // method receiver may mutate itself.
                if callee.kind != NodeKind::NameRef {
                    if let Some(base) = base_name(&callee.children[0]) {
                        out.insert(base);
                    }
                }
                for arg in node.call_args() {
                    if arg.kind == NodeKind::NameRef {
                        out.insert(arg.label().to_string());
                    }
                }
            }
            for arg in node.call_args() {
                collect_mutations(arg, allowlist, out);
            }
        }
        NodeKind::FunctionDef => {
            out.insert(node.label().to_string());
            node.walk(&mut |n| {
                if n.kind == NodeKind::NameRef || n.kind == NodeKind::Parameter {
                    out.insert(n.label().to_string());
                }
            });
        }
        NodeKind::Opaque => {
            node.walk(&mut |n| {
                if n.kind == NodeKind::NameRef {
                    out.insert(n.label().to_string());
                }
            });
        }
        _ => {
            for child in &node.children {
                collect_mutations(child, allowlist, out);
            }
        }
    }
}
