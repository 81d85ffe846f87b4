//! The twelve static rules.
//!
//! Each rule is a pure function of the source model returning raw findings
//! (span + message); the engine in the parent module attaches ids, severity,
//! and hints. Rules never descend into opaque nodes and never suppress one
//! another.

use std::collections::{BTreeMap, BTreeSet};

use crate::source::{
    EventKind, LiteralKind, LoopKind, NodeKind, SourceModel, Span, SyntaxNode, MUTATING_METHODS,
};

#[derive(Debug, Clone)]
pub(crate) struct Raw {
    pub span: Span,
    pub message: String,
}

fn raw(span: Span, message: impl Into<String>) -> Raw {
    Raw {
        span,
        message: message.into(),
    }
}

/// Statement lists reachable without crossing an opaque node: the module's
/// own children plus every body block, function bodies included.
fn blocks<'a>(node: &'a SyntaxNode, out: &mut Vec<&'a [SyntaxNode]>) {
    if node.kind == NodeKind::Opaque {
        return;
    }
    if matches!(node.kind, NodeKind::Module | NodeKind::Body) {
        out.push(&node.children);
    }
    for child in &node.children {
        blocks(child, out);
    }
}

/// One lexical scope's statements in source order, descending through
/// conditionals and loops but not into nested functions or opaque nodes.
fn region_statements<'a>(stmts: &'a [SyntaxNode], out: &mut Vec<&'a SyntaxNode>) {
    for stmt in stmts {
        out.push(stmt);
        let bodies: &[SyntaxNode] = match stmt.kind {
            NodeKind::Conditional | NodeKind::LoopWhile => &stmt.children[1..],
            NodeKind::LoopFor => &stmt.children[2..],
            _ => &[],
        };
        for body in bodies.iter().filter(|b| b.kind == NodeKind::Body) {
            region_statements(&body.children, out);
        }
    }
}

/// A scope region: the module or one function body, with its flattened
/// statement list and def/use scope index.
struct Region<'a> {
    root_span: Span,
    scope: usize,
    stmts: Vec<&'a SyntaxNode>,
}

fn regions(model: &SourceModel) -> Vec<Region<'_>> {
    let mut out = Vec::new();
    let mut stmts = Vec::new();
    region_statements(&model.root.children, &mut stmts);
    out.push(Region {
        root_span: model.root.span,
        scope: 0,
        stmts,
    });
    for function in &model.functions {
        let node = model.node_at(&function.path);
        let mut stmts = Vec::new();
        if let Some(body) = node.body() {
            region_statements(&body.children, &mut stmts);
        }
        out.push(Region {
            root_span: node.span,
            scope: function.scope,
            stmts,
        });
    }
    out
}

impl<'a> Region<'a> {
    /// Last plain `name = <value>` before `before` in this region.
    fn last_binding_before(&self, name: &str, before: Span) -> Option<&'a SyntaxNode> {
        self.stmts
            .iter()
            .filter(|s| s.span < before)
            .filter_map(|s| plain_assignment(s))
            .filter(|(target, _)| *target == name)
            .map(|(_, value)| value)
            .last()
    }
}

/// `name = value` with exactly one plain-name target.
fn plain_assignment(stmt: &SyntaxNode) -> Option<(&str, &SyntaxNode)> {
    if stmt.kind == NodeKind::Assignment
        && stmt.children.len() == 2
        && stmt.children[0].kind == NodeKind::NameRef
    {
        Some((stmt.children[0].label(), &stmt.children[1]))
    } else {
        None
    }
}

/// The innermost region whose root span contains `span`.
fn region_of<'a, 'b>(regions: &'b [Region<'a>], span: Span) -> &'b Region<'a> {
    regions
        .iter()
        .skip(1)
        .filter(|r| r.root_span.start_line <= span.start_line && span.end_line <= r.root_span.end_line)
        .min_by_key(|r| r.root_span.end_line - r.root_span.start_line)
        .unwrap_or(&regions[0])
}

fn loop_nodes<'a>(model: &'a SourceModel) -> Vec<(&'a SyntaxNode, LoopKind)> {
    model
        .loop_index
        .iter()
        .map(|entry| (model.node_at(&entry.path), entry.kind))
        .collect()
}

/// Expression text with whitespace removed outside string literals, so
/// formatting differences do not defeat syntactic comparison.
fn normalize(text: &str) -> String {
    let mut out = String::new();
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for c in text.chars() {
        match quote {
            Some(q) => {
                out.push(c);
                if escaped {
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == q {
                    quote = None;
                }
            }
            None => {
                if c == '"' || c == '\'' {
                    quote = Some(c);
                    out.push(c);
                } else if !c.is_whitespace() {
                    out.push(c);
                }
            }
        }
    }
    out
}

fn count_kinds(node: &SyntaxNode, pred: fn(&SyntaxNode) -> bool) -> usize {
    let mut count = 0;
    node.walk(&mut |n| {
        if pred(n) {
            count += 1;
        }
    });
    count
}

fn operator_count(node: &SyntaxNode) -> usize {
    count_kinds(node, |n| {
        matches!(
            n.kind,
            NodeKind::BinaryOp
                | NodeKind::Comparison
                | NodeKind::BooleanOp
                | NodeKind::UnaryOp
                | NodeKind::Subscript
        )
    })
}

fn call_count(node: &SyntaxNode) -> usize {
    count_kinds(node, |n| n.kind == NodeKind::Call)
}

// ---- C1.S1 dead code ----

pub(crate) fn dead_code(model: &SourceModel) -> Vec<Raw> {
    let mut out = Vec::new();

    // (a) imports whose bound names are never referenced anywhere.
    let mut imports = Vec::new();
    collect_kind(&model.root, NodeKind::ImportStmt, &mut imports);
    for import in imports {
        for bound in &import.children {
            let name = bound.label();
            if !model.has_use(name) {
                out.push(raw(
                    bound.span,
                    format!("`{name}` is imported but never used"),
                ));
            }
        }
    }

    // (b) statements after an unconditional return or break in the same block.
    let mut block_lists = Vec::new();
    blocks(&model.root, &mut block_lists);
    for stmts in block_lists {
        let cut = stmts
            .iter()
            .position(|s| matches!(s.kind, NodeKind::ReturnStmt | NodeKind::BreakStmt));
        if let Some(i) = cut {
            if let Some(next) = stmts.get(i + 1) {
                let word = if stmts[i].kind == NodeKind::ReturnStmt {
                    "return"
                } else {
                    "break"
                };
                out.push(raw(
                    next.span,
                    format!("unreachable: the block already ended with `{word}`"),
                ));
            }
        }
    }

    // (c) function locals assigned but never read, in the function itself or
    // any function nested inside it.
    for function in &model.functions {
        let node = model.node_at(&function.path);
        let mut stmts = Vec::new();
        if let Some(body) = node.body() {
            region_statements(&body.children, &mut stmts);
        }
        let mut first_def: BTreeMap<&str, Span> = BTreeMap::new();
        for stmt in &stmts {
            if let Some((target, _)) = plain_assignment(stmt) {
                first_def.entry(target).or_insert(stmt.children[0].span);
            }
        }
        let nested_scopes: Vec<usize> = model
            .functions
            .iter()
            .filter(|f| f.path.starts_with(&function.path))
            .map(|f| f.scope)
            .collect();
        for (name, span) in first_def {
            if name.starts_with('_') {
                continue;
            }
            let read_somewhere = nested_scopes.iter().any(|scope| {
                model.def_use[scope]
                    .get(name)
                    .map_or(false, |events| events.iter().any(|e| e.kind == EventKind::Use))
            });
            if !read_somewhere {
                out.push(raw(
                    span,
                    format!("`{name}` is assigned but its value is never read"),
                ));
            }
        }
    }

    out.sort_by_key(|r| r.span);
    out
}

fn collect_kind<'a>(node: &'a SyntaxNode, kind: NodeKind, out: &mut Vec<&'a SyntaxNode>) {
    if node.kind == NodeKind::Opaque {
        return;
    }
    if node.kind == kind {
        out.push(node);
    }
    for child in &node.children {
        collect_kind(child, kind, out);
    }
}

// ---- C1.S2 redundant assignment ----

pub(crate) fn redundant_assignment(model: &SourceModel) -> Vec<Raw> {
    let mut out = Vec::new();
    let mut block_lists = Vec::new();
    blocks(&model.root, &mut block_lists);
    for stmts in block_lists {
        for (i, stmt) in stmts.iter().enumerate() {
            let (target, value) = match plain_assignment(stmt) {
                Some(pair) => pair,
                None => continue,
            };
            if value.kind == NodeKind::NameRef && value.label() == target {
                out.push(raw(
                    stmt.span,
                    format!("`{target}` is assigned to itself"),
                ));
                continue;
            }
            // Overwritten before any read, within straight-line code.
            for later in &stmts[i + 1..] {
                if !matches!(
                    later.kind,
                    NodeKind::Assignment | NodeKind::AugAssignment | NodeKind::ExpressionStmt
                ) {
                    break;
                }
                if reads_name(later, target) {
                    break;
                }
                if let Some((t2, _)) = plain_assignment(later) {
                    if t2 == target {
                        out.push(raw(
                            stmt.span,
                            format!(
                                "`{target}` is overwritten at line {} before this value is read",
                                later.span.start_line
                            ),
                        ));
                        break;
                    }
                }
            }
        }
    }
    out.sort_by_key(|r| r.span);
    out
}

/// Does any name reference (including f-string fields) in `node`'s subtree,
/// except a plain assignment's own target, read `name`?
fn reads_name(node: &SyntaxNode, name: &str) -> bool {
    let skip_target = plain_assignment(node).map(|_| &node.children[0]);
    let mut found = false;
    node.walk(&mut |n| {
        if let Some(target) = skip_target {
            if std::ptr::eq(n, target) {
                return;
            }
        }
        match n.kind {
            NodeKind::NameRef if n.label() == name => found = true,
            NodeKind::Literal(LiteralKind::Str) if n.label() == "f" => {
                if SourceModel::names_in(n).contains(name) {
                    found = true;
                }
            }
            _ => {}
        }
    });
    found
}

// ---- C1.S4 repeated computation ----

type ExprMap = BTreeMap<String, (Span, BTreeSet<String>)>;

pub(crate) fn repeated_computation(model: &SourceModel, allow: &BTreeSet<String>) -> Vec<Raw> {
    let mut out = Vec::new();
    let mut map = ExprMap::new();
    repeat_scan_block(&model.root.children, model, allow, &mut map, &mut out);
    for function in &model.functions {
        let node = model.node_at(&function.path);
        if let Some(body) = node.body() {
            let mut map = ExprMap::new();
            repeat_scan_block(&body.children, model, allow, &mut map, &mut out);
        }
    }
    out.sort_by_key(|r| r.span);
    out
}

fn repeat_scan_block(
    stmts: &[SyntaxNode],
    model: &SourceModel,
    allow: &BTreeSet<String>,
    map: &mut ExprMap,
    out: &mut Vec<Raw>,
) {
    for stmt in stmts {
        match stmt.kind {
            NodeKind::Conditional => {
                harvest(&stmt.children[0], model, allow, map, out);
                for body in stmt.children[1..].iter().filter(|b| b.kind == NodeKind::Body) {
                    let mut branch = map.clone();
                    repeat_scan_block(&body.children, model, allow, &mut branch, out);
                }
                invalidate(map, &model.mutations_of(stmt));
            }
            NodeKind::LoopFor | NodeKind::LoopWhile => {
                // The iterable (or condition) is evaluated in the enclosing
                // flow; the body repeats, so it only sees a snapshot.
                let header = if stmt.kind == NodeKind::LoopFor {
                    &stmt.children[1]
                } else {
                    &stmt.children[0]
                };
                harvest(header, model, allow, map, out);
                for body in stmt.children.iter().filter(|b| b.kind == NodeKind::Body) {
                    let mut inner = map.clone();
                    repeat_scan_block(&body.children, model, allow, &mut inner, out);
                }
                invalidate(map, &model.mutations_of(stmt));
            }
            NodeKind::FunctionDef => {
                invalidate(map, &[stmt.label().to_string()].into_iter().collect());
            }
            NodeKind::Opaque | NodeKind::ImportStmt => {
                invalidate(map, &model.mutations_of(stmt));
                if stmt.kind == NodeKind::ImportStmt {
                    let bound: BTreeSet<String> = stmt
                        .children
                        .iter()
                        .map(|c| c.label().to_string())
                        .collect();
                    invalidate(map, &bound);
                }
            }
            NodeKind::BreakStmt | NodeKind::ContinueStmt => {}
            _ => {
                harvest(stmt, model, allow, map, out);
                invalidate(map, &model.mutations_of(stmt));
            }
        }
    }
}

fn invalidate(map: &mut ExprMap, names: &BTreeSet<String>) {
    if names.is_empty() {
        return;
    }
    map.retain(|_, (_, expr_names)| expr_names.is_disjoint(names));
}

/// Record maximal pure subexpressions; report any already in the map.
fn harvest(
    node: &SyntaxNode,
    model: &SourceModel,
    allow: &BTreeSet<String>,
    map: &mut ExprMap,
    out: &mut Vec<Raw>,
) {
    if matches!(node.kind, NodeKind::Opaque | NodeKind::Comprehension) {
        return;
    }
    if model.is_pure_expression(node, allow) {
        if operator_count(node) >= 2 || call_count(node) >= 1 {
            let key = normalize(&node.text);
            match map.get(&key) {
                Some((first, _)) if *first != node.span => out.push(raw(
                    node.span,
                    format!(
                        "`{}` was already computed at line {}",
                        node.text.trim(),
                        first.start_line
                    ),
                )),
                Some(_) => {}
                None => {
                    map.insert(key, (node.span, SourceModel::names_in(node)));
                }
            }
        }
        return;
    }
    for child in &node.children {
        harvest(child, model, allow, map, out);
    }
}

// ---- C3.S2 loop-invariant recomputation ----

pub(crate) fn loop_invariant(model: &SourceModel, allow: &BTreeSet<String>) -> Vec<Raw> {
    let mut out = Vec::new();
    for (node, kind) in loop_nodes(model) {
        let mutated = model.mutated_names(node);
        let mut seen = BTreeSet::new();
        match kind {
            LoopKind::For | LoopKind::While => {
                if let Some(body) = node.body() {
                    invariant_scan_stmts(&body.children, model, allow, &mutated, &mut seen, &mut out);
                }
            }
            LoopKind::Comprehension => {
                // Elements and filter conditions re-evaluate per item; the
                // iterables do not (the first runs once, later ones belong
                // to their own clauses).
                let mut after_param = false;
                for child in &node.children {
                    if child.kind == NodeKind::Parameter {
                        after_param = true;
                        continue;
                    }
                    if after_param {
                        after_param = false; // the clause's iterable
                        continue;
                    }
                    invariant_scan_expr(child, model, allow, &mutated, &mut seen, &mut out);
                }
            }
        }
    }
    out.sort_by_key(|r| r.span);
    out.dedup_by_key(|r| r.span);
    out
}

fn invariant_scan_stmts(
    stmts: &[SyntaxNode],
    model: &SourceModel,
    allow: &BTreeSet<String>,
    mutated: &BTreeSet<String>,
    seen: &mut BTreeSet<String>,
    out: &mut Vec<Raw>,
) {
    for stmt in stmts {
        match stmt.kind {
            NodeKind::Assignment | NodeKind::AugAssignment => {
                if let Some(value) = stmt.children.last() {
                    invariant_scan_expr(value, model, allow, mutated, seen, out);
                }
            }
            NodeKind::ExpressionStmt | NodeKind::ReturnStmt => {
                for child in &stmt.children {
                    invariant_scan_expr(child, model, allow, mutated, seen, out);
                }
            }
            NodeKind::Conditional => {
                invariant_scan_expr(&stmt.children[0], model, allow, mutated, seen, out);
                for body in stmt.children[1..].iter().filter(|b| b.kind == NodeKind::Body) {
                    invariant_scan_stmts(&body.children, model, allow, mutated, seen, out);
                }
            }
            // Nested loops run their own scan against their own mutation set.
            _ => {}
        }
    }
}

fn invariant_scan_expr(
    expr: &SyntaxNode,
    model: &SourceModel,
    allow: &BTreeSet<String>,
    mutated: &BTreeSet<String>,
    seen: &mut BTreeSet<String>,
    out: &mut Vec<Raw>,
) {
    if matches!(
        expr.kind,
        NodeKind::Opaque | NodeKind::Comprehension | NodeKind::FunctionDef
    ) {
        return;
    }
    if model.is_pure_expression(expr, allow) {
        let names = SourceModel::names_in(expr);
        if names.is_disjoint(mutated) {
            let has_work = operator_count(expr) >= 1 || call_count(expr) >= 1;
            if has_work && !names.is_empty() && seen.insert(normalize(&expr.text)) {
                out.push(raw(
                    expr.span,
                    format!(
                        "`{}` does not change across iterations; compute it once before the loop",
                        expr.text.trim()
                    ),
                ));
            }
            return;
        }
    }
    for child in &expr.children {
        invariant_scan_expr(child, model, allow, mutated, seen, out);
    }
}

// ---- C3.S5 missing early exit ----

pub(crate) fn missing_early_exit(model: &SourceModel) -> Vec<Raw> {
    let mut out = Vec::new();
    for (node, kind) in loop_nodes(model) {
        if kind == LoopKind::Comprehension {
            continue;
        }
        let body = match node.body() {
            Some(b) if b.children.len() == 1 => b,
            _ => continue,
        };
        let cond = &body.children[0];
        if cond.kind != NodeKind::Conditional || cond.children.len() != 2 {
            continue;
        }
        let then = &cond.children[1];
        if then.children.len() != 1 {
            continue;
        }
        let assign = &then.children[0];
        match plain_assignment(assign) {
            Some((flag, value)) if value.kind == NodeKind::Literal(LiteralKind::Bool) => {
                out.push(raw(
                    assign.span,
                    format!(
                        "the loop keeps running after `{flag}` is settled; exit once the answer is known"
                    ),
                ));
            }
            _ => {}
        }
    }
    out.sort_by_key(|r| r.span);
    out
}

// ---- C3.S7 mutation during iteration ----

pub(crate) fn mutation_during_iteration(model: &SourceModel) -> Vec<Raw> {
    let mut out = Vec::new();
    for (node, kind) in loop_nodes(model) {
        match kind {
            LoopKind::For => {
                let iter = match node.for_iter() {
                    Some(i) if i.kind == NodeKind::NameRef => i.label().to_string(),
                    _ => continue,
                };
                if let Some(body) = node.body() {
                    body.walk(&mut |n| {
                        if let Some(name) = shrink_target(n, false) {
                            if name == iter {
                                out.push(raw(
                                    n.span,
                                    format!("`{iter}` is modified while being iterated"),
                                ));
                            }
                        }
                    });
                }
            }
            LoopKind::While => {
                let cond_names = match node.cond() {
                    Some(cond) => SourceModel::names_in(cond),
                    None => continue,
                };
                if let Some(body) = node.body() {
                    body.walk(&mut |n| {
                        if let Some(name) = shrink_target(n, true) {
                            if cond_names.contains(&name) {
                                out.push(raw(
                                    n.span,
                                    format!(
                                        "`{name}` shrinks from the front or interior while the loop condition depends on it"
                                    ),
                                ));
                            }
                        }
                    });
                }
            }
            LoopKind::Comprehension => {}
        }
    }
    out.sort_by_key(|r| r.span);
    out.dedup_by_key(|r| r.span);
    out
}

/// If `node` removes or rearranges elements of a named collection, the name.
/// With `front_or_interior`, only removals that shift elements count: `pop`
/// with an index, `remove`, or `del` — a bare `pop()` from the end is fine.
fn shrink_target(node: &SyntaxNode, front_or_interior: bool) -> Option<String> {
    match node.kind {
        NodeKind::Call => {
            let method = node.call_method()?;
            let receiver = node.call_receiver()?.to_string();
            if front_or_interior {
                match method {
                    "pop" if !node.call_args().is_empty() => Some(receiver),
                    "remove" => Some(receiver),
                    _ => None,
                }
            } else if MUTATING_METHODS.contains(&method) {
                Some(receiver)
            } else {
                None
            }
        }
        NodeKind::Opaque if node.label() == "del" => {
            node.children.first().map(|c| c.label().to_string())
        }
        _ => None,
    }
}

// ---- C4.S2 redundant conditional ----

pub(crate) fn redundant_conditional(model: &SourceModel) -> Vec<Raw> {
    let mut out = Vec::new();
    let mut conds = Vec::new();
    collect_kind(&model.root, NodeKind::Conditional, &mut conds);
    for node in conds {
        let cond = &node.children[0];
        if is_constant(cond) {
            out.push(raw(
                cond.span,
                format!("`{}` always evaluates the same way", cond.text.trim()),
            ));
        }
    }
    let mut whiles = Vec::new();
    collect_kind(&model.root, NodeKind::LoopWhile, &mut whiles);
    for node in whiles {
        let cond = &node.children[0];
        if is_constant(cond) && !is_truthy_literal(cond) {
            out.push(raw(
                cond.span,
                format!("`{}` always evaluates the same way", cond.text.trim()),
            ));
        }
    }
    out.sort_by_key(|r| r.span);
    out
}

fn is_constant(expr: &SyntaxNode) -> bool {
    match expr.kind {
        NodeKind::Literal(
            LiteralKind::Str | LiteralKind::Number | LiteralKind::Bool | LiteralKind::None,
        ) => true,
        NodeKind::Literal(_) => expr.children.iter().all(is_constant),
        NodeKind::Comparison | NodeKind::BooleanOp | NodeKind::UnaryOp | NodeKind::BinaryOp => {
            expr.children.iter().all(is_constant)
        }
        _ => false,
    }
}

/// `while True:` and `while 1:` are the deliberate infinite-loop idiom.
fn is_truthy_literal(expr: &SyntaxNode) -> bool {
    match expr.kind {
        NodeKind::Literal(LiteralKind::Bool) => expr.label() == "True",
        NodeKind::Literal(LiteralKind::Number) => expr.text.chars().any(|c| ('1'..='9').contains(&c)),
        _ => false,
    }
}

// ---- C5.S1 sequential membership ----

pub(crate) fn sequential_membership(model: &SourceModel) -> Vec<Raw> {
    let mut out: BTreeMap<Span, Raw> = BTreeMap::new();
    let all_regions = regions(model);
    for (node, kind) in loop_nodes(model) {
        let region = region_of(&all_regions, node.span);
        let parts: Vec<&SyntaxNode> = match kind {
            LoopKind::For => node.body().into_iter().collect(),
            LoopKind::While => node.cond().into_iter().chain(node.body()).collect(),
            LoopKind::Comprehension => node
                .children
                .iter()
                .filter(|c| c.kind != NodeKind::Parameter)
                .collect(),
        };
        for part in parts {
            part.walk_non_opaque(&mut |n| {
                if n.kind != NodeKind::Comparison || n.children.len() != 2 {
                    return;
                }
                if !matches!(n.label(), "in" | "not in") {
                    return;
                }
                let container = &n.children[1];
                if container.kind != NodeKind::NameRef {
                    return;
                }
                let name = container.label();
                if is_scan_only_sequence(region, name) {
                    out.insert(
                        n.span,
                        raw(
                            n.span,
                            format!(
                                "membership test scans `{name}` linearly on every check; a hash-based collection answers it in constant time"
                            ),
                        ),
                    );
                }
            });
        }
    }
    out.into_values().collect()
}

/// Is `name` only ever bound to list-like values in this region, and never
/// index-accessed (so nothing relies on ordering or positions)?
fn is_scan_only_sequence(region: &Region<'_>, name: &str) -> bool {
    let mut bindings = 0;
    for stmt in &region.stmts {
        if let Some((target, value)) = plain_assignment(stmt) {
            if target != name {
                continue;
            }
            bindings += 1;
            let listish = matches!(
                value.kind,
                NodeKind::Literal(LiteralKind::List) | NodeKind::Literal(LiteralKind::Tuple)
            ) || value.is_comprehension_of("list")
                || (value.kind == NodeKind::Call && value.label() == "list");
            if !listish {
                return false;
            }
        }
    }
    if bindings == 0 {
        return false;
    }
    for stmt in &region.stmts {
        let mut subscripted = false;
        stmt.walk(&mut |n| {
            if n.kind == NodeKind::Subscript
                && n.children.first().map_or(false, |b| {
                    b.kind == NodeKind::NameRef && b.label() == name
                })
            {
                subscripted = true;
            }
        });
        if subscripted {
            return false;
        }
    }
    true
}

// ---- C6.S3 unnecessary materialization ----

const CONSUMERS: [&str; 6] = ["sum", "min", "max", "any", "all", "sorted"];

pub(crate) fn unnecessary_materialization(model: &SourceModel) -> Vec<Raw> {
    let mut out = Vec::new();

    // (a) a full list built just to be handed to one consuming call.
    let mut calls = Vec::new();
    collect_kind(&model.root, NodeKind::Call, &mut calls);
    for call in calls {
        let callee = &call.children[0];
        let consuming = (callee.kind == NodeKind::NameRef
            && CONSUMERS.contains(&call.label()))
            || (callee.kind == NodeKind::AttributeRef && call.call_method() == Some("join"));
        if !consuming {
            continue;
        }
        if let Some(arg) = call.call_args().first() {
            if is_materialized_list(arg) {
                out.push(raw(
                    arg.span,
                    "the full list is built in memory only to be consumed once; feed the consumer lazily".to_string(),
                ));
            }
        }
    }

    // (b) a named list built, iterated once by a for loop, and never used
    // again.
    for region in regions(model) {
        let scope = &model.def_use[&region.scope];
        for stmt in &region.stmts {
            let (target, value) = match plain_assignment(stmt) {
                Some(pair) => pair,
                None => continue,
            };
            if !is_materialized_list(value) {
                continue;
            }
            let events = match scope.get(target) {
                Some(e) => e,
                None => continue,
            };
            let defs = events.iter().filter(|e| e.kind == EventKind::Def).count();
            let uses: Vec<_> = events.iter().filter(|e| e.kind == EventKind::Use).collect();
            if defs != 1 || uses.len() != 1 {
                continue;
            }
            let the_use = uses[0];
            let feeds_loop = region.stmts.iter().any(|s| {
                s.kind == NodeKind::LoopFor
                    && s.for_iter().map_or(false, |it| {
                        it.kind == NodeKind::NameRef
                            && it.label() == target
                            && it.span.start_line == the_use.line
                            && it.span.start_col == the_use.col
                    })
            });
            if feeds_loop {
                out.push(raw(
                    value.span,
                    format!(
                        "`{target}` is materialized in full but only iterated once; a generator avoids holding it in memory"
                    ),
                ));
            }
        }
    }

    out.sort_by_key(|r| r.span);
    out.dedup_by_key(|r| r.span);
    out
}

fn is_materialized_list(node: &SyntaxNode) -> bool {
    node.is_comprehension_of("list")
        || (node.kind == NodeKind::Call
            && node.label() == "list"
            && node.children[0].kind == NodeKind::NameRef)
}

// ---- C6.S7 mutable default ----

pub(crate) fn mutable_default(model: &SourceModel) -> Vec<Raw> {
    let mut out = Vec::new();
    let mut defs = Vec::new();
    collect_kind(&model.root, NodeKind::FunctionDef, &mut defs);
    for def in defs {
        for param in &def.children[..def.children.len() - 1] {
            let default = match param.children.first() {
                Some(d) => d,
                None => continue,
            };
            if matches!(
                default.kind,
                NodeKind::Literal(LiteralKind::List | LiteralKind::Dict | LiteralKind::Set)
            ) {
                out.push(raw(
                    default.span,
                    format!(
                        "mutable default for `{}` is created once and shared across calls; default to None and build inside",
                        param.label()
                    ),
                ));
            }
        }
    }
    out.sort_by_key(|r| r.span);
    out
}

// ---- C10.S1 manual reimplementation of a built-in ----

pub(crate) fn manual_builtin(model: &SourceModel) -> Vec<Raw> {
    let mut out = Vec::new();
    let all_regions = regions(model);
    for (node, kind) in loop_nodes(model) {
        if kind != LoopKind::For {
            continue;
        }
        let body = match node.body() {
            Some(b) if b.children.len() == 1 => b,
            _ => continue,
        };
        let stmt = &body.children[0];

        // acc += v  /  acc += 1, with acc started from a number.
        if stmt.kind == NodeKind::AugAssignment
            && stmt.label() == "+="
            && stmt.children[0].kind == NodeKind::NameRef
        {
            let acc = stmt.children[0].label();
            let region = region_of(&all_regions, node.span);
            let init = region.last_binding_before(acc, node.span);
            let numeric_init =
                init.map_or(false, |v| v.kind == NodeKind::Literal(LiteralKind::Number));
            if numeric_init {
                let value = &stmt.children[1];
                if value.kind == NodeKind::Literal(LiteralKind::Number) && value.text == "1" {
                    out.push(raw(
                        node.span,
                        format!("counting by hand; `{acc}` is the length of the iterable"),
                    ));
                } else if !SourceModel::names_in(value).contains(acc) {
                    out.push(raw(
                        node.span,
                        "summing by hand; the summation built-in does this in native code"
                            .to_string(),
                    ));
                }
            }
            continue;
        }

        if stmt.kind != NodeKind::Conditional || stmt.children.len() != 2 {
            continue;
        }
        let then = &stmt.children[1];
        if then.children.len() != 1 {
            continue;
        }
        let inner = &then.children[0];

        // if v < acc: acc = v  (running min/max against the loop variable).
        let target_name = match node.for_target() {
            Some(t) if t.kind == NodeKind::NameRef => t.label(),
            _ => "",
        };
        if !target_name.is_empty() {
            if let (Some((acc, value)), cond) = (plain_assignment(inner), &stmt.children[0]) {
                if value.kind == NodeKind::NameRef
                    && value.label() == target_name
                    && cond.kind == NodeKind::Comparison
                    && cond.children.len() == 2
                {
                    let (left, right) = (&cond.children[0], &cond.children[1]);
                    let names = (left.label(), right.label());
                    let both_refs =
                        left.kind == NodeKind::NameRef && right.kind == NodeKind::NameRef;
                    if both_refs {
                        let builtin = match (cond.label(), names) {
                            ("<" | "<=", (v, a)) if v == target_name && a == acc => Some("minimum"),
                            (">" | ">=", (v, a)) if v == target_name && a == acc => Some("maximum"),
                            ("<" | "<=", (a, v)) if v == target_name && a == acc => Some("maximum"),
                            (">" | ">=", (a, v)) if v == target_name && a == acc => Some("minimum"),
                            _ => None,
                        };
                        if let Some(which) = builtin {
                            out.push(raw(
                                node.span,
                                format!("tracking a running {which} by hand; the {which} built-in does this in one call"),
                            ));
                            continue;
                        }
                    }
                }
            }
        }

        // if pred: flag = True/False  (manual any/all).
        if let Some((flag, value)) = plain_assignment(inner) {
            if value.kind == NodeKind::Literal(LiteralKind::Bool) {
                out.push(raw(
                    node.span,
                    format!(
                        "`{flag}` is a hand-rolled existence test; the any/all built-ins short-circuit"
                    ),
                ));
            }
        }
    }
    out.sort_by_key(|r| r.span);
    out
}

// ---- C10.S4 string concatenation in a loop ----

pub(crate) fn string_concat_loop(model: &SourceModel) -> Vec<Raw> {
    let mut out = Vec::new();
    let all_regions = regions(model);
    for (node, kind) in loop_nodes(model) {
        if kind == LoopKind::Comprehension {
            continue;
        }
        let body = match node.body() {
            Some(b) => b,
            None => continue,
        };
        let region = region_of(&all_regions, node.span);
        let mut stmts = Vec::new();
        region_statements(&body.children, &mut stmts);
        for stmt in stmts {
            let target = match concat_target(stmt) {
                Some(t) => t,
                None => continue,
            };
            let init = region.last_binding_before(target, node.span);
            let string_init =
                init.map_or(false, |v| v.kind == NodeKind::Literal(LiteralKind::Str));
            if string_init {
                out.push(raw(
                    stmt.span,
                    format!(
                        "`{target}` grows by concatenation each iteration, copying the whole string every time; collect parts and join once"
                    ),
                ));
            }
        }
    }
    out.sort_by_key(|r| r.span);
    out.dedup_by_key(|r| r.span);
    out
}

/// `s += expr` or `s = s + expr` (or `s = expr + s`): the accumulating name.
fn concat_target(stmt: &SyntaxNode) -> Option<&str> {
    if stmt.kind == NodeKind::AugAssignment
        && stmt.label() == "+="
        && stmt.children[0].kind == NodeKind::NameRef
    {
        return Some(stmt.children[0].label());
    }
    let (target, value) = plain_assignment(stmt)?;
    if value.kind == NodeKind::BinaryOp && value.label() == "+" {
        let reuses = value
            .children
            .iter()
            .any(|c| c.kind == NodeKind::NameRef && c.label() == target);
        if reuses {
            return Some(target);
        }
    }
    None
}
