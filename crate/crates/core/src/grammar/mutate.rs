//! Structure-preserving mutation of Verilog ASTs.
//!
//! Every operator keeps the tree valid: identifiers stay declared, literal
//! values stay masked to their width, and expression depth stays within
//! `MutateOptions::max_expr_depth` (or the input's own depth, if larger).
//! The one deliberate exception is `GrowIdentifier`, which may push an
//! identifier past `max_identifier_len` up to [`IDENTIFIER_HARD_CAP`] so
//! length-triggered bugs in consumers become reachable.

use std::fmt;

use super::ast::{
    count_stmts, is_keyword, mask, BinaryOp, Expr, Item, ModuleDecl, NetKind, Stmt, UnaryOp,
    VerilogAst, IDENTIFIER_HARD_CAP,
};
use crate::rng::SplitMix64;

/// Statements or items per module above which duplication stops.
const GROWTH_CAP: usize = 4096;
/// Redraws per budget slot before giving up on an unmutable AST.
const MAX_REDRAWS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AstMutation {
    SwapOperands,
    ReplaceOperator,
    PerturbLiteral,
    WrapUnary,
    DuplicateStatement,
    DeleteStatement,
    RenameToExistingIdent,
    GrowIdentifier,
    SpliceItems,
}

impl AstMutation {
    pub const ALL: [AstMutation; 9] = [
        AstMutation::SwapOperands,
        AstMutation::ReplaceOperator,
        AstMutation::PerturbLiteral,
        AstMutation::WrapUnary,
        AstMutation::DuplicateStatement,
        AstMutation::DeleteStatement,
        AstMutation::RenameToExistingIdent,
        AstMutation::GrowIdentifier,
        AstMutation::SpliceItems,
    ];
}

impl fmt::Display for AstMutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MutateOptions<'a> {
    pub max_expr_depth: usize,
    pub max_identifier_len: usize,
    /// Second AST whose items `SpliceItems` may borrow; the input itself otherwise.
    pub donor: Option<&'a VerilogAst>,
}

impl Default for MutateOptions<'_> {
    fn default() -> Self {
        Self {
            max_expr_depth: 8,
            max_identifier_len: 8,
            donor: None,
        }
    }
}

pub fn mutate_ast(
    ast: &VerilogAst,
    rng_seed: u64,
    op_budget: usize,
    options: &MutateOptions<'_>,
) -> VerilogAst {
    mutate_ast_traced(ast, rng_seed, op_budget, options).0
}

/// Like [`mutate_ast`], also returning the operators that were applied.
pub fn mutate_ast_traced(
    ast: &VerilogAst,
    rng_seed: u64,
    op_budget: usize,
    options: &MutateOptions<'_>,
) -> (VerilogAst, Vec<AstMutation>) {
    let mut rng = SplitMix64::new(rng_seed);
    let mut out = ast.clone();
    let mut trace = Vec::new();
    for _ in 0..op_budget {
        for _ in 0..MAX_REDRAWS {
            let op = *rng.pick(&AstMutation::ALL).unwrap();
            if apply_mutation(&mut out, op, &mut rng, options) {
                trace.push(op);
                break;
            }
        }
    }
    (out, trace)
}

/// Applies one operator. Returns false, leaving `ast` untouched, when the
/// operator has nothing to act on.
pub fn apply_mutation(
    ast: &mut VerilogAst,
    op: AstMutation,
    rng: &mut SplitMix64,
    options: &MutateOptions<'_>,
) -> bool {
    match op {
        AstMutation::SwapOperands => with_expr(ast, rng, is_swappable, |e, _| swap_operands(e)),
        AstMutation::ReplaceOperator => with_expr(ast, rng, is_operator, replace_operator),
        AstMutation::PerturbLiteral => with_expr(ast, rng, is_literal, perturb_literal),
        AstMutation::WrapUnary => wrap_unary(ast, rng, options),
        AstMutation::DuplicateStatement => with_stmt(ast, rng, |body, idx, _| {
            if count_stmts(body) >= GROWTH_CAP {
                return false;
            }
            let copy = body[idx].clone();
            body.insert(idx + 1, copy);
            true
        }),
        AstMutation::DeleteStatement => with_stmt(ast, rng, |body, idx, _| {
            body.remove(idx);
            true
        }),
        AstMutation::RenameToExistingIdent => rename_to_existing(ast, rng),
        AstMutation::GrowIdentifier => grow_identifier(ast, rng),
        AstMutation::SpliceItems => splice_items(ast, rng, options.donor),
    }
}

fn is_swappable(e: &Expr) -> bool {
    matches!(e, Expr::Binary(..) | Expr::Ternary(..))
}

fn is_operator(e: &Expr) -> bool {
    matches!(e, Expr::Binary(..) | Expr::Unary(..))
}

fn is_literal(e: &Expr) -> bool {
    matches!(e, Expr::Literal { .. })
}

fn swap_operands(e: &mut Expr) {
    match e {
        Expr::Binary(_, a, b) | Expr::Ternary(_, a, b) => std::mem::swap(a, b),
        _ => unreachable!("filtered by is_swappable"),
    }
}

fn replace_operator(e: &mut Expr, rng: &mut SplitMix64) {
    match e {
        Expr::Binary(op, ..) => {
            let others: Vec<BinaryOp> = BinaryOp::ALL.into_iter().filter(|o| o != op).collect();
            *op = *rng.pick(&others).unwrap();
        }
        Expr::Unary(op, _) => {
            let others: Vec<UnaryOp> = UnaryOp::ALL.into_iter().filter(|o| o != op).collect();
            *op = *rng.pick(&others).unwrap();
        }
        _ => unreachable!("filtered by is_operator"),
    }
}

fn perturb_literal(e: &mut Expr, rng: &mut SplitMix64) {
    let Expr::Literal { width, value } = e else {
        unreachable!("filtered by is_literal")
    };
    let width = *width;
    let old = *value;
    let all_ones = mask(width, u64::MAX);
    let candidate = match rng.below(6) {
        0 => old.wrapping_add(1),
        1 => old.wrapping_sub(1),
        2 => old ^ (1u64 << rng.below(u64::from(width))),
        3 => 0,
        4 => all_ones,
        _ => rng.next_u64(),
    };
    let mut new = mask(width, candidate);
    if new == old {
        // Flipping the lowest bit always changes a masked value.
        new = old ^ 1;
    }
    *value = new;
}

/// Pre-order roots: assign right-hand sides, `if` conditions and
/// non-blocking right-hand sides.
fn collect_roots<'a>(items: &'a mut [Item], out: &mut Vec<&'a mut Expr>) {
    for item in items {
        match item {
            Item::NetDecl { .. } => {}
            Item::ContinuousAssign { rhs, .. } => out.push(rhs),
            Item::AlwaysBlock { body, .. } => collect_stmt_roots(body, out),
        }
    }
}

fn collect_stmt_roots<'a>(body: &'a mut [Stmt], out: &mut Vec<&'a mut Expr>) {
    for stmt in body {
        match stmt {
            Stmt::NonBlockingAssign { rhs, .. } => out.push(rhs),
            Stmt::IfElse {
                cond,
                then_body,
                else_body,
            } => {
                out.push(cond);
                collect_stmt_roots(then_body, out);
                collect_stmt_roots(else_body, out);
            }
        }
    }
}

fn count_matching(e: &Expr, pred: fn(&Expr) -> bool) -> usize {
    usize::from(pred(e)) + e.children().map(|c| count_matching(c, pred)).sum::<usize>()
}

fn nth_matching<'a>(e: &'a mut Expr, pred: fn(&Expr) -> bool, n: &mut usize) -> Option<&'a mut Expr> {
    if pred(e) {
        if *n == 0 {
            return Some(e);
        }
        *n -= 1;
    }
    match e {
        Expr::Ident(_) | Expr::Literal { .. } | Expr::BitSelect(..) => None,
        Expr::Unary(_, a) => nth_matching(a, pred, n),
        Expr::Binary(_, a, b) => {
            if let Some(found) = nth_matching(a, pred, n) {
                return Some(found);
            }
            nth_matching(b, pred, n)
        }
        Expr::Ternary(c, a, b) => {
            if let Some(found) = nth_matching(c, pred, n) {
                return Some(found);
            }
            if let Some(found) = nth_matching(a, pred, n) {
                return Some(found);
            }
            nth_matching(b, pred, n)
        }
        Expr::Concat(parts) => {
            for part in parts {
                if let Some(found) = nth_matching(part, pred, n) {
                    return Some(found);
                }
            }
            None
        }
    }
}

/// Picks a uniformly random expression node satisfying `pred` across all
/// modules and hands it to `f`.
fn with_expr(
    ast: &mut VerilogAst,
    rng: &mut SplitMix64,
    pred: fn(&Expr) -> bool,
    f: impl FnOnce(&mut Expr, &mut SplitMix64),
) -> bool {
    let mut roots = Vec::new();
    for module in &mut ast.modules {
        collect_roots(&mut module.items, &mut roots);
    }
    let counts: Vec<usize> = roots.iter().map(|r| count_matching(r, pred)).collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return false;
    }
    let mut n = rng.below_usize(total);
    for (root, count) in roots.into_iter().zip(counts) {
        if n < count {
            let target = nth_matching(root, pred, &mut n).expect("index within count");
            f(target, rng);
            return true;
        }
        n -= count;
    }
    unreachable!("n < total")
}

fn wrap_unary(ast: &mut VerilogAst, rng: &mut SplitMix64, options: &MutateOptions<'_>) -> bool {
    let limit = options.max_expr_depth.max(ast.max_expr_depth());
    let before = ast.clone();
    let applied = with_expr(ast, rng, |_| true, |e, rng| {
        let op = *rng.pick(&UnaryOp::ALL).unwrap();
        let inner = std::mem::replace(e, Expr::Ident(String::new()));
        *e = Expr::Unary(op, Box::new(inner));
    });
    if applied && ast.max_expr_depth() > limit {
        *ast = before;
        return false;
    }
    applied
}

/// Calls `f(body, index, rng)` for the n-th procedural statement, with `n`
/// uniform over all statements in all `always` blocks.
fn with_stmt(
    ast: &mut VerilogAst,
    rng: &mut SplitMix64,
    f: impl FnOnce(&mut Vec<Stmt>, usize, &mut SplitMix64) -> bool,
) -> bool {
    let total = ast.statement_count();
    if total == 0 {
        return false;
    }
    let mut n = rng.below_usize(total);
    let mut f = Some(f);
    for module in &mut ast.modules {
        for item in &mut module.items {
            if let Item::AlwaysBlock { body, .. } = item {
                if let Some(applied) = nth_stmt(body, &mut n, &mut f, rng) {
                    return applied;
                }
            }
        }
    }
    unreachable!("n < statement count")
}

fn nth_stmt<F>(
    body: &mut Vec<Stmt>,
    n: &mut usize,
    f: &mut Option<F>,
    rng: &mut SplitMix64,
) -> Option<bool>
where
    F: FnOnce(&mut Vec<Stmt>, usize, &mut SplitMix64) -> bool,
{
    for idx in 0..body.len() {
        if *n == 0 {
            let f = f.take().expect("called once");
            return Some(f(body, idx, rng));
        }
        *n -= 1;
        if let Stmt::IfElse {
            then_body,
            else_body,
            ..
        } = &mut body[idx]
        {
            if let Some(done) = nth_stmt(then_body, n, f, rng) {
                return Some(done);
            }
            if let Some(done) = nth_stmt(else_body, n, f, rng) {
                return Some(done);
            }
        }
    }
    None
}

fn rename_to_existing(ast: &mut VerilogAst, rng: &mut SplitMix64) -> bool {
    // (module index, occurrence count)
    let mut per_module = Vec::new();
    for (idx, module) in ast.modules.iter().enumerate() {
        if module.declared_names().len() < 2 {
            continue;
        }
        let mut count = 0usize;
        for item in &module.items {
            item.for_each_ident(&mut |_| count += 1);
        }
        if count > 0 {
            per_module.push((idx, count));
        }
    }
    let total: usize = per_module.iter().map(|(_, c)| c).sum();
    if total == 0 {
        return false;
    }
    let mut n = rng.below_usize(total);
    let (module_idx, _) = *per_module
        .iter()
        .find(|(_, c)| {
            if n < *c {
                true
            } else {
                n -= c;
                false
            }
        })
        .unwrap();
    let module = &mut ast.modules[module_idx];
    let names: Vec<String> = module.declared_names().into_iter().map(str::to_string).collect();
    let choice = rng.below_usize(names.len() - 1);
    let mut seen = 0usize;
    let mut done = false;
    for item in &mut module.items {
        item.for_each_ident_mut(&mut |name| {
            if seen == n && !done {
                let others: Vec<&String> = names.iter().filter(|c| *c != name).collect();
                *name = others[choice.min(others.len() - 1)].clone();
                done = true;
            }
            seen += 1;
        });
    }
    done
}

const GROW_ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_0123456789";

/// Grows the longest identifier still below the hard cap to
/// `min(2 * len, cap)` characters.
fn grow_identifier(ast: &mut VerilogAst, rng: &mut SplitMix64) -> bool {
    // (module index, None for the module name or Some(declared name))
    let mut best: Option<(usize, Option<String>, usize)> = None;
    for (idx, module) in ast.modules.iter().enumerate() {
        let candidates = std::iter::once((None, module.name.len())).chain(
            module
                .declared_names()
                .into_iter()
                .map(|n| (Some(n.to_string()), n.len())),
        );
        for (name, len) in candidates {
            if len < IDENTIFIER_HARD_CAP && best.as_ref().is_none_or(|(_, _, l)| len > *l) {
                best = Some((idx, name, len));
            }
        }
    }
    let Some((module_idx, declared, len)) = best else {
        return false;
    };
    let module = &mut ast.modules[module_idx];
    let old = declared.clone().unwrap_or_else(|| module.name.clone());
    let extra = len.clamp(1, IDENTIFIER_HARD_CAP - len);
    for _ in 0..4 {
        let mut grown = old.clone();
        grown.reserve(extra);
        for _ in 0..extra {
            grown.push(GROW_ALPHABET[rng.below_usize(GROW_ALPHABET.len())] as char);
        }
        let clash = match &declared {
            None => is_keyword(&grown),
            Some(_) => is_keyword(&grown) || module.declared_names().contains(&grown.as_str()),
        };
        if clash {
            continue;
        }
        match declared {
            None => module.name = grown,
            Some(_) => module.rename(&old, &grown),
        }
        return true;
    }
    false
}

fn splice_items(ast: &mut VerilogAst, rng: &mut SplitMix64, donor: Option<&VerilogAst>) -> bool {
    if ast.modules.is_empty() {
        return false;
    }
    let owned;
    let donor = match donor {
        Some(d) => d,
        None => {
            owned = ast.clone();
            &owned
        }
    };
    let sources: Vec<(&ModuleDecl, &Item)> = donor
        .modules
        .iter()
        .flat_map(|m| m.items.iter().map(move |i| (m, i)))
        .filter(|(_, i)| !matches!(i, Item::NetDecl { .. }))
        .collect();
    let Some(&(source_module, item)) = rng.pick(&sources) else {
        return false;
    };
    let target_idx = rng.below_usize(ast.modules.len());
    let target = &mut ast.modules[target_idx];
    if target.items.len() >= GROWTH_CAP {
        return false;
    }

    let mut referenced = Vec::new();
    item.for_each_ident(&mut |n| {
        if !referenced.contains(&n) {
            referenced.push(n);
        }
    });
    let mut decls = Vec::new();
    for name in referenced {
        if target.width_of(name).is_some() {
            continue;
        }
        let width = source_module.width_of(name).unwrap_or(1);
        let kind = source_module
            .items
            .iter()
            .find_map(|i| match i {
                Item::NetDecl { kind, name: n, .. } if n == name => Some(*kind),
                _ => None,
            })
            .unwrap_or(NetKind::Wire);
        decls.push(Item::NetDecl {
            kind,
            width,
            name: name.to_string(),
        });
    }
    let position = rng.below_usize(target.items.len() + 1);
    target.items.insert(position, item.clone());
    for (offset, decl) in decls.into_iter().enumerate() {
        target.items.insert(offset, decl);
    }
    true
}
