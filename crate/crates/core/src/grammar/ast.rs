//! Typed representation of the supported Verilog subset.

use std::collections::BTreeSet;

pub const MIN_WIDTH: u32 = 1;
pub const MAX_WIDTH: u32 = 64;

/// Hard cap on identifier length, reachable only through identifier growth.
pub const IDENTIFIER_HARD_CAP: usize = 65_536;

/// Words that can never be used as identifiers.
pub const KEYWORDS: &[&str] = &[
    "module",
    "endmodule",
    "input",
    "output",
    "wire",
    "reg",
    "assign",
    "always",
    "posedge",
    "begin",
    "end",
    "if",
    "else",
];

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VerilogAst {
    pub modules: Vec<ModuleDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleDecl {
    pub name: String,
    pub ports: Vec<Port>,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Port {
    pub direction: Direction,
    pub width: u32,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetKind {
    Wire,
    Reg,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    NetDecl {
        kind: NetKind,
        width: u32,
        name: String,
    },
    ContinuousAssign {
        lhs: LValue,
        rhs: Expr,
    },
    AlwaysBlock {
        clock: String,
        body: Vec<Stmt>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    NonBlockingAssign {
        lhs: LValue,
        rhs: Expr,
    },
    IfElse {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LValue {
    Ident(String),
    BitSelect(String, u32),
}

impl LValue {
    pub fn name(&self) -> &str {
        match self {
            LValue::Ident(name) | LValue::BitSelect(name, _) => name,
        }
    }

    pub fn name_mut(&mut self) -> &mut String {
        match self {
            LValue::Ident(name) | LValue::BitSelect(name, _) => name,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Neg,
    LogicalNot,
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 3] = [UnaryOp::Not, UnaryOp::Neg, UnaryOp::LogicalNot];

    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Not => "~",
            UnaryOp::Neg => "-",
            UnaryOp::LogicalNot => "!",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    And,
    Or,
    Xor,
    Shl,
    Shr,
    Eq,
    Lt,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 9] = [
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::And,
        BinaryOp::Or,
        BinaryOp::Xor,
        BinaryOp::Shl,
        BinaryOp::Shr,
        BinaryOp::Eq,
        BinaryOp::Lt,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::And => "&",
            BinaryOp::Or => "|",
            BinaryOp::Xor => "^",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
            BinaryOp::Eq => "==",
            BinaryOp::Lt => "<",
        }
    }

    /// Binding strength, higher binds tighter (Verilog operator table).
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 7,
            BinaryOp::Shl | BinaryOp::Shr => 6,
            BinaryOp::Lt => 5,
            BinaryOp::Eq => 4,
            BinaryOp::And => 3,
            BinaryOp::Xor => 2,
            BinaryOp::Or => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Ident(String),
    /// Value is always masked to `width` bits.
    Literal {
        width: u32,
        value: u64,
    },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Concat(Vec<Expr>),
    BitSelect(String, u32),
}

impl Expr {
    /// Depth counted in nodes; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Ident(_) | Expr::Literal { .. } | Expr::BitSelect(..) => 1,
            Expr::Unary(_, e) => 1 + e.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
            Expr::Ternary(c, a, b) => 1 + c.depth().max(a.depth()).max(b.depth()),
            Expr::Concat(parts) => 1 + parts.iter().map(Expr::depth).max().unwrap_or(0),
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().map(Expr::node_count).sum::<usize>()
    }

    pub fn children(&self) -> Box<dyn Iterator<Item = &Expr> + '_> {
        match self {
            Expr::Ident(_) | Expr::Literal { .. } | Expr::BitSelect(..) => {
                Box::new(std::iter::empty())
            }
            Expr::Unary(_, e) => Box::new(std::iter::once(e.as_ref())),
            Expr::Binary(_, a, b) => Box::new([a.as_ref(), b.as_ref()].into_iter()),
            Expr::Ternary(c, a, b) => Box::new([c.as_ref(), a.as_ref(), b.as_ref()].into_iter()),
            Expr::Concat(parts) => Box::new(parts.iter()),
        }
    }

    /// Pre-order walk over every identifier this expression references.
    pub fn for_each_ident<'a>(&'a self, f: &mut dyn FnMut(&'a str)) {
        match self {
            Expr::Ident(name) | Expr::BitSelect(name, _) => f(name),
            Expr::Literal { .. } => {}
            _ => {
                for child in self.children() {
                    child.for_each_ident(f);
                }
            }
        }
    }

    pub fn for_each_ident_mut(&mut self, f: &mut dyn FnMut(&mut String)) {
        match self {
            Expr::Ident(name) | Expr::BitSelect(name, _) => f(name),
            Expr::Literal { .. } => {}
            Expr::Unary(_, e) => e.for_each_ident_mut(f),
            Expr::Binary(_, a, b) => {
                a.for_each_ident_mut(f);
                b.for_each_ident_mut(f);
            }
            Expr::Ternary(c, a, b) => {
                c.for_each_ident_mut(f);
                a.for_each_ident_mut(f);
                b.for_each_ident_mut(f);
            }
            Expr::Concat(parts) => parts.iter_mut().for_each(|p| p.for_each_ident_mut(f)),
        }
    }
}

pub fn mask(width: u32, value: u64) -> u64 {
    if width >= 64 {
        value
    } else {
        value & ((1u64 << width) - 1)
    }
}

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

impl Stmt {
    pub fn count(&self) -> usize {
        match self {
            Stmt::NonBlockingAssign { .. } => 1,
            Stmt::IfElse {
                then_body,
                else_body,
                ..
            } => 1 + count_stmts(then_body) + count_stmts(else_body),
        }
    }

    pub fn max_expr_depth(&self) -> usize {
        match self {
            Stmt::NonBlockingAssign { rhs, .. } => rhs.depth(),
            Stmt::IfElse {
                cond,
                then_body,
                else_body,
            } => then_body
                .iter()
                .chain(else_body)
                .map(Stmt::max_expr_depth)
                .fold(cond.depth(), usize::max),
        }
    }

    pub fn for_each_ident<'a>(&'a self, f: &mut dyn FnMut(&'a str)) {
        match self {
            Stmt::NonBlockingAssign { lhs, rhs } => {
                f(lhs.name());
                rhs.for_each_ident(f);
            }
            Stmt::IfElse {
                cond,
                then_body,
                else_body,
            } => {
                cond.for_each_ident(f);
                for s in then_body.iter().chain(else_body) {
                    s.for_each_ident(f);
                }
            }
        }
    }

    pub fn for_each_ident_mut(&mut self, f: &mut dyn FnMut(&mut String)) {
        match self {
            Stmt::NonBlockingAssign { lhs, rhs } => {
                f(lhs.name_mut());
                rhs.for_each_ident_mut(f);
            }
            Stmt::IfElse {
                cond,
                then_body,
                else_body,
            } => {
                cond.for_each_ident_mut(f);
                for s in then_body.iter_mut().chain(else_body.iter_mut()) {
                    s.for_each_ident_mut(f);
                }
            }
        }
    }
}

pub fn count_stmts(body: &[Stmt]) -> usize {
    body.iter().map(Stmt::count).sum()
}

impl Item {
    pub fn for_each_ident<'a>(&'a self, f: &mut dyn FnMut(&'a str)) {
        match self {
            Item::NetDecl { .. } => {}
            Item::ContinuousAssign { lhs, rhs } => {
                f(lhs.name());
                rhs.for_each_ident(f);
            }
            Item::AlwaysBlock { clock, body } => {
                f(clock);
                body.iter().for_each(|s| s.for_each_ident(f));
            }
        }
    }

    pub fn for_each_ident_mut(&mut self, f: &mut dyn FnMut(&mut String)) {
        match self {
            Item::NetDecl { .. } => {}
            Item::ContinuousAssign { lhs, rhs } => {
                f(lhs.name_mut());
                rhs.for_each_ident_mut(f);
            }
            Item::AlwaysBlock { clock, body } => {
                f(clock);
                body.iter_mut().for_each(|s| s.for_each_ident_mut(f));
            }
        }
    }

    pub fn max_expr_depth(&self) -> usize {
        match self {
            Item::NetDecl { .. } => 0,
            Item::ContinuousAssign { rhs, .. } => rhs.depth(),
            Item::AlwaysBlock { body, .. } => {
                body.iter().map(Stmt::max_expr_depth).max().unwrap_or(0)
            }
        }
    }
}

impl ModuleDecl {
    /// Names of ports and nets, in declaration order.
    pub fn declared_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.ports.iter().map(|p| p.name.as_str()).collect();
        for item in &self.items {
            if let Item::NetDecl { name, .. } = item {
                names.push(name);
            }
        }
        names
    }

    /// Width of a declared port or net.
    pub fn width_of(&self, name: &str) -> Option<u32> {
        self.ports
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.width)
            .or_else(|| {
                self.items.iter().find_map(|item| match item {
                    Item::NetDecl { width, name: n, .. } if n == name => Some(*width),
                    _ => None,
                })
            })
    }

    pub fn max_expr_depth(&self) -> usize {
        self.items.iter().map(Item::max_expr_depth).max().unwrap_or(0)
    }

    /// Every name this module mentions, declared or referenced.
    pub fn mentioned_names(&self) -> BTreeSet<&str> {
        let mut names: BTreeSet<&str> = self.declared_names().into_iter().collect();
        for item in &self.items {
            item.for_each_ident(&mut |n| {
                names.insert(n);
            });
        }
        names
    }

    /// Renames a declared or referenced identifier everywhere in the module.
    pub fn rename(&mut self, from: &str, to: &str) {
        let mut swap = |name: &mut String| {
            if name == from {
                *name = to.to_string();
            }
        };
        for port in &mut self.ports {
            swap(&mut port.name);
        }
        for item in &mut self.items {
            if let Item::NetDecl { name, .. } = item {
                swap(name);
            }
            item.for_each_ident_mut(&mut swap);
        }
    }
}

impl VerilogAst {
    pub fn max_expr_depth(&self) -> usize {
        self.modules.iter().map(ModuleDecl::max_expr_depth).max().unwrap_or(0)
    }

    pub fn statement_count(&self) -> usize {
        self.modules
            .iter()
            .flat_map(|m| &m.items)
            .map(|item| match item {
                Item::AlwaysBlock { body, .. } => count_stmts(body),
                _ => 0,
            })
            .sum()
    }

    pub fn longest_identifier(&self) -> usize {
        self.modules
            .iter()
            .map(|m| {
                let longest_name = m.mentioned_names().iter().map(|n| n.len()).max();
                longest_name.unwrap_or(0).max(m.name.len())
            })
            .max()
            .unwrap_or(0)
    }
}
