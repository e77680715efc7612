//! Random program generation over the Verilog subset.

use thiserror::Error;

use super::ast::{
    is_keyword, mask, BinaryOp, Direction, Expr, Item, LValue, ModuleDecl, NetKind, Port, Stmt,
    UnaryOp, VerilogAst, IDENTIFIER_HARD_CAP, MAX_WIDTH, MIN_WIDTH,
};
use crate::rng::SplitMix64;

pub const MAX_ITEMS_LIMIT: usize = 4096;
pub const MAX_EXPR_DEPTH_LIMIT: usize = 16;
pub const MAX_IDENTIFIER_LEN_LIMIT: usize = 4096;

/// Ports per module never exceed this.
pub const MAX_PORTS: usize = 4;
/// Statements per `begin`/`end` body never exceed this.
pub const MAX_BODY_STMTS: usize = 3;
/// `if` statements nest at most this deep inside an `always` block.
pub const MAX_IF_NESTING: usize = 2;
const MAX_CONCAT_PARTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenParams {
    pub rng_seed: u64,
    pub max_items: usize,
    pub max_expr_depth: usize,
    pub max_identifier_len: usize,
    /// Inclusive bit-width bounds for generated ports, nets and literals.
    pub width_range: (u32, u32),
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            rng_seed: 0,
            max_items: 6,
            max_expr_depth: 3,
            max_identifier_len: 8,
            width_range: (1, 16),
        }
    }
}

impl GenParams {
    pub fn with_seed(rng_seed: u64) -> Self {
        Self {
            rng_seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let (lo, hi) = self.width_range;
        if !(1..=MAX_ITEMS_LIMIT).contains(&self.max_items) {
            Err(GenError::Param(format!(
                "max_items must be in [1, {MAX_ITEMS_LIMIT}], got {}",
                self.max_items
            )))
        } else if !(1..=MAX_EXPR_DEPTH_LIMIT).contains(&self.max_expr_depth) {
            Err(GenError::Param(format!(
                "max_expr_depth must be in [1, {MAX_EXPR_DEPTH_LIMIT}], got {}",
                self.max_expr_depth
            )))
        } else if !(1..=MAX_IDENTIFIER_LEN_LIMIT).contains(&self.max_identifier_len) {
            Err(GenError::Param(format!(
                "max_identifier_len must be in [1, {MAX_IDENTIFIER_LEN_LIMIT}], got {}",
                self.max_identifier_len
            )))
        } else if lo < MIN_WIDTH || hi > MAX_WIDTH || lo > hi {
            Err(GenError::Param(format!(
                "width_range must satisfy {MIN_WIDTH} <= lo <= hi <= {MAX_WIDTH}, got [{lo}, {hi}]"
            )))
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid generation parameters: {0}")]
    Param(String),
}

/// Upper bound on `render(generate(params)).len()` for any seed.
///
/// Expressions have at most three children per node, so a tree of depth `D`
/// holds at most `(3^D - 1) / 2` nodes. Every node renders in at most
/// `L + 24` bytes (identifier plus `[63]`, or a 64-bit hex literal, plus
/// parentheses and an operator). An `always` body holds at most
/// `3 * (1 + 6 * (1 + 6)) = 129` statements at `if` nesting depth 2.
pub fn render_bound(params: &GenParams) -> usize {
    let ident = params.max_identifier_len;
    let nodes = (3usize.pow(params.max_expr_depth as u32) - 1) / 2;
    let expr = nodes * (ident + 24);
    let mut stmts_per_body = 1;
    for _ in 0..MAX_IF_NESTING {
        stmts_per_body = 1 + 2 * MAX_BODY_STMTS * stmts_per_body;
    }
    let stmts = MAX_BODY_STMTS * stmts_per_body;
    let indent = 2 * (MAX_IF_NESTING + 3);
    let stmt_line = indent + ident + 8 + expr + 24;
    let always = ident + 32 + stmts * stmt_line;
    let header = ident + 12 + MAX_PORTS * (ident + 16);
    header + params.max_items * always.max(ident + 32 + expr)
}

/// A trivially valid module, the default campaign seed.
pub const HELLO_WORLD: &str = "module hello(input clk, output [7:0] y);
  reg [7:0] count;
  assign y = count;
  always @(posedge clk) begin
    count <= (count + 8'h1);
  end
endmodule
";

pub fn generate(params: &GenParams) -> Result<VerilogAst, GenError> {
    params.validate()?;
    let mut gen = Generator {
        rng: SplitMix64::new(params.rng_seed),
        params,
        scope: Vec::new(),
    };
    let module = gen.module();
    Ok(VerilogAst {
        modules: vec![module],
    })
}

#[derive(Debug, Clone)]
struct Declared {
    name: String,
    width: u32,
    role: Role,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Input,
    Output,
    Wire,
    Reg,
}

struct Generator<'p> {
    rng: SplitMix64,
    params: &'p GenParams,
    scope: Vec<Declared>,
}

const IDENT_START: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_";
const IDENT_REST: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_0123456789";

impl Generator<'_> {
    fn width(&mut self) -> u32 {
        let (lo, hi) = self.params.width_range;
        self.rng.range_inclusive(u64::from(lo), u64::from(hi)) as u32
    }

    fn fresh_name(&mut self, taken: &[&str]) -> Option<String> {
        let max_len = self.params.max_identifier_len.min(IDENTIFIER_HARD_CAP);
        for _ in 0..64 {
            let len = self.rng.range_inclusive(1, max_len as u64) as usize;
            let mut name = String::with_capacity(len);
            name.push(IDENT_START[self.rng.below_usize(IDENT_START.len())] as char);
            for _ in 1..len {
                name.push(IDENT_REST[self.rng.below_usize(IDENT_REST.len())] as char);
            }
            if !is_keyword(&name) && !taken.contains(&name.as_str()) {
                return Some(name);
            }
        }
        None
    }

    fn fresh_scoped_name(&mut self, module_name: &str) -> Option<String> {
        let scope = std::mem::take(&mut self.scope);
        let mut taken: Vec<&str> = scope.iter().map(|d| d.name.as_str()).collect();
        taken.push(module_name);
        let name = self.fresh_name(&taken);
        self.scope = scope;
        name
    }

    fn module(&mut self) -> ModuleDecl {
        let name = self
            .fresh_name(&[])
            .expect("single-letter identifiers are always available");
        let inputs = self.rng.range_inclusive(1, 2) as usize;
        let outputs = self.rng.range_inclusive(1, 2) as usize;
        let mut ports = Vec::new();
        for i in 0..inputs + outputs {
            let Some(port_name) = self.fresh_scoped_name(&name) else {
                break;
            };
            let (direction, role) = if i < inputs {
                (Direction::Input, Role::Input)
            } else {
                (Direction::Output, Role::Output)
            };
            let width = self.width();
            self.scope.push(Declared {
                name: port_name.clone(),
                width,
                role,
            });
            ports.push(Port {
                direction,
                width,
                name: port_name,
            });
        }

        let count = self.rng.range_inclusive(1, self.params.max_items as u64) as usize;
        let mut items = Vec::with_capacity(count);
        for _ in 0..count {
            let roll = self.rng.below(10);
            let item = if roll < 3 {
                self.net_decl(&name)
            } else if roll < 7 {
                None
            } else {
                self.always_block()
            };
            let item = item
                .or_else(|| self.assign())
                .or_else(|| self.net_decl(&name))
                .unwrap_or_else(|| self.fallback_assign());
            items.push(item);
        }
        ModuleDecl { name, ports, items }
    }

    fn net_decl(&mut self, module_name: &str) -> Option<Item> {
        let name = self.fresh_scoped_name(module_name)?;
        let kind = if self.rng.coin() { NetKind::Wire } else { NetKind::Reg };
        let width = self.width();
        self.scope.push(Declared {
            name: name.clone(),
            width,
            role: match kind {
                NetKind::Wire => Role::Wire,
                NetKind::Reg => Role::Reg,
            },
        });
        Some(Item::NetDecl { kind, width, name })
    }

    fn assign(&mut self) -> Option<Item> {
        let lhs = self.lvalue(&[Role::Wire, Role::Output])?;
        let rhs = self.expr(self.params.max_expr_depth);
        Some(Item::ContinuousAssign { lhs, rhs })
    }

    /// Every module has at least one port, so some name is always in scope.
    fn fallback_assign(&mut self) -> Item {
        let lhs = self
            .lvalue(&[Role::Wire, Role::Output, Role::Reg, Role::Input])
            .expect("scope is never empty after port generation");
        let rhs = self.expr(self.params.max_expr_depth);
        Item::ContinuousAssign { lhs, rhs }
    }

    fn always_block(&mut self) -> Option<Item> {
        let clocks: Vec<String> = self
            .scope
            .iter()
            .filter(|d| d.role == Role::Input)
            .map(|d| d.name.clone())
            .collect();
        let clock = self.rng.pick(&clocks)?.clone();
        if !self.scope.iter().any(|d| matches!(d.role, Role::Reg | Role::Output)) {
            return None;
        }
        let body = self.body(0, 1);
        Some(Item::AlwaysBlock { clock, body })
    }

    fn body(&mut self, nesting: usize, min: usize) -> Vec<Stmt> {
        let len = self.rng.range_inclusive(min as u64, MAX_BODY_STMTS as u64) as usize;
        (0..len).map(|_| self.stmt(nesting)).collect()
    }

    fn stmt(&mut self, nesting: usize) -> Stmt {
        if nesting < MAX_IF_NESTING && self.rng.chance(0.3) {
            let cond = self.expr(self.params.max_expr_depth);
            let then_body = self.body(nesting + 1, 1);
            let else_body = self.body(nesting + 1, 0);
            return Stmt::IfElse {
                cond,
                then_body,
                else_body,
            };
        }
        let lhs = self
            .lvalue(&[Role::Reg, Role::Output])
            .expect("always blocks are only generated with a reg or output in scope");
        let rhs = self.expr(self.params.max_expr_depth);
        Stmt::NonBlockingAssign { lhs, rhs }
    }

    fn lvalue(&mut self, roles: &[Role]) -> Option<LValue> {
        let targets: Vec<Declared> = self
            .scope
            .iter()
            .filter(|d| roles.contains(&d.role))
            .cloned()
            .collect();
        let target = self.rng.pick(&targets)?.clone();
        if target.width > 1 && self.rng.chance(0.2) {
            let index = self.rng.below(u64::from(target.width)) as u32;
            Some(LValue::BitSelect(target.name, index))
        } else {
            Some(LValue::Ident(target.name))
        }
    }

    fn leaf(&mut self) -> Expr {
        let roll = self.rng.below(10);
        if roll < 3 || self.scope.is_empty() {
            let width = self.width();
            let value = mask(width, self.rng.next_u64());
            return Expr::Literal { width, value };
        }
        let idx = self.rng.below_usize(self.scope.len());
        let target = &self.scope[idx];
        if roll < 5 && target.width > 1 {
            let index = self.rng.below(u64::from(target.width)) as u32;
            Expr::BitSelect(target.name.clone(), index)
        } else {
            Expr::Ident(target.name.clone())
        }
    }

    fn expr(&mut self, depth: usize) -> Expr {
        if depth <= 1 || self.rng.chance(0.3) {
            return self.leaf();
        }
        let sub = depth - 1;
        match self.rng.below(20) {
            0..=3 => {
                let op = *self.rng.pick(&UnaryOp::ALL).unwrap();
                Expr::Unary(op, Box::new(self.expr(sub)))
            }
            4..=13 => {
                let op = *self.rng.pick(&BinaryOp::ALL).unwrap();
                Expr::Binary(op, Box::new(self.expr(sub)), Box::new(self.expr(sub)))
            }
            14..=16 => Expr::Ternary(
                Box::new(self.expr(sub)),
                Box::new(self.expr(sub)),
                Box::new(self.expr(sub)),
            ),
            _ => {
                let parts = self.rng.range_inclusive(2, MAX_CONCAT_PARTS as u64) as usize;
                Expr::Concat((0..parts).map(|_| self.expr(sub)).collect())
            }
        }
    }
}
