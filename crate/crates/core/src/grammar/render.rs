//! Canonical text form of an AST.
//!
//! One spacing and indentation style, sized-hex literals only, and every
//! compound expression wrapped in parentheses, so rendering is byte-stable
//! and parsing the output reconstructs the same tree.

use std::fmt::Write;

use super::ast::{Direction, Expr, Item, LValue, ModuleDecl, NetKind, Stmt, VerilogAst};

const INDENT: &str = "  ";

pub fn render(ast: &VerilogAst) -> Vec<u8> {
    render_string(ast).into_bytes()
}

pub fn render_string(ast: &VerilogAst) -> String {
    let mut out = String::new();
    for (i, module) in ast.modules.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        render_module(&mut out, module);
    }
    out
}

fn render_module(out: &mut String, module: &ModuleDecl) {
    out.push_str("module ");
    out.push_str(&module.name);
    if !module.ports.is_empty() {
        out.push('(');
        for (i, port) in module.ports.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(match port.direction {
                Direction::Input => "input ",
                Direction::Output => "output ",
            });
            push_range(out, port.width);
            out.push_str(&port.name);
        }
        out.push(')');
    }
    out.push_str(";\n");
    for item in &module.items {
        render_item(out, item);
    }
    out.push_str("endmodule\n");
}

fn push_range(out: &mut String, width: u32) {
    if width > 1 {
        let _ = write!(out, "[{}:0] ", width - 1);
    }
}

fn render_item(out: &mut String, item: &Item) {
    out.push_str(INDENT);
    match item {
        Item::NetDecl { kind, width, name } => {
            out.push_str(match kind {
                NetKind::Wire => "wire ",
                NetKind::Reg => "reg ",
            });
            push_range(out, *width);
            out.push_str(name);
            out.push_str(";\n");
        }
        Item::ContinuousAssign { lhs, rhs } => {
            out.push_str("assign ");
            render_lvalue(out, lhs);
            out.push_str(" = ");
            render_expr(out, rhs);
            out.push_str(";\n");
        }
        Item::AlwaysBlock { clock, body } => {
            out.push_str("always @(posedge ");
            out.push_str(clock);
            out.push_str(") begin\n");
            render_body(out, body, 2);
            out.push_str(INDENT);
            out.push_str("end\n");
        }
    }
}

fn render_body(out: &mut String, body: &[Stmt], level: usize) {
    for stmt in body {
        render_stmt(out, stmt, level);
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str(INDENT);
    }
}

fn render_stmt(out: &mut String, stmt: &Stmt, level: usize) {
    indent(out, level);
    match stmt {
        Stmt::NonBlockingAssign { lhs, rhs } => {
            render_lvalue(out, lhs);
            out.push_str(" <= ");
            render_expr(out, rhs);
            out.push_str(";\n");
        }
        Stmt::IfElse {
            cond,
            then_body,
            else_body,
        } => {
            out.push_str("if (");
            render_expr(out, cond);
            out.push_str(") begin\n");
            render_body(out, then_body, level + 1);
            indent(out, level);
            if else_body.is_empty() {
                out.push_str("end\n");
            } else {
                out.push_str("end else begin\n");
                render_body(out, else_body, level + 1);
                indent(out, level);
                out.push_str("end\n");
            }
        }
    }
}

fn render_lvalue(out: &mut String, lvalue: &LValue) {
    match lvalue {
        LValue::Ident(name) => out.push_str(name),
        LValue::BitSelect(name, index) => {
            let _ = write!(out, "{name}[{index}]");
        }
    }
}

pub fn render_expr(out: &mut String, expr: &Expr) {
    match expr {
        Expr::Ident(name) => out.push_str(name),
        Expr::Literal { width, value } => {
            let _ = write!(out, "{width}'h{value:x}");
        }
        Expr::BitSelect(name, index) => {
            let _ = write!(out, "{name}[{index}]");
        }
        Expr::Unary(op, inner) => {
            out.push('(');
            out.push_str(op.symbol());
            render_expr(out, inner);
            out.push(')');
        }
        Expr::Binary(op, a, b) => {
            out.push('(');
            render_expr(out, a);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            render_expr(out, b);
            out.push(')');
        }
        Expr::Ternary(c, a, b) => {
            out.push('(');
            render_expr(out, c);
            out.push_str(" ? ");
            render_expr(out, a);
            out.push_str(" : ");
            render_expr(out, b);
            out.push(')');
        }
        Expr::Concat(parts) => {
            out.push('{');
            for (i, part) in parts.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_expr(out, part);
            }
            out.push('}');
        }
    }
}
