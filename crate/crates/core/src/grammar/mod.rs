//! Structured front-end: generate, render, parse and mutate programs in a
//! synthesizable Verilog subset.
//!
//! Supported constructs: modules with `input`/`output` ports, `wire`/`reg`
//! declarations, continuous `assign`, `always @(posedge clk)` blocks with
//! non-blocking assignments and `if`/`else`, and expressions over
//! identifiers, bit-selects, sized literals, `~ - !`, `+ - & | ^ << >> == <`,
//! the conditional operator and concatenation. Widths range over 1..=64.

mod ast;
mod gen;
mod mutate;
mod parse;
mod render;

pub use ast::*;
pub use gen::{
    generate, render_bound, GenError, GenParams, HELLO_WORLD, MAX_BODY_STMTS,
    MAX_EXPR_DEPTH_LIMIT, MAX_IDENTIFIER_LEN_LIMIT, MAX_IF_NESTING, MAX_ITEMS_LIMIT, MAX_PORTS,
};
pub use mutate::{apply_mutation, mutate_ast, mutate_ast_traced, AstMutation, MutateOptions};
pub use parse::{parse, parse_str, ParseError, MAX_NESTING};
pub use render::{render, render_string};
