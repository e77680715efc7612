//! Lexer and recursive-descent parser for the Verilog subset.
//!
//! Accepts the canonical rendering plus ordinary hand-written variations:
//! comments, free spacing, operator precedence without parentheses,
//! single-statement `always`/`if` bodies, and `'h`/`'d`/`'b` literals.

use std::collections::HashSet;

use thiserror::Error;

use super::ast::{
    is_keyword, mask, BinaryOp, Direction, Expr, Item, LValue, ModuleDecl, NetKind, Port, Stmt,
    UnaryOp, VerilogAst, MAX_WIDTH, MIN_WIDTH,
};

/// Recursion limit for nested expressions and statements.
pub const MAX_NESTING: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{column}: lexical error: {message}")]
    Lexical {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: syntax error: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: undeclared identifier `{name}`")]
    Undeclared {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("{line}:{column}: width {width} outside [{MIN_WIDTH}, {MAX_WIDTH}]")]
    WidthOutOfRange {
        line: usize,
        column: usize,
        width: u64,
    },
}

impl ParseError {
    /// 1-based line and column of the first offending character.
    pub fn location(&self) -> (usize, usize) {
        match self {
            ParseError::Lexical { line, column, .. }
            | ParseError::Syntax { line, column, .. }
            | ParseError::Undeclared { line, column, .. }
            | ParseError::WidthOutOfRange { line, column, .. } => (*line, *column),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(u64),
    Sized { width: u32, value: u64 },
    Punct(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("`{}`", truncate(name)),
            Tok::Number(n) => format!("number {n}"),
            Tok::Sized { width, value } => format!("literal {width}'h{value:x}"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

fn truncate(name: &str) -> &str {
    match name.char_indices().nth(32) {
        Some((idx, _)) => &name[..idx],
        None => name,
    }
}

// Longest match first.
const PUNCTUATION: &[&str] = &[
    "<<", ">>", "<=", "==", "(", ")", "[", "]", "{", "}", ";", ",", ":", "=", "@", "?", "+", "-",
    "&", "|", "^", "<", "~", "!",
];

struct Lexer<'a> {
    src: &'a [u8],
    idx: usize,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a [u8]) -> Self {
        Self {
            src,
            idx: 0,
            line: 1,
            column: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&self, ahead: usize) -> Option<u8> {
        self.src.get(self.idx + ahead).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek(0)?;
        self.idx += 1;
        if b == b'\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(b)
    }

    fn error(&self, pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError::Lexical {
            line: pos.line,
            column: pos.column,
            message: message.into(),
        }
    }

    fn skip_trivia(&mut self) -> Result<(), ParseError> {
        loop {
            match (self.peek(0), self.peek(1)) {
                (Some(b' ' | b'\t' | b'\r' | b'\n'), _) => {
                    self.bump();
                }
                (Some(b'/'), Some(b'/')) => {
                    while !matches!(self.peek(0), None | Some(b'\n')) {
                        self.bump();
                    }
                }
                (Some(b'/'), Some(b'*')) => {
                    let start = self.pos();
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(0), self.peek(1)) {
                            (Some(b'*'), Some(b'/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => return Err(self.error(start, "unterminated comment")),
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn next_token(&mut self) -> Result<(Tok, Pos), ParseError> {
        self.skip_trivia()?;
        let pos = self.pos();
        let Some(first) = self.peek(0) else {
            return Ok((Tok::Eof, pos));
        };
        if first.is_ascii_alphabetic() || first == b'_' {
            let start = self.idx;
            while matches!(self.peek(0), Some(b) if b.is_ascii_alphanumeric() || b == b'_' || b == b'$')
            {
                self.bump();
            }
            // Identifier bytes are ASCII by construction.
            let word = String::from_utf8_lossy(&self.src[start..self.idx]).into_owned();
            return Ok((Tok::Ident(word), pos));
        }
        if first.is_ascii_digit() {
            return self.number(pos);
        }
        for p in PUNCTUATION {
            if self.src[self.idx..].starts_with(p.as_bytes()) {
                for _ in 0..p.len() {
                    self.bump();
                }
                return Ok((Tok::Punct(p), pos));
            }
        }
        let message = if first.is_ascii_graphic() {
            format!("unexpected character `{}`", first as char)
        } else {
            format!("unexpected byte 0x{first:02x}")
        };
        Err(self.error(pos, message))
    }

    fn number(&mut self, pos: Pos) -> Result<(Tok, Pos), ParseError> {
        let size = self.digits(10, pos)?;
        if self.peek(0) != Some(b'\'') {
            return Ok((Tok::Number(size), pos));
        }
        self.bump();
        let radix = match self.bump() {
            Some(b'h' | b'H') => 16,
            Some(b'd' | b'D') => 10,
            Some(b'b' | b'B') => 2,
            _ => return Err(self.error(pos, "expected base `h`, `d` or `b` after `'`")),
        };
        if !matches!(self.peek(0), Some(b) if (b as char).is_digit(radix)) {
            return Err(self.error(self.pos(), "literal has no digits"));
        }
        let value = self.digits(radix, pos)?;
        if !(u64::from(MIN_WIDTH)..=u64::from(MAX_WIDTH)).contains(&size) {
            return Err(ParseError::WidthOutOfRange {
                line: pos.line,
                column: pos.column,
                width: size,
            });
        }
        let width = size as u32;
        Ok((
            Tok::Sized {
                width,
                value: mask(width, value),
            },
            pos,
        ))
    }

    fn digits(&mut self, radix: u32, pos: Pos) -> Result<u64, ParseError> {
        let mut value: u64 = 0;
        while let Some(b) = self.peek(0) {
            if b == b'_' {
                self.bump();
                continue;
            }
            let Some(d) = (b as char).to_digit(radix) else {
                break;
            };
            value = value
                .checked_mul(u64::from(radix))
                .and_then(|v| v.checked_add(u64::from(d)))
                .ok_or_else(|| self.error(pos, "numeric literal exceeds 64 bits"))?;
            self.bump();
        }
        Ok(value)
    }
}

pub fn parse(text: &[u8]) -> Result<VerilogAst, ParseError> {
    let mut lexer = Lexer::new(text);
    let mut tokens = Vec::new();
    loop {
        let (tok, pos) = lexer.next_token()?;
        let done = tok == Tok::Eof;
        tokens.push((tok, pos));
        if done {
            break;
        }
    }
    Parser {
        tokens,
        idx: 0,
        depth: 0,
        uses: Vec::new(),
    }
    .source()
}

pub fn parse_str(text: &str) -> Result<VerilogAst, ParseError> {
    parse(text.as_bytes())
}

struct Parser {
    tokens: Vec<(Tok, Pos)>,
    idx: usize,
    depth: usize,
    /// Identifier references in the current module, checked at `endmodule`.
    uses: Vec<(String, Pos)>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.idx].0
    }

    fn pos(&self) -> Pos {
        self.tokens[self.idx].1
    }

    fn advance(&mut self) -> (Tok, Pos) {
        let entry = self.tokens[self.idx].clone();
        if self.idx + 1 < self.tokens.len() {
            self.idx += 1;
        }
        entry
    }

    fn syntax(&self, pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: pos.line,
            column: pos.column,
            message: message.into(),
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        self.syntax(
            self.pos(),
            format!("expected {expected}, found {}", self.peek().describe()),
        )
    }

    fn at_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == kw)
    }

    fn expect_punct(&mut self, p: &str) -> Result<Pos, ParseError> {
        if self.at_punct(p) {
            Ok(self.advance().1)
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_keyword(kw) {
            self.advance();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn identifier(&mut self) -> Result<(String, Pos), ParseError> {
        match self.peek() {
            Tok::Ident(w) if !is_keyword(w) => {
                let (tok, pos) = self.advance();
                match tok {
                    Tok::Ident(w) => Ok((w, pos)),
                    _ => unreachable!(),
                }
            }
            Tok::Ident(w) => {
                let message = format!("keyword `{w}` cannot be used as an identifier");
                Err(self.syntax(self.pos(), message))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn number(&mut self) -> Result<(u64, Pos), ParseError> {
        match *self.peek() {
            Tok::Number(n) => {
                let pos = self.advance().1;
                Ok((n, pos))
            }
            _ => Err(self.unexpected("number")),
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            Err(self.syntax(self.pos(), "nesting too deep"))
        } else {
            Ok(())
        }
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn source(mut self) -> Result<VerilogAst, ParseError> {
        let mut modules = Vec::new();
        while *self.peek() != Tok::Eof {
            modules.push(self.module()?);
        }
        Ok(VerilogAst { modules })
    }

    fn module(&mut self) -> Result<ModuleDecl, ParseError> {
        self.expect_keyword("module")?;
        let (name, _) = self.identifier()?;
        self.uses.clear();
        let mut declared = HashSet::new();
        let mut ports = Vec::new();
        if self.at_punct("(") {
            self.advance();
            if !self.at_punct(")") {
                loop {
                    let direction = if self.at_keyword("input") {
                        Direction::Input
                    } else if self.at_keyword("output") {
                        Direction::Output
                    } else {
                        return Err(self.unexpected("`input`, `output` or `)`"));
                    };
                    self.advance();
                    let width = self.optional_range()?;
                    let (port_name, pos) = self.identifier()?;
                    self.declare(&mut declared, &port_name, pos)?;
                    ports.push(Port {
                        direction,
                        width,
                        name: port_name,
                    });
                    if self.at_punct(",") {
                        self.advance();
                    } else {
                        break;
                    }
                }
            }
            self.expect_punct(")")?;
        }
        self.expect_punct(";")?;

        let mut items = Vec::new();
        while !self.at_keyword("endmodule") {
            items.push(self.item(&mut declared)?);
        }
        self.advance();

        for (used, pos) in std::mem::take(&mut self.uses) {
            if !declared.contains(&used) {
                return Err(ParseError::Undeclared {
                    line: pos.line,
                    column: pos.column,
                    name: used,
                });
            }
        }
        Ok(ModuleDecl { name, ports, items })
    }

    fn declare(&self, declared: &mut HashSet<String>, name: &str, pos: Pos) -> Result<(), ParseError> {
        if declared.insert(name.to_string()) {
            Ok(())
        } else {
            Err(self.syntax(pos, format!("duplicate declaration of `{}`", truncate(name))))
        }
    }

    fn optional_range(&mut self) -> Result<u32, ParseError> {
        if !self.at_punct("[") {
            return Ok(1);
        }
        let open = self.advance().1;
        let (hi, _) = self.number()?;
        self.expect_punct(":")?;
        let (lo, lo_pos) = self.number()?;
        self.expect_punct("]")?;
        if lo != 0 {
            return Err(self.syntax(lo_pos, "range must end at bit 0"));
        }
        let width = hi.saturating_add(1);
        if width > u64::from(MAX_WIDTH) {
            return Err(ParseError::WidthOutOfRange {
                line: open.line,
                column: open.column,
                width,
            });
        }
        Ok(width as u32)
    }

    fn item(&mut self, declared: &mut HashSet<String>) -> Result<Item, ParseError> {
        let kind = if self.at_keyword("wire") {
            Some(NetKind::Wire)
        } else if self.at_keyword("reg") {
            Some(NetKind::Reg)
        } else {
            None
        };
        if let Some(kind) = kind {
            self.advance();
            let width = self.optional_range()?;
            let (name, pos) = self.identifier()?;
            self.declare(declared, &name, pos)?;
            self.expect_punct(";")?;
            return Ok(Item::NetDecl { kind, width, name });
        }
        if self.at_keyword("assign") {
            self.advance();
            let lhs = self.lvalue()?;
            self.expect_punct("=")?;
            let rhs = self.expr()?;
            self.expect_punct(";")?;
            return Ok(Item::ContinuousAssign { lhs, rhs });
        }
        if self.at_keyword("always") {
            self.advance();
            self.expect_punct("@")?;
            self.expect_punct("(")?;
            self.expect_keyword("posedge")?;
            let (clock, pos) = self.identifier()?;
            self.uses.push((clock.clone(), pos));
            self.expect_punct(")")?;
            let body = self.block()?;
            return Ok(Item::AlwaysBlock { clock, body });
        }
        Err(self.unexpected("`wire`, `reg`, `assign`, `always` or `endmodule`"))
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        if !self.at_keyword("begin") {
            return Ok(vec![self.stmt()?]);
        }
        self.advance();
        let mut body = Vec::new();
        while !self.at_keyword("end") {
            body.push(self.stmt()?);
        }
        self.advance();
        Ok(body)
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        self.enter()?;
        let stmt = if self.at_keyword("if") {
            self.advance();
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let then_body = self.block()?;
            let else_body = if self.at_keyword("else") {
                self.advance();
                self.block()?
            } else {
                Vec::new()
            };
            Stmt::IfElse {
                cond,
                then_body,
                else_body,
            }
        } else {
            let lhs = self.lvalue()?;
            self.expect_punct("<=")?;
            let rhs = self.expr()?;
            self.expect_punct(";")?;
            Stmt::NonBlockingAssign { lhs, rhs }
        };
        self.leave();
        Ok(stmt)
    }

    fn lvalue(&mut self) -> Result<LValue, ParseError> {
        let (name, pos) = self.identifier()?;
        self.uses.push((name.clone(), pos));
        if self.at_punct("[") {
            self.advance();
            let index = self.index()?;
            self.expect_punct("]")?;
            Ok(LValue::BitSelect(name, index))
        } else {
            Ok(LValue::Ident(name))
        }
    }

    fn index(&mut self) -> Result<u32, ParseError> {
        let (n, pos) = self.number()?;
        u32::try_from(n).map_err(|_| self.syntax(pos, "bit index too large"))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let cond = self.binary(1)?;
        let result = if self.at_punct("?") {
            self.advance();
            let a = self.expr()?;
            self.expect_punct(":")?;
            let b = self.expr()?;
            Expr::Ternary(Box::new(cond), Box::new(a), Box::new(b))
        } else {
            cond
        };
        self.leave();
        Ok(result)
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        let Tok::Punct(p) = self.peek() else {
            return None;
        };
        BinaryOp::ALL.into_iter().find(|op| op.symbol() == *p)
    }

    /// Precedence climbing; all binary operators are left-associative.
    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op() {
            if op.precedence() < min_prec {
                break;
            }
            self.advance();
            self.enter()?;
            let rhs = self.binary(op.precedence() + 1)?;
            self.leave();
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let op = UnaryOp::ALL
            .into_iter()
            .find(|op| self.at_punct(op.symbol()));
        if let Some(op) = op {
            self.advance();
            self.enter()?;
            let inner = self.unary()?;
            self.leave();
            return Ok(Expr::Unary(op, Box::new(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Sized { width, value } => {
                self.advance();
                Ok(Expr::Literal { width, value })
            }
            Tok::Number(_) => Err(self.syntax(
                self.pos(),
                "unsized number in expression; use a sized literal such as 8'h00",
            )),
            Tok::Ident(_) => {
                let (name, pos) = self.identifier()?;
                self.uses.push((name.clone(), pos));
                if self.at_punct("[") {
                    self.advance();
                    let index = self.index()?;
                    self.expect_punct("]")?;
                    Ok(Expr::BitSelect(name, index))
                } else {
                    Ok(Expr::Ident(name))
                }
            }
            Tok::Punct("(") => {
                self.advance();
                let inner = self.expr()?;
                self.expect_punct(")")?;
                Ok(inner)
            }
            Tok::Punct("{") => {
                self.advance();
                let mut parts = vec![self.expr()?];
                while self.at_punct(",") {
                    self.advance();
                    parts.push(self.expr()?);
                }
                self.expect_punct("}")?;
                Ok(Expr::Concat(parts))
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_empty_ast() {
        assert_eq!(parse(b"").unwrap(), VerilogAst::default());
        assert_eq!(parse(b"  // nothing\n/* here */").unwrap(), VerilogAst::default());
    }

    #[test]
    fn stray_semicolon_in_port_list_is_syntax_error_at_semicolon() {
        let err = parse(b"module m(; endmodule").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { .. }), "{err}");
        assert_eq!(err.location(), (1, 10));
    }

    #[test]
    fn errors_are_distinct_and_located() {
        let lex = parse(b"module m;\n  #\nendmodule").unwrap_err();
        assert!(matches!(lex, ParseError::Lexical { line: 2, column: 3, .. }), "{lex}");

        let undeclared = parse(b"module m(output y);\n  assign y = ghost;\nendmodule").unwrap_err();
        assert_eq!(
            undeclared,
            ParseError::Undeclared {
                line: 2,
                column: 14,
                name: "ghost".into()
            }
        );

        let wide = parse(b"module m(input [64:0] a);\nendmodule").unwrap_err();
        assert!(matches!(wide, ParseError::WidthOutOfRange { width: 65, .. }), "{wide}");

        let literal = parse(b"module m(output y);\n  assign y = 65'h0;\nendmodule").unwrap_err();
        assert!(matches!(literal, ParseError::WidthOutOfRange { line: 2, column: 14, width: 65 }));

        let zero = parse(b"module m(output y);\n  assign y = 0'h0;\nendmodule").unwrap_err();
        assert!(matches!(zero, ParseError::WidthOutOfRange { width: 0, .. }));
    }

    #[test]
    fn non_utf8_bytes_are_lexical_errors() {
        let err = parse(b"module \xff;").unwrap_err();
        assert!(matches!(err, ParseError::Lexical { line: 1, column: 8, .. }), "{err}");
    }

    #[test]
    fn precedence_without_parentheses() {
        let ast = parse(b"module m(input [7:0] a, input [7:0] b, output y);\n assign y = a + b & a == b;\nendmodule").unwrap();
        let Item::ContinuousAssign { rhs, .. } = &ast.modules[0].items[0] else {
            panic!("expected assign");
        };
        let a = || Box::new(Expr::Ident("a".into()));
        let b = || Box::new(Expr::Ident("b".into()));
        // `==` binds tighter than `&`, `+` tighter than both.
        assert_eq!(
            *rhs,
            Expr::Binary(
                BinaryOp::And,
                Box::new(Expr::Binary(BinaryOp::Add, a(), b())),
                Box::new(Expr::Binary(BinaryOp::Eq, a(), b())),
            )
        );
    }

    #[test]
    fn literal_bases_are_normalized_and_masked() {
        let ast = parse(b"module m(output [3:0] y);\n assign y = {4'd10, 4'b1_010, 4'h1f};\nendmodule").unwrap();
        let Item::ContinuousAssign { rhs: Expr::Concat(parts), .. } = &ast.modules[0].items[0] else {
            panic!("expected concat");
        };
        assert_eq!(parts[0], Expr::Literal { width: 4, value: 10 });
        assert_eq!(parts[1], Expr::Literal { width: 4, value: 10 });
        assert_eq!(parts[2], Expr::Literal { width: 4, value: 0xf });
    }

    #[test]
    fn single_statement_bodies_and_late_declarations() {
        let src = b"module m(input clk, output y);\n always @(posedge clk) if (clk) r <= 1'h1; else r <= 1'h0;\n reg r;\n assign y = r;\nendmodule";
        let ast = parse(src).unwrap();
        let Item::AlwaysBlock { body, .. } = &ast.modules[0].items[0] else {
            panic!("expected always");
        };
        assert_eq!(body.len(), 1);
        assert!(matches!(&body[0], Stmt::IfElse { then_body, else_body, .. } if then_body.len() == 1 && else_body.len() == 1));
    }

    #[test]
    fn keywords_and_duplicates_rejected() {
        assert!(matches!(parse(b"module wire; endmodule"), Err(ParseError::Syntax { .. })));
        assert!(matches!(
            parse(b"module m(input a); wire a; endmodule"),
            Err(ParseError::Syntax { line: 1, column: 25, .. })
        ));
    }

    #[test]
    fn deep_nesting_is_rejected_not_overflowed() {
        let mut src = String::from("module m(output y);\n assign y = ");
        src.push_str(&"(".repeat(5000));
        src.push('y');
        src.push_str(&")".repeat(5000));
        src.push_str(";\nendmodule");
        let err = parse(src.as_bytes()).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { ref message, .. } if message.contains("nesting")));
    }

    #[test]
    fn unterminated_module_reports_eof() {
        let err = parse(b"module m;\n wire w;\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 3, column: 1, .. }), "{err}");
    }
}
