//! Boolean expressions over property values.
//!
//! Grammar (whitespace-insensitive around operators):
//!
//! ```text
//! or_expr  := and_expr ("or" and_expr)*
//! and_expr := unary ("and" unary)*
//! unary    := "not" unary | "(" or_expr ")" | leaf
//! leaf     := ident "in" "{" ident ("," ident)* "}"
//!           | ident "==" ident
//!           | ident                      -- shorthand for `ident == T`
//! ```

use std::fmt;

use crate::error::{Error, Result};

/// Label of the true boolean value.
pub const TRUE: &str = "T";
/// Label of the false boolean value.
pub const FALSE: &str = "F";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    In { property: String, values: Vec<String> },
    Eq { property: String, value: String },
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let tokens = lex(text)?;
        let mut parser = Parser { tokens, pos: 0 };
        let expr = parser.or_expr()?;
        if let Some(tok) = parser.peek() {
            return Err(Error::Syntax(format!("unexpected `{tok}` in expression `{text}`")));
        }
        Ok(expr)
    }

    /// Visits every property name referenced by the expression.
    pub fn references(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::In { property, .. } | Expr::Eq { property, .. } => out.push(property),
            Expr::Not(inner) => inner.collect_refs(out),
            Expr::And(l, r) | Expr::Or(l, r) => {
                l.collect_refs(out);
                r.collect_refs(out);
            }
        }
    }

    /// Evaluates the expression given a lookup from property name to value.
    pub fn eval<F>(&self, lookup: &mut F) -> Result<bool>
    where
        F: FnMut(&str) -> Result<String>,
    {
        Ok(match self {
            Expr::In { property, values } => {
                let v = lookup(property)?;
                values.contains(&v)
            }
            Expr::Eq { property, value } => lookup(property)? == *value,
            Expr::Not(inner) => !inner.eval(lookup)?,
            Expr::And(l, r) => l.eval(lookup)? && r.eval(lookup)?,
            Expr::Or(l, r) => l.eval(lookup)? || r.eval(lookup)?,
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            Expr::Not(_) => 3,
            Expr::In { .. } | Expr::Eq { .. } => 4,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::In { property, values } => write!(f, "{property} in {{{}}}", values.join(", ")),
            Expr::Eq { property, value } => write!(f, "{property} == {value}"),
            Expr::Not(inner) => {
                write!(f, "not ")?;
                child(f, inner, 3)
            }
            // left-associative: a same-precedence right child needs parentheses
            Expr::And(l, r) => {
                child(f, l, 2)?;
                write!(f, " and ")?;
                child(f, r, 3)
            }
            Expr::Or(l, r) => {
                child(f, l, 1)?;
                write!(f, " or ")?;
                child(f, r, 2)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    EqEq,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => f.write_str(s),
            Tok::LBrace => f.write_str("{"),
            Tok::RBrace => f.write_str("}"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::Comma => f.write_str(","),
            Tok::EqEq => f.write_str("=="),
        }
    }
}

fn is_delim(c: char) -> bool {
    c.is_whitespace() || matches!(c, '{' | '}' | '(' | ')' | ',' | '=')
}

fn lex(text: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '{' | '}' | '(' | ')' | ',' => {
                chars.next();
                out.push(match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    _ => Tok::Comma,
                });
            }
            '=' => {
                chars.next();
                match chars.next() {
                    Some((_, '=')) => out.push(Tok::EqEq),
                    _ => return Err(Error::Syntax(format!("expected `==` at byte {start}"))),
                }
            }
            _ => {
                let mut end = text.len();
                while let Some(&(i, c)) = chars.peek() {
                    if is_delim(c) {
                        end = i;
                        break;
                    }
                    chars.next();
                }
                out.push(Tok::Ident(text[start..end].to_string()));
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let tok = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        tok
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(Error::Syntax(format!("expected `{want}`, found `{t}`"))),
            None => Err(Error::Syntax(format!("expected `{want}`, found end of expression"))),
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.next() {
            Some(Tok::Ident(s)) if !is_keyword(&s) => Ok(s),
            Some(t) => Err(Error::Syntax(format!("expected identifier, found `{t}`"))),
            None => Err(Error::Syntax("expected identifier, found end of expression".into())),
        }
    }

    fn or_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.and_expr()?;
        while self.at_keyword("or") {
            self.pos += 1;
            let rhs = self.and_expr()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while self.at_keyword("and") {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.at_keyword("not") {
            self.pos += 1;
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let inner = self.or_expr()?;
            self.expect(Tok::RParen)?;
            return Ok(inner);
        }
        self.leaf()
    }

    fn leaf(&mut self) -> Result<Expr> {
        let property = self.ident()?;
        if self.at_keyword("in") {
            self.pos += 1;
            self.expect(Tok::LBrace)?;
            let mut values = vec![self.ident()?];
            loop {
                match self.next() {
                    Some(Tok::Comma) => values.push(self.ident()?),
                    Some(Tok::RBrace) => break,
                    Some(t) => return Err(Error::Syntax(format!("expected `,` or `}}`, found `{t}`"))),
                    None => return Err(Error::Syntax("unterminated value set".into())),
                }
            }
            return Ok(Expr::In { property, values });
        }
        if self.peek() == Some(&Tok::EqEq) {
            self.pos += 1;
            let value = self.ident()?;
            return Ok(Expr::Eq { property, value });
        }
        Ok(Expr::Eq { property, value: TRUE.to_string() })
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "and" | "or" | "not" | "in")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq(p: &str, v: &str) -> Expr {
        Expr::Eq { property: p.into(), value: v.into() }
    }

    #[test]
    fn parses_membership_with_unicode_values() {
        let e = Expr::parse("shape1 in {■,●}").unwrap();
        assert_eq!(e, Expr::In { property: "shape1".into(), values: vec!["■".into(), "●".into()] });
        assert_eq!(Expr::parse("  shape1   in{ ■ , ● }").unwrap(), e);
    }

    #[test]
    fn bare_reference_means_true() {
        let e = Expr::parse("fill1 and fill2").unwrap();
        assert_eq!(e, Expr::And(Box::new(eq("fill1", "T")), Box::new(eq("fill2", "T"))));
    }

    #[test]
    fn precedence_not_and_or() {
        let e = Expr::parse("not a or b and c").unwrap();
        let expected = Expr::Or(
            Box::new(Expr::Not(Box::new(eq("a", "T")))),
            Box::new(Expr::And(Box::new(eq("b", "T")), Box::new(eq("c", "T")))),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn display_round_trips() {
        for text in [
            "a == x",
            "not (a or b)",
            "a and (b and c)",
            "(a or b) and not c == F",
            "r in {→, ↑} or a",
            "a or (b or c)",
        ] {
            let e = Expr::parse(text).unwrap();
            assert_eq!(Expr::parse(&e.to_string()).unwrap(), e, "{text} -> {e}");
        }
    }

    #[test]
    fn syntax_errors() {
        for text in ["", "a ==", "a in {", "a in {x", "(a", "a = b", "a b", "and", "a in {}", "a )"] {
            assert!(matches!(Expr::parse(text), Err(Error::Syntax(_))), "{text}");
        }
    }
}
