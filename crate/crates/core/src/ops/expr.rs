//! Row-wise arithmetic expressions over column references and numeric
//! literals, plus a small infix parser for the `a * b + 1` notation used
//! in column descriptions and tests.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithExpr {
    Col(String),
    Int(i64),
    Num(f64),
    Add(Box<(ArithExpr, ArithExpr)>),
    Sub(Box<(ArithExpr, ArithExpr)>),
    Mul(Box<(ArithExpr, ArithExpr)>),
    Div(Box<(ArithExpr, ArithExpr)>),
}

impl ArithExpr {
    pub fn col(name: impl Into<String>) -> Self {
        ArithExpr::Col(name.into())
    }

    pub fn add(a: ArithExpr, b: ArithExpr) -> Self {
        ArithExpr::Add(Box::new((a, b)))
    }

    pub fn sub(a: ArithExpr, b: ArithExpr) -> Self {
        ArithExpr::Sub(Box::new((a, b)))
    }

    pub fn mul(a: ArithExpr, b: ArithExpr) -> Self {
        ArithExpr::Mul(Box::new((a, b)))
    }

    pub fn div(a: ArithExpr, b: ArithExpr) -> Self {
        ArithExpr::Div(Box::new((a, b)))
    }

    /// Column names referenced anywhere in the expression, in first-use order.
    pub fn column_refs(&self) -> Vec<&str> {
        fn walk<'a>(e: &'a ArithExpr, out: &mut Vec<&'a str>) {
            match e {
                ArithExpr::Col(c) => {
                    if !out.contains(&c.as_str()) {
                        out.push(c);
                    }
                }
                ArithExpr::Int(_) | ArithExpr::Num(_) => {}
                ArithExpr::Add(p) | ArithExpr::Sub(p) | ArithExpr::Mul(p) | ArithExpr::Div(p) => {
                    walk(&p.0, out);
                    walk(&p.1, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// True when every literal is an integer and no division occurs, in
    /// which case integer columns stay integer.
    pub fn is_integral(&self) -> bool {
        match self {
            ArithExpr::Col(_) | ArithExpr::Int(_) => true,
            ArithExpr::Num(_) | ArithExpr::Div(_) => false,
            ArithExpr::Add(p) | ArithExpr::Sub(p) | ArithExpr::Mul(p) => {
                p.0.is_integral() && p.1.is_integral()
            }
        }
    }

    /// Evaluates in f64. `None` operands (Null cells) and division by zero
    /// propagate to `None`.
    pub fn eval_f64(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Option<f64> {
        match self {
            ArithExpr::Col(c) => lookup(c),
            ArithExpr::Int(i) => Some(*i as f64),
            ArithExpr::Num(f) => Some(*f),
            ArithExpr::Add(p) => Some(p.0.eval_f64(lookup)? + p.1.eval_f64(lookup)?),
            ArithExpr::Sub(p) => Some(p.0.eval_f64(lookup)? - p.1.eval_f64(lookup)?),
            ArithExpr::Mul(p) => Some(p.0.eval_f64(lookup)? * p.1.eval_f64(lookup)?),
            ArithExpr::Div(p) => {
                let denom = p.1.eval_f64(lookup)?;
                if denom == 0.0 {
                    None
                } else {
                    Some(p.0.eval_f64(lookup)? / denom)
                }
            }
        }
    }

    /// Integer evaluation for integral expressions; overflow propagates to
    /// `None` like Null does.
    pub fn eval_i64(&self, lookup: &dyn Fn(&str) -> Option<i64>) -> Option<i64> {
        match self {
            ArithExpr::Col(c) => lookup(c),
            ArithExpr::Int(i) => Some(*i),
            ArithExpr::Num(_) | ArithExpr::Div(_) => None,
            ArithExpr::Add(p) => p.0.eval_i64(lookup)?.checked_add(p.1.eval_i64(lookup)?),
            ArithExpr::Sub(p) => p.0.eval_i64(lookup)?.checked_sub(p.1.eval_i64(lookup)?),
            ArithExpr::Mul(p) => p.0.eval_i64(lookup)?.checked_mul(p.1.eval_i64(lookup)?),
        }
    }
}

impl std::fmt::Display for ArithExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ArithExpr::Col(c) => write!(f, "{c}"),
            ArithExpr::Int(i) => write!(f, "{i}"),
            ArithExpr::Num(n) => write!(f, "{n}"),
            ArithExpr::Add(p) => write!(f, "({} + {})", p.0, p.1),
            ArithExpr::Sub(p) => write!(f, "({} - {})", p.0, p.1),
            ArithExpr::Mul(p) => write!(f, "({} * {})", p.0, p.1),
            ArithExpr::Div(p) => write!(f, "({} / {})", p.0, p.1),
        }
    }
}

/// Parses infix notation: identifiers, numbers, `+ - * /`, parentheses.
pub fn parse_infix(text: &str) -> Result<ArithExpr, String> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(format!("unexpected trailing input at token {}", parser.pos));
    }
    Ok(expr)
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Int(i64),
    Num(f64),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<Token>, String> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                tokens.push(Token::Plus);
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus);
                i += 1;
            }
            '*' => {
                tokens.push(Token::Star);
                i += 1;
            }
            '/' => {
                tokens.push(Token::Slash);
                i += 1;
            }
            '(' => {
                tokens.push(Token::LParen);
                i += 1;
            }
            ')' => {
                tokens.push(Token::RParen);
                i += 1;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                let mut saw_dot = false;
                while i < chars.len() && (chars[i].is_ascii_digit() || (chars[i] == '.' && !saw_dot)) {
                    if chars[i] == '.' {
                        saw_dot = true;
                    }
                    i += 1;
                }
                let lit: String = chars[start..i].iter().collect();
                if saw_dot {
                    tokens.push(Token::Num(lit.parse().map_err(|e| format!("bad number {lit:?}: {e}"))?));
                } else {
                    tokens.push(Token::Int(lit.parse().map_err(|e| format!("bad integer {lit:?}: {e}"))?));
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                tokens.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected character {other:?}")),
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn expr(&mut self) -> Result<ArithExpr, String> {
        let mut lhs = self.term()?;
        while let Some(tok) = self.peek() {
            let op = match tok {
                Token::Plus => ArithExpr::add as fn(_, _) -> _,
                Token::Minus => ArithExpr::sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = op(lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<ArithExpr, String> {
        let mut lhs = self.atom()?;
        while let Some(tok) = self.peek() {
            let op = match tok {
                Token::Star => ArithExpr::mul as fn(_, _) -> _,
                Token::Slash => ArithExpr::div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.atom()?;
            lhs = op(lhs, rhs);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<ArithExpr, String> {
        match self.tokens.get(self.pos).cloned() {
            Some(Token::Ident(name)) => {
                self.pos += 1;
                Ok(ArithExpr::Col(name))
            }
            Some(Token::Int(i)) => {
                self.pos += 1;
                Ok(ArithExpr::Int(i))
            }
            Some(Token::Num(f)) => {
                self.pos += 1;
                Ok(ArithExpr::Num(f))
            }
            Some(Token::Minus) => {
                self.pos += 1;
                let inner = self.atom()?;
                Ok(ArithExpr::sub(ArithExpr::Int(0), inner))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.tokens.get(self.pos) {
                    Some(Token::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err("missing closing parenthesis".to_string()),
                }
            }
            other => Err(format!("unexpected token {other:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_product_of_columns() {
        let e = parse_infix("Price * Quantity").unwrap();
        assert_eq!(e, ArithExpr::mul(ArithExpr::col("Price"), ArithExpr::col("Quantity")));
        assert_eq!(e.column_refs(), vec!["Price", "Quantity"]);
        assert!(e.is_integral());
    }

    #[test]
    fn precedence_and_parens() {
        let e = parse_infix("a + b * 2").unwrap();
        assert_eq!(
            e,
            ArithExpr::add(ArithExpr::col("a"), ArithExpr::mul(ArithExpr::col("b"), ArithExpr::Int(2)))
        );
        let e = parse_infix("(a + b) * 2").unwrap();
        assert_eq!(
            e,
            ArithExpr::mul(ArithExpr::add(ArithExpr::col("a"), ArithExpr::col("b")), ArithExpr::Int(2))
        );
    }

    #[test]
    fn division_and_floats_are_not_integral() {
        assert!(!parse_infix("a / b").unwrap().is_integral());
        assert!(!parse_infix("a * 1.5").unwrap().is_integral());
    }

    #[test]
    fn eval_propagates_null_and_division_by_zero() {
        let e = parse_infix("a / b").unwrap();
        assert_eq!(e.eval_f64(&|c| if c == "a" { Some(6.0) } else { Some(2.0) }), Some(3.0));
        assert_eq!(e.eval_f64(&|c| if c == "a" { Some(6.0) } else { Some(0.0) }), None);
        assert_eq!(e.eval_f64(&|c| if c == "a" { None } else { Some(2.0) }), None);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_infix("a +").is_err());
        assert!(parse_infix("(a + b").is_err());
        assert!(parse_infix("a ? b").is_err());
        assert!(parse_infix("a b").is_err());
    }

    #[test]
    fn serde_shape_is_tagged() {
        let e = parse_infix("a + 1").unwrap();
        let json = serde_json::to_value(&e).unwrap();
        assert_eq!(json, serde_json::json!({"add": [{"col": "a"}, {"int": 1}]}));
    }
}
