//! A small arithmetic expression language for user potentials.
//!
//! Grammar (lowest precedence first):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | '+' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | name | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-q^2`
//! is `-(q^2)`. Names: `t`, `q1..qn` (and `q` when `n = 1`), `r = |q|`,
//! `pi`, `e`. Functions: `sin cos tan exp ln log sqrt abs atan arctan arctg
//! sinh cosh tanh`.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Atan,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "atan" | "arctan" | "arctg" => Func::Atan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
            Func::Atan => x.atan(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Const(f64),
    Time,
    Coord(usize),
    Radius,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    PowInt(Box<Node>, i32),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A compiled expression in `t` and `q in R^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    source: String,
    dim: usize,
    root: Node,
}

impl Expr {
    pub fn parse(source: &str, dim: usize) -> Result<Expr> {
        let tokens = tokenize(source)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            dim,
        };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expression(format!(
                "unexpected `{}` in `{source}`",
                p.tokens[p.pos]
            )));
        }
        Ok(Expr {
            source: source.to_string(),
            dim,
            root: fold(root),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, t: f64, q: &[f64]) -> f64 {
        let r = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        eval(&self.root, t, q, r)
    }
}

fn eval(node: &Node, t: f64, q: &[f64], r: f64) -> f64 {
    match node {
        Node::Const(c) => *c,
        Node::Time => t,
        Node::Coord(i) => q[*i],
        Node::Radius => r,
        Node::Neg(a) => -eval(a, t, q, r),
        Node::Add(a, b) => eval(a, t, q, r) + eval(b, t, q, r),
        Node::Sub(a, b) => eval(a, t, q, r) - eval(b, t, q, r),
        Node::Mul(a, b) => eval(a, t, q, r) * eval(b, t, q, r),
        Node::Div(a, b) => eval(a, t, q, r) / eval(b, t, q, r),
        Node::PowInt(a, k) => eval(a, t, q, r).powi(*k),
        Node::Pow(a, b) => eval(a, t, q, r).powf(eval(b, t, q, r)),
        Node::Call(f, a) => f.apply(eval(a, t, q, r)),
    }
}

/// Constant folding; integer exponents become `powi`.
fn fold(node: Node) -> Node {
    use Node::*;
    let binary = |a: Box<Node>, b: Box<Node>, op: fn(f64, f64) -> f64, make: fn(Box<Node>, Box<Node>) -> Node| {
        let (a, b) = (fold(*a), fold(*b));
        match (&a, &b) {
            (Const(x), Const(y)) => Const(op(*x, *y)),
            _ => make(Box::new(a), Box::new(b)),
        }
    };
    match node {
        Neg(a) => match fold(*a) {
            Const(x) => Const(-x),
            a => Neg(Box::new(a)),
        },
        Add(a, b) => binary(a, b, |x, y| x + y, Add),
        Sub(a, b) => binary(a, b, |x, y| x - y, Sub),
        Mul(a, b) => binary(a, b, |x, y| x * y, Mul),
        Div(a, b) => binary(a, b, |x, y| x / y, Div),
        Pow(a, b) => {
            let (a, b) = (fold(*a), fold(*b));
            match (&a, &b) {
                (Const(x), Const(y)) => Const(x.powf(*y)),
                (_, Const(y)) if y.fract() == 0.0 && y.abs() <= 64.0 => PowInt(Box::new(a), *y as i32),
                _ => Pow(Box::new(a), Box::new(b)),
            }
        }
        Call(f, a) => match fold(*a) {
            Const(x) => Const(f.apply(x)),
            a => Call(f, Box::new(a)),
        },
        other => other,
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Name(String),
    Op(char),
}

impl std::fmt::Display for Token {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Token::Num(x) => write!(f, "{x}"),
            Token::Name(s) => write!(f, "{s}"),
            Token::Op(c) => write!(f, "{c}"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse::<f64>()
                .map_err(|_| Error::Expression(format!("bad number `{text}`")))?;
            out.push(Token::Num(value));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Name(chars[start..i].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::Expression(format!("unexpected character `{c}` in `{src}`")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            let exponent = self.unary()?;
            Ok(Node::Pow(Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Node> {
        let token = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::Expression("unexpected end of expression".into()))?;
        self.pos += 1;
        match token {
            Token::Num(x) => Ok(Node::Const(x)),
            Token::Op('(') => {
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::Expression("missing `)`".into()));
                }
                Ok(inner)
            }
            Token::Name(name) => {
                if let Some(f) = Func::lookup(&name) {
                    if !self.eat('(') {
                        return Err(Error::Expression(format!("`{name}` must be called")));
                    }
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return Err(Error::Expression(format!("missing `)` after {name}(")));
                    }
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                self.variable(&name)
            }
            Token::Op(c) => Err(Error::Expression(format!("unexpected `{c}`"))),
        }
    }

    fn variable(&self, name: &str) -> Result<Node> {
        match name {
            "t" => Ok(Node::Time),
            "r" => Ok(Node::Radius),
            "pi" => Ok(Node::Const(std::f64::consts::PI)),
            "e" => Ok(Node::Const(std::f64::consts::E)),
            "q" if self.dim == 1 => Ok(Node::Coord(0)),
            _ => {
                if let Some(idx) = name.strip_prefix('q').and_then(|s| s.parse::<usize>().ok()) {
                    if (1..=self.dim).contains(&idx) {
                        return Ok(Node::Coord(idx - 1));
                    }
                }
                Err(Error::Expression(format!("unknown name `{name}` (n = {})", self.dim)))
            }
        }
    }
}
