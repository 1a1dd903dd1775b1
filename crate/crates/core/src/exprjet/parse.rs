use std::sync::Arc;

use super::{BinOp, Expression, Func, Node, ParseError};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(String),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

fn tokenize(source: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if source[start..i] == *"." {
                    return Err(syntax(start, "lone `.` is not a number"));
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    let digits = j;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    if j == digits {
                        return Err(syntax(i, "malformed exponent"));
                    }
                    i = j;
                }
                tokens.push((Token::Number(source[start..i].to_string()), start));
            }
            b'A'..=b'Z' | b'a'..=b'z' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push((Token::Ident(source[start..i].to_string()), start));
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                tokens.push((Token::Op(c as char), start));
                i += 1;
            }
            b'(' => {
                tokens.push((Token::LParen, start));
                i += 1;
            }
            b')' => {
                tokens.push((Token::RParen, start));
                i += 1;
            }
            b',' => {
                tokens.push((Token::Comma, start));
                i += 1;
            }
            _ => {
                let ch = source[start..].chars().next().unwrap_or('?');
                return Err(syntax(start, &format!("unexpected character `{ch}`")));
            }
        }
    }
    tokens.push((Token::End, source.len()));
    Ok(tokens)
}

fn syntax(position: usize, message: &str) -> ParseError {
    ParseError::Syntax { position, message: message.to_string() }
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Parser<'a> {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    vars: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].0.clone();
        if tok != Token::End {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, tok: Token, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.offset(), &format!("expected {what}")))
        }
    }

    // sum := product (('+' | '-') product)*
    fn sum(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Token::Op('+') => BinOp::Add,
                Token::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    // product := unary (('*' | '/') unary)*
    fn product(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Token::Op('*') => BinOp::Mul,
                Token::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    // unary := '-' unary | power
    fn unary(&mut self) -> Result<Node, ParseError> {
        if *self.peek() == Token::Op('-') {
            self.bump();
            let inner = self.unary()?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.power()
    }

    // power := primary ('^' unary)?    (right associative through unary)
    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if *self.peek() != Token::Op('^') {
            return Ok(base);
        }
        self.bump();
        let exponent = self.unary()?;
        Ok(match integer_exponent(&exponent) {
            Some(n) => Node::PowInt(Box::new(base), n),
            None => Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)),
        })
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let at = self.offset();
        match self.bump() {
            Token::Number(text) => Ok(Node::Literal(text)),
            Token::LParen => {
                let inner = self.sum()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            Token::Ident(name) => {
                if *self.peek() == Token::LParen {
                    let func = Func::from_name(&name)
                        .ok_or_else(|| ParseError::UnknownIdentifier(name.clone()))?;
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Token::RParen {
                        args.push(self.sum()?);
                        while *self.peek() == Token::Comma {
                            self.bump();
                            args.push(self.sum()?);
                        }
                    }
                    self.expect(Token::RParen, "`)` after function arguments")?;
                    if args.len() != 1 {
                        return Err(ParseError::Arity { name, found: args.len() });
                    }
                    let arg = args.pop().expect("one argument");
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                if name == "pi" {
                    return Ok(Node::Pi);
                }
                match self.vars.iter().position(|v| *v == name) {
                    Some(k) => Ok(Node::Var(k)),
                    None => Err(ParseError::UnknownIdentifier(name)),
                }
            }
            Token::End => Err(syntax(at, "unexpected end of input")),
            other => Err(syntax(at, &format!("unexpected token {other:?}"))),
        }
    }
}

/// Exponents that are variable-free and integral are folded into `PowInt`.
fn integer_exponent(node: &Node) -> Option<i32> {
    if node.has_vars() {
        return None;
    }
    let value = constant_value(node)?;
    (value.fract() == 0.0 && value.abs() <= 4096.0).then_some(value as i32)
}

fn constant_value(node: &Node) -> Option<f64> {
    Some(match node {
        Node::Literal(text) => text.parse().ok()?,
        Node::Pi => std::f64::consts::PI,
        Node::Var(_) => return None,
        Node::Neg(a) => -constant_value(a)?,
        Node::Binary(op, a, b) => {
            let (a, b) = (constant_value(a)?, constant_value(b)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => a.powf(b),
            }
        }
        Node::PowInt(a, n) => constant_value(a)?.powi(*n),
        Node::Call(..) => return None,
    })
}

/// Parses `source` against the ordered variable list `vars`.
pub fn parse<S: AsRef<str>>(source: &str, vars: &[S]) -> Result<Expression, ParseError> {
    let vars: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
    if vars.is_empty() {
        return Err(ParseError::InvalidVariables("no variables declared".into()));
    }
    for (k, name) in vars.iter().enumerate() {
        if !valid_name(name) {
            return Err(ParseError::InvalidVariables(format!("`{name}` is not a valid name")));
        }
        if name == "pi" || Func::from_name(name).is_some() {
            return Err(ParseError::InvalidVariables(format!("`{name}` is reserved")));
        }
        if vars[..k].contains(name) {
            return Err(ParseError::InvalidVariables(format!("`{name}` declared twice")));
        }
    }
    let mut parser = Parser { tokens: tokenize(source)?, pos: 0, vars: &vars };
    let root = parser.sum()?;
    if *parser.peek() != Token::End {
        return Err(syntax(parser.offset(), "trailing input"));
    }
    Ok(Expression { source: source.to_string(), vars: Arc::from(vars), root })
}
