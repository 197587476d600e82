//! Recursive-descent parser for the expression grammar in the module docs.

use super::{ast_from_parts, BinaryOp, ExprError, ExprResult, ExpressionAst, Node, UnaryOp};
use crate::Real;

const SMOOTH_FUNCTIONS: [(&str, UnaryOp); 5] = [
    ("sin", UnaryOp::Sin),
    ("cos", UnaryOp::Cos),
    ("exp", UnaryOp::Exp),
    ("log", UnaryOp::Log),
    ("sqrt", UnaryOp::Sqrt),
];

const NON_SMOOTH: [&str; 10] = [
    "abs", "sign", "signum", "floor", "ceil", "round", "min", "max", "mod", "step",
];

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    text: &'a str,
    tokens: Vec<(Token, usize)>,
}

fn lex<R: Real>(text: &str) -> ExprResult<Vec<(Token, usize)>, R> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                tokens.push((Token::Plus, i));
                i += 1;
            }
            '-' => {
                tokens.push((Token::Minus, i));
                i += 1;
            }
            '*' => {
                tokens.push((Token::Star, i));
                i += 1;
            }
            '/' => {
                tokens.push((Token::Slash, i));
                i += 1;
            }
            '^' => {
                tokens.push((Token::Caret, i));
                i += 1;
            }
            '(' => {
                tokens.push((Token::LParen, i));
                i += 1;
            }
            ')' => {
                tokens.push((Token::RParen, i));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lit = &text[start..i];
                let value: f64 = lit.parse().map_err(|_| ExprError::Syntax {
                    position: start,
                    message: format!("invalid number literal `{lit}`"),
                })?;
                tokens.push((Token::Number(value), start));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push((Token::Ident(text[start..i].to_string()), start));
            }
            other => {
                return Err(ExprError::Syntax {
                    position: i,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(tokens)
}

struct Parser<'a, R: Real> {
    lexer: Lexer<'a>,
    pos: usize,
    names: &'a [String],
    _marker: std::marker::PhantomData<R>,
}

pub(super) fn parse<R: Real>(text: &str, names: &[String]) -> ExprResult<ExpressionAst<R>, R> {
    let tokens = lex::<R>(text)?;
    let mut p = Parser {
        lexer: Lexer { text, tokens },
        pos: 0,
        names,
        _marker: std::marker::PhantomData,
    };
    let root = p.expression()?;
    if let Some((tok, at)) = p.peek_with_pos() {
        return Err(ExprError::Syntax {
            position: at,
            message: format!("unexpected trailing input near `{tok:?}`"),
        });
    }
    Ok(ast_from_parts(root, names.to_vec()))
}

impl<'a, R: Real> Parser<'a, R> {
    fn peek(&self) -> Option<&Token> {
        self.lexer.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn peek_with_pos(&self) -> Option<(&Token, usize)> {
        self.lexer.tokens.get(self.pos).map(|(t, p)| (t, *p))
    }

    fn here(&self) -> usize {
        self.lexer
            .tokens
            .get(self.pos)
            .map(|(_, p)| *p)
            .unwrap_or(self.lexer.text.len())
    }

    fn advance(&mut self) -> Option<Token> {
        let t = self.lexer.tokens.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Token, what: &str) -> ExprResult<(), R> {
        let at = self.here();
        match self.advance() {
            Some(t) if t == tok => Ok(()),
            _ => Err(ExprError::Syntax {
                position: at,
                message: format!("expected {what}"),
            }),
        }
    }

    fn expression(&mut self) -> ExprResult<Node<R>, R> {
        let mut node = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.advance();
                    let rhs = self.term()?;
                    node = Node::Binary(BinaryOp::Add, Box::new(node), Box::new(rhs));
                }
                Some(Token::Minus) => {
                    self.advance();
                    let rhs = self.term()?;
                    node = Node::Binary(BinaryOp::Sub, Box::new(node), Box::new(rhs));
                }
                _ => return Ok(node),
            }
        }
    }

    fn term(&mut self) -> ExprResult<Node<R>, R> {
        let mut node = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.advance();
                    let rhs = self.factor()?;
                    node = Node::Binary(BinaryOp::Mul, Box::new(node), Box::new(rhs));
                }
                Some(Token::Slash) => {
                    self.advance();
                    let rhs = self.factor()?;
                    node = Node::Binary(BinaryOp::Div, Box::new(node), Box::new(rhs));
                }
                _ => return Ok(node),
            }
        }
    }

    fn factor(&mut self) -> ExprResult<Node<R>, R> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.advance();
            let inner = self.factor()?;
            return Ok(Node::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> ExprResult<Node<R>, R> {
        let mut node = self.atom()?;
        while matches!(self.peek(), Some(Token::Caret)) {
            self.advance();
            let at = self.here();
            let negated = if matches!(self.peek(), Some(Token::Minus)) {
                self.advance();
                true
            } else {
                false
            };
            let exp_node = self.atom()?;
            let mut exponent = fold_constant(&exp_node).ok_or_else(|| ExprError::Syntax {
                position: at,
                message: "exponent must fold to a finite constant".to_string(),
            })?;
            if negated {
                exponent = -exponent;
            }
            node = Node::Pow(Box::new(node), exponent);
        }
        Ok(node)
    }

    fn atom(&mut self) -> ExprResult<Node<R>, R> {
        let at = self.here();
        match self.advance() {
            Some(Token::Number(v)) => Ok(Node::Constant(R::lit(v))),
            Some(Token::LParen) => {
                let inner = self.expression()?;
                self.expect(Token::RParen, "closing `)`")?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => self.identifier(name, at),
            Some(tok) => Err(ExprError::Syntax {
                position: at,
                message: format!("unexpected token `{tok:?}`"),
            }),
            None => Err(ExprError::Syntax {
                position: at,
                message: "unexpected end of input".to_string(),
            }),
        }
    }

    fn identifier(&mut self, name: String, at: usize) -> ExprResult<Node<R>, R> {
        if let Some(idx) = self.names.iter().position(|n| n == &name) {
            return Ok(Node::Variable(idx));
        }
        if let Some((_, op)) = SMOOTH_FUNCTIONS.iter().find(|(n, _)| *n == name) {
            self.expect(Token::LParen, &format!("`(` after function `{name}`"))?;
            let arg = self.expression()?;
            self.expect(Token::RParen, "closing `)`")?;
            return Ok(Node::Unary(*op, Box::new(arg)));
        }
        if NON_SMOOTH.contains(&name.as_str()) {
            return Err(ExprError::NonSmoothFunction { position: at, name });
        }
        // `x<k>` with k beyond the declared dimension, when the table is the
        // standard one, is a dimension problem rather than a typo.
        if self.names.first().map(|n| n.as_str()) == Some("x0") && is_indexed_var(&name) {
            return Err(ExprError::DimensionMismatch {
                position: at,
                name,
                dimension: self.names.len(),
            });
        }
        Err(ExprError::UnknownIdentifier { position: at, name })
    }
}

fn is_indexed_var(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next() == Some('x') && name.len() > 1 && chars.all(|c| c.is_ascii_digit())
}

/// Evaluates a variable-free subtree; `None` if it contains variables or does
/// not evaluate to a finite value.
fn fold_constant<R: Real>(node: &Node<R>) -> Option<R> {
    let v = match node {
        Node::Constant(c) => *c,
        Node::Variable(_) => return None,
        Node::Unary(op, c) => {
            let u = fold_constant(c)?;
            match op {
                UnaryOp::Neg => -u,
                UnaryOp::Sin => u.sin(),
                UnaryOp::Cos => u.cos(),
                UnaryOp::Exp => u.exp(),
                UnaryOp::Log => u.ln(),
                UnaryOp::Sqrt => u.sqrt(),
            }
        }
        Node::Binary(op, a, b) => {
            let va = fold_constant(a)?;
            let vb = fold_constant(b)?;
            match op {
                BinaryOp::Add => va + vb,
                BinaryOp::Sub => va - vb,
                BinaryOp::Mul => va * vb,
                BinaryOp::Div => va / vb,
            }
        }
        Node::Pow(base, c) => super::jet::pow_value(fold_constant(base)?, *c)?,
    };
    v.is_finite().then_some(v)
}
