//! Tokens and the expression grammar shared by `.fg` files and the mini-language.

use crate::error::ParseError;
use crate::symexpr::{Expr, Formula};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

// Longest first, so that `<=` wins over `<`.
const PUNCT: &[&str] = &[
    ":=", "<=", ">=", "==", "!=", "&&", "||", "++", "--", "+=", "-=", "*=", "+", "-", "*", "/",
    "%", "(", ")", "[", "]", "{", "}", ";", ",", "<", ">", "=", "!", ":",
];

/// Tokenizes `src`, whose first character sits at (`line`, `col`).
pub(crate) fn lex(src: &str, line: usize, col: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (line, col);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') || c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            i += 2;
            col += 2;
            loop {
                match chars.get(i) {
                    None => return Err(ParseError::new(line, col, "unterminated comment")),
                    Some('*') if chars.get(i + 1) == Some(&'/') => {
                        i += 2;
                        col += 2;
                        break;
                    }
                    Some('\n') => {
                        line += 1;
                        col = 1;
                        i += 1;
                    }
                    Some(_) => {
                        col += 1;
                        i += 1;
                    }
                }
            }
            continue;
        }
        let (tline, tcol) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<i64>().map_err(|_| {
                ParseError::new(
                    tline,
                    tcol,
                    format!("integer literal `{text}` is too large"),
                )
            })?;
            col += i - start;
            out.push(Token {
                tok: Tok::Int(v),
                line: tline,
                col: tcol,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: tline,
                col: tcol,
            });
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let Some(p) = PUNCT.iter().find(|p| rest.starts_with(**p)) else {
            return Err(ParseError::new(
                tline,
                tcol,
                format!("unexpected character `{c}`"),
            ));
        };
        i += p.len();
        col += p.len();
        out.push(Token {
            tok: Tok::Punct(p),
            line: tline,
            col: tcol,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

/// A function call seen inside an expression; reported as an unsupported feature.
#[derive(Debug)]
pub(crate) enum ExprError {
    Parse(ParseError),
    Call {
        line: usize,
        col: usize,
        name: String,
    },
}

impl From<ParseError> for ExprError {
    fn from(e: ParseError) -> Self {
        ExprError::Parse(e)
    }
}

pub(crate) type PResult<T> = Result<T, ExprError>;

pub(crate) struct Parser {
    toks: Vec<Token>,
    pub pos: usize,
}

impl Parser {
    pub fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0 }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn is(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn eat(&mut self, p: &str) -> bool {
        if self.is(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn error(&self, msg: impl Into<String>) -> ParseError {
        let (l, c) = self.here();
        ParseError::new(l, c, msg)
    }

    pub fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    pub fn expect(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{p}`, found {}", self.describe())))
        }
    }

    pub fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(format!("expected identifier, found {}", self.describe()))),
        }
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    // formula := conj ('||' conj)*
    pub fn formula(&mut self) -> PResult<Formula> {
        let mut items = vec![self.conj()?];
        while self.eat("||") {
            items.push(self.conj()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Formula::Or(items)
        })
    }

    fn conj(&mut self) -> PResult<Formula> {
        let mut items = vec![self.unary_formula()?];
        while self.eat("&&") {
            items.push(self.unary_formula()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Formula::And(items)
        })
    }

    fn unary_formula(&mut self) -> PResult<Formula> {
        if self.eat("!") {
            return Ok(Formula::Not(Box::new(self.unary_formula()?)));
        }
        if self.is_kw("true") {
            self.bump();
            return Ok(Formula::True);
        }
        if self.is_kw("false") {
            self.bump();
            return Ok(Formula::False);
        }
        if self.is("(") {
            // Either a parenthesized formula or the start of an arithmetic operand.
            let save = self.pos;
            self.bump();
            if let Ok(f) = self.formula() {
                if self.eat(")") && !self.at_arith_continuation() {
                    return Ok(f);
                }
            }
            self.pos = save;
        }
        self.atom()
    }

    fn at_arith_continuation(&self) -> bool {
        ["+", "-", "*", "/", "%", "<", "<=", ">", ">=", "==", "!="]
            .iter()
            .any(|p| self.is(p))
    }

    // atom := expr relop expr | expr (read as expr != 0)
    fn atom(&mut self) -> PResult<Formula> {
        let a = self.expr()?;
        let rel = match self.peek() {
            Tok::Punct(p) if ["<", "<=", ">", ">=", "==", "!="].contains(p) => *p,
            _ => return Ok(Formula::ne(a, Expr::Const(0))),
        };
        self.bump();
        let b = self.expr()?;
        Ok(match rel {
            "<" => Formula::lt(a, b),
            "<=" => Formula::le(a, b),
            ">" => Formula::gt(a, b),
            ">=" => Formula::ge(a, b),
            "==" => Formula::eq(a, b),
            _ => Formula::ne(a, b),
        })
    }

    // expr := term (('+'|'-') term)*
    pub fn expr(&mut self) -> PResult<Expr> {
        let mut acc = self.term()?;
        loop {
            if self.eat("+") {
                acc = Expr::add(acc, self.term()?);
            } else if self.eat("-") {
                acc = Expr::sub(acc, self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut acc = self.unary()?;
        loop {
            if self.eat("*") {
                acc = Expr::mul(acc, self.unary()?);
            } else if self.eat("/") {
                acc = Expr::div(acc, self.unary()?);
            } else if self.is("%") {
                return Err(self.error("the `%` operator is not supported").into());
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat("-") {
            return Ok(match self.unary()? {
                Expr::Const(c) => Expr::Const(-c),
                e => Expr::neg(e),
            });
        }
        if self.eat("+") {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let (line, col) = self.here();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.is("(") {
                    return Err(ExprError::Call { line, col, name });
                }
                if self.is("[") {
                    let mut args = Vec::new();
                    while self.eat("[") {
                        args.push(self.expr()?);
                        self.expect("]")?;
                    }
                    return Ok(Expr::ArrayRead(name, args));
                }
                Ok(Expr::Symbol(name))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            _ => Err(self
                .error(format!("expected expression, found {}", self.describe()))
                .into()),
        }
    }
}

/// Parses a complete expression.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(lex(src, 1, 1)?);
    let e = p.expr().map_err(flatten)?;
    if !p.at_eof() {
        return Err(p.error(format!("unexpected {}", p.describe())));
    }
    Ok(e)
}

/// Parses a complete formula.
pub fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(lex(src, 1, 1)?);
    let f = p.formula().map_err(flatten)?;
    if !p.at_eof() {
        return Err(p.error(format!("unexpected {}", p.describe())));
    }
    Ok(f)
}

pub(crate) fn flatten(e: ExprError) -> ParseError {
    match e {
        ExprError::Parse(p) => p,
        ExprError::Call { line, col, name } => ParseError::new(
            line,
            col,
            format!("function call `{name}(...)` is not supported"),
        ),
    }
}
