//! The `.loopc` mini-language: a small C subset lowered to a flowgraph.
//!
//! Lowering first produces a graph with unlabeled (epsilon) edges, then
//! contracts them away, drops unreachable nodes and renames nodes `a`, `b`,
//! ... in depth-first preorder from the begin node.

use std::collections::{BTreeMap, BTreeSet};

use super::graph::{Edge, EdgeId, FlowGraph, Instruction, SourcePos};
use super::lex::{lex, ExprError, Parser, Tok};
use crate::error::{Error, ParseError};
use crate::symexpr::{Expr, Formula};

#[derive(Clone, Copy, Debug, Default)]
pub struct LowerOptions {
    /// Lower array stores to no-ops instead of rejecting them.
    pub ignore_array_writes: bool,
}

#[derive(Debug)]
enum Kind {
    Assign(String, Expr),
    Skip,
    Block(Vec<Stmt>),
    If(Formula, Box<Stmt>, Option<Box<Stmt>>),
    While(Formula, Box<Stmt>),
    DoWhile(Box<Stmt>, Formula),
    For(Vec<Stmt>, Formula, Vec<Stmt>, Box<Stmt>),
    Break,
    Continue,
    Goto(String),
    Label(String, Box<Stmt>),
    Assume(Formula),
    Return,
}

#[derive(Debug)]
struct Stmt {
    kind: Kind,
    pos: SourcePos,
}

struct Front {
    p: Parser,
    opts: LowerOptions,
    scalars: BTreeSet<String>,
    arrays: BTreeSet<String>,
    /// Declarations are enforced only when the source has a function header.
    checked: bool,
}

fn unsupported(line: usize, col: usize, feature: impl Into<String>) -> Error {
    Error::Unsupported {
        line,
        col,
        feature: feature.into(),
    }
}

impl From<ExprError> for Error {
    fn from(e: ExprError) -> Self {
        match e {
            ExprError::Parse(p) => Error::Parse(p),
            ExprError::Call { line, col, name } => {
                unsupported(line, col, format!("function call `{name}`"))
            }
        }
    }
}

impl Front {
    fn pos(&self) -> SourcePos {
        let (line, col) = self.p.here();
        SourcePos { line, col }
    }

    fn perr(&self, msg: impl Into<String>) -> Error {
        Error::Parse(self.p.error(msg))
    }

    fn is_type(&self) -> bool {
        self.p.is_kw("int") || self.p.is_kw("void")
    }

    fn program(&mut self) -> Result<Vec<Stmt>, Error> {
        let header = self.is_type()
            && matches!(self.p.peek_at(1), Tok::Ident(_))
            && matches!(self.p.peek_at(2), Tok::Punct("("));
        if !header {
            let mut body = Vec::new();
            while !self.p.at_eof() {
                body.push(self.stmt()?);
            }
            return Ok(body);
        }
        self.checked = true;
        self.p.bump();
        let name = self.p.ident()?;
        self.p.expect("(")?;
        if !self.p.is(")")
            && !(self.p.is_kw("void") && matches!(self.p.peek_at(1), Tok::Punct(")")))
        {
            loop {
                if !self.p.is_kw("int") {
                    return Err(self.perr(format!(
                        "expected `int` parameter, found {}",
                        self.p.describe()
                    )));
                }
                self.p.bump();
                let star = self.p.eat("*");
                let var = self.p.ident()?;
                let mut array = star;
                while self.p.eat("[") {
                    if matches!(self.p.peek(), Tok::Int(_)) {
                        self.p.bump();
                    }
                    self.p.expect("]")?;
                    array = true;
                }
                if array {
                    self.arrays.insert(var);
                } else {
                    self.scalars.insert(var);
                }
                if !self.p.eat(",") {
                    break;
                }
            }
        } else if self.p.is_kw("void") {
            self.p.bump();
        }
        self.p.expect(")")?;
        self.p.expect("{")?;
        let mut body = Vec::new();
        while !self.p.is("}") {
            if self.p.at_eof() {
                return Err(self.perr(format!("unterminated body of `{name}`")));
            }
            body.push(self.stmt()?);
        }
        self.p.bump();
        if !self.p.at_eof() {
            let (l, c) = self.p.here();
            if matches!(self.p.peek_at(1), Tok::Ident(_)) && self.is_type() {
                return Err(unsupported(l, c, "multiple functions"));
            }
            return Err(self.perr(format!(
                "unexpected {} after function body",
                self.p.describe()
            )));
        }
        Ok(body)
    }

    fn stmt(&mut self) -> Result<Stmt, Error> {
        let pos = self.pos();
        let kind = self.stmt_kind()?;
        Ok(Stmt { kind, pos })
    }

    fn paren_formula(&mut self) -> Result<Formula, Error> {
        self.p.expect("(")?;
        let f = self.p.formula()?;
        self.p.expect(")")?;
        self.check_formula(&f)?;
        Ok(f)
    }

    fn stmt_kind(&mut self) -> Result<Kind, Error> {
        if self.p.eat(";") {
            return Ok(Kind::Skip);
        }
        if self.p.eat("{") {
            let mut body = Vec::new();
            while !self.p.eat("}") {
                if self.p.at_eof() {
                    return Err(self.perr("unterminated block"));
                }
                body.push(self.stmt()?);
            }
            return Ok(Kind::Block(body));
        }
        let Tok::Ident(word) = self.p.peek().clone() else {
            return Err(self.perr(format!("expected statement, found {}", self.p.describe())));
        };
        match word.as_str() {
            "int" => {
                let d = self.decl()?;
                self.p.expect(";")?;
                Ok(d)
            }
            "while" => {
                self.p.bump();
                let c = self.paren_formula()?;
                Ok(Kind::While(c, Box::new(self.stmt()?)))
            }
            "do" => {
                self.p.bump();
                let body = self.stmt()?;
                if !self.p.is_kw("while") {
                    return Err(self.perr("expected `while` after `do` body"));
                }
                self.p.bump();
                let c = self.paren_formula()?;
                self.p.expect(";")?;
                Ok(Kind::DoWhile(Box::new(body), c))
            }
            "for" => {
                self.p.bump();
                self.p.expect("(")?;
                let init = if self.p.is_kw("int") {
                    vec![Stmt {
                        pos: self.pos(),
                        kind: self.decl()?,
                    }]
                } else {
                    self.simple_list(";")?
                };
                self.p.expect(";")?;
                let cond = if self.p.is(";") {
                    Formula::True
                } else {
                    let f = self.p.formula()?;
                    self.check_formula(&f)?;
                    f
                };
                self.p.expect(";")?;
                let step = self.simple_list(")")?;
                self.p.expect(")")?;
                let body = self.stmt()?;
                Ok(Kind::For(init, cond, step, Box::new(body)))
            }
            "if" => {
                self.p.bump();
                let c = self.paren_formula()?;
                let then = self.stmt()?;
                let other = if self.p.is_kw("else") {
                    self.p.bump();
                    Some(Box::new(self.stmt()?))
                } else {
                    None
                };
                Ok(Kind::If(c, Box::new(then), other))
            }
            "break" | "continue" => {
                self.p.bump();
                self.p.expect(";")?;
                Ok(if word == "break" {
                    Kind::Break
                } else {
                    Kind::Continue
                })
            }
            "goto" => {
                self.p.bump();
                let l = self.p.ident()?;
                self.p.expect(";")?;
                Ok(Kind::Goto(l))
            }
            "return" => {
                self.p.bump();
                if !self.p.is(";") {
                    let e = self.p.expr()?;
                    self.check_expr(&e)?;
                }
                self.p.expect(";")?;
                Ok(Kind::Return)
            }
            "assume" => {
                self.p.bump();
                let c = self.paren_formula()?;
                self.p.expect(";")?;
                Ok(Kind::Assume(c))
            }
            "else" => Err(self.perr("`else` without `if`")),
            _ if matches!(self.p.peek_at(1), Tok::Punct(":")) => {
                self.p.bump();
                self.p.bump();
                Ok(Kind::Label(word, Box::new(self.stmt()?)))
            }
            _ => {
                let list = self.simple_list(";")?;
                self.p.expect(";")?;
                Ok(match list.len() {
                    1 => list.into_iter().next().unwrap().kind,
                    _ => Kind::Block(list),
                })
            }
        }
    }

    // int x = e, y, z = e;
    fn decl(&mut self) -> Result<Kind, Error> {
        self.p.bump();
        let mut out = Vec::new();
        loop {
            let pos = self.pos();
            let var = self.p.ident()?;
            if self.p.is("[") {
                let (l, c) = self.p.here();
                return Err(unsupported(l, c, "local array declaration"));
            }
            self.scalars.insert(var.clone());
            if self.p.eat("=") {
                let e = self.p.expr()?;
                self.check_expr(&e)?;
                out.push(Stmt {
                    kind: Kind::Assign(var, e),
                    pos,
                });
            }
            if !self.p.eat(",") {
                break;
            }
        }
        Ok(match out.len() {
            0 => Kind::Skip,
            1 => out.pop().unwrap().kind,
            _ => Kind::Block(out),
        })
    }

    /// Comma-separated simple statements, possibly empty, ending before `stop`.
    fn simple_list(&mut self, stop: &str) -> Result<Vec<Stmt>, Error> {
        let mut out = Vec::new();
        if self.p.is(stop) {
            return Ok(out);
        }
        loop {
            out.push(self.simple()?);
            if !self.p.eat(",") {
                return Ok(out);
            }
        }
    }

    // x = e | x += e | x -= e | x *= e | x++ | ++x | A[e] = e | f(...)
    fn simple(&mut self) -> Result<Stmt, Error> {
        let pos = self.pos();
        let step = |inc: bool, v: String| {
            let one = Expr::Const(1);
            let x = Expr::sym(v.clone());
            Kind::Assign(
                v,
                if inc {
                    Expr::add(x, one)
                } else {
                    Expr::sub(x, one)
                },
            )
        };
        if self.p.is("++") || self.p.is("--") {
            let inc = self.p.is("++");
            self.p.bump();
            let v = self.p.ident()?;
            if self.p.is("[") {
                return self.array_write(v, pos);
            }
            self.check_scalar(&v, pos)?;
            return Ok(Stmt {
                kind: step(inc, v),
                pos,
            });
        }
        let v = self.p.ident()?;
        if self.p.is("(") {
            return Err(unsupported(
                pos.line,
                pos.col,
                format!("function call `{v}`"),
            ));
        }
        if self.p.is("[") {
            while self.p.eat("[") {
                let e = self.p.expr()?;
                self.check_expr(&e)?;
                self.p.expect("]")?;
            }
            if !["=", "+=", "-=", "*=", "++", "--"]
                .iter()
                .any(|o| self.p.is(o))
            {
                return Err(self.perr(format!("expected assignment, found {}", self.p.describe())));
            }
            let op = self.p.bump();
            if !matches!(op, Tok::Punct("++" | "--")) {
                let e = self.p.expr()?;
                self.check_expr(&e)?;
            }
            return self.array_write(v, pos);
        }
        self.check_scalar(&v, pos)?;
        let x = Expr::sym(v.clone());
        let kind = match self.p.bump() {
            Tok::Punct("=" | ":=") => Kind::Assign(v, self.rhs()?),
            Tok::Punct("+=") => Kind::Assign(v, Expr::add(x, self.rhs()?)),
            Tok::Punct("-=") => Kind::Assign(v, Expr::sub(x, self.rhs()?)),
            Tok::Punct("*=") => Kind::Assign(v, Expr::mul(x, self.rhs()?)),
            Tok::Punct("++") => step(true, v),
            Tok::Punct("--") => step(false, v),
            _ => {
                self.p.pos -= 1;
                return Err(self.perr(format!("expected assignment, found {}", self.p.describe())));
            }
        };
        Ok(Stmt { kind, pos })
    }

    fn rhs(&mut self) -> Result<Expr, Error> {
        let e = self.p.expr()?;
        self.check_expr(&e)?;
        Ok(e)
    }

    fn array_write(&mut self, name: String, pos: SourcePos) -> Result<Stmt, Error> {
        if self.checked && !self.arrays.contains(&name) {
            return Err(Error::Parse(ParseError::new(
                pos.line,
                pos.col,
                format!("`{name}` is not an array"),
            )));
        }
        if !self.opts.ignore_array_writes {
            return Err(unsupported(
                pos.line,
                pos.col,
                format!("write to array `{name}`"),
            ));
        }
        Ok(Stmt {
            kind: Kind::Skip,
            pos,
        })
    }

    fn check_scalar(&self, v: &str, pos: SourcePos) -> Result<(), Error> {
        if self.arrays.contains(v) {
            return Err(Error::Parse(ParseError::new(
                pos.line,
                pos.col,
                format!("`{v}` is an array"),
            )));
        }
        if self.checked && !self.scalars.contains(v) {
            return Err(Error::Parse(ParseError::new(
                pos.line,
                pos.col,
                format!("undeclared variable `{v}`"),
            )));
        }
        Ok(())
    }

    fn check_leaf(&self, e: &Expr, err: &mut Option<String>) {
        if err.is_some() {
            return;
        }
        match e {
            Expr::Symbol(s) if self.arrays.contains(s) => *err = Some(format!("`{s}` is an array")),
            Expr::Symbol(s) if self.checked && !self.scalars.contains(s) => {
                *err = Some(format!("undeclared variable `{s}`"))
            }
            Expr::ArrayRead(a, _) if self.scalars.contains(a) => {
                *err = Some(format!("`{a}` is not an array"))
            }
            Expr::ArrayRead(a, _) if self.checked && !self.arrays.contains(a) => {
                *err = Some(format!("undeclared array `{a}`"))
            }
            _ => {}
        }
    }

    fn check_expr(&self, e: &Expr) -> Result<(), Error> {
        let mut err = None;
        e.visit(&mut |x| self.check_leaf(x, &mut err));
        self.report(err)
    }

    fn check_formula(&self, f: &Formula) -> Result<(), Error> {
        let mut err = None;
        f.visit_exprs(&mut |x| self.check_leaf(x, &mut err));
        self.report(err)
    }

    fn report(&self, err: Option<String>) -> Result<(), Error> {
        match err {
            None => Ok(()),
            // The offending expression ends at the current token.
            Some(m) => Err(self.perr(m)),
        }
    }
}

struct Raw {
    src: usize,
    dst: usize,
    instr: Option<Instruction>,
    pos: SourcePos,
}

struct Builder {
    nodes: usize,
    edges: Vec<Raw>,
    /// (break target, continue target) of the enclosing loops.
    loops: Vec<(usize, usize)>,
    labels: BTreeMap<String, usize>,
    gotos: Vec<(usize, String, SourcePos)>,
    end: usize,
}

impl Builder {
    fn fresh(&mut self) -> usize {
        self.nodes += 1;
        self.nodes - 1
    }

    fn edge(&mut self, src: usize, dst: usize, instr: Option<Instruction>, pos: SourcePos) {
        self.edges.push(Raw {
            src,
            dst,
            instr,
            pos,
        });
    }

    fn branch(&mut self, at: usize, c: &Formula, yes: usize, no: usize, pos: SourcePos) {
        self.edge(at, yes, Some(Instruction::Assume(c.clone())), pos);
        self.edge(at, no, Some(Instruction::Assume(c.negate())), pos);
    }

    fn seq(&mut self, body: &[Stmt], from: usize, to: usize, pos: SourcePos) -> Result<(), Error> {
        let Some((last, init)) = body.split_last() else {
            self.edge(from, to, None, pos);
            return Ok(());
        };
        let mut cur = from;
        for s in init {
            let mid = self.fresh();
            self.stmt(s, cur, mid)?;
            cur = mid;
        }
        self.stmt(last, cur, to)
    }

    fn stmt(&mut self, s: &Stmt, from: usize, to: usize) -> Result<(), Error> {
        let pos = s.pos;
        let loop_err = |what: &str| {
            Error::Parse(ParseError::new(
                pos.line,
                pos.col,
                format!("`{what}` outside of a loop"),
            ))
        };
        match &s.kind {
            Kind::Assign(v, e) => self.edge(
                from,
                to,
                Some(Instruction::Assign(v.clone(), e.clone())),
                pos,
            ),
            Kind::Assume(c) => self.edge(from, to, Some(Instruction::Assume(c.clone())), pos),
            Kind::Skip => self.edge(from, to, None, pos),
            Kind::Return => {
                let end = self.end;
                self.edge(from, end, None, pos)
            }
            Kind::Block(body) => self.seq(body, from, to, pos)?,
            Kind::If(c, then, other) => {
                let t = self.fresh();
                let f = if other.is_some() { self.fresh() } else { to };
                self.branch(from, c, t, f, pos);
                self.stmt(then, t, to)?;
                if let Some(o) = other {
                    self.stmt(o, f, to)?;
                }
            }
            Kind::While(c, body) => {
                let b = self.fresh();
                self.branch(from, c, b, to, pos);
                self.loops.push((to, from));
                self.stmt(body, b, from)?;
                self.loops.pop();
            }
            Kind::DoWhile(body, c) => {
                let test = self.fresh();
                self.loops.push((to, test));
                self.stmt(body, from, test)?;
                self.loops.pop();
                self.branch(test, c, from, to, pos);
            }
            Kind::For(init, c, step, body) => {
                let head = self.fresh();
                self.seq(init, from, head, pos)?;
                let b = self.fresh();
                let latch = self.fresh();
                self.branch(head, c, b, to, pos);
                self.loops.push((to, latch));
                self.stmt(body, b, latch)?;
                self.loops.pop();
                self.seq(step, latch, head, pos)?;
            }
            Kind::Break => {
                let (brk, _) = *self.loops.last().ok_or_else(|| loop_err("break"))?;
                self.edge(from, brk, None, pos);
            }
            Kind::Continue => {
                let (_, cont) = *self.loops.last().ok_or_else(|| loop_err("continue"))?;
                self.edge(from, cont, None, pos);
            }
            Kind::Goto(l) => {
                self.gotos.push((from, l.clone(), pos));
            }
            Kind::Label(l, inner) => {
                if self.labels.insert(l.clone(), from).is_some() {
                    return Err(Error::Parse(ParseError::new(
                        pos.line,
                        pos.col,
                        format!("duplicate label `{l}`"),
                    )));
                }
                self.stmt(inner, from, to)?;
            }
        }
        Ok(())
    }
}

/// Parses and lowers `.loopc` source.
pub fn lower_program(source: &str, opts: LowerOptions) -> Result<FlowGraph, Error> {
    let mut front = Front {
        p: Parser::new(lex(source, 1, 1)?),
        opts,
        scalars: BTreeSet::new(),
        arrays: BTreeSet::new(),
        checked: false,
    };
    let body = front.program()?;

    let mut b = Builder {
        nodes: 0,
        edges: Vec::new(),
        loops: Vec::new(),
        labels: BTreeMap::new(),
        gotos: Vec::new(),
        end: 0,
    };
    let begin = b.fresh();
    b.end = b.fresh();
    let start = b.fresh();
    let origin = SourcePos { line: 1, col: 1 };
    b.edge(begin, start, None, origin);
    let end = b.end;
    b.seq(&body, start, end, origin)?;
    for (from, l, pos) in std::mem::take(&mut b.gotos) {
        let target = *b.labels.get(&l).ok_or_else(|| {
            Error::Parse(ParseError::new(
                pos.line,
                pos.col,
                format!("undefined label `{l}`"),
            ))
        })?;
        b.edge(from, target, None, pos);
    }

    let edges = contract(b.edges, begin, end);
    let (names, edges) = rename(edges, begin, end);
    let mut provenance = BTreeMap::new();
    let edges: Vec<Edge> = edges
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let id = EdgeId(i as u32);
            provenance.insert(id, r.pos);
            Edge {
                id,
                src: names[&r.src].clone(),
                dst: names[&r.dst].clone(),
                instr: r.instr.expect("contracted"),
            }
        })
        .collect();
    let g = FlowGraph::new(
        names[&begin].clone(),
        names[&end].clone(),
        edges,
        [],
        front.scalars,
        front.arrays,
    )?;
    Ok(g.with_provenance(provenance))
}

/// Removes epsilon edges by merging their endpoints. An epsilon self-loop, or
/// one whose merge would give the begin node incoming edges, becomes `assume(true)`.
fn contract(mut edges: Vec<Raw>, begin: usize, end: usize) -> Vec<Raw> {
    let mut i = 0;
    while i < edges.len() {
        if edges[i].instr.is_some() {
            i += 1;
            continue;
        }
        let (u, v) = (edges[i].src, edges[i].dst);
        let other_in = edges.iter().enumerate().any(|(j, e)| j != i && e.dst == v);
        if u == v || (u == begin && (other_in || v == end)) {
            edges[i].instr = Some(Instruction::Assume(Formula::True));
            i += 1;
            continue;
        }
        let (gone, keep) = if u == begin { (v, u) } else { (u, v) };
        edges.remove(i);
        for e in edges.iter_mut() {
            if e.src == gone {
                e.src = keep;
            }
            if e.dst == gone {
                e.dst = keep;
            }
        }
        i = 0;
    }
    edges
}

/// Drops nodes unreachable from `begin` and names the rest in DFS preorder.
fn rename(edges: Vec<Raw>, begin: usize, end: usize) -> (BTreeMap<usize, String>, Vec<Raw>) {
    let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, e) in edges.iter().enumerate() {
        out.entry(e.src).or_default().push(i);
    }
    let mut order = Vec::new();
    let mut seen = BTreeSet::new();
    let mut stack = vec![(begin, 0usize)];
    seen.insert(begin);
    order.push(begin);
    while let Some((n, k)) = stack.pop() {
        let succ = out.get(&n).map(Vec::as_slice).unwrap_or(&[]);
        if k < succ.len() {
            stack.push((n, k + 1));
            let d = edges[succ[k]].dst;
            if seen.insert(d) {
                order.push(d);
                stack.push((d, 0));
            }
        }
    }
    if seen.insert(end) {
        order.push(end);
    }
    let names: BTreeMap<usize, String> = order
        .iter()
        .enumerate()
        .map(|(i, n)| (*n, letter_name(i)))
        .collect();
    let rank: BTreeMap<usize, usize> = order.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut kept: Vec<(usize, usize, Raw)> = edges
        .into_iter()
        .enumerate()
        .filter(|(_, e)| seen.contains(&e.src))
        .map(|(i, e)| (rank[&e.src], i, e))
        .collect();
    kept.sort_by_key(|(r, i, _)| (*r, *i));
    (names, kept.into_iter().map(|(_, _, e)| e).collect())
}

/// a, b, ..., z, aa, ab, ...
fn letter_name(mut i: usize) -> String {
    let mut s = Vec::new();
    loop {
        s.push(b'a' + (i % 26) as u8);
        if i < 26 {
            break;
        }
        i = i / 26 - 1;
    }
    s.reverse();
    String::from_utf8(s).unwrap()
}
