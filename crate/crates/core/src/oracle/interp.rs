//! Concrete execution of flowgraphs, counting edge visits.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::ir::{EdgeId, FlowGraph, Instruction, NodeId};
use crate::symexpr::{ArrayValue, Expr, Formula, Rel, Valuation};

pub const DEFAULT_STEP_CAP: u64 = 100_000;

/// Initial values of scalars and array contents. Scalars left out start at 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ConcreteInput {
    pub scalars: BTreeMap<String, i64>,
    pub arrays: BTreeMap<String, Vec<i64>>,
}

impl ConcreteInput {
    /// The input as a valuation of the initial-value symbols.
    pub fn valuation(&self, g: &FlowGraph) -> Valuation {
        let mut v = Valuation::new();
        for s in g.scalars() {
            v = v.with_symbol(s.clone(), self.scalars.get(s).copied().unwrap_or(0));
        }
        for a in g.arrays() {
            let vals = self.arrays.get(a).cloned().unwrap_or_default();
            v = v.with_array(a.clone(), ArrayValue::Finite(vals));
        }
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RunStatus {
    /// Reached the end node.
    Finished,
    /// Still running after the step cap; the counts are those so far.
    StepCapHit,
    /// Division by zero, an out-of-range read or an overflow.
    Undefined,
    /// Stopped at a failing assumption with no alternative.
    Blocked,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunTrace {
    pub counts: BTreeMap<EdgeId, u64>,
    pub status: RunStatus,
    pub steps: u64,
    /// Visited nodes, when requested.
    pub path: Option<Vec<NodeId>>,
}

impl RunTrace {
    pub fn count(&self, e: EdgeId) -> u64 {
        self.counts.get(&e).copied().unwrap_or(0)
    }
}

#[derive(Debug)]
enum C {
    Const(i128),
    Var(usize),
    Read(usize, Box<C>),
    Add(Vec<C>),
    Sub(Box<C>, Box<C>),
    Mul(Vec<C>),
    Div(Box<C>, Box<C>),
}

#[derive(Debug)]
enum F {
    Const(bool),
    Cmp(Rel, C, C),
    And(Vec<F>),
    Or(Vec<F>),
    Not(Box<F>),
}

#[derive(Debug)]
enum Op {
    Assign(usize, C),
    Assume(F),
}

/// A flowgraph prepared for fast repeated execution.
#[derive(Debug)]
pub struct Interpreter<'g> {
    g: &'g FlowGraph,
    scalars: Vec<String>,
    arrays: Vec<String>,
    /// Outgoing edges per node index: (edge id, target index, operation).
    out: Vec<Vec<(EdgeId, usize, Op)>>,
    nodes: Vec<NodeId>,
    begin: usize,
    end: usize,
}

struct Compiler<'a> {
    scalars: &'a BTreeMap<&'a str, usize>,
    arrays: &'a BTreeMap<&'a str, usize>,
}

impl Compiler<'_> {
    fn expr(&self, e: &Expr) -> Option<C> {
        Some(match e {
            Expr::Const(c) => C::Const(*c as i128),
            Expr::Symbol(s) => C::Var(*self.scalars.get(s.as_str())?),
            Expr::ArrayRead(a, idx) if idx.len() == 1 => {
                C::Read(*self.arrays.get(a.as_str())?, Box::new(self.expr(&idx[0])?))
            }
            Expr::Add(xs) => C::Add(xs.iter().map(|x| self.expr(x)).collect::<Option<_>>()?),
            Expr::Mul(xs) => C::Mul(xs.iter().map(|x| self.expr(x)).collect::<Option<_>>()?),
            Expr::Sub(a, b) => C::Sub(Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
            Expr::Div(a, b) => C::Div(Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
            _ => return None,
        })
    }

    fn formula(&self, f: &Formula) -> Option<F> {
        Some(match f {
            Formula::True => F::Const(true),
            Formula::False => F::Const(false),
            Formula::Cmp(r, a, b) => F::Cmp(*r, self.expr(a)?, self.expr(b)?),
            Formula::And(xs) => F::And(xs.iter().map(|x| self.formula(x)).collect::<Option<_>>()?),
            Formula::Or(xs) => F::Or(xs.iter().map(|x| self.formula(x)).collect::<Option<_>>()?),
            Formula::Not(x) => F::Not(Box::new(self.formula(x)?)),
        })
    }
}

struct State<'a> {
    vars: Vec<i128>,
    arrays: Vec<&'a [i64]>,
}

impl State<'_> {
    fn eval(&self, c: &C) -> Option<i128> {
        match c {
            C::Const(v) => Some(*v),
            C::Var(i) => Some(self.vars[*i]),
            C::Read(a, idx) => {
                let i = usize::try_from(self.eval(idx)?).ok()?;
                self.arrays[*a].get(i).map(|v| *v as i128)
            }
            C::Add(xs) => xs.iter().try_fold(0i128, |acc, x| acc.checked_add(self.eval(x)?)),
            C::Mul(xs) => xs.iter().try_fold(1i128, |acc, x| acc.checked_mul(self.eval(x)?)),
            C::Sub(a, b) => self.eval(a)?.checked_sub(self.eval(b)?),
            C::Div(a, b) => {
                let d = self.eval(b)?;
                if d == 0 {
                    None
                } else {
                    self.eval(a)?.checked_div(d)
                }
            }
        }
    }

    fn holds(&self, f: &F) -> Option<bool> {
        match f {
            F::Const(b) => Some(*b),
            F::Cmp(r, a, b) => {
                let (a, b) = (self.eval(a)?, self.eval(b)?);
                Some(match r {
                    Rel::Lt => a < b,
                    Rel::Le => a <= b,
                    Rel::Eq => a == b,
                    Rel::Ne => a != b,
                })
            }
            F::And(xs) => {
                for x in xs {
                    if !self.holds(x)? {
                        return Some(false);
                    }
                }
                Some(true)
            }
            F::Or(xs) => {
                for x in xs {
                    if self.holds(x)? {
                        return Some(true);
                    }
                }
                Some(false)
            }
            F::Not(x) => self.holds(x).map(|b| !b),
        }
    }
}

impl<'g> Interpreter<'g> {
    /// Panics if an instruction uses an operator the language does not have.
    pub fn new(g: &'g FlowGraph) -> Self {
        let scalars: Vec<String> = g.scalars().iter().cloned().collect();
        let arrays: Vec<String> = g.arrays().iter().cloned().collect();
        let sidx: BTreeMap<&str, usize> =
            scalars.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let aidx: BTreeMap<&str, usize> =
            arrays.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let nodes: Vec<NodeId> = g.nodes().iter().cloned().collect();
        let nidx: BTreeMap<&str, usize> =
            nodes.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let comp = Compiler {
            scalars: &sidx,
            arrays: &aidx,
        };
        let mut out: Vec<Vec<(EdgeId, usize, Op)>> = nodes.iter().map(|_| Vec::new()).collect();
        for n in &nodes {
            for e in g.out_edges(n) {
                let op = match &e.instr {
                    Instruction::Assign(v, x) => Op::Assign(
                        sidx[v.as_str()],
                        comp.expr(x).expect("program expressions are executable"),
                    ),
                    Instruction::Assume(f) => {
                        Op::Assume(comp.formula(f).expect("program conditions are executable"))
                    }
                };
                out[nidx[n.as_str()]].push((e.id, nidx[e.dst.as_str()], op));
            }
        }
        Interpreter {
            g,
            begin: nidx[g.begin().as_str()],
            end: nidx[g.end().as_str()],
            scalars,
            arrays,
            out,
            nodes,
        }
    }

    pub fn graph(&self) -> &FlowGraph {
        self.g
    }

    pub fn run(&self, input: &ConcreteInput, step_cap: u64, record_path: bool) -> RunTrace {
        let empty: &[i64] = &[];
        let mut st = State {
            vars: self
                .scalars
                .iter()
                .map(|s| input.scalars.get(s).copied().unwrap_or(0) as i128)
                .collect(),
            arrays: self
                .arrays
                .iter()
                .map(|a| input.arrays.get(a).map_or(empty, |v| v.as_slice()))
                .collect(),
        };
        let mut counts = BTreeMap::new();
        let mut path = record_path.then(|| vec![self.nodes[self.begin].clone()]);
        let mut at = self.begin;
        let mut steps = 0u64;
        let status = loop {
            if at == self.end {
                break RunStatus::Finished;
            }
            if steps >= step_cap {
                break RunStatus::StepCapHit;
            }
            let outs = &self.out[at];
            let mut next = None;
            let mut undefined = false;
            for (id, dst, op) in outs {
                match op {
                    Op::Assume(f) => match st.holds(f) {
                        Some(true) => {
                            next = Some((*id, *dst));
                            break;
                        }
                        Some(false) => {}
                        None => {
                            undefined = true;
                            break;
                        }
                    },
                    Op::Assign(v, x) => match st.eval(x).filter(|r| i64::try_from(*r).is_ok()) {
                        Some(r) => {
                            st.vars[*v] = r;
                            next = Some((*id, *dst));
                            break;
                        }
                        None => {
                            undefined = true;
                            break;
                        }
                    },
                }
            }
            if undefined {
                break RunStatus::Undefined;
            }
            let Some((id, dst)) = next else {
                assert!(
                    outs.len() == 1,
                    "no branch condition holds at {}",
                    self.nodes[at]
                );
                break RunStatus::Blocked;
            };
            *counts.entry(id).or_insert(0) += 1;
            steps += 1;
            at = dst;
            if let Some(p) = &mut path {
                p.push(self.nodes[at].clone());
            }
        };
        RunTrace {
            counts,
            status,
            steps,
            path,
        }
    }
}

/// Runs `g` once from `input`.
pub fn run_concrete(g: &FlowGraph, input: &ConcreteInput, step_cap: u64) -> RunTrace {
    Interpreter::new(g).run(input, step_cap, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{lower_program, parse_flowgraph, LowerOptions};

    fn step2() -> FlowGraph {
        parse_flowgraph(
            "begin a\nend d\nedge a b assign i := 5\nedge b c assume i < x\nedge c b assign i := i + 2\nedge b d assume x <= i\n",
        )
        .unwrap()
    }

    fn input(pairs: &[(&str, i64)]) -> ConcreteInput {
        ConcreteInput {
            scalars: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            arrays: BTreeMap::new(),
        }
    }

    #[test]
    fn step2_counts() {
        let g = step2();
        let t = run_concrete(&g, &input(&[("x", 12)]), DEFAULT_STEP_CAP);
        assert_eq!(t.status, RunStatus::Finished);
        assert_eq!(t.count(EdgeId(1)), 4);
        assert_eq!(t.count(EdgeId(2)), 4);
        assert_eq!(t.count(EdgeId(0)), 1);
        assert_eq!(t.count(EdgeId(3)), 1);
        let t = run_concrete(&g, &input(&[("x", 0)]), DEFAULT_STEP_CAP);
        assert_eq!((t.count(EdgeId(1)), t.count(EdgeId(3))), (0, 1));
    }

    #[test]
    fn spin_hits_the_cap() {
        let src = "void f(int x) { while (x > 0) { x = x - 1; while (true) { } } }";
        let g = lower_program(src, LowerOptions::default()).unwrap();
        let t = run_concrete(&g, &input(&[("x", 3)]), 1000);
        assert_eq!(t.status, RunStatus::StepCapHit);
        let dec = g.edges().iter().find(|e| e.instr.to_string().starts_with("x :=")).unwrap();
        assert_eq!(t.count(dec.id), 1);
    }

    #[test]
    fn undefined_and_blocked_runs() {
        let g = parse_flowgraph("begin a\nend b\nedge a b assign y := A[5]\n").unwrap();
        let mut inp = input(&[]);
        inp.arrays.insert("A".into(), vec![1, 2]);
        assert_eq!(run_concrete(&g, &inp, 10).status, RunStatus::Undefined);
        let g = parse_flowgraph("begin a\nend b\nedge a b assign y := 1 / x\n").unwrap();
        assert_eq!(run_concrete(&g, &input(&[]), 10).status, RunStatus::Undefined);
        let g = parse_flowgraph("begin a\nend b\nedge a b assume 0 < x\n").unwrap();
        assert_eq!(run_concrete(&g, &input(&[]), 10).status, RunStatus::Blocked);
        assert_eq!(run_concrete(&g, &input(&[("x", 1)]), 10).status, RunStatus::Finished);
    }

    #[test]
    fn deterministic_with_path() {
        let g = step2();
        let it = Interpreter::new(&g);
        let a = it.run(&input(&[("x", 9)]), 100, true);
        let b = it.run(&input(&[("x", 9)]), 100, true);
        assert_eq!(a, b);
        assert_eq!(a.path.unwrap().join(""), "abcbcbd");
    }
}
