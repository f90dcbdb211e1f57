//! SMT-LIB2 (QF_UFLIA) scripts and a client for an external solver process.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::SatResult;
use crate::symexpr::{Expr, Formula, Rel};

#[derive(Debug, Error)]
pub enum ExternalSolverError {
    #[error("cannot run solver: {0}")]
    Spawn(#[from] std::io::Error),
    #[error("solver timed out after {0:?}")]
    Timeout(Duration),
    #[error("unexpected solver answer `{0}`")]
    Protocol(String),
}

#[derive(Clone, Debug)]
pub struct ExternalSolver {
    pub path: PathBuf,
    pub args: Vec<String>,
    pub timeout: Duration,
}

impl ExternalSolver {
    pub fn new(path: impl Into<PathBuf>, timeout: Duration) -> Self {
        ExternalSolver {
            path: path.into(),
            args: Vec::new(),
            timeout,
        }
    }

    /// Runs the script through the solver and reads its first answer line.
    pub fn check(&self, script: &str) -> Result<SatResult, ExternalSolverError> {
        let mut child = Command::new(&self.path)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        {
            let mut stdin = child.stdin.take().expect("piped");
            // A solver that exits early closes the pipe; its answer still counts.
            let _ = stdin.write_all(script.as_bytes());
        }
        let start = Instant::now();
        loop {
            if child.try_wait()?.is_some() {
                break;
            }
            if start.elapsed() > self.timeout {
                let _ = child.kill();
                let _ = child.wait();
                return Err(ExternalSolverError::Timeout(self.timeout));
            }
            std::thread::sleep(Duration::from_millis(2));
        }
        let mut out = String::new();
        child
            .stdout
            .take()
            .expect("piped")
            .read_to_string(&mut out)?;
        let first = out
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty())
            .unwrap_or("");
        match first {
            "sat" => Ok(SatResult::Sat),
            "unsat" => Ok(SatResult::Unsat),
            "unknown" => Ok(SatResult::Unknown),
            other => Err(ExternalSolverError::Protocol(other.to_string())),
        }
    }
}

struct Emitter {
    consts: BTreeSet<String>,
    funs: BTreeMap<String, usize>,
    opaque: BTreeMap<Expr, String>,
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

impl Emitter {
    fn opaque(&mut self, e: &Expr) -> String {
        let n = self.opaque.len();
        self.opaque
            .entry(e.clone())
            .or_insert_with(|| format!("t_{n}"))
            .clone()
    }

    fn list(&mut self, op: &str, xs: &[Expr]) -> String {
        let parts: Vec<String> = xs.iter().map(|x| self.expr(x)).collect();
        match parts.len() {
            0 if op == "+" => "0".into(),
            0 => "1".into(),
            1 => parts.into_iter().next().unwrap(),
            _ => format!("({op} {})", parts.join(" ")),
        }
    }

    fn expr(&mut self, e: &Expr) -> String {
        match e {
            Expr::Const(c) if *c < 0 => format!("(- {})", -(*c as i128)),
            Expr::Const(c) => c.to_string(),
            Expr::Symbol(s) => {
                let n = format!("s_{}", sanitize(s));
                self.consts.insert(n.clone());
                n
            }
            Expr::Counter(k) => {
                let n = format!("k_{}", k.0);
                self.consts.insert(n.clone());
                n
            }
            Expr::ArrayRead(a, args) => {
                let n = format!("a_{}", sanitize(a));
                self.funs.insert(n.clone(), args.len());
                let args: Vec<String> = args.iter().map(|x| self.expr(x)).collect();
                format!("({n} {})", args.join(" "))
            }
            Expr::Add(xs) => self.list("+", xs),
            Expr::Mul(xs) => self.list("*", xs),
            Expr::Sub(a, b) => format!("(- {} {})", self.expr(a), self.expr(b)),
            Expr::Max(xs) | Expr::Min(xs) => {
                let op = if matches!(e, Expr::Max(_)) {
                    ">="
                } else {
                    "<="
                };
                let mut acc = self.expr(&xs[0]);
                for x in &xs[1..] {
                    let y = self.expr(x);
                    acc = format!("(ite ({op} {acc} {y}) {acc} {y})");
                }
                acc
            }
            Expr::Ite(c, a, b) => format!(
                "(ite {} {} {})",
                self.formula(c),
                self.expr(a),
                self.expr(b)
            ),
            Expr::Ceil(a, b) if b.as_const().is_some_and(|d| d > 0) => {
                format!("(- (div (- {}) {}))", self.expr(a), self.expr(b))
            }
            Expr::Floor(a, b) if b.as_const().is_some_and(|d| d > 0) => {
                format!("(div {} {})", self.expr(a), self.expr(b))
            }
            // Everything else is left uninterpreted.
            _ => {
                let n = self.opaque(e);
                self.consts.insert(n.clone());
                n
            }
        }
    }

    fn formula(&mut self, f: &Formula) -> String {
        match f {
            Formula::True => "true".into(),
            Formula::False => "false".into(),
            Formula::Cmp(r, a, b) => {
                let (a, b) = (self.expr(a), self.expr(b));
                match r {
                    Rel::Lt => format!("(< {a} {b})"),
                    Rel::Le => format!("(<= {a} {b})"),
                    Rel::Eq => format!("(= {a} {b})"),
                    Rel::Ne => format!("(not (= {a} {b}))"),
                }
            }
            Formula::And(xs) | Formula::Or(xs) if xs.is_empty() => {
                if matches!(f, Formula::And(_)) {
                    "true".into()
                } else {
                    "false".into()
                }
            }
            Formula::And(xs) => {
                let parts: Vec<String> = xs.iter().map(|x| self.formula(x)).collect();
                format!("(and {})", parts.join(" "))
            }
            Formula::Or(xs) => {
                let parts: Vec<String> = xs.iter().map(|x| self.formula(x)).collect();
                format!("(or {})", parts.join(" "))
            }
            Formula::Not(x) => format!("(not {})", self.formula(x)),
        }
    }
}

/// A complete script asserting `phi` and asking for satisfiability. Array
/// reads become uninterpreted functions; terms outside linear integer
/// arithmetic become fresh constants.
pub fn emit_smtlib(phi: &Formula) -> String {
    let mut em = Emitter {
        consts: BTreeSet::new(),
        funs: BTreeMap::new(),
        opaque: BTreeMap::new(),
    };
    let body = em.formula(phi);
    let mut s = String::from("(set-logic QF_UFLIA)\n");
    for c in &em.consts {
        s.push_str(&format!("(declare-fun {c} () Int)\n"));
    }
    for (f, arity) in &em.funs {
        s.push_str(&format!(
            "(declare-fun {f} ({}) Int)\n",
            vec!["Int"; *arity].join(" ")
        ));
    }
    s.push_str(&format!("(assert {body})\n(check-sat)\n(exit)\n"));
    s
}
