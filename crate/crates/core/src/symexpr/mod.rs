//! Symbolic integer expressions and formulas.
//!
//! One tree type serves two roles. Inside a flowgraph, `Expr::Symbol("i")`
//! is the program variable `i`; inside a symbolic memory or a bound it is
//! the input symbol for `i`. Applying a memory to a program expression is
//! therefore the same simultaneous substitution as composing a memory with
//! a symbolic expression.

mod eval;
mod linear;
mod memory;
mod render;
mod simplify;
mod subst;

pub use eval::{ArrayValue, Valuation};
pub use linear::{match_affine_counter_form, AffineCounterForm, CounterSplit};
pub use memory::SymbolicMemory;
pub use render::ProgramText;
pub(crate) use simplify::to_poly;
pub use simplify::{simplify, simplify_formula, SimplifyLog};
pub use subst::{substitute, substitute_formula, SubstKey};

use std::collections::BTreeSet;
use std::fmt;

/// A path counter `k<id>`: the number of loop iterations along one loop path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct CounterId(pub u32);

impl fmt::Display for CounterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Lt,
    Le,
    Eq,
    Ne,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Const(i64),
    Symbol(String),
    Counter(CounterId),
    /// Bound variable of an enclosing `Sum`.
    Index(String),
    ArrayRead(String, Vec<Expr>),
    /// The absorbing "no information" value.
    Unknown,
    Add(Vec<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Vec<Expr>),
    /// Integer division truncating toward zero.
    Div(Box<Expr>, Box<Expr>),
    Max(Vec<Expr>),
    Min(Vec<Expr>),
    /// `ceil(num/den)` over exact rationals.
    Ceil(Box<Expr>, Box<Expr>),
    /// `floor(num/den)` over exact rationals.
    Floor(Box<Expr>, Box<Expr>),
    Ite(Box<Formula>, Box<Expr>, Box<Expr>),
    Sum {
        index: String,
        lower: Box<Expr>,
        upper: Box<Expr>,
        body: Box<Expr>,
    },
    Pow(Box<Expr>, Box<Expr>),
    /// Smallest `k >= 0` with `base^k >= arg`.
    Log(u32, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Cmp(Rel, Expr, Expr),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
}

impl From<i64> for Expr {
    fn from(v: i64) -> Self {
        Expr::Const(v)
    }
}

// Constructors named after the operators they build.
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn sym(name: impl Into<String>) -> Expr {
        Expr::Symbol(name.into())
    }

    pub fn counter(id: u32) -> Expr {
        Expr::Counter(CounterId(id))
    }

    pub fn array(name: impl Into<String>, args: Vec<Expr>) -> Expr {
        Expr::ArrayRead(name.into(), args)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(vec![a, b])
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(vec![a, b])
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::Mul(vec![Expr::Const(-1), a])
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn max(items: Vec<Expr>) -> Expr {
        Expr::Max(items)
    }

    pub fn min(items: Vec<Expr>) -> Expr {
        Expr::Min(items)
    }

    pub fn ceil(num: Expr, den: Expr) -> Expr {
        Expr::Ceil(Box::new(num), Box::new(den))
    }

    pub fn floor(num: Expr, den: Expr) -> Expr {
        Expr::Floor(Box::new(num), Box::new(den))
    }

    pub fn ite(cond: Formula, then: Expr, other: Expr) -> Expr {
        Expr::Ite(Box::new(cond), Box::new(then), Box::new(other))
    }

    pub fn pow(base: Expr, exp: Expr) -> Expr {
        Expr::Pow(Box::new(base), Box::new(exp))
    }

    pub fn log(base: u32, arg: Expr) -> Expr {
        Expr::Log(base, Box::new(arg))
    }

    pub fn sum(index: impl Into<String>, lower: Expr, upper: Expr, body: Expr) -> Expr {
        Expr::Sum {
            index: index.into(),
            lower: Box::new(lower),
            upper: Box::new(upper),
            body: Box::new(body),
        }
    }

    pub fn as_const(&self) -> Option<i64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(0))
    }

    /// Visits every node of the tree, including expressions nested in `Ite` conditions.
    pub fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Const(_)
            | Expr::Symbol(_)
            | Expr::Counter(_)
            | Expr::Index(_)
            | Expr::Unknown => {}
            Expr::ArrayRead(_, args) => args.iter().for_each(|a| a.visit(f)),
            Expr::Add(xs) | Expr::Mul(xs) | Expr::Max(xs) | Expr::Min(xs) => {
                xs.iter().for_each(|x| x.visit(f))
            }
            Expr::Sub(a, b)
            | Expr::Div(a, b)
            | Expr::Ceil(a, b)
            | Expr::Floor(a, b)
            | Expr::Pow(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Ite(c, a, b) => {
                c.visit_exprs(f);
                a.visit(f);
                b.visit(f);
            }
            Expr::Sum {
                lower, upper, body, ..
            } => {
                lower.visit(f);
                upper.visit(f);
                body.visit(f);
            }
            Expr::Log(_, a) => a.visit(f),
        }
    }

    fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= pred(e));
        found
    }

    pub fn is_kappa_free(&self) -> bool {
        !self.any(&|e| matches!(e, Expr::Counter(_)))
    }

    pub fn contains_unknown(&self) -> bool {
        self.any(&|e| matches!(e, Expr::Unknown))
    }

    pub fn contains_symbol(&self, name: &str) -> bool {
        self.any(&|e| matches!(e, Expr::Symbol(s) if s == name))
    }

    pub fn contains_index(&self, name: &str) -> bool {
        self.any(&|e| matches!(e, Expr::Index(s) if s == name))
    }

    pub fn counters(&self) -> BTreeSet<CounterId> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Counter(c) = e {
                out.insert(*c);
            }
        });
        out
    }

    /// Scalar symbols occurring anywhere in the expression.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Symbol(s) = e {
                out.insert(s.clone());
            }
        });
        out
    }

    pub fn arrays(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::ArrayRead(a, _) = e {
                out.insert(a.clone());
            }
        });
        out
    }
}

impl Formula {
    pub fn lt(a: Expr, b: Expr) -> Formula {
        Formula::Cmp(Rel::Lt, a, b)
    }

    pub fn le(a: Expr, b: Expr) -> Formula {
        Formula::Cmp(Rel::Le, a, b)
    }

    pub fn gt(a: Expr, b: Expr) -> Formula {
        Formula::Cmp(Rel::Lt, b, a)
    }

    pub fn ge(a: Expr, b: Expr) -> Formula {
        Formula::Cmp(Rel::Le, b, a)
    }

    pub fn eq(a: Expr, b: Expr) -> Formula {
        Formula::Cmp(Rel::Eq, a, b)
    }

    pub fn ne(a: Expr, b: Expr) -> Formula {
        Formula::Cmp(Rel::Ne, a, b)
    }

    pub fn and(items: Vec<Formula>) -> Formula {
        Formula::And(items)
    }

    pub fn or(items: Vec<Formula>) -> Formula {
        Formula::Or(items)
    }

    /// Logical negation pushed down to the atoms.
    pub fn negate(&self) -> Formula {
        match self {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Cmp(Rel::Lt, a, b) => Formula::Cmp(Rel::Le, b.clone(), a.clone()),
            Formula::Cmp(Rel::Le, a, b) => Formula::Cmp(Rel::Lt, b.clone(), a.clone()),
            Formula::Cmp(Rel::Eq, a, b) => Formula::Cmp(Rel::Ne, a.clone(), b.clone()),
            Formula::Cmp(Rel::Ne, a, b) => Formula::Cmp(Rel::Eq, a.clone(), b.clone()),
            Formula::And(xs) => Formula::Or(xs.iter().map(Formula::negate).collect()),
            Formula::Or(xs) => Formula::And(xs.iter().map(Formula::negate).collect()),
            Formula::Not(x) => (**x).clone(),
        }
    }

    pub fn visit_exprs(&self, f: &mut dyn FnMut(&Expr)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.visit_exprs(f)),
            Formula::Not(x) => x.visit_exprs(f),
        }
    }

    pub fn is_kappa_free(&self) -> bool {
        let mut free = true;
        self.visit_exprs(&mut |e| free &= !matches!(e, Expr::Counter(_)));
        free
    }

    pub fn contains_unknown(&self) -> bool {
        let mut found = false;
        self.visit_exprs(&mut |e| found |= matches!(e, Expr::Unknown));
        found
    }

    pub fn counters(&self) -> BTreeSet<CounterId> {
        let mut out = BTreeSet::new();
        self.visit_exprs(&mut |e| {
            if let Expr::Counter(c) = e {
                out.insert(*c);
            }
        });
        out
    }

    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_exprs(&mut |e| {
            if let Expr::Symbol(s) = e {
                out.insert(s.clone());
            }
        });
        out
    }

    /// Flattens a conjunction into its conjuncts.
    pub fn conjuncts(&self) -> Vec<Formula> {
        match self {
            Formula::True => vec![],
            Formula::And(xs) => xs.iter().flat_map(Formula::conjuncts).collect(),
            other => vec![other.clone()],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_and_unknown_scans() {
        let max0n = Expr::max(vec![Expr::Const(0), Expr::sym("n")]);
        assert!(max0n.is_kappa_free());
        assert!(!Expr::sub(Expr::sym("n"), Expr::counter(1)).is_kappa_free());
        let ite = Expr::ite(
            Formula::gt(Expr::counter(1), Expr::Const(0)),
            Expr::Unknown,
            Expr::sym("a"),
        );
        assert!(ite.contains_unknown());
        assert!(!ite.is_kappa_free());
    }

    #[test]
    fn negation_flips_atoms() {
        let f = Formula::and(vec![
            Formula::lt(Expr::sym("i"), Expr::sym("n")),
            Formula::lt(Expr::sym("k"), Expr::Const(3)),
        ]);
        assert_eq!(
            f.negate(),
            Formula::or(vec![
                Formula::le(Expr::sym("n"), Expr::sym("i")),
                Formula::le(Expr::Const(3), Expr::sym("k")),
            ])
        );
        assert_eq!(f.negate().negate(), f);
    }
}
