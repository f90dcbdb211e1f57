use std::collections::{BTreeMap, BTreeSet};

use super::subst::{map_formula_leaves, map_leaves};
use super::{Expr, Formula};
use crate::error::AnalysisError;

/// Values of scalar variables in terms of input symbols (and possibly path
/// counters). Arrays are read-only, so each array variable always denotes
/// its own input symbol and only its name is recorded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolicMemory {
    scalars: BTreeMap<String, Expr>,
    arrays: BTreeSet<String>,
}

impl SymbolicMemory {
    /// The initial memory: every scalar `a` holds its own symbol.
    pub fn initial<'a>(
        scalars: impl IntoIterator<Item = &'a String>,
        arrays: impl IntoIterator<Item = &'a String>,
    ) -> Self {
        SymbolicMemory {
            scalars: scalars
                .into_iter()
                .map(|s| (s.clone(), Expr::Symbol(s.clone())))
                .collect(),
            arrays: arrays.into_iter().cloned().collect(),
        }
    }

    pub fn get(&self, var: &str) -> Option<&Expr> {
        self.scalars.get(var)
    }

    pub fn set(&mut self, var: impl Into<String>, value: Expr) {
        self.scalars.insert(var.into(), value);
    }

    pub fn scalars(&self) -> impl Iterator<Item = (&String, &Expr)> {
        self.scalars.iter()
    }

    pub fn scalar_names(&self) -> impl Iterator<Item = &String> {
        self.scalars.keys()
    }

    pub fn arrays(&self) -> &BTreeSet<String> {
        &self.arrays
    }

    pub fn is_initial_for(&self, var: &str) -> bool {
        matches!(self.scalars.get(var), Some(Expr::Symbol(s)) if s == var)
    }

    /// `theta<psi>`: replaces every symbol `a` of `psi` that has an entry by `theta(a)`.
    /// Array symbols and path counters are left alone.
    pub fn compose(&self, psi: &Expr) -> Expr {
        map_leaves(psi, &|leaf| match leaf {
            Expr::Symbol(s) => self.scalars.get(s).cloned(),
            _ => None,
        })
    }

    pub fn compose_formula(&self, phi: &Formula) -> Formula {
        map_formula_leaves(phi, &|leaf| match leaf {
            Expr::Symbol(s) => self.scalars.get(s).cloned(),
            _ => None,
        })
    }

    /// `theta(expr)` for a program expression; every variable it mentions
    /// must be known to the memory.
    pub fn apply(&self, expr: &Expr) -> Result<Expr, AnalysisError> {
        self.check_vars(expr)?;
        Ok(self.compose(expr))
    }

    pub fn apply_formula(&self, phi: &Formula) -> Result<Formula, AnalysisError> {
        let mut err = None;
        phi.visit_exprs(&mut |e| {
            if err.is_none() {
                err = self.check_leaf(e).err();
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(self.compose_formula(phi)),
        }
    }

    fn check_vars(&self, expr: &Expr) -> Result<(), AnalysisError> {
        let mut err = None;
        expr.visit(&mut |e| {
            if err.is_none() {
                err = self.check_leaf(e).err();
            }
        });
        err.map_or(Ok(()), Err)
    }

    fn check_leaf(&self, e: &Expr) -> Result<(), AnalysisError> {
        match e {
            Expr::Symbol(s) if !self.scalars.contains_key(s) => {
                Err(AnalysisError::UnknownVariable(s.clone()))
            }
            Expr::ArrayRead(a, _) if !self.arrays.contains(a) => {
                Err(AnalysisError::UnknownVariable(a.clone()))
            }
            _ => Ok(()),
        }
    }

    /// Memory of the sequential composition "self, then `next`".
    pub fn then(&self, next: &SymbolicMemory) -> SymbolicMemory {
        let mut out = self.clone();
        for (var, value) in &next.scalars {
            out.scalars.insert(var.clone(), self.compose(value));
        }
        out
    }

    pub fn map_values(&self, f: impl Fn(&Expr) -> Expr) -> SymbolicMemory {
        SymbolicMemory {
            scalars: self
                .scalars
                .iter()
                .map(|(k, v)| (k.clone(), f(v)))
                .collect(),
            arrays: self.arrays.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::simplify;

    fn mem(vars: &[&str], arrays: &[&str]) -> SymbolicMemory {
        let s: Vec<String> = vars.iter().map(|v| v.to_string()).collect();
        let a: Vec<String> = arrays.iter().map(|v| v.to_string()).collect();
        SymbolicMemory::initial(&s, &a)
    }

    #[test]
    fn assignments_update_through_apply() {
        let mut theta = mem(&["a", "b"], &[]);
        // a := 2*a + b
        let rhs = Expr::add(Expr::mul(Expr::Const(2), Expr::sym("a")), Expr::sym("b"));
        let v = theta.apply(&rhs).unwrap();
        assert_eq!(v, rhs);
        theta.set("a", v);
        // a := 1 - a
        let v2 = theta
            .apply(&Expr::sub(Expr::Const(1), Expr::sym("a")))
            .unwrap();
        assert_eq!(v2, Expr::sub(Expr::Const(1), rhs));
        let expected = simplify(&Expr::Add(vec![
            Expr::Const(1),
            Expr::mul(Expr::Const(-2), Expr::sym("a")),
            Expr::neg(Expr::sym("b")),
        ]));
        assert_eq!(simplify(&v2), expected);
    }

    #[test]
    fn array_access_through_initial_memory() {
        let theta = mem(&["i"], &["A"]);
        let read = Expr::array("A", vec![Expr::sym("i")]);
        assert_eq!(theta.apply(&read).unwrap(), read);
    }

    #[test]
    fn array_condition_after_increment() {
        let mut theta = mem(&["i"], &["A"]);
        theta.set("i", Expr::add(Expr::sym("i"), Expr::Const(1)));
        let cond = Formula::ne(Expr::array("A", vec![Expr::sym("i")]), Expr::Const(0));
        assert_eq!(
            theta.apply_formula(&cond).unwrap(),
            Formula::ne(
                Expr::array("A", vec![Expr::add(Expr::sym("i"), Expr::Const(1))]),
                Expr::Const(0)
            )
        );
    }

    #[test]
    fn unknown_variable_is_reported() {
        let theta = mem(&["i"], &[]);
        assert!(matches!(
            theta.apply(&Expr::sym("j")),
            Err(AnalysisError::UnknownVariable(v)) if v == "j"
        ));
    }

    #[test]
    fn compose_with_counters() {
        let mut theta = mem(&["a", "b"], &[]);
        theta.set("a", Expr::counter(1));
        theta.set("b", Expr::sub(Expr::sym("a"), Expr::counter(2)));
        let psi = Expr::add(Expr::mul(Expr::Const(2), Expr::sym("a")), Expr::sym("b"));
        assert_eq!(
            simplify(&theta.compose(&psi)),
            simplify(&Expr::Add(vec![
                Expr::mul(Expr::Const(2), Expr::counter(1)),
                Expr::sym("a"),
                Expr::neg(Expr::counter(2)),
            ]))
        );
    }

    #[test]
    fn sequential_effect() {
        let mut t1 = mem(&["a"], &[]);
        t1.set(
            "a",
            Expr::add(Expr::mul(Expr::Const(2), Expr::sym("a")), Expr::Const(1)),
        );
        let t2_a = Expr::sub(Expr::sym("a"), Expr::Const(2));
        assert_eq!(
            t1.compose(&t2_a),
            Expr::sub(
                Expr::add(Expr::mul(Expr::Const(2), Expr::sym("a")), Expr::Const(1)),
                Expr::Const(2)
            )
        );
    }

    #[test]
    fn initial_memory_is_identity() {
        let theta = mem(&["a", "b"], &["A"]);
        let psi = Expr::max(vec![Expr::sym("a"), Expr::array("A", vec![Expr::sym("b")])]);
        assert_eq!(theta.compose(&psi), psi);
    }
}
