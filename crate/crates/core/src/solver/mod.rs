//! Satisfiability of necessary conditions and the counter inequalities they imply.
//!
//! The internal procedure only ever answers `Unsat` when it has a proof;
//! callers must treat `Unknown` like `Sat`.

mod cnf;
mod extract;
mod linear;
mod smtlib;

use serde::Serialize;

pub use cnf::{cnf_clauses, to_cnf, Clause, CNF_CLAUSE_CAP};
pub use extract::{
    extract_counter_inequalities, extract_geometric_inequalities, CounterInequality,
    GeometricInequality,
};
pub use smtlib::{emit_smtlib, ExternalSolver, ExternalSolverError};

use crate::symexpr::{simplify_formula, Formula};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SatResult {
    Sat,
    Unsat,
    Unknown,
}

/// The internal procedure, optionally backed by an external SMT solver that
/// is consulted when the internal one cannot decide.
#[derive(Clone, Debug, Default)]
pub struct Solver {
    pub external: Option<ExternalSolver>,
}

impl Solver {
    pub fn internal() -> Solver {
        Solver::default()
    }

    pub fn with_external(external: ExternalSolver) -> Solver {
        Solver {
            external: Some(external),
        }
    }

    pub fn is_satisfiable(&self, phi: &Formula) -> SatResult {
        match is_satisfiable(phi) {
            SatResult::Unknown => {}
            r => return r,
        }
        match &self.external {
            Some(ext) => ext.check(&emit_smtlib(phi)).unwrap_or(SatResult::Unknown),
            None => SatResult::Unknown,
        }
    }

    /// True when `context` proves `goal`.
    pub fn proves(&self, context: &Formula, goal: &Formula) -> bool {
        let phi = Formula::And(vec![context.clone(), goal.negate()]);
        self.is_satisfiable(&phi) == SatResult::Unsat
    }
}

/// The internal procedure alone.
pub fn is_satisfiable(phi: &Formula) -> SatResult {
    let phi = simplify_formula(phi);
    match phi {
        Formula::True => return SatResult::Sat,
        Formula::False => return SatResult::Unsat,
        _ => {}
    }
    if let linear::Verdict::Unsat = linear::refute(&phi) {
        return SatResult::Unsat;
    }
    if linear::find_model(&phi).is_some() {
        SatResult::Sat
    } else {
        SatResult::Unknown
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_formula;
    use crate::symexpr::Expr;

    fn sat(s: &str) -> SatResult {
        is_satisfiable(&parse_formula(s).unwrap())
    }

    #[test]
    fn basic_answers() {
        assert_eq!(sat("false"), SatResult::Unsat);
        assert_eq!(sat("x < 0 && x > 0"), SatResult::Unsat);
        assert_eq!(sat("x < 0 || x > 0"), SatResult::Sat);
        // the nonzeros condition at k1 = k2 = 0
        let r = sat("0 < n && 0 < 3 && A[0] != 0");
        assert_ne!(r, SatResult::Unsat);
    }

    #[test]
    fn integer_reasoning() {
        assert_eq!(sat("2*x == 1"), SatResult::Unsat);
        assert_eq!(sat("x < y && y < x + 1"), SatResult::Unsat);
        assert_eq!(sat("3 <= 2*x && 2*x <= 3"), SatResult::Unsat);
        assert_eq!(sat("x != x"), SatResult::Unsat);
        assert_eq!(sat("a == b && b == c && c != a"), SatResult::Unsat);
    }

    #[test]
    fn opaque_terms_get_axioms() {
        let m = Expr::max(vec![Expr::Const(0), Expr::sym("n")]);
        let phi = Formula::lt(m.clone(), Expr::Const(0));
        assert_eq!(is_satisfiable(&phi), SatResult::Unsat);
        let phi = Formula::and(vec![Formula::lt(m, Expr::sym("n"))]);
        assert_eq!(is_satisfiable(&phi), SatResult::Unsat);
        let c = Expr::ceil(Expr::sym("x"), Expr::Const(2));
        let phi = Formula::and(vec![
            Formula::le(Expr::sym("x"), Expr::Const(4)),
            Formula::lt(Expr::Const(2), c),
        ]);
        assert_eq!(is_satisfiable(&phi), SatResult::Unsat);
    }

    #[test]
    fn nonlinear_is_never_refuted_wrongly() {
        // x*x < 0 has no model, but proving it needs more than linear reasoning
        assert_ne!(sat("x*y == 7 && x == 1 && y == 7"), SatResult::Unsat);
        assert_eq!(sat("A[i] < A[j] && A[j] < A[i]"), SatResult::Unsat);
        assert_ne!(sat("A[i] < A[j]"), SatResult::Unsat);
    }

    #[test]
    fn proves_implications() {
        let s = Solver::internal();
        let ctx = parse_formula("1 <= n").unwrap();
        assert!(s.proves(&ctx, &parse_formula("0 < n").unwrap()));
        assert!(!s.proves(&ctx, &parse_formula("2 <= n").unwrap()));
    }
}
