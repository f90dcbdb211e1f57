use std::collections::{BTreeMap, BTreeSet};

use loopbound::solver::{
    cnf_clauses, extract_counter_inequalities, is_satisfiable, to_cnf, SatResult, CNF_CLAUSE_CAP,
};
use loopbound::symexpr::{
    match_affine_counter_form, simplify, simplify_formula, substitute, CounterId, Expr, Formula,
    Rel, SubstKey, Valuation,
};
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-5i64..=5).prop_map(Expr::Const),
        prop::sample::select(vec!["x", "y", "z"]).prop_map(Expr::sym),
        (1u32..=2).prop_map(Expr::counter),
    ]
}

fn rel() -> impl Strategy<Value = Rel> {
    prop::sample::select(vec![Rel::Lt, Rel::Le, Rel::Eq, Rel::Ne])
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Expr::Add),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Expr::max),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Expr::min),
            (inner.clone(), 1i64..=4).prop_map(|(a, d)| Expr::ceil(a, Expr::Const(d))),
            (inner.clone(), 1i64..=4).prop_map(|(a, d)| Expr::floor(a, Expr::Const(d))),
            (inner.clone(), -3i64..=3).prop_map(|(a, d)| Expr::div(a, Expr::Const(d))),
            (rel(), inner.clone(), inner.clone(), inner.clone(), inner)
                .prop_map(|(r, a, b, t, e)| Expr::ite(Formula::Cmp(r, a, b), t, e)),
        ]
    })
}

/// Linear terms over x, y and both counters.
fn linear() -> impl Strategy<Value = Expr> {
    (prop::collection::vec((-3i64..=3, leaf()), 1..=3), -6i64..=6).prop_map(|(terms, c)| {
        let mut xs: Vec<Expr> = terms.into_iter().map(|(a, l)| Expr::mul(Expr::Const(a), l)).collect();
        xs.push(Expr::Const(c));
        Expr::Add(xs)
    })
}

fn formula_over(atom: BoxedStrategy<Formula>, depth: u32) -> impl Strategy<Value = Formula> {
    atom.prop_recursive(depth, 16, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Formula::And),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Formula::Or),
            inner.prop_map(|f| Formula::Not(Box::new(f))),
        ]
    })
}

fn linear_formula() -> impl Strategy<Value = Formula> {
    let atom = (rel(), linear(), linear()).prop_map(|(r, a, b)| Formula::Cmp(r, a, b)).boxed();
    formula_over(atom, 3)
}

fn formula() -> impl Strategy<Value = Formula> {
    let atom = (rel(), expr(), expr()).prop_map(|(r, a, b)| Formula::Cmp(r, a, b)).boxed();
    formula_over(atom, 2)
}

fn valuation() -> impl Strategy<Value = Valuation> {
    (prop::array::uniform3(-12i64..=12), prop::array::uniform2(0i64..=8)).prop_map(|(s, k)| {
        Valuation::new()
            .with_symbol("x", s[0])
            .with_symbol("y", s[1])
            .with_symbol("z", s[2])
            .with_counter(1, k[0])
            .with_counter(2, k[1])
    })
}

fn valuations() -> impl Strategy<Value = Vec<Valuation>> {
    prop::collection::vec(valuation(), 16)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn simplify_keeps_defined_values(e in expr(), vs in valuations()) {
        let s = simplify(&e);
        for v in &vs {
            if let Some(a) = v.eval(&e) {
                prop_assert_eq!(v.eval(&s), Some(a), "{} became {}", e, s);
            }
        }
    }

    #[test]
    fn simplify_is_idempotent(e in expr()) {
        let once = simplify(&e);
        prop_assert_eq!(simplify(&once), once);
    }

    #[test]
    fn simplify_formula_keeps_truth(f in formula(), vs in valuations()) {
        let s = simplify_formula(&f);
        for v in &vs {
            if let Some(b) = v.eval_formula(&f) {
                prop_assert_eq!(v.eval_formula(&s), Some(b), "{:?} became {:?}", f, s);
            }
        }
    }

    #[test]
    fn substitution_commutes_with_evaluation(e in expr(), t in expr(), u in expr(), vs in valuations()) {
        let bind = BTreeMap::from([
            (SubstKey::Symbol("x".into()), t.clone()),
            (SubstKey::Counter(CounterId(1)), u.clone()),
        ]);
        let replaced = substitute(&e, &bind);
        for v in &vs {
            let (Some(tv), Some(uv)) = (v.eval(&t), v.eval(&u)) else { continue };
            let (Ok(tv), Ok(uv)) = (i64::try_from(tv), i64::try_from(uv)) else { continue };
            let w = v.clone().with_symbol("x", tv).with_counter(1, uv);
            if let Some(a) = w.eval(&e) {
                prop_assert_eq!(v.eval(&replaced), Some(a));
            }
        }
    }

    #[test]
    fn substitution_is_simultaneous(e in expr(), vs in valuations()) {
        let swap = BTreeMap::from([
            (SubstKey::Symbol("x".into()), Expr::sym("y")),
            (SubstKey::Symbol("y".into()), Expr::sym("x")),
        ]);
        let twice = substitute(&substitute(&e, &swap), &swap);
        for v in &vs {
            prop_assert_eq!(v.eval(&twice), v.eval(&e));
        }
    }

    #[test]
    fn affine_form_round_trips(
        c in -5i64..=5,
        b in linear(),
        a1 in -3i64..=3,
        a2 in prop::option::of(-3i64..=3),
        vs in valuations(),
    ) {
        prop_assume!(a1 != 0);
        let b = substitute(&b, &BTreeMap::from([
            (SubstKey::Counter(CounterId(1)), Expr::Const(0)),
            (SubstKey::Counter(CounterId(2)), Expr::Const(0)),
        ]));
        let mut lin = vec![b, Expr::mul(Expr::Const(a1), Expr::counter(1))];
        if let Some(a2) = a2 {
            lin.push(Expr::mul(Expr::Const(a2), Expr::counter(2)));
        }
        let e = simplify(&Expr::max(vec![Expr::Const(c), Expr::Add(lin)]));
        let m = match_affine_counter_form(&e);
        prop_assert!(m.is_some(), "no match for {}", e);
        let m = m.unwrap();
        prop_assert!(m.c.is_kappa_free() && m.b.is_kappa_free());
        prop_assert!(m.coeffs.values().all(Expr::is_kappa_free));
        prop_assert!(m.coeffs.contains_key(&CounterId(1)));
        let back = m.to_expr();
        for v in &vs {
            prop_assert_eq!(v.eval(&back), v.eval(&e));
        }
    }

    #[test]
    fn kappa_free_expressions_are_not_affine_forms(e in expr()) {
        let free = substitute(&e, &BTreeMap::from([
            (SubstKey::Counter(CounterId(1)), Expr::Const(1)),
            (SubstKey::Counter(CounterId(2)), Expr::Const(2)),
        ]));
        prop_assert!(match_affine_counter_form(&simplify(&free)).is_none());
    }

    #[test]
    fn cnf_is_implied_and_exact_below_the_cap(f in linear_formula(), vs in valuations()) {
        let cnf = to_cnf(&f);
        let exact = cnf_clauses(&f).len() < CNF_CLAUSE_CAP;
        for v in &vs {
            let Some(orig) = v.eval_formula(&f) else { continue };
            let conv = v.eval_formula(&cnf);
            if orig {
                prop_assert_eq!(conv, Some(true), "{:?}", f);
            } else if exact {
                prop_assert_eq!(conv, Some(false), "{:?}", f);
            }
        }
    }

    #[test]
    fn unsat_is_never_wrong(f in linear_formula(), vs in prop::collection::vec(valuation(), 64)) {
        if is_satisfiable(&f) == SatResult::Unsat {
            for v in &vs {
                prop_assert_ne!(v.eval_formula(&f), Some(true), "{:?}", f);
            }
        }
    }

    #[test]
    fn extracted_inequalities_are_implied(f in linear_formula(), vs in prop::collection::vec(valuation(), 64)) {
        for required in [vec![1u32], vec![2], vec![1, 2]] {
            let ids: BTreeSet<CounterId> = required.into_iter().map(CounterId).collect();
            for ineq in extract_counter_inequalities(&f, &ids) {
                prop_assert!(ineq.coeffs.values().all(|c| *c >= 1));
                prop_assert!(ids.iter().all(|k| ineq.coeffs.contains_key(k)));
                let lhs = Expr::Add(
                    ineq.coeffs.iter().map(|(k, c)| Expr::mul(Expr::Const(*c), Expr::Counter(*k))).collect(),
                );
                let implied = Formula::lt(lhs, ineq.bound.clone());
                for v in &vs {
                    if v.eval_formula(&f) == Some(true) {
                        prop_assert_eq!(v.eval_formula(&implied), Some(true), "{:?} from {:?}", ineq, f);
                    }
                }
            }
        }
    }
}

#[test]
fn unsat_is_reached_on_simple_contradictions() {
    let x = Expr::sym("x");
    let f = Formula::And(vec![
        Formula::lt(x.clone(), Expr::Const(0)),
        Formula::lt(Expr::Const(3), x),
    ]);
    assert_eq!(is_satisfiable(&f), SatResult::Unsat);
}
