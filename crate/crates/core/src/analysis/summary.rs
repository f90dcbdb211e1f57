//! Parametrized memories: the value of every scalar after `k_i` iterations
//! along each loop path `i`, in any order.

use std::collections::BTreeMap;

use crate::symexpr::{
    simplify, substitute, to_poly, CounterId, Expr, Formula, SubstKey, SymbolicMemory,
};

/// `paths[i]` is the effect of one iteration along path `i`, whose counter is
/// `counters[i]`. Values that cannot be summarized exactly are `Unknown`.
pub fn compute_summary(paths: &[SymbolicMemory], counters: &[CounterId]) -> SymbolicMemory {
    assert_eq!(paths.len(), counters.len());
    let Some(first) = paths.first() else {
        return SymbolicMemory::default();
    };
    let names: Vec<String> = first.scalar_names().cloned().collect();
    let mut summary = first.map_values(|_| Expr::Unknown);
    loop {
        let mut changed = false;
        for a in &names {
            if summary.get(a) != Some(&Expr::Unknown) {
                continue;
            }
            if let Some(v) = improve(a, paths, counters, &summary) {
                summary.set(a.clone(), v);
                changed = true;
            }
        }
        if !changed {
            return summary;
        }
    }
}

fn value<'m>(m: &'m SymbolicMemory, a: &str) -> &'m Expr {
    m.get(a).expect("all path memories share one set of scalars")
}

/// `summary<e>`, simplified, when it is free of counters and of `Unknown`.
fn stable(summary: &SymbolicMemory, e: &Expr) -> Option<Expr> {
    let v = simplify(&summary.compose(e));
    (v.is_kappa_free() && !v.contains_unknown()).then_some(v)
}

fn improve(
    a: &str,
    paths: &[SymbolicMemory],
    counters: &[CounterId],
    summary: &SymbolicMemory,
) -> Option<Expr> {
    let own = Expr::sym(a);
    let vals: Vec<Expr> = paths.iter().map(|m| simplify(value(m, a))).collect();

    if vals.iter().all(|v| *v == own) {
        return Some(own);
    }

    // additive
    let steps: Option<Vec<Expr>> = vals
        .iter()
        .map(|v| stable(summary, &simplify(&Expr::sub(v.clone(), own.clone()))))
        .collect();
    if let Some(steps) = steps {
        let mut terms = vec![own.clone()];
        for (d, k) in steps.into_iter().zip(counters) {
            terms.push(Expr::mul(d, Expr::Counter(*k)));
        }
        return Some(simplify(&Expr::Add(terms)));
    }

    // multiplicative
    let factors: Option<Vec<Expr>> = vals
        .iter()
        .map(|v| factor_of(v, a).and_then(|d| stable(summary, &d)))
        .collect();
    if let Some(factors) = factors {
        let mut terms = vec![own.clone()];
        for (d, k) in factors.into_iter().zip(counters) {
            if d != Expr::Const(1) {
                terms.push(Expr::pow(d, Expr::Counter(*k)));
            }
        }
        return Some(simplify(&Expr::Mul(terms)));
    }

    let changing: Vec<usize> = (0..vals.len()).filter(|i| vals[*i] != own).collect();

    // reset to a common value
    let d = &vals[changing[0]];
    if changing.iter().all(|i| vals[*i] == *d) {
        if let Some(d) = stable(summary, d) {
            let ks = changing.iter().map(|i| Expr::Counter(counters[*i])).collect();
            let cond = Formula::lt(Expr::Const(0), Expr::Add(ks));
            return Some(simplify(&Expr::ite(cond, d, own)));
        }
    }

    // set by a single path
    if let [i] = changing[..] {
        let k = counters[i];
        let v = simplify(&summary.compose(&vals[i]));
        if !v.contains_unknown() && v.counters().iter().all(|c| *c == k) {
            let prev = BTreeMap::from([(
                SubstKey::Counter(k),
                Expr::sub(Expr::Counter(k), Expr::Const(1)),
            )]);
            let cond = Formula::lt(Expr::Const(0), Expr::Counter(k));
            return Some(simplify(&Expr::ite(
                cond,
                substitute(&v, &prev),
                own,
            )));
        }
    }
    None
}

/// `d` with `v = a * d`, where `d` does not mention `a`.
fn factor_of(v: &Expr, a: &str) -> Option<Expr> {
    let own = Expr::sym(a);
    if *v == own {
        return Some(Expr::Const(1));
    }
    let p = to_poly(v)?;
    let mut terms = Vec::new();
    for (mono, c) in p.terms() {
        let at = mono.iter().position(|f| *f == own)?;
        let rest: Vec<Expr> = mono
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != at)
            .map(|(_, f)| f.clone())
            .collect();
        if rest.iter().any(|f| f.contains_symbol(a)) {
            return None;
        }
        let mut t = vec![Expr::Const(i64::try_from(*c).ok()?)];
        t.extend(rest);
        terms.push(Expr::Mul(t));
    }
    let d = simplify(&Expr::Add(terms));
    (!d.contains_symbol(a)).then_some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_expr;

    fn memory(vars: &[&str], sets: &[(&str, &str)]) -> SymbolicMemory {
        let names: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        let mut m = SymbolicMemory::initial(&names, &[]);
        for (v, e) in sets {
            m.set(*v, parse_expr(e).unwrap());
        }
        m
    }

    /// Parses `e`, reading `k1` and `k2` as path counters.
    fn kexpr(e: &str) -> Expr {
        let b = BTreeMap::from([
            (SubstKey::Symbol("k1".into()), Expr::counter(1)),
            (SubstKey::Symbol("k2".into()), Expr::counter(2)),
        ]);
        simplify(&substitute(&parse_expr(e).unwrap(), &b))
    }

    fn show(m: &SymbolicMemory, v: &str) -> String {
        m.get(v).unwrap().to_string()
    }

    const K: [CounterId; 2] = [CounterId(1), CounterId(2)];

    #[test]
    fn nonzeros_counters() {
        let p1 = memory(&["i", "k"], &[("i", "i + 1"), ("k", "k + 1")]);
        let p2 = memory(&["i", "k"], &[("i", "i + 1")]);
        let s = compute_summary(&[p1, p2], &K);
        assert_eq!(*s.get("i").unwrap(), kexpr("i + k1 + k2"));
        assert_eq!(*s.get("k").unwrap(), kexpr("k + k1"));
    }

    #[test]
    fn step_must_be_invariant() {
        let p1 = memory(&["x", "y"], &[("x", "x + y")]);
        let p2 = memory(&["x", "y"], &[("y", "y + 1")]);
        let s = compute_summary(&[p1, p2], &K);
        assert_eq!(show(&s, "x"), "*");
        assert_eq!(*s.get("y").unwrap(), kexpr("y + k2"));
    }

    #[test]
    fn later_rounds_use_earlier_results() {
        // x depends on y, which is resolved only in the same pass after x
        let p = memory(&["x", "y"], &[("x", "x + y")]);
        let s = compute_summary(&[p], &K[..1]);
        assert_eq!(*s.get("x").unwrap(), kexpr("x + y * k1"));
    }

    #[test]
    fn doubling() {
        let p = memory(&["i"], &[("i", "2 * i")]);
        let s = compute_summary(&[p], &K[..1]);
        let want = simplify(&Expr::mul(Expr::sym("i"), Expr::pow(Expr::Const(2), Expr::counter(1))));
        assert_eq!(*s.get("i").unwrap(), want);
    }

    #[test]
    fn resets_and_single_writers() {
        let p1 = memory(&["f", "i", "t"], &[("f", "0"), ("i", "i + 1"), ("t", "i")]);
        let p2 = memory(&["f", "i", "t"], &[("f", "0")]);
        let s = compute_summary(&[p1, p2], &K);
        let f = s.get("f").unwrap();
        let v = |k1: i64, k2: i64| {
            crate::symexpr::Valuation::new()
                .with_symbol("f", 7)
                .with_symbol("i", 10)
                .with_symbol("t", 3)
                .with_counter(1, k1)
                .with_counter(2, k2)
        };
        assert_eq!(v(0, 0).eval(f), Some(7));
        assert_eq!(v(0, 2).eval(f), Some(0));
        let t = s.get("t").unwrap();
        assert_eq!(v(0, 5).eval(t), Some(3));
        // the last write happened after k1 - 1 increments
        assert_eq!(v(4, 5).eval(t), Some(13));
    }
}
