use std::collections::BTreeMap;

use super::{CounterId, Expr, Formula};

/// A substitutable leaf: an input symbol or a path counter.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SubstKey {
    Symbol(String),
    Counter(CounterId),
}

/// Simultaneous substitution. Inserted terms are never revisited, so
/// `{x -> y, y -> x}` swaps the two.
pub fn substitute(e: &Expr, bindings: &BTreeMap<SubstKey, Expr>) -> Expr {
    if bindings.is_empty() {
        return e.clone();
    }
    map_leaves(e, &|leaf| match leaf {
        Expr::Symbol(s) => bindings.get(&SubstKey::Symbol(s.clone())).cloned(),
        Expr::Counter(c) => bindings.get(&SubstKey::Counter(*c)).cloned(),
        _ => None,
    })
}

pub fn substitute_formula(f: &Formula, bindings: &BTreeMap<SubstKey, Expr>) -> Formula {
    if bindings.is_empty() {
        return f.clone();
    }
    map_formula_leaves(f, &|leaf| match leaf {
        Expr::Symbol(s) => bindings.get(&SubstKey::Symbol(s.clone())).cloned(),
        Expr::Counter(c) => bindings.get(&SubstKey::Counter(*c)).cloned(),
        _ => None,
    })
}

/// Rebuilds `e`, replacing every leaf for which `f` returns a value.
pub(crate) fn map_leaves(e: &Expr, f: &dyn Fn(&Expr) -> Option<Expr>) -> Expr {
    let many = |xs: &[Expr]| xs.iter().map(|x| map_leaves(x, f)).collect::<Vec<_>>();
    let one = |x: &Expr| Box::new(map_leaves(x, f));
    match e {
        Expr::Const(_) | Expr::Symbol(_) | Expr::Counter(_) | Expr::Index(_) | Expr::Unknown => {
            f(e).unwrap_or_else(|| e.clone())
        }
        Expr::ArrayRead(a, args) => Expr::ArrayRead(a.clone(), many(args)),
        Expr::Add(xs) => Expr::Add(many(xs)),
        Expr::Mul(xs) => Expr::Mul(many(xs)),
        Expr::Max(xs) => Expr::Max(many(xs)),
        Expr::Min(xs) => Expr::Min(many(xs)),
        Expr::Sub(a, b) => Expr::Sub(one(a), one(b)),
        Expr::Div(a, b) => Expr::Div(one(a), one(b)),
        Expr::Ceil(a, b) => Expr::Ceil(one(a), one(b)),
        Expr::Floor(a, b) => Expr::Floor(one(a), one(b)),
        Expr::Pow(a, b) => Expr::Pow(one(a), one(b)),
        Expr::Log(base, a) => Expr::Log(*base, one(a)),
        Expr::Ite(c, a, b) => Expr::Ite(Box::new(map_formula_leaves(c, f)), one(a), one(b)),
        Expr::Sum {
            index,
            lower,
            upper,
            body,
        } => Expr::Sum {
            index: index.clone(),
            lower: one(lower),
            upper: one(upper),
            body: one(body),
        },
    }
}

pub(crate) fn map_formula_leaves(phi: &Formula, f: &dyn Fn(&Expr) -> Option<Expr>) -> Formula {
    match phi {
        Formula::True | Formula::False => phi.clone(),
        Formula::Cmp(r, a, b) => Formula::Cmp(*r, map_leaves(a, f), map_leaves(b, f)),
        Formula::And(xs) => Formula::And(xs.iter().map(|x| map_formula_leaves(x, f)).collect()),
        Formula::Or(xs) => Formula::Or(xs.iter().map(|x| map_formula_leaves(x, f)).collect()),
        Formula::Not(x) => Formula::Not(Box::new(map_formula_leaves(x, f))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: Vec<(SubstKey, Expr)>) -> BTreeMap<SubstKey, Expr> {
        pairs.into_iter().collect()
    }

    #[test]
    fn decrement_counter() {
        let e = Expr::add(Expr::counter(1), Expr::counter(2));
        let b = bind(vec![(
            SubstKey::Counter(CounterId(1)),
            Expr::sub(Expr::counter(1), Expr::Const(1)),
        )]);
        assert_eq!(
            substitute(&e, &b),
            Expr::add(
                Expr::sub(Expr::counter(1), Expr::Const(1)),
                Expr::counter(2)
            )
        );
    }

    #[test]
    fn absent_key_is_identity() {
        let b = bind(vec![(SubstKey::Symbol("y".into()), Expr::Const(5))]);
        assert_eq!(substitute(&Expr::sym("x"), &b), Expr::sym("x"));
    }

    #[test]
    fn no_cascading() {
        let x = Expr::sym("x");
        let e = Expr::add(x.clone(), x.clone());
        let xp1 = Expr::add(x.clone(), Expr::Const(1));
        let b = bind(vec![(SubstKey::Symbol("x".into()), xp1.clone())]);
        assert_eq!(substitute(&e, &b), Expr::add(xp1.clone(), xp1));
    }

    #[test]
    fn swap_is_simultaneous() {
        let e = Expr::sub(Expr::sym("x"), Expr::mul(Expr::Const(2), Expr::sym("y")));
        let b = bind(vec![
            (SubstKey::Symbol("x".into()), Expr::sym("y")),
            (SubstKey::Symbol("y".into()), Expr::sym("x")),
        ]);
        assert_eq!(
            substitute(&e, &b),
            Expr::sub(Expr::sym("y"), Expr::mul(Expr::Const(2), Expr::sym("x")))
        );
    }
}
