use std::collections::BTreeMap;

use super::simplify::{simplify, to_poly};
use super::{CounterId, Expr};

/// `e = base + sum(coeffs[k] * k)` with `base` and every coefficient κ-free.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterSplit {
    pub base: Expr,
    pub coeffs: BTreeMap<CounterId, Expr>,
}

impl CounterSplit {
    /// Splits an expression that is linear in the path counters.
    pub fn of(e: &Expr) -> Option<CounterSplit> {
        let p = to_poly(e)?;
        let mut base = Vec::new();
        let mut coeffs: BTreeMap<CounterId, Vec<Expr>> = BTreeMap::new();
        for (mono, c) in p.terms() {
            let c = i64::try_from(*c).ok()?;
            let counters: Vec<usize> = mono
                .iter()
                .enumerate()
                .filter(|(_, f)| matches!(f, Expr::Counter(_)))
                .map(|(i, _)| i)
                .collect();
            let rest: Vec<Expr> = mono
                .iter()
                .enumerate()
                .filter(|(i, _)| !counters.contains(i))
                .map(|(_, f)| f.clone())
                .collect();
            if rest.iter().any(|f| !f.is_kappa_free()) {
                return None;
            }
            let mut term = vec![Expr::Const(c)];
            term.extend(rest);
            match counters.as_slice() {
                [] => base.push(Expr::Mul(term)),
                [i] => {
                    let Expr::Counter(k) = mono[*i] else {
                        unreachable!()
                    };
                    coeffs.entry(k).or_default().push(Expr::Mul(term));
                }
                _ => return None,
            }
        }
        Some(CounterSplit {
            base: simplify(&Expr::Add(base)),
            coeffs: coeffs
                .into_iter()
                .map(|(k, ts)| (k, simplify(&Expr::Add(ts))))
                .filter(|(_, a)| !a.is_zero())
                .collect(),
        })
    }

    /// Integer coefficients, when every coefficient is a constant.
    pub fn int_coeffs(&self) -> Option<BTreeMap<CounterId, i64>> {
        self.coeffs
            .iter()
            .map(|(k, a)| a.as_const().map(|c| (*k, c)))
            .collect()
    }

    pub fn to_expr(&self) -> Expr {
        let mut terms = vec![self.base.clone()];
        for (k, a) in &self.coeffs {
            terms.push(Expr::mul(a.clone(), Expr::Counter(*k)));
        }
        Expr::Add(terms)
    }
}

/// `max{c, b + sum(a_i * k_i)}` with `c`, `b` and every `a_i` κ-free.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineCounterForm {
    pub c: Expr,
    pub b: Expr,
    pub coeffs: BTreeMap<CounterId, Expr>,
}

impl AffineCounterForm {
    pub fn to_expr(&self) -> Expr {
        let split = CounterSplit {
            base: self.b.clone(),
            coeffs: self.coeffs.clone(),
        };
        Expr::max(vec![self.c.clone(), split.to_expr()])
    }
}

/// Reads `e` (already simplified) as `max{c, b + sum(a_i * k_i)}`. κ-free
/// expressions do not match.
pub fn match_affine_counter_form(e: &Expr) -> Option<AffineCounterForm> {
    let Expr::Max(items) = e else { return None };
    let (with_k, free): (Vec<&Expr>, Vec<&Expr>) = items.iter().partition(|x| !x.is_kappa_free());
    let [linear] = with_k.as_slice() else {
        return None;
    };
    if free.is_empty() {
        return None;
    }
    let split = CounterSplit::of(linear)?;
    if split.coeffs.is_empty() {
        return None;
    }
    let c = if free.len() == 1 {
        free[0].clone()
    } else {
        simplify(&Expr::Max(free.into_iter().cloned().collect()))
    };
    Some(AffineCounterForm {
        c,
        b: split.base,
        coeffs: split.coeffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bubble_sort_inner_bound_matches() {
        let e = simplify(&Expr::max(vec![
            Expr::Const(0),
            Expr::sub(Expr::sub(Expr::sym("n"), Expr::counter(1)), Expr::Const(1)),
        ]));
        let m = match_affine_counter_form(&e).unwrap();
        assert_eq!(m.c, Expr::Const(0));
        assert_eq!(m.b, simplify(&Expr::sub(Expr::sym("n"), Expr::Const(1))));
        assert_eq!(m.coeffs.get(&CounterId(1)), Some(&Expr::Const(-1)));
    }

    #[test]
    fn plain_sum_does_not_match() {
        let e = simplify(&Expr::add(Expr::sym("n"), Expr::Const(5)));
        assert!(match_affine_counter_form(&e).is_none());
        let free = simplify(&Expr::max(vec![Expr::Const(0), Expr::sym("n")]));
        assert!(match_affine_counter_form(&free).is_none());
    }

    #[test]
    fn multi_counter_form() {
        let e = simplify(&Expr::max(vec![
            Expr::Const(1),
            Expr::Add(vec![
                Expr::Const(2),
                Expr::mul(Expr::Const(3), Expr::counter(1)),
                Expr::counter(2),
            ]),
        ]));
        let m = match_affine_counter_form(&e).unwrap();
        assert_eq!(m.c, Expr::Const(1));
        assert_eq!(m.b, Expr::Const(2));
        assert_eq!(m.coeffs[&CounterId(1)], Expr::Const(3));
        assert_eq!(m.coeffs[&CounterId(2)], Expr::Const(1));
    }

    #[test]
    fn symbolic_coefficients_split() {
        // n*k1 + 2*k1 + m
        let e = Expr::Add(vec![
            Expr::mul(Expr::sym("n"), Expr::counter(1)),
            Expr::mul(Expr::Const(2), Expr::counter(1)),
            Expr::sym("m"),
        ]);
        let s = CounterSplit::of(&e).unwrap();
        assert_eq!(s.base, Expr::sym("m"));
        assert_eq!(
            s.coeffs[&CounterId(1)],
            simplify(&Expr::add(Expr::sym("n"), Expr::Const(2)))
        );
        assert!(s.int_coeffs().is_none());
        assert!(CounterSplit::of(&Expr::mul(Expr::counter(1), Expr::counter(2))).is_none());
    }
}
