use std::collections::{BTreeMap, BTreeSet};

use super::cnf::cnf_clauses;
use crate::symexpr::{simplify, to_poly, CounterId, CounterSplit, Expr, Formula, Rel};

/// `sum(coeffs[k] * k) < bound`, every coefficient at least 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterInequality {
    pub coeffs: BTreeMap<CounterId, i64>,
    pub bound: Expr,
}

/// `scale * base^counter < bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeometricInequality {
    pub base: i64,
    pub counter: CounterId,
    pub scale: Expr,
    pub bound: Expr,
}

fn singleton_atoms(phi: &Formula) -> Vec<(Rel, Expr, Expr)> {
    cnf_clauses(phi)
        .into_iter()
        .filter(|c| c.len() == 1)
        .filter_map(|c| match c.into_iter().next() {
            Some(Formula::Cmp(r, a, b)) => Some((r, a, b)),
            _ => None,
        })
        .collect()
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Counter inequalities read off the singleton clauses of the CNF of `phi`
/// that mention every counter of `required` with a positive coefficient.
pub fn extract_counter_inequalities(
    phi: &Formula,
    required: &BTreeSet<CounterId>,
) -> Vec<CounterInequality> {
    let mut out: Vec<CounterInequality> = Vec::new();
    for (rel, a, b) in singleton_atoms(phi) {
        // a - b rel 0, i.e. sum(c_k k) + base rel 0
        let Some(split) = CounterSplit::of(&simplify(&Expr::sub(a, b))) else {
            continue;
        };
        let Some(coeffs) = split.int_coeffs() else {
            continue;
        };
        if coeffs.is_empty() {
            continue;
        }
        let neg_base = Expr::neg(split.base.clone());
        let plus_one = |e: Expr| Expr::add(e, Expr::Const(1));
        let mut cands = Vec::new();
        match rel {
            Rel::Lt => cands.push((coeffs.clone(), neg_base)),
            Rel::Le => cands.push((coeffs.clone(), plus_one(neg_base))),
            Rel::Eq => {
                cands.push((coeffs.clone(), plus_one(neg_base)));
                let flipped = coeffs.iter().map(|(k, c)| (*k, -c)).collect();
                cands.push((flipped, plus_one(split.base.clone())));
            }
            Rel::Ne => {}
        }
        for (coeffs, bound) in cands {
            if coeffs.values().any(|c| *c <= 0) || !required.iter().all(|k| coeffs.contains_key(k))
            {
                continue;
            }
            let mut bound = simplify(&bound);
            if bound.contains_unknown() || !bound.is_kappa_free() {
                continue;
            }
            let mut coeffs = coeffs;
            let g = coeffs.values().fold(0, |g, c| gcd(g, *c));
            if let (true, Some(b)) = (g > 1, bound.as_const()) {
                // g*s < b  <=>  s <= floor((b-1)/g)
                coeffs.values_mut().for_each(|c| *c /= g);
                bound = Expr::Const((b - 1).div_euclid(g) + 1);
            }
            let ineq = CounterInequality { coeffs, bound };
            if !out.contains(&ineq) {
                out.push(ineq);
            }
        }
    }
    out
}

/// Geometric inequalities `a * c^k < b` for the single counter in `required`.
pub fn extract_geometric_inequalities(
    phi: &Formula,
    required: &BTreeSet<CounterId>,
) -> Vec<GeometricInequality> {
    let [k] = required.iter().copied().collect::<Vec<_>>()[..] else {
        return vec![];
    };
    let mut out = Vec::new();
    for (rel, a, b) in singleton_atoms(phi) {
        if !matches!(rel, Rel::Lt | Rel::Le) {
            continue;
        }
        let Some(p) = to_poly(&simplify(&Expr::sub(a, b))) else {
            continue;
        };
        let mut geo = None;
        let mut rest = Vec::new();
        let mut ok = true;
        for (mono, coef) in p.terms() {
            let Ok(coef) = i64::try_from(*coef) else {
                ok = false;
                break;
            };
            let term = |factors: Vec<Expr>| {
                let mut fs = vec![Expr::Const(coef)];
                fs.extend(factors);
                Expr::Mul(fs)
            };
            let pow_at = mono.iter().position(|f| power_of(f, k).is_some());
            match pow_at {
                Some(i) if geo.is_none() => {
                    let (base, shift) = power_of(&mono[i], k).unwrap();
                    let others: Vec<Expr> = mono
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, f)| f.clone())
                        .collect();
                    if others.iter().any(|f| !f.is_kappa_free()) {
                        ok = false;
                        break;
                    }
                    let mut scale = others;
                    if shift > 0 {
                        scale.push(Expr::pow(Expr::Const(base), Expr::Const(shift)));
                    }
                    geo = Some((base, term(scale)));
                }
                _ => {
                    if mono.iter().any(|f| !f.is_kappa_free()) {
                        ok = false;
                        break;
                    }
                    rest.push(term(mono.clone()));
                }
            }
        }
        let (true, Some((base, scale))) = (ok, geo) else {
            continue;
        };
        // scale*c^k + rest rel 0
        let mut bound = Expr::neg(Expr::Add(rest));
        if rel == Rel::Le {
            bound = Expr::add(bound, Expr::Const(1));
        }
        let (scale, bound) = (simplify(&scale), simplify(&bound));
        if scale.contains_unknown() || bound.contains_unknown() {
            continue;
        }
        let g = GeometricInequality {
            base,
            counter: k,
            scale,
            bound,
        };
        if !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

/// `c^(k + d)` with a constant `c >= 2` and constant `d >= 0`.
fn power_of(e: &Expr, k: CounterId) -> Option<(i64, i64)> {
    let Expr::Pow(b, x) = e else { return None };
    let base = b.as_const().filter(|c| *c >= 2)?;
    let split = CounterSplit::of(x)?;
    let coeffs = split.int_coeffs()?;
    if coeffs.len() != 1 || coeffs.get(&k) != Some(&1) {
        return None;
    }
    let shift = split.base.as_const().filter(|d| *d >= 0)?;
    Some((base, shift))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_formula;

    fn ks(ids: &[u32]) -> BTreeSet<CounterId> {
        ids.iter().map(|i| CounterId(*i)).collect()
    }

    fn nonzeros_condition() -> Formula {
        // one iteration of each path of the nonzeros loop, from i = k = 0
        let k1 = Expr::counter(1);
        let k2 = Expr::counter(2);
        let i = Expr::Add(vec![k1.clone(), k2.clone()]);
        let guard = Formula::and(vec![
            Formula::lt(i.clone(), Expr::sym("n")),
            Formula::lt(k1.clone(), Expr::Const(3)),
        ]);
        let read = Expr::array("A", vec![i]);
        Formula::or(vec![
            Formula::and(vec![
                guard.clone(),
                Formula::ne(read.clone(), Expr::Const(0)),
            ]),
            Formula::and(vec![guard, Formula::eq(read, Expr::Const(0))]),
        ])
    }

    #[test]
    fn nonzeros_inequalities() {
        let phi = nonzeros_condition();
        let both = extract_counter_inequalities(&phi, &ks(&[1, 2]));
        assert_eq!(both.len(), 1);
        assert_eq!(
            both[0].coeffs,
            [(CounterId(1), 1), (CounterId(2), 1)].into()
        );
        assert_eq!(both[0].bound, Expr::sym("n"));
        let one = extract_counter_inequalities(&phi, &ks(&[1]));
        assert_eq!(one.len(), 2);
        assert_eq!(one[1].coeffs, [(CounterId(1), 1)].into());
        assert_eq!(one[1].bound, Expr::Const(3));
    }

    #[test]
    fn non_strict_becomes_strict() {
        let phi = Formula::le(
            Expr::add(
                Expr::mul(Expr::Const(2), Expr::counter(1)),
                Expr::mul(Expr::Const(3), Expr::counter(2)),
            ),
            Expr::Const(6),
        );
        let got = extract_counter_inequalities(&phi, &ks(&[1]));
        assert_eq!(got[0].coeffs, [(CounterId(1), 2), (CounterId(2), 3)].into());
        assert_eq!(got[0].bound, Expr::Const(7));
    }

    #[test]
    fn gcd_reduction_on_constant_bounds() {
        // 2k < 7  <=>  k <= 3  <=>  k < 4
        let phi = Formula::lt(Expr::mul(Expr::Const(2), Expr::counter(1)), Expr::Const(7));
        let got = extract_counter_inequalities(&phi, &ks(&[1]));
        assert_eq!(got[0].coeffs, [(CounterId(1), 1)].into());
        assert_eq!(got[0].bound, Expr::Const(4));
    }

    #[test]
    fn equalities_and_nothing() {
        assert!(
            extract_counter_inequalities(&parse_formula("x < 3").unwrap(), &ks(&[1])).is_empty()
        );
        let phi = Formula::eq(Expr::counter(1), Expr::sym("m"));
        let got = extract_counter_inequalities(&phi, &ks(&[1]));
        assert_eq!(got.len(), 1);
        assert_eq!(
            got[0].bound,
            simplify(&Expr::add(Expr::sym("m"), Expr::Const(1)))
        );
        // decreasing counters give no upper bound
        let down = Formula::lt(Expr::neg(Expr::counter(1)), Expr::Const(3));
        assert!(extract_counter_inequalities(&down, &ks(&[1])).is_empty());
    }

    #[test]
    fn geometric_forms() {
        let phi = Formula::lt(
            Expr::mul(Expr::sym("a"), Expr::pow(Expr::Const(2), Expr::counter(1))),
            Expr::sym("n"),
        );
        let g = extract_geometric_inequalities(&phi, &ks(&[1]));
        assert_eq!(
            g,
            [GeometricInequality {
                base: 2,
                counter: CounterId(1),
                scale: Expr::sym("a"),
                bound: Expr::sym("n")
            }]
        );
        let phi = Formula::lt(
            Expr::pow(Expr::Const(3), Expr::counter(1)),
            Expr::Const(100),
        );
        let g = extract_geometric_inequalities(&phi, &ks(&[1]));
        assert_eq!(
            (g[0].base, &g[0].scale, &g[0].bound),
            (3, &Expr::Const(1), &Expr::Const(100))
        );
        assert!(
            extract_geometric_inequalities(&parse_formula("x < n").unwrap(), &ks(&[1])).is_empty()
        );
    }
}
