use std::collections::BTreeSet;

use crate::symexpr::{simplify_formula, Formula};

/// Upper limit on the clauses produced by distributing one disjunction.
pub const CNF_CLAUSE_CAP: usize = 64;

/// A clause is a sorted set of canonical atoms; the empty clause is false.
pub type Clause = BTreeSet<Formula>;

/// Clauses of a CNF implied by `phi`. Equivalent to `phi` unless a
/// distribution exceeded [`CNF_CLAUSE_CAP`]; such a disjunction contributes
/// only the clauses shared by all of its disjuncts.
pub fn cnf_clauses(phi: &Formula) -> Vec<Clause> {
    let mut out = clauses(phi);
    prune(&mut out);
    out
}

/// [`cnf_clauses`] as a formula.
pub fn to_cnf(phi: &Formula) -> Formula {
    let cs = cnf_clauses(phi);
    let mut conj: Vec<Formula> = cs
        .into_iter()
        .map(|c| {
            let mut lits: Vec<Formula> = c.into_iter().collect();
            match lits.len() {
                0 => Formula::False,
                1 => lits.pop().unwrap(),
                _ => Formula::Or(lits),
            }
        })
        .collect();
    match conj.len() {
        0 => Formula::True,
        1 => conj.pop().unwrap(),
        _ => Formula::And(conj),
    }
}

fn clauses(phi: &Formula) -> Vec<Clause> {
    match phi {
        Formula::True => vec![],
        Formula::False => vec![Clause::new()],
        Formula::Not(x) => clauses(&x.negate()),
        Formula::Cmp(..) => match simplify_formula(phi) {
            s @ Formula::Cmp(..) => vec![[s].into()],
            s => clauses(&s),
        },
        Formula::And(xs) => {
            let mut out = Vec::new();
            for x in xs {
                for c in clauses(x) {
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
            }
            out
        }
        Formula::Or(xs) => {
            let parts: Vec<Vec<Clause>> = xs.iter().map(clauses).collect();
            if parts.iter().any(Vec::is_empty) {
                return vec![];
            }
            let size = parts
                .iter()
                .try_fold(1usize, |acc, p| acc.checked_mul(p.len()));
            if size.is_some_and(|s| s <= CNF_CLAUSE_CAP) {
                let mut acc: Vec<Clause> = vec![Clause::new()];
                for p in &parts {
                    let mut next = Vec::new();
                    for a in &acc {
                        for b in p {
                            let c: Clause = a.union(b).cloned().collect();
                            if !tautology(&c) && !next.contains(&c) {
                                next.push(c);
                            }
                        }
                    }
                    acc = next;
                }
                acc
            } else {
                // Too large: keep what every disjunct states on its own.
                let (first, rest) = parts.split_first().unwrap();
                first
                    .iter()
                    .filter(|c| rest.iter().all(|p| p.iter().any(|d| d.is_subset(c))))
                    .cloned()
                    .collect()
            }
        }
    }
}

fn tautology(c: &Clause) -> bool {
    c.iter().any(|l| c.contains(&simplify_formula(&l.negate())))
}

/// Drops clauses subsumed by a smaller one.
fn prune(cs: &mut Vec<Clause>) {
    let all = cs.clone();
    cs.retain(|c| !all.iter().any(|d| d != c && d.is_subset(c)));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_formula;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn distributes_disjunctions() {
        let got = to_cnf(&f("(p < 1 && q < 1) || r < 1"));
        let want = f("(p < 1 || r < 1) && (q < 1 || r < 1)");
        assert_eq!(got, to_cnf(&want));
        assert_eq!(cnf_clauses(&got).len(), 2);
    }

    #[test]
    fn cnf_input_is_kept() {
        let phi = simplify_formula(&f("(a < b || c == 2) && d <= 4"));
        assert_eq!(to_cnf(&phi), phi);
    }

    #[test]
    fn shared_conjuncts_become_singletons() {
        let phi = f("(i < n && k < 3 && A[i] != 0) || (i < n && k < 3 && A[i] == 0)");
        let singles: Vec<Formula> = cnf_clauses(&phi)
            .into_iter()
            .filter(|c| c.len() == 1)
            .flat_map(|c| c.into_iter())
            .collect();
        assert_eq!(
            singles,
            [simplify_formula(&f("i < n")), simplify_formula(&f("k < 3"))]
        );
    }

    #[test]
    fn cap_keeps_common_clauses() {
        // 8 disjuncts with 3 clauses each: 3^8 combinations
        let disj: Vec<String> = (0..8)
            .map(|i| format!("(x < 5 && y{i} < 1 && z{i} < 1)"))
            .collect();
        let phi = f(&disj.join(" || "));
        let cs = cnf_clauses(&phi);
        assert_eq!(cs, vec![Clause::from([simplify_formula(&f("x < 5"))])]);
    }
}
