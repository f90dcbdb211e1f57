//! Bound sets: every member is an upper bound; the empty set means no bound.

use std::collections::BTreeMap;

use crate::ir::EdgeId;
use crate::symexpr::{simplify, Expr};

pub type BoundSet = Vec<Expr>;

/// Bound sets per edge. Every edge of the analysed graph has an entry.
pub type BoundMap = BTreeMap<EdgeId, BoundSet>;

/// Adds `e` (simplified) unless it is already present or the set is full.
pub(crate) fn insert(set: &mut BoundSet, e: Expr, cap: usize) -> bool {
    let e = simplify(&e);
    if set.contains(&e) {
        return true;
    }
    if set.len() >= cap {
        return false;
    }
    set.push(e);
    true
}

/// `{a + b | a in x, b in y}`.
pub(crate) fn add(x: &BoundSet, y: &BoundSet, cap: usize) -> BoundSet {
    let mut out = Vec::new();
    for a in x {
        for b in y {
            insert(&mut out, Expr::add(a.clone(), b.clone()), cap);
        }
    }
    out
}

pub(crate) fn plus_const(x: &BoundSet, c: i64, cap: usize) -> BoundSet {
    add(x, &vec![Expr::Const(c)], cap)
}

/// `{max{r1, ..., rk} | ri in sets[i]}`, enumerated in order up to `cap`
/// combinations. Keeping only some combinations is sound: each one bounds the edge.
pub(crate) fn max_merge(sets: &[&BoundSet], cap: usize) -> BoundSet {
    if sets.iter().any(|s| s.is_empty()) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; sets.len()];
    loop {
        let items: Vec<Expr> = sets.iter().zip(&idx).map(|(s, i)| s[*i].clone()).collect();
        let e = if items.len() == 1 { items.into_iter().next().unwrap() } else { Expr::Max(items) };
        if !insert(&mut out, e, cap) {
            return out;
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < sets[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// The least member, as an expression; `None` for the empty set.
pub fn min_of(set: &BoundSet) -> Option<Expr> {
    match set.len() {
        0 => None,
        1 => Some(set[0].clone()),
        _ => Some(Expr::Min(set.clone())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sums_and_merges() {
        let n = Expr::sym("n");
        let a = vec![Expr::Const(0), n.clone()];
        let b = vec![Expr::Const(1)];
        assert_eq!(add(&a, &b, 8), vec![Expr::Const(1), simplify(&Expr::add(n.clone(), Expr::Const(1)))]);
        assert!(add(&a, &vec![], 8).is_empty());
        let m = max_merge(&[&vec![Expr::Const(1)], &vec![Expr::Const(0)]], 8);
        assert_eq!(m, vec![Expr::Const(1)]);
        let m = max_merge(&[&a, &vec![Expr::Const(2), Expr::Const(3)]], 8);
        assert_eq!(m.len(), 4);
        assert_eq!(max_merge(&[&a, &a], 2).len(), 2);
        assert!(max_merge(&[&a, &vec![]], 8).is_empty());
    }

    #[test]
    fn min_rendering() {
        let set = vec![simplify(&Expr::max(vec![Expr::Const(0), Expr::sym("n")])), Expr::Const(3)];
        assert_eq!(min_of(&set).unwrap().to_string(), "min{max{0, $n}, 3}");
        assert_eq!(min_of(&vec![]), None);
    }
}
