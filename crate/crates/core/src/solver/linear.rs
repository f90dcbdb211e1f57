//! The internal decision procedure: case splitting to conjunctions of linear
//! rows, Fourier-Motzkin elimination with integer tightening, and a small
//! brute-force model search.

use std::collections::{BTreeMap, BTreeSet};

use crate::symexpr::{to_poly, Expr, Formula, Rel, Valuation};

/// `sum(coeffs[x] * x) + c <= 0`
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Row {
    coeffs: BTreeMap<usize, i128>,
    c: i128,
}

const MAX_LEAVES: usize = 1024;
const MAX_ROWS: usize = 2000;

/// Opaque integer variables standing for non-linear subterms.
#[derive(Default)]
struct Space {
    atoms: Vec<Expr>,
    index: BTreeMap<Expr, usize>,
    axioms: Vec<Row>,
}

type Lin = (BTreeMap<usize, i128>, i128);

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Space {
    fn var(&mut self, e: Expr) -> usize {
        if let Some(&i) = self.index.get(&e) {
            return i;
        }
        let i = self.atoms.len();
        self.atoms.push(e.clone());
        self.index.insert(e.clone(), i);
        self.add_axioms(i, &e);
        i
    }

    /// Facts that hold for every value of an opaque term.
    fn add_axioms(&mut self, v: usize, e: &Expr) {
        let me: Lin = ([(v, 1)].into(), 0);
        match e {
            Expr::Max(xs) | Expr::Min(xs) => {
                let is_max = matches!(e, Expr::Max(_));
                for x in xs {
                    let Some(lx) = self.linearize(x) else {
                        continue;
                    };
                    // max >= x, min <= x
                    let row = if is_max { sub(&lx, &me) } else { sub(&me, &lx) };
                    if let Some(r) = row {
                        self.axioms.push(Row {
                            coeffs: r.0,
                            c: r.1,
                        });
                    }
                }
            }
            Expr::Ceil(a, b) | Expr::Floor(a, b) => {
                let Some(d) = b.as_const().filter(|d| *d > 0) else {
                    return;
                };
                let Some(la) = self.linearize(a) else { return };
                let dm = scale(&me, d as i128);
                let (lo, hi) = if matches!(e, Expr::Ceil(..)) {
                    // a <= d*m <= a + d - 1
                    (
                        sub(&la, &dm),
                        sub(&dm, &la).map(|(c, k)| (c, k - (d as i128 - 1))),
                    )
                } else {
                    // a - d + 1 <= d*m <= a
                    (
                        sub(&dm, &la),
                        sub(&la, &dm).map(|(c, k)| (c, k - (d as i128 - 1))),
                    )
                };
                for r in [lo, hi].into_iter().flatten() {
                    self.axioms.push(Row {
                        coeffs: r.0,
                        c: r.1,
                    });
                }
            }
            Expr::Pow(b, _) if b.as_const().is_some_and(|b| b >= 1) => {
                // b^x >= 1 for a positive base (negative exponents are undefined)
                self.axioms.push(Row {
                    coeffs: [(v, -1)].into(),
                    c: 1,
                });
            }
            Expr::Log(..) => self.axioms.push(Row {
                coeffs: [(v, -1)].into(),
                c: 0,
            }),
            _ => {}
        }
    }

    fn linearize(&mut self, e: &Expr) -> Option<Lin> {
        let p = to_poly(e)?;
        let mut coeffs = BTreeMap::new();
        let mut c = 0;
        for (mono, k) in p.terms() {
            match mono.len() {
                0 => c = *k,
                1 => {
                    let v = self.var(mono[0].clone());
                    *coeffs.entry(v).or_insert(0) += k;
                }
                _ => {
                    let v = self.var(Expr::Mul(mono.clone()));
                    *coeffs.entry(v).or_insert(0) += k;
                }
            }
        }
        coeffs.retain(|_, k| *k != 0);
        Some((coeffs, c))
    }

    /// Rows for `a rel b`; `None` when an operand cannot be linearized
    /// (the atom is then left unconstrained).
    fn atom_rows(&mut self, rel: Rel, a: &Expr, b: &Expr) -> Option<Vec<Row>> {
        let (la, lb) = (self.linearize(a)?, self.linearize(b)?);
        let d = sub(&la, &lb)?; // a - b
        let row = |(coeffs, c): Lin| Row { coeffs, c };
        Some(match rel {
            Rel::Le => vec![row(d)],
            Rel::Lt => vec![row((d.0, d.1.checked_add(1)?))],
            Rel::Eq => vec![row(d.clone()), row(scale(&d, -1))],
            Rel::Ne => unreachable!("split before"),
        })
    }
}

fn sub(a: &Lin, b: &Lin) -> Option<Lin> {
    let mut coeffs = a.0.clone();
    for (v, k) in &b.0 {
        let e = coeffs.entry(*v).or_insert(0);
        *e = e.checked_sub(*k)?;
    }
    coeffs.retain(|_, k| *k != 0);
    Some((coeffs, a.1.checked_sub(b.1)?))
}

fn scale(a: &Lin, k: i128) -> Lin {
    (a.0.iter().map(|(v, c)| (*v, c * k)).collect(), a.1 * k)
}

/// Tightens a row over the integers. `Err(())` when it is a contradiction,
/// `Ok(None)` when trivially true.
fn normalize(mut r: Row) -> Result<Option<Row>, ()> {
    r.coeffs.retain(|_, k| *k != 0);
    if r.coeffs.is_empty() {
        return if r.c > 0 { Err(()) } else { Ok(None) };
    }
    let g = r.coeffs.values().fold(0, |g, k| gcd(g, *k));
    if g > 1 {
        for k in r.coeffs.values_mut() {
            *k /= g;
        }
        // sum(a x) <= -c  ==>  sum(a/g x) <= floor(-c/g)
        r.c = -(-r.c).div_euclid(g);
    }
    Ok(Some(r))
}

/// True when the rows have no integer solution (proven); false means unknown.
pub(crate) fn infeasible(rows: Vec<Row>) -> bool {
    let mut set = BTreeSet::new();
    for r in rows {
        match normalize(r) {
            Err(()) => return true,
            Ok(Some(r)) => {
                set.insert(r);
            }
            Ok(None) => {}
        }
    }
    loop {
        if set.is_empty() {
            return false;
        }
        let vars: BTreeSet<usize> = set.iter().flat_map(|r| r.coeffs.keys().copied()).collect();
        let cost = |v: usize| {
            let pos = set
                .iter()
                .filter(|r| r.coeffs.get(&v).is_some_and(|k| *k > 0))
                .count();
            let neg = set
                .iter()
                .filter(|r| r.coeffs.get(&v).is_some_and(|k| *k < 0))
                .count();
            pos * neg
        };
        let Some(v) = vars.into_iter().min_by_key(|v| cost(*v)) else {
            return false;
        };
        let (with, without): (Vec<Row>, Vec<Row>) = std::mem::take(&mut set)
            .into_iter()
            .partition(|r| r.coeffs.contains_key(&v));
        set = without.into_iter().collect();
        let (pos, neg): (Vec<&Row>, Vec<&Row>) = with.iter().partition(|r| r.coeffs[&v] > 0);
        for p in &pos {
            for n in &neg {
                let (kp, kn) = (p.coeffs[&v], -n.coeffs[&v]);
                let mut coeffs = BTreeMap::new();
                let mut ok = true;
                for (x, k) in p.coeffs.iter() {
                    match k.checked_mul(kn) {
                        Some(val) => *coeffs.entry(*x).or_insert(0) += val,
                        None => ok = false,
                    }
                }
                for (x, k) in n.coeffs.iter() {
                    match k.checked_mul(kp) {
                        Some(val) => *coeffs.entry(*x).or_insert(0) += val,
                        None => ok = false,
                    }
                }
                let c =
                    p.c.checked_mul(kn)
                        .zip(n.c.checked_mul(kp))
                        .and_then(|(a, b)| a.checked_add(b));
                let Some(c) = c.filter(|_| ok) else {
                    return false;
                };
                coeffs.remove(&v);
                match normalize(Row { coeffs, c }) {
                    Err(()) => return true,
                    Ok(Some(r)) => {
                        set.insert(r);
                    }
                    Ok(None) => {}
                }
                if set.len() > MAX_ROWS {
                    return false;
                }
            }
        }
    }
}

pub(crate) enum Verdict {
    Unsat,
    Unknown,
}

/// Case-splits `phi` into conjunctions and checks each one.
pub(crate) fn refute(phi: &Formula) -> Verdict {
    let mut space = Space::default();
    let mut leaves = 0;
    match explore(&mut space, vec![phi.clone()], Vec::new(), &mut leaves) {
        Some(true) => Verdict::Unsat,
        _ => Verdict::Unknown,
    }
}

/// `Some(true)`: every branch refuted. `Some(false)`: some branch survived.
/// `None`: budget exhausted.
fn explore(
    space: &mut Space,
    mut todo: Vec<Formula>,
    mut rows: Vec<Row>,
    leaves: &mut usize,
) -> Option<bool> {
    while let Some(f) = todo.pop() {
        match f {
            Formula::True => {}
            Formula::False => return Some(true),
            Formula::Not(x) => todo.push(x.negate()),
            Formula::And(xs) => todo.extend(xs),
            Formula::Or(xs) => {
                for x in xs {
                    let mut t = todo.clone();
                    t.push(x);
                    if !explore(space, t, rows.clone(), leaves)? {
                        return Some(false);
                    }
                }
                return Some(true);
            }
            Formula::Cmp(Rel::Ne, a, b) => {
                todo.push(Formula::Or(vec![
                    Formula::lt(a.clone(), b.clone()),
                    Formula::lt(b, a),
                ]));
            }
            Formula::Cmp(rel, a, b) => {
                if let Some(rs) = space.atom_rows(rel, &a, &b) {
                    rows.extend(rs);
                }
            }
        }
    }
    *leaves += 1;
    if *leaves > MAX_LEAVES {
        return None;
    }
    let mut all = rows;
    all.extend(space.axioms.iter().cloned());
    Some(infeasible(all))
}

/// Looks for a model over the free symbols of `phi` by enumeration. Only
/// formulas over plain symbols (no arrays) are searched.
pub(crate) fn find_model(phi: &Formula) -> Option<BTreeMap<String, i64>> {
    let mut arrays = false;
    let mut counters = false;
    phi.visit_exprs(&mut |e| match e {
        Expr::ArrayRead(..) => arrays = true,
        Expr::Counter(_) => counters = true,
        _ => {}
    });
    if arrays || counters {
        return None;
    }
    let syms: Vec<String> = phi.symbols().into_iter().collect();
    let range: i64 = match syms.len() {
        0..=2 => 64,
        3 | 4 => 8,
        _ => return None,
    };
    let phi = crate::symexpr::simplify_formula(phi);
    let mut vals = vec![-range; syms.len()];
    loop {
        let mut v = Valuation::new();
        for (s, x) in syms.iter().zip(&vals) {
            v.symbols.insert(s.clone(), *x);
        }
        if v.eval_formula(&phi) == Some(true) {
            return Some(v.symbols);
        }
        let mut i = 0;
        loop {
            if i == vals.len() {
                return None;
            }
            if vals[i] < range {
                vals[i] += 1;
                break;
            }
            vals[i] = -range;
            i += 1;
        }
    }
}
