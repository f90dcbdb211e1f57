//! A fixed, evaluation-preserving rewrite set.
//!
//! Arithmetic is normalized to a sum of monomials with integer
//! coefficients: constants are folded, `Add`/`Mul` flattened, products
//! distributed and like terms (including path-counter terms) collected.
//! Every other node is an opaque atom whose children are simplified
//! recursively. `*` absorbs every node it appears in.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::eval::{ceil_log, checked_pow, div_ceil, div_floor};
use super::subst::map_leaves;
use super::{Expr, Formula, Rel};

type Monomial = Vec<Expr>;

/// Polynomial over opaque atoms. Coefficients are kept in `i128` and only
/// narrowed when the expression is rebuilt.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct Poly(BTreeMap<Monomial, i128>);

const MAX_TERMS: usize = 256;
const MAX_SUM_EXPANSION: i128 = 64;

struct Absorbed;

impl Poly {
    fn constant(c: i128) -> Poly {
        let mut m = BTreeMap::new();
        if c != 0 {
            m.insert(vec![], c);
        }
        Poly(m)
    }

    fn atom(e: Expr) -> Poly {
        let mut m = BTreeMap::new();
        m.insert(vec![e], 1);
        Poly(m)
    }

    pub(crate) fn as_const(&self) -> Option<i128> {
        match self.0.len() {
            0 => Some(0),
            1 => self.0.get(&vec![]).copied(),
            _ => None,
        }
    }

    pub(crate) fn terms(&self) -> impl Iterator<Item = (&Monomial, &i128)> {
        self.0.iter()
    }

    fn add_assign(&mut self, other: &Poly, sign: i128) -> Option<()> {
        for (m, c) in &other.0 {
            let entry = self.0.entry(m.clone()).or_insert(0);
            *entry = entry.checked_add(c.checked_mul(sign)?)?;
            if *entry == 0 {
                self.0.remove(m);
            }
        }
        Some(())
    }

    fn mul(&self, other: &Poly) -> Option<Poly> {
        if self.0.len() * other.0.len() > MAX_TERMS {
            return None;
        }
        let mut out = Poly::default();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &other.0 {
                let mut m = m1.clone();
                m.extend(m2.iter().cloned());
                m.sort();
                let c = c1.checked_mul(*c2)?;
                let entry = out.0.entry(m.clone()).or_insert(0);
                *entry = entry.checked_add(c)?;
                if *entry == 0 {
                    out.0.remove(&m);
                }
            }
        }
        Some(out)
    }

    fn scale(&self, k: i128) -> Option<Poly> {
        if k == 0 {
            return Some(Poly::default());
        }
        let mut out = BTreeMap::new();
        for (m, c) in &self.0 {
            out.insert(m.clone(), c.checked_mul(k)?);
        }
        Some(Poly(out))
    }

    fn divisible_by(&self, k: i128) -> bool {
        k != 0 && self.0.values().all(|c| c % k == 0)
    }

    fn div_exact(&self, k: i128) -> Poly {
        Poly(self.0.iter().map(|(m, c)| (m.clone(), c / k)).collect())
    }

    fn to_expr(&self) -> Expr {
        let mut terms: Vec<(&Monomial, &i128)> = self.0.iter().collect();
        terms.sort_by(|a, b| term_order(a.0, b.0));
        let mut out = Vec::with_capacity(terms.len());
        for (m, c) in terms {
            let Ok(c) = i64::try_from(*c) else {
                return Expr::Unknown;
            };
            out.push(match (m.len(), c) {
                (0, c) => Expr::Const(c),
                (1, 1) => m[0].clone(),
                (_, 1) => Expr::Mul(m.clone()),
                (_, c) => {
                    let mut fs = vec![Expr::Const(c)];
                    fs.extend(m.iter().cloned());
                    Expr::Mul(fs)
                }
            });
        }
        match out.len() {
            0 => Expr::Const(0),
            1 => out.pop().unwrap(),
            _ => Expr::Add(out),
        }
    }
}

fn term_order(a: &Monomial, b: &Monomial) -> Ordering {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        _ => b.len().cmp(&a.len()).then_with(|| a.cmp(b)),
    }
}

thread_local! {
    static LOG: RefCell<Option<Vec<(Expr, Expr)>>> = const { RefCell::new(None) };
}

const LOG_CAP: usize = 50_000;

/// Records every `(input, output)` pair passed through [`simplify`] on the
/// current thread while the guard is alive.
pub struct SimplifyLog {
    _private: (),
}

impl SimplifyLog {
    pub fn start() -> SimplifyLog {
        LOG.with(|l| *l.borrow_mut() = Some(Vec::new()));
        SimplifyLog { _private: () }
    }

    pub fn take(&self) -> Vec<(Expr, Expr)> {
        LOG.with(|l| {
            l.borrow_mut()
                .as_mut()
                .map(std::mem::take)
                .unwrap_or_default()
        })
    }
}

impl Drop for SimplifyLog {
    fn drop(&mut self) {
        LOG.with(|l| *l.borrow_mut() = None);
    }
}

pub fn simplify(e: &Expr) -> Expr {
    let out = simp(e);
    LOG.with(|l| {
        if let Some(log) = l.borrow_mut().as_mut() {
            if log.len() < LOG_CAP {
                log.push((e.clone(), out.clone()));
            }
        }
    });
    out
}

pub fn simplify_formula(f: &Formula) -> Formula {
    simp_formula(f)
}

pub(crate) fn to_poly(e: &Expr) -> Option<Poly> {
    poly(e).ok()
}

fn simp(e: &Expr) -> Expr {
    match poly(e) {
        Ok(p) => p.to_expr(),
        Err(Absorbed) => Expr::Unknown,
    }
}

fn poly(e: &Expr) -> Result<Poly, Absorbed> {
    match e {
        Expr::Const(c) => Ok(Poly::constant(*c as i128)),
        Expr::Symbol(_) | Expr::Counter(_) | Expr::Index(_) => Ok(Poly::atom(e.clone())),
        Expr::Unknown => Err(Absorbed),
        Expr::ArrayRead(a, args) => {
            let args = args.iter().map(simp).collect::<Vec<_>>();
            if args.iter().any(|x| matches!(x, Expr::Unknown)) {
                return Err(Absorbed);
            }
            Ok(Poly::atom(Expr::ArrayRead(a.clone(), args)))
        }
        Expr::Add(xs) => {
            let mut acc = Poly::default();
            for x in xs {
                let p = poly(x)?;
                if acc.add_assign(&p, 1).is_none() {
                    return Err(Absorbed);
                }
            }
            Ok(acc)
        }
        Expr::Sub(a, b) => {
            let mut acc = poly(a)?;
            let pb = poly(b)?;
            acc.add_assign(&pb, -1).ok_or(Absorbed)?;
            Ok(acc)
        }
        Expr::Mul(xs) => {
            let parts = xs.iter().map(poly).collect::<Result<Vec<_>, _>>()?;
            let mut acc = Poly::constant(1);
            for p in &parts {
                match acc.mul(p) {
                    Some(next) => acc = next,
                    None => {
                        // Too large to distribute; keep an opaque product.
                        let mut fs: Vec<Expr> = parts.iter().map(Poly::to_expr).collect();
                        fs.sort();
                        return Ok(Poly::atom(Expr::Mul(fs)));
                    }
                }
            }
            Ok(acc)
        }
        Expr::Div(a, b) => {
            let (pa, pb) = (poly(a)?, poly(b)?);
            match (pa.as_const(), pb.as_const()) {
                (_, Some(0)) => Ok(Poly::atom(Expr::div(pa.to_expr(), Expr::Const(0)))),
                (Some(x), Some(y)) => Ok(Poly::constant(x / y)),
                (Some(0), _) => Ok(Poly::default()),
                (_, Some(1)) => Ok(pa),
                (_, Some(-1)) => pa.scale(-1).ok_or(Absorbed),
                (_, Some(k)) if pa.divisible_by(k) => Ok(pa.div_exact(k)),
                _ => Ok(Poly::atom(Expr::div(pa.to_expr(), pb.to_expr()))),
            }
        }
        Expr::Ceil(a, b) => rounding(a, b, true),
        Expr::Floor(a, b) => rounding(a, b, false),
        Expr::Max(xs) => extremum(xs, true),
        Expr::Min(xs) => extremum(xs, false),
        Expr::Ite(c, a, b) => {
            let (ea, eb) = (simp(a), simp(b));
            if matches!(ea, Expr::Unknown) || matches!(eb, Expr::Unknown) {
                return Err(Absorbed);
            }
            let c = simp_formula(c);
            if c.contains_unknown() {
                return Err(Absorbed);
            }
            match c {
                Formula::True => poly(&ea),
                Formula::False => poly(&eb),
                _ if ea == eb => poly(&ea),
                c => Ok(Poly::atom(Expr::ite(c, ea, eb))),
            }
        }
        Expr::Sum {
            index,
            lower,
            upper,
            body,
        } => {
            let (pl, pu) = (poly(lower)?, poly(upper)?);
            let body = simp(body);
            if matches!(body, Expr::Unknown) {
                return Err(Absorbed);
            }
            if !body.contains_index(index) {
                // (max{0, upper - lower + 1}) * body
                let mut count = pu.clone();
                count.add_assign(&pl, -1).ok_or(Absorbed)?;
                count.add_assign(&Poly::constant(1), 1).ok_or(Absorbed)?;
                let count = extremum(&[Expr::Const(0), count.to_expr()], true)?;
                let pbody = poly(&body)?;
                return Ok(count
                    .mul(&pbody)
                    .unwrap_or_else(|| Poly::atom(Expr::Mul(vec![count.to_expr(), body]))));
            }
            if let (Some(lo), Some(hi)) = (pl.as_const(), pu.as_const()) {
                if hi < lo {
                    return Ok(Poly::default());
                }
                if hi - lo < MAX_SUM_EXPANSION {
                    let mut acc = Poly::default();
                    for k in lo..=hi {
                        let kk = i64::try_from(k).map_err(|_| Absorbed)?;
                        let inst = map_leaves(&body, &|leaf| match leaf {
                            Expr::Index(name) if name == index => Some(Expr::Const(kk)),
                            _ => None,
                        });
                        acc.add_assign(&poly(&inst)?, 1).ok_or(Absorbed)?;
                    }
                    return Ok(acc);
                }
            }
            Ok(Poly::atom(Expr::Sum {
                index: index.clone(),
                lower: Box::new(pl.to_expr()),
                upper: Box::new(pu.to_expr()),
                body: Box::new(body),
            }))
        }
        Expr::Pow(b, x) => {
            let (pb, px) = (poly(b)?, poly(x)?);
            match (pb.as_const(), px.as_const()) {
                (_, Some(0)) => Ok(Poly::constant(1)),
                (_, Some(1)) => Ok(pb),
                (Some(1), _) => Ok(Poly::constant(1)),
                (Some(base), Some(exp)) if exp > 0 => match checked_pow(base, exp) {
                    Some(v) if i64::try_from(v).is_ok() => Ok(Poly::constant(v)),
                    _ => Ok(Poly::atom(Expr::pow(pb.to_expr(), px.to_expr()))),
                },
                _ => Ok(Poly::atom(Expr::pow(pb.to_expr(), px.to_expr()))),
            }
        }
        Expr::Log(base, arg) => {
            let pa = poly(arg)?;
            match pa.as_const() {
                Some(v) if *base >= 2 => Ok(Poly::constant(ceil_log(*base as i128, v))),
                _ => Ok(Poly::atom(Expr::log(*base, pa.to_expr()))),
            }
        }
    }
}

fn rounding(a: &Expr, b: &Expr, ceil: bool) -> Result<Poly, Absorbed> {
    let (mut pa, mut pb) = (poly(a)?, poly(b)?);
    let build = |pa: &Poly, pb: &Poly| {
        let (n, d) = (Box::new(pa.to_expr()), Box::new(pb.to_expr()));
        Poly::atom(if ceil {
            Expr::Ceil(n, d)
        } else {
            Expr::Floor(n, d)
        })
    };
    match pb.as_const() {
        Some(0) => Ok(build(&pa, &pb)),
        Some(k) => {
            if k < 0 {
                pa = pa.scale(-1).ok_or(Absorbed)?;
                pb = Poly::constant(-k);
            }
            let k = pb.as_const().unwrap_or(1);
            if let Some(v) = pa.as_const() {
                let r = if ceil {
                    div_ceil(v, k)
                } else {
                    div_floor(v, k)
                };
                return Ok(Poly::constant(r.ok_or(Absorbed)?));
            }
            if pa.divisible_by(k) {
                return Ok(pa.div_exact(k));
            }
            Ok(build(&pa, &pb))
        }
        None => Ok(build(&pa, &pb)),
    }
}

fn extremum(xs: &[Expr], is_max: bool) -> Result<Poly, Absorbed> {
    let mut items: Vec<Expr> = Vec::new();
    for x in xs {
        let s = simp(x);
        match s {
            Expr::Unknown => return Err(Absorbed),
            Expr::Max(inner) if is_max => items.extend(inner),
            Expr::Min(inner) if !is_max => items.extend(inner),
            other => items.push(other),
        }
    }
    let mut best_const: Option<i64> = None;
    let mut rest: Vec<Expr> = Vec::new();
    for it in items {
        if let Expr::Const(c) = it {
            best_const = Some(match best_const {
                None => c,
                Some(b) if is_max => b.max(c),
                Some(b) => b.min(c),
            });
        } else if !rest.contains(&it) {
            rest.push(it);
        }
    }
    if let Some(c) = best_const {
        rest.push(Expr::Const(c));
    }
    // Drop members that differ from another member by a constant in the dominated direction.
    let polys: Vec<Option<Poly>> = rest.iter().map(|e| poly(e).ok()).collect();
    let mut keep = vec![true; rest.len()];
    for i in 0..rest.len() {
        for j in 0..rest.len() {
            if i == j || !keep[i] || !keep[j] {
                continue;
            }
            if let (Some(pi), Some(pj)) = (&polys[i], &polys[j]) {
                let mut d = pi.clone();
                if d.add_assign(pj, -1).is_none() {
                    continue;
                }
                if let Some(diff) = d.as_const() {
                    // diff = i - j
                    let i_dominated = if is_max { diff <= 0 } else { diff >= 0 };
                    if i_dominated {
                        keep[i] = false;
                    }
                }
            }
        }
    }
    let mut out: Vec<Expr> = rest
        .into_iter()
        .zip(keep)
        .filter_map(|(e, k)| k.then_some(e))
        .collect();
    out.sort();
    match out.len() {
        0 => Err(Absorbed),
        1 => poly(&out[0]),
        _ => Ok(Poly::atom(if is_max {
            Expr::Max(out)
        } else {
            Expr::Min(out)
        })),
    }
}

fn simp_formula(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Cmp(r, a, b) => simp_atom(*r, a, b),
        Formula::And(xs) => {
            let mut out: Vec<Formula> = Vec::new();
            for x in xs {
                match simp_formula(x) {
                    Formula::True => {}
                    Formula::False => return Formula::False,
                    Formula::And(inner) => {
                        for y in inner {
                            if !out.contains(&y) {
                                out.push(y);
                            }
                        }
                    }
                    y => {
                        if !out.contains(&y) {
                            out.push(y);
                        }
                    }
                }
            }
            match out.len() {
                0 => Formula::True,
                1 => out.pop().unwrap(),
                _ => Formula::And(out),
            }
        }
        Formula::Or(xs) => {
            let mut out: Vec<Formula> = Vec::new();
            for x in xs {
                match simp_formula(x) {
                    Formula::False => {}
                    Formula::True => return Formula::True,
                    Formula::Or(inner) => {
                        for y in inner {
                            if !out.contains(&y) {
                                out.push(y);
                            }
                        }
                    }
                    y => {
                        if !out.contains(&y) {
                            out.push(y);
                        }
                    }
                }
            }
            match out.len() {
                0 => Formula::False,
                1 => out.pop().unwrap(),
                _ => Formula::Or(out),
            }
        }
        Formula::Not(x) => simp_formula(&simp_formula(x).negate()),
    }
}

/// Canonical atom: non-constant terms with positive coefficient on the
/// left, everything else moved to the right.
fn simp_atom(r: Rel, a: &Expr, b: &Expr) -> Formula {
    let (pa, pb) = match (poly(a), poly(b)) {
        (Ok(pa), Ok(pb)) => (pa, pb),
        _ => return Formula::Cmp(r, Expr::Unknown, Expr::Const(0)),
    };
    let mut d = pa.clone();
    if d.add_assign(&pb, -1).is_none() {
        return Formula::Cmp(r, pa.to_expr(), pb.to_expr());
    }
    if let Some(v) = d.as_const() {
        let holds = match r {
            Rel::Lt => v < 0,
            Rel::Le => v <= 0,
            Rel::Eq => v == 0,
            Rel::Ne => v != 0,
        };
        return if holds { Formula::True } else { Formula::False };
    }
    let mut left = Poly::default();
    let mut right = Poly::default();
    for (m, c) in d.terms() {
        if !m.is_empty() && *c > 0 {
            left.0.insert(m.clone(), *c);
        } else {
            right.0.insert(m.clone(), -*c);
        }
    }
    Formula::Cmp(r, left.to_expr(), right.to_expr())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: &str) -> Expr {
        Expr::sym(n)
    }

    #[test]
    fn folds_constant_max() {
        assert_eq!(
            simplify(&Expr::max(vec![Expr::Const(0), Expr::Const(3)])),
            Expr::Const(3)
        );
        assert_eq!(
            simplify(&Expr::add(Expr::Const(0), Expr::Const(1))),
            Expr::Const(1)
        );
    }

    #[test]
    fn collects_linear_terms() {
        // 2a + 1 - 2
        let e = Expr::sub(
            Expr::add(Expr::mul(Expr::Const(2), s("a")), Expr::Const(1)),
            Expr::Const(2),
        );
        assert_eq!(
            simplify(&e),
            Expr::Add(vec![
                Expr::Mul(vec![Expr::Const(2), s("a")]),
                Expr::Const(-1)
            ])
        );
        let e = Expr::Add(vec![
            s("i"),
            Expr::counter(1),
            Expr::counter(2),
            Expr::neg(s("i")),
        ]);
        assert_eq!(
            simplify(&e),
            Expr::Add(vec![Expr::counter(1), Expr::counter(2)])
        );
    }

    #[test]
    fn unknown_absorbs_arithmetic() {
        assert_eq!(simplify(&Expr::add(Expr::Unknown, s("a"))), Expr::Unknown);
        assert_eq!(
            simplify(&Expr::max(vec![Expr::Const(0), Expr::Unknown])),
            Expr::Unknown
        );
    }

    #[test]
    fn max_flattens_and_drops_dominated() {
        let e = Expr::max(vec![
            Expr::Const(0),
            Expr::max(vec![Expr::Const(-1), s("n")]),
            Expr::add(s("n"), Expr::Const(-2)),
        ]);
        assert_eq!(simplify(&e), Expr::max(vec![Expr::Const(0), s("n")]));
    }

    #[test]
    fn exact_division_by_denominator() {
        let e = Expr::ceil(Expr::sub(s("x"), Expr::Const(5)), Expr::Const(1));
        assert_eq!(simplify(&e), Expr::add(s("x"), Expr::Const(-5)));
        let e = Expr::ceil(Expr::Const(7), Expr::Const(2));
        assert_eq!(simplify(&e), Expr::Const(4));
        let e = Expr::ceil(Expr::Const(-7), Expr::Const(-2));
        assert_eq!(simplify(&e), Expr::Const(4));
    }

    #[test]
    fn constant_sums_expand() {
        // sum(K=0..2, max{0, 5 + 0*K}) = 15
        let body = Expr::max(vec![
            Expr::Const(0),
            Expr::add(
                Expr::Const(5),
                Expr::mul(Expr::Const(0), Expr::Index("K".into())),
            ),
        ]);
        let e = Expr::sum("K", Expr::Const(0), Expr::Const(2), body);
        assert_eq!(simplify(&e), Expr::Const(15));
        let e = Expr::sum(
            "K",
            Expr::Const(0),
            Expr::Const(-1),
            Expr::Index("K".into()),
        );
        assert_eq!(simplify(&e), Expr::Const(0));
    }

    #[test]
    fn atom_canonical_form() {
        let f = Formula::lt(
            Expr::Add(vec![Expr::Const(0), Expr::counter(1), Expr::counter(2)]),
            s("n"),
        );
        assert_eq!(
            simplify_formula(&f),
            Formula::lt(Expr::Add(vec![Expr::counter(1), Expr::counter(2)]), s("n"))
        );
        let f = Formula::lt(
            Expr::add(Expr::Const(5), Expr::mul(Expr::Const(2), Expr::counter(1))),
            s("x"),
        );
        assert_eq!(
            simplify_formula(&f),
            Formula::lt(
                Expr::Mul(vec![Expr::Const(2), Expr::counter(1)]),
                Expr::add(s("x"), Expr::Const(-5))
            )
        );
        assert_eq!(
            simplify_formula(&Formula::lt(Expr::Const(0), Expr::Const(3))),
            Formula::True
        );
    }

    #[test]
    fn not_is_pushed() {
        let f = Formula::Not(Box::new(Formula::lt(s("i"), s("n"))));
        assert_eq!(simplify_formula(&f), Formula::le(s("n"), s("i")));
    }

    #[test]
    fn ite_with_equal_branches_collapses() {
        let e = Expr::ite(Formula::lt(s("a"), s("b")), s("c"), s("c"));
        assert_eq!(simplify(&e), s("c"));
    }

    #[test]
    fn logging_captures_pairs() {
        let log = SimplifyLog::start();
        simplify(&Expr::add(Expr::Const(1), Expr::Const(2)));
        let pairs = log.take();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].1, Expr::Const(3));
    }
}
