use std::collections::BTreeMap;

use super::{CounterId, Expr, Formula, Rel};

/// Concrete content of a read-only array.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArrayValue {
    /// One-dimensional array; reads outside `0..len` have no value.
    Finite(Vec<i64>),
    /// Total pseudo-random function of the index tuple with values in `[-range, range]`.
    Hashed { seed: u64, range: i64 },
}

impl ArrayValue {
    pub fn read(&self, idx: &[i128]) -> Option<i128> {
        match self {
            ArrayValue::Finite(values) => {
                if idx.len() != 1 || idx[0] < 0 {
                    return None;
                }
                values
                    .get(usize::try_from(idx[0]).ok()?)
                    .map(|v| *v as i128)
            }
            ArrayValue::Hashed { seed, range } => {
                let mut h = *seed ^ 0x9e37_79b9_7f4a_7c15;
                for &i in idx {
                    h ^= i as u64;
                    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
                    h ^= h >> 31;
                }
                let span = (2 * range + 1) as u64;
                Some((h % span) as i128 - *range as i128)
            }
        }
    }
}

/// An assignment of integers to input symbols, arrays, path counters and sum indices.
#[derive(Clone, Debug, Default)]
pub struct Valuation {
    pub symbols: BTreeMap<String, i64>,
    pub arrays: BTreeMap<String, ArrayValue>,
    pub counters: BTreeMap<CounterId, i64>,
    indices: BTreeMap<String, i128>,
}

const SUM_RANGE_CAP: i128 = 1_000_000;

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_symbol(mut self, name: impl Into<String>, v: i64) -> Self {
        self.symbols.insert(name.into(), v);
        self
    }

    pub fn with_counter(mut self, id: u32, v: i64) -> Self {
        self.counters.insert(CounterId(id), v);
        self
    }

    pub fn with_array(mut self, name: impl Into<String>, value: ArrayValue) -> Self {
        self.arrays.insert(name.into(), value);
        self
    }

    /// Integer value of `e`, or `None` when the value is unknown: `*` was
    /// reached, a division by zero or out-of-range read happened, a leaf is
    /// unassigned, or the arithmetic overflowed.
    pub fn eval(&self, e: &Expr) -> Option<i128> {
        let mut scratch = self.clone();
        scratch.eval_mut(e)
    }

    pub fn eval_formula(&self, f: &Formula) -> Option<bool> {
        let mut scratch = self.clone();
        scratch.eval_formula_mut(f)
    }

    fn eval_mut(&mut self, e: &Expr) -> Option<i128> {
        match e {
            Expr::Const(c) => Some(*c as i128),
            Expr::Symbol(s) => self.symbols.get(s).map(|v| *v as i128),
            Expr::Counter(c) => self.counters.get(c).map(|v| *v as i128),
            Expr::Index(k) => self.indices.get(k).copied(),
            Expr::ArrayRead(a, args) => {
                let idx = args
                    .iter()
                    .map(|x| self.eval_mut(x))
                    .collect::<Option<Vec<_>>>()?;
                self.arrays.get(a)?.read(&idx)
            }
            Expr::Unknown => None,
            Expr::Add(xs) => {
                let mut acc: i128 = 0;
                for x in xs {
                    acc = acc.checked_add(self.eval_mut(x)?)?;
                }
                Some(acc)
            }
            Expr::Sub(a, b) => self.eval_mut(a)?.checked_sub(self.eval_mut(b)?),
            Expr::Mul(xs) => {
                let mut acc: i128 = 1;
                for x in xs {
                    acc = acc.checked_mul(self.eval_mut(x)?)?;
                }
                Some(acc)
            }
            Expr::Div(a, b) => {
                let (a, b) = (self.eval_mut(a)?, self.eval_mut(b)?);
                a.checked_div(b)
            }
            Expr::Max(xs) => {
                let vals = xs
                    .iter()
                    .map(|x| self.eval_mut(x))
                    .collect::<Option<Vec<_>>>()?;
                vals.into_iter().max()
            }
            Expr::Min(xs) => {
                let vals = xs
                    .iter()
                    .map(|x| self.eval_mut(x))
                    .collect::<Option<Vec<_>>>()?;
                vals.into_iter().min()
            }
            Expr::Ceil(a, b) => {
                let (a, b) = (self.eval_mut(a)?, self.eval_mut(b)?);
                div_ceil(a, b)
            }
            Expr::Floor(a, b) => {
                let (a, b) = (self.eval_mut(a)?, self.eval_mut(b)?);
                div_floor(a, b)
            }
            Expr::Ite(c, a, b) => {
                // Both branches must be known so that `*` stays absorbing.
                let cond = self.eval_formula_mut(c)?;
                let (a, b) = (self.eval_mut(a)?, self.eval_mut(b)?);
                Some(if cond { a } else { b })
            }
            Expr::Sum {
                index,
                lower,
                upper,
                body,
            } => {
                let lo = self.eval_mut(lower)?;
                let hi = self.eval_mut(upper)?;
                if hi - lo > SUM_RANGE_CAP {
                    return None;
                }
                let saved = self.indices.get(index).copied();
                let mut acc: i128 = 0;
                let mut k = lo;
                let mut ok = true;
                while k <= hi {
                    self.indices.insert(index.clone(), k);
                    match self.eval_mut(body).and_then(|v| acc.checked_add(v)) {
                        Some(v) => acc = v,
                        None => {
                            ok = false;
                            break;
                        }
                    }
                    k += 1;
                }
                match saved {
                    Some(v) => self.indices.insert(index.clone(), v),
                    None => self.indices.remove(index),
                };
                ok.then_some(acc)
            }
            Expr::Pow(b, x) => {
                let (b, x) = (self.eval_mut(b)?, self.eval_mut(x)?);
                if x < 0 {
                    return None;
                }
                checked_pow(b, x)
            }
            Expr::Log(base, arg) => {
                let arg = self.eval_mut(arg)?;
                Some(ceil_log(*base as i128, arg))
            }
        }
    }

    fn eval_formula_mut(&mut self, f: &Formula) -> Option<bool> {
        match f {
            Formula::True => Some(true),
            Formula::False => Some(false),
            Formula::Cmp(r, a, b) => {
                let (a, b) = (self.eval_mut(a)?, self.eval_mut(b)?);
                Some(match r {
                    Rel::Lt => a < b,
                    Rel::Le => a <= b,
                    Rel::Eq => a == b,
                    Rel::Ne => a != b,
                })
            }
            Formula::And(xs) => {
                let mut out = true;
                for x in xs {
                    out &= self.eval_formula_mut(x)?;
                }
                Some(out)
            }
            Formula::Or(xs) => {
                let mut out = false;
                for x in xs {
                    out |= self.eval_formula_mut(x)?;
                }
                Some(out)
            }
            Formula::Not(x) => self.eval_formula_mut(x).map(|v| !v),
        }
    }
}

pub(crate) fn div_floor(a: i128, b: i128) -> Option<i128> {
    if b == 0 {
        return None;
    }
    let q = a.checked_div(b)?;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        Some(q - 1)
    } else {
        Some(q)
    }
}

pub(crate) fn div_ceil(a: i128, b: i128) -> Option<i128> {
    if b == 0 {
        return None;
    }
    let q = a.checked_div(b)?;
    if (a % b != 0) && ((a < 0) == (b < 0)) {
        Some(q + 1)
    } else {
        Some(q)
    }
}

pub(crate) fn checked_pow(b: i128, x: i128) -> Option<i128> {
    let mut acc: i128 = 1;
    let mut i = 0;
    while i < x {
        acc = acc.checked_mul(b)?;
        i += 1;
        if acc == 0 || acc == 1 && b == 1 {
            return Some(acc);
        }
    }
    Some(acc)
}

/// Smallest `k >= 0` with `base^k >= arg`.
pub(crate) fn ceil_log(base: i128, arg: i128) -> i128 {
    let mut k = 0;
    let mut p: i128 = 1;
    while p < arg {
        p = p.saturating_mul(base);
        k += 1;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_is_exact() {
        let x = Expr::sym("x");
        let e = Expr::max(vec![
            Expr::Const(0),
            Expr::ceil(Expr::sub(x, Expr::Const(5)), Expr::Const(2)),
        ]);
        assert_eq!(Valuation::new().with_symbol("x", 12).eval(&e), Some(4));
        assert_eq!(Valuation::new().with_symbol("x", 0).eval(&e), Some(0));
        assert_eq!(div_floor(-7, 2), Some(-4));
        assert_eq!(div_ceil(-7, 2), Some(-3));
        assert_eq!(div_ceil(7, -2), Some(-3));
        assert_eq!(
            Valuation::new().eval(&Expr::div(Expr::Const(-7), Expr::Const(2))),
            Some(-3)
        );
    }

    #[test]
    fn unknown_absorbs() {
        let e = Expr::add(Expr::Unknown, Expr::Const(1));
        assert_eq!(Valuation::new().eval(&e), None);
        assert_eq!(
            Valuation::new().eval(&Expr::div(Expr::Const(1), Expr::Const(0))),
            None
        );
    }

    #[test]
    fn bounded_sum_by_direct_summation() {
        // sum(K=0..n-2, n-K-1) at n = 4
        let n = Expr::sym("n");
        let e = Expr::sum(
            "K",
            Expr::Const(0),
            Expr::sub(n.clone(), Expr::Const(2)),
            Expr::sub(Expr::sub(n, Expr::Index("K".into())), Expr::Const(1)),
        );
        assert_eq!(Valuation::new().with_symbol("n", 4).eval(&e), Some(6));
        // empty range
        assert_eq!(Valuation::new().with_symbol("n", 1).eval(&e), Some(0));
    }

    #[test]
    fn log_and_pow() {
        assert_eq!(ceil_log(2, 1), 0);
        assert_eq!(ceil_log(2, 7), 3);
        assert_eq!(ceil_log(2, 8), 3);
        assert_eq!(ceil_log(3, 100), 5);
        assert_eq!(ceil_log(2, -4), 0);
        let e = Expr::pow(Expr::Const(2), Expr::counter(1));
        assert_eq!(Valuation::new().with_counter(1, 10).eval(&e), Some(1024));
    }

    #[test]
    fn finite_arrays_reject_out_of_range() {
        let v = Valuation::new()
            .with_symbol("i", 3)
            .with_array("A", ArrayValue::Finite(vec![1, 2, 3]));
        let read = Expr::array("A", vec![Expr::sym("i")]);
        assert_eq!(v.eval(&read), None);
        let read0 = Expr::array("A", vec![Expr::Const(2)]);
        assert_eq!(v.eval(&read0), Some(3));
    }
}
