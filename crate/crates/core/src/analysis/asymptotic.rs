//! Asymptotic classes of bound expressions, with every input collapsed to one size `n`.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::symexpr::Expr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Complexity {
    /// `n^degree * (log n)^log`.
    Poly { degree: u32, log: u32 },
    Exponential,
    Unbounded,
}

use Complexity::*;

pub const CONSTANT: Complexity = Poly { degree: 0, log: 0 };
const LINEAR: Complexity = Poly { degree: 1, log: 0 };

impl fmt::Display for Complexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Unbounded => f.write_str("unbounded"),
            Exponential => f.write_str("O(2^n)"),
            Poly { degree: 0, log: 0 } => f.write_str("O(1)"),
            Poly { degree, log } => {
                let mut parts = Vec::new();
                match degree {
                    0 => {}
                    1 => parts.push("n".to_string()),
                    d => parts.push(format!("n^{d}")),
                }
                match log {
                    0 => {}
                    1 => parts.push("log n".to_string()),
                    l => parts.push(format!("log^{l} n")),
                }
                write!(f, "O({})", parts.join(" "))
            }
        }
    }
}

impl Serialize for Complexity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn times(a: Complexity, b: Complexity) -> Complexity {
    match (a, b) {
        (Unbounded, _) | (_, Unbounded) => Unbounded,
        (Exponential, _) | (_, Exponential) => Exponential,
        (Poly { degree: d1, log: l1 }, Poly { degree: d2, log: l2 }) => Poly {
            degree: d1 + d2,
            log: l1 + l2,
        },
    }
}

fn is_negative(e: &Expr) -> bool {
    match e {
        Expr::Const(c) => *c < 0,
        Expr::Mul(xs) => xs.iter().filter(|x| is_negative(x)).count() % 2 == 1,
        _ => false,
    }
}

/// Growth of a sum: the positive part wins unless the negative part grows faster,
/// in which case the sum is eventually negative and bounded from above.
fn signed(pos: &[&Expr], neg: &[&Expr]) -> Complexity {
    let p = pos.iter().map(|x| class_of(x)).max().unwrap_or(CONSTANT);
    let n = neg.iter().map(|x| class_of(x)).max().unwrap_or(CONSTANT);
    if p >= n || matches!(p, Unbounded) {
        p
    } else {
        CONSTANT
    }
}

/// Class of a single bound expression.
pub fn class_of(e: &Expr) -> Complexity {
    match e {
        Expr::Const(_) => CONSTANT,
        Expr::Symbol(_) | Expr::ArrayRead(..) | Expr::Index(_) | Expr::Counter(_) => LINEAR,
        Expr::Unknown => Unbounded,
        Expr::Add(xs) => {
            let (neg, pos): (Vec<&Expr>, Vec<&Expr>) = xs.iter().partition(|x| is_negative(x));
            signed(&pos, &neg)
        }
        Expr::Sub(a, b) => signed(&[a], &[b]),
        Expr::Mul(xs) => xs.iter().map(class_of).fold(CONSTANT, times),
        Expr::Div(a, _) | Expr::Ceil(a, _) | Expr::Floor(a, _) => class_of(a),
        Expr::Max(xs) => xs.iter().map(class_of).max().unwrap_or(CONSTANT),
        Expr::Min(xs) => xs.iter().map(class_of).min().unwrap_or(CONSTANT),
        Expr::Ite(_, a, b) => class_of(a).max(class_of(b)),
        Expr::Sum { upper, body, .. } => times(class_of(upper), class_of(body)),
        Expr::Pow(b, x) => match (b.as_const(), x.as_const()) {
            (_, Some(k)) if k >= 0 => (0..k).fold(CONSTANT, |acc, _| times(acc, class_of(b))),
            (Some(-1..=1), _) => CONSTANT,
            _ if class_of(x) == CONSTANT => CONSTANT,
            _ => Exponential,
        },
        Expr::Log(_, x) => match class_of(x) {
            c if c == CONSTANT => CONSTANT,
            Exponential => LINEAR,
            Unbounded => Unbounded,
            _ => Poly { degree: 0, log: 1 },
        },
    }
}

/// Class of the least member of a bound set; unbounded when the set is empty.
pub fn class_of_set(set: &[Expr]) -> Complexity {
    set.iter().map(class_of).min().unwrap_or(Unbounded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_expr;
    use crate::symexpr::simplify;

    fn class(e: Expr) -> String {
        class_of(&simplify(&e)).to_string()
    }

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    fn pos(s: &str) -> Expr {
        Expr::max(vec![Expr::Const(0), p(s)])
    }

    #[test]
    fn polynomial_degrees() {
        assert_eq!(class(pos("a*a + b - 1")), "O(n^2)");
        assert_eq!(class(p("3")), "O(1)");
        assert_eq!(class(pos("n")), "O(n)");
        assert_eq!(class(pos("x - 5")), "O(n)");
        assert_eq!(class(Expr::min(vec![pos("n"), p("3")])), "O(1)");
        assert_eq!(class(pos("n - m")), "O(n)");
        assert_eq!(class(p("5 - n")), "O(1)");
    }

    #[test]
    fn sums_logs_and_powers() {
        let body = Expr::max(vec![
            Expr::Const(0),
            Expr::sub(Expr::sym("n"), Expr::Index("K".into())),
        ]);
        let s = Expr::sum("K", Expr::Const(0), Expr::sym("n"), body);
        assert_eq!(class_of(&s).to_string(), "O(n^2)");
        assert_eq!(class_of(&Expr::log(2, Expr::sym("n"))).to_string(), "O(log n)");
        let nlogn = Expr::mul(Expr::sym("n"), Expr::log(2, Expr::sym("n")));
        assert_eq!(class_of(&nlogn).to_string(), "O(n log n)");
        assert_eq!(class_of(&Expr::pow(Expr::Const(2), Expr::sym("n"))).to_string(), "O(2^n)");
        assert_eq!(class_of_set(&[]).to_string(), "unbounded");
        assert!(CONSTANT < LINEAR && LINEAR < Exponential && Exponential < Unbounded);
    }
}
