//! Canonical text of expressions and formulas.
//!
//! Symbols print as `$a`, array symbols as `$A(i, j)`, path counters as
//! `k1`, the unknown value as `*`. [`ProgramText`] prints the same trees as
//! program source (bare variable names, `A[i]`), which is what `.fg` files use.

use std::fmt::{self, Display, Formatter, Write};

use super::{Expr, Formula, Rel};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Symbolic,
    Program,
}

const PREC_SUM: u8 = 1;
const PREC_PROD: u8 = 2;
const PREC_ATOM: u8 = 3;

/// Renders an expression or formula as program text.
pub struct ProgramText<'a, T>(pub &'a T);

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_expr(f, self, Mode::Symbolic)
    }
}

impl Display for Formula {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_formula(f, self, Mode::Symbolic, 0)
    }
}

impl Display for ProgramText<'_, Expr> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_expr(f, self.0, Mode::Program)
    }
}

impl Display for ProgramText<'_, Formula> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_formula(f, self.0, Mode::Program, 0)
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(xs) if xs.len() > 1 => PREC_SUM,
        Expr::Sub(..) => PREC_SUM,
        Expr::Mul(xs) if xs.len() > 1 => PREC_PROD,
        Expr::Div(..) => PREC_PROD,
        Expr::Const(c) if *c < 0 => PREC_PROD,
        Expr::Pow(..) => PREC_PROD + 1,
        _ => PREC_ATOM,
    }
}

fn write_at(f: &mut dyn Write, e: &Expr, mode: Mode, min_prec: u8) -> fmt::Result {
    if prec(e) < min_prec {
        f.write_char('(')?;
        write_expr(f, e, mode)?;
        f.write_char(')')
    } else {
        write_expr(f, e, mode)
    }
}

/// A term's sign and magnitude, so that sums print as `a - b` rather than `a + -b`.
fn negated_term(e: &Expr) -> Option<Expr> {
    match e {
        Expr::Const(c) if *c < 0 => Some(Expr::Const(-c)),
        Expr::Mul(xs) => match xs.first() {
            Some(Expr::Const(-1)) if xs.len() == 2 => Some(xs[1].clone()),
            Some(Expr::Const(-1)) => Some(Expr::Mul(xs[1..].to_vec())),
            Some(Expr::Const(c)) if *c < 0 => {
                let mut ys = xs.clone();
                ys[0] = Expr::Const(-c);
                Some(Expr::Mul(ys))
            }
            _ => None,
        },
        _ => None,
    }
}

fn write_list(f: &mut dyn Write, xs: &[Expr], mode: Mode) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write_expr(f, x, mode)?;
    }
    Ok(())
}

fn write_expr(f: &mut dyn Write, e: &Expr, mode: Mode) -> fmt::Result {
    match e {
        Expr::Const(c) => write!(f, "{c}"),
        Expr::Symbol(s) => match mode {
            Mode::Symbolic => write!(f, "${s}"),
            Mode::Program => f.write_str(s),
        },
        Expr::Counter(k) => write!(f, "{k}"),
        Expr::Index(k) => f.write_str(k),
        Expr::Unknown => f.write_char('*'),
        Expr::ArrayRead(a, args) => match mode {
            Mode::Symbolic => {
                write!(f, "${a}(")?;
                write_list(f, args, mode)?;
                f.write_char(')')
            }
            Mode::Program => {
                f.write_str(a)?;
                for x in args {
                    f.write_char('[')?;
                    write_expr(f, x, mode)?;
                    f.write_char(']')?;
                }
                Ok(())
            }
        },
        Expr::Add(xs) => {
            if xs.is_empty() {
                return f.write_char('0');
            }
            for (i, x) in xs.iter().enumerate() {
                if i == 0 {
                    write_at(f, x, mode, PREC_SUM)?;
                } else if let Some(pos) = negated_term(x) {
                    f.write_str(" - ")?;
                    write_at(f, &pos, mode, PREC_PROD)?;
                } else {
                    f.write_str(" + ")?;
                    write_at(f, x, mode, PREC_SUM)?;
                }
            }
            Ok(())
        }
        Expr::Sub(a, b) => {
            write_at(f, a, mode, PREC_SUM)?;
            f.write_str(" - ")?;
            write_at(f, b, mode, PREC_PROD)
        }
        Expr::Mul(xs) => {
            if xs.is_empty() {
                return f.write_char('1');
            }
            let rest = match xs.first() {
                Some(Expr::Const(-1)) if xs.len() > 1 => {
                    f.write_char('-')?;
                    &xs[1..]
                }
                _ => &xs[..],
            };
            for (i, x) in rest.iter().enumerate() {
                if i > 0 {
                    f.write_char('*')?;
                }
                let need = if i == 0 { PREC_PROD } else { PREC_ATOM };
                write_at(f, x, mode, need)?;
            }
            Ok(())
        }
        Expr::Div(a, b) => {
            write_at(f, a, mode, PREC_PROD)?;
            f.write_char('/')?;
            write_at(f, b, mode, PREC_ATOM)
        }
        Expr::Max(xs) => {
            f.write_str("max{")?;
            write_list(f, xs, mode)?;
            f.write_char('}')
        }
        Expr::Min(xs) => {
            f.write_str("min{")?;
            write_list(f, xs, mode)?;
            f.write_char('}')
        }
        Expr::Ceil(a, b) | Expr::Floor(a, b) => {
            f.write_str(if matches!(e, Expr::Ceil(..)) {
                "ceil("
            } else {
                "floor("
            })?;
            write_at(f, a, mode, PREC_ATOM)?;
            f.write_char('/')?;
            write_at(f, b, mode, PREC_ATOM)?;
            f.write_char(')')
        }
        Expr::Ite(c, a, b) => {
            f.write_str("ite(")?;
            write_formula(f, c, mode, 0)?;
            f.write_str(", ")?;
            write_expr(f, a, mode)?;
            f.write_str(", ")?;
            write_expr(f, b, mode)?;
            f.write_char(')')
        }
        Expr::Sum {
            index,
            lower,
            upper,
            body,
        } => {
            write!(f, "sum({index}=")?;
            write_expr(f, lower, mode)?;
            f.write_str("..")?;
            write_expr(f, upper, mode)?;
            f.write_str(", ")?;
            write_expr(f, body, mode)?;
            f.write_char(')')
        }
        Expr::Pow(b, x) => {
            write_at(f, b, mode, PREC_ATOM)?;
            f.write_char('^')?;
            write_at(f, x, mode, PREC_ATOM)
        }
        Expr::Log(base, a) => {
            write!(f, "log{base}(")?;
            write_expr(f, a, mode)?;
            f.write_char(')')
        }
    }
}

fn write_formula(f: &mut dyn Write, phi: &Formula, mode: Mode, ctx: u8) -> fmt::Result {
    // ctx: 0 top, 1 inside ||, 2 inside &&
    match phi {
        Formula::True => f.write_str("true"),
        Formula::False => f.write_str("false"),
        Formula::Cmp(r, a, b) => {
            write_expr(f, a, mode)?;
            f.write_str(match r {
                Rel::Lt => " < ",
                Rel::Le => " <= ",
                Rel::Eq => " == ",
                Rel::Ne => " != ",
            })?;
            write_expr(f, b, mode)
        }
        Formula::And(xs) => {
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(" && ")?;
                }
                write_formula(f, x, mode, 2)?;
            }
            Ok(())
        }
        Formula::Or(xs) => {
            let paren = ctx == 2;
            if paren {
                f.write_char('(')?;
            }
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(" || ")?;
                }
                write_formula(f, x, mode, 1)?;
            }
            if paren {
                f.write_char(')')?;
            }
            Ok(())
        }
        Formula::Not(x) => {
            f.write_str("!(")?;
            write_formula(f, x, mode, 0)?;
            f.write_char(')')
        }
    }
}
