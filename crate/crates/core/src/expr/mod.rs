//! Scalar expressions over the phase-space coordinates `x, y, p, q`.
//!
//! Expressions are immutable trees. They are produced by [`parse`], by the
//! smart constructors on [`Expr`], or by [`differentiate`] and [`simplify`].
//! Evaluation never panics: invalid arithmetic (logarithm or square root of a
//! negative number, division by zero, non-finite intermediate values) is
//! reported as an [`EvalError`] carrying the offending sub-expression.

mod diff;
mod parse;
mod simplify;
mod zero;

use std::fmt;

use thiserror::Error;

pub use diff::{differentiate, DiffError};
pub use parse::{parse, ParseError, ParseErrorKind};
pub use simplify::simplify;
pub use zero::{is_zero, is_zero_with_tol, ZeroError, ZeroVerdict, DEFAULT_ZERO_TOL};

/// One of the four canonical Darboux coordinates.
///
/// The ordering `X < Y < P < Q` is the basis order used by every form,
/// matrix and section in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X,
    Y,
    P,
    Q,
}

impl Var {
    pub const ALL: [Var; 4] = [Var::X, Var::Y, Var::P, Var::Q];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Var {
        Var::ALL[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::P => "p",
            Var::Q => "q",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        match name {
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            "p" => Some(Var::P),
            "q" => Some(Var::Q),
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sign,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Abs,
        Func::Sign,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Applies the function, returning `None` outside its real domain.
    pub fn apply(self, v: f64) -> Option<f64> {
        let out = match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Ln => {
                if v <= 0.0 {
                    return None;
                }
                v.ln()
            }
            Func::Sqrt => {
                if v < 0.0 {
                    return None;
                }
                v.sqrt()
            }
            Func::Abs => v.abs(),
            Func::Sign => {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        };
        out.is_finite().then_some(out)
    }
}

/// A point of the phase space in Darboux coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point(pub [f64; 4]);

impl Point {
    pub fn new(x: f64, y: f64, p: f64, q: f64) -> Self {
        Point([x, y, p, q])
    }

    pub fn get(&self, v: Var) -> f64 {
        self.0[v.index()]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y, p, q] = self.0;
        write!(f, "(x={x}, y={y}, p={p}, q={q})")
    }
}

/// Expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Func(Func, Box<Expr>),
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("domain error: `{expr}` is undefined at {point}")]
pub struct EvalError {
    pub expr: Expr,
    pub point: Point,
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn zero() -> Expr {
        Expr::Num(0.0)
    }

    pub fn one() -> Expr {
        Expr::Num(1.0)
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_literal_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    pub fn is_literal_one(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 1.0)
    }

    // Smart constructors: fold literals and drop 0/1 identities. Negation
    // is an involution on their output, which keeps coefficient round trips
    // structural.

    pub fn neg(e: Expr) -> Expr {
        match e {
            Expr::Num(v) => Expr::Num(-v),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x + y),
            (Some(0.0), _) => b,
            (_, Some(0.0)) => a,
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x - y),
            (Some(0.0), _) => Expr::neg(b),
            (_, Some(0.0)) => a,
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::zero(),
            (Some(1.0), _) => b,
            (_, Some(1.0)) => a,
            (Some(-1.0), _) => Expr::neg(b),
            (_, Some(-1.0)) => Expr::neg(a),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::Num(x / y),
            (Some(0.0), _) => Expr::zero(),
            (_, Some(1.0)) => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(base: Expr, n: i32) -> Expr {
        match (base.as_num(), n) {
            (_, 0) => Expr::one(),
            (_, 1) => base,
            (Some(v), _) if v != 0.0 || n > 0 => Expr::Num(v.powi(n)),
            _ => Expr::Pow(Box::new(base), n),
        }
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        if let Some(v) = arg.as_num() {
            if let Some(out) = f.apply(v) {
                return Expr::Num(out);
            }
        }
        Expr::Func(f, Box::new(arg))
    }

    pub fn sqrt(arg: Expr) -> Expr {
        Expr::func(Func::Sqrt, arg)
    }

    /// Sum of an arbitrary number of terms.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), Expr::add)
    }

    /// Evaluates at `pt`.
    pub fn eval(&self, pt: &Point) -> Result<f64, EvalError> {
        let fail = |e: &Expr| EvalError {
            expr: e.clone(),
            point: *pt,
        };
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(v) => pt.get(*v),
            Expr::Neg(a) => -a.eval(pt)?,
            Expr::Add(a, b) => a.eval(pt)? + b.eval(pt)?,
            Expr::Sub(a, b) => a.eval(pt)? - b.eval(pt)?,
            Expr::Mul(a, b) => a.eval(pt)? * b.eval(pt)?,
            Expr::Div(a, b) => {
                let num = a.eval(pt)?;
                let den = b.eval(pt)?;
                if den == 0.0 {
                    return Err(fail(self));
                }
                num / den
            }
            Expr::Pow(a, n) => {
                let base = a.eval(pt)?;
                if base == 0.0 && *n < 0 {
                    return Err(fail(self));
                }
                base.powi(*n)
            }
            Expr::Func(f, a) => f.apply(a.eval(pt)?).ok_or_else(|| fail(self))?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(fail(self))
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => 1 + a.node_count(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.node_count() + b.node_count()
            }
        }
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.depends_on(v),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on(v) || b.depends_on(v)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        Var::ALL.iter().all(|v| !self.depends_on(*v))
    }

    /// Replaces every occurrence of `v` by `with`.
    pub fn substitute(&self, v: Var, with: &Expr) -> Expr {
        let sub = |e: &Expr| Box::new(e.substitute(v, with));
        match self {
            Expr::Num(_) => self.clone(),
            Expr::Var(w) if *w == v => with.clone(),
            Expr::Var(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(sub(a)),
            Expr::Add(a, b) => Expr::Add(sub(a), sub(b)),
            Expr::Sub(a, b) => Expr::Sub(sub(a), sub(b)),
            Expr::Mul(a, b) => Expr::Mul(sub(a), sub(b)),
            Expr::Div(a, b) => Expr::Div(sub(a), sub(b)),
            Expr::Pow(a, n) => Expr::Pow(sub(a), *n),
            Expr::Func(f, a) => Expr::Func(*f, sub(a)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => 0,
            Expr::Num(_) | Expr::Var(_) | Expr::Func(..) => 5,
        }
    }

    fn write_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

/// Prints in the input grammar with the minimal parentheses needed for the
/// text to reparse to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                    write!(f, "-{}", -v)
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.write_child(f, 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write_child(f, 1)?;
                f.write_str(if matches!(self, Expr::Add(..)) {
                    " + "
                } else {
                    " - "
                })?;
                b.write_child(f, 2)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.write_child(f, 2)?;
                f.write_str(if matches!(self, Expr::Mul(..)) {
                    "*"
                } else {
                    "/"
                })?;
                b.write_child(f, 3)
            }
            Expr::Pow(a, n) => {
                a.write_child(f, 5)?;
                write!(f, "^{n}")
            }
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Self {
        Expr::Var(v)
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::Num(v)
    }
}
