use thiserror::Error;

use super::{simplify, Expr, Func, Var};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DiffError {
    /// `abs` and `sign` have no derivative at zero; callers rewrite them on
    /// a sign-definite region instead.
    #[error(
        "`{0}` is not differentiable with respect to {1}; rewrite it on a sign-definite region"
    )]
    NonDifferentiable(Expr, Var),
}

/// Exact partial derivative of `e` with respect to `v`, simplified.
pub fn differentiate(e: &Expr, v: Var) -> Result<Expr, DiffError> {
    Ok(simplify(&raw(e, v)?))
}

fn raw(e: &Expr, v: Var) -> Result<Expr, DiffError> {
    if !e.depends_on(v) {
        return Ok(Expr::zero());
    }
    Ok(match e {
        Expr::Num(_) => Expr::zero(),
        Expr::Var(w) => Expr::num(if *w == v { 1.0 } else { 0.0 }),
        Expr::Neg(a) => Expr::neg(raw(a, v)?),
        Expr::Add(a, b) => Expr::add(raw(a, v)?, raw(b, v)?),
        Expr::Sub(a, b) => Expr::sub(raw(a, v)?, raw(b, v)?),
        Expr::Mul(a, b) => Expr::add(
            Expr::mul(raw(a, v)?, (**b).clone()),
            Expr::mul((**a).clone(), raw(b, v)?),
        ),
        Expr::Div(a, b) => {
            // (a'b - ab') / b^2
            let num = Expr::sub(
                Expr::mul(raw(a, v)?, (**b).clone()),
                Expr::mul((**a).clone(), raw(b, v)?),
            );
            Expr::div(num, Expr::pow((**b).clone(), 2))
        }
        Expr::Pow(a, n) => Expr::mul(
            Expr::mul(Expr::num(*n as f64), Expr::pow((**a).clone(), n - 1)),
            raw(a, v)?,
        ),
        Expr::Func(f, a) => {
            let inner = raw(a, v)?;
            let outer = match f {
                Func::Sin => Expr::func(Func::Cos, (**a).clone()),
                Func::Cos => Expr::neg(Expr::func(Func::Sin, (**a).clone())),
                Func::Exp => e.clone(),
                Func::Ln => Expr::pow((**a).clone(), -1),
                Func::Sqrt => Expr::div(Expr::num(0.5), e.clone()),
                Func::Abs | Func::Sign => return Err(DiffError::NonDifferentiable(e.clone(), v)),
            };
            Expr::mul(outer, inner)
        }
    })
}
