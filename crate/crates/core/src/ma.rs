//! Monge-Ampère structures `(Ω, α)` on the 4D phase space.
//!
//! The effective form is stored through its five coefficients
//!
//! ```text
//! α = A dp∧dy + B (dx∧dp − dy∧dq) + C dx∧dq + D dp∧dq + E dx∧dy
//! ```
//!
//! which makes `α∧Ω = 0` hold by construction.

use std::fmt;

use nalgebra::Matrix4;
use thiserror::Error;

use crate::expr::{
    differentiate, is_zero, simplify, DiffError, EvalError, Expr, ParseError, Point, Var,
    ZeroError, ZeroVerdict,
};
use crate::phase::{wedge_top, SampleError, SamplePlan, TwoForm, DEFAULT_PFAFFIAN_FLOOR};

/// Sign relating [`MAStructure::pullback_oracle`] to [`MAStructure::residual`].
/// Fixed once from the Laplace structure, whose pullback is `-(f_xx + f_yy)`.
pub const PULLBACK_SIGN: f64 = 1.0;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MaError {
    #[error("2-form is not effective: c_xp + c_yq = {value} at {witness}")]
    NotEffective { witness: Point, value: f64 },
    #[error("structure is degenerate at {point}: |Pf| = {} < {floor}", pfaffian.abs())]
    Degenerate {
        point: Point,
        pfaffian: f64,
        floor: f64,
    },
    #[error("Pfaffian has sign opposite to the declared region sign {declared} at {witness} (Pf = {value})")]
    SignMismatch {
        declared: Sign,
        witness: Point,
        value: f64,
    },
    #[error("`{0}` must be a function of x and y only")]
    DependsOnFiber(Expr),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Zero(#[from] ZeroError),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// Sign of a non-zero real; `None` for zero or NaN.
    pub fn of(v: f64) -> Option<Sign> {
        if v > 0.0 {
            Some(Sign::Plus)
        } else if v < 0.0 {
            Some(Sign::Minus)
        } else {
            None
        }
    }

    pub fn from_value(v: f64) -> Option<Sign> {
        match v {
            1.0 => Some(Sign::Plus),
            -1.0 => Some(Sign::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// The effective coefficients `(A, B, C, D, E)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MAStructure {
    pub a: Expr,
    pub b: Expr,
    pub c: Expr,
    pub d: Expr,
    pub e: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfaffianClass {
    Elliptic,
    Hyperbolic,
    Degenerate,
    Mixed,
}

impl PfaffianClass {
    pub fn label(self) -> &'static str {
        match self {
            PfaffianClass::Elliptic => "Elliptic",
            PfaffianClass::Hyperbolic => "Hyperbolic",
            PfaffianClass::Degenerate => "Degenerate",
            PfaffianClass::Mixed => "Mixed",
        }
    }

    pub fn sign(self) -> Option<Sign> {
        match self {
            PfaffianClass::Elliptic => Some(Sign::Plus),
            PfaffianClass::Hyperbolic => Some(Sign::Minus),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub class: PfaffianClass,
    pub positive: Option<Point>,
    pub negative: Option<Point>,
    pub degenerate: Option<Point>,
    /// Sample points where the Pfaffian could not be evaluated.
    pub skipped: usize,
    pub min_abs_pfaffian: f64,
}

/// A declared sign for the Pfaffian, checked against sample points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignedRegion {
    sign: Sign,
}

impl SignedRegion {
    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// Checks `sign` against every sampled point of `plan`.
    pub fn validate(
        s: &MAStructure,
        sign: Sign,
        plan: &SamplePlan,
    ) -> Result<SignedRegion, MaError> {
        let pf = s.pfaffian();
        for pt in plan.sample()? {
            let v = pf.eval(&pt)?;
            if Sign::of(v) != Some(sign) {
                return Err(MaError::SignMismatch {
                    declared: sign,
                    witness: pt,
                    value: v,
                });
            }
        }
        Ok(SignedRegion { sign })
    }
}

impl MAStructure {
    pub const NAMES: [&'static str; 5] = ["A", "B", "C", "D", "E"];

    pub fn new(a: Expr, b: Expr, c: Expr, d: Expr, e: Expr) -> Self {
        MAStructure { a, b, c, d, e }
    }

    pub fn parse(a: &str, b: &str, c: &str, d: &str, e: &str) -> Result<Self, ParseError> {
        use crate::expr::parse;
        Ok(MAStructure::new(
            parse(a)?,
            parse(b)?,
            parse(c)?,
            parse(d)?,
            parse(e)?,
        ))
    }

    pub fn constant(a: f64, b: f64, c: f64, d: f64, e: f64) -> Self {
        MAStructure::new(a.into(), b.into(), c.into(), d.into(), e.into())
    }

    /// `α = −dx∧dq + dy∧dp`, the Laplace equation.
    pub fn laplace() -> Self {
        MAStructure::constant(-1.0, 0.0, -1.0, 0.0, 0.0)
    }

    /// `α = dp∧dy − dx∧dq`, the wave equation `f_xx − f_yy = 0`.
    pub fn wave() -> Self {
        MAStructure::constant(1.0, 0.0, -1.0, 0.0, 0.0)
    }

    /// `α = p dp∧dy + dx∧dq`.
    pub fn von_karman() -> Self {
        MAStructure::new(
            Expr::var(Var::P),
            0.0.into(),
            1.0.into(),
            0.0.into(),
            0.0.into(),
        )
    }

    /// `(A, B, −A, 0, 0)`: when `A² + B² = 1` the Pfaffian is `−1` and the
    /// matrix of `α` is orthogonal and commutes with that of `Ω`.
    pub fn orthogonal_family(a: Expr, b: Expr) -> Self {
        let c = Expr::neg(a.clone());
        MAStructure::new(a, b, c, Expr::zero(), Expr::zero())
    }

    pub fn coeffs(&self) -> [&Expr; 5] {
        [&self.a, &self.b, &self.c, &self.d, &self.e]
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> MAStructure {
        MAStructure::new(f(&self.a), f(&self.b), f(&self.c), f(&self.d), f(&self.e))
    }

    /// `h α`.
    pub fn scaled(&self, h: &Expr) -> MAStructure {
        self.map(|c| Expr::mul(h.clone(), c.clone()))
    }

    pub fn simplified(&self) -> MAStructure {
        self.map(simplify)
    }

    /// `(c_xy, c_xp, c_xq, c_yp, c_yq, c_pq) = (E, B, C, −A, −B, D)`.
    pub fn to_two_form(&self) -> TwoForm {
        TwoForm::new([
            self.e.clone(),
            self.b.clone(),
            self.c.clone(),
            Expr::neg(self.a.clone()),
            Expr::neg(self.b.clone()),
            self.d.clone(),
        ])
    }

    /// Reads the coefficients back from an effective 2-form.
    pub fn from_two_form(form: &TwoForm, plan: &SamplePlan) -> Result<MAStructure, MaError> {
        let [c_xy, c_xp, c_xq, c_yp, c_yq, c_pq] = &form.coeffs;
        let trace = Expr::add(c_xp.clone(), c_yq.clone());
        if let ZeroVerdict::NonZero { witness, value } = is_zero(&trace, plan)? {
            return Err(MaError::NotEffective { witness, value });
        }
        Ok(MAStructure::new(
            Expr::neg(c_yp.clone()),
            c_xp.clone(),
            c_xq.clone(),
            c_pq.clone(),
            c_xy.clone(),
        ))
    }

    /// `Pf(α) = −B² + AC − DE`, simplified.
    pub fn pfaffian(&self) -> Expr {
        simplify(&Expr::sum([
            Expr::neg(Expr::pow(self.b.clone(), 2)),
            Expr::mul(self.a.clone(), self.c.clone()),
            Expr::neg(Expr::mul(self.d.clone(), self.e.clone())),
        ]))
    }

    /// `α∧α / Ω∧Ω` at `pt`, computed from the wedge product directly.
    pub fn pfaffian_oracle(&self, pt: &Point) -> Result<f64, EvalError> {
        let alpha = self.to_two_form();
        let omega = TwoForm::symplectic();
        Ok(wedge_top(&alpha, &alpha).eval(pt)? / wedge_top(&omega, &omega).eval(pt)?)
    }

    /// Sign classification of the Pfaffian over the plan's points, with
    /// `|Pf| < floor` counted as degenerate.
    pub fn classify(&self, plan: &SamplePlan) -> Result<Classification, SampleError> {
        let floor = plan
            .pfaffian_floor
            .as_ref()
            .map_or(DEFAULT_PFAFFIAN_FLOOR, |f| f.floor);
        self.classify_with(plan, floor)
    }

    pub fn classify_with(
        &self,
        plan: &SamplePlan,
        floor: f64,
    ) -> Result<Classification, SampleError> {
        let pf = self.pfaffian();
        let mut out = Classification {
            class: PfaffianClass::Degenerate,
            positive: None,
            negative: None,
            degenerate: None,
            skipped: 0,
            min_abs_pfaffian: f64::INFINITY,
        };
        for pt in plan.sample()? {
            let Ok(v) = pf.eval(&pt) else {
                out.skipped += 1;
                continue;
            };
            out.min_abs_pfaffian = out.min_abs_pfaffian.min(v.abs());
            let slot = if v.abs() < floor {
                &mut out.degenerate
            } else if v > 0.0 {
                &mut out.positive
            } else {
                &mut out.negative
            };
            slot.get_or_insert(pt);
        }
        out.class = match (out.positive, out.negative, out.degenerate) {
            (Some(_), Some(_), _) => PfaffianClass::Mixed,
            (_, _, Some(_)) => PfaffianClass::Degenerate,
            (Some(_), None, None) => PfaffianClass::Elliptic,
            (None, Some(_), None) => PfaffianClass::Hyperbolic,
            (None, None, None) => PfaffianClass::Degenerate,
        };
        Ok(out)
    }

    /// `(±Pf)^(−1/2)` on a region of constant sign.
    pub fn normalizing_factor(&self, region: &SignedRegion) -> Expr {
        let signed = simplify(&Expr::mul(Expr::num(region.sign.value()), self.pfaffian()));
        Expr::pow(Expr::sqrt(signed), -1)
    }

    /// `|Pf|^(−1/2) α`, with `|Pf|` rewritten as `±Pf` on `region`.
    pub fn normalize(
        &self,
        region: &SignedRegion,
        plan: &SamplePlan,
    ) -> Result<MAStructure, MaError> {
        let checked = SignedRegion::validate(self, region.sign, plan)?;
        let factor = self.normalizing_factor(&checked);
        Ok(self.scaled(&factor).simplified())
    }

    /// Matrix of `α_#` at `pt`.
    pub fn alpha_matrix(&self, pt: &Point) -> Result<Matrix4<f64>, EvalError> {
        self.to_two_form().matrix_at(pt)
    }

    /// `ρ = |Pf|^(−1/2) π_Ω^# ∘ α_#` at `pt`.
    pub fn rho_at(&self, pt: &Point, floor: f64) -> Result<Matrix4<f64>, MaError> {
        let [a, b, c, d, e] = self.coeffs().map(|k| k.eval(pt));
        let (a, b, c, d, e) = (a?, b?, c?, d?, e?);
        let pf = -b * b + a * c - d * e;
        if pf.abs() < floor {
            return Err(MaError::Degenerate {
                point: *pt,
                pfaffian: pf,
                floor,
            });
        }
        #[rustfmt::skip]
        let m = Matrix4::new(
            b, -a, 0.0, -d,
            c, -b, d, 0.0,
            0.0, e, b, c,
            -e, 0.0, -a, -b,
        );
        Ok(m / pf.abs().sqrt())
    }

    /// Entries of `ρ` as expressions, with `|Pf|` rewritten on `region`.
    pub fn rho_field(&self, region: &SignedRegion) -> [[Expr; 4]; 4] {
        let k = self.normalizing_factor(region);
        let s = |e: &Expr| simplify(&Expr::mul(k.clone(), e.clone()));
        let n = |e: &Expr| simplify(&Expr::mul(k.clone(), Expr::neg(e.clone())));
        let z = Expr::zero;
        let (a, b, c, d, e) = (&self.a, &self.b, &self.c, &self.d, &self.e);
        [
            [s(b), n(a), z(), n(d)],
            [s(c), n(b), s(d), z()],
            [z(), s(e), s(b), s(c)],
            [n(e), z(), n(a), n(b)],
        ]
    }

    /// Coefficients with the fiber coordinates replaced by `p → f_x`, `q → f_y`.
    fn on_graph(&self, fx: &Expr, fy: &Expr) -> MAStructure {
        self.map(|c| c.substitute(Var::P, fx).substitute(Var::Q, fy))
    }

    /// `A f_xx + 2B f_xy + C f_yy + D (f_xx f_yy − f_xy²) + E` along `(x, y, f_x, f_y)`.
    pub fn residual(&self, f: &Expr) -> Result<Expr, MaError> {
        let h = Hessian::of(f)?;
        let s = self.on_graph(&h.fx, &h.fy);
        let det = Expr::sub(
            Expr::mul(h.fxx.clone(), h.fyy.clone()),
            Expr::pow(h.fxy.clone(), 2),
        );
        Ok(simplify(&Expr::sum([
            Expr::mul(s.a, h.fxx.clone()),
            Expr::mul(Expr::num(2.0), Expr::mul(s.b, h.fxy.clone())),
            Expr::mul(s.c, h.fyy.clone()),
            Expr::mul(s.d, det),
            s.e,
        ])))
    }

    /// The `dx∧dy` coefficient of the pullback of `α` along the graph of `df`,
    /// computed by substituting `dp → f_xx dx + f_xy dy`, `dq → f_xy dx + f_yy dy`
    /// into every basis 2-form.
    pub fn pullback_oracle(&self, f: &Expr) -> Result<Expr, MaError> {
        let h = Hessian::of(f)?;
        let form = self.to_two_form();
        let one = Expr::one;
        let zero = Expr::zero;
        // pullbacks of dx, dy, dp, dq as (dx, dy) components
        let pulled = [
            [one(), zero()],
            [zero(), one()],
            [h.fxx.clone(), h.fxy.clone()],
            [h.fxy.clone(), h.fyy.clone()],
        ];
        let mut terms = Vec::with_capacity(6);
        for (k, &(i, j)) in crate::phase::TWO_FORM_BASIS.iter().enumerate() {
            let [ui0, ui1] = pulled[i].clone();
            let [uj0, uj1] = pulled[j].clone();
            let minor = Expr::sub(Expr::mul(ui0, uj1), Expr::mul(ui1, uj0));
            let coeff = form.coeffs[k]
                .substitute(Var::P, &h.fx)
                .substitute(Var::Q, &h.fy);
            terms.push(Expr::mul(coeff, minor));
        }
        Ok(simplify(&Expr::sum(terms)))
    }
}

struct Hessian {
    fx: Expr,
    fy: Expr,
    fxx: Expr,
    fxy: Expr,
    fyy: Expr,
}

impl Hessian {
    fn of(f: &Expr) -> Result<Hessian, MaError> {
        if f.depends_on(Var::P) || f.depends_on(Var::Q) {
            return Err(MaError::DependsOnFiber(f.clone()));
        }
        let fx = differentiate(f, Var::X)?;
        let fy = differentiate(f, Var::Y)?;
        Ok(Hessian {
            fxx: differentiate(&fx, Var::X)?,
            fxy: differentiate(&fx, Var::Y)?,
            fyy: differentiate(&fy, Var::Y)?,
            fx,
            fy,
        })
    }
}
