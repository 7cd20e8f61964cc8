//! Differential forms on the flat phase space `T*R^2` with coordinates
//! `(x, y, p, q)`, and deterministic point sampling.

use nalgebra::Matrix4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{differentiate, simplify, DiffError, Expr, Point, Var};
use crate::ma::MAStructure;

/// Ordered index pairs of the 2-form basis
/// `dx∧dy, dx∧dp, dx∧dq, dy∧dp, dy∧dq, dp∧dq`.
pub const TWO_FORM_BASIS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Ordered index triples of the 3-form basis
/// `dx∧dy∧dp, dx∧dy∧dq, dx∧dp∧dq, dy∧dp∧dq`.
pub const THREE_FORM_BASIS: [(usize, usize, usize); 4] =
    [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)];

fn pair_index(i: usize, j: usize) -> usize {
    TWO_FORM_BASIS
        .iter()
        .position(|&(a, b)| a == i && b == j)
        .expect("i < j < 4")
}

/// A 2-form with expression coefficients in the fixed basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoForm {
    pub coeffs: [Expr; 6],
}

impl TwoForm {
    pub const NAMES: [&'static str; 6] = ["c_xy", "c_xp", "c_xq", "c_yp", "c_yq", "c_pq"];

    pub fn new(coeffs: [Expr; 6]) -> Self {
        TwoForm { coeffs }
    }

    pub fn zero() -> Self {
        TwoForm::new(std::array::from_fn(|_| Expr::zero()))
    }

    /// `dv ∧ dw`; the sign is applied when `v > w`.
    pub fn basis(v: Var, w: Var) -> Self {
        let mut form = TwoForm::zero();
        let (i, j) = (v.index(), w.index());
        if i != j {
            let (lo, hi, sign) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
            form.coeffs[pair_index(lo, hi)] = Expr::num(sign);
        }
        form
    }

    /// The canonical symplectic form `dx∧dp + dy∧dq`.
    pub fn symplectic() -> Self {
        TwoForm::basis(Var::X, Var::P).add(&TwoForm::basis(Var::Y, Var::Q))
    }

    /// Coefficient of `dx_i ∧ dx_j` with `i < j`.
    pub fn coeff(&self, i: usize, j: usize) -> &Expr {
        &self.coeffs[pair_index(i, j)]
    }

    pub fn add(&self, other: &TwoForm) -> TwoForm {
        TwoForm::new(std::array::from_fn(|k| {
            Expr::add(self.coeffs[k].clone(), other.coeffs[k].clone())
        }))
    }

    /// Multiplies every coefficient by the function `f`.
    pub fn scale(&self, f: &Expr) -> TwoForm {
        TwoForm::new(std::array::from_fn(|k| {
            Expr::mul(f.clone(), self.coeffs[k].clone())
        }))
    }

    pub fn simplified(&self) -> TwoForm {
        TwoForm::new(std::array::from_fn(|k| simplify(&self.coeffs[k])))
    }

    /// The antisymmetric matrix with entry `(i, j) = b(∂_i, ∂_j)`.
    pub fn matrix_at(&self, pt: &Point) -> Result<Matrix4<f64>, crate::expr::EvalError> {
        let mut m = Matrix4::zeros();
        for (k, &(i, j)) in TWO_FORM_BASIS.iter().enumerate() {
            let v = self.coeffs[k].eval(pt)?;
            m[(i, j)] = v;
            m[(j, i)] = -v;
        }
        Ok(m)
    }
}

/// Coefficient of `a ∧ b` on `dx∧dy∧dp∧dq`.
///
/// With this orientation `wedge_top(Ω, Ω) = -2`; Pfaffians are formed as
/// quotients of two such coefficients, so the sign cancels.
pub fn wedge_top(a: &TwoForm, b: &TwoForm) -> Expr {
    let c = |f: &TwoForm, i: usize, j: usize| f.coeff(i, j).clone();
    let term = |s: f64, u: Expr, v: Expr| Expr::mul(Expr::num(s), Expr::mul(u, v));
    simplify(&Expr::sum([
        term(1.0, c(a, 0, 1), c(b, 2, 3)),
        term(-1.0, c(a, 0, 2), c(b, 1, 3)),
        term(1.0, c(a, 0, 3), c(b, 1, 2)),
        term(1.0, c(a, 1, 2), c(b, 0, 3)),
        term(-1.0, c(a, 1, 3), c(b, 0, 2)),
        term(1.0, c(a, 2, 3), c(b, 0, 1)),
    ]))
}

/// A 3-form in the fixed basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeForm {
    pub coeffs: [Expr; 4],
}

impl ThreeForm {
    pub const NAMES: [&'static str; 4] = ["c_xyp", "c_xyq", "c_xpq", "c_ypq"];
}

/// `d` of a 2-form: the coefficient on `dx_i∧dx_j∧dx_k` is
/// `∂_i c_jk - ∂_j c_ik + ∂_k c_ij`.
pub fn exterior_derivative(b: &TwoForm) -> Result<ThreeForm, DiffError> {
    let partial = |i: usize, j: usize, k: usize| differentiate(b.coeff(j, k), Var::from_index(i));
    let mut coeffs: [Expr; 4] = std::array::from_fn(|_| Expr::zero());
    for (slot, &(i, j, k)) in THREE_FORM_BASIS.iter().enumerate() {
        let sum = Expr::add(
            Expr::sub(
                partial(i, j, k)?,
                differentiate(b.coeff(i, k), Var::from_index(j))?,
            ),
            differentiate(b.coeff(i, j), Var::from_index(k))?,
        );
        coeffs[slot] = simplify(&sum);
    }
    Ok(ThreeForm { coeffs })
}

/// 1-forms, used for the exterior calculus behind the Courant bracket.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct OneForm(pub [Expr; 4]);

impl OneForm {
    pub fn exact(f: &Expr) -> Result<OneForm, DiffError> {
        let mut out: [Expr; 4] = std::array::from_fn(|_| Expr::zero());
        for v in Var::ALL {
            out[v.index()] = differentiate(f, v)?;
        }
        Ok(OneForm(out))
    }

    pub fn d(&self) -> Result<TwoForm, DiffError> {
        let mut coeffs: [Expr; 6] = std::array::from_fn(|_| Expr::zero());
        for (k, &(i, j)) in TWO_FORM_BASIS.iter().enumerate() {
            let dij = Expr::sub(
                differentiate(&self.0[j], Var::from_index(i))?,
                differentiate(&self.0[i], Var::from_index(j))?,
            );
            coeffs[k] = simplify(&dij);
        }
        Ok(TwoForm::new(coeffs))
    }
}

pub const DEFAULT_BOX: (f64, f64) = (-2.0, 2.0);
pub const DEFAULT_PFAFFIAN_FLOOR: f64 = 1e-6;
pub const DEFAULT_POINT_COUNT: usize = 64;
pub const RETRY_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PfaffianFloor {
    pub reference: MAStructure,
    pub floor: f64,
}

/// How sample points are drawn: uniformly from a box, optionally rejecting
/// points where a reference structure is nearly degenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    pub count: usize,
    pub seed: u64,
    pub bounds: [(f64, f64); 4],
    pub pfaffian_floor: Option<PfaffianFloor>,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan {
            count: DEFAULT_POINT_COUNT,
            seed: 0,
            bounds: [DEFAULT_BOX; 4],
            pfaffian_floor: None,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SampleError {
    #[error("invalid sample plan: {0}")]
    InvalidPlan(String),
    #[error("retry cap exceeded: {accepted} of {wanted} points with |Pf| >= {floor} after {draws} draws")]
    RetryCapExceeded {
        accepted: usize,
        wanted: usize,
        floor: f64,
        draws: usize,
    },
}

impl SamplePlan {
    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_bounds(mut self, v: Var, lo: f64, hi: f64) -> Self {
        self.bounds[v.index()] = (lo, hi);
        self
    }

    pub fn with_pfaffian_floor(mut self, reference: MAStructure, floor: f64) -> Self {
        self.pfaffian_floor = Some(PfaffianFloor { reference, floor });
        self
    }

    pub fn validate(&self) -> Result<(), SampleError> {
        if self.count == 0 {
            return Err(SampleError::InvalidPlan(
                "point count must be at least 1".into(),
            ));
        }
        for (v, &(lo, hi)) in Var::ALL.iter().zip(&self.bounds) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(SampleError::InvalidPlan(format!(
                    "bounds for {v} must be finite with min < max, got [{lo}, {hi}]"
                )));
            }
        }
        if let Some(f) = &self.pfaffian_floor {
            if !(f.floor.is_finite() && f.floor >= 0.0) {
                return Err(SampleError::InvalidPlan(format!(
                    "invalid pfaffian floor {}",
                    f.floor
                )));
            }
        }
        Ok(())
    }

    /// Draws the plan's points. Deterministic for a fixed seed.
    pub fn sample(&self) -> Result<Vec<Point>, SampleError> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut draw = || {
            Point(std::array::from_fn(|i| {
                rng.gen_range(self.bounds[i].0..self.bounds[i].1)
            }))
        };
        let Some(constraint) = &self.pfaffian_floor else {
            return Ok((0..self.count).map(|_| draw()).collect());
        };
        let pf = constraint.reference.pfaffian();
        let mut out = Vec::with_capacity(self.count);
        let mut draws = 0;
        while out.len() < self.count {
            if draws == RETRY_CAP {
                return Err(SampleError::RetryCapExceeded {
                    accepted: out.len(),
                    wanted: self.count,
                    floor: constraint.floor,
                    draws,
                });
            }
            draws += 1;
            let pt = draw();
            if matches!(pf.eval(&pt), Ok(v) if v.abs() >= constraint.floor) {
                out.push(pt);
            }
        }
        Ok(out)
    }
}
