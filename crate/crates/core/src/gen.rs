//! Generalized endomorphisms of `T ⊕ T*` over the phase space.
//!
//! Matrices act on columns `(X, ξ)` in the basis `(∂x, ∂y, ∂p, ∂q, dx, dy, dp, dq)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Matrix4, SMatrix};
use thiserror::Error;

use crate::expr::{EvalError, Expr, Point};
use crate::ma::{MAStructure, MaError, Sign, SignedRegion};
use crate::phase::TwoForm;

pub type Mat8 = SMatrix<f64, 8, 8>;

pub const DEFAULT_GEN_TOL: f64 = 1e-10;

/// Smallest `|det M|` accepted by [`build_antidiag`].
pub const SINGULAR_FLOOR: f64 = 1e-12;

/// Singular values below this count as zero in rank computations.
const RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GenError {
    #[error("matrix is singular: |det| = {det:e} < {SINGULAR_FLOOR:e}")]
    Singular { det: f64 },
    #[error("matrix is not {expected}: residual {residual:e}")]
    SymmetryMismatch { expected: Symmetry, residual: f64 },
    #[error("endomorphism is not a generalized almost structure: |J² ∓ Id| = {square_residual:e}, |JᵀηJ ∓ η| = {eta_residual:e}")]
    Unclassifiable {
        square_residual: f64,
        eta_residual: f64,
    },
    #[error(transparent)]
    Structure(#[from] MaError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Antisymmetric,
    Symmetric,
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symmetry::Antisymmetric => "antisymmetric",
            Symmetry::Symmetric => "symmetric",
        })
    }
}

/// Block form `[[tt, tc], [ct, cc]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenEndo {
    /// `T → T`
    pub tt: Matrix4<f64>,
    /// `T* → T`
    pub tc: Matrix4<f64>,
    /// `T → T*`
    pub ct: Matrix4<f64>,
    /// `T* → T*`
    pub cc: Matrix4<f64>,
}

impl GenEndo {
    pub fn new(tt: Matrix4<f64>, tc: Matrix4<f64>, ct: Matrix4<f64>, cc: Matrix4<f64>) -> Self {
        GenEndo { tt, tc, ct, cc }
    }

    pub fn zero() -> Self {
        let z = Matrix4::zeros();
        GenEndo::new(z, z, z, z)
    }

    pub fn identity() -> Self {
        GenEndo::from_matrix(&Mat8::identity())
    }

    pub fn matrix(&self) -> Mat8 {
        let mut m = Mat8::zeros();
        m.fixed_view_mut::<4, 4>(0, 0).copy_from(&self.tt);
        m.fixed_view_mut::<4, 4>(0, 4).copy_from(&self.tc);
        m.fixed_view_mut::<4, 4>(4, 0).copy_from(&self.ct);
        m.fixed_view_mut::<4, 4>(4, 4).copy_from(&self.cc);
        m
    }

    pub fn from_matrix(m: &Mat8) -> Self {
        GenEndo::new(
            m.fixed_view::<4, 4>(0, 0).into(),
            m.fixed_view::<4, 4>(0, 4).into(),
            m.fixed_view::<4, 4>(4, 0).into(),
            m.fixed_view::<4, 4>(4, 4).into(),
        )
    }

    pub fn compose(&self, other: &GenEndo) -> GenEndo {
        GenEndo::from_matrix(&(self.matrix() * other.matrix()))
    }

    pub fn square(&self) -> GenEndo {
        self.compose(self)
    }

    /// `Jᵀ η J`, the matrix of `J•η`.
    pub fn pulled_back_eta(&self) -> Mat8 {
        let j = self.matrix();
        j.transpose() * eta() * j
    }

    pub fn max_norm(&self) -> f64 {
        self.matrix().amax()
    }
}

impl Add for GenEndo {
    type Output = GenEndo;
    fn add(self, o: GenEndo) -> GenEndo {
        GenEndo::new(
            self.tt + o.tt,
            self.tc + o.tc,
            self.ct + o.ct,
            self.cc + o.cc,
        )
    }
}

impl Sub for GenEndo {
    type Output = GenEndo;
    fn sub(self, o: GenEndo) -> GenEndo {
        self + (-o)
    }
}

impl Neg for GenEndo {
    type Output = GenEndo;
    fn neg(self) -> GenEndo {
        self * -1.0
    }
}

impl Mul<f64> for GenEndo {
    type Output = GenEndo;
    fn mul(self, k: f64) -> GenEndo {
        GenEndo::new(self.tt * k, self.tc * k, self.ct * k, self.cc * k)
    }
}

/// `η((X, ξ), (Y, ζ)) = ½(ξ(Y) + ζ(X))`.
pub fn eta() -> Mat8 {
    let mut m = Mat8::zeros();
    for i in 0..4 {
        m[(i, i + 4)] = 0.5;
        m[(i + 4, i)] = 0.5;
    }
    m
}

/// Matrix of `Ω` (constant).
pub fn omega_matrix() -> Matrix4<f64> {
    TwoForm::symplectic()
        .matrix_at(&Point::default())
        .expect("constant form evaluates everywhere")
}

/// `[[K, 0], [0, εKᵀ]]`.
pub fn build_diag(k: &Matrix4<f64>, eps: Sign) -> GenEndo {
    let z = Matrix4::zeros();
    GenEndo::new(*k, z, z, k.transpose() * eps.value())
}

/// `[[0, M⁻¹], [εM, 0]]`.
pub fn build_antidiag(
    m: &Matrix4<f64>,
    symmetry: Symmetry,
    eps: Sign,
) -> Result<GenEndo, GenError> {
    let residual = match symmetry {
        Symmetry::Antisymmetric => (m + m.transpose()).amax(),
        Symmetry::Symmetric => (m - m.transpose()).amax(),
    };
    if residual > DEFAULT_GEN_TOL * (1.0 + m.amax()) {
        return Err(GenError::SymmetryMismatch {
            expected: symmetry,
            residual,
        });
    }
    let det = m.determinant();
    if det.abs() < SINGULAR_FLOOR {
        return Err(GenError::Singular { det });
    }
    let inv = m.try_inverse().ok_or(GenError::Singular { det })?;
    let z = Matrix4::zeros();
    Ok(GenEndo::new(z, inv, m * eps.value(), z))
}

/// `J_Ω` for the symplectic form.
pub fn j_omega(eps: Sign) -> GenEndo {
    build_antidiag(&omega_matrix(), Symmetry::Antisymmetric, eps).expect("Ω is non-degenerate")
}

/// `J_α` for the effective form of `s` at `pt`.
pub fn j_alpha(s: &MAStructure, pt: &Point, eps: Sign) -> Result<GenEndo, GenError> {
    build_antidiag(&s.alpha_matrix(pt)?, Symmetry::Antisymmetric, eps)
}

/// `J_ρ = diag(ρ, ερᵀ)` at `pt`.
pub fn j_rho(s: &MAStructure, pt: &Point, eps: Sign, floor: f64) -> Result<GenEndo, GenError> {
    Ok(build_diag(&s.rho_at(pt, floor)?, eps))
}

/// `(A, Ω⁻¹; −(Ω + ΩA²), −Aᵀ)` with `A = Ω⁻¹α`.
pub fn build_banos(s: &MAStructure, pt: &Point, floor: f64) -> Result<GenEndo, GenError> {
    let pf = s.pfaffian().eval(pt)?;
    if pf.abs() < floor {
        return Err(MaError::Degenerate {
            point: *pt,
            pfaffian: pf,
            floor,
        }
        .into());
    }
    let omega = omega_matrix();
    let omega_inv = -omega;
    let a = omega_inv * s.alpha_matrix(pt)?;
    Ok(GenEndo::new(
        a,
        omega_inv,
        -(omega + omega * a * a),
        -a.transpose(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    GaP,
    GaPC,
    GaC,
    GaAC,
    None,
}

impl GenKind {
    pub fn from_gammas(g1: Sign, g2: Sign) -> GenKind {
        match (g1, g2) {
            (Sign::Plus, Sign::Plus) => GenKind::GaP,
            (Sign::Plus, Sign::Minus) => GenKind::GaPC,
            (Sign::Minus, Sign::Plus) => GenKind::GaC,
            (Sign::Minus, Sign::Minus) => GenKind::GaAC,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            GenKind::GaP => "GaP",
            GenKind::GaPC => "GaPC",
            GenKind::GaC => "GaC",
            GenKind::GaAC => "GaAC",
            GenKind::None => "None",
        }
    }
}

impl fmt::Display for GenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenType {
    pub kind: GenKind,
    pub gamma1: Option<Sign>,
    pub gamma2: Option<Sign>,
    /// `‖J² − γ₁ Id‖` for the best-fitting sign.
    pub square_residual: f64,
    /// `‖JᵀηJ − γ₂ η‖` for the best-fitting sign.
    pub eta_residual: f64,
}

fn best_sign(residual: impl Fn(f64) -> f64, tol: f64) -> (Option<Sign>, f64) {
    let plus = residual(1.0);
    let minus = residual(-1.0);
    let (sign, r) = if plus <= minus {
        (Sign::Plus, plus)
    } else {
        (Sign::Minus, minus)
    };
    ((r <= tol).then_some(sign), r)
}

pub fn classify_gen(j: &GenEndo, tol: f64) -> GenType {
    let m = j.matrix();
    let sq = m * m;
    let pulled = j.pulled_back_eta();
    let e = eta();
    let (gamma1, square_residual) = best_sign(|s| (sq - Mat8::identity() * s).amax(), tol);
    let (gamma2, eta_residual) = best_sign(|s| (pulled - e * s).amax(), tol);
    let kind = match (gamma1, gamma2) {
        (Some(a), Some(b)) => GenKind::from_gammas(a, b),
        _ => GenKind::None,
    };
    GenType {
        kind,
        gamma1,
        gamma2,
        square_residual,
        eta_residual,
    }
}

pub fn anticommutator(j1: &GenEndo, j2: &GenEndo) -> GenEndo {
    let (a, b) = (j1.matrix(), j2.matrix());
    GenEndo::from_matrix(&(a * b + b * a))
}

/// Complex 8×8 matrix stored as real and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMat8 {
    pub re: Mat8,
    pub im: Mat8,
}

impl ComplexMat8 {
    pub fn real(re: Mat8) -> Self {
        ComplexMat8 {
            re,
            im: Mat8::zeros(),
        }
    }

    pub fn mul(&self, o: &ComplexMat8) -> ComplexMat8 {
        ComplexMat8 {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }

    pub fn add(&self, o: &ComplexMat8) -> ComplexMat8 {
        ComplexMat8 {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }

    /// Plain transpose (no conjugation).
    pub fn transpose(&self) -> ComplexMat8 {
        ComplexMat8 {
            re: self.re.transpose(),
            im: self.im.transpose(),
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.re.zip_map(&self.im, |a, b| a.hypot(b)).amax()
    }

    /// Complex rank via the real 16×16 embedding `[[re, −im], [im, re]]`.
    pub fn rank(&self) -> usize {
        let mut big = DMatrix::zeros(16, 16);
        big.view_mut((0, 0), (8, 8)).copy_from(&self.re);
        big.view_mut((0, 8), (8, 8)).copy_from(&(-self.im));
        big.view_mut((8, 0), (8, 8)).copy_from(&self.im);
        big.view_mut((8, 8), (8, 8)).copy_from(&self.re);
        big.rank(RANK_TOL) / 2
    }
}

/// Projectors onto the two eigenbundles: `±1` for `J² = Id`, `±i` for `J² = −Id`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projectors {
    pub plus: ComplexMat8,
    pub minus: ComplexMat8,
    pub complex: bool,
}

impl Projectors {
    /// Largest of `‖P±² − P±‖`, `‖P₊P₋‖`, `‖P₋P₊‖` and `‖P₊ + P₋ − Id‖`.
    pub fn algebra_residual(&self) -> f64 {
        let id = ComplexMat8::real(Mat8::identity());
        let idem = |p: &ComplexMat8| {
            let sq = p.mul(p);
            ComplexMat8 {
                re: sq.re - p.re,
                im: sq.im - p.im,
            }
            .max_norm()
        };
        let sum = self.plus.add(&self.minus);
        [
            idem(&self.plus),
            idem(&self.minus),
            self.plus.mul(&self.minus).max_norm(),
            self.minus.mul(&self.plus).max_norm(),
            ComplexMat8 {
                re: sum.re - id.re,
                im: sum.im,
            }
            .max_norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn ranks(&self) -> (usize, usize) {
        (self.plus.rank(), self.minus.rank())
    }
}

pub fn eigen_projectors(j: &GenEndo, tol: f64) -> Result<Projectors, GenError> {
    let t = classify_gen(j, tol);
    let half = Mat8::identity() * 0.5;
    let jm = j.matrix() * 0.5;
    match t.gamma1 {
        Some(Sign::Plus) => Ok(Projectors {
            plus: ComplexMat8::real(half + jm),
            minus: ComplexMat8::real(half - jm),
            complex: false,
        }),
        Some(Sign::Minus) => Ok(Projectors {
            plus: ComplexMat8 { re: half, im: -jm },
            minus: ComplexMat8 { re: half, im: jm },
            complex: true,
        }),
        None => Err(GenError::Unclassifiable {
            square_residual: t.square_residual,
            eta_residual: t.eta_residual,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Isotropy {
    Isotropic {
        residual: f64,
    },
    /// `η(P e_i, P e_j) ≠ 0` on the eigenbundle of `sign`.
    NonIsotropic {
        sign: Sign,
        entry: (usize, usize),
        value: f64,
    },
}

impl Isotropy {
    pub fn is_isotropic(&self) -> bool {
        matches!(self, Isotropy::Isotropic { .. })
    }
}

/// `Pᵀ η P` for both eigen-projectors; `η` is extended complex-bilinearly.
pub fn isotropy_check(j: &GenEndo, tol: f64) -> Result<Isotropy, GenError> {
    let proj = eigen_projectors(j, tol)?;
    let e = ComplexMat8::real(eta());
    let mut worst = 0.0_f64;
    for (sign, p) in [(Sign::Plus, proj.plus), (Sign::Minus, proj.minus)] {
        let q = p.transpose().mul(&e).mul(&p);
        let abs = q.re.zip_map(&q.im, |a, b| a.hypot(b));
        let (i, jx) = abs.iamax_full();
        let value = abs[(i, jx)];
        if value > tol {
            return Ok(Isotropy::NonIsotropic {
                sign,
                entry: (i, jx),
                value,
            });
        }
        worst = worst.max(value);
    }
    Ok(Isotropy::Isotropic { residual: worst })
}

/// An endomorphism whose entries are expressions in `x, y, p, q`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenField {
    pub entries: [[Expr; 8]; 8],
}

impl GenField {
    pub fn constant(j: &GenEndo) -> Self {
        let m = j.matrix();
        GenField {
            entries: std::array::from_fn(|i| std::array::from_fn(|k| Expr::num(m[(i, k)]))),
        }
    }

    /// `diag(K, εKᵀ)` for an expression-valued `K`.
    pub fn diag(k: &[[Expr; 4]; 4], eps: Sign) -> Self {
        let scaled =
            |e: &Expr| crate::expr::simplify(&Expr::mul(Expr::num(eps.value()), e.clone()));
        let entries = std::array::from_fn(|i| {
            std::array::from_fn(|j| match (i < 4, j < 4) {
                (true, true) => k[i][j].clone(),
                (false, false) => scaled(&k[j - 4][i - 4]),
                _ => Expr::zero(),
            })
        });
        GenField { entries }
    }

    /// `J_ρ` over a signed region.
    pub fn rho(s: &MAStructure, region: &SignedRegion, eps: Sign) -> Self {
        GenField::diag(&s.rho_field(region), eps)
    }

    pub fn at(&self, pt: &Point) -> Result<GenEndo, EvalError> {
        let mut m = Mat8::zeros();
        for i in 0..8 {
            for j in 0..8 {
                m[(i, j)] = self.entries[i][j].eval(pt)?;
            }
        }
        Ok(GenEndo::from_matrix(&m))
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().flatten().all(Expr::is_constant)
    }
}
