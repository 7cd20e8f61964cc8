//! Families `A = a₁J_ρ + a₂J_α + a₃J_Ω` of pairwise anticommuting structures.

use std::fmt;

use nalgebra::Matrix4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{is_zero, simplify, EvalError, Expr, Point, ZeroError, ZeroVerdict};
use crate::gen::{classify_gen, eta, j_alpha, j_omega, j_rho, GenEndo, GenError, GenKind, Mat8};
use crate::ma::{MAStructure, MaError, Sign};
use crate::phase::{SampleError, SamplePlan};

pub const ADMISSIBILITY_TOL: f64 = 1e-12;
pub const ANTICOMMUTATIVITY_TOL: f64 = 1e-9;
pub const FAMILY_TOL: f64 = 1e-9;
pub const DISTINCTNESS_TOL: f64 = 1e-8;

/// Anticommutation of `J_ρ` with `J_α` and `J_Ω` forces this sign on `J_ρ`.
pub const FORCED_EPS1: Sign = Sign::Minus;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuadricError {
    #[error("k must be ±1, got {0}")]
    InvalidK(f64),
    #[error("admissibility gate: |k| = |{k}| ≠ 1 for {coeffs}")]
    NotAdmissible { k: f64, coeffs: FamilyCoeffs },
    #[error("anticommutativity gate: Pf = {pfaffian} ≠ ε₂ε₃ = {required} at {witness}")]
    NotAnticommuting {
        witness: Point,
        pfaffian: f64,
        required: f64,
    },
    #[error("non-degeneracy gate: {0}")]
    Degenerate(MaError),
    #[error("rescaling factor vanishes at {witness} (h = {value})")]
    RescaleVanishes { witness: Point, value: f64 },
    #[error(transparent)]
    Gen(GenError),
    #[error(transparent)]
    Ma(MaError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Zero(#[from] ZeroError),
}

impl From<MaError> for QuadricError {
    fn from(e: MaError) -> Self {
        match e {
            MaError::Degenerate { .. } => QuadricError::Degenerate(e),
            other => QuadricError::Ma(other),
        }
    }
}

impl From<GenError> for QuadricError {
    fn from(e: GenError) -> Self {
        match e {
            GenError::Structure(m) => m.into(),
            other => QuadricError::Gen(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyCoeffs {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub eps2: Sign,
    pub eps3: Sign,
}

impl FamilyCoeffs {
    pub fn new(a1: f64, a2: f64, a3: f64, eps2: Sign, eps3: Sign) -> Self {
        FamilyCoeffs {
            a1,
            a2,
            a3,
            eps2,
            eps3,
        }
    }

    pub fn with_a(self, [a1, a2, a3]: [f64; 3]) -> Self {
        FamilyCoeffs { a1, a2, a3, ..self }
    }

    pub fn a(&self) -> [f64; 3] {
        [self.a1, self.a2, self.a3]
    }
}

impl fmt::Display for FamilyCoeffs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(a1, a2, a3) = ({}, {}, {}) with (ε₂, ε₃) = ({}, {})",
            self.a1, self.a2, self.a3, self.eps2, self.eps3
        )
    }
}

/// `k = −sgn Pf a₁² + ε₂a₂² + ε₃a₃²`.
pub fn k_value(c: &FamilyCoeffs, sgn_pf: Sign) -> f64 {
    -sgn_pf.value() * c.a1 * c.a1 + c.eps2.value() * c.a2 * c.a2 + c.eps3.value() * c.a3 * c.a3
}

pub fn is_admissible(c: &FamilyCoeffs, sgn_pf: Sign) -> bool {
    (k_value(c, sgn_pf).abs() - 1.0).abs() <= ADMISSIBILITY_TOL
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anticommutativity {
    Holds {
        max_deviation: f64,
    },
    Fails {
        witness: Point,
        pfaffian: f64,
        required: f64,
    },
}

impl Anticommutativity {
    pub fn holds(&self) -> bool {
        matches!(self, Anticommutativity::Holds { .. })
    }
}

/// Whether `J_ρ(ε₁ = −1)`, `J_α(ε₂)` and `J_Ω(ε₃)` anticommute pairwise on the plan,
/// i.e. whether `Pf = ε₂ε₃` at every sample.
pub fn anticommutativity_check(
    s: &MAStructure,
    eps2: Sign,
    eps3: Sign,
    plan: &SamplePlan,
    floor: f64,
) -> Result<Anticommutativity, QuadricError> {
    let required = eps2.value() * eps3.value();
    let pf = s.pfaffian();
    let mut max_deviation = 0.0_f64;
    for pt in plan.sample()? {
        let v = pf.eval(&pt)?;
        if v.abs() < floor {
            return Err(MaError::Degenerate {
                point: pt,
                pfaffian: v,
                floor,
            }
            .into());
        }
        let dev = (v - required).abs();
        if dev > ANTICOMMUTATIVITY_TOL {
            return Ok(Anticommutativity::Fails {
                witness: pt,
                pfaffian: v,
                required,
            });
        }
        max_deviation = max_deviation.max(dev);
    }
    Ok(Anticommutativity::Holds { max_deviation })
}

/// `‖[α̲, Ω̲]‖`, the condition for `{J_α, J_Ω}` to be a multiple of the identity.
pub fn alpha_omega_commutator(s: &MAStructure, pt: &Point) -> Result<f64, QuadricError> {
    let a = s.alpha_matrix(pt)?;
    let o = crate::gen::omega_matrix();
    Ok((a * o - o * a).amax())
}

/// The linear combination without any gate.
pub fn family_matrix(
    s: &MAStructure,
    c: &FamilyCoeffs,
    pt: &Point,
    floor: f64,
) -> Result<GenEndo, QuadricError> {
    let mut out = j_omega(c.eps3) * c.a3;
    if c.a1 != 0.0 {
        out = out + j_rho(s, pt, FORCED_EPS1, floor)? * c.a1;
    }
    if c.a2 != 0.0 {
        out = out + j_alpha(s, pt, c.eps2)? * c.a2;
    }
    Ok(out)
}

/// A family member at `pt`, refused unless it is a generalized almost structure
/// built from pairwise anticommuting terms.
pub fn build_family_member(
    s: &MAStructure,
    c: &FamilyCoeffs,
    pt: &Point,
    floor: f64,
) -> Result<GenEndo, QuadricError> {
    let pf = s.pfaffian().eval(pt)?;
    if pf.abs() < floor {
        return Err(MaError::Degenerate {
            point: *pt,
            pfaffian: pf,
            floor,
        }
        .into());
    }
    let sgn = Sign::of(pf).expect("non-zero above the floor");
    let k = k_value(c, sgn);
    if !is_admissible(c, sgn) {
        return Err(QuadricError::NotAdmissible { k, coeffs: *c });
    }
    // {J_ρ, J_Ω} = 0 always; J_α only enters when a₂ ≠ 0
    let required = c.eps2.value() * c.eps3.value();
    if c.a2 != 0.0 && (pf - required).abs() > ANTICOMMUTATIVITY_TOL {
        return Err(QuadricError::NotAnticommuting {
            witness: *pt,
            pfaffian: pf,
            required,
        });
    }
    family_matrix(s, c, pt, floor)
}

/// `(‖A² − k Id‖, ‖AᵀηA + kη‖)`.
pub fn family_residuals(a: &GenEndo, k: f64) -> (f64, f64) {
    let sq = (a.square().matrix() - Mat8::identity() * k).amax();
    let et = (a.pulled_back_eta() + eta() * k).amax();
    (sq, et)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuadricType {
    Sphere,
    Hyperboloid1Sheet,
    Hyperboloid2Sheet,
    Empty,
}

impl QuadricType {
    pub fn label(self) -> &'static str {
        match self {
            QuadricType::Sphere => "Sphere",
            QuadricType::Hyperboloid1Sheet => "Hyperboloid1Sheet",
            QuadricType::Hyperboloid2Sheet => "Hyperboloid2Sheet",
            QuadricType::Empty => "Empty",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConicType {
    Ellipse,
    Hyperbola,
    Empty,
}

impl ConicType {
    pub fn label(self) -> &'static str {
        match self {
            ConicType::Ellipse => "Ellipse",
            ConicType::Hyperbola => "Hyperbola",
            ConicType::Empty => "Empty",
        }
    }
}

/// One `(sgn Pf, k, ε₂, ε₃)` combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub sgn_pf: Sign,
    pub k: Sign,
    pub eps2: Sign,
    pub eps3: Sign,
}

impl Cell {
    pub fn new(sgn_pf: Sign, k: Sign, eps2: Sign, eps3: Sign) -> Self {
        Cell {
            sgn_pf,
            k,
            eps2,
            eps3,
        }
    }

    /// All 16 cells, ordered by `sgn Pf`, then `k`, then `(ε₂, ε₃)`, each `+` first.
    pub fn all() -> Vec<Cell> {
        let signs = [Sign::Plus, Sign::Minus];
        let mut out = Vec::with_capacity(16);
        for sgn_pf in signs {
            for k in signs {
                for eps2 in signs {
                    for eps3 in signs {
                        out.push(Cell::new(sgn_pf, k, eps2, eps3));
                    }
                }
            }
        }
        out
    }

    /// Weights `w` with the quadric reading `Σ wᵢ aᵢ² = 1`.
    pub fn weights(&self) -> [f64; 3] {
        let k = self.k.value();
        [
            -self.sgn_pf.value() / k,
            self.eps2.value() / k,
            self.eps3.value() / k,
        ]
    }

    pub fn quadric(&self) -> QuadricType {
        quadric_type(self.sgn_pf, self.k.value(), self.eps2, self.eps3).expect("k is ±1")
    }

    /// GaPC for `k = 1`, GaC for `k = −1`.
    pub fn structure(&self) -> GenKind {
        match self.k {
            Sign::Plus => GenKind::GaPC,
            Sign::Minus => GenKind::GaC,
        }
    }

    /// Whether a structure with this Pfaffian sign and `|Pf| = 1` can carry an
    /// anticommuting triple for these `ε`s.
    pub fn anticommutation_compatible(&self) -> bool {
        self.sgn_pf.value() == self.eps2.value() * self.eps3.value()
    }

    /// `−a₁² + ε₂a₂² + ε₃a₃² = k` style equation.
    pub fn equation(&self) -> String {
        let term = |s: f64, n: usize| format!("{}a{n}^2", if s > 0.0 { "+" } else { "-" });
        let [w1, w2, w3] = [-self.sgn_pf.value(), self.eps2.value(), self.eps3.value()];
        let lhs = format!("{} {} {}", term(w1, 1), term(w2, 2), term(w3, 3));
        format!("{} = {}", lhs.trim_start_matches('+'), self.k.value())
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Pf {}, k = {}, (ε₂, ε₃) = ({}, {})",
            self.sgn_pf,
            self.k.value(),
            self.eps2,
            self.eps3
        )
    }
}

/// Quadric of admissible `(a₁, a₂, a₃)`.
pub fn quadric_type(
    sgn_pf: Sign,
    k: f64,
    eps2: Sign,
    eps3: Sign,
) -> Result<QuadricType, QuadricError> {
    use QuadricType::*;
    use Sign::{Minus as M, Plus as P};
    let k = Sign::from_value(k).ok_or(QuadricError::InvalidK(k))?;
    Ok(match (sgn_pf, k, eps2, eps3) {
        (P, P, P, P) => Hyperboloid1Sheet,
        (P, P, P, M) => Hyperboloid2Sheet,
        (P, P, M, P) => Hyperboloid2Sheet,
        (P, P, M, M) => Empty,
        (P, M, P, P) => Hyperboloid2Sheet,
        (P, M, P, M) => Hyperboloid1Sheet,
        (P, M, M, P) => Hyperboloid1Sheet,
        (P, M, M, M) => Sphere,
        (M, P, P, P) => Sphere,
        (M, P, P, M) => Hyperboloid1Sheet,
        (M, P, M, P) => Hyperboloid1Sheet,
        (M, P, M, M) => Hyperboloid2Sheet,
        (M, M, P, P) => Empty,
        (M, M, P, M) => Hyperboloid2Sheet,
        (M, M, M, P) => Hyperboloid2Sheet,
        (M, M, M, M) => Hyperboloid1Sheet,
    })
}

/// The curve left in the `(a₁, a₃)` plane when `a₂ = 0`.
pub fn induced_conic(cell: &Cell) -> ConicType {
    let [w1, _, w3] = cell.weights();
    match [w1, w3].iter().filter(|w| **w > 0.0).count() {
        2 => ConicType::Ellipse,
        1 => ConicType::Hyperbola,
        _ => ConicType::Empty,
    }
}

/// Directions whose quadratic form falls below this are discarded when sampling.
const MIN_FORM: f64 = 0.05;

/// Attempts to turn a random direction into an admissible triple of `cell`.
fn project(cell: &Cell, u: [f64; 3]) -> Option<[f64; 3]> {
    let w = cell.weights();
    let q: f64 = (0..3).map(|i| w[i] * u[i] * u[i]).sum();
    (q >= MIN_FORM).then(|| u.map(|x| x / q.sqrt()))
}

/// Up to `n` admissible triples on `cell`, from at most `max_draws` random directions.
pub fn sample_cell(cell: &Cell, n: usize, max_draws: usize, seed: u64) -> Vec<FamilyCoeffs> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = FamilyCoeffs::new(0.0, 0.0, 0.0, cell.eps2, cell.eps3);
    let mut out = Vec::with_capacity(n.min(max_draws));
    for _ in 0..max_draws {
        if out.len() == n {
            break;
        }
        let u = [0; 3].map(|_| rng.gen_range(-1.0..=1.0));
        if let Some(a) = project(cell, u) {
            let c = base.with_a(a);
            if is_admissible(&c, cell.sgn_pf) && k_value(&c, cell.sgn_pf).signum() == cell.k.value()
            {
                out.push(c);
            }
        }
    }
    out
}

/// How many of `draws` random directions scale to an admissible triple of `cell`.
pub fn count_admissible(cell: &Cell, draws: usize, seed: u64) -> usize {
    sample_cell(cell, usize::MAX, draws, seed).len()
}

/// Structure with `|Pf| = 1` and the given sign: Laplace or the orthogonal family at `(0.6, 0.8)`.
pub fn reference_structure(sgn_pf: Sign) -> MAStructure {
    match sgn_pf {
        Sign::Plus => MAStructure::laplace(),
        Sign::Minus => MAStructure::orthogonal_family(Expr::num(0.6), Expr::num(0.8)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellVerification {
    pub cell: Cell,
    pub quadric: QuadricType,
    pub samples: Vec<FamilyCoeffs>,
    pub max_square_residual: f64,
    pub max_eta_residual: f64,
    /// Members refused by a gate, with the first refusal.
    pub refused: usize,
    pub first_refusal: Option<String>,
    /// Members whose classification differs from [`Cell::structure`].
    pub misclassified: usize,
}

impl CellVerification {
    pub fn passed(&self, tol: f64) -> bool {
        let sampled_iff_nonempty = self.samples.is_empty() == (self.quadric == QuadricType::Empty);
        sampled_iff_nonempty
            && self.refused == 0
            && self.misclassified == 0
            && self.max_square_residual <= tol
            && self.max_eta_residual <= tol
    }
}

/// Builds `n` members of `cell` on `s` at each point and measures the family identities.
pub fn verify_cell(
    cell: &Cell,
    s: &MAStructure,
    points: &[Point],
    n: usize,
    seed: u64,
    floor: f64,
) -> CellVerification {
    let samples = sample_cell(cell, n, 100 * n.max(1), seed);
    let mut out = CellVerification {
        cell: *cell,
        quadric: cell.quadric(),
        samples: samples.clone(),
        max_square_residual: 0.0,
        max_eta_residual: 0.0,
        refused: 0,
        first_refusal: None,
        misclassified: 0,
    };
    for c in &samples {
        for pt in points {
            match build_family_member(s, c, pt, floor) {
                Ok(a) => {
                    let (sq, et) = family_residuals(&a, cell.k.value());
                    out.max_square_residual = out.max_square_residual.max(sq);
                    out.max_eta_residual = out.max_eta_residual.max(et);
                    if classify_gen(&a, FAMILY_TOL).kind != cell.structure() {
                        out.misclassified += 1;
                    }
                }
                Err(e) => {
                    out.refused += 1;
                    out.first_refusal.get_or_insert_with(|| e.to_string());
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distinctness {
    Distinct { witness: Point, difference: f64 },
    Identical { max_difference: f64 },
}

impl Distinctness {
    pub fn is_distinct(&self) -> bool {
        matches!(self, Distinctness::Distinct { .. })
    }
}

pub fn distinctness_check(
    s: &MAStructure,
    c1: &FamilyCoeffs,
    c2: &FamilyCoeffs,
    plan: &SamplePlan,
    floor: f64,
) -> Result<Distinctness, QuadricError> {
    let mut max_difference = 0.0_f64;
    for pt in plan.sample()? {
        let pf = s.pfaffian().eval(&pt)?;
        let sgn = Sign::of(pf).ok_or(MaError::Degenerate {
            point: pt,
            pfaffian: pf,
            floor,
        })?;
        for c in [c1, c2] {
            if !is_admissible(c, sgn) {
                return Err(QuadricError::NotAdmissible {
                    k: k_value(c, sgn),
                    coeffs: *c,
                });
            }
        }
        let d = (family_matrix(s, c1, &pt, floor)? - family_matrix(s, c2, &pt, floor)?).max_norm();
        if d > DISTINCTNESS_TOL {
            return Ok(Distinctness::Distinct {
                witness: pt,
                difference: d,
            });
        }
        max_difference = max_difference.max(d);
    }
    Ok(Distinctness::Identical { max_difference })
}

/// Outcome of replacing `α` by `hα`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaleReport {
    pub points: usize,
    /// Verdict on `Pf(hα) − h² Pf(α)`.
    pub pfaffian_law: ZeroVerdict,
    pub pfaffian_max_deviation: f64,
    /// `max ‖ρ(hα) − sgn(h) ρ(α)‖`.
    pub rho_max_deviation: f64,
    /// `max` deviation of `J_{hα}` from `(0, h⁻¹ π_α; h ε α, 0)`.
    pub j_alpha_max_deviation: f64,
    /// `max ‖A(hα; sgn h a₁, 0, a₃) − A(α; a₁, 0, a₃)‖` over a probe triple.
    pub correspondence_max_deviation: f64,
    /// Sign of `h` when uniform over the samples.
    pub h_sign: Option<Sign>,
    /// Whether `hα = α`, the only case keeping the family.
    pub family_preserved: bool,
}

pub fn rescale_transform(
    s: &MAStructure,
    h: &Expr,
    eps2: Sign,
    eps3: Sign,
    plan: &SamplePlan,
    floor: f64,
) -> Result<RescaleReport, QuadricError> {
    let scaled = s.scaled(h);
    let law = simplify(&Expr::sub(
        scaled.pfaffian(),
        Expr::mul(Expr::pow(h.clone(), 2), s.pfaffian()),
    ));
    let pfaffian_law = is_zero(&law, plan)?;
    let points = plan.sample()?;
    let mut report = RescaleReport {
        points: points.len(),
        pfaffian_law,
        pfaffian_max_deviation: 0.0,
        rho_max_deviation: 0.0,
        j_alpha_max_deviation: 0.0,
        correspondence_max_deviation: 0.0,
        h_sign: None,
        family_preserved: is_zero(&simplify(&Expr::sub(h.clone(), Expr::one())), plan)?.vanishes(),
    };
    let mut signs = Vec::with_capacity(points.len());
    for pt in &points {
        let hv = h.eval(pt)?;
        let Some(sgn_h) = Sign::of(hv) else {
            return Err(QuadricError::RescaleVanishes {
                witness: *pt,
                value: hv,
            });
        };
        signs.push(sgn_h);
        let pf = s.pfaffian().eval(pt)?;
        let dev = (scaled.pfaffian().eval(pt)? - hv * hv * pf).abs();
        report.pfaffian_max_deviation = report.pfaffian_max_deviation.max(dev);

        let rho = s.rho_at(pt, floor)?;
        let rho_h = scaled.rho_at(pt, floor)?;
        report.rho_max_deviation = report
            .rho_max_deviation
            .max((rho_h - rho * sgn_h.value()).amax());

        let ja = j_alpha(s, pt, eps2)?;
        let ja_h = j_alpha(&scaled, pt, eps2)?;
        let expected = GenEndo::new(Matrix4::zeros(), ja.tc / hv, ja.ct * hv, Matrix4::zeros());
        report.j_alpha_max_deviation = report
            .j_alpha_max_deviation
            .max((ja_h - expected).max_norm());

        let probe = FamilyCoeffs::new(0.6, 0.0, 0.8, eps2, eps3);
        let moved = FamilyCoeffs {
            a1: sgn_h.value() * probe.a1,
            ..probe
        };
        let d = (family_matrix(&scaled, &moved, pt, floor)? - family_matrix(s, &probe, pt, floor)?)
            .max_norm();
        report.correspondence_max_deviation = report.correspondence_max_deviation.max(d);
    }
    report.h_sign = match signs.first() {
        Some(&first) if signs.iter().all(|&g| g == first) => Some(first),
        _ => None,
    };
    Ok(report)
}

/// Fixed points used by the `quadric` sweep.
pub fn sweep_points() -> Vec<Point> {
    vec![
        Point::new(0.0, 0.0, 1.0, 0.0),
        Point::new(0.5, -0.5, 0.25, 1.5),
    ]
}
