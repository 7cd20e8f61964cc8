//! Courant bracket and integrability checks on sections of `T ⊕ T*`.

use std::fmt;

use thiserror::Error;

use crate::expr::{
    differentiate, is_zero, simplify, DiffError, EvalError, Expr, Point, Var, ZeroError,
    ZeroVerdict,
};
use crate::gen::{isotropy_check, GenError, GenField, Isotropy, DEFAULT_GEN_TOL};
use crate::ma::{MAStructure, MaError, Sign, SignedRegion};
use crate::phase::{exterior_derivative, OneForm, SampleError, SamplePlan, ThreeForm, TwoForm};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CourantError {
    #[error(
        "the {sign} eigenbundle is not isotropic at {witness} (η entry {entry:?} = {value:e}); \
         the generalized torsion is not a tensor for non-isotropic structures"
    )]
    NotIsotropic {
        witness: Point,
        sign: Sign,
        entry: (usize, usize),
        value: f64,
    },
    #[error("structure is not a generalized almost structure at {witness}: {source}")]
    Unclassifiable { witness: Point, source: GenError },
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Zero(#[from] ZeroError),
    #[error(transparent)]
    Structure(#[from] MaError),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

/// `(X, ξ)` with `X = Xⁱ∂ᵢ` and `ξ = ξᵢ dxⁱ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub x: [Expr; 4],
    pub xi: [Expr; 4],
}

fn zeros() -> [Expr; 4] {
    std::array::from_fn(|_| Expr::zero())
}

impl Section {
    pub fn new(x: [Expr; 4], xi: [Expr; 4]) -> Self {
        Section { x, xi }
    }

    pub fn zero() -> Self {
        Section::new(zeros(), zeros())
    }

    pub fn vector(x: [Expr; 4]) -> Self {
        Section::new(x, zeros())
    }

    pub fn form(xi: [Expr; 4]) -> Self {
        Section::new(zeros(), xi)
    }

    /// The `k`-th coordinate section, `0..8` in the order `∂x, ∂y, ∂p, ∂q, dx, dy, dp, dq`.
    pub fn basis(k: usize) -> Self {
        let mut s = Section::zero();
        *s.component_mut(k) = Expr::one();
        s
    }

    pub fn component(&self, k: usize) -> &Expr {
        if k < 4 {
            &self.x[k]
        } else {
            &self.xi[k - 4]
        }
    }

    fn component_mut(&mut self, k: usize) -> &mut Expr {
        if k < 4 {
            &mut self.x[k]
        } else {
            &mut self.xi[k - 4]
        }
    }

    pub fn components(&self) -> impl Iterator<Item = &Expr> {
        self.x.iter().chain(self.xi.iter())
    }

    fn from_fn(f: impl Fn(usize) -> Expr) -> Self {
        Section::new(std::array::from_fn(&f), std::array::from_fn(|i| f(i + 4)))
    }

    pub fn add(&self, o: &Section) -> Section {
        Section::from_fn(|k| Expr::add(self.component(k).clone(), o.component(k).clone()))
    }

    pub fn sub(&self, o: &Section) -> Section {
        Section::from_fn(|k| Expr::sub(self.component(k).clone(), o.component(k).clone()))
    }

    pub fn scale(&self, c: &Expr) -> Section {
        Section::from_fn(|k| Expr::mul(c.clone(), self.component(k).clone()))
    }

    pub fn simplified(&self) -> Section {
        Section::from_fn(|k| simplify(self.component(k)))
    }

    pub fn eval(&self, pt: &Point) -> Result<[f64; 8], EvalError> {
        let mut out = [0.0; 8];
        for (k, c) in self.components().enumerate() {
            out[k] = c.eval(pt)?;
        }
        Ok(out)
    }

    /// Largest component magnitude at `pt`.
    pub fn max_abs_at(&self, pt: &Point) -> Result<f64, EvalError> {
        Ok(self.eval(pt)?.iter().fold(0.0, |m, v| m.max(v.abs())))
    }

    /// `is_zero` on all eight components; the first non-vanishing one is returned.
    pub fn vanishes(&self, plan: &SamplePlan) -> Result<Option<(usize, ZeroVerdict)>, ZeroError> {
        for (k, c) in self.components().enumerate() {
            let v = is_zero(c, plan)?;
            if !v.vanishes() {
                return Ok(Some((k, v)));
            }
        }
        Ok(None)
    }

    pub fn is_proven_zero(&self) -> bool {
        self.components().all(|c| simplify(c).is_literal_zero())
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[Expr; 4]| {
            v.iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        write!(f, "([{}], [{}])", join(&self.x), join(&self.xi))
    }
}

/// `X(f) = Xⁱ ∂ᵢ f`.
fn directional(x: &[Expr; 4], f: &Expr) -> Result<Expr, DiffError> {
    let mut terms = Vec::with_capacity(4);
    for v in Var::ALL {
        if !x[v.index()].is_literal_zero() {
            terms.push(Expr::mul(x[v.index()].clone(), differentiate(f, v)?));
        }
    }
    Ok(Expr::sum(terms))
}

pub fn lie_bracket(x: &[Expr; 4], y: &[Expr; 4]) -> Result<[Expr; 4], DiffError> {
    let mut out = zeros();
    for i in 0..4 {
        out[i] = simplify(&Expr::sub(directional(x, &y[i])?, directional(y, &x[i])?));
    }
    Ok(out)
}

/// `X⌟ξ = Xⁱξᵢ`.
pub fn contract(x: &[Expr; 4], xi: &[Expr; 4]) -> Expr {
    Expr::sum((0..4).map(|i| Expr::mul(x[i].clone(), xi[i].clone())))
}

fn signed_coeff(b: &TwoForm, i: usize, j: usize) -> Expr {
    match i.cmp(&j) {
        std::cmp::Ordering::Less => b.coeff(i, j).clone(),
        std::cmp::Ordering::Greater => Expr::neg(b.coeff(j, i).clone()),
        std::cmp::Ordering::Equal => Expr::zero(),
    }
}

/// `(X⌟β)ⱼ = Xⁱ β_ij`.
fn contract_two_form(x: &[Expr; 4], b: &TwoForm) -> [Expr; 4] {
    std::array::from_fn(|j| {
        Expr::sum((0..4).map(|i| Expr::mul(x[i].clone(), signed_coeff(b, i, j))))
    })
}

/// `L_X ξ = d(X⌟ξ) + X⌟dξ`.
pub fn lie_derivative(x: &[Expr; 4], xi: &[Expr; 4]) -> Result<[Expr; 4], DiffError> {
    let exact = OneForm::exact(&contract(x, xi))?;
    let inner = contract_two_form(x, &OneForm(xi.clone()).d()?);
    Ok(std::array::from_fn(|j| {
        Expr::add(exact.0[j].clone(), inner[j].clone())
    }))
}

/// `([X,Y], L_X ζ − L_Y ξ − ½ d(X⌟ζ − Y⌟ξ))`.
pub fn courant_bracket(s1: &Section, s2: &Section) -> Result<Section, DiffError> {
    let x = lie_bracket(&s1.x, &s2.x)?;
    let lx = lie_derivative(&s1.x, &s2.xi)?;
    let ly = lie_derivative(&s2.x, &s1.xi)?;
    let pairing = Expr::sub(contract(&s1.x, &s2.xi), contract(&s2.x, &s1.xi));
    let d = OneForm::exact(&pairing)?;
    let xi = std::array::from_fn(|j| {
        simplify(&Expr::sub(
            Expr::sub(lx[j].clone(), ly[j].clone()),
            Expr::mul(Expr::num(0.5), d.0[j].clone()),
        ))
    });
    Ok(Section::new(x, xi))
}

/// `J s` for an expression-valued endomorphism.
pub fn apply(j: &GenField, s: &Section) -> Section {
    Section::from_fn(|r| {
        let terms = (0..8)
            .filter(|&c| !j.entries[r][c].is_literal_zero() && !s.component(c).is_literal_zero())
            .map(|c| Expr::mul(j.entries[r][c].clone(), s.component(c).clone()));
        simplify(&Expr::sum(terms))
    })
}

/// A structure whose eigenbundles were found isotropic at every sample point.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotropicField {
    field: GenField,
    certified_at: usize,
}

impl IsotropicField {
    pub fn certify(field: GenField, plan: &SamplePlan) -> Result<IsotropicField, CourantError> {
        let points = plan.sample()?;
        for pt in &points {
            let j = field.at(pt)?;
            match isotropy_check(&j, DEFAULT_GEN_TOL) {
                Ok(Isotropy::Isotropic { .. }) => {}
                Ok(Isotropy::NonIsotropic { sign, entry, value }) => {
                    return Err(CourantError::NotIsotropic {
                        witness: *pt,
                        sign,
                        entry,
                        value,
                    })
                }
                Err(source) => {
                    return Err(CourantError::Unclassifiable {
                        witness: *pt,
                        source,
                    })
                }
            }
        }
        Ok(IsotropicField {
            field,
            certified_at: points.len(),
        })
    }

    pub fn field(&self) -> &GenField {
        &self.field
    }

    pub fn certified_at(&self) -> usize {
        self.certified_at
    }
}

/// `N(x, y) = [Jx, Jy] + J²[x, y] − J([Jx, y] + [x, Jy])`.
pub fn nijenhuis(j: &IsotropicField, s1: &Section, s2: &Section) -> Result<Section, DiffError> {
    let jf = j.field();
    let j1 = apply(jf, s1);
    let j2 = apply(jf, s2);
    let a = courant_bracket(&j1, &j2)?;
    let b = apply(jf, &apply(jf, &courant_bracket(s1, s2)?));
    let c = apply(
        jf,
        &courant_bracket(&j1, s2)?.add(&courant_bracket(s1, &j2)?),
    );
    Ok(a.add(&b).sub(&c).simplified())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub pairs: usize,
    pub points: usize,
    /// Largest component magnitude over all pairs and points.
    pub max_abs: f64,
    pub worst_pair: (usize, usize),
    pub worst_point: Option<Point>,
    /// Pairs whose torsion has some component above the tolerance.
    pub nonzero_pairs: usize,
    /// `true` when `J` has constant entries, making the probe conclusive.
    pub conclusive: bool,
}

impl ProbeReport {
    pub fn vanishes(&self) -> bool {
        self.nonzero_pairs == 0
    }
}

/// Torsion of `j` on all 64 pairs of coordinate sections, evaluated at `points`.
pub fn nijenhuis_probe(
    j: &IsotropicField,
    points: &[Point],
    tol: f64,
) -> Result<ProbeReport, CourantError> {
    let mut report = ProbeReport {
        pairs: 64,
        points: points.len(),
        max_abs: 0.0,
        worst_pair: (0, 0),
        worst_point: None,
        nonzero_pairs: 0,
        conclusive: j.field().is_constant(),
    };
    for a in 0..8 {
        for b in 0..8 {
            let n = nijenhuis(j, &Section::basis(a), &Section::basis(b))?;
            let mut pair_max = 0.0_f64;
            for pt in points {
                let m = n.max_abs_at(pt)?;
                if m > report.max_abs || report.worst_point.is_none() {
                    report.max_abs = report.max_abs.max(m);
                    report.worst_pair = (a, b);
                    report.worst_point = Some(*pt);
                }
                pair_max = pair_max.max(m);
            }
            if pair_max > tol {
                report.nonzero_pairs += 1;
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClosedVerdict {
    Closed {
        verdicts: [ZeroVerdict; 4],
    },
    NotClosed {
        component: &'static str,
        witness: Point,
        value: f64,
    },
}

impl ClosedVerdict {
    pub fn is_closed(&self) -> bool {
        matches!(self, ClosedVerdict::Closed { .. })
    }

    pub fn label(&self, yes: &'static str, no: &'static str) -> &'static str {
        if self.is_closed() {
            yes
        } else {
            no
        }
    }
}

fn closedness(d: &ThreeForm, plan: &SamplePlan) -> Result<ClosedVerdict, CourantError> {
    let mut verdicts: [ZeroVerdict; 4] = std::array::from_fn(|_| ZeroVerdict::ProvenZero);
    for (k, c) in d.coeffs.iter().enumerate() {
        match is_zero(c, plan)? {
            ZeroVerdict::NonZero { witness, value } => {
                return Ok(ClosedVerdict::NotClosed {
                    component: ThreeForm::NAMES[k],
                    witness,
                    value,
                })
            }
            v => verdicts[k] = v,
        }
    }
    Ok(ClosedVerdict::Closed { verdicts })
}

/// Closedness of `α / √|Pf|` on a signed region.
pub fn lr_integrability(
    s: &MAStructure,
    region: &SignedRegion,
    plan: &SamplePlan,
    floor: f64,
) -> Result<ClosedVerdict, CourantError> {
    let pf = s.pfaffian();
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
    }
    let normalized = s.normalize(region, plan)?;
    closedness(&exterior_derivative(&normalized.to_two_form())?, plan)
}

/// Whether `d(α + φΩ) = 0`.
pub fn divergence_check(
    s: &MAStructure,
    phi: &Expr,
    plan: &SamplePlan,
) -> Result<ClosedVerdict, CourantError> {
    let form = s.to_two_form().add(&TwoForm::symplectic().scale(phi));
    closedness(&exterior_derivative(&form)?, plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::gen::j_omega;
    use crate::phase::DEFAULT_PFAFFIAN_FLOOR;

    fn e(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn vec4(s: [&str; 4]) -> [Expr; 4] {
        s.map(e)
    }

    #[test]
    fn bracket_examples() {
        let dx_vec = Section::basis(0);
        let r = courant_bracket(&dx_vec, &Section::basis(4)).unwrap();
        assert!(r.is_proven_zero());
        let r = courant_bracket(&dx_vec, &Section::vector(vec4(["0", "x", "0", "0"]))).unwrap();
        assert_eq!(r, Section::basis(1));
        let r = courant_bracket(&dx_vec, &Section::form(vec4(["0", "x", "0", "0"]))).unwrap();
        assert_eq!(r, Section::basis(5));
    }

    #[test]
    fn bracket_is_antisymmetric() {
        let s1 = Section::new(
            vec4(["x*p", "y", "q^2", "1"]),
            vec4(["p", "0", "x*y", "sin(q)"]),
        );
        let s2 = Section::new(vec4(["0", "p*q", "x", "y^2"]), vec4(["q", "x^2", "0", "y"]));
        let sum = courant_bracket(&s1, &s2)
            .unwrap()
            .add(&courant_bracket(&s2, &s1).unwrap());
        assert!(sum.simplified().is_proven_zero());
    }

    #[test]
    fn vector_sections_give_the_lie_bracket() {
        let x = vec4(["y", "-x", "p*q", "0"]);
        let y = vec4(["x^2", "0", "1", "q"]);
        let r = courant_bracket(&Section::vector(x.clone()), &Section::vector(y.clone())).unwrap();
        assert_eq!(r.x, lie_bracket(&x, &y).unwrap());
        assert!(r.xi.iter().all(Expr::is_literal_zero));
    }

    #[test]
    fn nijenhuis_requires_isotropy() {
        let plan = SamplePlan::default().with_count(4);
        let g = crate::gen::build_antidiag(
            &nalgebra::Matrix4::identity(),
            crate::gen::Symmetry::Symmetric,
            Sign::Plus,
        )
        .unwrap();
        let err = IsotropicField::certify(GenField::constant(&g), &plan).unwrap_err();
        assert!(matches!(err, CourantError::NotIsotropic { .. }));
        assert!(err.to_string().contains("not a tensor"));
        assert!(matches!(
            IsotropicField::certify(GenField::constant(&crate::gen::GenEndo::zero()), &plan),
            Err(CourantError::Unclassifiable { .. })
        ));
    }

    #[test]
    fn probe_on_omega_and_laplace() {
        let plan = SamplePlan::default().with_count(4);
        let pts = plan.sample().unwrap();
        let jo = IsotropicField::certify(GenField::constant(&j_omega(Sign::Minus)), &plan).unwrap();
        let n = nijenhuis(&jo, &Section::basis(0), &Section::basis(1)).unwrap();
        assert!(n.is_proven_zero());
        let r = nijenhuis_probe(&jo, &pts, 1e-10).unwrap();
        assert!(r.vanishes() && r.conclusive);

        let lap = MAStructure::laplace();
        let region = SignedRegion::validate(&lap, Sign::Plus, &plan).unwrap();
        let jr = IsotropicField::certify(GenField::rho(&lap, &region, Sign::Minus), &plan).unwrap();
        assert!(nijenhuis_probe(&jr, &pts, 1e-10).unwrap().vanishes());
    }

    #[test]
    fn probe_on_von_karman() {
        let plan = SamplePlan::default()
            .with_bounds(Var::P, 0.1, 2.0)
            .with_count(4);
        let vk = MAStructure::von_karman();
        let region = SignedRegion::validate(&vk, Sign::Plus, &plan).unwrap();
        let j = IsotropicField::certify(GenField::rho(&vk, &region, Sign::Minus), &plan).unwrap();
        let r = nijenhuis_probe(&j, &[Point::new(0.0, 0.0, 1.0, 0.0)], 1e-10).unwrap();
        assert!(!r.conclusive);
        assert!(r.max_abs > 1e-3, "{r:?}");
    }

    #[test]
    fn lr_examples() {
        let plan = SamplePlan::default().with_count(16);
        let lap = MAStructure::laplace();
        let region = SignedRegion::validate(&lap, Sign::Plus, &plan).unwrap();
        assert!(
            lr_integrability(&lap, &region, &plan, DEFAULT_PFAFFIAN_FLOOR)
                .unwrap()
                .is_closed()
        );

        let pos = plan.clone().with_bounds(Var::P, 0.1, 2.0);
        let vk = MAStructure::von_karman();
        let region = SignedRegion::validate(&vk, Sign::Plus, &pos).unwrap();
        let v = lr_integrability(&vk, &region, &pos, DEFAULT_PFAFFIAN_FLOOR).unwrap();
        assert!(
            matches!(
                v,
                ClosedVerdict::NotClosed {
                    component: "c_xpq",
                    ..
                }
            ),
            "{v:?}"
        );

        let c = MAStructure::constant(0.3, -1.2, 0.7, 2.0, -0.4);
        let sign = Sign::of(c.pfaffian().as_num().unwrap()).unwrap();
        let region = SignedRegion::validate(&c, sign, &plan).unwrap();
        assert!(lr_integrability(&c, &region, &plan, DEFAULT_PFAFFIAN_FLOOR)
            .unwrap()
            .is_closed());
    }

    #[test]
    fn divergence_examples() {
        let plan = SamplePlan::default().with_count(16);
        let lap = MAStructure::laplace();
        assert!(divergence_check(&lap, &Expr::zero(), &plan)
            .unwrap()
            .is_closed());
        match divergence_check(&lap, &e("x"), &plan).unwrap() {
            ClosedVerdict::NotClosed {
                component, value, ..
            } => {
                assert_eq!(component, "c_xyq");
                assert_eq!(value, 1.0);
            }
            other => panic!("{other:?}"),
        }
        // p dp∧dy + dx∧dq is closed
        let vk = MAStructure::von_karman();
        assert!(divergence_check(&vk, &Expr::num(3.0), &plan)
            .unwrap()
            .is_closed());
        let s = MAStructure::parse("x", "0", "1", "0", "0").unwrap();
        assert!(!divergence_check(&s, &Expr::num(3.0), &plan)
            .unwrap()
            .is_closed());
    }
}
