mod common;

use mageo::courant::*;
use mageo::expr::{is_zero, parse, Expr, Point, Var};
use mageo::gen::{j_omega, j_rho, GenEndo, GenField};
use mageo::ma::{MAStructure, Sign, SignedRegion};
use mageo::phase::SamplePlan;
use proptest::prelude::*;
use rand::Rng;

fn e(s: &str) -> Expr {
    parse(s).unwrap()
}

fn random_section(rng: &mut rand_chacha::ChaCha8Rng) -> Section {
    Section::new(
        std::array::from_fn(|_| common::random_poly(rng)),
        std::array::from_fn(|_| common::random_poly(rng)),
    )
}

fn vanishes(s: &Section) -> bool {
    s.vanishes(&SamplePlan::default().with_count(16))
        .unwrap()
        .is_none()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn courant_bracket_is_skew(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let (a, b) = (random_section(&mut rng), random_section(&mut rng));
        let sum = courant_bracket(&a, &b).unwrap().add(&courant_bracket(&b, &a).unwrap());
        prop_assert!(vanishes(&sum));
    }

    #[test]
    fn lie_bracket_obeys_leibniz(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let x: [Expr; 4] = std::array::from_fn(|_| common::random_poly(&mut rng));
        let y: [Expr; 4] = std::array::from_fn(|_| common::random_poly(&mut rng));
        let f = common::random_poly(&mut rng);
        let fy = y.clone().map(|c| Expr::mul(f.clone(), c));
        let lhs = lie_bracket(&x, &fy).unwrap();
        let xf = contract(&x, &std::array::from_fn(|i| mageo::expr::differentiate(&f, Var::ALL[i]).unwrap()));
        let xy = lie_bracket(&x, &y).unwrap();
        for i in 0..4 {
            let rhs = Expr::add(Expr::mul(f.clone(), xy[i].clone()), Expr::mul(xf.clone(), y[i].clone()));
            prop_assert!(is_zero(&Expr::sub(lhs[i].clone(), rhs), &SamplePlan::default().with_count(16)).unwrap().vanishes());
        }
    }

    #[test]
    fn constant_isotropic_structures_are_integrable(c in prop::array::uniform5(-2.0..2.0f64)) {
        let s = MAStructure::constant(c[0], c[1], c[2], c[3], c[4]);
        let pf = s.pfaffian().eval(&Point::default()).unwrap();
        prop_assume!(pf.abs() > 0.05);
        let j = j_rho(&s, &Point::default(), Sign::Minus, 1e-6).unwrap();
        let iso = IsotropicField::certify(GenField::constant(&j), &SamplePlan::default().with_count(2)).unwrap();
        let probe = nijenhuis_probe(&iso, &[Point::default()], 1e-10).unwrap();
        prop_assert!(probe.vanishes() && probe.conclusive);
        let sign = Sign::of(pf).unwrap();
        let plan = SamplePlan::default().with_count(8);
        let region = SignedRegion::validate(&s, sign, &plan).unwrap();
        prop_assert!(lr_integrability(&s, &region, &plan, 1e-6).unwrap().is_closed());
    }
}

#[test]
fn coordinate_fields_commute() {
    let mut rng = common::rng(2);
    for _ in 0..10 {
        let (a, b) = (rng.gen_range(0..8), rng.gen_range(0..8));
        assert!(courant_bracket(&Section::basis(a), &Section::basis(b))
            .unwrap()
            .is_proven_zero());
    }
}

#[test]
fn bracket_of_vector_fields() {
    let x = [e("1"), e("0"), e("0"), e("0")];
    let y = [e("0"), e("x"), e("0"), e("0")];
    let b = lie_bracket(&x, &y).unwrap();
    assert_eq!(
        b.map(|c| c.eval(&Point::default()).unwrap()),
        [0.0, 1.0, 0.0, 0.0]
    );
}

#[test]
fn cartan_formula_on_an_exact_form() {
    let x = [e("y"), e("0"), e("0"), e("0")];
    let df = [e("0"), e("1"), e("0"), e("0")];
    let l = lie_derivative(&x, &df).unwrap();
    assert!(l
        .iter()
        .all(|c| c.eval(&Point::new(1.0, 2.0, 3.0, 4.0)).unwrap() == 0.0));
    let dx = [e("1"), e("0"), e("0"), e("0")];
    let l = lie_derivative(&x, &dx).unwrap();
    assert_eq!(
        l.map(|c| c.eval(&Point::default()).unwrap()),
        [0.0, 1.0, 0.0, 0.0]
    );
}

#[test]
fn non_isotropic_structures_are_refused() {
    let j = j_rho(&MAStructure::laplace(), &Point::default(), Sign::Plus, 1e-6).unwrap();
    let err = IsotropicField::certify(GenField::constant(&j), &SamplePlan::default().with_count(2))
        .unwrap_err();
    assert!(matches!(err, CourantError::NotIsotropic { .. }));
    assert!(err.to_string().contains("not a tensor"));
}

#[test]
fn symplectic_structure_is_integrable() {
    let iso = IsotropicField::certify(
        GenField::constant(&j_omega(Sign::Minus)),
        &SamplePlan::default().with_count(2),
    )
    .unwrap();
    assert!(nijenhuis_probe(&iso, &[Point::default()], 1e-12)
        .unwrap()
        .vanishes());
}

#[test]
fn identity_is_not_isotropic() {
    let r = IsotropicField::certify(
        GenField::constant(&GenEndo::identity()),
        &SamplePlan::default().with_count(1),
    );
    assert!(r.is_err());
}

#[test]
fn von_karman_torsion_and_closedness() {
    let s = MAStructure::von_karman();
    let plan = SamplePlan::default()
        .with_count(16)
        .with_bounds(Var::P, 0.1, 2.0);
    let region = SignedRegion::validate(&s, Sign::Plus, &plan).unwrap();
    let v = lr_integrability(&s, &region, &plan, 1e-6).unwrap();
    assert!(matches!(
        v,
        ClosedVerdict::NotClosed {
            component: "c_xpq",
            ..
        }
    ));
    let iso = IsotropicField::certify(GenField::rho(&s, &region, Sign::Minus), &plan).unwrap();
    let probe = nijenhuis_probe(&iso, &[Point::new(0.0, 0.0, 1.0, 0.0)], 1e-10).unwrap();
    assert!(probe.max_abs >= 1e-3);
    assert!(!probe.conclusive);
}

#[test]
fn divergence_condition() {
    let plan = SamplePlan::default().with_count(16);
    assert!(divergence_check(&MAStructure::laplace(), &e("0"), &plan)
        .unwrap()
        .is_closed());
    assert!(divergence_check(&MAStructure::laplace(), &e("2"), &plan)
        .unwrap()
        .is_closed());
    assert!(!divergence_check(&MAStructure::laplace(), &e("x"), &plan)
        .unwrap()
        .is_closed());
}
