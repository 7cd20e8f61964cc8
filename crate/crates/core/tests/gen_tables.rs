use mageo::expr::Point;
use mageo::gen::{
    anticommutator, build_antidiag, build_banos, build_diag, classify_gen, eigen_projectors, eta,
    isotropy_check, j_alpha, j_omega, j_rho, GenEndo, GenKind, Mat8, Symmetry,
};
use mageo::ma::{MAStructure, Sign};
use nalgebra::Matrix4;
use proptest::prelude::*;

const TOL: f64 = 1e-10;

/// `(J², JᵀηJ)` signs computed directly.
fn gammas(j: &GenEndo) -> (f64, f64) {
    let m = j.matrix();
    let sq = m * m;
    let pulled = m.transpose() * eta() * m;
    let g1 = sq[(0, 0)].signum();
    let g2 = if (pulled - eta()).amax() < 1e-8 {
        1.0
    } else {
        -1.0
    };
    assert!((sq - Mat8::identity() * g1).amax() < 1e-8);
    assert!((pulled - eta() * g2).amax() < 1e-8);
    (g1, g2)
}

fn structure() -> impl Strategy<Value = (MAStructure, f64)> {
    prop::array::uniform5(-2.0..2.0f64).prop_filter_map("near-degenerate", |c| {
        let s = MAStructure::constant(c[0], c[1], c[2], c[3], c[4]);
        let pf = s.pfaffian().eval(&Point::default()).ok()?;
        (pf.abs() > 0.05).then_some((s, pf))
    })
}

fn symmetric() -> impl Strategy<Value = Matrix4<f64>> {
    prop::array::uniform16(-2.0..2.0f64).prop_filter_map("singular", |v| {
        let m = Matrix4::from_column_slice(&v);
        let g = m + m.transpose() + Matrix4::identity() * 0.5;
        (g.determinant().abs() > 1e-2).then_some(g)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rho_builders_follow_the_table((s, pf) in structure()) {
        let pt = Point::default();
        let cases = if pf > 0.0 {
            [(Sign::Plus, GenKind::GaAC), (Sign::Minus, GenKind::GaC)]
        } else {
            [(Sign::Plus, GenKind::GaP), (Sign::Minus, GenKind::GaPC)]
        };
        for (eps, want) in cases {
            let j = j_rho(&s, &pt, eps, 1e-6).unwrap();
            let t = classify_gen(&j, TOL);
            prop_assert_eq!(t.kind, want);
            prop_assert!(t.square_residual <= TOL && t.eta_residual <= TOL);
            let (g1, g2) = gammas(&j);
            prop_assert_eq!(GenKind::from_gammas(Sign::from_value(g1).unwrap(), Sign::from_value(g2).unwrap()), want);
        }
    }

    #[test]
    fn alpha_builder_follows_the_table((s, _) in structure()) {
        let pt = Point::default();
        for (eps, want) in [(Sign::Plus, GenKind::GaPC), (Sign::Minus, GenKind::GaC)] {
            let j = j_alpha(&s, &pt, eps).unwrap();
            let t = classify_gen(&j, TOL * (1.0 + j.max_norm().powi(2)));
            prop_assert_eq!(t.kind, want);
        }
    }

    #[test]
    fn metric_builder_follows_the_table(g in symmetric()) {
        for (eps, want) in [(Sign::Plus, GenKind::GaP), (Sign::Minus, GenKind::GaAC)] {
            let j = build_antidiag(&g, Symmetry::Symmetric, eps).unwrap();
            let t = classify_gen(&j, 1e-8 * (1.0 + j.max_norm().powi(2)));
            prop_assert_eq!(t.kind, want);
        }
    }

    #[test]
    fn rho_eps_minus_anticommutes_with_alpha((s, _) in structure()) {
        let pt = Point::default();
        let jr = j_rho(&s, &pt, Sign::Minus, 1e-6).unwrap();
        let ja = j_alpha(&s, &pt, Sign::Plus).unwrap();
        prop_assert!(anticommutator(&jr, &ja).max_norm() <= 1e-10 * (1.0 + ja.max_norm()));
        prop_assert!(anticommutator(&jr, &j_omega(Sign::Minus)).max_norm() <= 1e-10);
    }

    #[test]
    fn banos_is_generalized_complex((s, _) in structure()) {
        let pt = Point::default();
        let j = build_banos(&s, &pt, 1e-6).unwrap();
        let t = classify_gen(&j, 1e-8 * (1.0 + j.max_norm().powi(2)));
        prop_assert_eq!(t.kind, GenKind::GaC);
    }

    #[test]
    fn projectors_split_the_bundle((s, _) in structure(), eps in prop::bool::ANY) {
        let eps = if eps { Sign::Plus } else { Sign::Minus };
        let j = j_rho(&s, &Point::default(), eps, 1e-6).unwrap();
        let p = eigen_projectors(&j, TOL).unwrap();
        prop_assert!(p.algebra_residual() <= 1e-9);
        prop_assert_eq!(p.ranks(), (4, 4));
        let kind = classify_gen(&j, TOL).kind;
        let iso = isotropy_check(&j, 1e-9).unwrap().is_isotropic();
        prop_assert_eq!(iso, matches!(kind, GenKind::GaC | GenKind::GaPC));
    }
}

#[test]
fn symplectic_structure_table() {
    assert_eq!(classify_gen(&j_omega(Sign::Plus), TOL).kind, GenKind::GaPC);
    assert_eq!(classify_gen(&j_omega(Sign::Minus), TOL).kind, GenKind::GaC);
}

#[test]
fn complex_and_paracomplex_diagonal_builders() {
    let j = Matrix4::new(
        0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0,
    );
    let p = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, 1.0, -1.0));
    assert_eq!(
        classify_gen(&build_diag(&j, Sign::Plus), TOL).kind,
        GenKind::GaAC
    );
    assert_eq!(
        classify_gen(&build_diag(&j, Sign::Minus), TOL).kind,
        GenKind::GaC
    );
    assert_eq!(
        classify_gen(&build_diag(&p, Sign::Plus), TOL).kind,
        GenKind::GaP
    );
    assert_eq!(
        classify_gen(&build_diag(&p, Sign::Minus), TOL).kind,
        GenKind::GaPC
    );
}

#[test]
fn a_generic_matrix_is_unclassified() {
    let m = Mat8::from_fn(|i, j| ((i * 3 + j * 5) % 7) as f64 - 3.0);
    assert_eq!(
        classify_gen(&GenEndo::from_matrix(&m), TOL).kind,
        GenKind::None
    );
    assert!(eigen_projectors(&GenEndo::from_matrix(&m), TOL).is_err());
}

#[test]
fn banos_on_laplace() {
    let j = build_banos(&MAStructure::laplace(), &Point::default(), 1e-6).unwrap();
    assert!((j.square() + GenEndo::identity()).max_norm() <= 1e-10);
    assert_eq!(j.ct.amax(), 0.0);
}

#[test]
fn symmetry_mismatch_is_reported() {
    assert!(build_antidiag(&Matrix4::identity(), Symmetry::Antisymmetric, Sign::Plus).is_err());
    assert!(build_antidiag(&Matrix4::zeros(), Symmetry::Symmetric, Sign::Plus).is_err());
}
