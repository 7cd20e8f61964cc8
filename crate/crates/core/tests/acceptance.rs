//! Acceptance criteria. Each test writes one `PASS`/`FAIL` line to stderr.

mod common;

use std::io::Write;
use std::path::PathBuf;
use std::process::Command;

use mageo::cli::strip_timestamp;
use mageo::courant::{lr_integrability, nijenhuis_probe, IsotropicField};
use mageo::expr::{is_zero, parse, simplify, Expr, Point, Var, ZeroVerdict};
use mageo::gen::{
    anticommutator, build_antidiag, build_banos, build_diag, classify_gen, j_alpha, j_omega, j_rho,
    GenEndo, GenField, GenKind, Symmetry,
};
use mageo::ma::{MAStructure, MaError, Sign, SignedRegion, PULLBACK_SIGN};
use mageo::phase::{wedge_top, SamplePlan, TwoForm};
use mageo::quadric::{
    count_admissible, distinctness_check, family_matrix, family_residuals, k_value,
    reference_structure, rescale_transform, sample_cell, Cell, QuadricType,
};
use nalgebra::Matrix4;

const FLOOR: f64 = 1e-6;

fn verdict(n: u32, title: &str, outcome: Result<String, String>) {
    let line = match &outcome {
        Ok(detail) => format!("criterion {n:>2} PASS  {title}: {detail}"),
        Err(detail) => format!("criterion {n:>2} FAIL  {title}: {detail}"),
    };
    let _ = writeln!(std::io::stderr(), "{line}");
    if let Err(detail) = outcome {
        panic!("criterion {n} failed: {detail}");
    }
}

fn check(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn example33() -> MAStructure {
    MAStructure::orthogonal_family(Expr::num(0.6), Expr::num(0.8))
}

fn vk_plan() -> SamplePlan {
    SamplePlan::default().with_bounds(Var::P, 0.1, 2.0)
}

/// Every structure examined by the ρ and determinant criteria, with its plan.
fn corpus() -> Vec<(String, MAStructure, SamplePlan)> {
    let mut out = vec![
        (
            "laplace".to_string(),
            MAStructure::laplace(),
            SamplePlan::default(),
        ),
        (
            "wave".to_string(),
            MAStructure::wave(),
            SamplePlan::default(),
        ),
        (
            "von_karman".to_string(),
            MAStructure::von_karman(),
            vk_plan(),
        ),
        ("example33".to_string(), example33(), SamplePlan::default()),
    ];
    let mut rng = common::rng(2024);
    for i in 0..100 {
        let s = common::random_structure(&mut rng);
        out.push((
            format!("random #{i}"),
            s,
            SamplePlan::default().with_seed(i),
        ));
    }
    out
}

#[test]
fn criterion_01_pfaffian_golden_values() {
    let laplace = simplify(&MAStructure::laplace().pfaffian());
    let wave = simplify(&MAStructure::wave().pfaffian());
    let vk = MAStructure::von_karman().pfaffian();
    let at3 = vk.eval(&Point::new(0.0, 0.0, 3.0, 0.0)).unwrap();
    let mut vk_dev = (at3 - 3.0).abs();
    for pt in SamplePlan::default().sample().unwrap() {
        vk_dev = vk_dev.max((vk.eval(&pt).unwrap() - pt.get(Var::P)).abs());
    }
    let ok = laplace == Expr::num(1.0) && wave == Expr::num(-1.0) && vk_dev <= 1e-12;
    verdict(
        1,
        "Pfaffian golden values",
        check(ok, format!("Laplace `{laplace}`, wave `{wave}`, von Karman at p = 3 gives {at3}, max |Pf − p| = {vk_dev:e}")),
    );
}

#[test]
fn criterion_02_pfaffian_oracle_equivalence() {
    let mut rng = common::rng(7);
    let omega = wedge_top(&TwoForm::symplectic(), &TwoForm::symplectic());
    let mut worst = 0.0_f64;
    for _ in 0..500 {
        let s = common::random_structure(&mut rng);
        let form = s.to_two_form();
        let quotient = Expr::div(wedge_top(&form, &form), omega.clone());
        let pf = s.pfaffian();
        for _ in 0..20 {
            let pt = common::random_point(&mut rng);
            let v = pf.eval(&pt).unwrap();
            let w = quotient.eval(&pt).unwrap();
            worst = worst.max((v - w).abs() / (1.0 + v.abs()));
        }
    }
    verdict(
        2,
        "Pfaffian oracle equivalence",
        check(
            worst <= 1e-9,
            format!("500 structures × 20 points, max |Δ|/(1+|Pf|) = {worst:e}"),
        ),
    );
}

#[test]
fn criterion_03_rho_identity() {
    let mut worst = (0.0_f64, String::new());
    let (mut checked, mut skipped) = (0usize, 0usize);
    for (name, s, plan) in corpus() {
        let pf = s.pfaffian();
        for pt in plan.sample().unwrap() {
            let v = pf.eval(&pt).unwrap();
            match s.rho_at(&pt, FLOOR) {
                Ok(r) => {
                    checked += 1;
                    let res = (r * r + Matrix4::identity() * v.signum()).amax();
                    if res > worst.0 {
                        worst = (res, name.clone());
                    }
                }
                Err(MaError::Degenerate { .. }) => skipped += 1,
                Err(e) => panic!("{name}: {e}"),
            }
        }
    }
    verdict(
        3,
        "ρ² = −sgn(Pf) Id",
        check(
            worst.0 <= 1e-10,
            format!(
                "{checked} points ({skipped} below the floor), max residual {:e} on {}",
                worst.0, worst.1
            ),
        ),
    );
}

#[test]
fn criterion_04_determinant_is_pfaffian_squared() {
    let mut worst = 0.0_f64;
    let mut points = 0;
    for (_, s, plan) in corpus() {
        let pf = s.pfaffian();
        for pt in plan.sample().unwrap() {
            let v = pf.eval(&pt).unwrap();
            let det = s.alpha_matrix(&pt).unwrap().determinant();
            worst = worst.max((det - v * v).abs() / (v * v).max(1.0));
            points += 1;
        }
    }
    verdict(
        4,
        "det α = Pf²",
        check(
            worst <= 1e-8,
            format!("{points} points, max relative deviation {worst:e}"),
        ),
    );
}

#[test]
fn criterion_05_classification_tables() {
    let pt = Point::default();
    let laplace = MAStructure::laplace();
    let wave = MAStructure::wave();
    let complex = laplace.rho_at(&pt, FLOOR).unwrap();
    let para = wave.rho_at(&pt, FLOOR).unwrap();
    let metric = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 2.0, -1.0, 3.0));
    type Build = Box<dyn Fn(Sign) -> GenEndo>;
    let rows: Vec<(&str, Build, [GenKind; 2])> = vec![
        (
            "J_J",
            Box::new(move |e| build_diag(&complex, e)),
            [GenKind::GaAC, GenKind::GaC],
        ),
        (
            "J_P",
            Box::new(move |e| build_diag(&para, e)),
            [GenKind::GaP, GenKind::GaPC],
        ),
        (
            "J_α",
            Box::new(move |e| j_alpha(&MAStructure::laplace(), &Point::default(), e).unwrap()),
            [GenKind::GaPC, GenKind::GaC],
        ),
        (
            "J_g",
            Box::new(move |e| build_antidiag(&metric, Symmetry::Symmetric, e).unwrap()),
            [GenKind::GaP, GenKind::GaAC],
        ),
        (
            "J_ρ elliptic",
            Box::new(move |e| j_rho(&laplace, &Point::default(), e, FLOOR).unwrap()),
            [GenKind::GaAC, GenKind::GaC],
        ),
        (
            "J_ρ hyperbolic",
            Box::new(move |e| j_rho(&wave, &Point::default(), e, FLOOR).unwrap()),
            [GenKind::GaP, GenKind::GaPC],
        ),
    ];
    let mut bad = Vec::new();
    let mut worst = 0.0_f64;
    for (name, build, want) in &rows {
        for (eps, want) in [Sign::Plus, Sign::Minus].into_iter().zip(want) {
            let t = classify_gen(&build(eps), 1e-10);
            worst = worst.max(t.square_residual).max(t.eta_residual);
            if t.kind != *want {
                bad.push(format!("{name}(ε = {eps}) is {} not {want}", t.kind));
            }
        }
    }
    let detail = if bad.is_empty() {
        format!(
            "{} builder/ε cases match, max residual {worst:e}",
            rows.len() * 2
        )
    } else {
        bad.join("; ")
    };
    verdict(
        5,
        "classification table",
        check(bad.is_empty() && worst <= 1e-10, detail),
    );
}

#[test]
fn criterion_06_anticommutativity_theorem() {
    let s = example33();
    let points = SamplePlan::default().with_count(100).sample().unwrap();
    let triple = |e1: Sign, e3: Sign, pt: &Point| {
        let jr = j_rho(&s, pt, e1, FLOOR).unwrap();
        let ja = j_alpha(&s, pt, Sign::Plus).unwrap();
        let jo = j_omega(e3);
        [
            anticommutator(&jr, &ja),
            anticommutator(&jr, &jo),
            anticommutator(&ja, &jo),
        ]
        .iter()
        .map(GenEndo::max_norm)
        .fold(0.0, f64::max)
    };
    let worst = |e1, e3| points.iter().map(|p| triple(e1, e3, p)).fold(0.0, f64::max);
    let forced = worst(Sign::Minus, Sign::Minus);
    let flip1 = worst(Sign::Plus, Sign::Minus);
    let flip3 = worst(Sign::Minus, Sign::Plus);
    verdict(
        6,
        "anticommuting triple",
        check(
            forced <= 1e-10 && flip1 >= 0.1 && flip3 >= 0.1,
            format!("ε₁ = −1: {forced:e}; ε₁ = +1: {flip1}; ε₃ = +1: {flip3}"),
        ),
    );
}

#[test]
fn criterion_07_quadric_family_identities() {
    let points = SamplePlan::default().with_count(5).sample().unwrap();
    let mut failing = Vec::new();
    let mut worst_ok = 0.0_f64;
    for cell in Cell::all() {
        if cell.quadric() == QuadricType::Empty {
            let found = count_admissible(&cell, 100_000, 3);
            if found > 0 {
                failing.push(format!("[{cell}] empty but {found} admissible"));
            }
            continue;
        }
        let s = reference_structure(cell.sgn_pf);
        let samples = sample_cell(&cell, 50, 100_000, 3);
        if samples.len() < 50 {
            failing.push(format!(
                "[{cell}] only {} admissible triples",
                samples.len()
            ));
            continue;
        }
        let mut worst = 0.0_f64;
        for c in &samples {
            let k = k_value(c, cell.sgn_pf);
            for pt in &points {
                let a = family_matrix(&s, c, pt, FLOOR).unwrap();
                let (sq, et) = family_residuals(&a, k);
                worst = worst.max(sq).max(et);
            }
        }
        if worst > 1e-9 {
            failing.push(format!("[{cell}] residual {worst:.3}"));
        } else {
            worst_ok = worst_ok.max(worst);
        }
    }
    let detail = if failing.is_empty() {
        format!("16 cells, max residual {worst_ok:e}")
    } else {
        format!(
            "{} cells fail (sgn Pf ≠ ε₂ε₃ makes {{J_α, J_Ω}} ≠ 0): {}",
            failing.len(),
            failing.join("; ")
        )
    };
    verdict(
        7,
        "quadric family identities",
        check(failing.is_empty(), detail),
    );
}

#[test]
fn criterion_08_distinctness() {
    let cell = Cell::new(Sign::Minus, Sign::Plus, Sign::Plus, Sign::Plus);
    let sphere = sample_cell(&cell, 200, 100_000, 8);
    let s = example33();
    let plan = SamplePlan::default().with_count(10);
    let mut identical = 0;
    let mut smallest = f64::INFINITY;
    for pair in sphere.chunks(2).take(100) {
        let (c1, c2) = (&pair[0], &pair[1]);
        assert_ne!(c1.a(), c2.a());
        match distinctness_check(&s, c1, c2, &plan, FLOOR).unwrap() {
            mageo::quadric::Distinctness::Distinct { difference, .. } => {
                smallest = smallest.min(difference)
            }
            mageo::quadric::Distinctness::Identical { .. } => identical += 1,
        }
    }
    verdict(
        8,
        "distinct sphere points give distinct members",
        check(
            identical == 0,
            format!("100 pairs, {identical} identical, smallest witnessed difference {smallest:e}"),
        ),
    );
}

#[test]
fn criterion_09_integrability_verdicts() {
    let plan = SamplePlan::default().with_count(32);
    let lr = |s: &MAStructure, plan: &SamplePlan| {
        let sign = Sign::of(s.pfaffian().eval(&plan.sample().unwrap()[0]).unwrap()).unwrap();
        let region = SignedRegion::validate(s, sign, plan).unwrap();
        lr_integrability(s, &region, plan, FLOOR)
            .unwrap()
            .is_closed()
    };
    let laplace_ok = lr(&MAStructure::laplace(), &plan);
    let mut rng = common::rng(9);
    let mut constants = 0;
    let mut constant_ok = true;
    use rand::Rng;
    while constants < 20 {
        let c: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let s = MAStructure::constant(c[0], c[1], c[2], c[3], c[4]);
        if s.pfaffian().eval(&Point::default()).unwrap().abs() < 0.05 {
            continue;
        }
        constants += 1;
        constant_ok &= lr(&s, &plan);
    }
    let vk_not = !lr(&MAStructure::von_karman(), &vk_plan());

    let probe = |s: &MAStructure, pt: Point| {
        let j = build_diag(&s.rho_at(&pt, FLOOR).unwrap(), Sign::Minus);
        let field = if s.pfaffian().is_constant() {
            GenField::constant(&j)
        } else {
            let region = SignedRegion::validate(s, Sign::Plus, &vk_plan()).unwrap();
            GenField::rho(s, &region, Sign::Minus)
        };
        assert_eq!(field.at(&pt).unwrap(), j);
        let iso = IsotropicField::certify(
            field,
            &SamplePlan::default()
                .with_count(4)
                .with_bounds(Var::P, 0.1, 2.0),
        )
        .unwrap();
        nijenhuis_probe(&iso, &[pt], 1e-10).unwrap()
    };
    let lap = probe(&MAStructure::laplace(), Point::default());
    let vk = probe(&MAStructure::von_karman(), Point::new(0.0, 0.0, 1.0, 0.0));
    let ok = laplace_ok && constant_ok && vk_not && lap.max_abs <= 1e-10 && vk.max_abs >= 1e-3;
    verdict(
        9,
        "integrability verdicts",
        check(
            ok,
            format!(
                "Laplace closed: {laplace_ok}, 20 constant structures closed: {constant_ok}, von Karman not closed: {vk_not}, \
                 Laplace torsion max {:e} over 64 pairs, von Karman torsion max {:.3} at pair {:?}",
                lap.max_abs, vk.max_abs, vk.worst_pair
            ),
        ),
    );
}

#[test]
fn criterion_10_residual_pullback_oracle() {
    let mut rng = common::rng(10);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let s = common::random_structure(&mut rng);
        let f = common::random_graph_fn(&mut rng);
        let r = s.residual(&f).unwrap();
        let pb = s.pullback_oracle(&f).unwrap();
        for _ in 0..100 {
            let pt = common::random_point(&mut rng);
            let base = Point::new(pt.get(Var::X), pt.get(Var::Y), 0.0, 0.0);
            worst =
                worst.max((r.eval(&base).unwrap() - PULLBACK_SIGN * pb.eval(&base).unwrap()).abs());
        }
    }
    let laplace = MAStructure::laplace()
        .residual(&parse("x^2 - y^2").unwrap())
        .unwrap();
    let proven = is_zero(&laplace, &SamplePlan::default()).unwrap() == ZeroVerdict::ProvenZero;
    verdict(
        10,
        "residual equals pullback",
        check(
            worst <= 1e-8 && proven,
            format!(
                "50 pairs × 100 points, max |Δ| = {worst:e}; Laplace x² − y² proven zero: {proven}"
            ),
        ),
    );
}

#[test]
fn criterion_11_rescaling_laws() {
    let plan = SamplePlan::default().with_count(32);
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, s, plan) in [
        ("laplace", MAStructure::laplace(), plan.clone()),
        ("example33", example33(), plan.clone()),
        (
            "von_karman",
            MAStructure::von_karman(),
            plan.clone().with_bounds(Var::P, 0.1, 2.0),
        ),
    ] {
        for h in ["-1", "2", "1 + p^2", "1"] {
            let r = rescale_transform(&s, &parse(h).unwrap(), Sign::Plus, Sign::Plus, &plan, FLOOR)
                .unwrap();
            let proven = r.pfaffian_law == ZeroVerdict::ProvenZero;
            let preserved_ok = r.family_preserved == (h == "1");
            let good = proven && r.rho_max_deviation <= 1e-10 && preserved_ok;
            ok &= good;
            if !good {
                lines.push(format!(
                    "{name}, h = {h}: law {}, ρ {:e}, preserved {}",
                    r.pfaffian_law.label(),
                    r.rho_max_deviation,
                    r.family_preserved
                ));
            }
        }
    }
    let detail = if lines.is_empty() {
        "Pf law proven, ρ(hα) = sgn(h) ρ(α), family kept only for h = 1 on three structures"
            .to_string()
    } else {
        lines.join("; ")
    };
    verdict(11, "rescaling laws", check(ok, detail));
}

#[test]
fn criterion_12_banos_structure() {
    let s = MAStructure::laplace();
    let mut worst = 0.0_f64;
    let mut ct = 0.0_f64;
    let mut kinds_ok = true;
    for pt in SamplePlan::default().with_count(32).sample().unwrap() {
        let j = build_banos(&s, &pt, FLOOR).unwrap();
        worst = worst.max((j.square() + GenEndo::identity()).max_norm());
        ct = ct.max(j.ct.amax());
        kinds_ok &= classify_gen(&j, 1e-10).kind == GenKind::GaC;
    }
    verdict(
        12,
        "Banos structure on Laplace",
        check(
            worst <= 1e-10 && ct == 0.0 && kinds_ok,
            format!("‖J² + Id‖ = {worst:e}, max |CT| = {ct}, GaC: {kinds_ok}"),
        ),
    );
}

#[test]
fn criterion_13_determinism() {
    let bin = env!("CARGO_BIN_EXE_mageo");
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/example33.json");
    let invoke = || {
        let out = Command::new(bin)
            .args(["run", config.to_str().unwrap(), "--seed", "42"])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        strip_timestamp(&String::from_utf8(out.stdout).unwrap())
    };
    let (a, b) = (invoke(), invoke());
    verdict(
        13,
        "deterministic reports",
        check(
            a == b,
            format!(
                "two invocations, {} bytes each, identical: {}",
                a.len(),
                a == b
            ),
        ),
    );
}
