use crate::courant::{
    divergence_check, lr_integrability, nijenhuis_probe, ClosedVerdict, IsotropicField,
};
use crate::expr::{is_zero, simplify, Expr, Point, ZeroVerdict};
use crate::gen::{
    anticommutator, build_banos, classify_gen, j_alpha, j_omega, j_rho, GenEndo, GenError,
    GenField, GenKind,
};
use crate::ma::{MAStructure, PfaffianClass, Sign, SignedRegion, PULLBACK_SIGN};
use crate::quadric::{
    anticommutativity_check, build_family_member, count_admissible, family_residuals,
    induced_conic, is_admissible, k_value, quadric_type, reference_structure, rescale_transform,
    sweep_points, verify_cell, Anticommutativity, Cell, FamilyCoeffs, FORCED_EPS1,
};

use super::config::Resolved;
use super::report::*;

const ORACLE_TOL: f64 = 1e-9;
const DET_TOL: f64 = 1e-8;
const PULLBACK_TOL: f64 = 1e-8;
const EMPTINESS_DRAWS: usize = 100_000;

struct Ctx<'a> {
    r: &'a Resolved,
    points: Vec<Point>,
    /// Points with `|Pf| ≥ floor`.
    regular: Vec<Point>,
    tol: f64,
    gen_tol: f64,
}

impl<'a> Ctx<'a> {
    fn new(r: &'a Resolved, report: &mut Report) -> Option<Ctx<'a>> {
        let points = match r.plan.sample() {
            Ok(p) => p,
            Err(e) => {
                report.fail(format!("sampling: {e}"));
                return None;
            }
        };
        let pf = r.structure.pfaffian();
        let regular = points
            .iter()
            .filter(|p| pf.eval(p).is_ok_and(|v| v.abs() >= r.floor))
            .copied()
            .collect();
        Some(Ctx {
            r,
            points,
            regular,
            tol: r.config.tolerances.verification,
            gen_tol: r.config.tolerances.classification,
        })
    }

    fn s(&self) -> &MAStructure {
        &self.r.structure
    }
}

fn header(report: &mut Report, r: &Resolved) {
    report.config = Some(r.config.clone());
    report.seed = Some(r.plan.seed);
    report.points = Some(r.plan.count);
}

/// Full pipeline for `run`.
pub fn run(r: &Resolved) -> Report {
    let mut report = Report::new("run");
    header(&mut report, r);
    report.equation = Some(equation(&r.structure));
    if let Some(ctx) = Ctx::new(r, &mut report) {
        let class = pfaffian(&ctx, &mut report);
        let region = region(&ctx, class, &mut report);
        let normalized = region.and_then(|g| normalization(&ctx, &g, &mut report));
        rho(&ctx, normalized.as_ref(), &mut report);
        structures(&ctx, &mut report);
        anticommutators(&ctx, &mut report);
        family(&ctx, region.map(|g| g.sign()), &mut report);
        solutions(&ctx, &mut report);
        rescale(&ctx, &mut report);
        integrability(&ctx, region.as_ref(), &mut report);
    }
    report.finish();
    report
}

/// `residual`: the equation and the residual of each configured solution.
pub fn residual(r: &Resolved) -> Report {
    let mut report = Report::new("residual");
    header(&mut report, r);
    report.equation = Some(equation(&r.structure));
    if let Some(ctx) = Ctx::new(r, &mut report) {
        if r.solutions.is_empty() {
            report.notes.push("no solutions configured".into());
        }
        solutions(&ctx, &mut report);
    }
    report.finish();
    report
}

/// `integrability`: closedness checks and the torsion probe.
pub fn integrability_only(r: &Resolved) -> Report {
    let mut report = Report::new("integrability");
    header(&mut report, r);
    if let Some(ctx) = Ctx::new(r, &mut report) {
        let class = pfaffian(&ctx, &mut report);
        let region = region(&ctx, class, &mut report);
        integrability(&ctx, region.as_ref(), &mut report);
    }
    report.finish();
    report
}

/// `quadric`: all sixteen `(sgn Pf, k, ε₂, ε₃)` cells on reference structures.
pub fn quadric_sweep(n: usize, seed: u64, tol: f64, floor: f64) -> Report {
    let mut report = Report::new("quadric");
    report.seed = Some(seed);
    report.points = Some(n);
    let points = sweep_points();
    for cell in Cell::all() {
        let s = reference_structure(cell.sgn_pf);
        let v = verify_cell(&cell, &s, &points, n, seed, floor);
        let draws_admissible = count_admissible(&cell, EMPTINESS_DRAWS, seed);
        let entry = QuadricCellEntry {
            sgn_pf: sign_label(cell.sgn_pf),
            k: sign_int(cell.k),
            eps2: sign_int(cell.eps2),
            eps3: sign_int(cell.eps3),
            equation: cell.equation(),
            quadric: v.quadric.label(),
            structure: cell.structure().label(),
            conic_without_a2: induced_conic(&cell).label(),
            anticommutation_compatible: cell.anticommutation_compatible(),
            samples: v
                .samples
                .iter()
                .take(5)
                .map(|c| c.a().map(Finite))
                .collect(),
            sampled: v.samples.len(),
            draws_admissible,
            draws: EMPTINESS_DRAWS,
            square_max_residual: Finite(v.max_square_residual),
            eta_max_residual: Finite(v.max_eta_residual),
            refused: v.refused,
            first_refusal: v.first_refusal.clone(),
            misclassified: v.misclassified,
        };
        let empty = v.quadric == crate::quadric::QuadricType::Empty;
        if empty && draws_admissible > 0 {
            report.fail(format!(
                "{cell}: table says empty but {draws_admissible} admissible triples were found"
            ));
        }
        if !empty && v.samples.is_empty() {
            report.fail(format!(
                "{cell}: no admissible triple found on a non-empty quadric"
            ));
        }
        if v.max_square_residual > tol || v.max_eta_residual > tol {
            report.fail(format!(
                "{cell}: family identities off by {:e} / {:e}",
                v.max_square_residual, v.max_eta_residual
            ));
        }
        if v.misclassified > 0 {
            report.fail(format!(
                "{cell}: {} members are not {}",
                v.misclassified,
                cell.structure()
            ));
        }
        if v.refused > 0 {
            report.notes.push(format!(
                "{cell}: {} members refused ({})",
                v.refused,
                v.first_refusal.unwrap_or_default()
            ));
        }
        report.quadrics.push(entry);
    }
    report.finish();
    report
}

/// Replaces free `p`, `q` in a printed expression by `f_x`, `f_y`.
fn on_graph(src: &str) -> String {
    let chars: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len() + 8);
    for (i, &c) in chars.iter().enumerate() {
        let alpha = |j: Option<usize>| {
            j.and_then(|j| chars.get(j))
                .is_some_and(|c| c.is_ascii_alphabetic() || *c == '_')
        };
        let isolated = !alpha(i.checked_sub(1)) && !alpha(Some(i + 1));
        match c {
            'p' if isolated => out.push_str("f_x"),
            'q' if isolated => out.push_str("f_y"),
            _ => out.push(c),
        }
    }
    out
}

/// The equation `A f_xx + 2B f_xy + C f_yy + D (f_xx f_yy − f_xy²) + E = 0` as text.
pub fn equation(s: &MAStructure) -> String {
    let two_b = simplify(&Expr::mul(Expr::num(2.0), s.b.clone()));
    let terms = [
        (simplify(&s.a), "f_xx"),
        (two_b, "f_xy"),
        (simplify(&s.c), "f_yy"),
        (simplify(&s.d), "(f_xx*f_yy - f_xy^2)"),
        (simplify(&s.e), ""),
    ];
    let mut out = String::new();
    for (c, var) in terms {
        if c.is_literal_zero() {
            continue;
        }
        let text = on_graph(&c.to_string());
        let (neg, body) = match text.strip_prefix('-') {
            Some(rest) if !rest.contains([' ', '+', '-']) => (true, rest.to_string()),
            _ => (false, text),
        };
        let body = if body.contains(' ') {
            format!("({body})")
        } else {
            body
        };
        let term = match (body.as_str(), var) {
            (b, "") => b.to_string(),
            ("1", v) => v.to_string(),
            (b, v) => format!("{b}*{v}"),
        };
        match (out.is_empty(), neg) {
            (true, true) => out.push_str(&format!("-{term}")),
            (true, false) => out.push_str(&term),
            (false, true) => out.push_str(&format!(" - {term}")),
            (false, false) => out.push_str(&format!(" + {term}")),
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out + " = 0"
}

fn pfaffian(ctx: &Ctx, report: &mut Report) -> PfaffianClass {
    let s = ctx.s();
    let pf = s.pfaffian();
    let class = match s.classify_with(&ctx.r.plan, ctx.r.floor) {
        Ok(c) => c,
        Err(e) => {
            report.fail(format!("classification: {e}"));
            return PfaffianClass::Degenerate;
        }
    };
    let mut oracle = 0.0_f64;
    let mut det = 0.0_f64;
    for pt in &ctx.points {
        let (Ok(v), Ok(o), Ok(m)) = (pf.eval(pt), s.pfaffian_oracle(pt), s.alpha_matrix(pt)) else {
            continue;
        };
        oracle = oracle.max((v - o).abs() / (1.0 + v.abs()));
        det = det.max((m.determinant() - v * v).abs() / (v * v).max(1.0));
    }
    if oracle > ORACLE_TOL {
        report.fail(format!(
            "Pfaffian differs from the wedge quotient by {oracle:e}"
        ));
    }
    if det > DET_TOL {
        report.fail(format!("det α differs from Pf² by {det:e} (relative)"));
    }
    report.pfaffian_class = Some(class.class.label().to_string());
    report.pfaffian = Some(PfaffianSection {
        expression: pf.to_string(),
        class: class.class.label().to_string(),
        positive_witness: class.positive.as_ref().map(point),
        negative_witness: class.negative.as_ref().map(point),
        degenerate_witness: class.degenerate.as_ref().map(point),
        min_abs: class
            .min_abs_pfaffian
            .is_finite()
            .then_some(Finite(class.min_abs_pfaffian)),
        skipped: class.skipped,
        oracle_max_deviation: Finite(oracle),
        det_max_relative_deviation: Finite(det),
    });
    class.class
}

fn region(ctx: &Ctx, class: PfaffianClass, report: &mut Report) -> Option<SignedRegion> {
    let (sign, source) = match (ctx.r.region, class.sign()) {
        (Some(s), _) => (s, "config"),
        (None, Some(s)) => (s, "classification"),
        (None, None) => {
            report.notes.push(format!(
                "Pfaffian is {} on the sample box and no region sign is configured; \
                 normalization and closedness are skipped",
                class.label()
            ));
            return None;
        }
    };
    match SignedRegion::validate(ctx.s(), sign, &ctx.r.plan) {
        Ok(g) => {
            report.region = Some(RegionSection {
                sign: sign_label(sign),
                source,
            });
            Some(g)
        }
        Err(e) => {
            report.fail(format!("region: {e}"));
            None
        }
    }
}

fn normalization(ctx: &Ctx, region: &SignedRegion, report: &mut Report) -> Option<MAStructure> {
    let n = match ctx.s().normalize(region, &ctx.r.plan) {
        Ok(n) => n,
        Err(e) => {
            report.fail(format!("normalization: {e}"));
            return None;
        }
    };
    let pf = n.pfaffian();
    let want = region.sign().value();
    let mut dev = 0.0_f64;
    for pt in &ctx.points {
        match pf.eval(pt) {
            Ok(v) => dev = dev.max((v - want).abs()),
            Err(e) => report.fail(format!("normalized Pfaffian: {e}")),
        }
    }
    if dev > ctx.tol {
        report.fail(format!(
            "normalized Pfaffian deviates from {want} by {dev:e}"
        ));
    }
    report.normalization = Some(NormalizationSection {
        coefficients: Coefficients::from(&n),
        pfaffian_max_deviation: Finite(dev),
    });
    Some(n)
}

fn rho(ctx: &Ctx, normalized: Option<&MAStructure>, report: &mut Report) {
    let s = ctx.s();
    let pf = s.pfaffian();
    let mut square = 0.0_f64;
    let mut invariance: Option<f64> = normalized.map(|_| 0.0);
    for pt in &ctx.regular {
        let (Ok(m), Ok(v)) = (s.rho_at(pt, ctx.r.floor), pf.eval(pt)) else {
            continue;
        };
        let id = nalgebra::Matrix4::<f64>::identity() * v.signum();
        square = square.max((m * m + id).amax());
        if let (Some(n), Some(inv)) = (normalized, invariance.as_mut()) {
            match n.rho_at(pt, ctx.r.floor) {
                Ok(mn) => *inv = inv.max((mn - m).amax()),
                Err(e) => report.fail(format!("ρ of the normalized structure: {e}")),
            }
        }
    }
    if square > ctx.gen_tol {
        report.fail(format!("ρ² + sgn(Pf) Id has norm {square:e}"));
    }
    if let Some(inv) = invariance.filter(|&i| i > ctx.gen_tol) {
        report.fail(format!("ρ changes under normalization by {inv:e}"));
    }
    report.rho = Some(RhoSection {
        points: ctx.regular.len(),
        skipped_degenerate: ctx.points.len() - ctx.regular.len(),
        square_max_residual: Finite(square),
        normalization_invariance_max: invariance.map(Finite),
    });
}

type Builder<'a> = Box<dyn Fn(&Point) -> Result<GenEndo, GenError> + 'a>;

fn structures(ctx: &Ctx, report: &mut Report) {
    let s = ctx.s();
    let floor = ctx.r.floor;
    let (e2, e3) = (ctx.r.eps2, ctx.r.eps3);
    let builders: Vec<(&'static str, Option<Sign>, Builder)> = vec![
        (
            "J_rho",
            Some(Sign::Minus),
            Box::new(move |p| j_rho(s, p, Sign::Minus, floor)),
        ),
        (
            "J_rho",
            Some(Sign::Plus),
            Box::new(move |p| j_rho(s, p, Sign::Plus, floor)),
        ),
        ("J_alpha", Some(e2), Box::new(move |p| j_alpha(s, p, e2))),
        ("J_omega", Some(e3), Box::new(move |_| Ok(j_omega(e3)))),
        ("banos", None, Box::new(move |p| build_banos(s, p, floor))),
    ];
    if ctx.regular.is_empty() {
        report
            .notes
            .push("no non-degenerate sample point; generalized structures skipped".into());
        return;
    }
    for (name, eps, build) in builders {
        let mut first: Option<(GenEndo, GenKind)> = None;
        let (mut sq, mut et, mut consistent) = (0.0_f64, 0.0_f64, true);
        let mut gammas = (None, None);
        for pt in &ctx.regular {
            let j = match build(pt) {
                Ok(j) => j,
                Err(e) => {
                    report.fail(format!("{name}: {e}"));
                    consistent = false;
                    continue;
                }
            };
            let t = classify_gen(&j, ctx.gen_tol * (1.0 + j.max_norm().powi(2)));
            sq = sq.max(t.square_residual);
            et = et.max(t.eta_residual);
            match &first {
                None => {
                    first = Some((j, t.kind));
                    gammas = (t.gamma1, t.gamma2);
                }
                Some((_, k)) if *k != t.kind => consistent = false,
                _ => {}
            }
        }
        let Some((j0, kind)) = first else { continue };
        let label = match eps {
            Some(e) => format!("{name}(ε = {e})"),
            None => name.to_string(),
        };
        if kind == GenKind::None {
            report.fail(format!(
                "{label} is not a generalized almost structure (residuals {sq:e}, {et:e})"
            ));
        }
        if !consistent {
            report.fail(format!("{label} changes type across the sample"));
        }
        report.structures.push(StructureEntry {
            name,
            eps: eps.map(sign_int),
            kind: kind.label().to_string(),
            gamma1: gammas.0.map(sign_int),
            gamma2: gammas.1.map(sign_int),
            square_residual: Finite(sq),
            eta_residual: Finite(et),
            consistent,
            blocks: Blocks::from(&j0),
        });
    }
}

fn anticommutators(ctx: &Ctx, report: &mut Report) {
    let s = ctx.s();
    let floor = ctx.r.floor;
    let check = anticommutativity_check(s, ctx.r.eps2, ctx.r.eps3, &ctx.r.plan, floor);
    let (label, witness, holds) = match &check {
        Ok(Anticommutativity::Holds { .. }) => ("Holds", None, true),
        Ok(Anticommutativity::Fails { witness, .. }) => ("Fails", Some(point(witness)), false),
        Err(_) => ("Degenerate", None, false),
    };
    let (mut ra, mut ro, mut ao, mut unforced) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let jo = j_omega(ctx.r.eps3);
    for pt in &ctx.regular {
        let (Ok(jr), Ok(jr_plus), Ok(ja)) = (
            j_rho(s, pt, FORCED_EPS1, floor),
            j_rho(s, pt, Sign::Plus, floor),
            j_alpha(s, pt, ctx.r.eps2),
        ) else {
            continue;
        };
        let scale = 1.0 + ja.max_norm();
        ra = ra.max(anticommutator(&jr, &ja).max_norm() / scale);
        ro = ro.max(anticommutator(&jr, &jo).max_norm());
        ao = ao.max(anticommutator(&ja, &jo).max_norm() / scale);
        unforced = unforced.max(anticommutator(&jr_plus, &jo).max_norm());
    }
    if ra > ctx.gen_tol {
        report.fail(format!("{{J_ρ, J_α}} has norm {ra:e}"));
    }
    if ro > ctx.gen_tol {
        report.fail(format!("{{J_ρ, J_Ω}} has norm {ro:e}"));
    }
    if holds && ao > ctx.gen_tol {
        report.fail(format!("Pf = ε₂ε₃ holds but {{J_α, J_Ω}} has norm {ao:e}"));
    }
    report.anticommutators = Some(AnticommutatorSection {
        forced_eps1: sign_int(FORCED_EPS1),
        check: label,
        witness,
        rho_alpha: Finite(ra),
        rho_omega: Finite(ro),
        alpha_omega: Finite(ao),
        rho_omega_unforced: Finite(unforced),
    });
}

fn family(ctx: &Ctx, region: Option<Sign>, report: &mut Report) {
    let cfg = &ctx.r.config;
    if cfg.family.is_empty() {
        return;
    }
    let sgn = region.or_else(|| {
        let pf = ctx.s().pfaffian();
        ctx.regular
            .first()
            .and_then(|p| pf.eval(p).ok())
            .and_then(Sign::of)
    });
    let Some(sgn) = sgn else {
        report
            .notes
            .push("family skipped: no non-degenerate point".into());
        return;
    };
    for a in &cfg.family {
        let c = FamilyCoeffs::new(a[0], a[1], a[2], ctx.r.eps2, ctx.r.eps3);
        let k = k_value(&c, sgn);
        let admissible = is_admissible(&c, sgn);
        let quadric = admissible
            .then(|| quadric_type(sgn, k.round(), c.eps2, c.eps3).ok())
            .flatten();
        let mut entry = FamilyEntry {
            a: a.map(Finite),
            k: Finite(k),
            admissible,
            quadric: quadric.map(|q| q.label()),
            structure: admissible
                .then(|| if k > 0.0 { GenKind::GaPC } else { GenKind::GaC }.label()),
            square_residual: None,
            eta_residual: None,
            refused: None,
        };
        let (mut sq, mut et, mut built) = (0.0_f64, 0.0_f64, false);
        for pt in &ctx.regular {
            match build_family_member(ctx.s(), &c, pt, ctx.r.floor) {
                Ok(m) => {
                    built = true;
                    let (s1, s2) = family_residuals(&m, k.round());
                    sq = sq.max(s1);
                    et = et.max(s2);
                }
                Err(e) => {
                    entry.refused = Some(e.to_string());
                    break;
                }
            }
        }
        if built && entry.refused.is_none() {
            entry.square_residual = Some(Finite(sq));
            entry.eta_residual = Some(Finite(et));
            if sq > ctx.tol || et > ctx.tol {
                report.fail(format!("family member {a:?}: residuals {sq:e} / {et:e}"));
            }
        }
        report.family.push(entry);
    }
}

fn solutions(ctx: &Ctx, report: &mut Report) {
    let s = ctx.s();
    let r = ctx.r;
    for (f, src) in r.solutions.iter().zip(&r.config.solutions) {
        let (res, pb) = match (s.residual(f), s.pullback_oracle(f)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                report.fail(format!("solution `{src}`: {e}"));
                continue;
            }
        };
        let verdict = is_zero(&res, &r.plan);
        let (label, witness) = match &verdict {
            Ok(ZeroVerdict::NonZero { witness, .. }) => ("NonZero", Some(point(witness))),
            Ok(v) => (v.label(), None),
            Err(_) => ("Inconclusive", None),
        };
        let mut dev = 0.0_f64;
        for pt in &ctx.points {
            if let (Ok(a), Ok(b)) = (res.eval(pt), pb.eval(pt)) {
                dev = dev.max((a - PULLBACK_SIGN * b).abs());
            }
        }
        if dev > PULLBACK_TOL {
            report.fail(format!(
                "solution `{src}`: residual and pullback differ by {dev:e}"
            ));
        }
        report.solutions.push(SolutionEntry {
            f: src.clone(),
            residual: res.to_string(),
            pullback: pb.to_string(),
            verdict: label,
            witness,
            pullback_max_deviation: Finite(dev),
        });
    }
}

fn rescale(ctx: &Ctx, report: &mut Report) {
    let (Some(h), Some(src)) = (&ctx.r.rescale, &ctx.r.config.rescale) else {
        return;
    };
    let out = rescale_transform(ctx.s(), h, ctx.r.eps2, ctx.r.eps3, &ctx.r.plan, ctx.r.floor);
    match out {
        Ok(rep) => {
            if !rep.pfaffian_law.vanishes() {
                report.fail("Pf(hα) ≠ h² Pf(α)");
            }
            for (what, v) in [
                ("ρ(hα) − sgn(h) ρ(α)", rep.rho_max_deviation),
                ("J_hα block pattern", rep.j_alpha_max_deviation),
                ("member correspondence", rep.correspondence_max_deviation),
            ] {
                if v > ctx.gen_tol * 10.0 {
                    report.fail(format!("rescaling: {what} off by {v:e}"));
                }
            }
            report.rescale = Some(RescaleSection {
                h: src.clone(),
                pfaffian_law: rep.pfaffian_law.label(),
                pfaffian_max_deviation: Finite(rep.pfaffian_max_deviation),
                rho_max_deviation: Finite(rep.rho_max_deviation),
                j_alpha_max_deviation: Finite(rep.j_alpha_max_deviation),
                correspondence_max_deviation: Finite(rep.correspondence_max_deviation),
                h_sign: rep.h_sign.map(sign_label),
                family_preserved: rep.family_preserved,
            });
        }
        Err(e) => report.fail(format!("rescaling: {e}")),
    }
}

fn closed_section(v: &ClosedVerdict, yes: &'static str, no: &'static str) -> ClosedSection {
    match v {
        ClosedVerdict::Closed { .. } => ClosedSection {
            verdict: yes,
            component: None,
            witness: None,
            value: None,
        },
        ClosedVerdict::NotClosed {
            component,
            witness,
            value,
        } => ClosedSection {
            verdict: no,
            component: Some(component),
            witness: Some(point(witness)),
            value: Some(Finite(*value)),
        },
    }
}

fn integrability(ctx: &Ctx, region: Option<&SignedRegion>, report: &mut Report) {
    let r = ctx.r;
    let mut section = IntegrabilitySection {
        lr: None,
        divergence: None,
        nijenhuis: None,
    };
    let mut closed = None;
    if let Some(g) = region {
        match lr_integrability(ctx.s(), g, &r.plan, r.floor) {
            Ok(v) => {
                let c = closed_section(&v, "Integrable", "NotIntegrable");
                report.lr_integrability = Some(c.verdict);
                closed = Some(v.is_closed());
                section.lr = Some(c);
            }
            Err(e) => report.fail(format!("closedness: {e}")),
        }
        let field = GenField::rho(ctx.s(), g, FORCED_EPS1);
        let mut nj = NijenhuisSection {
            structure: "J_rho(ε = -)",
            certified: false,
            refusal: None,
            pairs: 64,
            points: ctx.regular.len(),
            max_abs: None,
            worst_pair: None,
            worst_point: None,
            nonzero_pairs: None,
            conclusive: field.is_constant(),
        };
        match IsotropicField::certify(field, &r.plan) {
            Ok(iso) => {
                nj.certified = true;
                match nijenhuis_probe(&iso, &ctx.regular, ctx.gen_tol) {
                    Ok(p) => {
                        nj.max_abs = Some(Finite(p.max_abs));
                        nj.worst_pair = Some([p.worst_pair.0, p.worst_pair.1]);
                        nj.worst_point = p.worst_point.as_ref().map(point);
                        nj.nonzero_pairs = Some(p.nonzero_pairs);
                        if closed.is_some_and(|c| c != p.vanishes()) {
                            report
                                .notes
                                .push("closedness and the torsion probe disagree".into());
                        }
                    }
                    Err(e) => report.fail(format!("torsion probe: {e}")),
                }
            }
            Err(e) => nj.refusal = Some(e.to_string()),
        }
        section.nijenhuis = Some(nj);
    }
    if let (Some(phi), Some(src)) = (&r.divergence, &r.config.divergence) {
        match divergence_check(ctx.s(), phi, &r.plan) {
            Ok(v) => {
                let mut c = closed_section(&v, "Holds", "Fails");
                if c.verdict == "Holds" {
                    c.component = None;
                }
                section.divergence = Some(c);
                report
                    .notes
                    .push(format!("divergence condition checked with φ = {src}"));
            }
            Err(e) => report.fail(format!("divergence: {e}")),
        }
    }
    report.integrability = Some(section);
}
