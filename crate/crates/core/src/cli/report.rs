//! Serializable report sections.

use serde::ser::Error as _;
use serde::{Serialize, Serializer};

use super::config::Config;
use crate::expr::Point;
use crate::gen::GenEndo;
use crate::ma::{MAStructure, Sign};

/// An `f64` that refuses to serialize unless finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Finite(pub f64);

impl Serialize for Finite {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            Err(S::Error::custom(format!(
                "non-finite number {} in report",
                self.0
            )))
        }
    }
}

pub fn point(p: &Point) -> [Finite; 4] {
    p.0.map(Finite)
}

pub fn sign_label(s: Sign) -> String {
    s.to_string()
}

pub fn sign_int(s: Sign) -> i8 {
    match s {
        Sign::Plus => 1,
        Sign::Minus => -1,
    }
}

pub type Block = [[Finite; 4]; 4];

#[derive(Debug, Clone, Serialize)]
pub struct Blocks {
    pub tt: Block,
    pub tc: Block,
    pub ct: Block,
    pub cc: Block,
}

impl From<&GenEndo> for Blocks {
    fn from(j: &GenEndo) -> Self {
        let b = |m: &nalgebra::Matrix4<f64>| -> Block {
            std::array::from_fn(|i| std::array::from_fn(|k| Finite(m[(i, k)])))
        };
        Blocks {
            tt: b(&j.tt),
            tc: b(&j.tc),
            ct: b(&j.ct),
            cc: b(&j.cc),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for Tool {
    fn default() -> Self {
        Tool {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Coefficients {
    #[serde(rename = "A")]
    pub a: String,
    #[serde(rename = "B")]
    pub b: String,
    #[serde(rename = "C")]
    pub c: String,
    #[serde(rename = "D")]
    pub d: String,
    #[serde(rename = "E")]
    pub e: String,
}

impl From<&MAStructure> for Coefficients {
    fn from(s: &MAStructure) -> Self {
        let [a, b, c, d, e] = s.simplified().coeffs().map(|x| x.to_string());
        Coefficients { a, b, c, d, e }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PfaffianSection {
    pub expression: String,
    pub class: String,
    pub positive_witness: Option<[Finite; 4]>,
    pub negative_witness: Option<[Finite; 4]>,
    pub degenerate_witness: Option<[Finite; 4]>,
    pub min_abs: Option<Finite>,
    pub skipped: usize,
    /// `max |Pf − α∧α/Ω∧Ω| / (1 + |Pf|)`.
    pub oracle_max_deviation: Finite,
    /// `max |det α − Pf²| / max(1, Pf²)`.
    pub det_max_relative_deviation: Finite,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionSection {
    pub sign: String,
    pub source: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalizationSection {
    pub coefficients: Coefficients,
    pub pfaffian_max_deviation: Finite,
}

#[derive(Debug, Clone, Serialize)]
pub struct RhoSection {
    pub points: usize,
    pub skipped_degenerate: usize,
    /// `max ‖ρ² + sgn(Pf) Id‖`.
    pub square_max_residual: Finite,
    /// `max ‖ρ(n(α)) − ρ(α)‖`.
    pub normalization_invariance_max: Option<Finite>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureEntry {
    pub name: &'static str,
    pub eps: Option<i8>,
    #[serde(rename = "type")]
    pub kind: String,
    pub gamma1: Option<i8>,
    pub gamma2: Option<i8>,
    pub square_residual: Finite,
    pub eta_residual: Finite,
    /// Same type at every sampled point.
    pub consistent: bool,
    pub blocks: Blocks,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnticommutatorSection {
    pub forced_eps1: i8,
    pub check: &'static str,
    pub witness: Option<[Finite; 4]>,
    pub rho_alpha: Finite,
    pub rho_omega: Finite,
    pub alpha_omega: Finite,
    /// `‖{J_ρ, J_Ω}‖` with `ε₁ = +1`.
    pub rho_omega_unforced: Finite,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyEntry {
    pub a: [Finite; 3],
    pub k: Finite,
    pub admissible: bool,
    pub quadric: Option<&'static str>,
    pub structure: Option<&'static str>,
    pub square_residual: Option<Finite>,
    pub eta_residual: Option<Finite>,
    pub refused: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionEntry {
    pub f: String,
    pub residual: String,
    pub pullback: String,
    pub verdict: &'static str,
    pub witness: Option<[Finite; 4]>,
    pub pullback_max_deviation: Finite,
}

#[derive(Debug, Clone, Serialize)]
pub struct RescaleSection {
    pub h: String,
    pub pfaffian_law: &'static str,
    pub pfaffian_max_deviation: Finite,
    pub rho_max_deviation: Finite,
    pub j_alpha_max_deviation: Finite,
    pub correspondence_max_deviation: Finite,
    pub h_sign: Option<String>,
    pub family_preserved: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosedSection {
    pub verdict: &'static str,
    pub component: Option<&'static str>,
    pub witness: Option<[Finite; 4]>,
    pub value: Option<Finite>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NijenhuisSection {
    pub structure: &'static str,
    pub certified: bool,
    pub refusal: Option<String>,
    pub pairs: usize,
    pub points: usize,
    pub max_abs: Option<Finite>,
    pub worst_pair: Option<[usize; 2]>,
    pub worst_point: Option<[Finite; 4]>,
    pub nonzero_pairs: Option<usize>,
    pub conclusive: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegrabilitySection {
    pub lr: Option<ClosedSection>,
    pub divergence: Option<ClosedSection>,
    pub nijenhuis: Option<NijenhuisSection>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadricCellEntry {
    pub sgn_pf: String,
    pub k: i8,
    pub eps2: i8,
    pub eps3: i8,
    pub equation: String,
    pub quadric: &'static str,
    pub structure: &'static str,
    pub conic_without_a2: &'static str,
    pub anticommutation_compatible: bool,
    pub samples: Vec<[Finite; 3]>,
    pub sampled: usize,
    pub draws_admissible: usize,
    pub draws: usize,
    pub square_max_residual: Finite,
    pub eta_max_residual: Finite,
    pub refused: usize,
    pub first_refusal: Option<String>,
    pub misclassified: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Verification {
    pub passed: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Report {
    pub tool: Tool,
    pub schema_version: u32,
    pub generated_at: String,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<Config>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pfaffian_class: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_integrability: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pfaffian: Option<PfaffianSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization: Option<NormalizationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<RhoSection>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub structures: Vec<StructureEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anticommutators: Option<AnticommutatorSection>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub family: Vec<FamilyEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub solutions: Vec<SolutionEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rescale: Option<RescaleSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrability: Option<IntegrabilitySection>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub quadrics: Vec<QuadricCellEntry>,
    pub notes: Vec<String>,
    pub verification: Verification,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Report {
            schema_version: super::config::SCHEMA_VERSION,
            command,
            ..Report::default()
        }
    }

    pub fn fail(&mut self, msg: impl Into<String>) {
        self.verification.failures.push(msg.into());
    }

    pub fn finish(&mut self) {
        self.verification.passed = self.verification.failures.is_empty();
    }

    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// The report text with the timestamp blanked, for comparisons.
pub fn strip_timestamp(json: &str) -> String {
    json.lines()
        .map(|l| {
            if l.trim_start().starts_with("\"generated_at\"") {
                "  \"generated_at\": \"\",".to_string()
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}
