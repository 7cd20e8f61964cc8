//! JSON run configuration.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::{parse, Expr, ParseErrorKind, Var};
use crate::ma::{MAStructure, Sign};
use crate::phase::{SamplePlan, TwoForm, DEFAULT_BOX, DEFAULT_PFAFFIAN_FLOOR, DEFAULT_POINT_COUNT};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// Dotted location inside the document, empty for the root.
    pub path: String,
    pub message: String,
    /// Byte offset inside an expression string.
    pub offset: Option<usize>,
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
            offset: None,
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "config error: {}", self.message)
        } else {
            write!(f, "config error at `{}`: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub structure: StructureSpec,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub epsilons: EpsilonSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub family: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub solutions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescale: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence: Option<String>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Either the five coefficients or a full 2-form.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<String>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<String>,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub e: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_form: Option<TwoFormSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TwoFormSpec {
    pub c_xy: String,
    pub c_xp: String,
    pub c_xq: String,
    pub c_yp: String,
    pub c_yq: String,
    pub c_pq: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub bounds: BoundsSpec,
    #[serde(default = "default_floor")]
    pub pfaffian_floor: f64,
}

fn default_count() -> usize {
    DEFAULT_POINT_COUNT
}

fn default_floor() -> f64 {
    DEFAULT_PFAFFIAN_FLOOR
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            count: default_count(),
            seed: 0,
            bounds: BoundsSpec::default(),
            pfaffian_floor: default_floor(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSpec {
    pub eps2: i32,
    pub eps3: i32,
}

impl Default for EpsilonSpec {
    fn default() -> Self {
        EpsilonSpec { eps2: 1, eps3: 1 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub enum RegionSpec {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl RegionSpec {
    pub fn sign(self) -> Sign {
        match self {
            RegionSpec::Plus => Sign::Plus,
            RegionSpec::Minus => Sign::Minus,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Residuals of identities that hold up to rounding.
    #[serde(default = "default_verification")]
    pub verification: f64,
    /// Matrix identities of generalized structures.
    #[serde(default = "default_classification")]
    pub classification: f64,
}

fn default_verification() -> f64 {
    1e-9
}

fn default_classification() -> f64 {
    1e-10
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            verification: default_verification(),
            classification: default_classification(),
        }
    }
}

/// A configuration with every expression parsed and every range checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: Config,
    pub structure: MAStructure,
    pub plan: SamplePlan,
    pub floor: f64,
    pub eps2: Sign,
    pub eps3: Sign,
    pub region: Option<Sign>,
    pub solutions: Vec<Expr>,
    pub rescale: Option<Expr>,
    pub divergence: Option<Expr>,
}

fn expression(path: &str, src: &str) -> Result<Expr, ConfigError> {
    parse(src).map_err(|e| {
        let message = match &e.kind {
            ParseErrorKind::UnknownIdentifier(_) | ParseErrorKind::NonIntegerExponent(_) => {
                e.to_string()
            }
            ParseErrorKind::Syntax { .. } => format!("in `{src}`: {e}"),
        };
        ConfigError {
            path: path.to_string(),
            message,
            offset: Some(e.offset),
        }
    })
}

fn sign(path: &str, v: i32) -> Result<Sign, ConfigError> {
    Sign::from_value(v as f64)
        .ok_or_else(|| ConfigError::at(path, format!("must be 1 or -1, got {v}")))
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let path = if path == "." { String::new() } else { path };
            ConfigError::at(path, inner.to_string())
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::at(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    cfg.schema_version
                ),
            ));
        }
        Ok(cfg)
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let structure = self.resolve_structure()?;
        let sampling = &self.sampling;
        let mut plan = SamplePlan::default()
            .with_count(sampling.count)
            .with_seed(sampling.seed);
        let b = &sampling.bounds;
        for (v, r) in [(Var::X, b.x), (Var::Y, b.y), (Var::P, b.p), (Var::Q, b.q)] {
            let [lo, hi] = r.unwrap_or([DEFAULT_BOX.0, DEFAULT_BOX.1]);
            plan = plan.with_bounds(v, lo, hi);
        }
        plan.validate()
            .map_err(|e| ConfigError::at("sampling", e.to_string()))?;
        let floor = sampling.pfaffian_floor;
        if !(floor.is_finite() && floor >= 0.0) {
            return Err(ConfigError::at(
                "sampling.pfaffian_floor",
                "must be finite and non-negative",
            ));
        }
        for (name, t) in [
            ("tolerances.verification", self.tolerances.verification),
            ("tolerances.classification", self.tolerances.classification),
        ] {
            if !(t.is_finite() && t > 0.0) {
                return Err(ConfigError::at(name, "must be finite and positive"));
            }
        }
        for (i, a) in self.family.iter().enumerate() {
            if a.iter().any(|v| !v.is_finite()) {
                return Err(ConfigError::at(
                    format!("family[{i}]"),
                    "coefficients must be finite",
                ));
            }
        }
        let solutions = self
            .solutions
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let path = format!("solutions[{i}]");
                let f = expression(&path, s)?;
                if f.depends_on(Var::P) || f.depends_on(Var::Q) {
                    return Err(ConfigError::at(path, "must depend on x and y only"));
                }
                Ok(f)
            })
            .collect::<Result<_, _>>()?;
        Ok(Resolved {
            config: self.clone(),
            structure,
            plan,
            floor,
            eps2: sign("epsilons.eps2", self.epsilons.eps2)?,
            eps3: sign("epsilons.eps3", self.epsilons.eps3)?,
            region: self.region.map(RegionSpec::sign),
            solutions,
            rescale: self
                .rescale
                .as_deref()
                .map(|s| expression("rescale", s))
                .transpose()?,
            divergence: self
                .divergence
                .as_deref()
                .map(|s| expression("divergence", s))
                .transpose()?,
        })
    }

    fn resolve_structure(&self) -> Result<MAStructure, ConfigError> {
        let s = &self.structure;
        let coeffs = [
            ("A", &s.a),
            ("B", &s.b),
            ("C", &s.c),
            ("D", &s.d),
            ("E", &s.e),
        ];
        if let Some(tf) = &s.two_form {
            if let Some((name, _)) = coeffs.iter().find(|(_, v)| v.is_some()) {
                return Err(ConfigError::at(
                    format!("structure.{name}"),
                    "coefficients cannot be combined with `two_form`",
                ));
            }
            let fields = [
                ("c_xy", &tf.c_xy),
                ("c_xp", &tf.c_xp),
                ("c_xq", &tf.c_xq),
                ("c_yp", &tf.c_yp),
                ("c_yq", &tf.c_yq),
                ("c_pq", &tf.c_pq),
            ];
            let mut parsed = Vec::with_capacity(6);
            for (name, src) in fields {
                parsed.push(expression(&format!("structure.two_form.{name}"), src)?);
            }
            let form = TwoForm::new(parsed.try_into().expect("six coefficients"));
            let plan = SamplePlan::default().with_seed(self.sampling.seed);
            return MAStructure::from_two_form(&form, &plan)
                .map_err(|e| ConfigError::at("structure.two_form", e.to_string()));
        }
        let mut parsed = Vec::with_capacity(5);
        for (name, v) in coeffs {
            let path = format!("structure.{name}");
            let src = v
                .as_ref()
                .ok_or_else(|| ConfigError::at(&path, format!("missing coefficient `{name}`")))?;
            parsed.push(expression(&path, src)?);
        }
        let [a, b, c, d, e]: [Expr; 5] = parsed.try_into().expect("five coefficients");
        Ok(MAStructure::new(a, b, c, d, e))
    }
}
