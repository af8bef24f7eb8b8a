//! JSON system configuration, schema version 1.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "dim": 1,
//!   "working_box": {"min": [-1.0], "max": [2.0]},
//!   "phi": {"kind": "linear", "c": 0.3333333333333333},
//!   "mode": "pc",
//!   "default_c": 0.5,
//!   "maps": [
//!     {"kind": "similarity", "scale": 0.3333333333333333, "offset": [0.0]},
//!     {"kind": "affine", "matrix": [[0.3333333333333333]], "offset": [0.6666666666666666]}
//!   ]
//! }
//! ```
//!
//! `maps` is either a list of map specs (`affine`, `similarity`,
//! `piecewise_affine`, `expr`) or a parametric family
//! `{"template": ["x1/2 + 1/2^i"], "n": 8, "delta_tail": 0.004}`.
//!
//! `phi` is one of
//! - `{"kind": "linear", "c": c}`
//! - `{"kind": "power_affine", "c": c, "p": p, "r0": r0}`
//! - `{"kind": "custom", "expr": "r/(1+r)", "tail": {...}, "summable": bool, "right_continuous": bool}`
//!   with `tail` either `{"geometric": {"q": q, "r0": r0, "n0": n0}}` or
//!   `{"closed_form": "expression in r and n"}`. `summable` defaults to whether
//!   a tail is given; `right_continuous` defaults to false.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::comparison::{ClassFlags, ComparisonFn, TailCertificate};
use crate::error::{IfsError, Result};
use crate::system::{IndexFamily, IteratedSystem, MapSpec, Mode, WorkingBox};

pub const SCHEMA_VERSION: u32 = 1;

fn default_c() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub schema_version: u32,
    pub dim: usize,
    pub working_box: BoxConfig,
    pub phi: PhiConfig,
    pub mode: Mode,
    /// Weight c of the code-space metric d_c.
    #[serde(default = "default_c")]
    pub default_c: f64,
    pub maps: MapsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiConfig {
    Linear {
        c: f64,
    },
    PowerAffine {
        c: f64,
        p: f64,
        r0: f64,
    },
    Custom {
        expr: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail: Option<TailConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        summable: Option<bool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        right_continuous: Option<bool>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TailConfig {
    Geometric { q: f64, r0: f64, n0: usize },
    ClosedForm(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametricConfig {
    pub template: Vec<String>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_tail: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapsConfig {
    Explicit(Vec<MapSpec>),
    Parametric(ParametricConfig),
}

impl Serialize for MapsConfig {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MapsConfig::Explicit(v) => v.serialize(s),
            MapsConfig::Parametric(p) => p.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for MapsConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let v = serde_json::Value::deserialize(d)?;
        if v.is_array() {
            serde_json::from_value(v).map(MapsConfig::Explicit).map_err(D::Error::custom)
        } else if v.is_object() {
            serde_json::from_value(v).map(MapsConfig::Parametric).map_err(D::Error::custom)
        } else {
            Err(D::Error::custom("expected a list of maps or a parametric family object"))
        }
    }
}

impl PhiConfig {
    pub fn build(&self) -> Result<ComparisonFn> {
        let wrap = |e: IfsError| IfsError::config("phi", e.to_string());
        match self {
            PhiConfig::Linear { c } => ComparisonFn::linear(*c).map_err(wrap),
            PhiConfig::PowerAffine { c, p, r0 } => ComparisonFn::power_affine(*c, *p, *r0).map_err(wrap),
            PhiConfig::Custom {
                expr,
                tail,
                summable,
                right_continuous,
            } => {
                let certificate = match tail {
                    None => None,
                    Some(TailConfig::Geometric { q, r0, n0 }) => Some(TailCertificate::GeometricEnvelope {
                        q: *q,
                        r0: *r0,
                        n0: *n0,
                    }),
                    Some(TailConfig::ClosedForm(src)) => Some(
                        TailCertificate::closed_form(src)
                            .map_err(|e| IfsError::config("phi.tail.closed_form", e.to_string()))?,
                    ),
                };
                let flags = ClassFlags {
                    is_summable: summable.unwrap_or(tail.is_some()),
                    is_right_continuous: right_continuous.unwrap_or(false),
                };
                ComparisonFn::custom(expr, certificate, flags).map_err(wrap)
            }
        }
    }
}

impl SystemConfig {
    /// Parses and validates the JSON text; errors carry the field path and,
    /// for syntax errors, line and column.
    pub fn parse(text: &str) -> Result<SystemConfig> {
        let mut de = serde_json::Deserializer::from_str(text);
        let cfg: SystemConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let path = if path == "." { "(root)".to_string() } else { path };
            IfsError::config(path, inner.to_string())
        })?;
        de.end().map_err(|e| IfsError::config("(root)", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(IfsError::config(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.dim == 0 {
            return Err(IfsError::config("dim", "dimension must be at least 1"));
        }
        for (name, v) in [("working_box.min", &self.working_box.min), ("working_box.max", &self.working_box.max)] {
            if v.len() != self.dim {
                return Err(IfsError::config(name, format!("expected {} coordinates", self.dim)));
            }
        }
        if !(0.0..1.0).contains(&self.default_c) {
            return Err(IfsError::config("default_c", "must lie in [0,1)"));
        }
        Ok(())
    }

    pub fn working_box(&self) -> Result<WorkingBox> {
        WorkingBox::new(self.working_box.min.clone(), self.working_box.max.clone())
            .map_err(|e| IfsError::config("working_box", e.to_string()))
    }

    pub fn family(&self) -> IndexFamily {
        match &self.maps {
            MapsConfig::Explicit(v) => IndexFamily::Explicit(v.clone()),
            MapsConfig::Parametric(p) => IndexFamily::Parametric {
                template: p.template.clone(),
                n: p.n,
                delta_tail: p.delta_tail,
            },
        }
    }

    pub fn build(&self) -> Result<IteratedSystem> {
        IteratedSystem::new(self.dim, self.working_box()?, self.family(), self.phi.build()?, self.mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANTOR: &str = r#"{
        "schema_version": 1,
        "dim": 1,
        "working_box": {"min": [-1.0], "max": [2.0]},
        "phi": {"kind": "linear", "c": 0.3333333333333333},
        "mode": "pc",
        "maps": [
            {"kind": "similarity", "scale": 0.3333333333333333, "offset": [0.0]},
            {"kind": "affine", "matrix": [[0.3333333333333333]], "offset": [0.6666666666666666]}
        ]
    }"#;

    fn path_of(e: IfsError) -> String {
        match e {
            IfsError::Config { path, .. } => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn cantor_parses_and_round_trips() {
        let cfg = SystemConfig::parse(CANTOR).unwrap();
        assert_eq!(cfg.default_c, 0.5);
        let again = SystemConfig::parse(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        let sys = cfg.build().unwrap();
        assert_eq!(sys.n_maps(), 2);
        assert_eq!(sys.apply_map(2, &[1.0]).unwrap()[0], 1.0);
    }

    #[test]
    fn parametric_template() {
        let text = CANTOR.replace(
            r#""maps": ["#,
            r#""maps": {"template": ["x1/2 + 1/2^i"], "n": 8}, "unused": ["#,
        );
        // unknown fields are rejected
        assert!(SystemConfig::parse(&text).is_err());
        let text = r#"{"schema_version": 1, "dim": 1, "working_box": {"min": [0], "max": [2]},
            "phi": {"kind": "linear", "c": 0.5}, "mode": "pc",
            "maps": {"template": ["x1/2 + 1/2^i"], "n": 8}}"#;
        let cfg = SystemConfig::parse(text).unwrap();
        assert_eq!(cfg, SystemConfig::parse(&cfg.to_json()).unwrap());
        let sys = cfg.build().unwrap();
        assert_eq!(sys.n_maps(), 8);
        assert_eq!(sys.apply_map(3, &[0.0]).unwrap()[0], 0.125);
        assert!(sys.is_truncated());
    }

    #[test]
    fn guarded_division() {
        let text = r#"{"schema_version": 1, "dim": 1, "working_box": {"min": [0], "max": [2]},
            "phi": {"kind": "linear", "c": 0.5}, "mode": "pc",
            "maps": {"template": ["x1/(i-i)"], "n": 3}}"#;
        let cfg = SystemConfig::parse(text).unwrap();
        assert!(path_of(cfg.build().unwrap_err()).starts_with("maps.template[0]"));
        let literal = text.replace("x1/(i-i)", "x1/0");
        let cfg = SystemConfig::parse(&literal).unwrap();
        assert!(cfg.build().is_err());
    }

    #[test]
    fn errors_carry_paths() {
        let bad_c = CANTOR.replace(r#""c": 0.3333333333333333"#, r#""c": "third""#);
        assert_eq!(path_of(SystemConfig::parse(&bad_c).unwrap_err()), "phi");
        let bad_map = CANTOR.replace(r#""scale": 0.3333333333333333,"#, "");
        assert!(path_of(SystemConfig::parse(&bad_map).unwrap_err()).starts_with("maps"));
        let bad_box = CANTOR.replace(r#""max": [2.0]"#, r#""max": [-2.0]"#);
        let cfg = SystemConfig::parse(&bad_box).unwrap();
        assert_eq!(path_of(cfg.build().unwrap_err()), "working_box");
        let short_box = CANTOR.replace(r#""max": [2.0]"#, r#""max": [2.0, 3.0]"#);
        assert_eq!(path_of(SystemConfig::parse(&short_box).unwrap_err()), "working_box.max");
        let version = CANTOR.replace(r#""schema_version": 1"#, r#""schema_version": 2"#);
        assert_eq!(path_of(SystemConfig::parse(&version).unwrap_err()), "schema_version");
        match SystemConfig::parse("{\n  \"dim\": ,\n}").unwrap_err() {
            IfsError::Config { message, .. } => assert!(message.contains("line 2"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mode_and_phi_must_agree() {
        let custom = CANTOR.replace(
            r#"{"kind": "linear", "c": 0.3333333333333333}"#,
            r#"{"kind": "custom", "expr": "r/(1+r)", "right_continuous": true}"#,
        );
        let cfg = SystemConfig::parse(&custom).unwrap();
        assert_eq!(path_of(cfg.build().unwrap_err()), "mode");
        let orbital = custom.replace(r#""mode": "pc""#, r#""mode": "orbital""#);
        let sys = SystemConfig::parse(&orbital).unwrap().build().unwrap();
        assert!(!sys.phi().is_summable());

        let geometric = CANTOR.replace(
            r#"{"kind": "linear", "c": 0.3333333333333333}"#,
            r#"{"kind": "custom", "expr": "r/(3+r)", "tail": {"geometric": {"q": 0.3333333333333334, "r0": 10.0, "n0": 0}}}"#,
        );
        let cfg = SystemConfig::parse(&geometric).unwrap();
        assert_eq!(cfg, SystemConfig::parse(&cfg.to_json()).unwrap());
        assert!(cfg.build().unwrap().phi().is_summable());
        let closed = CANTOR.replace(
            r#"{"kind": "linear", "c": 0.3333333333333333}"#,
            r#"{"kind": "custom", "expr": "r/3", "tail": {"closed_form": "r/3^n*3/2"}, "right_continuous": true}"#,
        );
        let cfg = SystemConfig::parse(&closed).unwrap();
        assert_eq!(cfg, SystemConfig::parse(&cfg.to_json()).unwrap());
        let phi = cfg.build().unwrap().phi().clone();
        assert!((phi.tail_upper_bound(1.0, 0).unwrap() - 1.5).abs() < 1e-12);
    }
}
