//! Scenario configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::convex::ConvexFieldSpec;
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::mesh::Stencil;
use crate::supremal::SupremandSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub h: f64,
    #[serde(default = "default_stencil")]
    pub stencil: Stencil,
}

fn default_stencil() -> Stencil {
    Stencil::Sixteen
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointPair {
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    /// Intermediate point for the two-leg sum `d(from, via) + d(via, to)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub via: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportOptions {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub directions: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceOptions {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<PointPair>,
    /// Also write the node and edge tables.
    #[serde(default)]
    pub export_graph: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtendOptions {
    /// Multiplier on the discrete tolerance `C·h`.
    #[serde(default = "unit")]
    pub tolerance_scale: f64,
    /// Candidate solution, as an expression or a node CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<Expr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_csv: Option<PathBuf>,
}

impl Default for ExtendOptions {
    fn default() -> Self {
        Self {
            tolerance_scale: 1.0,
            candidate: None,
            candidate_csv: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Points whose nearest mask nodes get a coincidence geodesic.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub geodesics: Vec<Vec<f64>>,
    /// Allowed relative error of the discrete curve derivative.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivative_tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupremalOptions {
    #[serde(default = "default_mu_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[f64; 2]>,
    /// Radius ladder in units of `h`, decreasing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<f64>>,
    /// Attainment threshold `μ − ε`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Uniqueness-mask threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniqueness_eps: Option<f64>,
    /// Field whose attainment set is computed; `S⁺` at level `μ` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<Expr>,
}

fn default_mu_tol() -> f64 {
    1e-3
}

impl Default for SupremalOptions {
    fn default() -> Self {
        Self {
            tol: default_mu_tol(),
            bracket: None,
            ladder: None,
            eps: None,
            uniqueness_eps: None,
            solution: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyOptions {
    /// Multiplier on every check tolerance; 0 leaves only exact checks passing.
    #[serde(default = "unit")]
    pub tolerance_scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { tolerance_scale: 1.0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandOptions {
    #[serde(default)]
    pub support: SupportOptions,
    #[serde(default)]
    pub distance: DistanceOptions,
    #[serde(default)]
    pub extend: ExtendOptions,
    #[serde(default)]
    pub uniqueness: UniquenessOptions,
    #[serde(default)]
    pub supremal: SupremalOptions,
    #[serde(default)]
    pub verify: VerifyOptions,
}

/// A scenario: domain, constraint field or supremand, datum, mesh and
/// per-command options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub domain: DomainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<ConvexFieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supremand: Option<SupremandSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datum: Option<Expr>,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub options: CommandOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Schema(format!("{name} must be positive, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Schema(format!("{name} must be nonnegative, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        positive("mesh.h", self.mesh.h)?;
        let o = &self.options;
        nonnegative("extend.tolerance_scale", o.extend.tolerance_scale)?;
        nonnegative("verify.tolerance_scale", o.verify.tolerance_scale)?;
        if let Some(e) = o.uniqueness.eps {
            nonnegative("uniqueness.eps", e)?;
        }
        if let Some(t) = o.uniqueness.derivative_tol {
            positive("uniqueness.derivative_tol", t)?;
        }
        positive("supremal.tol", o.supremal.tol)?;
        for e in [o.supremal.eps, o.supremal.uniqueness_eps].into_iter().flatten() {
            nonnegative("supremal eps", e)?;
        }
        if let Some([lo, hi]) = o.supremal.bracket {
            positive("supremal.bracket lower end", lo)?;
            if hi <= lo {
                return Err(Error::Schema("supremal.bracket must be increasing".into()));
            }
        }
        if let Some(l) = &o.supremal.ladder {
            if l.is_empty() || l.windows(2).any(|w| w[1] >= w[0]) || l.iter().any(|r| *r < 1.0) {
                return Err(Error::Schema(
                    "supremal.ladder must be strictly decreasing multiples of h, each ≥ 1".into(),
                ));
            }
        }
        if let Some(f) = &self.field {
            positive("field.alpha", f.alpha)?;
            positive("field.M", f.m)?;
        }
        Ok(())
    }

    pub fn require_field(&self) -> Result<&ConvexFieldSpec> {
        self.field
            .as_ref()
            .ok_or_else(|| Error::Schema("this command needs a `field`".into()))
    }

    pub fn require_supremand(&self) -> Result<&SupremandSpec> {
        self.supremand
            .as_ref()
            .ok_or_else(|| Error::Schema("this command needs a `supremand`".into()))
    }

    pub fn require_datum(&self) -> Result<&Expr> {
        self.datum
            .as_ref()
            .ok_or_else(|| Error::Schema("this command needs a `datum`".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: &str = r#"{
        "name": "linear datum",
        "domain": {"kind": "rectangle", "lo": [0, 0], "hi": [1, 1]},
        "field": {"kind": "ball", "radius": 1, "alpha": 1, "M": 1},
        "datum": "0.894427190999916*x + 0.447213595499958*y",
        "mesh": {"h": 0.03125, "stencil": "16"},
        "options": {"uniqueness": {"geodesics": [[0.5, 0.5]]}}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let c = ScenarioConfig::from_json(LINEAR).unwrap();
        assert_eq!(c.mesh.stencil, Stencil::Sixteen);
        assert_eq!(c.options.supremal.tol, 1e-3);
        let again = ScenarioConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn schema_errors() {
        let bad = LINEAR.replace("\"h\": 0.03125", "\"h\": -1");
        assert!(matches!(ScenarioConfig::from_json(&bad), Err(Error::Schema(_))));
        let bad = LINEAR.replace("\"name\"", "\"nmae\"");
        assert!(matches!(ScenarioConfig::from_json(&bad), Err(Error::Schema(_))));
        let bad = LINEAR.replace("0.894427190999916*x", "exp(x)");
        assert!(matches!(ScenarioConfig::from_json(&bad), Err(Error::Schema(_))));
    }

    #[test]
    fn missing_sections() {
        let c = ScenarioConfig::from_json(LINEAR).unwrap();
        assert!(c.require_field().is_ok());
        assert!(matches!(c.require_supremand(), Err(Error::Schema(_))));
    }
}
