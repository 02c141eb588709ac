//! Model files and numerical tolerances.
//!
//! A model file is TOML with a `[params]` and a `[kinetics]` section:
//!
//! ```toml
//! [params]
//! d11 = 0.6
//! d22 = 0.8
//! d21 = 6.95
//! tau = 12.5
//! ell = 2.0
//!
//! [kinetics]
//! name = "holling2"
//! a = 1.0
//! b = 9.0
//! c = 3.0
//! ```
//!
//! Parameter keys may also appear at the top level. Other sections are
//! ignored here so front ends can keep their own settings in the same file.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::kinetics::{Holling2, Kinetics, ModelParams};

/// Tolerances shared by every module. One record so a run manifest can echo
/// all of them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Residual of the characteristic determinant at a reported root.
    pub characteristic_residual: f64,
    /// Kernel and pairing residuals of the eigenbasis.
    pub eigenbasis: f64,
    /// Back-substitution residual of the h-equations.
    pub h_residual: f64,
    /// Slack on the arccos argument before a window counts as degenerate.
    pub arccos_slack: f64,
    /// Relative tolerance of the resonance test.
    pub resonance: f64,
    /// Newton step tolerance for root refinement.
    pub newton: f64,
    /// Bisection width on d21 when locating a double Hopf point.
    pub bisection: f64,
    /// Below this `|p11 p22|` the cubic unfolding is treated as degenerate.
    pub degenerate_cubic: f64,
    /// Radius in `(mu1, mu2)` beyond which classifications are flagged.
    pub validity_radius: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            characteristic_residual: 1e-8,
            eigenbasis: 1e-8,
            h_residual: 1e-8,
            arccos_slack: 1e-12,
            resonance: 1e-3,
            newton: 1e-12,
            bisection: 1e-13,
            degenerate_cubic: 1e-12,
            validity_radius: 1.5,
        }
    }
}

/// Parsed model file: parameters and the kinetics instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub d11: f64,
    pub d22: f64,
    pub d21: f64,
    pub tau: f64,
    pub ell: f64,
    pub kinetics: KineticsSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticsSpec {
    pub name: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ModelSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, ModelError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ModelError::Config(e.to_string()))?;
        Self::from_table(&table)
    }

    pub fn from_file(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|e| ModelError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_table(table: &toml::Table) -> Result<Self, ModelError> {
        let params = table.get("params").and_then(|v| v.as_table());
        let kin = table.get("kinetics").and_then(|v| v.as_table());
        let param = |key: &str, default: Option<f64>| -> Result<f64, ModelError> {
            let value = params.and_then(|p| p.get(key)).or_else(|| table.get(key));
            match value {
                Some(v) => number(v).ok_or_else(|| ModelError::Config(format!("`{key}` must be a number"))),
                None => default.ok_or_else(|| ModelError::Config(format!("missing `{key}`"))),
            }
        };
        let kin_value = |key: &str| -> Result<f64, ModelError> {
            let value = kin.and_then(|k| k.get(key));
            value.and_then(number).ok_or_else(|| ModelError::Config(format!("missing or non-numeric `kinetics.{key}`")))
        };
        let name = kin.and_then(|k| k.get("name")).and_then(|v| v.as_str()).unwrap_or("holling2").to_string();
        Ok(Self {
            d11: param("d11", None)?,
            d22: param("d22", None)?,
            d21: param("d21", Some(0.0))?,
            tau: param("tau", Some(0.0))?,
            ell: param("ell", None)?,
            kinetics: KineticsSpec { name, a: kin_value("a")?, b: kin_value("b")?, c: kin_value("c")? },
        })
    }

    pub fn build_kinetics(&self) -> Result<Arc<dyn Kinetics>, ModelError> {
        match self.kinetics.name.to_ascii_lowercase().as_str() {
            "holling2" | "holling-ii" | "hollingii" => {
                Ok(Arc::new(Holling2::new(self.kinetics.a, self.kinetics.b, self.kinetics.c)?))
            }
            other => Err(ModelError::UnknownKinetics(other.to_string())),
        }
    }

    pub fn build(&self) -> Result<ModelParams, ModelError> {
        ModelParams::new(self.d11, self.d22, self.d21, self.tau, self.ell, self.build_kinetics()?)
    }

    /// The model file that reproduces this spec.
    pub fn to_toml_string(&self) -> String {
        format!(
            "[params]\nd11 = {:?}\nd22 = {:?}\nd21 = {:?}\ntau = {:?}\nell = {:?}\n\n[kinetics]\nname = \"{}\"\na = {:?}\nb = {:?}\nc = {:?}\n",
            self.d11,
            self.d22,
            self.d21,
            self.tau,
            self.ell,
            self.kinetics.name,
            self.kinetics.a,
            self.kinetics.b,
            self.kinetics.c
        )
    }
}

fn number(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(x) => Some(*x),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

/// Parameters of the first worked example: `(a, b, c) = (1, 9, 3)`,
/// `d11 = 0.6`, `d22 = 0.8`, `ell = 2`.
pub fn case_one() -> ModelSpec {
    ModelSpec {
        d11: 0.6,
        d22: 0.8,
        d21: 0.0,
        tau: 0.0,
        ell: 2.0,
        kinetics: KineticsSpec { name: "holling2".into(), a: 1.0, b: 9.0, c: 3.0 },
    }
}

/// Parameters of the second worked example: `(a, b, c) = (1, 0.3, 0.1)`,
/// `d11 = 0.6`, `d22 = 0.8`, `ell = 2`.
pub fn case_two() -> ModelSpec {
    ModelSpec {
        d11: 0.6,
        d22: 0.8,
        d21: 0.0,
        tau: 0.0,
        ell: 2.0,
        kinetics: KineticsSpec { name: "holling2".into(), a: 1.0, b: 0.3, c: 0.1 },
    }
}
