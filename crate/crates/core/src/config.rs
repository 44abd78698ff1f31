//! Plain-text model format.
//!
//! ```toml
//! [model]
//! lambda_a = 1.0        # optional, default 1
//! lambda_v = 10.0
//! omega = "golden"      # golden | sqrt2m1 | p/q | decimal | cf:a1,a2;t
//!
//! [function.v]
//! reality = true
//! coeffs = [[-1, 1.0, 0.0], [1, 1.0, 0.0]]   # [k, re, im]
//! rho = 0.5
//!
//! [function.a]          # optional; omitted means a ≡ 1
//! coeffs = [[0, 1.0, 0.0]]
//! rho = 0.5
//! ```

use serde::{Deserialize, Serialize};

use crate::analytic::{AnalyticError, TrigPolynomial};
use crate::arithmetic::{ArithmeticError, Frequency};
use crate::cocycle::{CocycleError, JacobiModel};
use crate::C64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("syntax: {0}")]
    Syntax(String),
    #[error("function {0}: missing rho")]
    MissingRho(String),
    #[error("function {0}: coefficients are not real-symmetric (c_-k = conj(c_k))")]
    NotReal(String),
    #[error("function v must be declared with reality = true")]
    RealityFlag,
    #[error("omega: {0}")]
    Omega(#[from] ArithmeticError),
    #[error(transparent)]
    Function(#[from] AnalyticError),
    #[error(transparent)]
    Model(#[from] CocycleError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_a: Option<f64>,
    pub lambda_v: f64,
    pub omega: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reality: Option<bool>,
    /// `[k, re, im]` triples.
    pub coeffs: Vec<(i64, f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSections {
    pub v: FunctionConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<FunctionConfig>,
}

/// Parsed but not yet validated model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model: ModelSection,
    pub function: FunctionSections,
}

impl FunctionConfig {
    fn polynomial(&self, name: &str) -> Result<TrigPolynomial, ConfigError> {
        let rho = self.rho.ok_or_else(|| ConfigError::MissingRho(name.into()))?;
        let terms: Vec<(i64, C64)> = self
            .coeffs
            .iter()
            .map(|&(k, re, im)| (k, C64::new(re, im)))
            .collect();
        let f = TrigPolynomial::new(&terms, rho)?;
        if self.reality == Some(true) && !f.is_real() {
            return Err(ConfigError::NotReal(name.into()));
        }
        Ok(f)
    }

    fn from_polynomial(f: &TrigPolynomial, reality: Option<bool>) -> Self {
        FunctionConfig {
            reality,
            coeffs: f.terms().into_iter().map(|(k, c)| (k, c.re, c.im)).collect(),
            rho: Some(f.rho()),
        }
    }
}

impl ModelConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Syntax(e.message().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model config is always serialisable")
    }

    /// Validate and build the model.
    pub fn build(&self) -> Result<JacobiModel, ConfigError> {
        let omega: Frequency = self.model.omega.parse()?;
        let v_cfg = &self.function.v;
        if v_cfg.reality == Some(false) {
            return Err(ConfigError::RealityFlag);
        }
        let v = v_cfg.polynomial("v")?;
        if !v.is_real() {
            return Err(ConfigError::NotReal("v".into()));
        }
        let a = match &self.function.a {
            Some(a_cfg) => a_cfg.polynomial("a")?,
            None => TrigPolynomial::constant(1.0, v.rho())?,
        };
        let lambda_a = self.model.lambda_a.unwrap_or(1.0);
        Ok(JacobiModel::new(lambda_a, a, self.model.lambda_v, v, &omega)?)
    }

    /// Config describing an existing model.
    pub fn from_model(model: &JacobiModel) -> Self {
        let a = if model.is_schrodinger() {
            None
        } else {
            Some(FunctionConfig::from_polynomial(model.a(), None))
        };
        ModelConfig {
            model: ModelSection {
                lambda_a: a.as_ref().map(|_| model.lambda_a()),
                lambda_v: model.lambda_v(),
                omega: model.frequency().to_string(),
            },
            function: FunctionSections {
                v: FunctionConfig::from_polynomial(model.v(), Some(true)),
                a,
            },
        }
    }
}

pub fn parse_model(text: &str) -> Result<JacobiModel, ConfigError> {
    ModelConfig::parse(text)?.build()
}

pub fn serialize_model(model: &JacobiModel) -> String {
    ModelConfig::from_model(model).to_toml()
}
