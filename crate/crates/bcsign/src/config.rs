//! JSON experiment configs and the built-in desk instances.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::finite_field::AddChar;
use crate::gauss::BruteOptions;
use crate::local_model::{build_tower, LocalElem, ModelError, TowerConfig, TowerSpec};
use crate::stratum::{SimpleCharSpec, StratumError, StratumSpec};

pub const SCHEMA_VERSION: u32 = 1;
pub const BUILTIN_CASES: [&str; 6] = ["u1", "e3f1", "e1f2", "e3f2", "e5f1", "d1-tower"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("unknown case {0:?}; built-in cases: u1, e3f1, e1f2, e3f2, e5f1, d1-tower")]
    UnknownCase(String),
    #[error("{0}")]
    Reference(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stratum(#[from] StratumError),
}

/// One c_j = a·ϖ_E^{−r}, a ∈ 𝐤_E^× in base-p digits.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub a: u32,
    pub r: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StratumConfig {
    /// c_0, …, c_d
    pub c: Vec<Monomial>,
}

/// Which restriction of ρ̃ to μ_E.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MuChoice {
    ChiF,
    ChiFMinusOne,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RhoTildeConfig {
    pub mu: MuChoice,
    /// ρ̃(ϖ_E) = i^varpi
    pub varpi: u8,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CharacterConfig {
    /// coefficient of ϖ_E^{−e} in ξ_F
    #[serde(default)]
    pub xi_f: u32,
    /// ρ(−1) for the unitary level-zero part
    #[serde(default = "plus_one")]
    pub rho_minus_one: i8,
    /// fixed ρ̃; when absent every self-dual candidate is run
    #[serde(default)]
    pub rho_tilde: Option<RhoTildeConfig>,
    /// ψ_a(x) = ψ(a x)
    #[serde(default = "one")]
    pub psi_twist: u32,
}

impl Default for CharacterConfig {
    fn default() -> Self {
        CharacterConfig { xi_f: 0, rho_minus_one: 1, rho_tilde: None, psi_twist: 1 }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_bound")]
    pub bound: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { bound: default_bound(), threads: None, seed: 0, format: OutputFormat::Text }
    }
}

impl RunConfig {
    pub fn brute(&self) -> BruteOptions {
        BruteOptions { bound: self.bound, threads: self.threads }
    }
}

/// Grid for the gauss command.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GaussGrid {
    #[serde(default = "default_qs")]
    pub q: Vec<u32>,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    /// random Gram matrices per (q, n)
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// skip (q, n) with q^n above this
    #[serde(default = "default_cap")]
    pub cap: u64,
}

impl Default for GaussGrid {
    fn default() -> Self {
        GaussGrid { q: default_qs(), max_dim: default_max_dim(), samples: default_samples(), cap: default_cap() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub tower: TowerConfig,
    pub stratum: StratumConfig,
    #[serde(default)]
    pub character: CharacterConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub gauss: GaussGrid,
}

fn one() -> u32 {
    1
}
fn plus_one() -> i8 {
    1
}
fn default_bound() -> u64 {
    10_000_000
}
fn default_qs() -> Vec<u32> {
    vec![3, 5]
}
fn default_max_dim() -> usize {
    4
}
fn default_samples() -> usize {
    10
}
fn default_cap() -> u64 {
    10_000_000
}

/// Built objects for one config.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub tower: Arc<TowerSpec>,
    pub stratum: Arc<StratumSpec>,
    pub chi: SimpleCharSpec,
}

impl ExperimentConfig {
    pub fn builtin(name: &str) -> Result<Self, ConfigError> {
        let m = |a, r| Monomial { a, r };
        let (e, f, chain, c) = match name {
            "u1" => (1, 1, vec![], vec![m(1, 1)]),
            "e3f1" => (3, 1, vec![], vec![m(1, 1)]),
            "e1f2" => (1, 2, vec![], vec![m(3, 1)]),
            "e3f2" => (3, 2, vec![], vec![m(3, 1)]),
            "e5f1" => (5, 1, vec![], vec![m(1, 1)]),
            "d1-tower" => (3, 2, vec![(1, 2)], vec![m(2, 1), m(5, 3)]),
            _ => return Err(ConfigError::UnknownCase(name.to_string())),
        };
        let mut tower = TowerConfig::new(3, e, f);
        tower.chain = chain;
        Ok(ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            name: Some(name.to_string()),
            tower,
            stratum: StratumConfig { c },
            character: CharacterConfig::default(),
            run: RunConfig::default(),
            gauss: GaussGrid::default(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Cross-block checks that serde cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema(self.schema_version));
        }
        let levels = self.tower.chain.len() + 1;
        if self.stratum.c.len() != levels {
            return Err(ConfigError::Reference(format!("stratum.c has {} entries but the tower chain gives d + 1 = {levels}", self.stratum.c.len())));
        }
        let ch = &self.character;
        if ch.rho_minus_one != 1 && ch.rho_minus_one != -1 {
            return Err(ConfigError::Reference("character.rho_minus_one must be 1 or -1".into()));
        }
        if ch.psi_twist % self.tower.q == 0 {
            return Err(ConfigError::Reference("character.psi_twist must be a unit".into()));
        }
        if let Some(rt) = &ch.rho_tilde {
            if rt.varpi > 3 {
                return Err(ConfigError::Reference("character.rho_tilde.varpi is an exponent of i in 0..4".into()));
            }
        }
        if self.run.bound == 0 {
            return Err(ConfigError::Reference("run.bound must be positive".into()));
        }
        Ok(())
    }

    /// Build tower, stratum and character, re-checking every constraint.
    pub fn build(&self) -> Result<Experiment, ConfigError> {
        self.validate()?;
        let tower = build_tower(&self.tower)?;
        let c = self.stratum.c.iter().map(|m| LocalElem::monomial(m.a, -m.r)).collect();
        let stratum = Arc::new(StratumSpec::new(tower.clone(), c)?);
        let mut chi = SimpleCharSpec::standard(stratum.clone()).with_xi_f(self.character.xi_f);
        chi.psi = AddChar::new(&tower.k, self.character.psi_twist % self.tower.q);
        Ok(Experiment { tower, stratum, chi })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_build_and_round_trip() {
        for name in BUILTIN_CASES {
            let cfg = ExperimentConfig::builtin(name).unwrap();
            let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(back, cfg);
            let ex = cfg.build().unwrap();
            assert_eq!(ex.stratum.d(), cfg.tower.chain.len());
        }
        assert!(matches!(ExperimentConfig::builtin("e2f1"), Err(ConfigError::UnknownCase(_))));
    }

    #[test]
    fn rejects_bad_configs() {
        let good = ExperimentConfig::builtin("e3f1").unwrap().to_json();
        let typo = good.replace("\"lambda0\"", "\"lamda0\"");
        assert!(matches!(ExperimentConfig::from_json(&typo), Err(ConfigError::Parse(_))));
        let v2 = good.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(ExperimentConfig::from_json(&v2), Err(ConfigError::Schema(2))));
        let mut two = ExperimentConfig::builtin("e3f1").unwrap();
        two.stratum.c.push(Monomial { a: 1, r: 3 });
        assert!(matches!(two.validate(), Err(ConfigError::Reference(_))));
        let mut nonmin = ExperimentConfig::builtin("e3f2").unwrap();
        nonmin.stratum.c[0].a = 2;
        assert!(matches!(nonmin.build(), Err(ConfigError::Stratum(StratumError::NotMinimal(_)))));
    }
}
