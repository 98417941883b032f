//! Flat key-value run configuration.
//!
//! A config file is a flat TOML document; every key is optional. Values are
//! resolved as built-in defaults, then the file, then command-line flags
//! (which arrive as another [`FlatConfig`] and win on conflicts).
//!
//! ```toml
//! rounds = 5000
//! k = 3
//! rule = "median"
//! gamma = 0.2
//! lambda = 0.1
//! w_min = 0.1
//! w_max = 3.0
//! attack = "boost"
//! rho = 0.4
//! b = 3.0
//! seed = 7
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adversary::{AttackKind, AttackSpec};
use crate::consensus::ConsensusRule;
use crate::error::{PoqError, Result};
use crate::model::{LogRetention, SimConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatConfig {
    pub rounds: Option<usize>,
    pub k: Option<usize>,
    pub rule: Option<String>,
    pub gamma: Option<f64>,
    pub alpha_f: Option<f64>,
    pub beta_f: Option<f64>,
    pub tau: Option<f64>,
    pub eta: Option<f64>,
    pub b_max: Option<f64>,
    pub alpha_m: Option<f64>,
    pub beta_m: Option<f64>,
    pub lambda: Option<f64>,
    pub w_min: Option<f64>,
    pub w_max: Option<f64>,
    pub w_init: Option<f64>,
    /// Attack kind identifier, or `"none"`.
    pub attack: Option<String>,
    pub rho: Option<f64>,
    pub r: Option<f64>,
    pub b: Option<f64>,
    pub delta: Option<f64>,
    pub p: Option<f64>,
    pub seed: Option<u64>,
    pub log: Option<LogRetention>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($field:ident),* $(,)?) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl FlatConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| PoqError::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| PoqError::config(format!("{}: {}", path.display(), e.message())))
    }

    /// Returns `self` with every field set in `over` replaced.
    pub fn overlay(mut self, over: &FlatConfig) -> Self {
        overlay!(self, over;
            rounds, k, rule, gamma, alpha_f, beta_f, tau, eta, b_max, alpha_m, beta_m,
            lambda, w_min, w_max, w_init, attack, rho, r, b, delta, p, seed, log);
        self
    }

    fn has_attack_params(&self) -> bool {
        self.rho.is_some()
            || self.r.is_some()
            || self.b.is_some()
            || self.delta.is_some()
            || self.p.is_some()
    }

    /// Attack parameters with defaults filled in; the kind is `kind`.
    pub fn attack_template(&self, kind: AttackKind) -> AttackSpec {
        let d = AttackSpec::new(kind, 0.0);
        AttackSpec {
            kind,
            rho: self.rho.unwrap_or(d.rho),
            r: self.r.unwrap_or(d.r),
            b: self.b.unwrap_or(d.b),
            delta: self.delta.unwrap_or(d.delta),
            p: self.p.unwrap_or(d.p),
        }
    }

    pub fn attack_kind(&self) -> Result<Option<AttackKind>> {
        match self.attack.as_deref() {
            None | Some("none") => Ok(None),
            Some(id) => id.parse().map(Some),
        }
    }

    /// Resolves onto `SimConfig::default()` and validates the result.
    ///
    /// Attack parameters without an attack kind are rejected unless
    /// `allow_detached_attack` is set, in which case they are kept on a
    /// placeholder attack for a sweep to fill in.
    pub fn resolve(&self, allow_detached_attack: bool) -> Result<SimConfig> {
        let mut cfg = SimConfig::default();
        if let Some(v) = self.rounds {
            cfg.rounds = v;
        }
        if let Some(v) = self.k {
            cfg.sample_size = v;
        }
        if let Some(rule) = &self.rule {
            cfg.consensus_rule = rule.parse::<ConsensusRule>()?;
        }
        if let Some(v) = self.gamma {
            cfg.trim_ratio = v;
        }
        let rp = &mut cfg.reward_params;
        for (slot, value) in [
            (&mut rp.alpha_f, self.alpha_f),
            (&mut rp.beta_f, self.beta_f),
            (&mut rp.tau, self.tau),
            (&mut rp.eta, self.eta),
            (&mut rp.b_max, self.b_max),
            (&mut rp.alpha_m, self.alpha_m),
            (&mut rp.beta_m, self.beta_m),
        ] {
            if let Some(v) = value {
                *slot = v;
            }
        }
        let tp = &mut cfg.trust_params;
        for (slot, value) in [
            (&mut tp.lambda, self.lambda),
            (&mut tp.w_min, self.w_min),
            (&mut tp.w_max, self.w_max),
            (&mut tp.w_init, self.w_init),
        ] {
            if let Some(v) = value {
                *slot = v;
            }
        }
        cfg.attack = match self.attack_kind()? {
            Some(kind) => Some(self.attack_template(kind)),
            None if self.has_attack_params() && self.attack.is_none() => {
                if !allow_detached_attack {
                    return Err(PoqError::config(
                        "attack parameters (rho, r, b, delta, p) need an attack kind",
                    ));
                }
                Some(self.attack_template(AttackKind::RandomNoise))
            }
            None => None,
        };
        if let Some(v) = self.seed {
            cfg.rng_seed = v;
        }
        if let Some(v) = self.log {
            cfg.log_retention = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_resolves_to_defaults() {
        let cfg = FlatConfig::default().resolve(false).unwrap();
        assert_eq!(cfg, SimConfig::default());
        assert_eq!(cfg.rounds, 5000);
        assert_eq!(cfg.sample_size, 3);
        assert_eq!(cfg.trim_ratio, 0.2);
        assert_eq!(cfg.trust_params.lambda, 0.1);
        assert_eq!((cfg.trust_params.w_min, cfg.trust_params.w_max), (0.1, 3.0));
    }

    #[test]
    fn file_then_flags() {
        let file: FlatConfig = toml::from_str(
            "rounds = 100\nrule = \"median\"\nattack = \"boost\"\nrho = 0.4\nb = 2.0\nseed = 3\n",
        )
        .unwrap();
        let flags = FlatConfig {
            rounds: Some(50),
            b: Some(1.5),
            ..FlatConfig::default()
        };
        let cfg = file.overlay(&flags).resolve(false).unwrap();
        assert_eq!(cfg.rounds, 50);
        assert_eq!(cfg.consensus_rule, ConsensusRule::Median);
        assert_eq!(cfg.rng_seed, 3);
        let attack = cfg.attack.unwrap();
        assert_eq!(
            (attack.kind, attack.rho, attack.b),
            (AttackKind::Boost, 0.4, 1.5)
        );
        assert_eq!(attack.delta, AttackSpec::DEFAULT_DELTA);
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        assert!(toml::from_str::<FlatConfig>("rouns = 3").is_err());
        let bad_rule = FlatConfig {
            rule: Some("krum".into()),
            ..FlatConfig::default()
        };
        assert!(bad_rule.resolve(false).is_err());
        let bad_gamma = FlatConfig {
            gamma: Some(0.7),
            ..FlatConfig::default()
        };
        assert!(bad_gamma.resolve(false).is_err());
        let detached = FlatConfig {
            rho: Some(0.4),
            ..FlatConfig::default()
        };
        assert!(detached.resolve(false).is_err());
        assert!(detached.resolve(true).unwrap().attack.is_some());
        let none = FlatConfig {
            attack: Some("none".into()),
            rho: Some(0.4),
            ..FlatConfig::default()
        };
        assert!(none.resolve(false).unwrap().attack.is_none());
    }
}
