//! Run configuration files: flat TOML whose keys match the hyperparameter
//! field names, plus the loop controls (`epochs`, `batch_size`, `patience`).
//!
//! A [`PartialRunConfig`] holds whatever subset a file or the command line
//! provides; [`PartialRunConfig::resolve`] fills documented defaults and
//! validates. The effective config can be echoed back out as TOML that parses
//! to the identical resolved values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::HyperParams;
use crate::train::TrainOptions;

/// Optional overrides for every hyperparameter and loop control. Unknown keys
/// are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialRunConfig {
    pub d: Option<usize>,
    pub d_prime: Option<usize>,
    pub fused_dim: Option<usize>,
    pub hidden_dim: Option<usize>,
    #[serde(rename = "H")]
    pub heads: Option<usize>,
    #[serde(rename = "L_layers")]
    pub layers: Option<usize>,
    pub tau: Option<f64>,
    pub lambda_w: Option<f64>,
    pub m_syn: Option<f64>,
    pub m_ant: Option<f64>,
    pub dropout_rate: Option<f64>,
    pub lr: Option<f64>,
    pub seed: Option<u64>,
    pub trans_weight: Option<f64>,
    pub single_space: Option<bool>,
    pub no_graph: Option<bool>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    /// Early-stopping patience in epochs; 0 disables early stopping.
    pub patience: Option<usize>,
}

impl PartialRunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("config parse: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Layer `overrides` on top of `self`: any field the override sets wins.
    pub fn overlay(mut self, overrides: &PartialRunConfig) -> Self {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if overrides.$field.is_some() {
                    self.$field = overrides.$field.clone();
                })*
            };
        }
        take!(
            d, d_prime, fused_dim, hidden_dim, heads, layers, tau, lambda_w, m_syn, m_ant,
            dropout_rate, lr, seed, trans_weight, single_space, no_graph, epochs, batch_size,
            patience
        );
        self
    }

    /// Fill defaults and validate. `dim_from_data`, when known (from a loaded
    /// embedding table), must agree with any explicit `d`.
    pub fn resolve(&self, dim_from_data: Option<usize>) -> Result<(HyperParams, TrainOptions)> {
        let d = match (self.d, dim_from_data) {
            (Some(d), Some(data)) if d != data => {
                return Err(Error::InvalidConfig(format!(
                    "config d = {d} but the embedding table has dim {data}"
                )));
            }
            (Some(d), _) => d,
            (None, Some(data)) => data,
            (None, None) => {
                return Err(Error::InvalidConfig(
                    "d is not set and no embedding table provides it".into(),
                ));
            }
        };
        let d_prime = self.d_prime.unwrap_or(128);
        let fused_dim = self.fused_dim.unwrap_or(2 * d_prime);
        let hidden_dim = self.hidden_dim.unwrap_or((fused_dim / 2).max(1));
        let hp = HyperParams {
            d,
            d_prime,
            fused_dim,
            hidden_dim,
            heads: self.heads.unwrap_or(4),
            layers: self.layers.unwrap_or(2),
            tau: self.tau.unwrap_or(0.9),
            lambda_w: self.lambda_w.unwrap_or(1.0),
            m_syn: self.m_syn.unwrap_or(0.8),
            m_ant: self.m_ant.unwrap_or(0.2),
            dropout_rate: self.dropout_rate.unwrap_or(0.1),
            lr: self.lr.unwrap_or(1e-3),
            seed: self.seed.unwrap_or(42),
            trans_weight: self.trans_weight.unwrap_or(0.5),
            single_space: self.single_space.unwrap_or(false),
            no_graph: self.no_graph.unwrap_or(false),
        };
        hp.validate()?;
        let opts = TrainOptions {
            epochs: self.epochs.unwrap_or(100),
            batch_size: self.batch_size.unwrap_or(32),
            patience: match self.patience {
                Some(0) => None,
                Some(p) => Some(p),
                None => Some(10),
            },
        };
        if opts.batch_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "batch_size must be at least 2, got {}",
                opts.batch_size
            )));
        }
        Ok((hp, opts))
    }
}

/// A fully resolved config as a [`PartialRunConfig`] with every field set.
pub fn to_partial(hp: &HyperParams, opts: &TrainOptions) -> PartialRunConfig {
    PartialRunConfig {
        d: Some(hp.d),
        d_prime: Some(hp.d_prime),
        fused_dim: Some(hp.fused_dim),
        hidden_dim: Some(hp.hidden_dim),
        heads: Some(hp.heads),
        layers: Some(hp.layers),
        tau: Some(hp.tau),
        lambda_w: Some(hp.lambda_w),
        m_syn: Some(hp.m_syn),
        m_ant: Some(hp.m_ant),
        dropout_rate: Some(hp.dropout_rate),
        lr: Some(hp.lr),
        seed: Some(hp.seed),
        trans_weight: Some(hp.trans_weight),
        single_space: Some(hp.single_space),
        no_graph: Some(hp.no_graph),
        epochs: Some(opts.epochs),
        batch_size: Some(opts.batch_size),
        patience: Some(opts.patience.unwrap_or(0)),
    }
}

/// Echo the effective config as TOML; parsing it back resolves to identical
/// values.
pub fn effective_toml(hp: &HyperParams, opts: &TrainOptions) -> String {
    toml::to_string(&to_partial(hp, opts)).expect("flat config serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let (hp, opts) = PartialRunConfig::default().resolve(Some(768)).unwrap();
        assert_eq!(hp.d, 768);
        assert_eq!(hp.d_prime, 128);
        assert_eq!(hp.fused_dim, 256);
        assert_eq!(hp.hidden_dim, 128);
        assert_eq!(hp.heads, 4);
        assert_eq!(hp.layers, 2);
        assert_eq!(opts.epochs, 100);
        assert_eq!(opts.batch_size, 32);
        assert_eq!(opts.patience, Some(10));
    }

    #[test]
    fn fused_dim_follows_d_prime_override() {
        let cfg = PartialRunConfig {
            d_prime: Some(16),
            ..Default::default()
        };
        let (hp, _) = cfg.resolve(Some(8)).unwrap();
        assert_eq!(hp.fused_dim, 32);
        assert_eq!(hp.hidden_dim, 16);
    }

    #[test]
    fn explicit_d_must_match_data() {
        let cfg = PartialRunConfig {
            d: Some(10),
            ..Default::default()
        };
        assert!(cfg.resolve(Some(12)).is_err());
        assert!(cfg.resolve(Some(10)).is_ok());
        assert!(cfg.resolve(None).is_ok());
    }

    #[test]
    fn missing_d_everywhere_is_an_error() {
        assert!(PartialRunConfig::default().resolve(None).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = PartialRunConfig::from_toml_str("momentum = 0.9\n").unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)), "{err}");
    }

    #[test]
    fn spec_field_names_accepted() {
        let cfg = PartialRunConfig::from_toml_str(
            "d = 8\nd_prime = 4\nfused_dim = 8\nH = 2\nL_layers = 1\ntau = 0.5\n\
             lambda_w = 0.0\nm_syn = 0.7\nm_ant = 0.1\ndropout_rate = 0.2\nlr = 0.01\nseed = 7\n",
        )
        .unwrap();
        let (hp, _) = cfg.resolve(None).unwrap();
        assert_eq!(hp.heads, 2);
        assert_eq!(hp.layers, 1);
        assert_eq!(hp.seed, 7);
        assert_eq!(hp.lambda_w, 0.0);
    }

    #[test]
    fn overlay_prefers_overrides() {
        let base = PartialRunConfig {
            seed: Some(1),
            lr: Some(0.1),
            ..Default::default()
        };
        let over = PartialRunConfig {
            seed: Some(2),
            ..Default::default()
        };
        let merged = base.overlay(&over);
        assert_eq!(merged.seed, Some(2));
        assert_eq!(merged.lr, Some(0.1));
    }

    #[test]
    fn echo_round_trips_exactly() {
        let cfg = PartialRunConfig {
            d_prime: Some(8),
            tau: Some(0.75),
            patience: Some(0),
            ..Default::default()
        };
        let (hp, opts) = cfg.resolve(Some(16)).unwrap();
        let echoed = effective_toml(&hp, &opts);
        let reparsed = PartialRunConfig::from_toml_str(&echoed).unwrap();
        let (hp2, opts2) = reparsed.resolve(None).unwrap();
        assert_eq!(hp, hp2);
        assert_eq!(opts, opts2);
    }

    #[test]
    fn patience_zero_disables_early_stopping() {
        let cfg = PartialRunConfig {
            patience: Some(0),
            ..Default::default()
        };
        let (_, opts) = cfg.resolve(Some(4)).unwrap();
        assert_eq!(opts.patience, None);
    }
}
