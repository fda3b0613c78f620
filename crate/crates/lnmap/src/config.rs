//! Hyperparameter resolution.
//!
//! Settings come from three layers: built-in defaults, then an optional
//! JSON config file, then command line flags, each overriding the last.
//! The file uses the same kebab-case keys as the flags (`"ae-epochs": 10`
//! configures what `--ae-epochs 10` does), and every run writes its fully
//! resolved settings back out as `config.json`, which is itself a valid
//! config file for reproducing the run.

use std::path::Path;

use lnmap_core::model::ModelDims;
use lnmap_core::trainer::TrainingConfig;
use serde::{Deserialize, Serialize};

use crate::{persist, CliError, Result};

/// A partial settings overlay; `None` means "not specified here".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct ConfigPatch {
    pub max_vocab: Option<usize>,
    pub latent_dim: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub lr_decay: Option<f64>,
    pub ae_epochs: Option<usize>,
    pub map_epochs: Option<usize>,
    pub increment: Option<usize>,
    pub k_freq: Option<usize>,
    pub pretrain_vocab: Option<usize>,
    pub convergence_eps: Option<f64>,
    pub csls_k: Option<usize>,
    pub lambda_bt: Option<f64>,
    pub lambda_rec: Option<f64>,
    pub renorm_codes: Option<bool>,
    pub linear_ae: Option<bool>,
    pub linear_mapper: Option<bool>,
    pub procrustes: Option<bool>,
    pub no_bt: Option<bool>,
    pub no_rec: Option<bool>,
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
}

impl ConfigPatch {
    /// Reads a patch from a JSON file; unknown keys are rejected.
    pub fn from_file(path: &Path) -> Result<ConfigPatch> {
        persist::read_json(path)
    }

    /// Lays `other` on top of `self`: its specified fields win.
    pub fn overlay(mut self, other: &ConfigPatch) -> ConfigPatch {
        macro_rules! take {
            ($($field:ident),+ $(,)?) => {
                $(if other.$field.is_some() { self.$field = other.$field.clone(); })+
            };
        }
        take!(
            max_vocab, latent_dim, hidden_dim, batch_size, lr, lr_decay, ae_epochs, map_epochs,
            increment, k_freq, pretrain_vocab, convergence_eps, csls_k, lambda_bt, lambda_rec,
            renorm_codes, linear_ae, linear_mapper, procrustes, no_bt, no_rec, seed, max_iters,
        );
        self
    }

    /// Resolves the patch into a full training config for embeddings of
    /// dimension `input_dim`, filling gaps from the defaults.
    pub fn resolve(&self, input_dim: usize) -> Result<TrainingConfig> {
        let base = TrainingConfig::default();
        let hidden_dim = self.hidden_dim.unwrap_or(base.dims.hidden_dim);
        let config = TrainingConfig {
            dims: ModelDims {
                input_dim,
                hidden_dim,
                latent_dim: self.latent_dim.unwrap_or(base.dims.latent_dim),
                mapper_hidden: hidden_dim,
            },
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            lr: self.lr.unwrap_or(base.lr),
            lr_decay: self.lr_decay.unwrap_or(base.lr_decay),
            ae_epochs: self.ae_epochs.unwrap_or(base.ae_epochs),
            map_epochs_per_iter: self.map_epochs.unwrap_or(base.map_epochs_per_iter),
            dict_increment: self.increment.unwrap_or(base.dict_increment),
            induction_pool: self.k_freq.unwrap_or(base.induction_pool),
            pretrain_vocab: self.pretrain_vocab.unwrap_or(base.pretrain_vocab),
            convergence_eps: self.convergence_eps.unwrap_or(base.convergence_eps),
            max_outer_iters: self.max_iters.unwrap_or(base.max_outer_iters),
            rng_seed: self.seed.unwrap_or(base.rng_seed),
            lambda_bt: self.lambda_bt.unwrap_or(base.lambda_bt),
            lambda_rec: self.lambda_rec.unwrap_or(base.lambda_rec),
            csls_k: self.csls_k.unwrap_or(base.csls_k),
            renorm_codes: self.renorm_codes.unwrap_or(base.renorm_codes),
            linear_ae: self.linear_ae.unwrap_or(false),
            linear_mapper: self.linear_mapper.unwrap_or(false),
            procrustes_only: self.procrustes.unwrap_or(false),
            no_bt: self.no_bt.unwrap_or(false),
            no_rec: self.no_rec.unwrap_or(false),
        };
        config.validate().map_err(|e| CliError::Input(e.to_string()))?;
        Ok(config)
    }

    /// The fully specified patch equivalent to a resolved config, as
    /// written to `config.json`.
    pub fn from_resolved(config: &TrainingConfig, max_vocab: Option<usize>) -> ConfigPatch {
        ConfigPatch {
            max_vocab,
            latent_dim: Some(config.dims.latent_dim),
            hidden_dim: Some(config.dims.hidden_dim),
            batch_size: Some(config.batch_size),
            lr: Some(config.lr),
            lr_decay: Some(config.lr_decay),
            ae_epochs: Some(config.ae_epochs),
            map_epochs: Some(config.map_epochs_per_iter),
            increment: Some(config.dict_increment),
            k_freq: Some(config.induction_pool),
            pretrain_vocab: Some(config.pretrain_vocab),
            convergence_eps: Some(config.convergence_eps),
            csls_k: Some(config.csls_k),
            lambda_bt: Some(config.lambda_bt),
            lambda_rec: Some(config.lambda_rec),
            renorm_codes: Some(config.renorm_codes),
            linear_ae: Some(config.linear_ae),
            linear_mapper: Some(config.linear_mapper),
            procrustes: Some(config.procrustes_only),
            no_bt: Some(config.no_bt),
            no_rec: Some(config.no_rec),
            seed: Some(config.rng_seed),
            max_iters: Some(config.max_outer_iters),
        }
    }
}
