//! Subcommand implementations and their shared plumbing.

pub mod ablate;
pub mod evaluate;
pub mod induce;
pub mod pretrain;
pub mod synth;
pub mod train;

use std::path::{Path, PathBuf};

use lnmap_core::embedding::EmbeddingSpace;

use crate::config::ConfigPatch;
use crate::rundir::{input_record, InputRecord};
use crate::{embio, CliError, Result};

/// Embedding inputs shared by every command that reads vector files.
#[derive(Debug, clap::Args)]
pub struct EmbeddingArgs {
    /// Source-language embeddings (word2vec text format).
    #[arg(long, value_name = "FILE")]
    pub src_emb: PathBuf,

    /// Target-language embeddings (word2vec text format).
    #[arg(long, value_name = "FILE")]
    pub tgt_emb: PathBuf,

    /// Keep only the first N words of each embedding file.
    #[arg(long, value_name = "N")]
    pub max_vocab: Option<usize>,
}

/// Hyperparameter flags shared by the training-style commands. Every
/// flag is optional; unset flags fall back to the config file and then
/// to built-in defaults.
#[derive(Debug, Default, clap::Args)]
pub struct HyperArgs {
    /// JSON config file using the same keys as these flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Latent code dimensionality.
    #[arg(long, value_name = "D")]
    pub latent_dim: Option<usize>,

    /// Hidden width of the autoencoders and mappers.
    #[arg(long, value_name = "D")]
    pub hidden_dim: Option<usize>,

    /// Mini-batch size.
    #[arg(long, value_name = "N")]
    pub batch_size: Option<usize>,

    /// Base SGD learning rate.
    #[arg(long, value_name = "LR")]
    pub lr: Option<f64>,

    /// Per-iteration learning-rate decay factor.
    #[arg(long, value_name = "F")]
    pub lr_decay: Option<f64>,

    /// Autoencoder pretraining epochs per language.
    #[arg(long, value_name = "N")]
    pub ae_epochs: Option<usize>,

    /// Mapper epochs per outer iteration.
    #[arg(long, value_name = "N")]
    pub map_epochs: Option<usize>,

    /// Dictionary growth per outer iteration.
    #[arg(long, value_name = "N")]
    pub increment: Option<usize>,

    /// Frequent-word pool size for induction.
    #[arg(long, value_name = "N")]
    pub k_freq: Option<usize>,

    /// Cap on words used for autoencoder pretraining.
    #[arg(long, value_name = "N")]
    pub pretrain_vocab: Option<usize>,

    /// Convergence threshold on the mean similarity delta.
    #[arg(long, value_name = "EPS")]
    pub convergence_eps: Option<f64>,

    /// CSLS neighbourhood size.
    #[arg(long, value_name = "K")]
    pub csls_k: Option<usize>,

    /// Weight of the back-translation loss.
    #[arg(long, value_name = "W")]
    pub lambda_bt: Option<f64>,

    /// Weight of the reconstruction loss.
    #[arg(long, value_name = "W")]
    pub lambda_rec: Option<f64>,

    /// Use linear autoencoders (no activations).
    #[arg(long)]
    pub linear_ae: bool,

    /// Use linear mappers (no activations).
    #[arg(long)]
    pub linear_mapper: bool,

    /// Replace the neural mapping with the orthogonal-baseline loop.
    #[arg(long)]
    pub procrustes: bool,

    /// Drop the back-translation step.
    #[arg(long)]
    pub no_bt: bool,

    /// Drop the reconstruction step.
    #[arg(long)]
    pub no_rec: bool,

    /// Random seed.
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,

    /// Cap on outer self-training iterations.
    #[arg(long, value_name = "N")]
    pub max_iters: Option<usize>,
}

impl HyperArgs {
    /// The patch expressed by the flags alone (boolean flags only
    /// override when actually given).
    fn flag_patch(&self, max_vocab: Option<usize>) -> ConfigPatch {
        ConfigPatch {
            max_vocab,
            latent_dim: self.latent_dim,
            hidden_dim: self.hidden_dim,
            batch_size: self.batch_size,
            lr: self.lr,
            lr_decay: self.lr_decay,
            ae_epochs: self.ae_epochs,
            map_epochs: self.map_epochs,
            increment: self.increment,
            k_freq: self.k_freq,
            pretrain_vocab: self.pretrain_vocab,
            convergence_eps: self.convergence_eps,
            csls_k: self.csls_k,
            lambda_bt: self.lambda_bt,
            lambda_rec: self.lambda_rec,
            renorm_codes: None,
            linear_ae: self.linear_ae.then_some(true),
            linear_mapper: self.linear_mapper.then_some(true),
            procrustes: self.procrustes.then_some(true),
            no_bt: self.no_bt.then_some(true),
            no_rec: self.no_rec.then_some(true),
            seed: self.seed,
            max_iters: self.max_iters,
        }
    }

    /// Defaults, overlaid with the config file (when given), overlaid
    /// with the flags.
    pub fn resolve_patch(&self, max_vocab: Option<usize>) -> Result<ConfigPatch> {
        let mut patch = ConfigPatch::default();
        if let Some(path) = &self.config {
            patch = patch.overlay(&ConfigPatch::from_file(path)?);
        }
        Ok(patch.overlay(&self.flag_patch(max_vocab)))
    }
}

/// Both embedding spaces, loaded, truncated and normalised, plus their
/// manifest records.
pub struct LoadedSpaces {
    pub src: EmbeddingSpace,
    pub tgt: EmbeddingSpace,
    pub records: Vec<InputRecord>,
}

/// Loads and normalises the two embedding spaces named by `args`,
/// enforcing that they share a dimensionality.
pub fn load_spaces(args: &EmbeddingArgs, max_vocab: Option<usize>) -> Result<LoadedSpaces> {
    let records = vec![
        input_record("src-emb", &args.src_emb)?,
        input_record("tgt-emb", &args.tgt_emb)?,
    ];
    let mut src = embio::load_embeddings(&args.src_emb, max_vocab)?.space;
    let mut tgt = embio::load_embeddings(&args.tgt_emb, max_vocab)?.space;
    if src.dim() != tgt.dim() {
        return Err(CliError::Input(format!(
            "embedding dimensions disagree: {} is {}-dimensional, {} is {}-dimensional",
            args.src_emb.display(),
            src.dim(),
            args.tgt_emb.display(),
            tgt.dim()
        )));
    }
    src.normalize()?;
    tgt.normalize()?;
    Ok(LoadedSpaces { src, tgt, records })
}

/// The effective vocabulary cap: an explicit flag wins over the patch.
pub fn effective_max_vocab(flag: Option<usize>, patch: &ConfigPatch) -> Option<usize> {
    flag.or(patch.max_vocab)
}

/// Resolves a run directory path that must already exist.
pub fn existing_dir(path: &Path, what: &str) -> Result<()> {
    if !path.is_dir() {
        return Err(CliError::Input(format!(
            "{what} {} does not exist or is not a directory",
            path.display()
        )));
    }
    Ok(())
}
