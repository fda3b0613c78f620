//! `lnmap pretrain`: train the two autoencoders and save their weights.

use std::path::PathBuf;

use lnmap_core::model::LatentMapModel;
use lnmap_core::trainer::pretrain_autoencoders;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::commands::{load_spaces, EmbeddingArgs, HyperArgs};
use crate::config::ConfigPatch;
use crate::persist::{pretrained_tensors, save_tensors};
use crate::rundir::{ensure_dir, write_manifest, RunManifest};
use crate::Result;

/// File name of the source autoencoder payload.
pub const PRETRAIN_SRC_FILE: &str = "pretrain_src.bin";
/// File name of the target autoencoder payload.
pub const PRETRAIN_TGT_FILE: &str = "pretrain_tgt.bin";

#[derive(Debug, clap::Args)]
pub struct PretrainArgs {
    #[command(flatten)]
    pub emb: EmbeddingArgs,

    #[command(flatten)]
    pub hyper: HyperArgs,

    /// Directory receiving the autoencoder payloads and manifest.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

pub fn run(args: &PretrainArgs) -> Result<()> {
    let patch = args.hyper.resolve_patch(args.emb.max_vocab)?;
    let spaces = load_spaces(&args.emb, patch.max_vocab)?;
    let config = patch.resolve(spaces.src.dim())?;

    let mut rng = ChaCha20Rng::seed_from_u64(config.rng_seed);
    let mut model = LatentMapModel::new(
        config.dims,
        config.linear_ae,
        config.linear_mapper,
        &mut rng,
    )?;
    let report = pretrain_autoencoders(&mut model, &spaces.src, &spaces.tgt, &config, &mut rng)?;

    ensure_dir(&args.out_dir)?;
    save_tensors(
        &args.out_dir.join(PRETRAIN_SRC_FILE),
        &pretrained_tensors(model.ae_src()),
    )?;
    save_tensors(
        &args.out_dir.join(PRETRAIN_TGT_FILE),
        &pretrained_tensors(model.ae_tgt()),
    )?;
    let manifest = RunManifest::new(
        ConfigPatch::from_resolved(&config, patch.max_vocab),
        config.rng_seed,
        spaces.records,
    );
    write_manifest(&args.out_dir, &manifest)?;

    let last = |curve: &[f64]| curve.last().copied().unwrap_or(f64::NAN);
    println!(
        "pretrained autoencoders for {} epochs: reconstruction loss {:.6} (source), {:.6} (target)",
        config.ae_epochs,
        last(&report.src_losses),
        last(&report.tgt_losses),
    );
    println!("wrote {}", args.out_dir.display());
    Ok(())
}
