//! `lnmap train`: iterative self-training of the latent mapping (or the
//! orthogonal baseline), producing a resumable run directory.

use std::path::{Path, PathBuf};

use lnmap_core::embedding::SeedDictionary;
use lnmap_core::trainer::{procrustes_self_training, SelfTrainer, TrainingConfig};

use crate::commands::pretrain::{PRETRAIN_SRC_FILE, PRETRAIN_TGT_FILE};
use crate::commands::{load_spaces, EmbeddingArgs, HyperArgs, LoadedSpaces};
use crate::config::ConfigPatch;
use crate::persist::{load_checkpoint, load_pretrained, save_checkpoint, save_trained_map, TrainedMap};
use crate::rundir::{ensure_dir, input_record, read_manifest, write_manifest, HistoryWriter, RunManifest};
use crate::{embio, CliError, Result};

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub emb: EmbeddingArgs,

    #[command(flatten)]
    pub hyper: HyperArgs,

    /// Seed dictionary of `src tgt` token pairs (not needed with
    /// --resume, which reads it from the checkpoint).
    #[arg(long, value_name = "FILE", required_unless_present = "resume")]
    pub dict: Option<PathBuf>,

    /// Run directory for model, history and checkpoints.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,

    /// Directory holding `pretrain_{src,tgt}.bin` (defaults to --out-dir).
    #[arg(long, value_name = "DIR")]
    pub pretrain_dir: Option<PathBuf>,

    /// Pretrain the autoencoders in-process instead of loading payloads.
    #[arg(long, conflicts_with = "resume")]
    pub pretrain_inline: bool,

    /// Reduce the seed dictionary to its first N unique-source pairs.
    #[arg(long, value_name = "N")]
    pub dict_unique: Option<usize>,

    /// Continue a checkpointed run; settings come from the checkpoint
    /// (only --max-iters applies on top, to extend a finished run).
    #[arg(long)]
    pub resume: bool,
}

/// Where the autoencoder weights come from before self-training.
pub enum PretrainSource {
    /// Run pretraining inside this process.
    Inline,
    /// Load `pretrain_{src,tgt}.bin` from a directory.
    Artifacts(PathBuf),
}

/// What a completed training run reports back.
pub struct TrainSummary {
    pub kind: &'static str,
    pub iterations: usize,
    pub converged: bool,
    pub dict_size: usize,
    pub avg_similarity: Option<f64>,
}

impl TrainSummary {
    fn print(&self, out_dir: &Path) {
        let state = if self.converged {
            "converged"
        } else {
            "stopped at the iteration cap"
        };
        println!(
            "{} training {state} after {} iterations (dictionary size {}{})",
            self.kind,
            self.iterations,
            self.dict_size,
            self.avg_similarity
                .map(|s| format!(", mean similarity {s:.4}"))
                .unwrap_or_default(),
        );
        println!("wrote {}", out_dir.display());
    }
}

pub fn run(args: &TrainArgs) -> Result<()> {
    if args.resume {
        return run_resume(args);
    }

    let patch = args.hyper.resolve_patch(args.emb.max_vocab)?;
    let procrustes = patch.procrustes.unwrap_or(false);
    let pretrain = if procrustes {
        None
    } else if args.pretrain_inline {
        Some(PretrainSource::Inline)
    } else {
        let dir = args
            .pretrain_dir
            .clone()
            .unwrap_or_else(|| args.out_dir.clone());
        if !dir.join(PRETRAIN_SRC_FILE).is_file() || !dir.join(PRETRAIN_TGT_FILE).is_file() {
            return Err(CliError::Input(format!(
                "no pretrained autoencoders in {}: run `lnmap pretrain` first or pass --pretrain-inline",
                dir.display()
            )));
        }
        Some(PretrainSource::Artifacts(dir))
    };

    let dict_path = args
        .dict
        .as_deref()
        .ok_or_else(|| CliError::input("--dict is required unless --resume is set"))?;
    let mut spaces = load_spaces(&args.emb, patch.max_vocab)?;
    spaces.records.push(input_record("dict", dict_path)?);
    let loaded = embio::load_dictionary(dict_path, &spaces.src, &spaces.tgt)?;
    let mut dict = loaded.dict;
    if let Some(n) = args.dict_unique {
        dict = dict.make_unique(n)?;
    }
    let config = patch.resolve(spaces.src.dim())?;

    let summary = train_into_dir(&config, patch.max_vocab, spaces, dict, &args.out_dir, pretrain)?;
    summary.print(&args.out_dir);
    Ok(())
}

/// Runs a full training into `out_dir`. `pretrain` is `None` for the
/// orthogonal baseline. Used by both `train` and each `ablate` variant.
pub fn train_into_dir(
    config: &TrainingConfig,
    max_vocab: Option<usize>,
    spaces: LoadedSpaces,
    dict: SeedDictionary,
    out_dir: &Path,
    pretrain: Option<PretrainSource>,
) -> Result<TrainSummary> {
    ensure_dir(out_dir)?;
    let manifest = RunManifest::new(
        ConfigPatch::from_resolved(config, max_vocab),
        config.rng_seed,
        spaces.records.clone(),
    );
    write_manifest(out_dir, &manifest)?;

    if pretrain.is_none() {
        let (map, stats) = procrustes_self_training(config, &spaces.src, &spaces.tgt, &dict)?;
        let mut history = HistoryWriter::create(out_dir)?;
        let mut last = None;
        for s in &stats {
            log_iteration(s);
            history.push(s)?;
            last = Some(s.clone());
        }
        save_trained_map(&out_dir.join(crate::persist::MODEL_FILE), &TrainedMap::Orthogonal(map))?;
        // The baseline loop stops on the same criterion as the trainer:
        // the mean similarity of fresh pairs moved less than epsilon.
        let converged = stats.len() >= 2
            && (stats[stats.len() - 1].avg_similarity - stats[stats.len() - 2].avg_similarity)
                .abs()
                < config.convergence_eps;
        return Ok(TrainSummary {
            kind: "procrustes",
            iterations: stats.len(),
            converged,
            dict_size: last.as_ref().map_or(dict.len(), |s| s.dict_size),
            avg_similarity: last.map(|s| s.avg_similarity),
        });
    }

    let mut trainer = SelfTrainer::new(config.clone(), spaces.src, spaces.tgt, dict)?;
    match pretrain.expect("latent path has a pretraining source") {
        PretrainSource::Inline => {
            let report = trainer.pretrain()?;
            log::info!(
                "pretrained autoencoders: reconstruction loss {:.6} (source), {:.6} (target)",
                report.src_losses.last().copied().unwrap_or(f64::NAN),
                report.tgt_losses.last().copied().unwrap_or(f64::NAN),
            );
        }
        PretrainSource::Artifacts(dir) => {
            load_pretrained(&dir.join(PRETRAIN_SRC_FILE), trainer.model_mut().ae_src_mut())?;
            load_pretrained(&dir.join(PRETRAIN_TGT_FILE), trainer.model_mut().ae_tgt_mut())?;
        }
    }

    let mut history = HistoryWriter::create(out_dir)?;
    let cap = config.max_outer_iters;
    run_loop(&mut trainer, &mut history, out_dir, cap)
}

/// Iterates a trainer to convergence or its cap, checkpointing after
/// every iteration so the run can be resumed.
fn run_loop(
    trainer: &mut SelfTrainer,
    history: &mut HistoryWriter,
    out_dir: &Path,
    max_iters: usize,
) -> Result<TrainSummary> {
    while !trainer.state().converged && trainer.state().outer_iter < max_iters {
        let stats = trainer.run_iteration()?;
        log_iteration(&stats);
        history.push(&stats)?;
        save_checkpoint(out_dir, trainer)?;
    }
    let state = trainer.state();
    Ok(TrainSummary {
        kind: "latent-map",
        iterations: state.outer_iter,
        converged: state.converged,
        dict_size: state.dict_current.len(),
        avg_similarity: state.last_avg_similarity,
    })
}

fn run_resume(args: &TrainArgs) -> Result<()> {
    let manifest = read_manifest(&args.out_dir)?;
    let spaces = load_spaces(&args.emb, manifest.config.max_vocab)?;
    let mut trainer = load_checkpoint(&args.out_dir, spaces.src, spaces.tgt)?;
    let cap = args
        .hyper
        .max_iters
        .unwrap_or(trainer.config().max_outer_iters);
    let mut history = HistoryWriter::append(&args.out_dir)?;
    let summary = run_loop(&mut trainer, &mut history, &args.out_dir, cap)?;
    summary.print(&args.out_dir);
    Ok(())
}

fn log_iteration(stats: &lnmap_core::trainer::IterationStats) {
    log::info!(
        "iter {:>3}: map {:.6} bt {:.6} rec {:.6} sim {:.4} dict {} (+{}) lr {:.3e}",
        stats.iteration,
        stats.loss_map,
        stats.loss_bt,
        stats.loss_rec,
        stats.avg_similarity,
        stats.dict_size,
        stats.new_pairs,
        stats.lr_effective,
    );
}
