//! `lnmap induce`: export the dictionary a trained run induces between
//! its frequent-word pools.

use std::path::PathBuf;

use lnmap_core::retrieval::{induce_dictionary, TranslationMap};

use crate::commands::{effective_max_vocab, existing_dir, load_spaces, EmbeddingArgs};
use crate::persist::{load_trained_map, MODEL_FILE};
use crate::rundir::read_manifest;
use crate::{embio, Result};

#[derive(Debug, clap::Args)]
pub struct InduceArgs {
    #[command(flatten)]
    pub emb: EmbeddingArgs,

    /// Trained run directory (model and manifest).
    #[arg(long, value_name = "DIR")]
    pub run_dir: PathBuf,

    /// Output file (default: RUN_DIR/induced.dict).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,

    /// Keep only the N highest-scoring pairs.
    #[arg(long, value_name = "N")]
    pub top_n: Option<usize>,

    /// Append each pair's CSLS score as a third column.
    #[arg(long)]
    pub scores: bool,

    /// Override the frequent-word pool size from the run config.
    #[arg(long, value_name = "N")]
    pub k_freq: Option<usize>,

    /// Override the CSLS neighbourhood size from the run config.
    #[arg(long, value_name = "K")]
    pub csls_k: Option<usize>,
}

pub fn run(args: &InduceArgs) -> Result<()> {
    existing_dir(&args.run_dir, "run directory")?;
    let manifest = read_manifest(&args.run_dir)?;
    let mut patch = manifest.config;
    if let Some(k) = args.k_freq {
        patch.k_freq = Some(k);
    }
    if let Some(k) = args.csls_k {
        patch.csls_k = Some(k);
    }

    let spaces = load_spaces(&args.emb, effective_max_vocab(args.emb.max_vocab, &patch))?;
    let config = patch.resolve(spaces.src.dim())?;
    let map = load_trained_map(&args.run_dir.join(MODEL_FILE), &config)?;

    let src_pool = spaces.src.prefix_rows(config.induction_pool.min(spaces.src.len()));
    let tgt_pool = spaces.tgt.prefix_rows(config.induction_pool.min(spaces.tgt.len()));
    let mut src_codes = map.map_source(&src_pool)?;
    let mut tgt_codes = map.embed_target(&tgt_pool)?;
    if config.renorm_codes {
        src_codes.renormalize_rows("mapped source codes")?;
        tgt_codes.renormalize_rows("target codes")?;
    }

    let mut pairs = induce_dictionary(&src_codes, &tgt_codes, config.csls_k)?;
    if let Some(n) = args.top_n {
        pairs.truncate(n);
    }

    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.run_dir.join("induced.dict"));
    if pairs.is_empty() {
        log::warn!("no mutual-neighbour pairs were induced; writing an empty dictionary");
    }
    let rows: Vec<(String, String)> = pairs
        .iter()
        .map(|p| {
            (
                spaces.src.token(p.src).to_string(),
                spaces.tgt.token(p.tgt).to_string(),
            )
        })
        .collect();
    let score_column: Vec<f64> = pairs.iter().map(|p| p.score).collect();
    embio::save_dictionary(&out, &rows, args.scores.then_some(score_column.as_slice()))?;

    println!("induced {} pairs", pairs.len());
    println!("wrote {}", out.display());
    Ok(())
}
