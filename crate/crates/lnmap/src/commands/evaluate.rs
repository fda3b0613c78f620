//! `lnmap evaluate`: precision@k of a trained run against a gold
//! dictionary, printed and written as `report.json`.

use std::path::{Path, PathBuf};

use lnmap_core::embedding::{EmbeddingSpace, SeedDictionary};
use lnmap_core::retrieval::{precision_at_k, ScoringOptions, TranslationMap};

use crate::commands::{effective_max_vocab, existing_dir, load_spaces, EmbeddingArgs};
use crate::persist::{load_trained_map, write_json, MODEL_FILE};
use crate::report::EvalRecord;
use crate::rundir::read_manifest;
use crate::{embio, Result};

/// File name of the evaluation report inside a run directory.
pub const REPORT_FILE: &str = "report.json";
/// The precision cutoffs every evaluation reports.
pub const EVAL_KS: [usize; 3] = [1, 5, 10];

#[derive(Debug, clap::Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub emb: EmbeddingArgs,

    /// Trained run directory (model and manifest).
    #[arg(long, value_name = "DIR")]
    pub run_dir: PathBuf,

    /// Gold dictionary of `src tgt` token pairs.
    #[arg(long, value_name = "FILE")]
    pub eval_dict: PathBuf,

    /// Where to write the JSON report (default: RUN_DIR/report.json).
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,

    /// Override the CSLS neighbourhood size from the run config.
    #[arg(long, value_name = "K")]
    pub csls_k: Option<usize>,
}

pub fn run(args: &EvaluateArgs) -> Result<()> {
    existing_dir(&args.run_dir, "run directory")?;
    let manifest = read_manifest(&args.run_dir)?;
    let mut patch = manifest.config;
    if let Some(k) = args.csls_k {
        patch.csls_k = Some(k);
    }

    let spaces = load_spaces(&args.emb, effective_max_vocab(args.emb.max_vocab, &patch))?;
    let config = patch.resolve(spaces.src.dim())?;
    let map = load_trained_map(&args.run_dir.join(MODEL_FILE), &config)?;

    let gold = embio::load_dictionary(&args.eval_dict, &spaces.src, &spaces.tgt)?;
    let record = evaluate_map(
        &map,
        map.kind(),
        &spaces.src,
        &spaces.tgt,
        &gold.dict,
        gold.skipped_oov,
        config.scoring(),
    )?;

    print!("{}", record.render());
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| args.run_dir.join(REPORT_FILE));
    write_json(&report_path, &record)?;
    println!("wrote {}", report_path.display());
    Ok(())
}

/// Core of the command, shared with `ablate`: scores a map against a
/// gold dictionary at the standard cutoffs.
pub fn evaluate_map(
    map: &dyn TranslationMap,
    kind: &str,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    gold: &SeedDictionary,
    oov: usize,
    opts: ScoringOptions,
) -> Result<EvalRecord> {
    let report = precision_at_k(map, src, tgt, gold, &EVAL_KS, opts, oov)?;
    Ok(EvalRecord::new(&report, src, tgt, kind, opts.csls_k))
}

/// Convenience for tests and ablations: evaluate a run directory with
/// everything already in memory except the model.
pub fn evaluate_run_dir(
    run_dir: &Path,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    gold: &SeedDictionary,
    oov: usize,
    opts: ScoringOptions,
) -> Result<EvalRecord> {
    let manifest = read_manifest(run_dir)?;
    let config = manifest.config.resolve(src.dim())?;
    let map = load_trained_map(&run_dir.join(MODEL_FILE), &config)?;
    evaluate_map(&map, map.kind(), src, tgt, gold, oov, opts)
}
