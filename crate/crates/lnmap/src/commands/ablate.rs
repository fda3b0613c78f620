//! `lnmap ablate`: train and evaluate the six standard model variants on
//! one dataset, reporting a comparison table.

use std::path::PathBuf;

use crate::commands::evaluate::evaluate_run_dir;
use crate::commands::train::{train_into_dir, PretrainSource};
use crate::commands::{load_spaces, EmbeddingArgs, HyperArgs, LoadedSpaces};
use crate::config::ConfigPatch;
use crate::persist::write_json;
use crate::report::{AblationRecord, AblationRow};
use crate::rundir::{ensure_dir, input_record};
use crate::{embio, CliError, Result};

#[derive(Debug, clap::Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub emb: EmbeddingArgs,

    #[command(flatten)]
    pub hyper: HyperArgs,

    /// Seed dictionary of `src tgt` token pairs.
    #[arg(long, value_name = "FILE")]
    pub dict: PathBuf,

    /// Gold dictionary for scoring each variant.
    #[arg(long, value_name = "FILE")]
    pub eval_dict: PathBuf,

    /// Directory receiving one run subdirectory per variant.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

/// The fixed variant order of every ablation table.
fn variants() -> [(&'static str, ConfigPatch); 6] {
    let base = ConfigPatch::default;
    [
        ("full", base()),
        (
            "no-rec",
            ConfigPatch {
                no_rec: Some(true),
                ..base()
            },
        ),
        (
            "no-bt",
            ConfigPatch {
                no_bt: Some(true),
                ..base()
            },
        ),
        (
            "linear-mapper",
            ConfigPatch {
                linear_mapper: Some(true),
                ..base()
            },
        ),
        (
            "procrustes",
            ConfigPatch {
                procrustes: Some(true),
                ..base()
            },
        ),
        (
            "linear-ae",
            ConfigPatch {
                linear_ae: Some(true),
                ..base()
            },
        ),
    ]
}

pub fn run(args: &AblateArgs) -> Result<()> {
    let base = args.hyper.resolve_patch(args.emb.max_vocab)?;
    let spaces = load_spaces(&args.emb, base.max_vocab)?;
    let mut records = spaces.records.clone();
    records.push(input_record("dict", &args.dict)?);
    records.push(input_record("eval-dict", &args.eval_dict)?);

    let dict = embio::load_dictionary(&args.dict, &spaces.src, &spaces.tgt)?.dict;
    let gold = embio::load_dictionary(&args.eval_dict, &spaces.src, &spaces.tgt)?;
    ensure_dir(&args.out_dir)?;

    let mut rows = Vec::new();
    for (name, variant) in variants() {
        let patch = base.clone().overlay(&variant);
        let sub_dir = args.out_dir.join(name);
        let row = run_variant(name, &patch, &spaces, &records, &dict, &gold, &sub_dir);
        match row {
            Ok(row) => rows.push(row),
            Err(err) => {
                log::warn!("variant {name} failed: {err}");
                rows.push(AblationRow {
                    variant: name.to_string(),
                    status: "failed".to_string(),
                    error: Some(err.to_string()),
                    p1: None,
                    p5: None,
                    p10: None,
                    iterations: None,
                });
            }
        }
    }

    let record = AblationRecord::new(rows);
    let markdown = record.render_markdown();
    write_json(&args.out_dir.join("ablation.json"), &record)?;
    std::fs::write(args.out_dir.join("ablation.md"), &markdown)
        .map_err(|e| CliError::file(&args.out_dir.join("ablation.md"), e))?;
    print!("{markdown}");

    if record.rows.iter().all(|r| r.status == "failed") {
        return Err(CliError::Numeric(
            "every ablation variant failed; see the table for per-variant errors".to_string(),
        ));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_variant(
    name: &str,
    patch: &ConfigPatch,
    spaces: &LoadedSpaces,
    records: &[crate::rundir::InputRecord],
    dict: &lnmap_core::embedding::SeedDictionary,
    gold: &crate::embio::DictionaryLoad,
    sub_dir: &std::path::Path,
) -> Result<AblationRow> {
    let config = patch.resolve(spaces.src.dim())?;
    let pretrain = if config.procrustes_only {
        None
    } else {
        Some(PretrainSource::Inline)
    };
    let run_spaces = LoadedSpaces {
        src: spaces.src.clone(),
        tgt: spaces.tgt.clone(),
        records: records.to_vec(),
    };
    let summary = train_into_dir(
        &config,
        patch.max_vocab,
        run_spaces,
        dict.clone(),
        sub_dir,
        pretrain,
    )?;
    let eval = evaluate_run_dir(
        sub_dir,
        &spaces.src,
        &spaces.tgt,
        &gold.dict,
        gold.skipped_oov,
        config.scoring(),
    )?;
    let p = |k: &str| eval.precision.get(k).copied();
    Ok(AblationRow {
        variant: name.to_string(),
        status: "ok".to_string(),
        error: None,
        p1: p("1"),
        p5: p("5"),
        p10: p("10"),
        iterations: Some(summary.iterations),
    })
}
