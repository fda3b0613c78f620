//! `lnmap synth`: generate synthetic benchmark datasets with known gold
//! dictionaries.

use std::path::PathBuf;

use crate::rundir::ensure_dir;
use crate::synth::{orthogonal_pair, warped_pair, write_fixture};
use crate::Result;

/// Which generator to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FixtureKind {
    /// Target space is a planted rotation of the source (plus noise).
    Orthogonal,
    /// Target space is a fixed random invertible non-linear warp.
    Warp,
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    /// Generator to use.
    #[arg(long, value_enum)]
    pub kind: FixtureKind,

    /// Vocabulary size of both languages.
    #[arg(long, default_value_t = 2000, value_name = "N")]
    pub words: usize,

    /// Embedding dimensionality.
    #[arg(long, default_value_t = 50, value_name = "D")]
    pub dim: usize,

    /// Scale of the Gaussian noise added to target vectors.
    #[arg(long, default_value_t = 0.0, value_name = "SIGMA")]
    pub noise: f64,

    /// Strength of the non-linear warp (warp fixtures only).
    #[arg(long, default_value_t = 4.0, value_name = "GAIN")]
    pub warp_gain: f64,

    /// Intrinsic dimensionality of the source manifold (warp fixtures
    /// only, defaults to the ambient dimension).
    #[arg(long, value_name = "K")]
    pub intrinsic_dim: Option<usize>,

    /// Number of gold pairs in the seed dictionary (rows 0..N).
    #[arg(long, default_value_t = 500, value_name = "N")]
    pub seed_pairs: usize,

    /// Number of held-out gold pairs in the evaluation dictionary.
    #[arg(long, default_value_t = 500, value_name = "N")]
    pub eval_pairs: usize,

    /// Generator random seed.
    #[arg(long, default_value_t = 1, value_name = "SEED")]
    pub seed: u64,

    /// Directory receiving src.vec, tgt.vec, seed.dict and eval.dict.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let pair = match args.kind {
        FixtureKind::Orthogonal => orthogonal_pair(args.words, args.dim, args.noise, args.seed)?.0,
        FixtureKind::Warp => warped_pair(
            args.words,
            args.dim,
            args.intrinsic_dim.unwrap_or(args.dim),
            args.warp_gain,
            args.noise,
            args.seed,
        )?,
    };
    ensure_dir(&args.out_dir)?;
    let files = write_fixture(&args.out_dir, &pair, args.seed_pairs, args.eval_pairs)?;
    println!(
        "wrote {} words of dimension {} to {}",
        args.words,
        args.dim,
        args.out_dir.display()
    );
    for path in [files.src_emb, files.tgt_emb, files.seed_dict, files.eval_dict] {
        println!("  {}", path.display());
    }
    Ok(())
}
