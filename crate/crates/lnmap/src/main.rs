//! The `lnmap` binary: bilingual lexicon induction with non-linear
//! latent-space mapping.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numeric failure,
//! 4 internal error.

use clap::Parser;

use lnmap::commands::{ablate, evaluate, induce, pretrain, synth, train};

#[derive(Parser)]
#[command(
    name = "lnmap",
    version,
    about = "Bilingual lexicon induction via latent-space mapping",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Train the per-language autoencoders and save their weights.
    Pretrain(pretrain::PretrainArgs),
    /// Self-train the cross-lingual mapping from a seed dictionary.
    Train(train::TrainArgs),
    /// Score a trained run with precision@k against a gold dictionary.
    Evaluate(evaluate::EvaluateArgs),
    /// Export the dictionary a trained run induces.
    Induce(induce::InduceArgs),
    /// Train and compare the six standard model variants.
    Ablate(ablate::AblateArgs),
    /// Generate synthetic benchmark datasets.
    Synth(synth::SynthArgs),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();

    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Pretrain(args) => pretrain::run(args),
        Command::Train(args) => train::run(args),
        Command::Evaluate(args) => evaluate::run(args),
        Command::Induce(args) => induce::run(args),
        Command::Ablate(args) => ablate::run(args),
        Command::Synth(args) => synth::run(args),
    };

    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
