//! Binary model files and JSON training checkpoints.
//!
//! Model files hold the magic-prefixed tensor payload from
//! [`lnmap_core::tensor::params`]. A checkpoint is a pair of files in a
//! run directory: `model.bin` with the weights and `checkpoint.json` with
//! everything else a [`SelfTrainer`] needs to resume bit-for-bit.

use std::path::Path;

use lnmap_core::baseline::OrthogonalMap;
use lnmap_core::embedding::EmbeddingSpace;
use lnmap_core::model::{Autoencoder, LatentMapModel, ModelDims};
use lnmap_core::retrieval::TranslationMap;
use lnmap_core::tensor::params::{
    decode_payload, encode_payload, export_tensors, import_tensors, NamedTensor,
};
use lnmap_core::tensor::DenseMatrix;
use lnmap_core::trainer::{IterationStats, SelfTrainer, TrainingConfig, TrainingState};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

/// File name of the weight payload inside a run directory.
pub const MODEL_FILE: &str = "model.bin";
/// File name of the resume state inside a run directory.
pub const CHECKPOINT_FILE: &str = "checkpoint.json";

/// Writes a tensor payload to `path`.
pub fn save_tensors(path: &Path, tensors: &[NamedTensor]) -> Result<()> {
    std::fs::write(path, encode_payload(tensors)).map_err(|e| CliError::file(path, e))
}

/// Reads a tensor payload from `path`.
pub fn load_tensors(path: &Path) -> Result<Vec<NamedTensor>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::file(path, e))?;
    decode_payload(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// One autoencoder's weights as a payload, encoder tensors prefixed
/// `enc.`, decoder tensors `dec.`.
pub fn pretrained_tensors(ae: &Autoencoder) -> Vec<NamedTensor> {
    let mut out = Vec::new();
    for (prefix, net) in [("enc", ae.encoder()), ("dec", ae.decoder())] {
        for mut t in export_tensors(net) {
            t.name = format!("{prefix}.{}", t.name);
            out.push(t);
        }
    }
    out
}

/// Loads a payload written by [`pretrained_tensors`] back into `ae`.
pub fn load_pretrained(path: &Path, ae: &mut Autoencoder) -> Result<()> {
    let tensors = load_tensors(path)?;
    let context = |e: lnmap_core::Error| CliError::Input(format!("{}: {e}", path.display()));
    let subset = |prefix: &str| {
        let want = format!("{prefix}.");
        tensors
            .iter()
            .filter(|t| t.name.starts_with(&want))
            .map(|t| NamedTensor {
                name: t.name[want.len()..].to_string(),
                dims: t.dims.clone(),
                values: t.values.clone(),
            })
            .collect::<Vec<NamedTensor>>()
    };
    import_tensors(ae.encoder_mut(), &subset("enc")).map_err(context)?;
    import_tensors(ae.decoder_mut(), &subset("dec")).map_err(context)?;
    Ok(())
}

/// A trained mapping of either kind, detected from the tensor names in a
/// model file.
#[derive(Debug)]
pub enum TrainedMap {
    Latent(LatentMapModel),
    Orthogonal(OrthogonalMap),
}

impl TrainedMap {
    pub fn kind(&self) -> &'static str {
        match self {
            TrainedMap::Latent(_) => "latent",
            TrainedMap::Orthogonal(_) => "procrustes",
        }
    }
}

impl TranslationMap for TrainedMap {
    fn map_source(&self, src_rows: &DenseMatrix) -> lnmap_core::Result<DenseMatrix> {
        match self {
            TrainedMap::Latent(m) => m.map_source(src_rows),
            TrainedMap::Orthogonal(m) => m.map_source(src_rows),
        }
    }

    fn embed_target(&self, tgt_rows: &DenseMatrix) -> lnmap_core::Result<DenseMatrix> {
        match self {
            TrainedMap::Latent(m) => m.embed_target(tgt_rows),
            TrainedMap::Orthogonal(m) => m.embed_target(tgt_rows),
        }
    }
}

/// Saves either kind of trained map as a model file.
pub fn save_trained_map(path: &Path, map: &TrainedMap) -> Result<()> {
    let tensors = match map {
        TrainedMap::Latent(m) => export_tensors(m),
        TrainedMap::Orthogonal(m) => m.to_tensors(),
    };
    save_tensors(path, &tensors)
}

/// Loads a model file, rebuilding the architecture that `config` and the
/// stored payload describe.
pub fn load_trained_map(path: &Path, config: &TrainingConfig) -> Result<TrainedMap> {
    let tensors = load_tensors(path)?;
    let context = |e: lnmap_core::Error| CliError::Input(format!("{}: {e}", path.display()));
    if tensors.iter().any(|t| t.name == "procrustes.W") {
        return Ok(TrainedMap::Orthogonal(
            OrthogonalMap::from_tensors(&tensors).map_err(context)?,
        ));
    }
    // Initialiser weights are fully overwritten by the import, so the rng
    // here is irrelevant; seed 0 keeps the construction deterministic.
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let mut model = LatentMapModel::new(
        config.dims,
        config.linear_ae,
        config.linear_mapper,
        &mut rng,
    )?;
    import_tensors(&mut model, &tensors).map_err(context)?;
    Ok(TrainedMap::Latent(model))
}

/// Resume state serialized next to the weights. Dictionaries are stored
/// as bare index pairs and re-validated against the spaces at load time.
#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub config: TrainingConfig,
    pub outer_iter: usize,
    pub dict_orig: Vec<(usize, usize)>,
    pub dict_current: Vec<(usize, usize)>,
    pub last_avg_similarity: Option<f64>,
    pub converged: bool,
    pub history: Vec<IterationStats>,
    pub rng_stream: u64,
    pub rng_word_pos: u128,
}

/// Current checkpoint schema.
pub const CHECKPOINT_SCHEMA: u32 = 1;

/// Writes `model.bin` and `checkpoint.json` for `trainer` into `dir`.
pub fn save_checkpoint(dir: &Path, trainer: &SelfTrainer) -> Result<()> {
    let state = trainer.state();
    let (rng_stream, rng_word_pos) = trainer.rng_position();
    let checkpoint = Checkpoint {
        schema_version: CHECKPOINT_SCHEMA,
        config: trainer.config().clone(),
        outer_iter: state.outer_iter,
        dict_orig: state.dict_orig.pairs().to_vec(),
        dict_current: state.dict_current.pairs().to_vec(),
        last_avg_similarity: state.last_avg_similarity,
        converged: state.converged,
        history: state.history.clone(),
        rng_stream,
        rng_word_pos,
    };
    save_tensors(&dir.join(MODEL_FILE), &export_tensors(trainer.model()))?;
    write_json(&dir.join(CHECKPOINT_FILE), &checkpoint)
}

/// Rebuilds a trainer from a checkpointed run directory and the two
/// embedding spaces it was training on.
pub fn load_checkpoint(
    dir: &Path,
    src_space: EmbeddingSpace,
    tgt_space: EmbeddingSpace,
) -> Result<SelfTrainer> {
    let path = dir.join(CHECKPOINT_FILE);
    let checkpoint: Checkpoint = read_json(&path)?;
    if checkpoint.schema_version != CHECKPOINT_SCHEMA {
        return Err(CliError::Input(format!(
            "{}: unsupported checkpoint schema {}",
            path.display(),
            checkpoint.schema_version
        )));
    }

    let map = load_trained_map(&dir.join(MODEL_FILE), &checkpoint.config)?;
    let model = match map {
        TrainedMap::Latent(m) => m,
        TrainedMap::Orthogonal(_) => {
            return Err(CliError::Input(format!(
                "{}: cannot resume from an orthogonal-map model file",
                dir.display()
            )))
        }
    };

    let dict = |pairs: Vec<(usize, usize)>| {
        lnmap_core::embedding::SeedDictionary::new(pairs, src_space.len(), tgt_space.len())
    };
    let state = TrainingState {
        outer_iter: checkpoint.outer_iter,
        dict_orig: dict(checkpoint.dict_orig)?,
        dict_current: dict(checkpoint.dict_current)?,
        last_avg_similarity: checkpoint.last_avg_similarity,
        converged: checkpoint.converged,
        history: checkpoint.history,
    };
    Ok(SelfTrainer::from_parts(
        checkpoint.config,
        src_space,
        tgt_space,
        model,
        state,
        checkpoint.rng_stream,
        checkpoint.rng_word_pos,
    )?)
}

/// Serializes `value` as pretty JSON at `path`.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Internal(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::file(path, e))
}

/// Reads JSON from `path` into `T`.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Rebuilds a model skeleton matching `config` (for loading pretrained
/// autoencoder payloads into before training).
pub fn model_skeleton(config: &TrainingConfig) -> Result<LatentMapModel> {
    let mut rng = ChaCha20Rng::seed_from_u64(config.rng_seed);
    Ok(LatentMapModel::new(
        config.dims,
        config.linear_ae,
        config.linear_mapper,
        &mut rng,
    )?)
}

/// Dimensions stated by an embedding pair, for config resolution.
pub fn dims_for(src: &EmbeddingSpace, latent_dim: usize, hidden_dim: usize) -> ModelDims {
    ModelDims {
        input_dim: src.dim(),
        hidden_dim,
        latent_dim,
        mapper_hidden: hidden_dim,
    }
}
