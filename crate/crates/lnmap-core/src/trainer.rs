//! Training orchestration: autoencoder pretraining, the iterative
//! self-training loop with dictionary growth, and convergence detection.
//!
//! One outer iteration trains the mappers for a fixed number of epochs on
//! the current dictionary, induces a fresh dictionary by mutual-nearest-
//! neighbour CSLS over the frequent-word pools, then merges the top slice
//! of it back into the training dictionary. The loop stops when the mean
//! CSLS score of the freshly selected pairs stabilises, or at a hard
//! iteration cap.
//!
//! Each mini-batch applies up to three separate SGD steps, one per loss
//! term: the mapping step (forward mapper and source encoder), the
//! back-translation step (both mappers), and the reconstruction step (the
//! full encode-map-decode chains). Freezing is structural: a loss only
//! backpropagates through the nets it is allowed to move, so the
//! optimizer can always be applied to the whole model.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::baseline::{procrustes_fit, OrthogonalMap};
use crate::embedding::{EmbeddingSpace, SeedDictionary};
use crate::error::Error;
use crate::model::{LatentMapModel, ModelDims};
use crate::retrieval::{codes_blockwise, induce_dictionary, InducedPair, TranslationMap};
use crate::tensor::SgdOptimizer;
use crate::Result;

/// Everything that controls a training run. Defaults follow the
/// full-scale recipe; tests and the synthetic benchmarks shrink them.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainingConfig {
    pub dims: ModelDims,
    /// Mini-batch size for both pretraining and mapper training.
    pub batch_size: usize,
    /// Base SGD learning rate.
    pub lr: f64,
    /// Multiplicative learning-rate decay, applied once per outer
    /// iteration.
    pub lr_decay: f64,
    /// Epochs of autoencoder pretraining per language.
    pub ae_epochs: usize,
    /// Mapper training epochs inside each outer iteration.
    pub map_epochs_per_iter: usize,
    /// Dictionary growth increment: iteration `t` keeps the top
    /// `t * dict_increment` induced pairs.
    pub dict_increment: usize,
    /// Frequent-word pool size used for dictionary induction.
    pub induction_pool: usize,
    /// Autoencoders pretrain on at most this many frequent words.
    pub pretrain_vocab: usize,
    /// Stop when the mean CSLS of freshly selected pairs moves less than
    /// this between consecutive iterations.
    pub convergence_eps: f64,
    /// Hard cap on outer iterations.
    pub max_outer_iters: usize,
    pub rng_seed: u64,
    /// Weight of the back-translation step.
    pub lambda_bt: f64,
    /// Weight of the reconstruction step.
    pub lambda_rec: f64,
    /// CSLS neighbourhood size for induction and evaluation.
    pub csls_k: usize,
    /// Renormalise latent codes to unit length before scoring.
    pub renorm_codes: bool,
    /// Variant flags for ablation runs.
    pub linear_ae: bool,
    pub linear_mapper: bool,
    pub procrustes_only: bool,
    pub no_bt: bool,
    pub no_rec: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            dims: ModelDims::default(),
            batch_size: 128,
            lr: 1e-4,
            lr_decay: 0.95,
            ae_epochs: 25,
            map_epochs_per_iter: 100,
            dict_increment: 2000,
            induction_pool: 15_000,
            pretrain_vocab: 200_000,
            convergence_eps: 1e-6,
            max_outer_iters: 50,
            rng_seed: 1,
            lambda_bt: 1.0,
            lambda_rec: 1.0,
            csls_k: 10,
            renorm_codes: true,
            linear_ae: false,
            linear_mapper: false,
            procrustes_only: false,
            no_bt: false,
            no_rec: false,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        // dict_increment may be zero: the schedule then never grows the
        // dictionary and the run degenerates to training on the seed.
        for (what, value) in [
            ("batch_size", self.batch_size),
            ("map_epochs_per_iter", self.map_epochs_per_iter),
            ("induction_pool", self.induction_pool),
            ("pretrain_vocab", self.pretrain_vocab),
            ("max_outer_iters", self.max_outer_iters),
            ("csls_k", self.csls_k),
        ] {
            if value == 0 {
                return Err(Error::InvalidDimension { what, value });
            }
        }
        for (what, value) in [
            ("lr", self.lr),
            ("lambda_bt", self.lambda_bt),
            ("lambda_rec", self.lambda_rec),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::NonFinite {
                    what,
                    context: alloc::string::String::from("TrainingConfig"),
                });
            }
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::NonFinite {
                what: "lr_decay",
                context: alloc::string::String::from("TrainingConfig"),
            });
        }
        if !(self.convergence_eps > 0.0 && self.convergence_eps.is_finite()) {
            return Err(Error::NonFinite {
                what: "convergence_eps",
                context: alloc::string::String::from("TrainingConfig"),
            });
        }
        if self.csls_k > self.induction_pool {
            return Err(Error::PoolTooSmall {
                csls_k: self.csls_k,
                pool: self.induction_pool,
            });
        }
        Ok(())
    }

    /// Scoring options implied by this config, shared by induction and
    /// evaluation.
    pub fn scoring(&self) -> crate::retrieval::ScoringOptions {
        crate::retrieval::ScoringOptions {
            csls_k: self.csls_k,
            renorm_codes: self.renorm_codes,
        }
    }
}

/// Number of induced pairs kept at outer iteration `iteration` (1-based):
/// `min(iteration * increment, available)`.
pub fn dictionary_budget(iteration: usize, increment: usize, available: usize) -> usize {
    available.min(iteration.saturating_mul(increment))
}

/// Per-epoch mean batch losses from autoencoder pretraining.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PretrainReport {
    pub src_losses: Vec<f64>,
    pub tgt_losses: Vec<f64>,
}

/// Bookkeeping for one outer self-training iteration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationStats {
    /// 1-based outer iteration number.
    pub iteration: usize,
    /// Mean per-batch losses over the iteration's epochs; a term skipped
    /// by an ablation flag reports 0.
    pub loss_map: f64,
    pub loss_bt: f64,
    pub loss_rec: f64,
    /// Mean CSLS score of the freshly selected dictionary slice; the
    /// convergence criterion watches its change between iterations.
    pub avg_similarity: f64,
    /// Mutual-nearest-neighbour pairs available from induction.
    pub induced: usize,
    /// Pairs actually selected this iteration (the schedule budget).
    pub new_pairs: usize,
    /// Training dictionary size after merging with the seed pairs.
    pub dict_size: usize,
    /// Learning rate in effect during this iteration's epochs.
    pub lr_effective: f64,
    /// Optimisation steps taken (batches times active loss terms).
    pub batches: usize,
}

/// Mutable run state, carried across iterations and checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingState {
    /// Completed outer iterations.
    pub outer_iter: usize,
    /// The seed dictionary, kept verbatim so merges never lose it.
    pub dict_orig: SeedDictionary,
    /// Current training dictionary: seed pairs first, then induced ones.
    pub dict_current: SeedDictionary,
    /// Convergence reference from the previous iteration.
    pub last_avg_similarity: Option<f64>,
    pub converged: bool,
    pub history: Vec<IterationStats>,
}

/// Why [`SelfTrainer::run`] stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOutcome {
    pub converged: bool,
    pub iterations: usize,
}

/// Drives the whole procedure: owns the model, the optimizer, the rng,
/// the two embedding spaces, and the evolving dictionary.
pub struct SelfTrainer {
    config: TrainingConfig,
    src_space: EmbeddingSpace,
    tgt_space: EmbeddingSpace,
    model: LatentMapModel,
    optimizer: SgdOptimizer,
    rng: ChaCha20Rng,
    state: TrainingState,
}

impl SelfTrainer {
    /// Fresh run: initialises the model from `config.rng_seed` and starts
    /// from the seed dictionary.
    pub fn new(
        config: TrainingConfig,
        src_space: EmbeddingSpace,
        tgt_space: EmbeddingSpace,
        seed_dict: SeedDictionary,
    ) -> Result<Self> {
        config.validate()?;
        check_spaces(&config, &src_space, &tgt_space)?;
        check_dict(&seed_dict, &src_space, &tgt_space, "seed dictionary")?;
        let mut rng = ChaCha20Rng::seed_from_u64(config.rng_seed);
        let model = LatentMapModel::new(
            config.dims,
            config.linear_ae,
            config.linear_mapper,
            &mut rng,
        )?;
        let optimizer = SgdOptimizer::new(config.lr, config.lr_decay, 1)?;
        let state = TrainingState {
            outer_iter: 0,
            dict_orig: seed_dict.clone(),
            dict_current: seed_dict,
            last_avg_similarity: None,
            converged: false,
            history: Vec::new(),
        };
        Ok(SelfTrainer {
            config,
            src_space,
            tgt_space,
            model,
            optimizer,
            rng,
            state,
        })
    }

    /// Rebuilds a trainer from checkpointed pieces. The rng is restored
    /// to the exact stream and word position, and the decay clock is
    /// derived from the completed iteration count, so the continuation
    /// produces the same numbers as an uninterrupted run.
    pub fn from_parts(
        config: TrainingConfig,
        src_space: EmbeddingSpace,
        tgt_space: EmbeddingSpace,
        model: LatentMapModel,
        state: TrainingState,
        rng_stream: u64,
        rng_word_pos: u128,
    ) -> Result<Self> {
        config.validate()?;
        check_spaces(&config, &src_space, &tgt_space)?;
        check_dict(&state.dict_orig, &src_space, &tgt_space, "seed dictionary")?;
        check_dict(&state.dict_current, &src_space, &tgt_space, "training dictionary")?;
        let mut rng = ChaCha20Rng::seed_from_u64(config.rng_seed);
        rng.set_stream(rng_stream);
        rng.set_word_pos(rng_word_pos);
        let mut optimizer = SgdOptimizer::new(config.lr, config.lr_decay, 1)?;
        optimizer.set_step_count(state.outer_iter);
        Ok(SelfTrainer {
            config,
            src_space,
            tgt_space,
            model,
            optimizer,
            rng,
            state,
        })
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    /// Mutable model access, for installing externally pretrained
    /// autoencoder weights before the first iteration.
    pub fn model_mut(&mut self) -> &mut LatentMapModel {
        &mut self.model
    }

    pub fn model(&self) -> &LatentMapModel {
        &self.model
    }

    pub fn state(&self) -> &TrainingState {
        &self.state
    }

    pub fn src_space(&self) -> &EmbeddingSpace {
        &self.src_space
    }

    pub fn tgt_space(&self) -> &EmbeddingSpace {
        &self.tgt_space
    }

    /// Current rng coordinates `(stream, word position)` for
    /// checkpointing.
    pub fn rng_position(&self) -> (u64, u128) {
        (self.rng.get_stream(), self.rng.get_word_pos())
    }

    pub fn into_model(self) -> LatentMapModel {
        self.model
    }

    /// Trains both autoencoders on their most frequent rows, source side
    /// first, each for `ae_epochs` epochs of shuffled mini-batches.
    pub fn pretrain(&mut self) -> Result<PretrainReport> {
        pretrain_autoencoders(
            &mut self.model,
            &self.src_space,
            &self.tgt_space,
            &self.config,
            &mut self.rng,
        )
    }

    /// Runs one outer iteration: mapper epochs on the current dictionary,
    /// dictionary induction, schedule-limited merge, convergence check,
    /// then the learning-rate decay tick.
    pub fn run_iteration(&mut self) -> Result<IterationStats> {
        // Model init and pretraining consume the rng on stream 0; the
        // self-training phase starts stream 1 from position zero, so its
        // randomness does not depend on how much of stream 0 pretraining
        // consumed (or whether it ran in this process at all).
        if self.state.outer_iter == 0 {
            self.rng.set_stream(1);
            self.rng.set_word_pos(0);
        }
        let iteration = self.state.outer_iter + 1;
        let lr_effective = self.optimizer.effective_lr();

        let pairs: Vec<(usize, usize)> = self.state.dict_current.pairs().to_vec();
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        let mut loss_map = 0.0;
        let mut loss_bt = 0.0;
        let mut loss_rec = 0.0;
        let mut batch_count = 0usize;
        let mut step_count = 0usize;
        for _ in 0..self.config.map_epochs_per_iter {
            order.shuffle(&mut self.rng);
            for chunk in order.chunks(self.config.batch_size) {
                let src_rows: Vec<usize> = chunk.iter().map(|&i| pairs[i].0).collect();
                let tgt_rows: Vec<usize> = chunk.iter().map(|&i| pairs[i].1).collect();
                let x = self.src_space.vectors().gather_rows(&src_rows)?;
                let y = self.tgt_space.vectors().gather_rows(&tgt_rows)?;

                loss_map += self.model.mapping_loss(&x, &y)?;
                self.optimizer.apply(&mut self.model)?;
                step_count += 1;
                if !self.config.no_bt {
                    loss_bt += self.model.backtranslation_loss(&x, &y, true)?;
                    self.optimizer
                        .apply_scaled(&mut self.model, self.config.lambda_bt)?;
                    step_count += 1;
                }
                if !self.config.no_rec {
                    loss_rec += self.model.reconstruction_loss(&x, &y, true)?;
                    self.optimizer
                        .apply_scaled(&mut self.model, self.config.lambda_rec)?;
                    step_count += 1;
                }
                batch_count += 1;
            }
        }
        let denom = batch_count.max(1) as f64;

        let induced = self.induce()?;
        let stats = self.absorb_induced(
            iteration,
            induced,
            loss_map / denom,
            loss_bt / denom,
            loss_rec / denom,
            lr_effective,
            step_count,
        );
        self.state.history.push(stats.clone());
        Ok(stats)
    }

    /// Iterates until convergence or the iteration cap. `on_iteration`
    /// sees the model and state after every completed iteration and may
    /// persist them; its error aborts the run.
    pub fn run(
        &mut self,
        mut on_iteration: impl FnMut(&LatentMapModel, &TrainingState, &IterationStats) -> Result<()>,
    ) -> Result<RunOutcome> {
        while !self.state.converged && self.state.outer_iter < self.config.max_outer_iters {
            let stats = self.run_iteration()?;
            on_iteration(&self.model, &self.state, &stats)?;
        }
        Ok(RunOutcome {
            converged: self.state.converged,
            iterations: self.state.outer_iter,
        })
    }

    /// Mutual-nearest-neighbour induction over the frequent-word pools,
    /// scored on the current model's latent codes.
    fn induce(&self) -> Result<Vec<InducedPair>> {
        let src_pool = self
            .src_space
            .prefix_rows(self.config.induction_pool.min(self.src_space.len()));
        let tgt_pool = self
            .tgt_space
            .prefix_rows(self.config.induction_pool.min(self.tgt_space.len()));
        let mut src_codes = codes_blockwise(&src_pool, |b| self.model.map_source(b))?;
        let mut tgt_codes = codes_blockwise(&tgt_pool, |b| self.model.embed_target(b))?;
        if self.config.renorm_codes {
            src_codes.renormalize_rows("mapped source code")?;
            tgt_codes.renormalize_rows("target code")?;
        }
        induce_dictionary(&src_codes, &tgt_codes, self.config.csls_k)
    }

    /// Applies the growth schedule to freshly induced pairs, merges them
    /// into the training dictionary, updates the convergence state, and
    /// advances the decay clock.
    #[allow(clippy::too_many_arguments)]
    fn absorb_induced(
        &mut self,
        iteration: usize,
        induced: Vec<InducedPair>,
        loss_map: f64,
        loss_bt: f64,
        loss_rec: f64,
        lr_effective: f64,
        batches: usize,
    ) -> IterationStats {
        let budget = dictionary_budget(iteration, self.config.dict_increment, induced.len());
        let selected = &induced[..budget];
        if selected.is_empty() {
            log::warn!("iteration {iteration}: induction produced no pairs, keeping seed dictionary");
        }
        let avg_similarity = if selected.is_empty() {
            0.0
        } else {
            selected.iter().map(|p| p.score).sum::<f64>() / selected.len() as f64
        };
        let new_pairs: Vec<(usize, usize)> = selected.iter().map(|p| (p.src, p.tgt)).collect();
        self.state.dict_current = self.state.dict_orig.union(&new_pairs);

        if let Some(prev) = self.state.last_avg_similarity {
            if (avg_similarity - prev).abs() < self.config.convergence_eps {
                self.state.converged = true;
            }
        }
        self.state.last_avg_similarity = Some(avg_similarity);
        self.state.outer_iter = iteration;
        self.optimizer.tick();

        IterationStats {
            iteration,
            loss_map,
            loss_bt,
            loss_rec,
            avg_similarity,
            induced: induced.len(),
            new_pairs: new_pairs.len(),
            dict_size: self.state.dict_current.len(),
            lr_effective,
            batches,
        }
    }
}

fn check_spaces(
    config: &TrainingConfig,
    src_space: &EmbeddingSpace,
    tgt_space: &EmbeddingSpace,
) -> Result<()> {
    for (what, space) in [("source", src_space), ("target", tgt_space)] {
        if space.dim() != config.dims.input_dim {
            return Err(Error::ShapeMismatch {
                op: "trainer embedding dimension",
                left: (if what == "source" { 0 } else { 1 }, space.dim()),
                right: (0, config.dims.input_dim),
            });
        }
        if space.is_empty() {
            return Err(Error::InvalidDimension {
                what: "embedding space rows",
                value: 0,
            });
        }
    }
    Ok(())
}

fn check_dict(
    dict: &SeedDictionary,
    src_space: &EmbeddingSpace,
    tgt_space: &EmbeddingSpace,
    context: &'static str,
) -> Result<()> {
    if dict.is_empty() {
        return Err(Error::EmptyDictionary { context });
    }
    for &(s, t) in dict.pairs() {
        if s >= src_space.len() {
            return Err(Error::IndexOutOfRange {
                what: "dictionary source row",
                index: s,
                size: src_space.len(),
            });
        }
        if t >= tgt_space.len() {
            return Err(Error::IndexOutOfRange {
                what: "dictionary target row",
                index: t,
                size: tgt_space.len(),
            });
        }
    }
    Ok(())
}

/// Trains both autoencoders of `model` on their spaces' most frequent
/// rows, source side first, each for `ae_epochs` epochs of shuffled
/// mini-batches at the undecayed learning rate. Standalone so that
/// pretraining does not require a seed dictionary.
pub fn pretrain_autoencoders(
    model: &mut LatentMapModel,
    src_space: &EmbeddingSpace,
    tgt_space: &EmbeddingSpace,
    config: &TrainingConfig,
    rng: &mut ChaCha20Rng,
) -> Result<PretrainReport> {
    config.validate()?;
    check_spaces(config, src_space, tgt_space)?;
    let optimizer = SgdOptimizer::new(config.lr, config.lr_decay, 1)?;
    let src_losses = pretrain_one_side(model, true, src_space, config, &optimizer, rng)?;
    let tgt_losses = pretrain_one_side(model, false, tgt_space, config, &optimizer, rng)?;
    Ok(PretrainReport {
        src_losses,
        tgt_losses,
    })
}

/// One autoencoder's pretraining pass; returns the per-epoch mean batch
/// loss curve with exactly `ae_epochs` entries.
fn pretrain_one_side(
    model: &mut LatentMapModel,
    source_side: bool,
    space: &EmbeddingSpace,
    config: &TrainingConfig,
    optimizer: &SgdOptimizer,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<f64>> {
    let rows = config.pretrain_vocab.min(space.len());
    let mut order: Vec<usize> = (0..rows).collect();
    let mut curve = Vec::with_capacity(config.ae_epochs);
    for epoch in 0..config.ae_epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch = space.vectors().gather_rows(chunk)?;
            let ae = if source_side {
                model.ae_src_mut()
            } else {
                model.ae_tgt_mut()
            };
            let loss = ae.pretrain_loss(&batch)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    what: "autoencoder loss",
                    context: alloc::format!("pretraining epoch {epoch}"),
                });
            }
            optimizer.apply(ae.encoder_mut())?;
            optimizer.apply(ae.decoder_mut())?;
            total += loss;
            batches += 1;
        }
        curve.push(total / batches.max(1) as f64);
    }
    Ok(curve)
}

/// The linear baseline run through the same self-training schedule: each
/// iteration refits the orthogonal map on the current dictionary in
/// embedding space, then induces and grows the dictionary exactly like
/// the non-linear path. Fully deterministic, no rng involved.
pub fn procrustes_self_training(
    config: &TrainingConfig,
    src_space: &EmbeddingSpace,
    tgt_space: &EmbeddingSpace,
    seed_dict: &SeedDictionary,
) -> Result<(OrthogonalMap, Vec<IterationStats>)> {
    config.validate()?;
    if src_space.dim() != tgt_space.dim() {
        return Err(Error::ShapeMismatch {
            op: "procrustes_self_training",
            left: (src_space.len(), src_space.dim()),
            right: (tgt_space.len(), tgt_space.dim()),
        });
    }
    check_dict(seed_dict, src_space, tgt_space, "seed dictionary")?;

    let mut dict_current = seed_dict.clone();
    let mut last_avg: Option<f64> = None;
    let mut history = Vec::new();
    let mut map = None;
    for iteration in 1..=config.max_outer_iters {
        let (src_rows, tgt_rows): (Vec<usize>, Vec<usize>) =
            dict_current.pairs().iter().copied().unzip();
        let x = src_space.vectors().gather_rows(&src_rows)?;
        let y = tgt_space.vectors().gather_rows(&tgt_rows)?;
        let fitted = procrustes_fit(&x, &y)?;
        let loss_map = fitted.residual(&x, &y)?;

        let src_pool = src_space.prefix_rows(config.induction_pool.min(src_space.len()));
        let tgt_pool = tgt_space.prefix_rows(config.induction_pool.min(tgt_space.len()));
        let mut src_codes = fitted.map_source(&src_pool)?;
        let mut tgt_codes = fitted.embed_target(&tgt_pool)?;
        if config.renorm_codes {
            src_codes.renormalize_rows("mapped source row")?;
            tgt_codes.renormalize_rows("target row")?;
        }
        let induced = induce_dictionary(&src_codes, &tgt_codes, config.csls_k)?;

        let budget = dictionary_budget(iteration, config.dict_increment, induced.len());
        let selected = &induced[..budget];
        let avg_similarity = if selected.is_empty() {
            0.0
        } else {
            selected.iter().map(|p| p.score).sum::<f64>() / selected.len() as f64
        };
        let new_pairs: Vec<(usize, usize)> = selected.iter().map(|p| (p.src, p.tgt)).collect();
        dict_current = seed_dict.union(&new_pairs);

        history.push(IterationStats {
            iteration,
            loss_map,
            loss_bt: 0.0,
            loss_rec: 0.0,
            avg_similarity,
            induced: induced.len(),
            new_pairs: new_pairs.len(),
            dict_size: dict_current.len(),
            lr_effective: 0.0,
            batches: 0,
        });

        let converged = match last_avg {
            Some(prev) => (avg_similarity - prev).abs() < config.convergence_eps,
            None => false,
        };
        last_avg = Some(avg_similarity);
        map = Some(fitted);
        if converged {
            break;
        }
    }
    // One final refit so the returned map reflects the last dictionary.
    let (src_rows, tgt_rows): (Vec<usize>, Vec<usize>) =
        dict_current.pairs().iter().copied().unzip();
    let x = src_space.vectors().gather_rows(&src_rows)?;
    let y = tgt_space.vectors().gather_rows(&tgt_rows)?;
    let final_map = procrustes_fit(&x, &y)?;
    let _ = map;
    Ok((final_map, history))
}
