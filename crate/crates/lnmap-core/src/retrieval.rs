//! Cross-lingual retrieval: cosine and CSLS scoring, mutual-nearest-
//! neighbour dictionary induction, and precision@k evaluation.
//!
//! CSLS corrects cosine for hubness by subtracting each side's mean
//! similarity to its `csls_k` nearest neighbours on the other side:
//!
//! ```text
//! csls(x, y) = 2 cos(x, y) - r_src(x) - r_tgt(y)
//! ```
//!
//! where `r_src(x)` is the mean cosine of `x` to its `csls_k` nearest
//! candidates in the target pool and `r_tgt(y)` the mean cosine of `y` to
//! its `csls_k` nearest queries in the query pool.
//!
//! Scoring sweeps the candidate pool in row blocks, so nothing ever
//! materialises a full `queries x vocabulary` matrix except the explicit
//! [`csls_scores`] call, which is meant for small pools.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::embedding::{EmbeddingSpace, SeedDictionary};
use crate::error::Error;
use crate::tensor::DenseMatrix;
use crate::Result;

/// Rows processed per block when sweeping a candidate pool.
const BLOCK_ROWS: usize = 512;

/// Anything that places source rows and target rows into one comparable
/// space: the trained model maps through `M(E_src(x))` / `E_tgt(y)`, the
/// orthogonal baseline through `x W^T` / identity.
pub trait TranslationMap {
    /// Source embedding rows mapped into target-comparable coordinates.
    fn map_source(&self, src_rows: &DenseMatrix) -> Result<DenseMatrix>;

    /// Target embedding rows in those same coordinates.
    fn embed_target(&self, tgt_rows: &DenseMatrix) -> Result<DenseMatrix>;
}

impl TranslationMap for crate::model::LatentMapModel {
    fn map_source(&self, src_rows: &DenseMatrix) -> Result<DenseMatrix> {
        crate::model::LatentMapModel::map_source(self, src_rows)
    }

    fn embed_target(&self, tgt_rows: &DenseMatrix) -> Result<DenseMatrix> {
        crate::model::LatentMapModel::embed_target(self, tgt_rows)
    }
}

/// How codes are scored during induction and evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoringOptions {
    /// Neighbourhood size of the CSLS correction terms.
    pub csls_k: usize,
    /// Renormalise code rows to unit length before scoring.
    pub renorm_codes: bool,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        ScoringOptions {
            csls_k: 10,
            renorm_codes: true,
        }
    }
}

/// Pairwise cosine similarity, `queries x pool`. Rows need not be unit
/// length; zero rows are fatal and name the offending index.
pub fn cosine_matrix(queries: &DenseMatrix, pool: &DenseMatrix) -> Result<DenseMatrix> {
    if queries.cols() != pool.cols() {
        return Err(Error::ShapeMismatch {
            op: "cosine_matrix",
            left: queries.shape(),
            right: pool.shape(),
        });
    }
    let inv_q = inverse_norms(queries, "cosine query")?;
    let inv_p = inverse_norms(pool, "cosine pool")?;
    let mut out = queries.mul_transpose(pool)?;
    for (i, &qi) in inv_q.iter().enumerate() {
        for (v, &ip) in out.row_mut(i).iter_mut().zip(&inv_p) {
            *v *= qi * ip;
        }
    }
    Ok(out)
}

fn inverse_norms(m: &DenseMatrix, what: &'static str) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(m.rows());
    for i in 0..m.rows() {
        let n = crate::tensor::norm(m.row(i));
        if n < 1e-12 {
            return Err(Error::ZeroNormRow {
                row: i,
                token: alloc::string::String::from(what),
                norm: n,
            });
        }
        out.push(1.0 / n);
    }
    Ok(out)
}

/// A candidate pool prepared for CSLS scoring: unit-normalised rows plus
/// the precomputed `r_tgt` term of every candidate against a query pool.
#[derive(Debug, Clone)]
pub struct SimilarityIndex {
    targets: DenseMatrix,
    csls_k: usize,
    r_target: Vec<f64>,
}

impl SimilarityIndex {
    /// Builds the index over `targets`, precomputing each target's mean
    /// cosine to its `csls_k` nearest rows of `query_pool`. The index is
    /// only meaningful for ranking those same queries.
    pub fn build(targets: &DenseMatrix, query_pool: &DenseMatrix, csls_k: usize) -> Result<Self> {
        if csls_k == 0 {
            return Err(Error::InvalidDimension {
                what: "csls_k",
                value: 0,
            });
        }
        if csls_k > query_pool.rows() {
            return Err(Error::PoolTooSmall {
                csls_k,
                pool: query_pool.rows(),
            });
        }
        if targets.cols() != query_pool.cols() {
            return Err(Error::ShapeMismatch {
                op: "SimilarityIndex::build",
                left: targets.shape(),
                right: query_pool.shape(),
            });
        }
        let mut unit_targets = targets.clone();
        unit_targets.renormalize_rows("similarity index target")?;
        let mut unit_queries = query_pool.clone();
        unit_queries.renormalize_rows("similarity index query pool")?;

        // r_tgt per candidate: sweep candidates in blocks, take each
        // block-row's top csls_k cosines against the whole query pool.
        let mut r_target = Vec::with_capacity(unit_targets.rows());
        let mut start = 0;
        while start < unit_targets.rows() {
            let end = (start + BLOCK_ROWS).min(unit_targets.rows());
            let block = unit_targets.gather_rows(&(start..end).collect::<Vec<_>>())?;
            let cos = block.mul_transpose(&unit_queries)?;
            for i in 0..cos.rows() {
                let mut top = TopBuffer::new(csls_k);
                for (j, &c) in cos.row(i).iter().enumerate() {
                    top.push(c, j);
                }
                r_target.push(top.mean_score());
            }
            start = end;
        }
        Ok(SimilarityIndex {
            targets: unit_targets,
            csls_k,
            r_target,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.rows() == 0
    }

    pub fn csls_k(&self) -> usize {
        self.csls_k
    }

    pub fn r_target(&self) -> &[f64] {
        &self.r_target
    }

    pub fn targets(&self) -> &DenseMatrix {
        &self.targets
    }
}

/// Full CSLS score matrix, `queries x pool`. Materialises the whole
/// matrix; intended for modest query sets and pools.
pub fn csls_scores(queries: &DenseMatrix, index: &SimilarityIndex) -> Result<DenseMatrix> {
    if index.csls_k > index.targets.rows() {
        return Err(Error::PoolTooSmall {
            csls_k: index.csls_k,
            pool: index.targets.rows(),
        });
    }
    let mut cos = cosine_matrix(queries, &index.targets)?;
    for i in 0..cos.rows() {
        let row = cos.row_mut(i);
        let mut top = TopBuffer::new(index.csls_k);
        for (j, &c) in row.iter().enumerate() {
            top.push(c, j);
        }
        let r_src = top.mean_score();
        for (v, &rt) in row.iter_mut().zip(&index.r_target) {
            *v = 2.0 * *v - r_src - rt;
        }
    }
    Ok(cos)
}

/// One induced translation pair with its CSLS score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducedPair {
    pub src: usize,
    pub tgt: usize,
    pub score: f64,
}

/// Mutual-nearest-neighbour dictionary induction between two code pools.
///
/// A pair `(i, j)` is kept when `j` is the CSLS argmax of query `i` over
/// the target pool and `i` is the CSLS argmax of target `j` over the query
/// pool (ties broken by lowest index). Pairs come back sorted by score
/// descending, then by indices for determinism.
pub fn induce_dictionary(
    src_codes_mapped: &DenseMatrix,
    tgt_codes: &DenseMatrix,
    csls_k: usize,
) -> Result<Vec<InducedPair>> {
    if csls_k == 0 {
        return Err(Error::InvalidDimension {
            what: "csls_k",
            value: 0,
        });
    }
    if csls_k > src_codes_mapped.rows() || csls_k > tgt_codes.rows() {
        return Err(Error::PoolTooSmall {
            csls_k,
            pool: src_codes_mapped.rows().min(tgt_codes.rows()),
        });
    }
    if src_codes_mapped.cols() != tgt_codes.cols() {
        return Err(Error::ShapeMismatch {
            op: "induce_dictionary",
            left: src_codes_mapped.shape(),
            right: tgt_codes.shape(),
        });
    }

    let mut src = src_codes_mapped.clone();
    src.renormalize_rows("mapped source code")?;
    let mut tgt = tgt_codes.clone();
    tgt.renormalize_rows("target code")?;

    let (r_src, r_tgt) = csls_r_terms(&src, &tgt, csls_k)?;

    // Second sweep: argmax of the full CSLS score in both directions.
    let nq = src.rows();
    let nt = tgt.rows();
    let mut best_fwd: Vec<(f64, usize)> = vec![(f64::NEG_INFINITY, 0); nq];
    let mut best_bwd: Vec<(f64, usize)> = vec![(f64::NEG_INFINITY, 0); nt];
    let mut start = 0;
    while start < nt {
        let end = (start + BLOCK_ROWS).min(nt);
        let block = tgt.gather_rows(&(start..end).collect::<Vec<_>>())?;
        let cos = src.mul_transpose(&block)?;
        for i in 0..nq {
            let row = cos.row(i);
            for (off, &c) in row.iter().enumerate() {
                let j = start + off;
                let score = 2.0 * c - r_src[i] - r_tgt[j];
                if score > best_fwd[i].0 {
                    best_fwd[i] = (score, j);
                }
                if score > best_bwd[j].0 {
                    best_bwd[j] = (score, i);
                }
            }
        }
        start = end;
    }

    let mut pairs = Vec::new();
    for (i, &(score, j)) in best_fwd.iter().enumerate() {
        if best_bwd[j].1 == i {
            pairs.push(InducedPair { src: i, tgt: j, score });
        }
    }
    pairs.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.src.cmp(&b.src))
            .then(a.tgt.cmp(&b.tgt))
    });
    Ok(pairs)
}

/// Both CSLS correction terms, computed in one blockwise sweep over unit
/// matrices: `r_src[i]` is the mean of query i's top `csls_k` cosines over
/// all targets, `r_tgt[j]` the mean of target j's top `csls_k` cosines
/// over all queries.
fn csls_r_terms(src: &DenseMatrix, tgt: &DenseMatrix, csls_k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let nq = src.rows();
    let nt = tgt.rows();
    let mut src_top: Vec<TopBuffer> = (0..nq).map(|_| TopBuffer::new(csls_k)).collect();
    let mut r_tgt = Vec::with_capacity(nt);
    let mut start = 0;
    while start < nt {
        let end = (start + BLOCK_ROWS).min(nt);
        let block = tgt.gather_rows(&(start..end).collect::<Vec<_>>())?;
        let cos = src.mul_transpose(&block)?;
        let mut block_top: Vec<TopBuffer> = (0..end - start).map(|_| TopBuffer::new(csls_k)).collect();
        for (i, top) in src_top.iter_mut().enumerate() {
            for (off, &c) in cos.row(i).iter().enumerate() {
                top.push(c, start + off);
                block_top[off].push(c, i);
            }
        }
        r_tgt.extend(block_top.iter().map(TopBuffer::mean_score));
        start = end;
    }
    let r_src = src_top.iter().map(TopBuffer::mean_score).collect();
    Ok((r_src, r_tgt))
}

/// Ranked predictions for one evaluated source word.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Source row in the source space.
    pub source: usize,
    /// Gold target rows for this source.
    pub gold: Vec<usize>,
    /// Top-ranked `(target row, CSLS score)`, best first.
    pub ranked: Vec<(usize, f64)>,
}

/// Outcome of a precision@k evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    /// `k ->` fraction of evaluated sources with a gold target in top k.
    pub precision: BTreeMap<usize, f64>,
    /// Distinct gold source words that were scored.
    pub evaluated: usize,
    /// Gold source words dropped earlier as out-of-vocabulary.
    pub oov: usize,
    pub predictions: Vec<Prediction>,
}

/// Evaluates word translation with CSLS retrieval over the full target
/// vocabulary. Gold pairs are grouped per source word; a word counts as
/// correct at `k` if any of its gold targets appears in the top `k`.
/// `oov_sources` is carried into the report so that
/// `evaluated + oov` equals the original gold source-word count.
pub fn precision_at_k(
    map: &dyn TranslationMap,
    src_space: &EmbeddingSpace,
    tgt_space: &EmbeddingSpace,
    gold: &SeedDictionary,
    ks: &[usize],
    opts: ScoringOptions,
    oov_sources: usize,
) -> Result<EvaluationReport> {
    if gold.is_empty() {
        return Err(Error::EmptyDictionary {
            context: "precision_at_k gold dictionary",
        });
    }
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::InvalidDimension {
            what: "precision_at_k k list",
            value: 0,
        });
    }

    let groups = gold.grouped_by_source();
    let sources: Vec<usize> = groups.iter().map(|(s, _)| *s).collect();
    let queries = src_space.vectors().gather_rows(&sources)?;
    let mut query_codes = map.map_source(&queries)?;
    let mut target_codes = codes_blockwise(tgt_space.vectors(), |rows| map.embed_target(rows))?;
    if opts.renorm_codes {
        query_codes.renormalize_rows("mapped source code")?;
        target_codes.renormalize_rows("target code")?;
    }

    let max_k = ks.iter().copied().max().expect("ks is non-empty");
    let ranked = rank_by_csls(&query_codes, &target_codes, opts.csls_k, max_k)?;

    let predictions: Vec<Prediction> = groups
        .into_iter()
        .zip(ranked)
        .map(|((source, gold_targets), ranked)| Prediction {
            source,
            gold: gold_targets,
            ranked,
        })
        .collect();

    let mut precision = BTreeMap::new();
    for &k in ks {
        let hits = predictions
            .iter()
            .filter(|p| p.ranked.iter().take(k).any(|(t, _)| p.gold.contains(t)))
            .count();
        precision.insert(k, hits as f64 / predictions.len() as f64);
    }
    Ok(EvaluationReport {
        precision,
        evaluated: predictions.len(),
        oov: oov_sources,
        predictions,
    })
}

/// Top `top` CSLS-ranked targets per query, without materialising the
/// score matrix. Ties are broken by lower target index.
pub fn rank_by_csls(
    query_codes: &DenseMatrix,
    target_codes: &DenseMatrix,
    csls_k: usize,
    top: usize,
) -> Result<Vec<Vec<(usize, f64)>>> {
    if csls_k == 0 || top == 0 {
        return Err(Error::InvalidDimension {
            what: "rank_by_csls neighbourhood",
            value: 0,
        });
    }
    if csls_k > query_codes.rows() || csls_k > target_codes.rows() {
        return Err(Error::PoolTooSmall {
            csls_k,
            pool: query_codes.rows().min(target_codes.rows()),
        });
    }
    let mut queries = query_codes.clone();
    queries.renormalize_rows("query code")?;
    let mut targets = target_codes.clone();
    targets.renormalize_rows("target code")?;

    let (r_src, r_tgt) = csls_r_terms(&queries, &targets, csls_k)?;
    let top = top.min(targets.rows());
    let mut buffers: Vec<TopBuffer> = (0..queries.rows()).map(|_| TopBuffer::new(top)).collect();
    let mut start = 0;
    while start < targets.rows() {
        let end = (start + BLOCK_ROWS).min(targets.rows());
        let block = targets.gather_rows(&(start..end).collect::<Vec<_>>())?;
        let cos = queries.mul_transpose(&block)?;
        for (i, buffer) in buffers.iter_mut().enumerate() {
            let row = cos.row(i);
            for (off, &c) in row.iter().enumerate() {
                let j = start + off;
                buffer.push(2.0 * c - r_src[i] - r_tgt[j], j);
            }
        }
        start = end;
    }
    Ok(buffers
        .into_iter()
        .map(|b| b.entries.into_iter().map(|(s, j)| (j, s)).collect())
        .collect())
}

/// Applies a row-batch code map over `rows` in blocks, concatenating the
/// results, so only one block of inputs is resident at a time.
pub fn codes_blockwise(
    rows: &DenseMatrix,
    f: impl Fn(&DenseMatrix) -> Result<DenseMatrix>,
) -> Result<DenseMatrix> {
    let mut out: Option<DenseMatrix> = None;
    let mut start = 0;
    while start < rows.rows() {
        let end = (start + BLOCK_ROWS).min(rows.rows());
        let block = rows.gather_rows(&(start..end).collect::<Vec<_>>())?;
        let codes = f(&block)?;
        let out = out.get_or_insert_with(|| DenseMatrix::zeros(rows.rows(), codes.cols()));
        for (off, i) in (start..end).enumerate() {
            out.row_mut(i).copy_from_slice(codes.row(off));
        }
        start = end;
    }
    out.ok_or(Error::InvalidDimension {
        what: "codes_blockwise rows",
        value: 0,
    })
}

/// Fixed-capacity best-k buffer ordered by score descending, ties by
/// lower index.
struct TopBuffer {
    k: usize,
    entries: Vec<(f64, usize)>,
}

impl TopBuffer {
    fn new(k: usize) -> Self {
        TopBuffer {
            k,
            entries: Vec::with_capacity(k),
        }
    }

    fn push(&mut self, score: f64, index: usize) {
        let better = |a: (f64, usize), b: (f64, usize)| a.0 > b.0 || (a.0 == b.0 && a.1 < b.1);
        if self.entries.len() == self.k {
            let worst = *self.entries.last().expect("buffer is non-empty");
            if !better((score, index), worst) {
                return;
            }
            self.entries.pop();
        }
        let pos = self
            .entries
            .iter()
            .position(|&e| better((score, index), e))
            .unwrap_or(self.entries.len());
        self.entries.insert(pos, (score, index));
    }

    fn mean_score(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.iter().map(|(s, _)| s).sum::<f64>() / self.entries.len() as f64
    }
}
