//! Embedding spaces and seed dictionaries, plus the normalization pipeline
//! applied to every space before training: renormalise rows to unit length,
//! centre each column, renormalise again. All in double precision.

use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};

use crate::error::Error;
use crate::tensor::DenseMatrix;
use crate::Result;

/// A vocabulary with one embedding row per token, frequency-ordered: row 0
/// is the most frequent word. That ordering is what "first k words" means
/// everywhere (pretraining slices, induction pools).
#[derive(Debug, Clone)]
pub struct EmbeddingSpace {
    tokens: Vec<String>,
    vectors: DenseMatrix,
    index: HashMap<String, usize>,
}

impl EmbeddingSpace {
    /// Builds a space, rejecting duplicate tokens and shape disagreements.
    pub fn new(tokens: Vec<String>, vectors: DenseMatrix) -> Result<Self> {
        if tokens.len() != vectors.rows() {
            return Err(Error::InvalidDimension {
                what: "EmbeddingSpace token count vs matrix rows",
                value: tokens.len(),
            });
        }
        if vectors.cols() == 0 || tokens.is_empty() {
            return Err(Error::InvalidDimension {
                what: "EmbeddingSpace extent",
                value: 0,
            });
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::ParameterMismatch {
                    name: t.clone(),
                    reason: String::from("duplicate token in embedding space"),
                });
            }
        }
        Ok(EmbeddingSpace {
            tokens,
            vectors,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, row: usize) -> &str {
        &self.tokens[row]
    }

    pub fn vectors(&self) -> &DenseMatrix {
        &self.vectors
    }

    pub fn position(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Copy of the first `k` rows (or all of them if `k` exceeds the
    /// vocabulary), i.e. the `k` most frequent words.
    pub fn prefix_rows(&self, k: usize) -> DenseMatrix {
        let k = k.min(self.len());
        let data = self.vectors.data()[..k * self.dim()].to_vec();
        DenseMatrix::from_vec(k, self.dim(), data).expect("prefix length is consistent")
    }

    /// Unit-renormalises every row, naming the offending token on failure.
    pub fn renormalize(&mut self) -> Result<()> {
        for i in 0..self.vectors.rows() {
            let row = self.vectors.row_mut(i);
            let norm = libm::sqrt(row.iter().map(|v| v * v).sum());
            if norm < 1e-12 {
                return Err(Error::ZeroNormRow {
                    row: i,
                    token: self.tokens[i].clone(),
                    norm,
                });
            }
            let inv = 1.0 / norm;
            for v in row {
                *v *= inv;
            }
        }
        Ok(())
    }

    /// Subtracts the per-column mean from every row.
    pub fn center_columns(&mut self) {
        let (rows, cols) = self.vectors.shape();
        let mut means = alloc::vec![0.0; cols];
        for i in 0..rows {
            for (m, &v) in means.iter_mut().zip(self.vectors.row(i)) {
                *m += v;
            }
        }
        let inv = 1.0 / rows as f64;
        for m in &mut means {
            *m *= inv;
        }
        for i in 0..rows {
            for (v, &m) in self.vectors.row_mut(i).iter_mut().zip(&means) {
                *v -= m;
            }
        }
    }

    /// The full pipeline: renormalise, centre, renormalise.
    ///
    /// Centring can only zero a row if a token's unit vector equals the
    /// column means exactly; the second renormalisation step reports such a
    /// row as fatal rather than silently dividing by almost-zero.
    pub fn normalize(&mut self) -> Result<()> {
        self.renormalize()?;
        self.center_columns();
        self.renormalize()
    }
}

/// Whether a dictionary maps each source word to exactly one target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DictKind {
    Unique1to1,
    All1toMany,
}

/// Word-index pairs `(source row, target row)` used for supervision and
/// evaluation. Free of duplicate pairs by construction; `kind` is
/// descriptive metadata derived from the pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedDictionary {
    pairs: Vec<(usize, usize)>,
    kind: DictKind,
}

impl SeedDictionary {
    /// Validates indices against the two vocabulary sizes and drops exact
    /// duplicate pairs, keeping first occurrences in order.
    pub fn new(pairs: Vec<(usize, usize)>, src_vocab: usize, tgt_vocab: usize) -> Result<Self> {
        let mut seen = HashSet::with_capacity(pairs.len());
        let mut kept = Vec::with_capacity(pairs.len());
        for (s, t) in pairs {
            if s >= src_vocab {
                return Err(Error::IndexOutOfRange {
                    what: "dictionary source index",
                    index: s,
                    size: src_vocab,
                });
            }
            if t >= tgt_vocab {
                return Err(Error::IndexOutOfRange {
                    what: "dictionary target index",
                    index: t,
                    size: tgt_vocab,
                });
            }
            if seen.insert((s, t)) {
                kept.push((s, t));
            }
        }
        Ok(Self::from_deduped(kept))
    }

    fn from_deduped(pairs: Vec<(usize, usize)>) -> Self {
        let mut sources = HashSet::with_capacity(pairs.len());
        let mut unique = true;
        for (s, _) in &pairs {
            if !sources.insert(*s) {
                unique = false;
                break;
            }
        }
        SeedDictionary {
            pairs,
            kind: if unique {
                DictKind::Unique1to1
            } else {
                DictKind::All1toMany
            },
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn kind(&self) -> DictKind {
        self.kind
    }

    /// Number of distinct source words.
    pub fn distinct_sources(&self) -> usize {
        self.pairs.iter().map(|(s, _)| *s).collect::<HashSet<_>>().len()
    }

    /// Keeps the first translation of each of the first `n` distinct source
    /// words, in pair order. Errors if fewer than `n` distinct sources
    /// exist.
    pub fn make_unique(&self, n: usize) -> Result<SeedDictionary> {
        let mut taken = HashSet::new();
        let mut kept = Vec::with_capacity(n);
        for &(s, t) in &self.pairs {
            if taken.len() == n && !taken.contains(&s) {
                break;
            }
            if taken.insert(s) {
                kept.push((s, t));
            }
        }
        if kept.len() < n {
            return Err(Error::IndexOutOfRange {
                what: "make_unique distinct sources",
                index: n,
                size: kept.len(),
            });
        }
        Ok(Self::from_deduped(kept))
    }

    /// Union with extra pairs (first occurrence wins), keeping `self` pairs
    /// first. Indices in `extra` are trusted; they come from induction over
    /// an in-bounds pool.
    pub fn union(&self, extra: &[(usize, usize)]) -> SeedDictionary {
        let mut seen: HashSet<(usize, usize)> = self.pairs.iter().copied().collect();
        let mut pairs = self.pairs.clone();
        for &p in extra {
            if seen.insert(p) {
                pairs.push(p);
            }
        }
        Self::from_deduped(pairs)
    }

    /// Gold pairs grouped per distinct source, in first-appearance order.
    pub fn grouped_by_source(&self) -> Vec<(usize, Vec<usize>)> {
        let mut order: Vec<usize> = Vec::new();
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for &(s, t) in &self.pairs {
            groups
                .entry(s)
                .or_insert_with(|| {
                    order.push(s);
                    Vec::new()
                })
                .push(t);
        }
        order
            .into_iter()
            .map(|s| {
                let targets = groups.remove(&s).expect("group exists");
                (s, targets)
            })
            .collect()
    }
}
