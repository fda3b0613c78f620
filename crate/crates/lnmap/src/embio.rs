//! Text file formats for embeddings and dictionaries.
//!
//! Embeddings use the common word2vec text layout: a `<count> <dim>` header
//! line, then one `token v1 .. v<dim>` line per word, single-space
//! separated. Dictionaries are bare `src_token tgt_token` pairs, optionally
//! carrying a third score column that loaders ignore.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use lnmap_core::embedding::{EmbeddingSpace, SeedDictionary};
use lnmap_core::tensor::DenseMatrix;

use crate::{CliError, Result};

/// An embedding space together with what the loader had to drop.
#[derive(Debug)]
pub struct EmbeddingLoad {
    /// The parsed space, in file order.
    pub space: EmbeddingSpace,
    /// Lines whose token already appeared earlier in the file.
    pub skipped_duplicates: usize,
}

/// A seed dictionary together with what the loader had to drop.
#[derive(Debug)]
pub struct DictionaryLoad {
    /// The parsed pairs as row indices into the two spaces.
    pub dict: SeedDictionary,
    /// Pairs whose source or target token is missing from its vocabulary.
    pub skipped_oov: usize,
}

fn line_err(path: &Path, line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}:{line}: {msg}", path.display()))
}

/// Reads an embedding file, keeping the first `max_vocab` entries (all of
/// them when `None`). The first occurrence of a token wins; later
/// duplicates are counted and skipped. Fails on malformed lines, naming
/// the 1-based line number.
pub fn load_embeddings(path: &Path, max_vocab: Option<usize>) -> Result<EmbeddingLoad> {
    let file = File::open(path).map_err(|e| CliError::file(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| line_err(path, 1, "empty file, expected `<count> <dim>` header"))?;
    let header = header.map_err(|e| CliError::file(path, e))?;
    let mut fields = header.split_whitespace();
    let count: usize = fields
        .next()
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| line_err(path, 1, "header must start with a word count"))?;
    let dim: usize = fields
        .next()
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| line_err(path, 1, "header must be `<count> <dim>`"))?;
    if fields.next().is_some() {
        return Err(line_err(path, 1, "header must be exactly `<count> <dim>`"));
    }
    if dim == 0 {
        return Err(line_err(path, 1, "dimension must be positive"));
    }

    let keep = max_vocab.map_or(count, |m| count.min(m));
    let mut tokens: Vec<String> = Vec::with_capacity(keep.min(1 << 20));
    let mut seen: HashSet<String> = HashSet::new();
    let mut values: Vec<f64> = Vec::new();
    let mut skipped_duplicates = 0usize;

    for (idx, line) in lines {
        if tokens.len() == keep {
            break;
        }
        let lineno = idx + 1;
        let line = line.map_err(|e| CliError::file(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().expect("non-blank line has a first field");
        if seen.contains(token) {
            skipped_duplicates += 1;
            continue;
        }
        let start = values.len();
        for field in fields {
            let v: f64 = field
                .parse()
                .map_err(|_| line_err(path, lineno, format!("bad number {field:?}")))?;
            if !v.is_finite() {
                return Err(line_err(path, lineno, format!("non-finite value {field:?}")));
            }
            values.push(v);
        }
        let got = values.len() - start;
        if got != dim {
            return Err(line_err(
                path,
                lineno,
                format!("expected {dim} values for {token:?}, found {got}"),
            ));
        }
        seen.insert(token.to_string());
        tokens.push(token.to_string());
    }

    if tokens.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no embedding rows loaded",
            path.display()
        )));
    }
    if tokens.len() < keep {
        log::warn!(
            "{}: header promised {count} rows, loaded {} (plus {skipped_duplicates} duplicates)",
            path.display(),
            tokens.len()
        );
    }
    if skipped_duplicates > 0 {
        log::warn!(
            "{}: skipped {skipped_duplicates} duplicate tokens",
            path.display()
        );
    }

    let rows = tokens.len();
    let vectors = DenseMatrix::from_vec(rows, dim, values)?;
    Ok(EmbeddingLoad {
        space: EmbeddingSpace::new(tokens, vectors)?,
        skipped_duplicates,
    })
}

/// Writes a space in the same layout `load_embeddings` reads. Values keep
/// six significant digits, enough to round-trip unit-scale embeddings
/// within 1e-5.
pub fn save_embeddings(path: &Path, space: &EmbeddingSpace) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::file(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |e: std::io::Error| CliError::file(path, e);
    writeln!(out, "{} {}", space.len(), space.dim()).map_err(write)?;
    for (row, token) in space.tokens().iter().enumerate() {
        write!(out, "{token}").map_err(write)?;
        for &v in space.vectors().row(row) {
            write!(out, " {v:.5e}").map_err(write)?;
        }
        writeln!(out).map_err(write)?;
    }
    out.flush().map_err(write)
}

/// Reads a dictionary of token pairs against two vocabularies. Pairs with
/// an out-of-vocabulary side are counted and skipped; a file with no
/// usable pairs is an error.
pub fn load_dictionary(
    path: &Path,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
) -> Result<DictionaryLoad> {
    let file = File::open(path).map_err(|e| CliError::file(path, e))?;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut skipped_oov = 0usize;

    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| CliError::file(path, e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.len() {
            0 => continue,
            // A trailing score column (as written by `save_dictionary`) is
            // accepted and ignored so induced dictionaries can be re-read.
            2 | 3 => match (src.position(fields[0]), tgt.position(fields[1])) {
                (Some(s), Some(t)) => pairs.push((s, t)),
                _ => skipped_oov += 1,
            },
            n => {
                return Err(line_err(
                    path,
                    lineno,
                    format!("expected `src tgt [score]`, found {n} fields"),
                ))
            }
        }
    }

    if skipped_oov > 0 {
        log::warn!(
            "{}: skipped {skipped_oov} out-of-vocabulary pairs",
            path.display()
        );
    }
    if pairs.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no dictionary pairs survive vocabulary filtering",
            path.display()
        )));
    }
    let dict = SeedDictionary::new(pairs, src.len(), tgt.len())?;
    Ok(DictionaryLoad { dict, skipped_oov })
}

/// Writes token pairs, one per line, with an optional third score column
/// at six decimal places. When given, `scores` must be parallel to `rows`.
pub fn save_dictionary(path: &Path, rows: &[(String, String)], scores: Option<&[f64]>) -> Result<()> {
    if let Some(scores) = scores {
        if scores.len() != rows.len() {
            return Err(CliError::Internal(format!(
                "dictionary writer got {} rows but {} scores",
                rows.len(),
                scores.len()
            )));
        }
    }
    let file = File::create(path).map_err(|e| CliError::file(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |e: std::io::Error| CliError::file(path, e);
    for (i, (src, tgt)) in rows.iter().enumerate() {
        match scores {
            Some(scores) => writeln!(out, "{src} {tgt} {:.6}", scores[i]).map_err(write)?,
            None => writeln!(out, "{src} {tgt}").map_err(write)?,
        }
    }
    out.flush().map_err(write)
}
