//! Synthetic embedding pairs with known ground truth.
//!
//! Two generators: an orthogonal fixture, where the target space is a
//! planted rotation of the source plus optional Gaussian noise, and a
//! warped fixture, where the target is a fixed random invertible
//! non-linear transform of the source. The identity pairing `(i, i)` is
//! the gold dictionary for both.

use std::path::{Path, PathBuf};

use lnmap_core::baseline::jacobi_svd;
use lnmap_core::embedding::EmbeddingSpace;
use lnmap_core::tensor::DenseMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{embio, CliError, Result};

/// A generated source/target space pair whose gold mapping is `(i, i)`.
pub struct SyntheticPair {
    pub src: EmbeddingSpace,
    pub tgt: EmbeddingSpace,
}

/// Matrix of independent standard normal entries.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(rows, cols);
    for v in m.data_mut() {
        *v = StandardNormal.sample(rng);
    }
    m
}

/// Random orthogonal matrix: the left factor of a Gaussian matrix's SVD.
pub fn random_rotation(dim: usize, rng: &mut ChaCha20Rng) -> Result<DenseMatrix> {
    let g = gaussian_matrix(dim, dim, rng);
    let (u, _, _) = jacobi_svd(&g)?;
    Ok(u)
}

fn token_list(prefix: &str, count: usize) -> Vec<String> {
    (0..count).map(|i| format!("{prefix}{i}")).collect()
}

fn add_noise(m: &mut DenseMatrix, sigma: f64, rng: &mut ChaCha20Rng) {
    if sigma == 0.0 {
        return;
    }
    for v in m.data_mut() {
        let n: f64 = StandardNormal.sample(rng);
        *v += sigma * n;
    }
}

/// Unit-normalised Gaussian source rows, target rows rotated by a planted
/// orthogonal matrix plus entrywise noise of scale `sigma`.
pub fn orthogonal_pair(
    words: usize,
    dim: usize,
    sigma: f64,
    seed: u64,
) -> Result<(SyntheticPair, DenseMatrix)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut x = gaussian_matrix(words, dim, &mut rng);
    x.renormalize_rows("synthetic source")?;
    let rotation = random_rotation(dim, &mut rng)?;
    let mut y = x.mul_transpose(&rotation)?;
    add_noise(&mut y, sigma, &mut rng);

    let pair = SyntheticPair {
        src: EmbeddingSpace::new(token_list("s", words), x)?,
        tgt: EmbeddingSpace::new(token_list("t", words), y)?,
    };
    Ok((pair, rotation))
}

/// Unit-normalised source rows drawn from an `intrinsic_dim`-dimensional
/// random subspace of the ambient space, target rows passed through a
/// fixed random invertible warp `y = W2 tanh(gain (W1 x))` with orthogonal
/// `W1`, `W2`, plus entrywise noise of scale `sigma`.
///
/// Larger `gain` pushes the warp further from any single linear map, and a
/// small `intrinsic_dim` packs the words onto a low-dimensional manifold
/// the way real embeddings are, so the warp's curvature actually reorders
/// neighbours instead of being washed out by the gaps between isotropic
/// random points.
pub fn warped_pair(
    words: usize,
    dim: usize,
    intrinsic_dim: usize,
    gain: f64,
    sigma: f64,
    seed: u64,
) -> Result<SyntheticPair> {
    if !(gain.is_finite() && gain > 0.0) {
        return Err(CliError::input(format!("warp gain must be positive, got {gain}")));
    }
    if intrinsic_dim == 0 || intrinsic_dim > dim {
        return Err(CliError::input(format!(
            "intrinsic dimension must be in 1..={dim}, got {intrinsic_dim}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let coords = gaussian_matrix(words, intrinsic_dim, &mut rng);
    let (basis, _, _) = jacobi_svd(&gaussian_matrix(dim, intrinsic_dim, &mut rng))?;
    let mut x = coords.mul_transpose(&basis)?;
    x.renormalize_rows("synthetic source")?;
    let w1 = random_rotation(dim, &mut rng)?;
    let w2 = random_rotation(dim, &mut rng)?;

    let mut hidden = x.mul_transpose(&w1)?;
    for v in hidden.data_mut() {
        *v = (gain * *v).tanh();
    }
    let mut y = hidden.mul_transpose(&w2)?;
    add_noise(&mut y, sigma, &mut rng);

    Ok(SyntheticPair {
        src: EmbeddingSpace::new(token_list("s", words), x)?,
        tgt: EmbeddingSpace::new(token_list("t", words), y)?,
    })
}

/// The identity gold pairing over a row range.
pub fn identity_pairs(range: core::ops::Range<usize>) -> Vec<(usize, usize)> {
    range.map(|i| (i, i)).collect()
}

/// Paths of a fixture written to disk.
pub struct FixtureFiles {
    pub src_emb: PathBuf,
    pub tgt_emb: PathBuf,
    pub seed_dict: PathBuf,
    pub eval_dict: PathBuf,
}

/// Writes a pair to `dir` as embedding files plus disjoint seed and
/// held-out evaluation dictionaries: rows `0..seed_pairs` seed training,
/// the next `eval_pairs` rows form the evaluation set.
pub fn write_fixture(
    dir: &Path,
    pair: &SyntheticPair,
    seed_pairs: usize,
    eval_pairs: usize,
) -> Result<FixtureFiles> {
    let words = pair.src.len();
    if seed_pairs + eval_pairs > words {
        return Err(CliError::input(format!(
            "{seed_pairs} seed + {eval_pairs} eval pairs exceed {words} words"
        )));
    }
    let files = FixtureFiles {
        src_emb: dir.join("src.vec"),
        tgt_emb: dir.join("tgt.vec"),
        seed_dict: dir.join("seed.dict"),
        eval_dict: dir.join("eval.dict"),
    };
    embio::save_embeddings(&files.src_emb, &pair.src)?;
    embio::save_embeddings(&files.tgt_emb, &pair.tgt)?;

    let rows = |range: core::ops::Range<usize>| {
        range
            .map(|i| (pair.src.token(i).to_string(), pair.tgt.token(i).to_string()))
            .collect::<Vec<_>>()
    };
    embio::save_dictionary(&files.seed_dict, &rows(0..seed_pairs), None)?;
    embio::save_dictionary(
        &files.eval_dict,
        &rows(seed_pairs..seed_pairs + eval_pairs),
        None,
    )?;
    Ok(files)
}
