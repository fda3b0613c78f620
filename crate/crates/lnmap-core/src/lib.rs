//! Core primitives for inducing bilingual lexicons through non-linear
//! latent-space mappings.
//!
//! The crate trains one autoencoder per language over pre-trained word
//! embeddings, then learns a pair of non-linear mappers between the two
//! latent spaces from a small seed dictionary. Training alternates three
//! objectives per mini-batch (mapping, back-translation, reconstruction),
//! each updating a distinct parameter group, and grows the dictionary by
//! mutual-nearest-neighbour CSLS retrieval between self-training rounds.
//!
//! Everything here is `no_std` + `alloc`: the numeric kernels, the model,
//! retrieval, the orthogonal (Procrustes) baseline, and the self-training
//! loop all operate on in-memory buffers. File formats, run directories,
//! and the command-line driver live in the companion `lnmap` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baseline;
pub mod embedding;
pub mod error;
pub mod model;
pub mod retrieval;
pub mod tensor;
pub mod trainer;

pub use error::Error;

/// Alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
