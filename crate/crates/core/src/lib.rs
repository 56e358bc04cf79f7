//! Ideology prediction from document embeddings under scarce and biased
//! supervision.
//!
//! Each document vector `x` is modelled as the sum of a neutral, theme-driven
//! context vector `c`, an ideological position vector `f` decoded from a
//! low-dimensional latent `z`, and noise. The model is a bi-branch
//! variational autoencoder whose latent prior is a `K`-modal mixture built
//! from trainable pseudo-inputs, with a small classification head trained on
//! whichever labels survive masking.
//!
//! Modules, bottom up:
//!
//! - [`embeddings`]: word vectors, tokenization, mean pooling, neighbourhoods
//! - [`corpus`]: documents, JSONL ingestion, masking protocols, synthetic
//!   corpora drawn from the generative model
//! - [`themes`]: seed expansion, neutral-word filtering, theme matrix and
//!   initial soft assignments
//! - [`nn`]: dense stacks, densities, RMSProp, gradient checking
//! - [`model`]: the bi-branch model, its single-branch ablation and a dense
//!   baseline classifier
//! - [`analysis`]: polarization axes, PCA concentration, rank deviation and
//!   friends
//! - [`experiment`]: synthetic benchmark runs used by the binary and tests
//! - [`cli`]: config-driven batch runs behind the `bbbg` binary

pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod experiment;
pub mod model;
pub mod nn;
pub mod themes;

pub use error::{Error, ErrorClass, Result};
