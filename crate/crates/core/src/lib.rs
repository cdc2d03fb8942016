//! Supervised entity summarization.
//!
//! Given the description of an entity (every RDF triple it takes part in),
//! the model scores each triple from word-vector encodings of its property
//! and value, conditioned on an attention-pooled encoding of the whole
//! description, and returns the top-k triples as the summary.
//!
//! - [`dataset`]: statement parsing, manifests, gold summaries, folds
//! - [`embeddings`]: textual forms, tokenization, averaged word vectors
//! - [`nn`]: dense layers, backward passes, Adam, gradient checking
//! - [`model`]: the scorer, top-k selection, checkpoints
//! - [`train`] / [`eval`]: training with early stopping, cross-validation,
//!   F1 against multiple golds, the ORACLE reference, paired t-test
//! - [`cli`]: the `deeplens` command line
//!
//! The `examples/` directory has one runnable program per capability.

pub mod cli;
pub mod dataset;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod model;
pub mod nn;
pub mod train;

pub use dataset::{load_manifest, DatasetManifest, EntityDescription, FoldSpec, GoldSummary, Resource, Triple};
pub use embeddings::{load_vec_file, EmbeddingStore};
pub use error::{Error, Result};
pub use eval::{f1_against_golds, oracle_summary, paired_ttest, EvalReport, SignificanceResult};
pub use model::{select_summary, DeepLensModel, ModelConfig, ScoredDescription, TripleVector};
pub use train::{cross_validate, train_fold, EarlyStopMetric, EncodedDataset, TrainConfig};
