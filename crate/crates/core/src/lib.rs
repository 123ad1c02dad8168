//! Frequency effects in static word embeddings.
//!
//! Trains SGNS, FastText and GloVe embeddings, measures how cosine (or
//! negative Euclidean) similarity depends on the log frequency of the words
//! compared, and audits how the frequency of context words moves
//! word-embedding bias scores.
//!
//! * [`corpus`]: preprocessing, vocabularies, token shuffling and
//!   frequency resampling.
//! * [`train`]: the three trainers, the hyperparameter grid and per-epoch
//!   snapshots.
//! * [`store`]: embedding sets, similarity metrics and the on-disk formats.
//! * [`freq_analysis`]: frequency bins, heatmaps, RMSE against a
//!   permutation baseline, stratified PCA and grid regression.
//! * [`bias_audit`]: bias scores, gender norms and bootstrap aggregates.
//! * [`cli`]: the file-based command-line pipeline.
//! * [`synth`]: seeded Zipfian corpora for experiments without real text.

pub mod bias_audit;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod freq_analysis;
pub mod rng;
pub mod stats;
pub mod store;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
