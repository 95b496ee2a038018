//! Label-free routing over a pool of language models.
//!
//! Correctness is estimated from confidence-weighted agreement between the
//! models in the pool ([`consensus`]). Per-task skill regions are discovered by
//! clustering the embeddings of queries each model handles well
//! ([`clustering`]), and every region carries a ranked list of experts
//! ([`router`]). At inference time a query is routed to its task, then its
//! nearest skill region, and the answers of the top-ranked experts are
//! aggregated by consensus.
//!
//! [`baselines`] holds the learning-free and cluster-accuracy routers used for
//! comparison, and [`datatools`] the filtering and ranking-agreement analyses
//! for generated training data.

pub mod baselines;
pub mod cli;
pub mod clustering;
pub mod consensus;
pub mod dataset;
pub mod datatools;
mod error;
pub mod eval;
pub mod router;
mod seed;
pub mod vector;

pub use error::{Error, Result};
