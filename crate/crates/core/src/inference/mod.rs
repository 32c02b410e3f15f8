//! Source inference: block matching, latent aggregation and gradient refinement.

mod matching;
mod refine;

pub use matching::{hamming, match_block, wasserstein_1d, BlockDistance, IndexBlock, MatchIndex, Representative};
pub use refine::{
    aggregate_latent, block_latents, infer_cascade, inference_loss, refine, InferenceConfig,
    InferenceRecord, Refinement,
};
