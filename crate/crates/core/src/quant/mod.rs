//! Lossy parameter reduction: pruning masks, ECVQ and scalar quantization.

mod ecvq;
mod mask;
mod prune;
mod scalar;

pub use ecvq::{
    ecvq_encode, ecvq_train, index_entropy, objective, probability_floor, Attribute, Component,
    EcvqCode, EcvqCodebook, EcvqTraining, GroupId,
};
pub(crate) use ecvq::train_group;
pub use mask::{
    binarize, gs_prune_loss, settle, sh_degree_weight, sh_prune_loss, squash, PruneMask, ShMask,
    GS_THRESHOLD, SH_THRESHOLD,
};
pub use prune::{
    apply_masks, gaussian_mask_from, gaussian_prune_curve, prefix_grid, prune_counts,
    prune_with_curve, rd_greedy_prune, retain_gaussians, sh_candidates, sh_mask_from,
    sh_prune_curve, DistortionOracle, PruneCounts, PruneCurve, PruneOutcome,
};
pub use scalar::{scalar_quantize, OpacityPolicy, ScalarQuantizer, OPACITY_BITS};
