//! Contrastive group representations.
//!
//! For each decade, a group's positives are drawn from its own context with
//! weight `f_self / max(f_other, floor)` and its negatives from the other
//! group's context with weight `f_other / max(f_self, floor)`, where `f` is a
//! word's relative frequency in a context table. A single vector per group is
//! then fit against the frozen word vectors with a pairwise ranking loss:
//! `1 - cos(x, w)` for positives and `max(0, cos(x, w) - margin)` for
//! negatives.

mod loss;
mod sampling;
mod train;

pub use loss::{loss_gradient, loss_gradient_into, ranking_loss, Label};
pub use sampling::{
    build_distribution, draw_samples, negative_weight, positive_weight, Polarity,
    SamplingDistribution, DEFAULT_FLOOR,
};
pub use train::{
    derive_seed, draw_sample_set, read_group_vectors, sidecar_path, train_decade,
    train_group_vector, write_group_vectors, GroupVector, SampleSet, StoredGroupVector,
    TrainerConfig, TrainingMeta,
};
