//! Decomposed ODM super-resolution: a silhouette network and a bounded
//! residual-depth network sharing one small convolutional architecture.

mod checkpoint;
pub mod loss;
pub mod model;
pub mod net;
pub mod train;
pub mod variant;

pub use loss::{gradient, loss_and_gradient, loss_depth, loss_sil, total_variation, TrainingPair};
pub use model::{compose, Head, ModelConfig, Plane, PredictorModel};
pub use train::{train, train_with, TrainConfig, TrainReport};
pub use variant::{predict_odm, predict_set, Ablation, Predictor, DEFAULT_SIL_THRESHOLD};
