use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::{gradient, TrainingPair};
use super::model::{Head, PredictorModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Draw a fresh order every epoch; otherwise the first shuffle is reused.
    pub reshuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 1000,
            batch_size: 8,
            learning_rate: 1e-2,
            seed: 0,
            reshuffle: true,
        }
    }
}

/// Per-step batch losses of both heads, divided by the number of
/// high-resolution pixels in the batch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub sil: Vec<f64>,
    pub depth: Vec<f64>,
}

impl TrainReport {
    /// `step,sil_loss,depth_loss` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,sil_loss,depth_loss\n");
        for (i, (s, d)) in self.sil.iter().zip(&self.depth).enumerate() {
            out.push_str(&format!("{},{s:.9e},{d:.9e}\n", i + 1));
        }
        out
    }
}

/// Means of consecutive non-overlapping windows; a trailing partial window is dropped.
pub fn window_means(losses: &[f64], window: usize) -> Vec<f64> {
    losses
        .chunks_exact(window.max(1))
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

/// Mini-batch SGD with a fixed step on both heads independently. Batches are
/// drawn in a shuffled order seeded by `config.seed`, and each step
/// moves along the summed gradient divided by the batch's pixel count.
pub fn train(model: &PredictorModel, data: &[TrainingPair], config: &TrainConfig) -> Result<(PredictorModel, TrainReport)> {
    train_with(model, data, config, |_, _, _| {})
}

/// [`train`] with a callback receiving `(step, sil_loss, depth_loss)` after every step.
pub fn train_with(
    model: &PredictorModel,
    data: &[TrainingPair],
    config: &TrainConfig,
    mut on_step: impl FnMut(usize, f64, f64),
) -> Result<(PredictorModel, TrainReport)> {
    if data.is_empty() {
        return Err(Error::validation("training set is empty"));
    }
    if config.batch_size == 0 {
        return Err(Error::validation("batch size must be at least 1"));
    }
    if !(config.learning_rate.is_finite() && config.learning_rate > 0.0) {
        return Err(Error::validation("learning rate must be positive"));
    }
    for p in data {
        model.check_pair(&p.low, &p.high)?;
    }

    let mut model = model.clone();
    let mut report = TrainReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut cursor = order.len();
    let mut batch = Vec::with_capacity(config.batch_size);

    for step in 1..=config.steps {
        batch.clear();
        while batch.len() < config.batch_size.min(data.len()) {
            if cursor == order.len() {
                if config.reshuffle || step == 1 {
                    order.shuffle(&mut rng);
                }
                cursor = 0;
            }
            batch.push(data[order[cursor]].clone());
            cursor += 1;
        }
        let pixels: f64 = batch.iter().map(|p| (p.high.resolution() * p.high.resolution()) as f64).sum();

        let mut losses = [0.0; 2];
        for (slot, head) in [Head::Silhouette, Head::Depth].into_iter().enumerate() {
            let (loss, grad) = gradient(&model, head, &batch)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Training {
                    step,
                    message: format!("non-finite {head:?} loss or gradient"),
                });
            }
            let scale = config.learning_rate / pixels;
            for (p, g) in model.params_mut(head).iter_mut().zip(&grad) {
                *p -= scale * g;
            }
            losses[slot] = loss / pixels;
        }
        if model.sil_params.iter().chain(&model.depth_params).any(|p| !p.is_finite()) {
            return Err(Error::Training {
                step,
                message: "parameters diverged".into(),
            });
        }
        report.sil.push(losses[0]);
        report.depth.push(losses[1]);
        on_step(step, losses[0], losses[1]);
    }
    Ok((model, report))
}
