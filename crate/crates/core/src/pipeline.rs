//! End-to-end super-resolution and the synthetic evaluation harness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::carving::{carve, CarveConfig};
use crate::error::{Error, Result};
use crate::metrics::iou;
use crate::odm::{extract_all, ViewId};
use crate::predictor::{predict_set, Ablation, Predictor, PredictorModel, TrainingPair};
use crate::shape::{random_shape, rasterize, ShapeSpec};
use crate::voxel::VoxelGrid;

/// Extracts the low-resolution maps, predicts high-resolution ones and carves.
pub fn super_resolve(low: &VoxelGrid, predictor: &Predictor, config: &CarveConfig) -> Result<VoxelGrid> {
    let odms_low = extract_all(low);
    let odms_high = predict_set(predictor, &odms_low)?;
    carve(low, &odms_high, config)
}

/// A procedurally generated object at both resolutions. The low-resolution
/// grid is the block max-pool of the high-resolution one.
#[derive(Debug, Clone)]
pub struct SyntheticObject {
    pub spec: ShapeSpec,
    pub high: VoxelGrid,
    pub low: VoxelGrid,
}

impl SyntheticObject {
    pub fn from_spec(spec: ShapeSpec, low_res: usize, factor: usize) -> Result<SyntheticObject> {
        let high = rasterize(&spec, low_res * factor)?.solidify();
        let low = high.downsample_any(factor)?;
        Ok(SyntheticObject { spec, high, low })
    }

    /// The six (low, high) map pairs of this object.
    pub fn pairs(&self) -> Vec<TrainingPair> {
        let low = extract_all(&self.low);
        let high = extract_all(&self.high);
        ViewId::ALL
            .iter()
            .map(|&v| TrainingPair {
                low: low.get(v).clone(),
                high: high.get(v).clone(),
            })
            .collect()
    }
}

/// `count` nonempty random objects, deterministic in `seed`.
pub fn synthetic_objects(count: usize, low_res: usize, factor: usize, seed: u64) -> Result<Vec<SyntheticObject>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<ShapeSpec> = (0..count).map(|_| random_shape(&mut rng)).collect();
    let mut objects: Vec<SyntheticObject> = specs
        .into_par_iter()
        .map(|s| SyntheticObject::from_spec(s, low_res, factor))
        .collect::<Result<_>>()?;
    // a shape thinner than a cell can rasterize to nothing; replace it
    for o in objects.iter_mut() {
        while o.high.is_empty() {
            *o = SyntheticObject::from_spec(random_shape(&mut rng), low_res, factor)?;
        }
    }
    Ok(objects)
}

pub fn training_pairs(objects: &[SyntheticObject]) -> Vec<TrainingPair> {
    objects.iter().flat_map(SyntheticObject::pairs).collect()
}

/// Mean IoU against ground truth of carving each object's low-resolution grid.
pub fn mean_iou(objects: &[SyntheticObject], predictor: &Predictor, config: &CarveConfig) -> Result<f64> {
    if objects.is_empty() {
        return Err(Error::validation("no objects to evaluate"));
    }
    let scores: Vec<f64> = objects
        .par_iter()
        .map(|o| iou(&super_resolve(&o.low, predictor, config)?, &o.high))
        .collect::<Result<_>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Mean IoU (fractions) of the baseline and of every network combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationScores {
    pub baseline: f64,
    pub depth_only: f64,
    pub silhouette_only: f64,
    pub both: f64,
}

impl AblationScores {
    /// Table row in percent: baseline, depth, silhouette, both.
    pub fn row(&self, category: &str) -> String {
        format!(
            "{category},{:.1},{:.1},{:.1},{:.1}",
            100.0 * self.baseline,
            100.0 * self.depth_only,
            100.0 * self.silhouette_only,
            100.0 * self.both
        )
    }
}

pub fn evaluate_ablation(
    model: &PredictorModel,
    objects: &[SyntheticObject],
    config: &CarveConfig,
    threshold: f64,
) -> Result<AblationScores> {
    let learned = |ablation| Predictor::Learned {
        model,
        ablation,
        threshold,
    };
    Ok(AblationScores {
        baseline: mean_iou(objects, &Predictor::Baseline { factor: model.factor }, config)?,
        depth_only: mean_iou(objects, &learned(Ablation::DepthOnly), config)?,
        silhouette_only: mean_iou(objects, &learned(Ablation::SilhouetteOnly), config)?,
        both: mean_iou(objects, &learned(Ablation::Both), config)?,
    })
}
