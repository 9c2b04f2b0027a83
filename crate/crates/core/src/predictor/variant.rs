use rayon::prelude::*;

use super::model::{compose, Plane, PredictorModel};
use crate::error::{Error, Result};
use crate::odm::{Odm, OdmSet};

/// Which learned head(s) to use; the other falls back to the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablation {
    /// Learned silhouette and learned depth.
    Both,
    /// Learned silhouette, depth from the up-sampled low-resolution map.
    SilhouetteOnly,
    /// Silhouette of the up-sampled map, learned depth.
    DepthOnly,
}

pub const DEFAULT_SIL_THRESHOLD: f64 = 0.5;

/// Source of high-resolution ODMs for carving.
#[derive(Debug, Clone, Copy)]
pub enum Predictor<'a> {
    /// Nearest-neighbour up-sampling of the low-resolution maps.
    Baseline { factor: usize },
    /// Supplied ground-truth high-resolution maps.
    Oracle { truth: &'a OdmSet },
    Learned {
        model: &'a PredictorModel,
        ablation: Ablation,
        threshold: f64,
    },
}

impl Predictor<'_> {
    pub fn learned(model: &PredictorModel) -> Predictor<'_> {
        Predictor::Learned {
            model,
            ablation: Ablation::Both,
            threshold: DEFAULT_SIL_THRESHOLD,
        }
    }
}

/// High-resolution map of one view from a learned model.
pub fn predict_odm(model: &PredictorModel, ablation: Ablation, threshold: f64, low: &Odm) -> Result<Odm> {
    let upsampled = low.upsample_nn(model.factor)?;
    let sil = match ablation {
        Ablation::Both | Ablation::SilhouetteOnly => model.predict_sil(low),
        Ablation::DepthOnly => Plane {
            size: upsampled.resolution(),
            data: upsampled.depths().iter().map(|&d| (d != 0) as u8 as f64).collect(),
        },
    };
    let depth = match ablation {
        Ablation::Both | Ablation::DepthOnly => model.predict_depth(low)?,
        Ablation::SilhouetteOnly => Plane::from_odm(&upsampled),
    };
    compose(&sil, &depth, threshold, low.view())
}

/// Runs a predictor on all six views.
pub fn predict_set(predictor: &Predictor, low: &OdmSet) -> Result<OdmSet> {
    match *predictor {
        Predictor::Baseline { factor } => low.upsample_nn(factor),
        Predictor::Oracle { truth } => {
            if truth.resolution() % low.resolution() != 0 {
                return Err(Error::shape(format!(
                    "oracle maps at {} are not a multiple of the input resolution {}",
                    truth.resolution(),
                    low.resolution()
                )));
            }
            Ok(truth.clone())
        }
        Predictor::Learned {
            model,
            ablation,
            threshold,
        } => {
            let maps: Vec<Odm> = low
                .iter()
                .collect::<Vec<_>>()
                .par_iter()
                .map(|m| predict_odm(model, ablation, threshold, m))
                .collect::<Result<_>>()?;
            OdmSet::new(maps)
        }
    }
}
