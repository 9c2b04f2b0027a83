//! Evaluation: voxel IoU and surface-sampling F1.

mod mesh;
mod surface;

use std::fmt::Write;

pub use mesh::{exposed_face_mesh, QuadMesh};
pub use surface::{
    f1_score, f1_surface, matched_percentage, sample_surface, PointIndex, DEFAULT_SAMPLES, DEFAULT_THRESHOLD_SQ,
};

use crate::error::{Error, Result};
use crate::voxel::VoxelGrid;

/// |a ∩ b| / |a ∪ b|, with two empty grids scoring 1.
pub fn iou(a: &VoxelGrid, b: &VoxelGrid) -> Result<f64> {
    if a.resolution() != b.resolution() {
        return Err(Error::shape(format!(
            "cannot compare {}³ with {}³",
            a.resolution(),
            b.resolution()
        )));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.cells().iter().zip(b.cells()) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Results of one evaluation. IoU is a fraction; F1, precision and recall are percentages.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub iou: Option<f64>,
    pub f1: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub sample_count: Option<usize>,
    pub threshold_sq: Option<f64>,
    pub seed: Option<u64>,
}

impl EvalReport {
    pub fn from_iou(iou: f64) -> Self {
        EvalReport {
            iou: Some(iou),
            ..Default::default()
        }
    }

    fn metrics(&self) -> Vec<(&'static str, f64)> {
        [
            ("iou", self.iou),
            ("f1", self.f1),
            ("precision", self.precision),
            ("recall", self.recall),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }

    /// Flat `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.metrics() {
            writeln!(out, "{k}={v}").unwrap();
        }
        if let Some(n) = self.sample_count {
            writeln!(out, "sample_count={n}").unwrap();
        }
        if let Some(t) = self.threshold_sq {
            writeln!(out, "threshold_sq={t}").unwrap();
        }
        if let Some(s) = self.seed {
            writeln!(out, "seed={s}").unwrap();
        }
        out
    }

    pub const CSV_HEADER: &'static str = "category,metric,value,n,seed";

    /// One `category,metric,value,n,seed` row per metric present.
    pub fn to_csv_rows(&self, category: &str) -> String {
        let n = self.sample_count.map(|n| n.to_string()).unwrap_or_default();
        let seed = self.seed.map(|s| s.to_string()).unwrap_or_default();
        let mut out = String::new();
        for (k, v) in self.metrics() {
            writeln!(out, "{category},{k},{v},{n},{seed}").unwrap();
        }
        out
    }
}
