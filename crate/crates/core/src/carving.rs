//! Model carving: turning six high-resolution depth maps and a low-resolution
//! object into a high-resolution object.
//!
//! The low-resolution object is up-sampled, the maps are smoothed, then
//! structure carving removes voxels behind background pixels once enough
//! views agree, and detail carving removes the layers in front of every
//! predicted surface.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::odm::{Axis, Direction, Odm, OdmSet, ViewId};
use crate::voxel::VoxelGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct CarveConfig {
    /// Chebyshev radius of the smoothing window; 0 disables smoothing.
    pub smoothing_radius: usize,
    /// Neighbours further than this from the center depth are ignored.
    pub smoothing_threshold: f64,
    /// Views that must vote before structure carving removes a voxel.
    pub agreement_votes: usize,
    pub factor: usize,
}

impl CarveConfig {
    /// Radius 2, threshold `factor / 2`, two votes.
    pub fn new(factor: usize) -> Self {
        CarveConfig {
            smoothing_radius: 2,
            smoothing_threshold: factor as f64 / 2.0,
            agreement_votes: 2,
            factor,
        }
    }

    pub fn without_smoothing(mut self) -> Self {
        self.smoothing_radius = 0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=6).contains(&self.agreement_votes) {
            return Err(Error::validation(format!(
                "agreement votes must be in 1..=6, got {}",
                self.agreement_votes
            )));
        }
        if !(self.smoothing_threshold.is_finite() && self.smoothing_threshold > 0.0) {
            return Err(Error::validation("smoothing threshold must be positive"));
        }
        if self.factor == 0 {
            return Err(Error::validation("factor must be at least 1"));
        }
        Ok(())
    }
}

/// Edge-preserving average: each nonzero pixel becomes the rounded mean of
/// the nonzero pixels in its window whose depth is within the threshold of
/// its own. Background pixels are untouched.
pub fn smooth_odm(odm: &Odm, config: &CarveConfig) -> Odm {
    let r = odm.resolution();
    let rad = config.smoothing_radius;
    if rad == 0 {
        return odm.clone();
    }
    let src = odm.depths();
    let mut out = vec![0u32; r * r];
    for v in 0..r {
        for u in 0..r {
            let d = src[u + r * v];
            if d == 0 {
                continue;
            }
            let (mut sum, mut count) = (0u64, 0u64);
            for nv in v.saturating_sub(rad)..(v + rad + 1).min(r) {
                for nu in u.saturating_sub(rad)..(u + rad + 1).min(r) {
                    let e = src[nu + r * nv];
                    if e != 0 && (e as f64 - d as f64).abs() <= config.smoothing_threshold {
                        sum += e as u64;
                        count += 1;
                    }
                }
            }
            out[u + r * v] = (sum as f64 / count as f64).round() as u32;
        }
    }
    Odm::new(odm.view(), r, out).expect("means of valid depths stay in range")
}

fn check_resolution(grid: &VoxelGrid, r: usize) -> Result<()> {
    if grid.resolution() != r {
        return Err(Error::shape(format!(
            "grid is {}³ but maps are {r}x{r}",
            grid.resolution()
        )));
    }
    Ok(())
}

/// Per-pixel index for a voxel seen along `axis`.
#[inline]
fn pixel(axis: Axis, r: usize, x: usize, y: usize, z: usize) -> usize {
    match axis {
        Axis::X => y + r * z,
        Axis::Y => x + r * z,
        Axis::Z => x + r * y,
    }
}

/// Removes every voxel that lies behind a background pixel in at least
/// `agreement_votes` views. `silhouettes` is indexed by [`ViewId::index`].
pub fn structure_carve(grid: &VoxelGrid, silhouettes: &[Vec<bool>], agreement_votes: usize) -> Result<VoxelGrid> {
    let r = grid.resolution();
    if silhouettes.len() != 6 {
        return Err(Error::shape(format!("expected 6 silhouettes, got {}", silhouettes.len())));
    }
    if let Some(s) = silhouettes.iter().find(|s| s.len() != r * r) {
        return Err(Error::shape(format!(
            "silhouette has {} pixels, grid needs {}",
            s.len(),
            r * r
        )));
    }
    // background count of the two opposite views of each axis
    let axis_votes = |axis_first_view: usize| -> Vec<u8> {
        (0..r * r)
            .map(|i| (!silhouettes[axis_first_view][i]) as u8 + (!silhouettes[axis_first_view + 1][i]) as u8)
            .collect()
    };
    let (vx, vy, vz) = (axis_votes(0), axis_votes(2), axis_votes(4));
    let mut out = grid.clone();
    out.cells_mut()
        .par_chunks_mut(r * r)
        .enumerate()
        .for_each(|(z, slice)| {
            for y in 0..r {
                for x in 0..r {
                    let votes = vx[pixel(Axis::X, r, x, y, z)] as usize
                        + vy[pixel(Axis::Y, r, x, y, z)] as usize
                        + vz[pixel(Axis::Z, r, x, y, z)] as usize;
                    if votes >= agreement_votes {
                        slice[x + r * y] = false;
                    }
                }
            }
        });
    Ok(out)
}

/// Removes, for every pixel of depth `d >= 1`, the `d - 1` layers in front of
/// the surface. Background pixels remove nothing.
pub fn detail_carve(grid: &VoxelGrid, odms: &OdmSet) -> Result<VoxelGrid> {
    let r = grid.resolution();
    check_resolution(grid, odms.resolution())?;
    let depth = |view: ViewId| odms.get(view).depths();
    let maps: Vec<(ViewId, &[u32])> = ViewId::ALL.iter().map(|&v| (v, depth(v))).collect();
    let mut out = grid.clone();
    out.cells_mut()
        .par_chunks_mut(r * r)
        .enumerate()
        .for_each(|(z, slice)| {
            for y in 0..r {
                for x in 0..r {
                    let cell = &mut slice[x + r * y];
                    if !*cell {
                        continue;
                    }
                    let carved = maps.iter().any(|&(view, d)| {
                        let along = match view.axis {
                            Axis::X => x,
                            Axis::Y => y,
                            Axis::Z => z,
                        };
                        let layer = match view.direction {
                            Direction::Positive => along,
                            Direction::Negative => r - 1 - along,
                        };
                        // layer is 0-based; depth d keeps layer d - 1
                        (layer as u32 + 1) < d[pixel(view.axis, r, x, y, z)]
                    });
                    if carved {
                        *cell = false;
                    }
                }
            }
        });
    Ok(out)
}

/// Up-sample, smooth, structure-carve, detail-carve.
pub fn carve(grid_low: &VoxelGrid, odms_high: &OdmSet, config: &CarveConfig) -> Result<VoxelGrid> {
    config.validate()?;
    let expected = grid_low.resolution() * config.factor;
    if odms_high.resolution() != expected {
        return Err(Error::shape(format!(
            "maps are {0}x{0}, expected {expected}x{expected} for factor {1}",
            odms_high.resolution(),
            config.factor
        )));
    }
    let up = grid_low.upsample_nn(config.factor)?;
    let smoothed = odms_high.map(|m| smooth_odm(m, config))?;
    let silhouettes: Vec<Vec<bool>> = smoothed.iter().map(Odm::silhouette).collect();
    let structured = structure_carve(&up, &silhouettes, config.agreement_votes)?;
    detail_carve(&structured, &smoothed)
}
