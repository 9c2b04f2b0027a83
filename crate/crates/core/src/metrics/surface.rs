//! Area-uniform surface sampling and the thresholded surface F1 score.

use std::collections::HashMap;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::mesh::{exposed_face_mesh, QuadMesh};
use super::EvalReport;
use crate::error::{Error, Result};
use crate::voxel::VoxelGrid;

/// Squared distance threshold in unit-cube coordinates.
pub const DEFAULT_THRESHOLD_SQ: f64 = 0.0001;
pub const DEFAULT_SAMPLES: usize = 10_000;

/// `n` points drawn area-uniformly: a quad with probability proportional to
/// its area, then a uniform point inside it.
pub fn sample_surface(mesh: &QuadMesh, n: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    if mesh.is_empty() {
        return Err(Error::validation("cannot sample an empty mesh"));
    }
    let pick = WeightedIndex::new(&mesh.areas).map_err(|e| Error::validation(format!("bad quad areas: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let [v0, v1, _, v3] = mesh.corners(pick.sample(&mut rng));
            let (s, t): (f64, f64) = (rng.gen(), rng.gen());
            [0, 1, 2].map(|a| v0[a] + s * (v1[a] - v0[a]) + t * (v3[a] - v0[a]))
        })
        .collect())
}

fn dist_sq(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).powi(2)).sum()
}

/// Uniform bucket grid answering "is any point within radius r" exactly.
pub struct PointIndex<'a> {
    points: &'a [[f64; 3]],
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<u32>>,
}

impl<'a> PointIndex<'a> {
    /// `cell` should equal the query radius so that 27 buckets cover a ball.
    pub fn new(points: &'a [[f64; 3]], cell: f64) -> Self {
        let mut buckets: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(i as u32);
        }
        PointIndex { points, cell, buckets }
    }

    fn key(p: &[f64; 3], cell: f64) -> [i64; 3] {
        p.map(|c| (c / cell).floor() as i64)
    }

    /// True if some indexed point lies within squared distance `radius_sq`.
    /// Requires `radius_sq <= cell²`.
    pub fn any_within(&self, q: &[f64; 3], radius_sq: f64) -> bool {
        debug_assert!(radius_sq <= self.cell * self.cell * (1.0 + 1e-12));
        let k = Self::key(q, self.cell);
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(b) = self.buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        if b.iter().any(|&i| dist_sq(&self.points[i as usize], q) <= radius_sq) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

/// Percentage of `queries` with a point of `reference` within `threshold_sq`.
pub fn matched_percentage(queries: &[[f64; 3]], reference: &[[f64; 3]], threshold_sq: f64) -> f64 {
    if queries.is_empty() {
        return 0.0;
    }
    let index = PointIndex::new(reference, threshold_sq.sqrt());
    let hits = queries.par_iter().filter(|q| index.any_within(q, threshold_sq)).count();
    100.0 * hits as f64 / queries.len() as f64
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Surface precision/recall/F1 (all in percent) between the exposed-face
/// meshes of two grids, each normalized to the unit cube and sampled with `seed`.
pub fn f1_surface(pred: &VoxelGrid, gt: &VoxelGrid, n: usize, threshold_sq: f64, seed: u64) -> Result<EvalReport> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::validation("surface F1 needs two nonempty grids"));
    }
    if n == 0 {
        return Err(Error::validation("sample count must be positive"));
    }
    if !(threshold_sq.is_finite() && threshold_sq > 0.0) {
        return Err(Error::validation("threshold must be positive"));
    }
    let p_pts = sample_surface(&exposed_face_mesh(pred), n, seed)?;
    let g_pts = sample_surface(&exposed_face_mesh(gt), n, seed)?;
    let precision = matched_percentage(&p_pts, &g_pts, threshold_sq);
    let recall = matched_percentage(&g_pts, &p_pts, threshold_sq);
    Ok(EvalReport {
        f1: Some(f1_score(precision, recall)),
        precision: Some(precision),
        recall: Some(recall),
        sample_count: Some(n),
        threshold_sq: Some(threshold_sq),
        seed: Some(seed),
        ..EvalReport::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x0: f64, w: f64, h: f64) -> ([[f64; 3]; 4], f64) {
        ([[x0, 0.0, 0.0], [x0 + w, 0.0, 0.0], [x0 + w, h, 0.0], [x0, h, 0.0]], w * h)
    }

    #[test]
    fn samples_lie_on_quads() {
        let mut g = VoxelGrid::new(4).unwrap();
        g.set(1, 2, 3, true);
        let pts = sample_surface(&exposed_face_mesh(&g), 500, 3).unwrap();
        for p in pts {
            let on_face = (0..3).any(|a| {
                let lo = [1.0, 2.0, 3.0][a] / 4.0;
                let hi = lo + 0.25;
                ((p[a] - lo).abs() < 1e-12 || (p[a] - hi).abs() < 1e-12)
                    && (0..3).filter(|&b| b != a).all(|b| {
                        let lo = [1.0, 2.0, 3.0][b] / 4.0;
                        p[b] >= lo - 1e-12 && p[b] <= lo + 0.25 + 1e-12
                    })
            });
            assert!(on_face, "{p:?}");
        }
    }

    #[test]
    fn single_quad_mean_near_center() {
        let (v, _) = rect(0.2, 0.4, 0.6);
        let mesh = QuadMesh::from_quads(v.to_vec(), vec![[0, 1, 2, 3]]).unwrap();
        let pts = sample_surface(&mesh, 100_000, 7).unwrap();
        let mean: Vec<f64> = (0..3).map(|a| pts.iter().map(|p| p[a]).sum::<f64>() / pts.len() as f64).collect();
        assert!((mean[0] - 0.4).abs() < 0.01);
        assert!((mean[1] - 0.3).abs() < 0.01);
        assert!(mean[2].abs() < 1e-12);
    }

    #[test]
    fn area_weighting() {
        let (a, _) = rect(0.0, 0.1, 0.1);
        let (b, _) = rect(0.5, 0.2, 0.1);
        let mut verts = a.to_vec();
        verts.extend_from_slice(&b);
        let mesh = QuadMesh::from_quads(verts, vec![[0, 1, 2, 3], [4, 5, 6, 7]]).unwrap();
        let pts = sample_surface(&mesh, 100_000, 11).unwrap();
        let second = pts.iter().filter(|p| p[0] >= 0.5).count() as f64 / 1e5;
        assert!((second - 2.0 / 3.0).abs() < 0.02, "{second}");
        assert!(sample_surface(&QuadMesh::default(), 10, 0).is_err());
    }

    #[test]
    fn bucket_index_agrees_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let refs: Vec<[f64; 3]> = (0..2000).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        let queries: Vec<[f64; 3]> = (0..2000).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        let t: f64 = 0.0025;
        let index = PointIndex::new(&refs, t.sqrt());
        let mut hits = 0;
        for q in &queries {
            let brute = refs.iter().any(|r| dist_sq(r, q) <= t);
            assert_eq!(index.any_within(q, t), brute);
            hits += brute as usize;
        }
        assert!(hits > 100 && hits < 1900);
    }

    #[test]
    fn identical_grids_score_100() {
        let g = VoxelGrid::from_fn(8, |x, y, z| x + y + z < 9).unwrap();
        let r = f1_surface(&g, &g, 2000, DEFAULT_THRESHOLD_SQ, 4).unwrap();
        assert_eq!(r.f1, Some(100.0));
        assert_eq!(r.precision, Some(100.0));
        assert!(f1_surface(&g, &VoxelGrid::new(8).unwrap(), 10, DEFAULT_THRESHOLD_SQ, 0).is_err());
    }

    #[test]
    fn shifted_plate_scores_near_zero() {
        // 30x30x2 plate at R = 32; shifting one voxel along z puts every
        // top/bottom face 1/32 > 0.01 away from the other plate's faces
        let plate = |z0: usize| VoxelGrid::from_fn(32, move |x, y, z| (1..31).contains(&x) && (1..31).contains(&y) && (z0..z0 + 2).contains(&z)).unwrap();
        let gt = plate(10);
        let pred = plate(11);
        let n = 4000;
        let r = f1_surface(&pred, &gt, n, DEFAULT_THRESHOLD_SQ, 1).unwrap();

        let p_pts = sample_surface(&exposed_face_mesh(&pred), n, 1).unwrap();
        let g_pts = sample_surface(&exposed_face_mesh(&gt), n, 1).unwrap();
        let brute = p_pts
            .iter()
            .filter(|p| g_pts.iter().any(|g| dist_sq(p, g) <= DEFAULT_THRESHOLD_SQ))
            .count() as f64
            * 100.0
            / n as f64;
        assert!((r.precision.unwrap() - brute).abs() < 1e-9);
        assert!(r.f1.unwrap() < 10.0, "{r:?}");
    }

    #[test]
    fn f1_formula() {
        assert_eq!(f1_score(0.0, 0.0), 0.0);
        assert!((f1_score(50.0, 100.0) - 200.0 / 3.0).abs() < 1e-12);
    }
}
