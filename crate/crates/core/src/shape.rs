//! Analytic test shapes in normalized [0,1]³ object coordinates and their
//! cell-center rasterization.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::voxel::VoxelGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeSpec {
    /// Closed axis-aligned box `[min, max]`.
    Box { min: [f64; 3], max: [f64; 3] },
    /// Open ball: points strictly closer than `radius` to `center`.
    Sphere { center: [f64; 3], radius: f64 },
    Ellipsoid { center: [f64; 3], radii: [f64; 3] },
    Union { children: Vec<ShapeSpec> },
    Difference { base: Box<ShapeSpec>, cut: Box<ShapeSpec> },
}

fn in_unit(v: f64) -> bool {
    v.is_finite() && (0.0..=1.0).contains(&v)
}

impl ShapeSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ShapeSpec::Box { min, max } => {
                for a in 0..3 {
                    if !in_unit(min[a]) || !in_unit(max[a]) {
                        return Err(Error::validation(format!(
                            "box extent on axis {a} leaves the unit cube"
                        )));
                    }
                    if min[a] > max[a] {
                        return Err(Error::validation(format!("box min > max on axis {a}")));
                    }
                }
            }
            ShapeSpec::Sphere { center, radius } => {
                Self::check_round(center, [*radius; 3], "sphere")?;
            }
            ShapeSpec::Ellipsoid { center, radii } => {
                Self::check_round(center, *radii, "ellipsoid")?;
            }
            ShapeSpec::Union { children } => {
                for c in children {
                    c.validate()?;
                }
            }
            ShapeSpec::Difference { base, cut } => {
                base.validate()?;
                cut.validate()?;
            }
        }
        Ok(())
    }

    fn check_round(center: &[f64; 3], radii: [f64; 3], what: &str) -> Result<()> {
        for a in 0..3 {
            if !radii[a].is_finite() || radii[a] < 0.0 {
                return Err(Error::validation(format!("{what} radius must be >= 0")));
            }
            if !in_unit(center[a] - radii[a]) || !in_unit(center[a] + radii[a]) {
                return Err(Error::validation(format!(
                    "{what} extent on axis {a} leaves the unit cube"
                )));
            }
        }
        Ok(())
    }

    /// Analytic inside-test.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        match self {
            ShapeSpec::Box { min, max } => (0..3).all(|a| min[a] <= p[a] && p[a] <= max[a]),
            ShapeSpec::Sphere { center, radius } => {
                let d2: f64 = (0..3).map(|a| (p[a] - center[a]).powi(2)).sum();
                d2 < radius * radius
            }
            ShapeSpec::Ellipsoid { center, radii } => {
                if radii.iter().any(|&r| r <= 0.0) {
                    return false;
                }
                let s: f64 = (0..3).map(|a| ((p[a] - center[a]) / radii[a]).powi(2)).sum();
                s < 1.0
            }
            ShapeSpec::Union { children } => children.iter().any(|c| c.contains(p)),
            ShapeSpec::Difference { base, cut } => base.contains(p) && !cut.contains(p),
        }
    }
}

/// Occupies cell (x, y, z) iff its center ((x+.5)/R, (y+.5)/R, (z+.5)/R) is inside `spec`.
pub fn rasterize(spec: &ShapeSpec, resolution: usize) -> Result<VoxelGrid> {
    spec.validate()?;
    let r = resolution as f64;
    VoxelGrid::from_fn(resolution, |x, y, z| {
        spec.contains([(x as f64 + 0.5) / r, (y as f64 + 0.5) / r, (z as f64 + 0.5) / r])
    })
}

/// Random axis-aligned box with corners on the `lattice`-cell grid, at least
/// one cell thick on every axis.
pub fn random_lattice_box<R: Rng>(rng: &mut R, lattice: usize) -> ShapeSpec {
    let mut min = [0.0; 3];
    let mut max = [0.0; 3];
    for a in 0..3 {
        let lo = rng.gen_range(0..lattice);
        let hi = rng.gen_range(lo + 1..=lattice);
        min[a] = lo as f64 / lattice as f64;
        max[a] = hi as f64 / lattice as f64;
    }
    ShapeSpec::Box { min, max }
}

fn boxes_overlap(a: &ShapeSpec, b: &ShapeSpec) -> bool {
    match (a, b) {
        (ShapeSpec::Box { min: amin, max: amax }, ShapeSpec::Box { min: bmin, max: bmax }) => {
            (0..3).all(|k| amin[k] < bmax[k] && bmin[k] < amax[k])
        }
        _ => true,
    }
}

/// Union of `count` pairwise disjoint lattice boxes, found by rejection sampling.
pub fn random_disjoint_boxes<R: Rng>(rng: &mut R, count: usize, lattice: usize) -> ShapeSpec {
    let mut children: Vec<ShapeSpec> = Vec::with_capacity(count);
    while children.len() < count {
        // smaller boxes make disjoint placements easy to find
        let candidate = loop {
            let b = random_lattice_box(rng, lattice);
            if let ShapeSpec::Box { min, max } = &b {
                if (0..3).all(|a| max[a] - min[a] <= 0.5) {
                    break b;
                }
            }
        };
        if children.iter().all(|c| !boxes_overlap(c, &candidate)) {
            children.push(candidate);
        }
    }
    ShapeSpec::Union { children }
}

fn random_round<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> ShapeSpec {
    let mut center = [0.0; 3];
    let mut radii = [0.0; 3];
    for a in 0..3 {
        radii[a] = rng.gen_range(lo..hi);
        center[a] = rng.gen_range(radii[a] + 0.02..=1.0 - radii[a] - 0.02);
    }
    if rng.gen_bool(0.4) {
        let radius = radii.iter().cloned().fold(f64::INFINITY, f64::min);
        let center = center.map(|c| c.clamp(radius + 0.02, 1.0 - radius - 0.02));
        ShapeSpec::Sphere { center, radius }
    } else {
        ShapeSpec::Ellipsoid { center, radii }
    }
}

fn random_free_box<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> ShapeSpec {
    let mut min = [0.0; 3];
    let mut max = [0.0; 3];
    for a in 0..3 {
        let extent = rng.gen_range(lo..hi);
        min[a] = rng.gen_range(0.02..=0.98 - extent);
        max[a] = min[a] + extent;
    }
    ShapeSpec::Box { min, max }
}

/// A random procedural object: spheres, ellipsoids, boxes, their unions and
/// differences. Always valid.
pub fn random_shape<R: Rng>(rng: &mut R) -> ShapeSpec {
    match rng.gen_range(0..10) {
        0..=2 => random_round(rng, 0.15, 0.45),
        3 => random_free_box(rng, 0.2, 0.8),
        4..=6 => {
            let n = rng.gen_range(2..=3);
            let children = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.7) {
                        random_round(rng, 0.1, 0.3)
                    } else {
                        random_free_box(rng, 0.1, 0.5)
                    }
                })
                .collect();
            ShapeSpec::Union { children }
        }
        _ => {
            let base = random_round(rng, 0.25, 0.45);
            let cut = if rng.gen_bool(0.5) {
                random_round(rng, 0.1, 0.3)
            } else {
                random_free_box(rng, 0.15, 0.5)
            };
            ShapeSpec::Difference {
                base: Box::new(base),
                cut: Box::new(cut),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_box_fills_grid() {
        let spec = ShapeSpec::Box {
            min: [0.0; 3],
            max: [1.0; 3],
        };
        assert_eq!(rasterize(&spec, 2).unwrap(), VoxelGrid::full(2).unwrap());
    }

    #[test]
    fn zero_radius_sphere_is_empty() {
        let spec = ShapeSpec::Sphere {
            center: [0.5; 3],
            radius: 0.0,
        };
        assert!(rasterize(&spec, 4).unwrap().is_empty());
        assert!(rasterize(&spec, 5).unwrap().is_empty());
    }

    #[test]
    fn half_sphere_matches_brute_force() {
        let spec = ShapeSpec::Sphere {
            center: [0.5; 3],
            radius: 0.5,
        };
        let g = rasterize(&spec, 4).unwrap();
        let mut expected = 0;
        for z in 0..4 {
            for y in 0..4 {
                for x in 0..4 {
                    let c = [x, y, z].map(|i| (i as f64 + 0.5) / 4.0 - 0.5);
                    let inside = c.iter().map(|v| v * v).sum::<f64>() < 0.25;
                    assert_eq!(g.get(x, y, z), inside);
                    expected += inside as usize;
                }
            }
        }
        // cells with two or more outer coordinates (offset 3/8) fall outside
        assert_eq!(expected, 32);
        assert_eq!(g.count(), 32);
    }

    #[test]
    fn malformed_specs_rejected() {
        let bad = [
            ShapeSpec::Box {
                min: [-0.1, 0.0, 0.0],
                max: [0.5; 3],
            },
            ShapeSpec::Box {
                min: [0.6, 0.0, 0.0],
                max: [0.5; 3],
            },
            ShapeSpec::Sphere {
                center: [0.9, 0.5, 0.5],
                radius: 0.2,
            },
            ShapeSpec::Union {
                children: vec![ShapeSpec::Sphere {
                    center: [0.5; 3],
                    radius: -1.0,
                }],
            },
        ];
        for spec in &bad {
            assert!(rasterize(spec, 4).is_err(), "{spec:?}");
        }
    }

    #[test]
    fn random_shapes_are_valid_and_nonempty() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let s = random_shape(&mut rng);
            s.validate().unwrap();
            assert!(!rasterize(&s, 16).unwrap().is_empty(), "{s:?}");
        }
    }

    #[test]
    fn disjoint_boxes_do_not_share_cells() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let ShapeSpec::Union { children } = random_disjoint_boxes(&mut rng, 3, 32) else {
                unreachable!()
            };
            let grids: Vec<_> = children.iter().map(|c| rasterize(c, 32).unwrap()).collect();
            for i in 0..grids.len() {
                for j in i + 1..grids.len() {
                    assert!(grids[i]
                        .cells()
                        .iter()
                        .zip(grids[j].cells())
                        .all(|(&a, &b)| !(a && b)));
                }
            }
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = ShapeSpec::Difference {
            base: Box::new(ShapeSpec::Sphere {
                center: [0.5; 3],
                radius: 0.4,
            }),
            cut: Box::new(ShapeSpec::Box {
                min: [0.5; 3],
                max: [1.0; 3],
            }),
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<ShapeSpec>(&text).unwrap(), spec);
    }
}
