use std::collections::HashMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::voxel::VoxelGrid;

/// Quadrilateral surface mesh. Each quad is a parallelogram with corners
/// `v0, v1, v2, v3` in order, wound counter-clockwise seen from outside.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuadMesh {
    pub vertices: Vec<[f64; 3]>,
    pub quads: Vec<[u32; 4]>,
    pub areas: Vec<f64>,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

impl QuadMesh {
    /// Builds a mesh from explicit quads, computing each parallelogram's area.
    pub fn from_quads(vertices: Vec<[f64; 3]>, quads: Vec<[u32; 4]>) -> Result<QuadMesh> {
        let mut areas = Vec::with_capacity(quads.len());
        for q in &quads {
            if q.iter().any(|&i| i as usize >= vertices.len()) {
                return Err(Error::validation("quad refers to a missing vertex"));
            }
            let v0 = vertices[q[0] as usize];
            let c = cross(sub(vertices[q[1] as usize], v0), sub(vertices[q[3] as usize], v0));
            areas.push((c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt());
        }
        Ok(QuadMesh { vertices, quads, areas })
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn corners(&self, quad: usize) -> [[f64; 3]; 4] {
        self.quads[quad].map(|i| self.vertices[i as usize])
    }

    /// Wavefront OBJ text with every quad split into two triangles.
    pub fn to_obj(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            writeln!(out, "v {} {} {}", v[0], v[1], v[2]).unwrap();
        }
        for q in &self.quads {
            let [a, b, c, d] = q.map(|i| i + 1);
            writeln!(out, "f {a} {b} {c}").unwrap();
            writeln!(out, "f {a} {c} {d}").unwrap();
        }
        out
    }
}

/// Lattice corners of the face of voxel `(x, y, z)` facing `dir` (0..6 as
/// +X, −X, +Y, −Y, +Z, −Z), wound so the normal points outward.
fn face_corners(x: u32, y: u32, z: u32, dir: usize) -> [[u32; 3]; 4] {
    let (x1, y1, z1) = (x + 1, y + 1, z + 1);
    match dir {
        0 => [[x1, y, z], [x1, y1, z], [x1, y1, z1], [x1, y, z1]],
        1 => [[x, y, z], [x, y, z1], [x, y1, z1], [x, y1, z]],
        2 => [[x, y1, z], [x, y1, z1], [x1, y1, z1], [x1, y1, z]],
        3 => [[x, y, z], [x1, y, z], [x1, y, z1], [x, y, z1]],
        4 => [[x, y, z1], [x1, y, z1], [x1, y1, z1], [x, y1, z1]],
        _ => [[x, y, z], [x, y1, z], [x1, y1, z], [x1, y, z]],
    }
}

/// One square per occupied-voxel face whose neighbour across the face is
/// empty or outside the grid, with coordinates scaled into the unit cube.
pub fn exposed_face_mesh(grid: &VoxelGrid) -> QuadMesh {
    let r = grid.resolution();
    let scale = 1.0 / r as f64;
    let area = scale * scale;
    let mut index: HashMap<[u32; 3], u32> = HashMap::new();
    let mut mesh = QuadMesh::default();
    for (x, y, z) in grid.occupied() {
        let neighbours = [
            (x + 1 < r).then(|| (x + 1, y, z)),
            (x > 0).then(|| (x - 1, y, z)),
            (y + 1 < r).then(|| (x, y + 1, z)),
            (y > 0).then(|| (x, y - 1, z)),
            (z + 1 < r).then(|| (x, y, z + 1)),
            (z > 0).then(|| (x, y, z - 1)),
        ];
        for (dir, n) in neighbours.iter().enumerate() {
            if matches!(n, Some((a, b, c)) if grid.get(*a, *b, *c)) {
                continue;
            }
            let corners = face_corners(x as u32, y as u32, z as u32, dir);
            let quad = corners.map(|c| {
                *index.entry(c).or_insert_with(|| {
                    mesh.vertices.push(c.map(|v| v as f64 * scale));
                    (mesh.vertices.len() - 1) as u32
                })
            });
            mesh.quads.push(quad);
            mesh.areas.push(area);
        }
    }
    mesh
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_voxel_has_six_faces() {
        let mut g = VoxelGrid::new(3).unwrap();
        g.set(1, 1, 1, true);
        let m = exposed_face_mesh(&g);
        assert_eq!(m.quads.len(), 6);
        assert_eq!(m.vertices.len(), 8);
    }

    #[test]
    fn bar_hides_shared_faces() {
        let mut g = VoxelGrid::new(3).unwrap();
        g.set(0, 0, 0, true);
        g.set(1, 0, 0, true);
        assert_eq!(exposed_face_mesh(&g).quads.len(), 10);
    }

    #[test]
    fn solid_cube_face_count() {
        for r in [1, 2, 4] {
            let m = exposed_face_mesh(&VoxelGrid::full(r).unwrap());
            assert_eq!(m.quads.len(), 6 * r * r);
            let faces = m.total_area() * (r * r) as f64;
            assert!((faces - (6 * r * r) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn normals_point_outward() {
        let mut g = VoxelGrid::new(1).unwrap();
        g.set(0, 0, 0, true);
        let m = exposed_face_mesh(&g);
        for q in 0..m.quads.len() {
            let [v0, v1, v2, v3] = m.corners(q);
            let n = cross(sub(v1, v0), sub(v3, v0));
            let center: Vec<f64> = (0..3).map(|a| (v0[a] + v1[a] + v2[a] + v3[a]) / 4.0 - 0.5).collect();
            let dot: f64 = (0..3).map(|a| n[a] * center[a]).sum();
            assert!(dot > 0.0);
        }
    }

    #[test]
    fn obj_counts() {
        let mut g = VoxelGrid::new(2).unwrap();
        g.set(0, 1, 0, true);
        let obj = exposed_face_mesh(&g).to_obj();
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 8);
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 12);
    }

    #[test]
    fn from_quads_checks_indices() {
        let v = vec![[0.0; 3], [1.0, 0.0, 0.0], [1.0, 2.0, 0.0], [0.0, 2.0, 0.0]];
        let m = QuadMesh::from_quads(v.clone(), vec![[0, 1, 2, 3]]).unwrap();
        assert_eq!(m.areas, vec![2.0]);
        assert!(QuadMesh::from_quads(v, vec![[0, 1, 2, 4]]).is_err());
    }
}
