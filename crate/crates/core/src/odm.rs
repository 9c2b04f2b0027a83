//! Orthographic depth maps (ODMs) for the six axis-aligned views.
//!
//! Pixel convention: for a view along axis `a`, pixel `(u, v)` ranges over the
//! two remaining axes in (x, y, z) order, stored u-fastest. Positive views look
//! from index 0 upward, negative views from index R-1 downward. A depth of 0
//! is background; `d >= 1` means the first occupied voxel is the d-th layer
//! from the viewing face.

use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::voxel::{VoxelGrid, MAX_RESOLUTION};

const ODM_MAGIC: &[u8; 4] = b"MVDO";
const ODM_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ViewId {
    pub axis: Axis,
    pub direction: Direction,
}

impl ViewId {
    /// X+, X−, Y+, Y−, Z+, Z−; the position in this list is the view index.
    pub const ALL: [ViewId; 6] = [
        ViewId::new(Axis::X, Direction::Positive),
        ViewId::new(Axis::X, Direction::Negative),
        ViewId::new(Axis::Y, Direction::Positive),
        ViewId::new(Axis::Y, Direction::Negative),
        ViewId::new(Axis::Z, Direction::Positive),
        ViewId::new(Axis::Z, Direction::Negative),
    ];

    pub const fn new(axis: Axis, direction: Direction) -> Self {
        ViewId { axis, direction }
    }

    pub fn index(self) -> usize {
        let a = match self.axis {
            Axis::X => 0,
            Axis::Y => 2,
            Axis::Z => 4,
        };
        a + (self.direction == Direction::Negative) as usize
    }

    pub fn from_index(i: usize) -> Option<ViewId> {
        Self::ALL.get(i).copied()
    }

    /// Short file-friendly name, e.g. `x_pos`.
    pub fn name(self) -> &'static str {
        ["x_pos", "x_neg", "y_pos", "y_neg", "z_pos", "z_neg"][self.index()]
    }

    pub fn opposite(self) -> ViewId {
        let direction = match self.direction {
            Direction::Positive => Direction::Negative,
            Direction::Negative => Direction::Positive,
        };
        ViewId::new(self.axis, direction)
    }

    /// Grid coordinates of the voxel at 0-based `layer` behind pixel `(u, v)`.
    #[inline]
    pub fn voxel(self, resolution: usize, u: usize, v: usize, layer: usize) -> (usize, usize, usize) {
        let along = match self.direction {
            Direction::Positive => layer,
            Direction::Negative => resolution - 1 - layer,
        };
        match self.axis {
            Axis::X => (along, u, v),
            Axis::Y => (u, along, v),
            Axis::Z => (u, v, along),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Odm {
    view: ViewId,
    resolution: usize,
    depth: Vec<u32>,
}

impl Odm {
    /// Builds a map from u-fastest depths, checking the value range.
    pub fn new(view: ViewId, resolution: usize, depth: Vec<u32>) -> Result<Odm> {
        if resolution == 0 {
            return Err(Error::validation("ODM resolution must be at least 1"));
        }
        if depth.len() != resolution * resolution {
            return Err(Error::shape(format!(
                "{} depth values for a {resolution}x{resolution} map",
                depth.len()
            )));
        }
        if let Some(&d) = depth.iter().find(|&&d| d as usize > resolution) {
            return Err(Error::validation(format!("depth {d} exceeds resolution {resolution}")));
        }
        Ok(Odm {
            view,
            resolution,
            depth,
        })
    }

    pub fn empty(view: ViewId, resolution: usize) -> Result<Odm> {
        Odm::new(view, resolution, vec![0; resolution * resolution])
    }

    pub fn view(&self) -> ViewId {
        self.view
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn depths(&self) -> &[u32] {
        &self.depth
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> u32 {
        self.depth[u + self.resolution * v]
    }

    /// Binary mask of nonzero depths, u-fastest.
    pub fn silhouette(&self) -> Vec<bool> {
        self.depth.iter().map(|&d| d != 0).collect()
    }

    /// Nearest-neighbour spatial replication; nonzero depths map to
    /// `(d - 1) * factor + 1`, the first high-resolution layer of the block.
    pub fn upsample_nn(&self, factor: usize) -> Result<Odm> {
        if factor == 0 {
            return Err(Error::validation("up-sampling factor must be at least 1"));
        }
        let r = self.resolution;
        let out = r * factor;
        if out > MAX_RESOLUTION {
            return Err(Error::validation(format!(
                "{r} x {factor} exceeds the maximum resolution {MAX_RESOLUTION}"
            )));
        }
        let mut depth = vec![0u32; out * out];
        for v in 0..out {
            for u in 0..out {
                let d = self.depth[u / factor + r * (v / factor)];
                if d != 0 {
                    depth[u + out * v] = (d - 1) * factor as u32 + 1;
                }
            }
        }
        Ok(Odm {
            view: self.view,
            resolution: out,
            depth,
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(ODM_MAGIC);
        w.u16(ODM_VERSION);
        w.u8(self.view.index() as u8);
        w.u32(self.resolution as u32);
        for &d in &self.depth {
            w.u32(d);
        }
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Odm> {
        let mut rd = Reader::new(bytes);
        rd.magic(ODM_MAGIC)?;
        rd.version(ODM_VERSION)?;
        let view_offset = rd.offset();
        let view_idx = rd.u8("view id")?;
        let view = ViewId::from_index(view_idx as usize)
            .ok_or_else(|| rd.error_at(view_offset, format!("invalid view id {view_idx}")))?;
        let res_offset = rd.offset();
        let resolution = rd.u32("resolution")? as usize;
        if resolution == 0 || resolution > MAX_RESOLUTION {
            return Err(rd.error_at(res_offset, format!("invalid resolution {resolution}")));
        }
        let mut depth = Vec::with_capacity(resolution * resolution);
        for _ in 0..resolution * resolution {
            let at = rd.offset();
            let d = rd.u32("depth value")?;
            if d as usize > resolution {
                return Err(rd.error_at(at, format!("depth {d} exceeds resolution {resolution}")));
            }
            depth.push(d);
        }
        rd.expect_end()?;
        Ok(Odm {
            view,
            resolution,
            depth,
        })
    }
}

/// Depth map of `grid` seen from `view`.
pub fn extract_odm(grid: &VoxelGrid, view: ViewId) -> Odm {
    let r = grid.resolution();
    let mut depth = vec![0u32; r * r];
    for v in 0..r {
        for u in 0..r {
            for layer in 0..r {
                let (x, y, z) = view.voxel(r, u, v, layer);
                if grid.get(x, y, z) {
                    depth[u + r * v] = layer as u32 + 1;
                    break;
                }
            }
        }
    }
    Odm {
        view,
        resolution: r,
        depth,
    }
}

/// The six maps of one object, indexed by [`ViewId::index`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OdmSet {
    maps: [Odm; 6],
}

impl OdmSet {
    /// Accepts the six maps in any order; views must be distinct and resolutions equal.
    pub fn new(maps: Vec<Odm>) -> Result<OdmSet> {
        if maps.len() != 6 {
            return Err(Error::shape(format!("expected 6 ODMs, got {}", maps.len())));
        }
        let resolution = maps[0].resolution;
        let mut slots: [Option<Odm>; 6] = Default::default();
        for m in maps {
            if m.resolution != resolution {
                return Err(Error::shape("ODM resolutions differ within a set"));
            }
            let i = m.view.index();
            if slots[i].is_some() {
                return Err(Error::validation(format!("duplicate view {}", m.view.name())));
            }
            slots[i] = Some(m);
        }
        Ok(OdmSet {
            maps: slots.map(|m| m.expect("six distinct views fill every slot")),
        })
    }

    pub fn resolution(&self) -> usize {
        self.maps[0].resolution
    }

    pub fn get(&self, view: ViewId) -> &Odm {
        &self.maps[view.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Odm> {
        self.maps.iter()
    }

    pub fn map(&self, f: impl FnMut(&Odm) -> Odm) -> Result<OdmSet> {
        OdmSet::new(self.maps.iter().map(f).collect())
    }

    pub fn upsample_nn(&self, factor: usize) -> Result<OdmSet> {
        let maps = self
            .maps
            .iter()
            .map(|m| m.upsample_nn(factor))
            .collect::<Result<Vec<_>>>()?;
        OdmSet::new(maps)
    }
}

pub fn extract_all(grid: &VoxelGrid) -> OdmSet {
    use rayon::prelude::*;
    let maps: Vec<Odm> = ViewId::ALL.par_iter().map(|&v| extract_odm(grid, v)).collect();
    OdmSet::new(maps).expect("six views at one resolution")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn view_indices_round_trip() {
        for (i, v) in ViewId::ALL.iter().enumerate() {
            assert_eq!(v.index(), i);
            assert_eq!(ViewId::from_index(i), Some(*v));
            assert_ne!(v.opposite(), *v);
            assert_eq!(v.opposite().opposite(), *v);
        }
        assert_eq!(ViewId::from_index(6), None);
    }

    #[test]
    fn full_and_empty_cubes() {
        let full = VoxelGrid::full(3).unwrap();
        for m in extract_all(&full).iter() {
            assert!(m.depths().iter().all(|&d| d == 1));
        }
        let empty = VoxelGrid::new(3).unwrap();
        for m in extract_all(&empty).iter() {
            assert!(m.depths().iter().all(|&d| d == 0));
            assert!(m.silhouette().iter().all(|&s| !s));
        }
    }

    #[test]
    fn single_voxel_seen_from_z_pos() {
        let mut g = VoxelGrid::new(4).unwrap();
        g.set(1, 2, 0, true);
        let m = extract_odm(&g, ViewId::new(Axis::Z, Direction::Positive));
        assert_eq!(m.get(1, 2), 1);
        assert_eq!(m.depths().iter().filter(|&&d| d != 0).count(), 1);
        let back = extract_odm(&g, ViewId::new(Axis::Z, Direction::Negative));
        assert_eq!(back.get(1, 2), 4);
        let side = extract_odm(&g, ViewId::new(Axis::X, Direction::Negative));
        // u = y, v = z; scanning from x = 3 down to x = 1 is three layers
        assert_eq!(side.get(2, 0), 3);
    }

    #[test]
    fn upsample_single_pixel() {
        let mut depth = vec![0; 4];
        depth[0] = 2;
        let m = Odm::new(ViewId::ALL[0], 2, depth).unwrap();
        let up = m.upsample_nn(2).unwrap();
        for v in 0..4 {
            for u in 0..4 {
                let expected = if u < 2 && v < 2 { 3 } else { 0 };
                assert_eq!(up.get(u, v), expected);
            }
        }
        assert_eq!(m.upsample_nn(1).unwrap(), m);
    }

    #[test]
    fn odm_validation() {
        assert!(Odm::new(ViewId::ALL[0], 2, vec![0, 1, 2, 3]).is_err());
        assert!(Odm::new(ViewId::ALL[0], 2, vec![0, 1, 2]).is_err());
        assert!(Odm::new(ViewId::ALL[0], 0, vec![]).is_err());
    }

    #[test]
    fn set_rejects_duplicates_and_mixed_resolutions() {
        let a = Odm::empty(ViewId::ALL[0], 2).unwrap();
        let dup = vec![a.clone(); 6];
        assert!(OdmSet::new(dup).is_err());
        let mut mixed: Vec<Odm> = ViewId::ALL.iter().map(|&v| Odm::empty(v, 2).unwrap()).collect();
        mixed[3] = Odm::empty(ViewId::ALL[3], 3).unwrap();
        assert!(OdmSet::new(mixed).is_err());
    }

    #[test]
    fn codec_round_trip_and_errors() {
        let m = Odm::new(ViewId::ALL[5], 2, vec![0, 1, 2, 1]).unwrap();
        let bytes = m.encode();
        assert_eq!(bytes.len(), 4 + 2 + 1 + 4 + 16);
        assert_eq!(Odm::decode(&bytes).unwrap(), m);

        let mut bad_view = bytes.clone();
        bad_view[6] = 9;
        assert!(matches!(Odm::decode(&bad_view), Err(Error::Format { offset: 6, .. })));

        let mut too_deep = bytes.clone();
        too_deep[11] = 7;
        assert!(matches!(Odm::decode(&too_deep), Err(Error::Format { offset: 11, .. })));

        assert!(Odm::decode(&bytes[..bytes.len() - 1]).is_err());
    }
}
