//! Cubic binary occupancy grids.

use rayon::prelude::*;

use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};

/// Largest resolution any operation will produce or decode.
pub const MAX_RESOLUTION: usize = 1024;

const VOXEL_MAGIC: &[u8; 4] = b"MVDV";
const VOXEL_VERSION: u16 = 1;

/// An R×R×R boolean occupancy grid, stored x-fastest (x, then y, then z).
#[derive(Clone, PartialEq, Eq)]
pub struct VoxelGrid {
    resolution: usize,
    cells: Vec<bool>,
}

impl std::fmt::Debug for VoxelGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VoxelGrid")
            .field("resolution", &self.resolution)
            .field("occupied", &self.count())
            .finish()
    }
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution == 0 {
        return Err(Error::validation("resolution must be at least 1"));
    }
    if resolution > MAX_RESOLUTION {
        return Err(Error::validation(format!(
            "resolution {resolution} exceeds the maximum of {MAX_RESOLUTION}"
        )));
    }
    Ok(())
}

impl VoxelGrid {
    /// An empty grid.
    pub fn new(resolution: usize) -> Result<Self> {
        check_resolution(resolution)?;
        Ok(VoxelGrid {
            resolution,
            cells: vec![false; resolution * resolution * resolution],
        })
    }

    pub fn full(resolution: usize) -> Result<Self> {
        let mut g = Self::new(resolution)?;
        g.cells.fill(true);
        Ok(g)
    }

    pub fn from_fn(resolution: usize, f: impl Fn(usize, usize, usize) -> bool + Sync) -> Result<Self> {
        check_resolution(resolution)?;
        let r = resolution;
        let mut cells = vec![false; r * r * r];
        cells.par_chunks_mut(r * r).enumerate().for_each(|(z, slice)| {
            for y in 0..r {
                for x in 0..r {
                    slice[x + r * y] = f(x, y, z);
                }
            }
        });
        Ok(VoxelGrid { resolution, cells })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.resolution * (y + self.resolution * z)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.cells[self.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, value: bool) {
        let i = self.index(x, y, z);
        self.cells[i] = value;
    }

    /// Raw cells in x-fastest order.
    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [bool] {
        &mut self.cells
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    /// True when every occupied cell of `self` is occupied in `other`.
    pub fn is_subset_of(&self, other: &VoxelGrid) -> bool {
        self.resolution == other.resolution
            && self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }

    pub fn occupied(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let r = self.resolution;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(move |(i, _)| (i % r, (i / r) % r, i / (r * r)))
    }

    /// Nearest-neighbour up-sampling: output cell (x, y, z) copies input cell
    /// (x / factor, y / factor, z / factor).
    pub fn upsample_nn(&self, factor: usize) -> Result<VoxelGrid> {
        self.upsample_nn_limited(factor, MAX_RESOLUTION)
    }

    pub fn upsample_nn_limited(&self, factor: usize, max_resolution: usize) -> Result<VoxelGrid> {
        if factor == 0 {
            return Err(Error::validation("up-sampling factor must be at least 1"));
        }
        let out_res = self
            .resolution
            .checked_mul(factor)
            .filter(|&r| r <= max_resolution.min(MAX_RESOLUTION))
            .ok_or_else(|| {
                Error::validation(format!(
                    "{} x {factor} exceeds the maximum resolution {}",
                    self.resolution,
                    max_resolution.min(MAX_RESOLUTION)
                ))
            })?;
        let r = self.resolution;
        let mut cells = vec![false; out_res * out_res * out_res];
        cells
            .par_chunks_mut(out_res * out_res)
            .enumerate()
            .for_each(|(z, slice)| {
                let src_z = z / factor;
                for y in 0..out_res {
                    let src_row = &self.cells[r * (y / factor + r * src_z)..][..r];
                    let dst_row = &mut slice[out_res * y..][..out_res];
                    for (x, d) in dst_row.iter_mut().enumerate() {
                        *d = src_row[x / factor];
                    }
                }
            });
        Ok(VoxelGrid {
            resolution: out_res,
            cells,
        })
    }

    /// Block max-pooling: a low-resolution cell is occupied when any cell of
    /// its factor³ block is. The NN up-sampling of the result contains `self`.
    pub fn downsample_any(&self, factor: usize) -> Result<VoxelGrid> {
        if factor == 0 || self.resolution % factor != 0 {
            return Err(Error::validation(format!(
                "factor {factor} does not divide resolution {}",
                self.resolution
            )));
        }
        let mut out = VoxelGrid::new(self.resolution / factor)?;
        for (x, y, z) in self.occupied() {
            out.set(x / factor, y / factor, z / factor, true);
        }
        Ok(out)
    }

    /// Fills every empty cell that cannot reach the outside of the grid
    /// through 6-connected empty cells.
    pub fn solidify(&self) -> VoxelGrid {
        let r = self.resolution;
        let n = self.cells.len();
        // outside[i]: empty and connected to the boundary
        let mut outside = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        let seed = |i: usize, outside: &mut Vec<bool>, stack: &mut Vec<usize>| {
            if !self.cells[i] && !outside[i] {
                outside[i] = true;
                stack.push(i);
            }
        };
        for a in 0..r {
            for b in 0..r {
                for (x, y, z) in [
                    (0, a, b),
                    (r - 1, a, b),
                    (a, 0, b),
                    (a, r - 1, b),
                    (a, b, 0),
                    (a, b, r - 1),
                ] {
                    seed(self.index(x, y, z), &mut outside, &mut stack);
                }
            }
        }
        while let Some(i) = stack.pop() {
            let (x, y, z) = (i % r, (i / r) % r, i / (r * r));
            let mut visit = |j: usize| {
                if !self.cells[j] && !outside[j] {
                    outside[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < r {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - r);
            }
            if y + 1 < r {
                visit(i + r);
            }
            if z > 0 {
                visit(i - r * r);
            }
            if z + 1 < r {
                visit(i + r * r);
            }
        }
        VoxelGrid {
            resolution: r,
            cells: outside.into_iter().map(|o| !o).collect(),
        }
    }

    /// Serializes to the MVDV run-length format.
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(VOXEL_MAGIC);
        w.u16(VOXEL_VERSION);
        w.u32(self.resolution as u32);
        let mut current = false;
        let mut run: u32 = 0;
        for &c in &self.cells {
            if c != current {
                w.u32(run);
                current = c;
                run = 0;
            }
            run += 1;
        }
        w.u32(run);
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<VoxelGrid> {
        let mut rd = Reader::new(bytes);
        rd.magic(VOXEL_MAGIC)?;
        rd.version(VOXEL_VERSION)?;
        let res_offset = rd.offset();
        let resolution = rd.u32("resolution")? as usize;
        if resolution == 0 || resolution > MAX_RESOLUTION {
            return Err(rd.error_at(res_offset, format!("invalid resolution {resolution}")));
        }
        let total = resolution * resolution * resolution;
        let mut cells = Vec::with_capacity(total);
        let mut value = false;
        while cells.len() < total {
            let run_offset = rd.offset();
            let run = rd.u32("run length")? as usize;
            if cells.len() + run > total {
                return Err(rd.error_at(
                    run_offset,
                    format!("run lengths sum past {total} cells"),
                ));
            }
            cells.resize(cells.len() + run, value);
            value = !value;
        }
        rd.expect_end()?;
        Ok(VoxelGrid { resolution, cells })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(rng: &mut ChaCha8Rng, r: usize, p: f64) -> VoxelGrid {
        let mut g = VoxelGrid::new(r).unwrap();
        for c in g.cells_mut() {
            *c = rng.gen_bool(p);
        }
        g
    }

    #[test]
    fn zero_resolution_rejected() {
        assert!(VoxelGrid::new(0).is_err());
    }

    #[test]
    fn upsample_single_corner_voxel() {
        let mut g = VoxelGrid::new(2).unwrap();
        g.set(0, 0, 0, true);
        let up = g.upsample_nn(2).unwrap();
        assert_eq!(up.resolution(), 4);
        let occ: Vec<_> = up.occupied().collect();
        assert_eq!(occ.len(), 8);
        assert!(occ.iter().all(|&(x, y, z)| x < 2 && y < 2 && z < 2));
    }

    #[test]
    fn upsample_factor_one_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_grid(&mut rng, 5, 0.4);
        assert_eq!(g.upsample_nn(1).unwrap(), g);
    }

    #[test]
    fn upsample_matches_floor_division_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_grid(&mut rng, 4, 0.5);
        let up = g.upsample_nn(3).unwrap();
        assert_eq!(up.resolution(), 12);
        for z in 0..12 {
            for y in 0..12 {
                for x in 0..12 {
                    assert_eq!(up.get(x, y, z), g.get(x / 3, y / 3, z / 3));
                }
            }
        }
        assert_eq!(up.count(), 27 * g.count());
    }

    #[test]
    fn upsample_guard() {
        let g = VoxelGrid::new(600).unwrap();
        assert!(g.upsample_nn(2).is_err());
        assert!(g.upsample_nn(0).is_err());
        let small = VoxelGrid::new(8).unwrap();
        assert!(small.upsample_nn_limited(4, 16).is_err());
    }

    #[test]
    fn downsample_covers_source() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_grid(&mut rng, 8, 0.05);
        let low = g.downsample_any(4).unwrap();
        assert_eq!(low.resolution(), 2);
        assert!(g.is_subset_of(&low.upsample_nn(4).unwrap()));
        assert!(g.downsample_any(3).is_err());
    }

    #[test]
    fn solidify_hollow_shell() {
        let g = VoxelGrid::from_fn(4, |x, y, z| {
            [x, y, z].iter().any(|&c| c == 0 || c == 3)
        })
        .unwrap();
        assert_eq!(g.count(), 64 - 8);
        assert_eq!(g.solidify(), VoxelGrid::full(4).unwrap());
    }

    #[test]
    fn solidify_trivial_cases() {
        let full = VoxelGrid::full(3).unwrap();
        assert_eq!(full.solidify(), full);
        let empty = VoxelGrid::new(3).unwrap();
        assert_eq!(empty.solidify(), empty);
    }

    #[test]
    fn solidify_leaky_shell_stays_open() {
        let mut g = VoxelGrid::from_fn(5, |x, y, z| {
            [x, y, z].iter().any(|&c| c == 0 || c == 4)
        })
        .unwrap();
        g.set(2, 2, 0, false);
        assert_eq!(g.solidify(), g);
    }

    #[test]
    fn encode_empty_and_full() {
        let empty = VoxelGrid::new(2).unwrap();
        let mut expected = b"MVDV".to_vec();
        expected.extend_from_slice(&1u16.to_le_bytes());
        expected.extend_from_slice(&2u32.to_le_bytes());
        let header = expected.clone();
        expected.extend_from_slice(&8u32.to_le_bytes());
        assert_eq!(empty.encode(), expected);

        let mut full_bytes = header;
        full_bytes.extend_from_slice(&0u32.to_le_bytes());
        full_bytes.extend_from_slice(&8u32.to_le_bytes());
        assert_eq!(VoxelGrid::full(2).unwrap().encode(), full_bytes);
    }

    #[test]
    fn decode_errors_carry_offsets() {
        let g = VoxelGrid::full(2).unwrap();
        let bytes = g.encode();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(VoxelGrid::decode(&bad), Err(Error::Format { offset: 0, .. })));

        let truncated = &bytes[..bytes.len() - 2];
        assert!(matches!(
            VoxelGrid::decode(truncated),
            Err(Error::Format { offset: 14, .. })
        ));

        // runs summing to 9 for a 2³ grid
        let mut over = bytes[..10].to_vec();
        over.extend_from_slice(&4u32.to_le_bytes());
        over.extend_from_slice(&5u32.to_le_bytes());
        assert!(matches!(VoxelGrid::decode(&over), Err(Error::Format { offset: 14, .. })));

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(VoxelGrid::decode(&trailing).is_err());
    }

    #[test]
    fn round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_grid(&mut rng, 8, 0.5);
        assert_eq!(VoxelGrid::decode(&g.encode()).unwrap(), g);
    }
}
