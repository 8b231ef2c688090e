//! Voxel rock: random face-connected growth and rigid pose bookkeeping.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::{EnvError, Result};

const FACES: [[i32; 3]; 6] = [
    [1, 0, 0],
    [-1, 0, 0],
    [0, 1, 0],
    [0, -1, 0],
    [0, 0, 1],
    [0, 0, -1],
];

/// Grows a face-connected voxel set of `round(volume / delta^3)` voxels
/// (at least one) by repeatedly attaching a new voxel behind a uniformly
/// random exposed face. Offsets are lattice coordinates around the seed
/// voxel; centering on the centroid happens in [`RockState`].
pub fn grow_rock(volume_mm3: f64, delta_mm: f64, rng: &mut ChaCha8Rng) -> Result<Vec<[i32; 3]>> {
    if volume_mm3 <= 0.0 || delta_mm <= 0.0 {
        return Err(EnvError::Config(format!(
            "rock volume {volume_mm3} and voxel edge {delta_mm} must be positive"
        )));
    }
    let target = ((volume_mm3 / delta_mm.powi(3)).round() as u64).max(1);
    let mut voxels: Vec<[i32; 3]> = vec![[0, 0, 0]];
    let mut occupied: HashSet<[i32; 3]> = voxels.iter().copied().collect();
    while (voxels.len() as u64) < target {
        // Exposed faces, enumerated in insertion order. A free cell adjacent
        // to k occupied faces appears k times, making the draw face-uniform.
        let mut faces = Vec::new();
        for v in &voxels {
            for f in &FACES {
                let cell = [v[0] + f[0], v[1] + f[1], v[2] + f[2]];
                if !occupied.contains(&cell) {
                    faces.push(cell);
                }
            }
        }
        let cell = faces[rng.gen_range(0..faces.len())];
        occupied.insert(cell);
        voxels.push(cell);
    }
    Ok(voxels)
}

/// Flood-fill connectivity check over face adjacency.
pub fn is_face_connected(voxels: &[[i32; 3]]) -> bool {
    if voxels.is_empty() {
        return false;
    }
    let occupied: HashSet<[i32; 3]> = voxels.iter().copied().collect();
    let mut seen = HashSet::new();
    let mut stack = vec![voxels[0]];
    seen.insert(voxels[0]);
    while let Some(v) = stack.pop() {
        for f in &FACES {
            let n = [v[0] + f[0], v[1] + f[1], v[2] + f[2]];
            if occupied.contains(&n) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen.len() == occupied.len()
}

/// Rigid rock state: an immutable voxel set plus a pose. The pose position
/// is the location of the voxel-set centroid in world mm.
#[derive(Debug, Clone, PartialEq)]
pub struct RockState {
    pub voxels: Vec<[i32; 3]>,
    /// Centroid of `voxels` in lattice units.
    pub centroid: [f64; 3],
    pub delta_mm: f64,
    /// World position (mm) of the centroid.
    pub position_mm: [f64; 3],
    pub pitch_rad: f64,
    pub held: bool,
    /// Rigid offset from the bucket while held.
    pub held_offset_mm: [f64; 3],
}

impl RockState {
    pub fn new(voxels: Vec<[i32; 3]>, delta_mm: f64) -> Self {
        let n = voxels.len() as f64;
        let mut centroid = [0.0; 3];
        for v in &voxels {
            for a in 0..3 {
                centroid[a] += v[a] as f64 / n;
            }
        }
        RockState {
            voxels,
            centroid,
            delta_mm,
            position_mm: [0.0; 3],
            pitch_rad: 0.0,
            held: false,
            held_offset_mm: [0.0; 3],
        }
    }

    pub fn voxel_count(&self) -> usize {
        self.voxels.len()
    }

    /// Lowest voxel bottom face height in world mm. Iterates every voxel.
    pub fn bottom_mm(&self) -> f64 {
        let mut min_z = f64::INFINITY;
        for v in &self.voxels {
            let z = self.position_mm[2] + (v[2] as f64 - self.centroid[2]) * self.delta_mm;
            min_z = min_z.min(z);
        }
        min_z - self.delta_mm / 2.0
    }

    /// Axis-aligned bounding box (min, max) in world mm. Iterates every voxel.
    pub fn aabb_mm(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.voxels {
            for a in 0..3 {
                let c = self.position_mm[a] + (v[a] as f64 - self.centroid[a]) * self.delta_mm;
                lo[a] = lo[a].min(c - self.delta_mm / 2.0);
                hi[a] = hi[a].max(c + self.delta_mm / 2.0);
            }
        }
        (lo, hi)
    }
}
