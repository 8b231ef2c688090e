//! Soil height-field and the angle-of-repose settling rule.

use crate::{EnvError, Result};

/// 2-D grid of voxel column heights. Column (ix, iy) occupies the world
/// square `[origin + i*delta, origin + (i+1)*delta)` and holds `heights`
/// voxels stacked from z = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SoilField {
    pub delta_mm: f64,
    pub cols_x: usize,
    pub cols_y: usize,
    /// World coordinate of the grid's low corner (x, y), mm.
    pub origin_mm: [f64; 2],
    /// Row-major `[iy * cols_x + ix]` voxel counts.
    pub heights: Vec<u32>,
}

impl SoilField {
    /// Builds a centered field holding exactly `total_voxels`, spread as
    /// evenly as possible (row-major order receives the remainder).
    pub fn generate(delta_mm: f64, side_mm: f64, total_voxels: u64) -> Result<Self> {
        if delta_mm <= 0.0 || side_mm < delta_mm {
            return Err(EnvError::Config(format!(
                "soil footprint side {side_mm} must cover at least one voxel of {delta_mm}"
            )));
        }
        let n = ((side_mm / delta_mm).round() as usize).max(1);
        let cells = (n * n) as u64;
        let base = (total_voxels / cells) as u32;
        let rem = (total_voxels % cells) as usize;
        let mut heights = vec![base; n * n];
        for h in heights.iter_mut().take(rem) {
            *h += 1;
        }
        let half = n as f64 * delta_mm / 2.0;
        Ok(SoilField {
            delta_mm,
            cols_x: n,
            cols_y: n,
            origin_mm: [-half, -half],
            heights,
        })
    }

    pub fn total_voxels(&self) -> u64 {
        self.heights.iter().map(|&h| h as u64).sum()
    }

    pub fn max_height_voxels(&self) -> u32 {
        self.heights.iter().copied().max().unwrap_or(0)
    }

    pub fn height_at(&self, ix: usize, iy: usize) -> u32 {
        self.heights[iy * self.cols_x + ix]
    }

    /// Column index containing world coordinate (x, y), clamped to the grid.
    pub fn column_of(&self, x_mm: f64, y_mm: f64) -> (usize, usize) {
        let ix = ((x_mm - self.origin_mm[0]) / self.delta_mm).floor() as i64;
        let iy = ((y_mm - self.origin_mm[1]) / self.delta_mm).floor() as i64;
        (
            ix.clamp(0, self.cols_x as i64 - 1) as usize,
            iy.clamp(0, self.cols_y as i64 - 1) as usize,
        )
    }

    /// Surface height (mm) of the column containing (x, y).
    pub fn surface_mm(&self, x_mm: f64, y_mm: f64) -> f64 {
        let (ix, iy) = self.column_of(x_mm, y_mm);
        self.height_at(ix, iy) as f64 * self.delta_mm
    }

    /// Maximum surface height (mm) over the world rectangle
    /// `[x0, x1] x [y0, y1]`, visiting every overlapped column.
    /// Returns the height and the number of columns visited.
    pub fn max_surface_over(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> (f64, u64) {
        let (ix0, iy0) = self.column_of(x0, y0);
        let (ix1, iy1) = self.column_of(x1, y1);
        let mut best = 0u32;
        let mut visited = 0u64;
        for iy in iy0..=iy1 {
            for ix in ix0..=ix1 {
                best = best.max(self.height_at(ix, iy));
                visited += 1;
            }
        }
        (best as f64 * self.delta_mm, visited)
    }
}

/// Outcome of one settling pass to fixpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SettleStats {
    pub moves: u64,
    /// Voxels visited while scanning (one per stacked voxel per sweep).
    pub voxel_visits: u64,
}

const MAX_SETTLE_MOVES: u64 = 1_000_000;

/// Applies the repose rule to fixpoint: while any column exceeds one of its
/// 4-neighbors by at least 2 voxels, one top voxel moves to the lowest such
/// neighbor. Scan order is row-major and neighbor ties break in N, E, S, W
/// order, so the result is deterministic. Total voxel count is conserved.
pub fn settle_soil(soil: &mut SoilField) -> Result<SettleStats> {
    let (nx, ny) = (soil.cols_x, soil.cols_y);
    let mut moves = 0u64;
    let mut visits = 0u64;
    loop {
        let mut moved_this_sweep = false;
        for iy in 0..ny {
            for ix in 0..nx {
                let idx = iy * nx + ix;
                let h = soil.heights[idx];
                visits += h as u64;
                // N, E, S, W in grid coordinates (N = +y).
                let neighbors = [
                    (ix as i64, iy as i64 + 1),
                    (ix as i64 + 1, iy as i64),
                    (ix as i64, iy as i64 - 1),
                    (ix as i64 - 1, iy as i64),
                ];
                let mut target: Option<(usize, u32)> = None;
                for (jx, jy) in neighbors {
                    if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                        continue;
                    }
                    let jdx = jy as usize * nx + jx as usize;
                    let hj = soil.heights[jdx];
                    if h >= hj + 2 {
                        match target {
                            Some((_, best)) if hj >= best => {}
                            _ => target = Some((jdx, hj)),
                        }
                    }
                }
                if let Some((jdx, _)) = target {
                    soil.heights[idx] -= 1;
                    soil.heights[jdx] += 1;
                    moves += 1;
                    moved_this_sweep = true;
                    if moves > MAX_SETTLE_MOVES {
                        return Err(EnvError::SimulationFault(format!(
                            "soil settling exceeded {MAX_SETTLE_MOVES} moves"
                        )));
                    }
                }
            }
        }
        if !moved_this_sweep {
            break;
        }
    }
    Ok(SettleStats {
        moves,
        voxel_visits: visits,
    })
}
