//! Translation-invariant offset tables for ball-shaped neighborhoods.

use crate::grid::Grid;

/// Integer offsets within `rmax`, sorted by physical distance.
pub(crate) struct OffsetTable {
    pub dim: usize,
    pub offsets: Vec<i64>,
    pub dist: Vec<f64>,
}

impl OffsetTable {
    pub fn new(grid: &Grid, rmax: f64) -> Self {
        let d = grid.dim();
        let h = grid.cell_size();
        let reach: Vec<i64> = (0..d)
            .map(|a| ((rmax / h[a]).floor() as i64).min(grid.points()[a] as i64 - 1))
            .collect();
        let mut entries: Vec<(f64, Vec<i64>)> = Vec::new();
        let mut cur: Vec<i64> = reach.iter().map(|r| -r).collect();
        loop {
            let r2: f64 = (0..d).map(|a| (cur[a] as f64 * h[a]).powi(2)).sum();
            let r = r2.sqrt();
            if r < rmax {
                entries.push((r, cur.clone()));
            }
            let mut a = 0;
            loop {
                if a == d {
                    break;
                }
                cur[a] += 1;
                if cur[a] <= reach[a] {
                    break;
                }
                cur[a] = -reach[a];
                a += 1;
            }
            if a == d {
                break;
            }
        }
        entries.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.cmp(&y.1)));
        let dist = entries.iter().map(|e| e.0).collect();
        let offsets = entries.into_iter().flat_map(|e| e.1).collect();
        Self { dim: d, offsets, dist }
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    /// Linear index of `home + offset j` when inside the grid.
    #[inline]
    pub fn neighbor(&self, j: usize, home: &[i64], points: &[i64]) -> Option<usize> {
        let off = &self.offsets[j * self.dim..(j + 1) * self.dim];
        let mut idx = 0i64;
        for a in (0..self.dim).rev() {
            let k = home[a] + off[a];
            if k < 0 || k >= points[a] {
                return None;
            }
            idx = idx * points[a] + k;
        }
        Some(idx as usize)
    }
}
