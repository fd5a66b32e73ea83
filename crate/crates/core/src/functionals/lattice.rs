use crate::domain::DomainMask;
use crate::grid::Grid;

/// Ω cells with integer coordinates, for kernels that depend on `|x - y|`
/// through a table indexed by absolute cell offsets.
pub(crate) struct PairLattice {
    pub dim: usize,
    /// Linear grid index of each Ω cell.
    pub cells: Vec<usize>,
    coords: Vec<i64>,
    points: Vec<usize>,
    pub h: Vec<f64>,
}

impl PairLattice {
    pub fn new(omega: &DomainMask) -> Self {
        let grid = omega.grid();
        let cells = omega.indices();
        let dim = grid.dim();
        let mut coords = Vec::with_capacity(cells.len() * dim);
        for &c in &cells {
            coords.extend(grid.multi_index(c).into_iter().map(|k| k as i64));
        }
        Self { dim, cells, coords, points: grid.points().to_vec(), h: grid.cell_size().to_vec() }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn coords(&self, i: usize) -> &[i64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Index of `|c_i - c_j|` (per axis) in an absolute-offset table.
    #[inline]
    pub fn offset(&self, i: usize, j: usize) -> usize {
        let (a, b) = (self.coords(i), self.coords(j));
        let mut idx = 0;
        let mut stride = 1;
        for k in 0..self.dim {
            idx += a[k].abs_diff(b[k]) as usize * stride;
            stride *= self.points[k];
        }
        idx
    }

    /// `φ(|z|)` for every absolute offset `z = o ⊙ h`; the zero offset maps to 0.
    pub fn radial_table<F: Fn(f64) -> f64>(&self, phi: F) -> Vec<f64> {
        table(&self.points, &self.h, 1.0, phi)
    }

}

fn table<F: Fn(f64) -> f64>(dims: &[usize], h: &[f64], unit: f64, phi: F) -> Vec<f64> {
    let units: Vec<f64> = h.iter().map(|h| h * unit).collect();
    let mut out: Vec<f64> = offset_radii(dims, &units).into_iter().map(phi).collect();
    out[0] = 0.0;
    out
}

/// `|q ⊙ units|` for every `q` with `0 ≤ q_a < dims_a`, axis 0 fastest.
pub(crate) fn offset_radii(dims: &[usize], units: &[f64]) -> Vec<f64> {
    let total: usize = dims.iter().product();
    (0..total)
        .map(|idx| {
            let mut rem = idx;
            let mut r2 = 0.0;
            for (a, n) in dims.iter().enumerate() {
                let q = (rem % n) as f64;
                rem /= n;
                r2 += (q * units[a]).powi(2);
            }
            r2.sqrt()
        })
        .collect()
}

/// Radius of the ball with the volume of one cell.
pub(crate) fn equivalent_radius(grid: &Grid) -> f64 {
    let n = grid.dim();
    (grid.cell_volume() / crate::quad::unit_ball_volume(n)).powf(1.0 / n as f64)
}
