use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, SampledField};
use crate::quad::unit_ball_volume;

/// Radii `h_min · 2^k` up to the first one reaching the box diameter.
pub fn morrey_radii(grid: &Grid) -> Vec<f64> {
    crate::weights::dyadic_radii(grid)
}

/// `max_{x, ρ} |B(x,ρ)|^{1/α - 1/r} (Σ_{|y-x| < ρ} |f(y)|^r vol)^{1/r}`
/// over balls centered at cell centers with the given radii; `|B|` is the
/// exact ball volume.
pub fn morrey_norm(f: &SampledField, r: f64, alpha: f64, radii: &[f64]) -> Result<f64> {
    if radii.is_empty() {
        return Err(Error::EmptyFamily("Morrey ball radii".into()));
    }
    if !(r >= 1.0 && r <= alpha) {
        return Err(invalid(format!("Morrey needs 1 <= r <= alpha, got r={r}, alpha={alpha}")));
    }
    let grid = f.grid();
    let m = f.max_abs();
    if m == 0.0 {
        return Ok(0.0);
    }
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    let thresholds: Vec<f64> = radii.iter().map(|r| r * r).collect();
    let d = grid.dim();
    let vol = grid.cell_volume();
    let support: Vec<(Vec<f64>, f64)> = (0..grid.len())
        .filter(|&i| f.values()[i] != 0.0)
        .map(|i| (grid.center(i), (f.values()[i].abs() / m).powf(r)))
        .collect();
    let omega = unit_ball_volume(d);
    let prefactor: Vec<f64> = radii
        .iter()
        .map(|rho| (omega * rho.powi(d as i32)).powf(1.0 / alpha - 1.0 / r))
        .collect();
    let best = (0..grid.len())
        .into_par_iter()
        .map_init(
            || (vec![0.0; d], vec![0.0; radii.len()]),
            |(x, buckets), i| {
                grid.center_into(i, x);
                buckets.iter_mut().for_each(|b| *b = 0.0);
                for (y, w) in &support {
                    let d2: f64 = (0..d).map(|a| (x[a] - y[a]).powi(2)).sum();
                    let k = thresholds.partition_point(|&t| t <= d2);
                    if k < buckets.len() {
                        buckets[k] += w;
                    }
                }
                let mut acc = 0.0;
                let mut best = 0.0f64;
                for (k, b) in buckets.iter().enumerate() {
                    acc += b;
                    best = best.max(prefactor[k] * (acc * vol).powf(1.0 / r));
                }
                best
            },
        )
        .reduce(|| 0.0, f64::max);
    Ok(m * best)
}
