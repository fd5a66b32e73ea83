use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::DomainMask;
use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, SampledField};
use crate::spaces::{norm, SpaceSpec};
use crate::stencil::OffsetTable;

/// `h_min * 2^k` for `k = 0, 1, ...` up to the first radius reaching the box diameter.
pub fn dyadic_radii(grid: &Grid) -> Vec<f64> {
    let mut r = grid.min_cell();
    let diam = grid.diameter();
    let mut out = vec![r];
    while r < diam {
        r *= 2.0;
        out.push(r);
    }
    out
}

/// Centered maximal function over open balls `B(x, r)`, `r` in `radii`,
/// averaging `|f|` over the in-box cells of each ball.
pub fn hl_maximal(f: &SampledField, radii: &[f64]) -> Result<SampledField> {
    if radii.is_empty() {
        return Err(Error::EmptyFamily("maximal radii".into()));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(invalid("maximal radii must be positive and finite"));
    }
    let grid = f.grid();
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    let tol = 1e-9 * grid.min_cell();
    let rmax = *radii.last().expect("nonempty");
    let table = OffsetTable::new(grid, rmax - tol);
    let cutoffs: Vec<usize> = radii
        .iter()
        .map(|r| table.dist.partition_point(|&d| d < r - tol))
        .collect();
    let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let points: Vec<i64> = grid.points().iter().map(|&n| n as i64).collect();
    let total = grid.len();
    let values = (0..total)
        .into_par_iter()
        .map(|i| {
            let home: Vec<i64> = grid.multi_index(i).into_iter().map(|k| k as i64).collect();
            let (mut sum, mut count) = (0.0, 0usize);
            let mut best = 0.0f64;
            let mut next = 0;
            for j in 0..table.len() {
                while next < cutoffs.len() && cutoffs[next] == j {
                    if count > 0 {
                        best = best.max(sum / count as f64);
                    }
                    next += 1;
                }
                let neighbor = table.neighbor(j, &home, &points);
                if let Some(idx) = neighbor {
                    sum += abs[idx];
                    count += 1;
                    if count == total {
                        // Every larger ball sees the whole box.
                        best = best.max(sum / count as f64);
                        next = cutoffs.len();
                        break;
                    }
                }
            }
            while next < cutoffs.len() {
                if count > 0 {
                    best = best.max(sum / count as f64);
                }
                next += 1;
            }
            best.max(abs[i])
        })
        .collect();
    SampledField::new(grid.clone(), values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalEstimate {
    pub value: f64,
    pub best_probe: usize,
    pub ratios: Vec<f64>,
}

/// Lower bound for the operator norm of `M` on `space(Ω)` over a probe family.
pub fn estimate_maximal_opnorm(
    space: &SpaceSpec,
    omega: &DomainMask,
    probes: &[SampledField],
    radii: &[f64],
) -> Result<MaximalEstimate> {
    if probes.is_empty() {
        return Err(Error::EmptyFamily("maximal probes".into()));
    }
    let mut ratios = Vec::with_capacity(probes.len());
    for g in probes {
        let g = omega.restrict(g)?;
        let base = norm(&g, space, omega)?;
        if base == 0.0 {
            return Err(invalid("maximal probes must be nonzero on the domain"));
        }
        let mg = hl_maximal(&g, radii)?;
        ratios.push(norm(&mg, space, omega)? / base);
    }
    let (best_probe, value) = ratios
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, r)| if r > acc.1 { (i, r) } else { acc });
    Ok(MaximalEstimate { value, best_probe, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TestFunctionSpec;

    #[test]
    fn constant_is_fixed() {
        let g = Grid::uniform(2, -1.0, 1.0, 12).unwrap();
        let c = SampledField::constant(&g, 2.5).unwrap();
        let m = hl_maximal(&c, &dyadic_radii(&g)).unwrap();
        for v in m.values() {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn indicator_far_point() {
        let g = Grid::uniform(1, -4.0, 4.0, 256).unwrap();
        let f = SampledField::from_fn(&g, |x| if x[0] > 0.0 && x[0] < 1.0 { 1.0 } else { 0.0 }).unwrap();
        let m = hl_maximal(&f, &dyadic_radii(&g)).unwrap();
        let i = g.locate(&[2.0 + 1e-9]).unwrap();
        // center 2 + h/2; ball of radius 2 holds 127 cells, 32 of them in (0, 1)
        assert!((m.values()[i] - 0.25).abs() < 0.01, "{}", m.values()[i]);
    }

    #[test]
    fn dominates_and_scales() {
        let g = Grid::uniform(1, -3.0, 3.0, 64).unwrap();
        let f = TestFunctionSpec::poly_gaussian(1, 1.0).sample(&g).unwrap();
        let r = dyadic_radii(&g);
        let m = hl_maximal(&f, &r).unwrap();
        for (a, b) in f.values().iter().zip(m.values()) {
            assert!(*b >= a.abs());
        }
        let m3 = hl_maximal(&f.scaled(-3.0).unwrap(), &r).unwrap();
        for (a, b) in m.values().iter().zip(m3.values()) {
            assert!((3.0 * a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }

    #[test]
    fn empty_radii_rejected() {
        let g = Grid::uniform(1, 0.0, 1.0, 4).unwrap();
        assert!(hl_maximal(&SampledField::zeros(&g), &[]).is_err());
    }

    #[test]
    fn opnorm_at_least_one() {
        let g = Grid::uniform(1, -4.0, 4.0, 64).unwrap();
        let omega = DomainMask::full(&g);
        let probes = vec![TestFunctionSpec::gaussian(1.0).sample(&g).unwrap()];
        let est = estimate_maximal_opnorm(&SpaceSpec::Lebesgue { p: 2.0 }, &omega, &probes, &dyadic_radii(&g)).unwrap();
        assert!(est.value >= 1.0 && est.value.is_finite());
    }
}
