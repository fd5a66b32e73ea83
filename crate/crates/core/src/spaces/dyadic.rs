use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{Grid, SampledField};
use crate::quad::unit_ball_volume;

/// Cubes `Q^{(α)}_{ν,m} = 2^ν [m + (0,1]^n + (-1)^ν α]` for `ν` in a level range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicSystem {
    pub shift: Vec<f64>,
    pub nu_min: i32,
    pub nu_max: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicCube {
    pub nu: i32,
    pub m: Vec<i64>,
    /// Open lower corner.
    pub lo: Vec<f64>,
    /// Closed upper corner.
    pub hi: Vec<f64>,
}

fn level_shift(shift: f64, nu: i32) -> f64 {
    if nu.rem_euclid(2) == 0 {
        shift
    } else {
        -shift
    }
}

/// Index range of level-`ν` intervals meeting `(lo, hi)` in positive length.
fn axis_range(lo: f64, hi: f64, side: f64, s: f64) -> (i64, i64) {
    ((lo / side - s).floor() as i64, (hi / side - s).ceil() as i64 - 1)
}

impl DyadicSystem {
    pub fn new(shift: Vec<f64>, nu_min: i32, nu_max: i32) -> Result<Self> {
        if nu_min > nu_max {
            return Err(invalid(format!("empty level range {nu_min}..={nu_max}")));
        }
        if shift.iter().any(|a| !a.is_finite()) {
            return Err(invalid("dyadic shift must be finite"));
        }
        Ok(Self { shift, nu_min, nu_max })
    }

    /// The `3^n` shifts `{0, 1/3, 2/3}^n`.
    pub fn adjacent_shifts(dim: usize) -> Vec<Vec<f64>> {
        (0..3usize.pow(dim as u32))
            .map(|mut k| {
                (0..dim)
                    .map(|_| {
                        let j = k % 3;
                        k /= 3;
                        j as f64 / 3.0
                    })
                    .collect()
            })
            .collect()
    }
}

/// All cubes of the system meeting the box `(lo, hi)`; at each level they tile it.
pub fn dyadic_cubes(system: &DyadicSystem, lo: &[f64], hi: &[f64]) -> Vec<DyadicCube> {
    let d = lo.len();
    let mut out = Vec::new();
    for nu in system.nu_min..=system.nu_max {
        let side = 2f64.powi(nu);
        let shifts: Vec<f64> = (0..d).map(|a| level_shift(system.shift[a], nu)).collect();
        let ranges: Vec<(i64, i64)> = (0..d).map(|a| axis_range(lo[a], hi[a], side, shifts[a])).collect();
        let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            out.push(DyadicCube {
                nu,
                m: cur.clone(),
                lo: (0..d).map(|a| side * (cur[a] as f64 + shifts[a])).collect(),
                hi: (0..d).map(|a| side * (cur[a] as f64 + 1.0 + shifts[a])).collect(),
            });
            let mut a = 0;
            while a < d {
                cur[a] += 1;
                if cur[a] <= ranges[a].1 {
                    break;
                }
                cur[a] = ranges[a].0;
                a += 1;
            }
            if a == d {
                break;
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverResult {
    pub shift: Vec<f64>,
    pub cube: DyadicCube,
    /// `|Q| / |B|`
    pub ratio: f64,
}

/// The smallest cube over the `3^n` adjacent systems containing `B(x, r)`.
pub fn cover_ball(x: &[f64], r: f64) -> Result<CoverResult> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("ball radius must be positive, got {r}")));
    }
    let d = x.len();
    let ball = unit_ball_volume(d) * r.powi(d as i32);
    let start = (2.0 * r).log2().floor() as i32;
    let mut best: Option<CoverResult> = None;
    for shift in DyadicSystem::adjacent_shifts(d) {
        for nu in start..start + 64 {
            let side = 2f64.powi(nu);
            let mut m = Vec::with_capacity(d);
            let mut ok = true;
            for a in 0..d {
                let s = level_shift(shift[a], nu);
                let k = ((x[a] - r) / side - s).floor();
                if x[a] + r > side * (k + 1.0 + s) {
                    ok = false;
                    break;
                }
                m.push(k as i64);
            }
            if ok {
                let ratio = side.powi(d as i32) / ball;
                if best.as_ref().is_none_or(|b| ratio < b.ratio) {
                    let cube = DyadicCube {
                        nu,
                        lo: (0..d).map(|a| side * (m[a] as f64 + level_shift(shift[a], nu))).collect(),
                        hi: (0..d).map(|a| side * (m[a] as f64 + 1.0 + level_shift(shift[a], nu))).collect(),
                        m,
                    };
                    best = Some(CoverResult { shift: shift.clone(), cube, ratio });
                }
                break;
            }
        }
    }
    best.ok_or_else(|| invalid("no covering cube found"))
}

/// `(6√n)^n`: every ball has a covering cube of side at most twelve radii.
pub fn dyadic_cover_bound(dim: usize) -> f64 {
    (6.0 * (dim as f64).sqrt()).powi(dim as i32)
}

/// Default levels: one below the cell size to one above the box diameter.
pub fn default_levels(grid: &Grid) -> (i32, i32) {
    (grid.min_cell().log2().floor() as i32 - 1, grid.diameter().log2().ceil() as i32 + 1)
}

/// Sparse overlap lengths of the level cubes (rows) with the grid cells along one axis.
fn axis_overlaps(grid: &Grid, a: usize, side: f64) -> Vec<Vec<(usize, f64)>> {
    let (lo, hi) = (grid.lo()[a], grid.hi()[a]);
    let h = grid.cell_size()[a];
    let n = grid.points()[a];
    let (m0, m1) = axis_range(lo, hi, side, 0.0);
    (m0..=m1)
        .map(|m| {
            let (ca, cb) = (side * m as f64, side * (m + 1) as f64);
            let k0 = (((ca - lo) / h).floor().max(0.0) as usize).min(n - 1);
            let k1 = (((cb - lo) / h).ceil().max(0.0) as usize).min(n);
            (k0..k1)
                .filter_map(|k| {
                    let (xa, xb) = (lo + k as f64 * h, lo + (k + 1) as f64 * h);
                    let ov = cb.min(xb) - ca.max(xa);
                    (ov > 0.0).then_some((k, ov))
                })
                .collect()
        })
        .collect()
}

/// Replaces axis `axis` (length `dims[axis]`) by `rows.len()` sparse row sums.
fn contract(cur: &[f64], dims: &[usize], axis: usize, rows: &[Vec<(usize, f64)>]) -> Vec<f64> {
    let inner: usize = dims[..axis].iter().product();
    let n = dims[axis];
    let outer: usize = dims[axis + 1..].iter().product();
    let c = rows.len();
    let mut out = vec![0.0; inner * c * outer];
    for o in 0..outer {
        for (j, row) in rows.iter().enumerate() {
            let dst = (o * c + j) * inner;
            for &(k, w) in row {
                let src = (o * n + k) * inner;
                for i in 0..inner {
                    out[dst + i] += w * cur[src + i];
                }
            }
        }
    }
    out
}

/// Besov–Bourgain–Morrey norm with the α = 0 system and the default levels.
pub fn bbm_morrey_norm(f: &SampledField, q: f64, p: f64, r: f64, tau: f64) -> Result<f64> {
    let (lo, hi) = default_levels(f.grid());
    bbm_morrey_norm_levels(f, q, p, r, tau, lo, hi)
}

/// `{Σ_ν [Σ_m (|Q|^{1/p-1/q} ‖f‖_{L^q(Q)})^r]^{τ/r}}^{1/τ}` over `ν ∈ [nu_min, nu_max]`,
/// with maxima replacing the sums when `r` or `τ` is infinite. The field is
/// treated as piecewise constant on cells.
pub fn bbm_morrey_norm_levels(
    f: &SampledField,
    q: f64,
    p: f64,
    r: f64,
    tau: f64,
    nu_min: i32,
    nu_max: i32,
) -> Result<f64> {
    if !(q > 0.0 && q <= p && p <= r && p.is_finite() && tau > 0.0) {
        return Err(invalid(format!(
            "Besov-Bourgain-Morrey needs 0 < q <= p <= r <= inf, tau > 0; got q={q}, p={p}, r={r}, tau={tau}"
        )));
    }
    if nu_min > nu_max {
        return Err(invalid(format!("empty level range {nu_min}..={nu_max}")));
    }
    let grid = f.grid();
    let m = f.max_abs();
    if m == 0.0 {
        return Ok(0.0);
    }
    let d = grid.dim();
    let powered: Vec<f64> = f.values().iter().map(|v| (v.abs() / m).powf(q)).collect();
    let mut levels = Vec::new();
    for nu in nu_min..=nu_max {
        let side = 2f64.powi(nu);
        let mut dims: Vec<usize> = grid.points().to_vec();
        let mut cur = powered.clone();
        for a in 0..d {
            let rows = axis_overlaps(grid, a, side);
            cur = contract(&cur, &dims, a, &rows);
            dims[a] = rows.len();
        }
        let factor = side.powi(d as i32).powf(1.0 / p - 1.0 / q);
        let terms = cur.iter().filter(|v| **v > 0.0).map(|v| factor * v.powf(1.0 / q));
        let level = if r.is_infinite() {
            terms.fold(0.0, f64::max)
        } else {
            let t: Vec<f64> = terms.map(|t| t.powf(r)).collect();
            crate::reduce::pairwise_sum(&t).powf(1.0 / r)
        };
        levels.push(level);
    }
    let total = if tau.is_infinite() {
        levels.iter().cloned().fold(0.0, f64::max)
    } else {
        let t: Vec<f64> = levels.iter().map(|l| l.powf(tau)).collect();
        crate::reduce::pairwise_sum(&t).powf(1.0 / tau)
    };
    Ok(m * total)
}
