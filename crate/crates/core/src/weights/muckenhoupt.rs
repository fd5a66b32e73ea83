use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{conjugate, Weight, WeightSpec};
use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::quad::integrate;
use crate::spec_text::broadcast;

/// Axis-aligned closed cube; `cells` holds per-axis `[start, end)` index
/// ranges when the cube is a union of grid cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub cells: Option<Vec<(usize, usize)>>,
}

impl Cube {
    pub fn new(grid: &Grid, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        let cells = align(grid, &lo, &hi);
        Self { lo, hi, cells }
    }

    /// The cell-aligned cube covering index ranges `[start, end)`.
    pub fn from_cells(grid: &Grid, ranges: Vec<(usize, usize)>) -> Self {
        let h = grid.cell_size();
        let lo = ranges.iter().enumerate().map(|(a, r)| grid.lo()[a] + r.0 as f64 * h[a]).collect();
        let hi = ranges.iter().enumerate().map(|(a, r)| grid.lo()[a] + r.1 as f64 * h[a]).collect();
        Self { lo, hi, cells: Some(ranges) }
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }
}

fn align(grid: &Grid, lo: &[f64], hi: &[f64]) -> Option<Vec<(usize, usize)>> {
    let h = grid.cell_size();
    let mut out = Vec::with_capacity(lo.len());
    for a in 0..grid.dim() {
        let snap = |t: f64| -> Option<usize> {
            let k = ((t - grid.lo()[a]) / h[a]).round();
            if (k * h[a] + grid.lo()[a] - t).abs() <= 1e-9 * h[a] && k >= 0.0 && k <= grid.points()[a] as f64 {
                Some(k as usize)
            } else {
                None
            }
        };
        let (s, e) = (snap(lo[a])?, snap(hi[a])?);
        if e <= s {
            return None;
        }
        out.push((s, e));
    }
    Some(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeFamily {
    cubes: Vec<Cube>,
}

impl CubeFamily {
    pub fn new(cubes: Vec<Cube>) -> Result<Self> {
        if cubes.is_empty() {
            return Err(Error::EmptyFamily("cube family".into()));
        }
        Ok(Self { cubes })
    }

    /// Cell-aligned cubes of side `(2m+1)` cells centered at every cell,
    /// `m ∈ {0, 1, 2, 4, ...}`, kept when inside the box; plus cubes with a
    /// vertex at, or centered at, each anchor at sides `h_min * 2^k`.
    pub fn standard(grid: &Grid, anchors: &[Vec<f64>]) -> Result<Self> {
        let d = grid.dim();
        let n_min = *grid.points().iter().min().expect("dim >= 1");
        let mut halves = vec![0usize];
        let mut m = 1;
        while 2 * m < n_min {
            halves.push(m);
            m *= 2;
        }
        let mut cubes = Vec::new();
        for &m in &halves {
            for i in 0..grid.len() {
                let c = grid.multi_index(i);
                if (0..d).all(|a| c[a] >= m && c[a] + m < grid.points()[a]) {
                    cubes.push(Cube::from_cells(grid, c.iter().map(|&k| (k - m, k + m + 1)).collect()));
                }
            }
        }
        for anchor in anchors {
            let c = broadcast(anchor, d, "anchor")?;
            let width = (0..d).map(|a| grid.hi()[a] - grid.lo()[a]).fold(f64::INFINITY, f64::min);
            let mut side = grid.min_cell();
            while side <= width * (1.0 + 1e-12) {
                for signs in 0..(1usize << d) {
                    let lo: Vec<f64> = (0..d).map(|a| if signs >> a & 1 == 1 { c[a] - side } else { c[a] }).collect();
                    let hi: Vec<f64> = lo.iter().map(|l| l + side).collect();
                    push_if_inside(grid, &mut cubes, lo, hi);
                }
                let lo: Vec<f64> = c.iter().map(|x| x - 0.5 * side).collect();
                let hi: Vec<f64> = c.iter().map(|x| x + 0.5 * side).collect();
                push_if_inside(grid, &mut cubes, lo, hi);
                side *= 2.0;
            }
        }
        Self::new(cubes)
    }

    /// The standard family anchored at the singular center of a power weight.
    pub fn for_weight(w: &Weight) -> Result<Self> {
        let anchors = match w.source() {
            WeightSpec::Power { center, .. } => vec![center.clone()],
            _ => vec![],
        };
        Self::standard(w.grid(), &anchors)
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }
    pub fn len(&self) -> usize {
        self.cubes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn extended(&self, more: Vec<Cube>) -> Self {
        let mut cubes = self.cubes.clone();
        cubes.extend(more);
        Self { cubes }
    }
}

fn push_if_inside(grid: &Grid, cubes: &mut Vec<Cube>, lo: Vec<f64>, hi: Vec<f64>) {
    let tol = 1e-12 * grid.diameter();
    if (0..grid.dim()).all(|a| lo[a] >= grid.lo()[a] - tol && hi[a] <= grid.hi()[a] + tol) {
        cubes.push(Cube::new(grid, lo, hi));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub p: f64,
    pub value: f64,
    pub argmax: Option<Cube>,
    pub cubes_evaluated: usize,
}

/// `∫_{[0,X]x[0,Y]} |x|^b` for `X, Y >= 0`, `b > -2`.
fn quadrant_integral_2d(x: f64, y: f64, b: f64) -> f64 {
    if x == 0.0 || y == 0.0 {
        return 0.0;
    }
    let t0 = y.atan2(x);
    let e = -(b + 2.0);
    let first = integrate(|t| t.cos().powf(e), 0.0, t0, 48);
    let second = integrate(|t| t.sin().powf(e), t0, FRAC_PI_2, 48);
    (x.powf(b + 2.0) * first + y.powf(b + 2.0) * second) / (b + 2.0)
}

/// Exact mean of `|x - c|^b` over a cube for `n <= 2`; `None` otherwise.
fn power_mean(cube: &Cube, c: &[f64], b: f64) -> Option<f64> {
    let d = c.len();
    let contains = (0..d).all(|a| cube.lo[a] <= c[a] && c[a] <= cube.hi[a]);
    if b <= -(d as f64) && contains {
        return Some(f64::INFINITY);
    }
    if b == 0.0 {
        return Some(1.0);
    }
    match d {
        1 => {
            let anti = |t: f64| t.signum() * t.abs().powf(b + 1.0) / (b + 1.0);
            if b <= -1.0 {
                // c lies outside: integrate directly on one side.
                let (u, v) = ((cube.lo[0] - c[0]).abs(), (cube.hi[0] - c[0]).abs());
                let (u, v) = (u.min(v), u.max(v));
                return Some((v.powf(b + 1.0) - u.powf(b + 1.0)) / (b + 1.0) / (v - u));
            }
            Some((anti(cube.hi[0] - c[0]) - anti(cube.lo[0] - c[0])) / (cube.hi[0] - cube.lo[0]))
        }
        2 => {
            if b <= -2.0 {
                return None;
            }
            let h = |x: f64, y: f64| x.signum() * y.signum() * quadrant_integral_2d(x.abs(), y.abs(), b);
            let (x0, x1) = (cube.lo[0] - c[0], cube.hi[0] - c[0]);
            let (y0, y1) = (cube.lo[1] - c[1], cube.hi[1] - c[1]);
            Some((h(x1, y1) - h(x0, y1) - h(x1, y0) + h(x0, y0)) / cube.volume())
        }
        _ => None,
    }
}

/// Exact infimum of `|x - c|^a` over a closed cube.
fn power_inf(cube: &Cube, c: &[f64], a: f64) -> f64 {
    let (mut near, mut far) = (0.0, 0.0);
    for k in 0..c.len() {
        let gap = if c[k] < cube.lo[k] {
            cube.lo[k] - c[k]
        } else if c[k] > cube.hi[k] {
            c[k] - cube.hi[k]
        } else {
            0.0
        };
        near += gap * gap;
        far += (c[k] - cube.lo[k]).abs().max((c[k] - cube.hi[k]).abs()).powi(2);
    }
    if a < 0.0 {
        far.sqrt().powf(a)
    } else if a > 0.0 {
        near.sqrt().powf(a)
    } else {
        1.0
    }
}

/// Prefix sums with one leading zero slab per axis.
struct SummedArea {
    dims: Vec<usize>,
    table: Vec<f64>,
}

impl SummedArea {
    fn new(grid: &Grid, values: &[f64]) -> Self {
        let dims: Vec<usize> = grid.points().iter().map(|n| n + 1).collect();
        let total: usize = dims.iter().product();
        let mut table = vec![0.0; total];
        for i in 0..grid.len() {
            let m = grid.multi_index(i);
            let idx = lin(&dims, m.iter().map(|k| k + 1));
            table[idx] = values[i];
        }
        let mut stride = 1;
        for &n in &dims {
            for idx in 0..total {
                if (idx / stride) % n > 0 {
                    table[idx] += table[idx - stride];
                }
            }
            stride *= n;
        }
        Self { dims, table }
    }

    fn sum(&self, ranges: &[(usize, usize)]) -> f64 {
        let d = ranges.len();
        let mut total = 0.0;
        for corner in 0..(1usize << d) {
            let mut sign = 1.0;
            let idx = lin(
                &self.dims,
                (0..d).map(|a| {
                    if corner >> a & 1 == 1 {
                        ranges[a].1
                    } else {
                        sign = -sign;
                        ranges[a].0
                    }
                }),
            );
            total += sign * self.table[idx];
        }
        total
    }
}

fn lin(dims: &[usize], multi: impl Iterator<Item = usize>) -> usize {
    let mut idx = 0;
    let mut stride = 1;
    for (k, n) in multi.zip(dims) {
        idx += k * stride;
        stride *= n;
    }
    idx
}

fn cube_min(grid: &Grid, values: &[f64], ranges: &[(usize, usize)]) -> f64 {
    let d = ranges.len();
    let mut cur: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    let mut best = f64::INFINITY;
    loop {
        best = best.min(values[grid.linear_index(&cur)]);
        let mut a = 0;
        while a < d {
            cur[a] += 1;
            if cur[a] < ranges[a].1 {
                break;
            }
            cur[a] = ranges[a].0;
            a += 1;
        }
        if a == d {
            return best;
        }
    }
}

/// Largest `A_p` characteristic over the family (a lower bound on the true
/// constant). Power weights use exact cube means (`n <= 2`) and the exact
/// cube infimum; other weights use cell samples on cell-aligned cubes.
pub fn muckenhoupt_constant(w: &Weight, p: f64, family: &CubeFamily) -> Result<ApReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid(format!("A_p needs p in [1, inf), got {p}")));
    }
    let grid = w.grid();
    let power = match w.source() {
        WeightSpec::Power { a, center } => Some((*a, broadcast(center, grid.dim(), "center")?)),
        _ => None,
    };
    let sat = SummedArea::new(grid, w.samples());
    let dual_exp = if p > 1.0 { 1.0 - conjugate(p) } else { 0.0 };
    let dual_sat = if p > 1.0 {
        if w.samples().contains(&0.0) {
            None
        } else {
            Some(SummedArea::new(grid, &w.samples().iter().map(|v| v.powf(dual_exp)).collect::<Vec<_>>()))
        }
    } else {
        None
    };
    let cell_vol = grid.cell_volume();

    let eval = |cube: &Cube| -> Option<f64> {
        let count = |r: &[(usize, usize)]| r.iter().map(|(s, e)| e - s).product::<usize>() as f64;
        if let Some((a, c)) = &power {
            let exact_mean = power_mean(cube, c, *a);
            let mean = match (exact_mean, &cube.cells) {
                (Some(m), _) => m,
                (None, Some(r)) => sat.sum(r) / count(r),
                (None, None) => return None,
            };
            if p == 1.0 {
                let inf = power_inf(cube, c, *a);
                return Some(if inf == 0.0 { f64::INFINITY } else { mean / inf });
            }
            let dual_mean = match (power_mean(cube, c, a * dual_exp), &cube.cells, &dual_sat) {
                (Some(m), _, _) => m,
                (None, Some(r), Some(s)) => s.sum(r) / count(r),
                (None, Some(_), None) => f64::INFINITY,
                (None, None, _) => return None,
            };
            return Some(mean * dual_mean.powf(p - 1.0));
        }
        let r = cube.cells.as_ref()?;
        let _ = cell_vol;
        let mean = sat.sum(r) / count(r);
        if p == 1.0 {
            let m = cube_min(grid, w.samples(), r);
            return Some(if m == 0.0 { f64::INFINITY } else { mean / m });
        }
        let dual_mean = match &dual_sat {
            Some(s) => s.sum(r) / count(r),
            None => {
                // ω^{1-p'} is infinite on zero cells.
                if cube_min(grid, w.samples(), r) == 0.0 {
                    f64::INFINITY
                } else {
                    return None;
                }
            }
        };
        Some(mean * dual_mean.powf(p - 1.0))
    };

    let values: Vec<Option<f64>> = family.cubes().par_iter().map(eval).collect();
    let mut best: Option<(usize, f64)> = None;
    let mut evaluated = 0;
    for (i, v) in values.iter().enumerate() {
        if let Some(v) = v {
            evaluated += 1;
            if best.is_none_or(|(_, b)| *v > b) {
                best = Some((i, *v));
            }
        }
    }
    let (i, value) = best.ok_or_else(|| Error::EmptyFamily("no cube could be evaluated".into()))?;
    Ok(ApReport { p, value, argmax: Some(family.cubes()[i].clone()), cubes_evaluated: evaluated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SampledField;

    #[test]
    fn unit_weight_is_one() {
        let g = Grid::uniform(2, -1.0, 1.0, 16).unwrap();
        let w = WeightSpec::Unit.sample(&g).unwrap();
        let fam = CubeFamily::for_weight(&w).unwrap();
        for p in [1.0, 2.0, 3.0] {
            assert_eq!(muckenhoupt_constant(&w, p, &fam).unwrap().value, 1.0);
        }
    }

    #[test]
    fn power_weight_a1_constant_1d() {
        let g = Grid::uniform(1, -4.0, 4.0, 512).unwrap();
        let w = WeightSpec::power(-0.5).sample(&g).unwrap();
        let h = g.min_cell();
        let anchored: Vec<Cube> = (0..9).map(|k| Cube::new(&g, vec![0.0], vec![h * 2f64.powi(k)])).collect();
        let r = muckenhoupt_constant(&w, 1.0, &CubeFamily::new(anchored).unwrap()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12, "{}", r.value);
        // Over all intervals the supremum is 1 + √2, attained by [-(√2-1)²b, b].
        let full = muckenhoupt_constant(&w, 1.0, &CubeFamily::for_weight(&w).unwrap()).unwrap();
        let sup = 1.0 + 2f64.sqrt();
        assert!(full.value <= sup * (1.0 + 1e-12) && full.value > 0.99 * sup, "{}", full.value);
    }

    #[test]
    fn power_mean_2d_matches_fine_quadrature() {
        let cube = Cube { lo: vec![0.2, -0.3], hi: vec![0.9, 0.4], cells: None };
        let b = -0.7;
        let exact = power_mean(&cube, &[0.0, 0.0], b).unwrap();
        let n = 2000;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = 0.2 + 0.7 * (i as f64 + 0.5) / n as f64;
                let y = -0.3 + 0.7 * (j as f64 + 0.5) / n as f64;
                acc += (x * x + y * y).sqrt().powf(b);
            }
        }
        acc /= (n * n) as f64;
        assert!((exact - acc).abs() < 1e-6 * acc, "{exact} vs {acc}");
    }

    #[test]
    fn constant_nonincreasing_in_p() {
        let g = Grid::uniform(1, -2.0, 2.0, 64).unwrap();
        let w = Weight::from_field(&SampledField::from_fn(&g, |x| 1.0 + x[0].abs().powf(0.7)).unwrap()).unwrap();
        let fam = CubeFamily::standard(&g, &[]).unwrap();
        let vals: Vec<f64> = [1.0, 1.5, 2.0, 3.0, 5.0]
            .iter()
            .map(|&p| muckenhoupt_constant(&w, p, &fam).unwrap().value)
            .collect();
        for pair in vals.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "{vals:?}");
        }
    }

    #[test]
    fn larger_family_never_decreases() {
        let g = Grid::uniform(1, -2.0, 2.0, 64).unwrap();
        let w = WeightSpec::power(-0.3).sample(&g).unwrap();
        let small = CubeFamily::standard(&g, &[]).unwrap();
        let big = CubeFamily::for_weight(&w).unwrap();
        let a = muckenhoupt_constant(&w, 2.0, &small).unwrap().value;
        let b = muckenhoupt_constant(&w, 2.0, &big).unwrap().value;
        assert!(b >= a);
    }

    #[test]
    fn vanishing_weight_is_not_a1() {
        let g = Grid::uniform(1, 0.0, 1.0, 8).unwrap();
        let mut v = vec![1.0; 8];
        v[3] = 0.0;
        let w = Weight::new(g.clone(), v.clone(), WeightSpec::Sampled { values: v }).unwrap();
        let fam = CubeFamily::standard(&g, &[]).unwrap();
        assert_eq!(muckenhoupt_constant(&w, 1.0, &fam).unwrap().value, f64::INFINITY);
    }
}
