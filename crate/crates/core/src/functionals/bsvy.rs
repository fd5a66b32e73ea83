use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lattice::{equivalent_radius, PairLattice};
use super::{BsvyParams, DiagonalPolicy, KernelPolicy};
use crate::domain::DomainMask;
use crate::error::{invalid, Result};
use crate::grid::SampledField;
use crate::quad::sphere_area;
use crate::reduce::pairwise_sum;
use crate::spaces::{norm, SpaceSpec};

/// `count` log-spaced points from `lo` to `hi` inclusive.
fn log_points(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect()
}

/// 40 log-spaced values over `[1e-3, 1e4] · scale`.
pub fn default_lambda_grid(scale: f64) -> Vec<f64> {
    let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
    log_points(1e-3 * scale, 1e4 * scale, 40)
}

/// `|z|^{1+γ/p}` and the subpoint kernel weight on the lattice `z = q ⊙ h/(2S)`,
/// covering the subsampled neighbourhood.
struct FineTable {
    dims: Vec<usize>,
    level: Vec<f64>,
    weight: Vec<f64>,
}

const FINE_TABLE_LIMIT: usize = 1 << 22;

/// Number of entries of the sorted, nonempty `lambdas` below `t`, without data-dependent branches.
#[inline]
fn count_below(lambdas: &[f64], t: f64) -> usize {
    let mut base = 0;
    let mut size = lambdas.len();
    while size > 1 {
        let half = size / 2;
        base = if lambdas[base + half] < t { base + half } else { base };
        size -= half;
    }
    base + usize::from(lambdas[base] < t)
}

struct LevelKernel<'a> {
    lat: PairLattice,
    values: &'a [f64],
    grad: Vec<f64>,
    grad_norm: Vec<f64>,
    /// `|z|^{1+γ/p}` and `|z|^{γ-n} dvol` by cell offset.
    level: Vec<f64>,
    weight: Vec<f64>,
    fine: Option<FineTable>,
    gamma: f64,
    exponent: f64,
    sub_weight: f64,
    policy: KernelPolicy,
    /// Own-cell weight `σ_{n-1} r^γ / γ` and radius factor `r^{γ/p}`.
    own: Option<(f64, f64)>,
}

impl<'a> LevelKernel<'a> {
    fn new(f: &'a SampledField, params: &BsvyParams, omega: &DomainMask, policy: KernelPolicy) -> Result<Self> {
        policy.validate()?;
        let grid = f.grid();
        grid.ensure_same(omega.grid(), "level-set domain")?;
        let n = grid.dim();
        let dvol = grid.cell_volume();
        let gamma = params.gamma;
        let exponent = params.level_exponent();
        let lat = PairLattice::new(omega);
        let level = lat.radial_table(|r| r.powf(exponent));
        let weight = lat.radial_table(|r| r.powf(gamma - n as f64) * dvol);
        let sub = policy.subsample;
        let sub_weight = dvol / sub.pow(n as u32) as f64;
        let fine = (sub > 1)
            .then(|| {
                let dims: Vec<usize> = grid
                    .points()
                    .iter()
                    .map(|&pts| {
                        let reach = if policy.near == 0 { pts - 1 } else { policy.near.min(pts - 1) };
                        2 * sub * reach + sub + 1
                    })
                    .collect();
                if dims.iter().product::<usize>() > FINE_TABLE_LIMIT {
                    return None;
                }
                let units: Vec<f64> = lat.h.iter().map(|h| h / (2 * sub) as f64).collect();
                let radii = crate::functionals::lattice::offset_radii(&dims, &units);
                Some(FineTable {
                    level: radii.iter().map(|r| r.powf(exponent)).collect(),
                    weight: radii.iter().map(|r| r.powf(gamma - n as f64) * sub_weight).collect(),
                    dims,
                })
            })
            .flatten();
        let grad = f.gradient()?;
        let grad_norm = grad.chunks(n).map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
        let own = (policy.diagonal == DiagonalPolicy::EquivalentBall && gamma > 0.0).then(|| {
            let r = equivalent_radius(grid);
            (sphere_area(n) * r.powf(gamma) / gamma, r.powf(gamma / params.p))
        });
        Ok(Self { lat, values: f.values(), grad, grad_norm, level, weight, fine, gamma, exponent, sub_weight, policy, own })
    }

    /// `(|z|^{1+γ/p}, weight)` at the fine-lattice point `q` (signed, per axis).
    #[inline]
    fn fine_at(&self, q: &[i64]) -> (f64, f64) {
        match &self.fine {
            Some(t) => {
                let mut idx = 0;
                let mut stride = 1;
                for (a, qa) in q.iter().enumerate() {
                    idx += qa.unsigned_abs() as usize * stride;
                    stride *= t.dims[a];
                }
                (t.level[idx], t.weight[idx])
            }
            None => {
                let sub = self.policy.subsample;
                let r = q
                    .iter()
                    .zip(&self.lat.h)
                    .map(|(qa, h)| (*qa as f64 * h / (2 * sub) as f64).powi(2))
                    .sum::<f64>()
                    .sqrt();
                (r.powf(self.exponent), r.powf(self.gamma - q.len() as f64) * self.sub_weight)
            }
        }
    }

    /// Whether the pair `(i, j)` lies in the subsampled neighbourhood.
    #[inline]
    fn is_near(&self, i: usize, j: usize) -> bool {
        if self.policy.subsample == 1 {
            return false;
        }
        let near = self.policy.near as u64;
        near == 0 || self.lat.coords(i).iter().zip(self.lat.coords(j)).all(|(a, b)| a.abs_diff(*b) <= near)
    }

    /// Adds the near pair `(x = i, y = j)` to row `i`: whole-cell weight where
    /// membership is constant across the `y` cell, subpoint weights where it changes.
    fn near_pair(&self, i: usize, j: usize, lambdas: &[f64], bucket: &mut [f64], direct: &mut [f64], q: &mut [i64]) {
        let lat = &self.lat;
        let d = lat.dim;
        let sub = self.policy.subsample as i64;
        let (xi, yj) = (lat.coords(i), lat.coords(j));
        let o = lat.offset(i, j);
        let fx = self.values[lat.cells[i]];
        let cy = lat.cells[j];
        let fy = self.values[cy];
        let tc = (fx - fy).abs() / self.level[o];
        let g = &self.grad[cy * d..(cy + 1) * d];
        let (mut tmin, mut tmax) = (tc, tc);
        for corner in 0..(1usize << d) {
            let mut fc = fy;
            for a in 0..d {
                let s = if corner >> a & 1 == 1 { 1 } else { -1 };
                fc += g[a] * s as f64 * 0.5 * lat.h[a];
                q[a] = 2 * sub * (yj[a] - xi[a]) + s * sub;
            }
            let t = (fx - fc).abs() / self.fine_at(q).0;
            tmin = tmin.min(t);
            tmax = tmax.max(t);
        }
        let (lo, hi) = (count_below(lambdas, tmin), count_below(lambdas, tmax));
        bucket[lo] += self.weight[o];
        if lo == hi {
            return;
        }
        for k in 0..(sub as usize).pow(d as u32) {
            let mut rem = k as i64;
            let mut fz = fy;
            for a in 0..d {
                let shift = 2 * (rem % sub) + 1 - sub;
                rem /= sub;
                fz += g[a] * shift as f64 * lat.h[a] / (2 * sub) as f64;
                q[a] = 2 * sub * (yj[a] - xi[a]) + shift;
            }
            let (lv, w) = self.fine_at(q);
            let t = (fx - fz).abs() / lv;
            for (jj, slot) in direct.iter_mut().enumerate().take(hi).skip(lo) {
                if t > lambdas[jj] {
                    *slot += w;
                }
            }
        }
    }

    /// Inner sums for every Ω cell (rows) and λ (columns, sorted ascending).
    /// Pairs outside the subsampled neighbourhood are symmetric and visited once.
    fn rows(&self, lambdas: &[f64]) -> Vec<Vec<f64>> {
        const CHUNKS: usize = 4;
        let n = self.lat.len();
        let width = lambdas.len() + 1;
        let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..CHUNKS)
            .into_par_iter()
            .map(|c| {
                let mut bucket = vec![0.0; n * width];
                let mut direct = vec![0.0; n * lambdas.len()];
                let mut q = vec![0i64; self.lat.dim];
                for i in (c..n).step_by(CHUNKS) {
                    let fx = self.values[self.lat.cells[i]];
                    for j in i + 1..n {
                        if self.is_near(i, j) {
                            let (bi, di) = (i * width, i * lambdas.len());
                            self.near_pair(i, j, lambdas, &mut bucket[bi..bi + width], &mut direct[di..di + lambdas.len()], &mut q);
                            let (bj, dj) = (j * width, j * lambdas.len());
                            self.near_pair(j, i, lambdas, &mut bucket[bj..bj + width], &mut direct[dj..dj + lambdas.len()], &mut q);
                            continue;
                        }
                        let o = self.lat.offset(i, j);
                        let t = (fx - self.values[self.lat.cells[j]]).abs() / self.level[o];
                        let b = count_below(lambdas, t);
                        bucket[i * width + b] += self.weight[o];
                        bucket[j * width + b] += self.weight[o];
                    }
                    if let Some((w, rfac)) = self.own {
                        bucket[i * width + count_below(lambdas, self.grad_norm[self.lat.cells[i]] / rfac)] += w;
                    }
                }
                (bucket, direct)
            })
            .collect();
        (0..n)
            .map(|i| {
                let mut out = vec![0.0; lambdas.len()];
                for (bucket, direct) in &partial {
                    let row = &bucket[i * width..(i + 1) * width];
                    let mut tail = 0.0;
                    for jj in (0..lambdas.len()).rev() {
                        tail += row[jj + 1];
                        out[jj] += tail + direct[i * lambdas.len() + jj];
                    }
                }
                out
            })
            .collect()
    }
}

/// `Σ_{y ∈ Ω: (x,y) ∈ E_λ} |x-y|^{γ-n} dvol` for every λ in `lambdas`, one
/// field per λ (zero outside Ω).
pub fn bsvy_inner_sweep(
    f: &SampledField,
    lambdas: &[f64],
    params: &BsvyParams,
    omega: &DomainMask,
    policy: KernelPolicy,
) -> Result<Vec<SampledField>> {
    params.validate()?;
    let probe = BsvyParams { lambdas: lambdas.to_vec(), ..params.clone() };
    probe.validate()?;
    let kernel = LevelKernel::new(f, params, omega, policy)?;
    let rows = kernel.rows(lambdas);
    let grid = f.grid();
    lambdas
        .iter()
        .enumerate()
        .map(|(jj, _)| {
            let mut v = vec![0.0; grid.len()];
            for (i, row) in rows.iter().enumerate() {
                v[kernel.lat.cells[i]] = row[jj];
            }
            SampledField::new(grid.clone(), v)
        })
        .collect()
}

/// Inner field at a single `λ > 0`.
pub fn bsvy_inner(
    f: &SampledField,
    lambda: f64,
    params: &BsvyParams,
    omega: &DomainMask,
    policy: KernelPolicy,
) -> Result<SampledField> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    Ok(bsvy_inner_sweep(f, &[lambda], params, omega, policy)?.remove(0))
}

fn functional_from_inner(inner: &SampledField, lambda: f64, p: f64, space: &SpaceSpec, omega: &DomainMask) -> Result<f64> {
    if inner.max_abs() == 0.0 {
        return Ok(0.0);
    }
    Ok(lambda * norm(&inner.map(|v| v.powf(1.0 / p))?, space, omega)?)
}

/// `λ ‖(inner)^{1/p}‖_{X(Ω)}`.
pub fn bsvy_functional(
    f: &SampledField,
    lambda: f64,
    params: &BsvyParams,
    space: &SpaceSpec,
    omega: &DomainMask,
    policy: KernelPolicy,
) -> Result<f64> {
    let inner = bsvy_inner(f, lambda, params, omega, policy)?;
    functional_from_inner(&inner, lambda, params.p, space, omega)
}

/// λ-profile and supremum of the level-set functional for one space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub space: String,
    pub gamma: f64,
    pub p: f64,
    pub policy: String,
    pub lambdas: Vec<f64>,
    pub profile: Vec<f64>,
    pub argmax: f64,
    pub value: f64,
    /// The maximum sits at an end of the final λ grid.
    pub endpoint: bool,
    /// The grid was extended once past an endpoint maximum.
    pub extended: bool,
    pub theorem_conditional: bool,
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

struct Profile {
    points: Vec<(f64, f64)>,
    extended: bool,
}

impl Profile {
    fn insert(&mut self, more: impl IntoIterator<Item = (f64, f64)>) {
        self.points.extend(more);
        self.points.sort_by(|a, b| a.0.total_cmp(&b.0));
        self.points.dedup_by(|a, b| a.0 == b.0);
    }
    fn best(&self) -> usize {
        argmax(&self.points.iter().map(|p| p.1).collect::<Vec<_>>())
    }
}

/// `sup_λ` of the functional for several spaces sharing one set of inner
/// fields. The grid is extended once past an endpoint maximum, then refined
/// with four log-spaced points on each side of the maximum.
pub fn bsvy_sup_multi(
    f: &SampledField,
    params: &BsvyParams,
    spaces: &[SpaceSpec],
    omega: &DomainMask,
    policy: KernelPolicy,
) -> Result<Vec<FunctionalReport>> {
    params.validate()?;
    let lam = &params.lambdas;
    if lam.len() < 25 || (lam[lam.len() - 1] / lam[0]).log10() < 6.0 - 1e-9 {
        return Err(invalid("lambda grid must have at least 25 points spanning 6 decades"));
    }
    for s in spaces {
        s.validate()?;
    }
    let p = params.p;
    let eval = |lambdas: &[f64], which: &[usize]| -> Result<Vec<Vec<(f64, f64)>>> {
        let fields = bsvy_inner_sweep(f, lambdas, params, omega, policy)?;
        which
            .iter()
            .map(|&k| {
                fields
                    .iter()
                    .zip(lambdas)
                    .map(|(field, &l)| Ok((l, functional_from_inner(field, l, p, &spaces[k], omega)?)))
                    .collect()
            })
            .collect()
    };
    let all: Vec<usize> = (0..spaces.len()).collect();
    let mut profiles: Vec<Profile> =
        eval(lam, &all)?.into_iter().map(|points| Profile { points, extended: false }).collect();

    let step = (lam[lam.len() - 1] / lam[0]).ln() / (lam.len() - 1) as f64;
    let low: Vec<f64> = (1..=12).rev().map(|k| lam[0] * (-(k as f64) * step).exp()).collect();
    let high: Vec<f64> = (1..=12).map(|k| lam[lam.len() - 1] * (k as f64 * step).exp()).collect();
    for (side, ext) in [(0usize, &low), (1, &high)] {
        let need: Vec<usize> = all
            .iter()
            .copied()
            .filter(|&k| {
                let pr = &profiles[k];
                let b = pr.best();
                pr.points[b].1 > 0.0 && !pr.extended && if side == 0 { b == 0 } else { b == pr.points.len() - 1 }
            })
            .collect();
        if need.is_empty() {
            continue;
        }
        for (k, pts) in need.iter().zip(eval(ext, &need)?) {
            profiles[*k].insert(pts);
            profiles[*k].extended = true;
        }
    }

    let mut wanted: Vec<Vec<f64>> = Vec::with_capacity(spaces.len());
    for pr in &profiles {
        let b = pr.best();
        let mut pts = Vec::new();
        if pr.points[b].1 > 0.0 {
            let l = pr.points[b].0;
            if b > 0 {
                pts.extend(log_points(pr.points[b - 1].0, l, 6)[1..5].iter().copied());
            }
            if b + 1 < pr.points.len() {
                pts.extend(log_points(l, pr.points[b + 1].0, 6)[1..5].iter().copied());
            }
        }
        wanted.push(pts);
    }
    let mut union: Vec<f64> = wanted.iter().flatten().copied().collect();
    union.sort_by(f64::total_cmp);
    union.dedup();
    if !union.is_empty() {
        let fields = bsvy_inner_sweep(f, &union, params, omega, policy)?;
        for (k, pts) in wanted.iter().enumerate() {
            let mut add = Vec::with_capacity(pts.len());
            for l in pts {
                let idx = union.partition_point(|u| u < l);
                add.push((*l, functional_from_inner(&fields[idx], *l, p, &spaces[k], omega)?));
            }
            profiles[k].insert(add);
        }
    }

    Ok(profiles
        .into_iter()
        .zip(spaces)
        .map(|(pr, space)| {
            let b = pr.best();
            FunctionalReport {
                space: space.to_string(),
                gamma: params.gamma,
                p,
                policy: policy.to_string(),
                lambdas: pr.points.iter().map(|q| q.0).collect(),
                profile: pr.points.iter().map(|q| q.1).collect(),
                argmax: pr.points[b].0,
                value: pr.points[b].1,
                endpoint: pr.points[b].1 > 0.0 && (b == 0 || b == pr.points.len() - 1),
                extended: pr.extended,
                theorem_conditional: params.theorem_conditional(),
            }
        })
        .collect())
}

pub fn bsvy_sup(
    f: &SampledField,
    params: &BsvyParams,
    space: &SpaceSpec,
    omega: &DomainMask,
    policy: KernelPolicy,
) -> Result<FunctionalReport> {
    Ok(bsvy_sup_multi(f, params, std::slice::from_ref(space), omega, policy)?.remove(0))
}

/// `max_λ λ ν_γ(E_λ ∩ Ω×Ω)^{1/p}` over the λ grid of `params`.
pub fn weak_product_quasinorm(
    f: &SampledField,
    params: &BsvyParams,
    omega: &DomainMask,
    policy: KernelPolicy,
) -> Result<f64> {
    let fields = bsvy_inner_sweep(f, &params.lambdas, params, omega, policy)?;
    let idx = omega.indices();
    let dvol = f.grid().cell_volume();
    let mut best: f64 = 0.0;
    for (field, l) in fields.iter().zip(&params.lambdas) {
        let terms: Vec<f64> = idx.iter().map(|&i| field.values()[i]).collect();
        best = best.max(l * (pairwise_sum(&terms) * dvol).powf(1.0 / params.p));
    }
    Ok(best)
}
