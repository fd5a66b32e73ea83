use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::SampledField;
use crate::reduce::pairwise_sum;
use crate::spec_text::broadcast;

/// Power weight `ω(s) = s^a` on `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HerzWeight {
    pub a: f64,
}

impl HerzWeight {
    pub fn eval(&self, s: f64) -> f64 {
        s.powf(self.a)
    }
}

/// Matuszewska–Orlicz indices `(m₀, M₀, m_∞, M_∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoIndices {
    pub m0: f64,
    pub big_m0: f64,
    pub m_inf: f64,
    pub big_m_inf: f64,
}

impl MoIndices {
    /// `-n/p < m₀ ≤ M₀ < n(1/s - 1/p)`.
    pub fn local_herz_hypothesis(&self, dim: usize, p: f64, s: f64) -> bool {
        let n = dim as f64;
        -n / p < self.m0 && self.m0 <= self.big_m0 && self.big_m0 < n * (1.0 / s - 1.0 / p)
    }
}

/// For `s^a` all four indices equal `a`.
pub fn mo_indices(w: &HerzWeight) -> Result<MoIndices> {
    if !w.a.is_finite() {
        return Err(invalid(format!("Herz weight exponent must be finite, got {}", w.a)));
    }
    Ok(MoIndices { m0: w.a, big_m0: w.a, m_inf: w.a, big_m_inf: w.a })
}

/// Annulus index `k` with `2^{k-1} ≤ d < 2^k`; the cell at `d = 0` uses `d = h/2`.
pub(crate) fn annulus_index(d: f64, h_min: f64) -> i32 {
    let d = if d > 0.0 { d } else { 0.5 * h_min };
    d.log2().floor() as i32 + 1
}

fn check_exponents(p: f64, q: f64, w: &HerzWeight) -> Result<()> {
    if !(p > 1.0 && p.is_finite() && q > 1.0 && q.is_finite()) {
        return Err(invalid(format!("Herz needs p, q in (1, inf), got p={p}, q={q}")));
    }
    mo_indices(w).map(|_| ())
}

/// `{Σ_k ω(2^k)^q ‖f‖^q_{L^p(R_{ξ,k})}}^{1/q}` with `R_{ξ,k} = B(ξ,2^k) \ B(ξ,2^{k-1})`.
pub fn herz_local_norm(f: &SampledField, p: f64, q: f64, w: &HerzWeight, xi: &[f64]) -> Result<f64> {
    check_exponents(p, q, w)?;
    let grid = f.grid();
    let xi = broadcast(xi, grid.dim(), "Herz center")?;
    let m = f.max_abs();
    if m == 0.0 {
        return Ok(0.0);
    }
    Ok(m * local_normalized(f, p, q, w, &xi, m))
}

fn local_normalized(f: &SampledField, p: f64, q: f64, w: &HerzWeight, xi: &[f64], m: f64) -> f64 {
    let grid = f.grid();
    let h_min = grid.min_cell();
    let vol = grid.cell_volume();
    let mut shells: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    let mut x = vec![0.0; grid.dim()];
    for (idx, v) in f.values().iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        grid.center_into(idx, &mut x);
        let d = x.iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        shells.entry(annulus_index(d, h_min)).or_default().push((v.abs() / m).powf(p));
    }
    let terms: Vec<f64> = shells
        .iter()
        .map(|(k, vals)| {
            let lp = (pairwise_sum(vals) * vol).powf(1.0 / p);
            (w.eval(2f64.powi(*k)) * lp).powf(q)
        })
        .collect();
    pairwise_sum(&terms).powf(1.0 / q)
}

/// Centers on every `stride`-th cell per axis plus the origin.
pub fn herz_centers(grid: &crate::grid::Grid, stride: usize) -> Vec<Vec<f64>> {
    let stride = stride.max(1);
    let mut out = vec![vec![0.0; grid.dim()]];
    for idx in 0..grid.len() {
        let multi = grid.multi_index(idx);
        if multi.iter().all(|k| k % stride == stride / 2) {
            out.push(grid.center(idx));
        }
    }
    out
}

/// Max of the local norm over `herz_centers(grid, stride)`; returns `(value, maximizing ξ)`.
pub fn herz_global_norm(f: &SampledField, p: f64, q: f64, w: &HerzWeight, stride: usize) -> Result<(f64, Vec<f64>)> {
    if stride == 0 {
        return Err(invalid("Herz center stride must be at least 1"));
    }
    herz_global_norm_over(f, p, q, w, &herz_centers(f.grid(), stride))
}

/// Max of the local norm over an explicit center set.
pub fn herz_global_norm_over(f: &SampledField, p: f64, q: f64, w: &HerzWeight, centers: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    check_exponents(p, q, w)?;
    if centers.is_empty() {
        return Err(invalid("empty Herz center set"));
    }
    let m = f.max_abs();
    if m == 0.0 {
        return Ok((0.0, centers[0].clone()));
    }
    let values: Vec<f64> = centers.par_iter().map(|xi| local_normalized(f, p, q, w, xi, m)).collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    Ok((m * values[best], centers[best].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, TestFunctionSpec};
    use crate::spaces::lebesgue_norm;

    #[test]
    fn collapse_to_lebesgue() {
        let g = Grid::uniform(2, -2.0, 2.0, 24).unwrap();
        let f = TestFunctionSpec::gaussian(0.6).sample(&g).unwrap();
        let v = herz_local_norm(&f, 2.5, 2.5, &HerzWeight { a: 0.0 }, &[0.1, -0.3]).unwrap();
        let l = lebesgue_norm(&f, 2.5);
        assert!((v - l).abs() < 1e-12 * l);
    }

    #[test]
    fn indices_and_hypothesis() {
        let i = mo_indices(&HerzWeight { a: -0.3 }).unwrap();
        assert_eq!((i.m0, i.big_m0, i.m_inf, i.big_m_inf), (-0.3, -0.3, -0.3, -0.3));
        assert!(i.local_herz_hypothesis(1, 2.0, 1.0));
        assert!(!mo_indices(&HerzWeight { a: -0.6 }).unwrap().local_herz_hypothesis(1, 2.0, 1.0));
        assert!(mo_indices(&HerzWeight { a: f64::NAN }).is_err());
    }

    #[test]
    fn annulus_bins() {
        assert_eq!(annulus_index(1.0, 0.1), 1);
        assert_eq!(annulus_index(0.99, 0.1), 0);
        assert_eq!(annulus_index(0.0, 0.5), -1);
    }

    #[test]
    fn global_single_center_and_zero() {
        let g = Grid::uniform(1, -2.0, 2.0, 32).unwrap();
        let f = TestFunctionSpec::gaussian(0.5).sample(&g).unwrap();
        let w = HerzWeight { a: -0.2 };
        let local = herz_local_norm(&f, 2.0, 3.0, &w, &[0.0]).unwrap();
        let (v, xi) = herz_global_norm_over(&f, 2.0, 3.0, &w, &[vec![0.0]]).unwrap();
        assert_eq!((v, xi), (local, vec![0.0]));
        assert!(herz_global_norm_over(&f, 2.0, 3.0, &w, &[]).is_err());
        assert_eq!(herz_global_norm(&SampledField::zeros(&g), 2.0, 3.0, &w, 4).unwrap().0, 0.0);
        let (gv, _) = herz_global_norm(&f, 2.0, 3.0, &w, 4).unwrap();
        assert!(gv >= local);
    }

    fn annulus_oracle(f: &SampledField, p: f64, q: f64, a: f64, xi: f64) -> f64 {
        let g = f.grid();
        let h = g.cell_size()[0];
        let mut total = 0.0;
        for k in -40..40 {
            let (inner, outer) = (2f64.powi(k - 1), 2f64.powi(k));
            let mut acc = 0.0;
            for i in 0..g.len() {
                let d = (g.center(i)[0] - xi).abs();
                let d = if d == 0.0 { h / 2.0 } else { d };
                if inner <= d && d < outer {
                    acc += f.values()[i].abs().powf(p) * h;
                }
            }
            total += (outer.powf(a) * acc.powf(1.0 / p)).powf(q);
        }
        total.powf(1.0 / q)
    }

    #[test]
    fn indicator_matches_annulus_sums() {
        let g = Grid::uniform(1, -2.0, 2.0, 64).unwrap();
        let f = SampledField::from_fn(&g, |x| if x[0].abs() < 1.0 { 1.0 } else { 0.0 }).unwrap();
        let v = herz_local_norm(&f, 2.0, 2.0, &HerzWeight { a: 1.0 }, &[0.0]).unwrap();
        let o = annulus_oracle(&f, 2.0, 2.0, 1.0, 0.0);
        assert!((v - o).abs() <= 1e-12 * o, "{v} vs {o}");
        let b = TestFunctionSpec::gaussian(0.6).sample(&Grid::uniform(1, -1.5, 2.5, 50).unwrap()).unwrap();
        let v = herz_local_norm(&b, 1.5, 3.0, &HerzWeight { a: -0.3 }, &[0.37]).unwrap();
        let o = annulus_oracle(&b, 1.5, 3.0, -0.3, 0.37);
        assert!((v - o).abs() <= 1e-12 * o, "{v} vs {o}");
    }
}
