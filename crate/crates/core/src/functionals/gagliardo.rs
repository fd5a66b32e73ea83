use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lattice::{equivalent_radius, PairLattice};
use super::{bbm_constant, DiagonalPolicy, GagliardoParams, KernelPolicy};
use crate::domain::DomainMask;
use crate::error::{invalid, Result};
use crate::grid::SampledField;
use crate::reduce::pairwise_sum;
use crate::spaces::{norm, SpaceSpec};

pub const DEFAULT_S_GRID: [f64; 6] = [0.60, 0.70, 0.80, 0.875, 0.925, 0.95];

fn row_sum<P: Fn(f64) -> f64 + Sync>(lat: &PairLattice, values: &[f64], kernel: &[f64], i: usize, pw: &P) -> f64 {
    let fx = values[lat.cells[i]];
    let mut acc = 0.0;
    for j in 0..lat.len() {
        if j != i {
            acc += pw((fx - values[lat.cells[j]]).abs()) * kernel[lat.offset(i, j)];
        }
    }
    acc
}

/// `G(x) = Σ_{y ∈ Ω, y ≠ x} |f(x)-f(y)|^p |x-y|^{-n-sp} dvol` on Ω (zero
/// elsewhere), plus the own-cell term of the policy.
pub fn gagliardo_inner(
    f: &SampledField,
    params: GagliardoParams,
    omega: &DomainMask,
    policy: KernelPolicy,
) -> Result<SampledField> {
    policy.validate()?;
    let grid = f.grid();
    grid.ensure_same(omega.grid(), "Gagliardo domain")?;
    let GagliardoParams { s, p } = params;
    let n = grid.dim() as f64;
    let dvol = grid.cell_volume();
    let lat = PairLattice::new(omega);
    let kernel = lat.radial_table(|r| r.powf(-n - s * p) * dvol);
    let values = f.values();
    let rows: Vec<f64> = if p == 1.0 {
        (0..lat.len()).into_par_iter().map(|i| row_sum(&lat, values, &kernel, i, &|d: f64| d)).collect()
    } else if p == 2.0 {
        (0..lat.len()).into_par_iter().map(|i| row_sum(&lat, values, &kernel, i, &|d: f64| d * d)).collect()
    } else {
        (0..lat.len()).into_par_iter().map(|i| row_sum(&lat, values, &kernel, i, &|d: f64| d.powf(p))).collect()
    };
    let mut out = vec![0.0; grid.len()];
    for (i, &c) in lat.cells.iter().enumerate() {
        out[c] = rows[i];
    }
    if policy.diagonal == DiagonalPolicy::EquivalentBall {
        let rho = equivalent_radius(grid);
        let factor = bbm_constant(p, grid.dim())? * rho.powf(p * (1.0 - s)) / (1.0 - s);
        let grad = f.gradient_magnitude()?;
        for &c in &lat.cells {
            out[c] += factor * grad.values()[c].powf(p);
        }
    }
    SampledField::new(grid.clone(), out)
}

/// `(Σ_Ω G dvol)^{1/p}`.
pub fn gagliardo_seminorm(
    f: &SampledField,
    params: GagliardoParams,
    omega: &DomainMask,
    policy: KernelPolicy,
) -> Result<f64> {
    let g = gagliardo_inner(f, params, omega, policy)?;
    let terms: Vec<f64> = omega.indices().iter().map(|&i| g.values()[i]).collect();
    Ok((pairwise_sum(&terms) * f.grid().cell_volume()).powf(1.0 / params.p))
}

/// `(1-s)^{1/p} ‖G^{1/p}‖_{X(Ω)}`.
pub fn bbm_scaled_value(
    f: &SampledField,
    params: GagliardoParams,
    space: &SpaceSpec,
    omega: &DomainMask,
    policy: KernelPolicy,
) -> Result<f64> {
    let g = gagliardo_inner(f, params, omega, policy)?;
    let root = g.map(|v| v.powf(1.0 / params.p))?;
    Ok((1.0 - params.s).powf(1.0 / params.p) * norm(&root, space, omega)?)
}

/// `bbm_scaled_value` at every `s`, returned as `(s, value)` pairs.
pub fn bbm_sweep(
    f: &SampledField,
    p: f64,
    s_values: &[f64],
    space: &SpaceSpec,
    omega: &DomainMask,
    policy: KernelPolicy,
) -> Result<Vec<(f64, f64)>> {
    s_values
        .iter()
        .map(|&s| Ok((s, bbm_scaled_value(f, GagliardoParams::new(s, p)?, space, omega, policy)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    /// Intercept `a` of `value ≈ a + b(1-s)`.
    pub limit: f64,
    pub slope: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    /// The `s` values used.
    pub used: Vec<f64>,
}

/// Least-squares line in `1-s` through the three largest-`s` points.
pub fn bbm_limit_extrapolate(pairs: &[(f64, f64)]) -> Result<Extrapolation> {
    let mut pts: Vec<(f64, f64)> = pairs.to_vec();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    if pts.len() < 3 {
        return Err(invalid(format!("extrapolation needs 3 distinct s values, got {}", pts.len())));
    }
    if pts.iter().any(|(s, v)| !(s.is_finite() && v.is_finite())) {
        return Err(invalid("extrapolation data must be finite"));
    }
    let pts = &pts[..3];
    let u: Vec<f64> = pts.iter().map(|(s, _)| 1.0 - s).collect();
    let v: Vec<f64> = pts.iter().map(|(_, v)| *v).collect();
    let (mu, mv) = (u.iter().sum::<f64>() / 3.0, v.iter().sum::<f64>() / 3.0);
    let suu: f64 = u.iter().map(|x| (x - mu) * (x - mu)).sum();
    let suv: f64 = u.iter().zip(&v).map(|(x, y)| (x - mu) * (y - mv)).sum();
    let slope = suv / suu;
    let limit = mv - slope * mu;
    let residual = (u.iter().zip(&v).map(|(x, y)| (y - limit - slope * x).powi(2)).sum::<f64>() / 3.0).sqrt();
    Ok(Extrapolation { limit, slope, residual, used: pts.iter().map(|p| p.0).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, TestFunctionSpec};

    fn naive(f: &SampledField, s: f64, p: f64) -> f64 {
        let g = f.grid();
        let n = g.dim() as f64;
        let mut total = 0.0;
        for i in 0..g.len() {
            for j in 0..g.len() {
                if i != j {
                    let (x, y) = (g.center(i), g.center(j));
                    let r = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    total += (f.values()[i] - f.values()[j]).abs().powf(p) / r.powf(s * p + n);
                }
            }
        }
        (total * g.cell_volume() * g.cell_volume()).powf(1.0 / p)
    }

    #[test]
    fn constant_is_zero_and_homogeneous() {
        let g = Grid::uniform(1, -1.0, 1.0, 32).unwrap();
        let om = DomainMask::full(&g);
        let prm = GagliardoParams::new(0.5, 1.0).unwrap();
        let c = SampledField::constant(&g, 2.0).unwrap();
        assert_eq!(gagliardo_seminorm(&c, prm, &om, KernelPolicy::exclude()).unwrap(), 0.0);
        let f = TestFunctionSpec::gaussian(0.4).sample(&g).unwrap();
        let a = gagliardo_seminorm(&f, prm, &om, KernelPolicy::exclude()).unwrap();
        let b = gagliardo_seminorm(&f.scaled(2.0).unwrap(), prm, &om, KernelPolicy::exclude()).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-13 * b);
    }

    #[test]
    fn matches_naive_loops() {
        let g = Grid::uniform(2, -1.0, 1.0, 8).unwrap();
        let f = TestFunctionSpec::gaussian(0.5).sample(&g).unwrap();
        for (s, p) in [(0.3, 1.0), (0.5, 2.0), (0.8, 1.7)] {
            let v = gagliardo_seminorm(&f, GagliardoParams::new(s, p).unwrap(), &DomainMask::full(&g), KernelPolicy::exclude()).unwrap();
            let o = naive(&f, s, p);
            assert!((v - o).abs() < 1e-12 * o, "s={s} p={p}: {v} vs {o}");
        }
    }

    #[test]
    fn lebesgue_fubini() {
        let g = Grid::uniform(1, -2.0, 2.0, 48).unwrap();
        let f = TestFunctionSpec::gaussian(0.6).sample(&g).unwrap();
        let om = DomainMask::full(&g);
        let prm = GagliardoParams::new(0.7, 2.0).unwrap();
        let pol = KernelPolicy::equivalent_ball();
        let lhs = bbm_scaled_value(&f, prm, &SpaceSpec::Lebesgue { p: 2.0 }, &om, pol).unwrap();
        let rhs = 0.3f64.sqrt() * gagliardo_seminorm(&f, prm, &om, pol).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
    }

    #[test]
    fn extrapolation_cases() {
        let s = [0.6, 0.8, 0.9, 0.95];
        let affine: Vec<(f64, f64)> = s.iter().map(|s| (*s, 3.0 - 2.0 * (1.0 - s))).collect();
        assert!((bbm_limit_extrapolate(&affine).unwrap().limit - 3.0).abs() < 1e-13);
        let flat: Vec<(f64, f64)> = s.iter().map(|s| (*s, 1.25)).collect();
        assert!((bbm_limit_extrapolate(&flat).unwrap().limit - 1.25).abs() < 1e-14);
        assert!(bbm_limit_extrapolate(&affine[..2]).is_err());
    }
}
