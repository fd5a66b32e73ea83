use serde::{Deserialize, Serialize};

use super::lattice::PairLattice;
use crate::domain::DomainMask;
use crate::error::{invalid, Error, Result};
use crate::reduce::pairwise_sum;
use crate::weights::{conjugate, Weight};

/// A function of cell pairs `(x, y)` over Ω × Ω, row-major in Ω cell order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairField {
    pub size: usize,
    pub values: Vec<f64>,
}

impl PairField {
    pub fn new(size: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != size * size {
            return Err(Error::GridMismatch(format!("{} pair values for {size} cells", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("pair field".into()));
        }
        Ok(Self { size, values })
    }

    pub fn from_fn<F: Fn(usize, usize) -> f64>(size: usize, f: F) -> Result<Self> {
        Self::new(size, (0..size * size).map(|k| f(k / size, k % size)).collect())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }
}

/// Pair masses `|x-y|^{γ-n} ω(x) dvol²` for `x ≠ y` in Ω (zero on the diagonal).
fn pair_masses(gamma: f64, weight: &Weight, omega: &DomainMask) -> Result<(PairLattice, Vec<f64>)> {
    let grid = omega.grid();
    weight.grid().ensure_same(grid, "pair measure weight")?;
    let lat = PairLattice::new(omega);
    let dvol = grid.cell_volume();
    let kernel = lat.radial_table(|r| r.powf(gamma - grid.dim() as f64) * dvol * dvol);
    let n = lat.len();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        let w = weight.samples()[lat.cells[i]];
        for j in 0..n {
            if i != j {
                m[i * n + j] = kernel[lat.offset(i, j)] * w;
            }
        }
    }
    Ok((lat, m))
}

/// `Σ_{x ≠ y, (x,y) ∈ E} |x-y|^{γ-n} ω(x) dvol²` with `E` given on grid indices.
pub fn weighted_mu_measure<E: Fn(usize, usize) -> bool>(
    set: E,
    gamma: f64,
    weight: &Weight,
    omega: &DomainMask,
) -> Result<f64> {
    let (lat, m) = pair_masses(gamma, weight, omega)?;
    let n = lat.len();
    let mut terms = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && set(lat.cells[i], lat.cells[j]) {
                terms.push(m[i * n + j]);
            }
        }
    }
    Ok(pairwise_sum(&terms))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakHolderResult {
    /// `∬ |F G| dμ`
    pub lhs: f64,
    /// `p' · sup_λ λ μ(|F| > λ)^{1/p} · ∫_0^∞ μ(|G| > ξ)^{1/p'} dξ`
    pub rhs: f64,
    pub weak_norm: f64,
    pub lorentz_integral: f64,
    /// `lhs / rhs`, `0` when both sides vanish.
    pub ratio: f64,
    pub passed: bool,
    pub degenerate: bool,
}

/// Distinct `|values|` in decreasing order with the measure of `{|v| ≥ value}`.
fn level_masses(values: &[f64], masses: &[f64]) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> =
        values.iter().zip(masses).filter(|(v, m)| **v != 0.0 && **m > 0.0).map(|(v, m)| (v.abs(), *m)).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut acc = 0.0;
    for (v, m) in pairs {
        acc += m;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = acc,
            _ => out.push((v, acc)),
        }
    }
    out
}

/// Checks the weak-Hölder inequality for the measure `|x-y|^{γ-n} ω(x) dx dy`.
/// Both the λ-supremum and the ξ-integral are evaluated exactly over the
/// finitely many values of `F` and `G`.
pub fn weak_holder_check(
    f: &PairField,
    g: &PairField,
    gamma: f64,
    weight: &Weight,
    p: f64,
    omega: &DomainMask,
) -> Result<WeakHolderResult> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(invalid(format!("weak-Hölder needs p in (1, inf), got {p}")));
    }
    let (lat, m) = pair_masses(gamma, weight, omega)?;
    if f.size != lat.len() || g.size != lat.len() {
        return Err(Error::GridMismatch(format!("pair fields of size {}/{} for {} cells", f.size, g.size, lat.len())));
    }
    let pp = conjugate(p);
    let lhs = pairwise_sum(&f.values.iter().zip(&g.values).zip(&m).map(|((a, b), w)| (a * b).abs() * w).collect::<Vec<_>>());
    let weak_norm = level_masses(&f.values, &m).iter().map(|(v, mu)| v * mu.powf(1.0 / p)).fold(0.0, f64::max);
    let levels = level_masses(&g.values, &m);
    let mut lorentz_terms = Vec::with_capacity(levels.len());
    for (k, (v, mu)) in levels.iter().enumerate() {
        let below = levels.get(k + 1).map_or(0.0, |l| l.0);
        lorentz_terms.push((v - below) * mu.powf(1.0 / pp));
    }
    let lorentz_integral = pairwise_sum(&lorentz_terms);
    let rhs = pp * weak_norm * lorentz_integral;
    if !(lhs.is_finite() && rhs.is_finite()) {
        return Err(Error::NonFinite("weak-Hölder sides".into()));
    }
    let degenerate = lhs == 0.0 && rhs == 0.0;
    Ok(WeakHolderResult {
        lhs,
        rhs,
        weak_norm,
        lorentz_integral,
        ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
        passed: lhs <= rhs * (1.0 + 1e-12),
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::weights::WeightSpec;

    #[test]
    fn unit_square_measure() {
        let g = Grid::uniform(1, 0.0, 1.0, 200).unwrap();
        let w = WeightSpec::Unit.sample(&g).unwrap();
        let v = weighted_mu_measure(|_, _| true, 1.0, &w, &DomainMask::full(&g)).unwrap();
        assert!((v - (1.0 - 1.0 / 200.0)).abs() < 1e-12);
        assert_eq!(weighted_mu_measure(|_, _| false, 1.0, &w, &DomainMask::full(&g)).unwrap(), 0.0);
    }

    #[test]
    fn zero_g_is_trivial() {
        let g = Grid::uniform(1, 0.0, 1.0, 8).unwrap();
        let w = WeightSpec::Unit.sample(&g).unwrap();
        let f = PairField::from_fn(8, |i, j| (i + j) as f64).unwrap();
        let z = PairField::new(8, vec![0.0; 64]).unwrap();
        let r = weak_holder_check(&f, &z, 0.5, &w, 2.0, &DomainMask::full(&g)).unwrap();
        assert!(r.passed && r.degenerate && r.lhs == 0.0 && r.rhs == 0.0);
    }

    #[test]
    fn rectangle_indicators() {
        let g = Grid::uniform(1, 0.0, 1.0, 16).unwrap();
        let w = WeightSpec::Unit.sample(&g).unwrap();
        let ind = PairField::from_fn(16, |i, j| if i < 8 && j >= 4 { 1.0 } else { 0.0 }).unwrap();
        let r = weak_holder_check(&ind, &ind, 1.0, &w, 2.0, &DomainMask::full(&g)).unwrap();
        // For one indicator: lhs = μ(E), rhs = 2 μ(E)^{1/2} μ(E)^{1/2}.
        assert!((r.rhs - 2.0 * r.lhs).abs() < 1e-14);
        assert!(r.passed && (r.ratio - 0.5).abs() < 1e-14);
    }
}
