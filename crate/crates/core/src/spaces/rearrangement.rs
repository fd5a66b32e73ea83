use serde::{Deserialize, Serialize};

use crate::domain::DomainMask;
use crate::error::Result;
use crate::grid::SampledField;
use crate::reduce::pairwise_sum;

/// Nonincreasing right-continuous step function: `f*(t) = values[k]` for
/// `t ∈ [breaks[k], breaks[k+1])`, and `0` from `breaks.last()` on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rearrangement {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl Rearrangement {
    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return f64::NAN;
        }
        match self.breaks.partition_point(|&b| b <= t) {
            0 => self.values.first().copied().unwrap_or(0.0),
            k if k > self.values.len() => 0.0,
            k => self.values[k - 1],
        }
    }

    /// Cumulative measures `T_k`, one per step.
    pub fn cumulative(&self) -> &[f64] {
        &self.breaks[1..]
    }
}

/// Sorts `|f|` over the Ω cells; equal values are merged into one step.
pub fn decreasing_rearrangement(f: &SampledField, omega: &DomainMask) -> Result<Rearrangement> {
    f.grid().ensure_same(omega.grid(), "rearrangement")?;
    let mut v: Vec<f64> = omega.indices().iter().map(|&i| f.values()[i].abs()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    let vol = f.grid().cell_volume();
    let mut breaks = vec![0.0];
    let mut values = Vec::new();
    let mut count = 0usize;
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        count += j - i;
        values.push(v[i]);
        breaks.push(count as f64 * vol);
        i = j;
    }
    Ok(Rearrangement { breaks, values })
}

/// `(Σ_k v_k^τ (r/τ)(T_k^{τ/r} - T_{k-1}^{τ/r}))^{1/τ}`, exact for step functions.
pub fn lorentz_norm(f: &SampledField, r: f64, tau: f64) -> Result<f64> {
    let omega = DomainMask::full(f.grid());
    let m = f.max_abs();
    if m == 0.0 {
        return Ok(0.0);
    }
    let re = decreasing_rearrangement(f, &omega)?;
    let e = tau / r;
    let terms: Vec<f64> = re
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(k, v)| (v / m).powf(tau) * (r / tau) * (re.breaks[k + 1].powf(e) - re.breaks[k].powf(e)))
        .collect();
    Ok(m * pairwise_sum(&terms).powf(1.0 / tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn indicator_rearrangement() {
        let g = Grid::uniform(1, 0.0, 1.0, 8).unwrap();
        let f = SampledField::from_fn(&g, |x| if x[0] < 0.5 { 1.0 } else { 0.0 }).unwrap();
        let re = decreasing_rearrangement(&f, &DomainMask::full(&g)).unwrap();
        assert_eq!(re.eval(0.0), 1.0);
        assert_eq!(re.eval(0.49), 1.0);
        assert_eq!(re.eval(0.5), 0.0);
        assert_eq!(re.eval(5.0), 0.0);
    }

    #[test]
    fn tent_rearrangement() {
        let g = Grid::uniform(1, -2.0, 2.0, 400).unwrap();
        let f = SampledField::from_fn(&g, |x| (1.0 - x[0].abs()).max(0.0)).unwrap();
        let re = decreasing_rearrangement(&f, &DomainMask::full(&g)).unwrap();
        let h = 0.01;
        for t in [0.0f64, 0.3, 1.0, 1.7, 2.5] {
            let exact = (1.0 - t / 2.0).max(0.0);
            assert!((re.eval(t) - exact).abs() <= h, "t={t}");
        }
        for w in re.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn constant_rearrangement() {
        let g = Grid::uniform(1, 0.0, 2.0, 10).unwrap();
        let re = decreasing_rearrangement(&SampledField::constant(&g, 3.0).unwrap(), &DomainMask::full(&g)).unwrap();
        assert_eq!(re.values, vec![3.0]);
        assert!((re.breaks[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn lorentz_indicator() {
        let g = Grid::uniform(1, 0.0, 1.0, 64).unwrap();
        let f = SampledField::from_fn(&g, |x| if x[0] < 0.5 { 1.0 } else { 0.0 }).unwrap();
        let v = lorentz_norm(&f, 2.0, 3.0).unwrap();
        let exact = (2.0f64 / 3.0).powf(1.0 / 3.0) * 0.5f64.sqrt();
        assert!((v - exact).abs() < 1e-14);
        assert_eq!(lorentz_norm(&SampledField::zeros(&g), 2.0, 3.0).unwrap(), 0.0);
    }
}
