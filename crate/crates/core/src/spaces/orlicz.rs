use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lebesgue::lp_sum;
use super::modular_root;
use crate::error::{invalid, Error, Result};
use crate::grid::SampledField;
use crate::reduce::pairwise_sum;
use crate::spec_text::{fmt_f64, SpecString};
use crate::stencil::OffsetTable;

/// `Φ(s) = s^p` or `Φ(s) = max(s^{p1}, s^{p2})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OrliczFunction {
    Power { p: f64 },
    TwoPower { p1: f64, p2: f64 },
}

impl OrliczFunction {
    pub(crate) fn from_spec(s: &SpecString) -> Result<Self> {
        match (s.has("p"), s.has("p1") || s.has("p2")) {
            (true, false) => Ok(Self::Power { p: s.f64("p")? }),
            (false, true) => Ok(Self::TwoPower { p1: s.f64("p1")?, p2: s.f64("p2")? }),
            _ => Err(Error::Parse("Orlicz function needs either p or p1,p2".into())),
        }
    }

    pub(crate) fn params(&self) -> String {
        match self {
            Self::Power { p } => format!("p={}", fmt_f64(*p)),
            Self::TwoPower { p1, p2 } => format!("p1={},p2={}", fmt_f64(*p1), fmt_f64(*p2)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Power { p } => p > 1.0 && p.is_finite(),
            Self::TwoPower { p1, p2 } => p1 > 1.0 && p1 <= p2 && p2.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("Orlicz function {} needs exponents 1 < p1 <= p2 < inf", self.params())))
        }
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Self::Power { p } => s.powf(p),
            Self::TwoPower { p1, p2 } => s.powf(p1).max(s.powf(p2)),
        }
    }

    /// Lower and upper types `(r⁻, r⁺)`.
    pub fn types(&self) -> (f64, f64) {
        match *self {
            Self::Power { p } => (p, p),
            Self::TwoPower { p1, p2 } => (p1, p2),
        }
    }

    /// `Ψ(s) = Φ(s^{1/p})`.
    pub(crate) fn scaled(&self, p: f64) -> Self {
        match *self {
            Self::Power { p: q } => Self::Power { p: q / p },
            Self::TwoPower { p1, p2 } => Self::TwoPower { p1: p1 / p, p2: p2 / p },
        }
    }
}

/// Luxemburg norm of the nonzero values `v` (each weighted by `vol`).
fn luxemburg_values(v: &[f64], phi: &OrliczFunction, vol: f64) -> Result<f64> {
    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m == 0.0 {
        return Ok(0.0);
    }
    let g: Vec<f64> = v.iter().filter(|x| **x != 0.0).map(|x| x.abs() / m).collect();
    let mu = modular_root(|mu| {
        let terms: Vec<f64> = g.iter().map(|x| phi.eval(x / mu)).collect();
        pairwise_sum(&terms) * vol
    })?;
    Ok(m * mu)
}

/// `inf{λ > 0 : Σ Φ(|f|/λ) · vol <= 1}` by bisection.
pub fn luxemburg_norm(f: &SampledField, phi: &OrliczFunction) -> Result<f64> {
    phi.validate()?;
    luxemburg_values(f.values(), phi, f.grid().cell_volume())
}

/// `L^r` norm over the box of `x ↦ ‖f 1_{B(x,t)}‖_Φ / ‖1_{B(x,t)}‖_Φ`,
/// balls being the cells with centers at distance `< t`.
pub fn orlicz_slice_norm(f: &SampledField, phi: &OrliczFunction, r: f64, t: f64) -> Result<f64> {
    let ratios = orlicz_slice_ratios(f, phi, t)?;
    Ok(lp_sum(&ratios, r, f.grid().cell_volume()))
}

/// The per-cell ratio field of [`orlicz_slice_norm`].
pub fn orlicz_slice_ratios(f: &SampledField, phi: &OrliczFunction, t: f64) -> Result<Vec<f64>> {
    phi.validate()?;
    let grid = f.grid();
    if t < grid.min_cell() {
        return Err(invalid(format!(
            "slice radius t={t} is below the cell size {}; balls would hold a single cell",
            grid.min_cell()
        )));
    }
    if f.max_abs() == 0.0 {
        return Ok(vec![0.0; grid.len()]);
    }
    let table = OffsetTable::new(grid, t);
    let points: Vec<i64> = grid.points().iter().map(|&n| n as i64).collect();
    let vol = grid.cell_volume();
    let m = f.max_abs();
    let vals: Vec<f64> = f.values().iter().map(|v| v.abs() / m).collect();
    let ratios: Result<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let home: Vec<i64> = grid.multi_index(i).into_iter().map(|k| k as i64).collect();
            let mut ball = Vec::new();
            let mut count = 0usize;
            for j in 0..table.len() {
                if let Some(idx) = table.neighbor(j, &home, &points) {
                    count += 1;
                    if vals[idx] != 0.0 {
                        ball.push(vals[idx]);
                    }
                }
            }
            if ball.is_empty() {
                return Ok(0.0);
            }
            let num = luxemburg_values(&ball, phi, vol)?;
            let den = luxemburg_values(&vec![1.0; count], phi, vol)?;
            Ok(num / den)
        })
        .collect();
    Ok(ratios?.into_iter().map(|v| m * v).collect())
}
