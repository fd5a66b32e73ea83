use serde::{Deserialize, Serialize};

use super::modular_root;
use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, SampledField};
use crate::reduce::{max_abs, pairwise_sum};
use crate::spec_text::{fmt_f64, SpecString};
use crate::weights::Weight;

/// `(Σ |v|^p · vol)^{1/p}`, scaled by `max|v|` before powering.
pub(crate) fn lp_sum(values: &[f64], p: f64, vol: f64) -> f64 {
    let m = max_abs(values);
    if m == 0.0 {
        return 0.0;
    }
    let terms: Vec<f64> = values.iter().map(|v| (v.abs() / m).powf(p)).collect();
    m * (pairwise_sum(&terms) * vol).powf(1.0 / p)
}

pub fn lebesgue_norm(f: &SampledField, p: f64) -> f64 {
    lp_sum(f.values(), p, f.grid().cell_volume())
}

/// `(Σ |f|^r ω · vol)^{1/r}`
pub fn weighted_lebesgue_norm(f: &SampledField, r: f64, w: &Weight) -> Result<f64> {
    f.grid().ensure_same(w.grid(), "weighted norm")?;
    let m = f.max_abs();
    if m == 0.0 {
        return Ok(0.0);
    }
    let terms: Vec<f64> = f
        .values()
        .iter()
        .zip(w.samples())
        .map(|(v, w)| if *v == 0.0 { 0.0 } else { (v.abs() / m).powf(r) * w })
        .collect();
    Ok(m * (pairwise_sum(&terms) * f.grid().cell_volume()).powf(1.0 / r))
}

/// Iterated norm: `L^{r_1}` along axis 0 first, then `L^{r_2}` along axis 1, ...
pub fn mixed_norm(f: &SampledField, r: &[f64]) -> Result<f64> {
    let grid = f.grid();
    if r.len() != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "{} mixed-norm exponents for dimension {}",
            r.len(),
            grid.dim()
        )));
    }
    let m = f.max_abs();
    if m == 0.0 {
        return Ok(0.0);
    }
    // Collapsing axis `a` leaves axis `a + 1` contiguous.
    let mut cur: Vec<f64> = f.values().iter().map(|v| v.abs() / m).collect();
    for (a, &ra) in r.iter().enumerate() {
        let n = grid.points()[a];
        let h = grid.cell_size()[a];
        cur = cur
            .chunks(n)
            .map(|line| {
                let terms: Vec<f64> = line.iter().map(|v| v.powf(ra)).collect();
                (pairwise_sum(&terms) * h).powf(1.0 / ra)
            })
            .collect();
    }
    Ok(m * cur[0])
}

/// Exponent fields `r(·)` for variable Lebesgue spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExponentField {
    Constant { p: f64 },
    /// `base + slope · x_axis`
    Affine { base: f64, slope: f64, axis: usize },
    /// `outer + (inner - outer) · exp(-|x|^2 / scale^2)`
    Radial { inner: f64, outer: f64, scale: f64 },
    Sampled { values: Vec<f64> },
}

impl ExponentField {
    pub(crate) fn from_spec(s: &SpecString) -> Result<Self> {
        if s.has("p") {
            s.expect_keys(&["p"])?;
            Ok(Self::Constant { p: s.f64("p")? })
        } else if s.has("base") {
            s.expect_keys(&["base", "slope", "axis"])?;
            Ok(Self::Affine {
                base: s.f64("base")?,
                slope: s.f64_or("slope", 0.0)?,
                axis: if s.has("axis") { s.usize("axis")? } else { 0 },
            })
        } else if s.has("inner") {
            s.expect_keys(&["inner", "outer", "scale"])?;
            Ok(Self::Radial { inner: s.f64("inner")?, outer: s.f64("outer")?, scale: s.f64_or("scale", 1.0)? })
        } else {
            Err(Error::Parse("variable exponent needs p, base or inner".into()))
        }
    }

    pub(crate) fn params(&self) -> String {
        match self {
            Self::Constant { p } => format!("p={}", fmt_f64(*p)),
            Self::Affine { base, slope, axis } => {
                format!("base={},slope={},axis={axis}", fmt_f64(*base), fmt_f64(*slope))
            }
            Self::Radial { inner, outer, scale } => {
                format!("inner={},outer={},scale={}", fmt_f64(*inner), fmt_f64(*outer), fmt_f64(*scale))
            }
            Self::Sampled { values } => format!("sampled={}", values.len()),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Constant { p } => *p > 1.0 && p.is_finite(),
            Self::Affine { base, slope, .. } => base.is_finite() && slope.is_finite(),
            Self::Radial { inner, outer, scale } => {
                *inner > 1.0 && *outer > 1.0 && inner.is_finite() && outer.is_finite() && *scale > 0.0
            }
            Self::Sampled { values } => values.iter().all(|v| *v > 1.0 && v.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("variable exponent {} outside (1, inf)", self.params())))
        }
    }

    pub(crate) fn scaled(&self, p: f64) -> Self {
        match self {
            Self::Constant { p: q } => Self::Constant { p: q / p },
            Self::Affine { base, slope, axis } => Self::Affine { base: base / p, slope: slope / p, axis: *axis },
            Self::Radial { inner, outer, scale } => Self::Radial { inner: inner / p, outer: outer / p, scale: *scale },
            Self::Sampled { values } => Self::Sampled { values: values.iter().map(|v| v / p).collect() },
        }
    }

    /// Samples at cell centers; every sample must lie in `(1, inf)`.
    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        let values = match self {
            Self::Constant { p } => vec![*p; grid.len()],
            Self::Affine { base, slope, axis } => {
                if *axis >= grid.dim() {
                    return Err(invalid(format!("exponent axis {axis} outside dimension {}", grid.dim())));
                }
                (0..grid.len()).map(|i| base + slope * grid.center(i)[*axis]).collect()
            }
            Self::Radial { inner, outer, scale } => (0..grid.len())
                .map(|i| {
                    let r2: f64 = grid.center(i).iter().map(|x| x * x).sum();
                    outer + (inner - outer) * (-r2 / (scale * scale)).exp()
                })
                .collect(),
            Self::Sampled { values } => {
                if values.len() != grid.len() {
                    return Err(Error::GridMismatch("exponent field length".into()));
                }
                values.clone()
            }
        };
        if let Some(v) = values.iter().find(|v| !(**v > 1.0 && v.is_finite())) {
            return Err(invalid(format!("variable exponent takes the value {v} on the grid")));
        }
        Ok(values)
    }
}

/// Luxemburg norm for the modular `Σ (|f|/λ)^{r(x)} · vol`.
pub fn variable_lebesgue_norm(f: &SampledField, exponent: &ExponentField) -> Result<f64> {
    let r = exponent.sample(f.grid())?;
    let m = f.max_abs();
    if m == 0.0 {
        return Ok(0.0);
    }
    let g: Vec<(f64, f64)> = f
        .values()
        .iter()
        .zip(&r)
        .filter(|(v, _)| **v != 0.0)
        .map(|(v, e)| (v.abs() / m, *e))
        .collect();
    let vol = f.grid().cell_volume();
    let mu = modular_root(|mu| {
        let terms: Vec<f64> = g.iter().map(|(v, e)| (v / mu).powf(*e)).collect();
        pairwise_sum(&terms) * vol
    })?;
    Ok(m * mu)
}
