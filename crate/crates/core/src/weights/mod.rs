//! Weights, Muckenhoupt constants, the Hardy–Littlewood maximal operator and
//! the Rubio de Francia iteration.

mod maximal;
mod muckenhoupt;
mod rdf;

pub use maximal::{dyadic_radii, estimate_maximal_opnorm, hl_maximal, MaximalEstimate};
pub use muckenhoupt::{muckenhoupt_constant, ApReport, Cube, CubeFamily};
pub use rdf::{rubio_de_francia, weighted_norm_duality_bound, DualityBound, RdfResult};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, SampledField};
use crate::spec_text::{broadcast, fmt_f64, fmt_vec, SpecString};

/// How a weight is produced on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightSpec {
    Unit,
    /// `|x - center|^a`
    Power { a: f64, center: Vec<f64> },
    /// Explicit per-cell samples in canonical cell order.
    Sampled { values: Vec<f64> },
}

impl WeightSpec {
    pub fn power(a: f64) -> Self {
        Self::Power { a, center: vec![0.0] }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let s = SpecString::parse(text)?;
        match s.kind.as_str() {
            "unit" | "one" => {
                s.expect_keys(&[])?;
                Ok(Self::Unit)
            }
            "power" => {
                s.expect_keys(&["a", "center"])?;
                let a = s.f64("a")?;
                if !a.is_finite() {
                    return Err(invalid("power weight exponent must be finite"));
                }
                Ok(Self::Power { a, center: s.vec_or("center", vec![0.0])? })
            }
            other => Err(Error::Parse(format!("unknown weight `{other}`"))),
        }
    }

    pub fn sample(&self, grid: &Grid) -> Result<Weight> {
        let samples = match self {
            Self::Unit => vec![1.0; grid.len()],
            Self::Power { a, center } => {
                let c = broadcast(center, grid.dim(), "weight center")?;
                sample_power(grid, *a, &c)
            }
            Self::Sampled { values } => {
                if values.len() != grid.len() {
                    return Err(Error::GridMismatch(format!(
                        "{} weight samples for {} cells",
                        values.len(),
                        grid.len()
                    )));
                }
                values.clone()
            }
        };
        Weight::new(grid.clone(), samples, self.clone())
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Unit => write!(f, "unit"),
            Self::Power { a, center } => {
                write!(f, "power:a={},center={}", fmt_f64(*a), fmt_vec(center))
            }
            Self::Sampled { values } => write!(f, "sampled:cells={}", values.len()),
        }
    }
}

pub(crate) const SINGULAR_SUBCELLS: usize = 4;

/// `|x-c|^a` at cell centers; cells whose closure contains `c` use the
/// average over a 4-per-axis subcell lattice instead.
fn sample_power(grid: &Grid, a: f64, c: &[f64]) -> Vec<f64> {
    let d = grid.dim();
    let h = grid.cell_size();
    let sub = SINGULAR_SUBCELLS;
    let mut x = vec![0.0; d];
    (0..grid.len())
        .map(|i| {
            grid.center_into(i, &mut x);
            let touches = (0..d).all(|k| (x[k] - c[k]).abs() <= 0.5 * h[k]);
            if !touches {
                let r: f64 = (0..d).map(|k| (x[k] - c[k]).powi(2)).sum::<f64>().sqrt();
                return r.powf(a);
            }
            let total = sub.pow(d as u32);
            let mut acc = 0.0;
            for s in 0..total {
                let mut rem = s;
                let mut r2 = 0.0;
                for k in 0..d {
                    let j = rem % sub;
                    rem /= sub;
                    let off = ((j as f64 + 0.5) / sub as f64 - 0.5) * h[k];
                    r2 += (x[k] + off - c[k]).powi(2);
                }
                acc += r2.sqrt().powf(a);
            }
            acc / total as f64
        })
        .collect()
}

/// A nonnegative sampled weight with its source description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    grid: Grid,
    samples: Vec<f64>,
    source: WeightSpec,
}

impl Weight {
    pub fn new(grid: Grid, samples: Vec<f64>, source: WeightSpec) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} weight samples for {} cells",
                samples.len(),
                grid.len()
            )));
        }
        if let Some(i) = samples.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid(format!(
                "weight sample {i} is {}; weights must be finite and nonnegative",
                samples[i]
            )));
        }
        if samples.iter().all(|&w| w == 0.0) {
            return Err(invalid("weight vanishes identically"));
        }
        Ok(Self { grid, samples, source })
    }

    pub fn from_field(field: &SampledField) -> Result<Self> {
        Self::new(
            field.grid().clone(),
            field.values().to_vec(),
            WeightSpec::Sampled { values: field.values().to_vec() },
        )
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
    pub fn source(&self) -> &WeightSpec {
        &self.source
    }

    pub fn to_field(&self) -> Result<SampledField> {
        SampledField::new(self.grid.clone(), self.samples.clone())
    }

    /// `ω^e` cell-wise; parametric sources keep their closed form.
    pub fn pow(&self, e: f64) -> Result<Weight> {
        if e < 0.0 {
            if let Some(i) = self.samples.iter().position(|&w| w == 0.0) {
                return Err(invalid(format!("weight vanishes at cell {i}")));
            }
        }
        let source = match &self.source {
            WeightSpec::Unit => WeightSpec::Unit,
            WeightSpec::Power { a, center } => WeightSpec::Power { a: a * e, center: center.clone() },
            WeightSpec::Sampled { .. } => WeightSpec::Sampled { values: vec![] },
        };
        let samples = match &source {
            WeightSpec::Power { a, center } => {
                sample_power(&self.grid, *a, &broadcast(center, self.grid.dim(), "center")?)
            }
            _ => self.samples.iter().map(|w| w.powf(e)).collect(),
        };
        let source = match source {
            WeightSpec::Sampled { .. } => WeightSpec::Sampled { values: samples.clone() },
            s => s,
        };
        Weight::new(self.grid.clone(), samples, source)
    }
}

/// `ω^{1-p'}` cell-wise.
pub fn dual_weight(w: &Weight, p: f64) -> Result<Weight> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(invalid(format!("dual weight needs p in (1, inf), got {p}")));
    }
    let pp = p / (p - 1.0);
    w.pow(1.0 - pp)
}

/// Conjugate exponent `p' = p/(p-1)`; `1' = inf`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_weight_p2_is_reciprocal() {
        let g = Grid::uniform(1, 0.5, 2.0, 16).unwrap();
        let w = Weight::from_field(&SampledField::from_fn(&g, |x| x[0] * x[0] + 1.0).unwrap()).unwrap();
        let d = dual_weight(&w, 2.0).unwrap();
        for (a, b) in w.samples().iter().zip(d.samples()) {
            assert_eq!(*b, 1.0 / a);
        }
    }

    #[test]
    fn dual_weight_power_exponent() {
        let g = Grid::uniform(1, -1.0, 1.0, 16).unwrap();
        let w = WeightSpec::power(0.6).sample(&g).unwrap();
        let d = dual_weight(&w, 3.0).unwrap();
        assert_eq!(d.source(), &WeightSpec::Power { a: 0.6 * (1.0 - 1.5), center: vec![0.0] });
    }

    #[test]
    fn dual_weight_involution_on_power() {
        let g = Grid::uniform(2, -1.0, 1.0, 8).unwrap();
        let w = WeightSpec::power(-0.5).sample(&g).unwrap();
        let back = dual_weight(&dual_weight(&w, 3.0).unwrap(), 1.5).unwrap();
        let WeightSpec::Power { a, .. } = back.source() else { panic!() };
        assert!((a + 0.5).abs() < 1e-15);
    }

    #[test]
    fn dual_weight_rejects_zero() {
        let g = Grid::uniform(1, 0.0, 1.0, 4).unwrap();
        let w = Weight::new(g.clone(), vec![0.0, 1.0, 1.0, 1.0], WeightSpec::Sampled { values: vec![] }).unwrap();
        assert!(dual_weight(&w, 2.0).is_err());
        assert!(Weight::new(g.clone(), vec![-1.0, 1.0, 1.0, 1.0], WeightSpec::Unit).is_err());
        assert!(Weight::new(g, vec![0.0; 4], WeightSpec::Unit).is_err());
    }

    #[test]
    fn singular_cell_is_averaged() {
        let g = Grid::uniform(1, -1.0, 1.0, 5).unwrap();
        let w = WeightSpec::power(-0.5).sample(&g).unwrap();
        // middle cell contains 0: subcell centers at ±0.05, ±0.15
        let expected = (0.05f64.powf(-0.5) + 0.15f64.powf(-0.5)) / 2.0;
        assert!((w.samples()[2] - expected).abs() < 1e-12);
        assert!((w.samples()[0] - 0.8f64.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn weight_text() {
        assert_eq!(WeightSpec::parse("power:a=-0.5,center=0").unwrap().to_string(), "power:a=-0.5,center=0");
        assert_eq!(WeightSpec::parse("unit").unwrap(), WeightSpec::Unit);
    }
}
