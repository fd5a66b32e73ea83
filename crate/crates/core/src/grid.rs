//! Uniform cell-centered grids, sampled fields, the test-function catalog,
//! truncations and discrete gradients.
//!
//! Cells are stored with axis 0 varying fastest. All integrals are midpoint
//! sums `sum(value) * cell_volume`.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::spec_text::{broadcast, fmt_f64, fmt_vec, SpecString};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    points: Vec<usize>,
    cell: Vec<f64>,
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, points: Vec<usize>) -> Result<Self> {
        let dim = lo.len();
        if dim == 0 {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if hi.len() != dim || points.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "bounds/points lengths differ: lo={}, hi={}, points={}",
                lo.len(),
                hi.len(),
                points.len()
            )));
        }
        for axis in 0..dim {
            if !lo[axis].is_finite() || !hi[axis].is_finite() {
                return Err(Error::InvalidGrid(format!("axis {axis}: non-finite bound")));
            }
            if hi[axis] <= lo[axis] {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: hi={} must exceed lo={}",
                    hi[axis], lo[axis]
                )));
            }
            if points[axis] < 2 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: need at least 2 points, got {}",
                    points[axis]
                )));
            }
        }
        let cell = (0..dim)
            .map(|a| (hi[a] - lo[a]) / points[a] as f64)
            .collect();
        Ok(Self { lo, hi, points, cell })
    }

    /// `make_grid(dim, lo, hi, points)` with scalar bounds broadcast to all axes.
    pub fn uniform(dim: usize, lo: f64, hi: f64, points: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim], vec![points; dim])
    }

    /// The symmetric box `[-half_width, half_width]^dim`.
    pub fn cube(dim: usize, half_width: f64, points: usize) -> Result<Self> {
        Self::uniform(dim, -half_width, half_width, points)
    }

    /// Parses the CLI form `n=2,L=5,N=128` (box `[-L, L]^n`, `N` cells per axis).
    /// `lo=` and `hi=` replace `L`; vector values use `;` and fix `n` when it
    /// is omitted, so the `Display` form parses back to the same grid.
    pub fn parse(text: &str) -> Result<Self> {
        use crate::spec_text::{broadcast, parse_f64};
        let (mut dim, mut half, mut points) = (None, 1.0, None);
        let (mut lo, mut hi) = (None, None);
        let floats = |v: &str| v.split(';').map(|x| parse_f64(x.trim())).collect::<Result<Vec<f64>>>();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("grid item `{item}` is not key=value")))?;
            let bad = |_| Error::Parse(format!("grid: bad value in `{item}`"));
            match k.trim() {
                "n" | "dim" => dim = Some(v.trim().parse::<usize>().map_err(bad)?),
                "N" | "points" => {
                    points = Some(
                        v.split(';').map(|x| x.trim().parse::<usize>().map_err(bad)).collect::<Result<Vec<_>>>()?,
                    )
                }
                "L" | "l" => half = parse_f64(v.trim())?,
                "lo" => lo = Some(floats(v)?),
                "hi" => hi = Some(floats(v)?),
                other => return Err(Error::Parse(format!("grid: unknown key `{other}`"))),
            }
        }
        let points = points.ok_or_else(|| Error::Parse("grid needs N=<points>".into()))?;
        let longest = [Some(points.len()), lo.as_ref().map(Vec::len), hi.as_ref().map(Vec::len)]
            .into_iter()
            .flatten()
            .max()
            .unwrap_or(1);
        let dim = match dim {
            Some(d) => d,
            None if longest > 1 => longest,
            None => return Err(Error::Parse("grid needs n=<dim>".into())),
        };
        let (lo, hi) = match (lo, hi) {
            (None, None) => (vec![-half], vec![half]),
            (Some(lo), Some(hi)) => (lo, hi),
            _ => return Err(Error::Parse("grid needs both lo= and hi=".into())),
        };
        let counts: Vec<f64> = points.iter().map(|&n| n as f64).collect();
        let points = broadcast(&counts, dim, "grid N")?.into_iter().map(|n| n as usize).collect();
        Self::new(broadcast(&lo, dim, "grid lo")?, broadcast(&hi, dim, "grid hi")?, points)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
    pub fn lo(&self) -> &[f64] {
        &self.lo
    }
    pub fn hi(&self) -> &[f64] {
        &self.hi
    }
    pub fn points(&self) -> &[usize] {
        &self.points
    }
    pub fn cell_size(&self) -> &[f64] {
        &self.cell
    }
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn cell_volume(&self) -> f64 {
        self.cell.iter().product()
    }
    pub fn min_cell(&self) -> f64 {
        self.cell.iter().cloned().fold(f64::INFINITY, f64::min)
    }
    pub fn max_cell(&self) -> f64 {
        self.cell.iter().cloned().fold(0.0, f64::max)
    }
    pub fn box_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.hi[a] - self.lo[a]).product()
    }
    pub fn diameter(&self) -> f64 {
        (0..self.dim())
            .map(|a| (self.hi[a] - self.lo[a]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn axis_center(&self, axis: usize, k: usize) -> f64 {
        self.lo[axis] + (k as f64 + 0.5) * self.cell[axis]
    }

    pub fn axis_centers(&self, axis: usize) -> Vec<f64> {
        (0..self.points[axis]).map(|k| self.axis_center(axis, k)).collect()
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dim());
        for &n in &self.points {
            out.push(idx % n);
            idx /= n;
        }
        out
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        for axis in (0..self.dim()).rev() {
            idx = idx * self.points[axis] + multi[axis];
        }
        idx
    }

    pub fn center(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.center_into(idx, &mut x);
        x
    }

    pub fn center_into(&self, mut idx: usize, out: &mut [f64]) {
        for axis in 0..self.dim() {
            let n = self.points[axis];
            out[axis] = self.axis_center(axis, idx % n);
            idx /= n;
        }
    }

    /// All cell centers, `dim` coordinates per cell.
    pub fn centers(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; self.len() * d];
        out.chunks_mut(d)
            .enumerate()
            .for_each(|(i, c)| self.center_into(i, c));
        out
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|a| x[a] >= self.lo[a] && x[a] <= self.hi[a])
    }

    /// Index of the cell whose closure contains `x`, if `x` is in the box.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let mut multi = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            let k = ((x[a] - self.lo[a]) / self.cell[a]).floor() as isize;
            multi.push(k.clamp(0, self.points[a] as isize - 1) as usize);
        }
        Some(self.linear_index(&multi))
    }

    pub fn ensure_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{what}: grids differ")))
        }
    }

    /// The same box refined by `factor` along every axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(
            self.lo.clone(),
            self.hi.clone(),
            self.points.iter().map(|n| n * factor).collect(),
        )
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={},lo={},hi={},N={}",
            self.dim(),
            fmt_vec(&self.lo),
            fmt_vec(&self.hi),
            self.points
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(";")
        )
    }
}

/// Function values on a grid, optionally with the exact gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledField {
    grid: Grid,
    values: Vec<f64>,
    /// `dim` components per cell when present.
    gradient: Option<Vec<f64>>,
}

impl SampledField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("value at cell {i}")));
        }
        Ok(Self { grid, values, gradient: None })
    }

    pub fn with_gradient(mut self, gradient: Vec<f64>) -> Result<Self> {
        if gradient.len() != self.grid.len() * self.grid.dim() {
            return Err(Error::GridMismatch(format!(
                "gradient has {} entries, expected {}",
                gradient.len(),
                self.grid.len() * self.grid.dim()
            )));
        }
        if gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient".into()));
        }
        self.gradient = Some(gradient);
        Ok(self)
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64 + Sync>(grid: &Grid, f: F) -> Result<Self> {
        let d = grid.dim();
        let values = (0..grid.len())
            .into_par_iter()
            .map_init(
                || vec![0.0; d],
                |x, i| {
                    grid.center_into(i, x);
                    f(x)
                },
            )
            .collect();
        Self::new(grid.clone(), values)
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()], gradient: None }
    }

    pub fn constant(grid: &Grid, c: f64) -> Result<Self> {
        Self::new(grid.clone(), vec![c; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn analytic_gradient(&self) -> Option<&[f64]> {
        self.gradient.as_deref()
    }

    /// Pointwise map; gradient metadata is dropped.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn abs(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.abs()).collect(),
            gradient: None,
        }
    }

    /// `c * f`, scaling the gradient too.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let mut out = Self::new(self.grid.clone(), self.values.iter().map(|v| c * v).collect())?;
        if let Some(g) = &self.gradient {
            out = out.with_gradient(g.iter().map(|v| c * v).collect())?;
        }
        Ok(out)
    }

    pub fn add(&self, other: &SampledField) -> Result<Self> {
        self.grid.ensure_same(&other.grid, "field sum")?;
        Self::new(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        crate::reduce::max_abs(&self.values)
    }

    /// Gradient per cell: the analytic one when present, else finite differences.
    pub fn gradient(&self) -> Result<Vec<f64>> {
        match &self.gradient {
            Some(g) => Ok(g.clone()),
            None => gradient_fd(self),
        }
    }

    /// Euclidean magnitude of [`SampledField::gradient`] as a field.
    pub fn gradient_magnitude(&self) -> Result<SampledField> {
        let d = self.grid.dim();
        let g = self.gradient()?;
        let mags = g
            .chunks(d)
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        SampledField::new(self.grid.clone(), mags)
    }
}

/// Closed-form test functions. Every kind has an analytic gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TestFunctionSpec {
    /// `exp(-|x-c|^2 / sigma^2)`
    Gaussian { sigma: f64, center: Vec<f64> },
    /// Radial tent `max(0, 1 - 2|x-c|/width)`; support has diameter `width`.
    Tent { width: f64, center: Vec<f64> },
    /// `x_axis`
    Coordinate { axis: usize },
    /// `exp(1 - 1/(1 - |x-c|^2/R^2))` inside the ball of radius `R`, 0 outside.
    SmoothBump { radius: f64, center: Vec<f64> },
    /// `(x_0 - c_0)^degree * exp(-|x-c|^2 / sigma^2)`
    PolyGaussian { degree: u32, sigma: f64, center: Vec<f64> },
    Constant { value: f64 },
}

impl TestFunctionSpec {
    pub fn gaussian(sigma: f64) -> Self {
        Self::Gaussian { sigma, center: vec![0.0] }
    }
    pub fn tent(width: f64) -> Self {
        Self::Tent { width, center: vec![0.0] }
    }
    pub fn bump(radius: f64) -> Self {
        Self::SmoothBump { radius, center: vec![0.0] }
    }
    pub fn poly_gaussian(degree: u32, sigma: f64) -> Self {
        Self::PolyGaussian { degree, sigma, center: vec![0.0] }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let s = SpecString::parse(text)?;
        let spec = match s.kind.as_str() {
            "gaussian" => {
                s.expect_keys(&["sigma", "center"])?;
                Self::Gaussian { sigma: s.f64_or("sigma", 1.0)?, center: s.vec_or("center", vec![0.0])? }
            }
            "tent" => {
                s.expect_keys(&["width", "center"])?;
                Self::Tent { width: s.f64_or("width", 2.0)?, center: s.vec_or("center", vec![0.0])? }
            }
            "coordinate" => {
                s.expect_keys(&["axis"])?;
                Self::Coordinate { axis: if s.has("axis") { s.usize("axis")? } else { 0 } }
            }
            "bump" | "smooth-bump" => {
                s.expect_keys(&["radius", "center"])?;
                Self::SmoothBump { radius: s.f64_or("radius", 1.0)?, center: s.vec_or("center", vec![0.0])? }
            }
            "polygauss" | "polynomial-gaussian" => {
                s.expect_keys(&["degree", "sigma", "center"])?;
                Self::PolyGaussian {
                    degree: if s.has("degree") { s.usize("degree")? as u32 } else { 1 },
                    sigma: s.f64_or("sigma", 1.0)?,
                    center: s.vec_or("center", vec![0.0])?,
                }
            }
            "constant" => {
                s.expect_keys(&["value"])?;
                Self::Constant { value: s.f64_or("value", 1.0)? }
            }
            other => return Err(Error::Parse(format!("unknown test function `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            Self::Gaussian { sigma, .. } | Self::PolyGaussian { sigma, .. } => positive(*sigma, "sigma"),
            Self::Tent { width, .. } => positive(*width, "width"),
            Self::SmoothBump { radius, .. } => positive(*radius, "radius"),
            Self::Coordinate { .. } => Ok(()),
            Self::Constant { value } if value.is_finite() => Ok(()),
            Self::Constant { value } => Err(invalid(format!("constant value must be finite, got {value}"))),
        }
    }

    fn center(&self) -> &[f64] {
        match self {
            Self::Gaussian { center, .. }
            | Self::Tent { center, .. }
            | Self::SmoothBump { center, .. }
            | Self::PolyGaussian { center, .. } => center,
            Self::Coordinate { .. } | Self::Constant { .. } => &[0.0],
        }
    }

    /// Value and gradient at `x`; `c` is the broadcast center.
    fn eval(&self, x: &[f64], c: &[f64], grad: &mut [f64]) -> f64 {
        let d = x.len();
        let r2: f64 = (0..d).map(|a| (x[a] - c[a]).powi(2)).sum();
        match *self {
            Self::Gaussian { sigma, .. } => {
                let s2 = sigma * sigma;
                let v = (-r2 / s2).exp();
                for a in 0..d {
                    grad[a] = -2.0 * (x[a] - c[a]) / s2 * v;
                }
                v
            }
            Self::Tent { width, .. } => {
                let r = r2.sqrt();
                let v = 1.0 - 2.0 * r / width;
                if v <= 0.0 {
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    0.0
                } else {
                    for a in 0..d {
                        grad[a] = if r > 0.0 { -2.0 / width * (x[a] - c[a]) / r } else { 0.0 };
                    }
                    v
                }
            }
            Self::Coordinate { axis } => {
                grad.iter_mut().for_each(|g| *g = 0.0);
                grad[axis] = 1.0;
                x[axis]
            }
            Self::Constant { value } => {
                grad.iter_mut().for_each(|g| *g = 0.0);
                value
            }
            Self::SmoothBump { radius, .. } => {
                let u = r2 / (radius * radius);
                if u >= 1.0 {
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    0.0
                } else {
                    let v = (1.0 - 1.0 / (1.0 - u)).exp();
                    let dv_du = -v / ((1.0 - u) * (1.0 - u));
                    for a in 0..d {
                        grad[a] = dv_du * 2.0 * (x[a] - c[a]) / (radius * radius);
                    }
                    v
                }
            }
            Self::PolyGaussian { degree, sigma, .. } => {
                let s2 = sigma * sigma;
                let e = (-r2 / s2).exp();
                let t = x[0] - c[0];
                let poly = t.powi(degree as i32);
                let v = poly * e;
                for a in 0..d {
                    grad[a] = -2.0 * (x[a] - c[a]) / s2 * v;
                }
                let dpoly = if degree == 0 { 0.0 } else { degree as f64 * t.powi(degree as i32 - 1) };
                grad[0] += dpoly * e;
                v
            }
        }
    }

    /// Evaluates the function at the cell centers of `grid`.
    pub fn sample(&self, grid: &Grid) -> Result<SampledField> {
        self.validate()?;
        let d = grid.dim();
        if let Self::Coordinate { axis } = self {
            if *axis >= d {
                return Err(invalid(format!("coordinate axis {axis} outside dimension {d}")));
            }
        }
        let c = broadcast(self.center(), d, "center")?;
        let mut values = vec![0.0; grid.len()];
        let mut gradient = vec![0.0; grid.len() * d];
        values
            .par_iter_mut()
            .zip(gradient.par_chunks_mut(d))
            .enumerate()
            .for_each_init(
                || vec![0.0; d],
                |x, (i, (v, g))| {
                    grid.center_into(i, x);
                    *v = self.eval(x, &c, g);
                },
            );
        SampledField::new(grid.clone(), values)?.with_gradient(gradient)
    }

    /// Half-width `L` of a box `[-L, L]^n` (around the center) outside which
    /// at most `tol` of the L1 mass lies. `None` for non-decaying functions.
    pub fn suggested_half_width(&self, dim: usize, tol: f64) -> Option<f64> {
        let c = self.center().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        match *self {
            Self::Coordinate { .. } | Self::Constant { .. } => None,
            Self::Tent { width, .. } => Some(c + 0.5 * width),
            Self::SmoothBump { radius, .. } => Some(c + radius),
            Self::Gaussian { sigma, .. } => {
                // Union bound over axes of the 1D tail erfc(L/sigma).
                let mut l = sigma;
                while dim as f64 * erfc(l / sigma) > tol {
                    l += 0.25 * sigma;
                }
                Some(c + l)
            }
            Self::PolyGaussian { degree, sigma, .. } => {
                let profile = |t: f64| t.powi(degree as i32) * (-t * t / (sigma * sigma)).exp();
                let h = sigma / 200.0;
                let tail = |from: f64| {
                    (0..4000).map(|k| profile(from + (k as f64 + 0.5) * h)).sum::<f64>() * h
                };
                let total = tail(0.0) + tail(20.0 * sigma);
                let mut l = sigma;
                while dim as f64 * tail(l) > tol * total {
                    l += 0.25 * sigma;
                }
                Some(c + l)
            }
        }
    }
}

impl fmt::Display for TestFunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian { sigma, center } => {
                write!(f, "gaussian:sigma={},center={}", fmt_f64(*sigma), fmt_vec(center))
            }
            Self::Tent { width, center } => {
                write!(f, "tent:width={},center={}", fmt_f64(*width), fmt_vec(center))
            }
            Self::Coordinate { axis } => write!(f, "coordinate:axis={axis}"),
            Self::Constant { value } => write!(f, "constant:value={}", fmt_f64(*value)),
            Self::SmoothBump { radius, center } => {
                write!(f, "bump:radius={},center={}", fmt_f64(*radius), fmt_vec(center))
            }
            Self::PolyGaussian { degree, sigma, center } => write!(
                f,
                "polygauss:degree={degree},sigma={},center={}",
                fmt_f64(*sigma),
                fmt_vec(center)
            ),
        }
    }
}

/// `f_m = f` where `|f| <= m`, else `m f/|f|`.
pub fn truncate(f: &SampledField, m: f64) -> Result<SampledField> {
    if !(m > 0.0) {
        return Err(invalid(format!("truncation level must be positive, got {m}")));
    }
    f.map(|v| if v.abs() <= m { v } else { m * v.signum() })
}

/// Central differences in the interior, second-order one-sided differences
/// on boundary cells. Returns `dim` components per cell.
pub fn gradient_fd(f: &SampledField) -> Result<Vec<f64>> {
    let grid = f.grid();
    let d = grid.dim();
    if let Some(a) = (0..d).find(|&a| grid.points()[a] < 3) {
        return Err(Error::InvalidGrid(format!(
            "finite differences need at least 3 points on axis {a}"
        )));
    }
    let v = f.values();
    let mut out = vec![0.0; grid.len() * d];
    let mut stride = 1;
    for axis in 0..d {
        let n = grid.points()[axis];
        let h = grid.cell_size()[axis];
        for i in 0..grid.len() {
            let k = (i / stride) % n;
            let at = |off: isize| v[(i as isize + off * stride as isize) as usize];
            out[i * d + axis] = if k == 0 {
                (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
            } else if k == n - 1 {
                (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h)
            } else {
                (at(1) - at(-1)) / (2.0 * h)
            };
        }
        stride *= n;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_grid_centers_1d() {
        let g = Grid::uniform(1, 0.0, 1.0, 4).unwrap();
        assert_eq!(g.axis_centers(0), vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn make_grid_2d_cells() {
        let g = Grid::uniform(2, -1.0, 1.0, 8).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!(g.cell_size(), &[0.25, 0.25]);
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert!(Grid::uniform(1, 1.0, 0.0, 4).is_err());
        assert!(Grid::uniform(1, 0.0, 1.0, 0).is_err());
        assert!(Grid::uniform(1, 0.0, 1.0, 1).is_err());
        assert!(Grid::uniform(1, f64::NAN, 1.0, 4).is_err());
        assert!(Grid::new(vec![0.0], vec![1.0, 2.0], vec![4]).is_err());
    }

    #[test]
    fn grid_cli_form() {
        let g = Grid::parse("n=2,L=5,N=128").unwrap();
        assert_eq!(Grid::parse(&g.to_string()).unwrap(), g);
        let u = Grid::parse("n=1,lo=0,hi=1,N=16").unwrap();
        assert_eq!((u.lo()[0], u.hi()[0], u.len()), (0.0, 1.0, 16));
        let r = Grid::new(vec![0.0, -1.0], vec![2.0, 1.0], vec![8, 4]).unwrap();
        assert_eq!(Grid::parse(&r.to_string()).unwrap(), r);
        assert_eq!(g.dim(), 2);
        assert_eq!(g.points(), &[128, 128]);
        assert_eq!(g.lo(), &[-5.0, -5.0]);
    }

    #[test]
    fn index_round_trip() {
        let g = Grid::new(vec![0.0; 3], vec![1.0; 3], vec![3, 4, 5]).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.linear_index(&g.multi_index(i)), i);
        }
        assert_eq!(g.multi_index(1), vec![1, 0, 0]);
    }

    #[test]
    fn sample_examples() {
        let g = Grid::uniform(1, 0.0, 1.0, 4).unwrap();
        let f = TestFunctionSpec::gaussian(1.0).sample(&g).unwrap();
        assert_eq!(f.values()[0], (-0.125f64 * 0.125).exp());

        let f = TestFunctionSpec::Coordinate { axis: 0 }.sample(&g).unwrap();
        assert_eq!(f.values(), g.axis_centers(0).as_slice());
        assert!(f.analytic_gradient().unwrap().iter().all(|&d| d == 1.0));

        let g = Grid::uniform(1, 0.0, 1.0, 2).unwrap();
        let f = TestFunctionSpec::tent(2.0).sample(&g).unwrap();
        // centers 0.25 and 0.75
        assert_eq!(f.values()[0], 0.75);
        let g = Grid::uniform(1, 0.0, 2.0, 2).unwrap();
        let f = TestFunctionSpec::tent(2.0).sample(&g).unwrap();
        assert_eq!(f.values()[0], 0.5);
    }

    #[test]
    fn sample_is_deterministic() {
        let g = Grid::uniform(2, -2.0, 2.0, 17).unwrap();
        let spec = TestFunctionSpec::poly_gaussian(2, 0.7);
        let a = spec.sample(&g).unwrap();
        let b = spec.sample(&g).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn canonical_text_round_trip() {
        for text in [
            "gaussian:sigma=1.5,center=0.5;-1",
            "tent:width=2,center=0",
            "coordinate:axis=1",
            "bump:radius=0.75,center=0",
            "polygauss:degree=3,sigma=1,center=0",
        ] {
            let spec = TestFunctionSpec::parse(text).unwrap();
            assert_eq!(spec.to_string(), text);
            assert_eq!(TestFunctionSpec::parse(&spec.to_string()).unwrap(), spec);
        }
        assert!(TestFunctionSpec::parse("gaussian:sigma=-1").is_err());
        assert!(TestFunctionSpec::parse("gaussian:sigmaa=1").is_err());
    }

    #[test]
    fn truncate_examples() {
        let g = Grid::uniform(1, -2.0, 2.0, 8).unwrap();
        let three = SampledField::constant(&g, 3.0).unwrap();
        assert!(truncate(&three, 1.0).unwrap().values().iter().all(|&v| v == 1.0));

        let x = TestFunctionSpec::Coordinate { axis: 0 }.sample(&g).unwrap();
        let t = truncate(&x, 1.0).unwrap();
        for (a, b) in x.values().iter().zip(t.values()) {
            assert_eq!(*b, a.clamp(-1.0, 1.0));
        }
        assert!(t.analytic_gradient().is_none());

        let gauss = TestFunctionSpec::gaussian(1.0).sample(&g).unwrap();
        assert_eq!(truncate(&gauss, 2.0).unwrap().values(), gauss.values());
        assert!(truncate(&gauss, 0.0).is_err());
        assert!(truncate(&gauss, -1.0).is_err());
    }

    #[test]
    fn gradient_fd_exact_on_linear_and_quadratic() {
        let g = Grid::uniform(1, -1.0, 1.0, 10).unwrap();
        let lin = SampledField::from_fn(&g, |x| x[0]).unwrap();
        for d in gradient_fd(&lin).unwrap() {
            assert!((d - 1.0).abs() < 1e-12);
        }
        let quad = SampledField::from_fn(&g, |x| x[0] * x[0]).unwrap();
        let d = gradient_fd(&quad).unwrap();
        for i in 0..g.len() {
            assert!((d[i] - 2.0 * g.axis_center(0, i)).abs() < 1e-12, "cell {i}");
        }
    }

    #[test]
    fn gradient_fd_is_second_order_on_catalog() {
        // Max interior error should drop by ~4 when h halves.
        for spec in [
            TestFunctionSpec::gaussian(1.0),
            TestFunctionSpec::poly_gaussian(1, 1.0),
            TestFunctionSpec::bump(1.5),
        ] {
            let err = |n: usize| {
                let g = Grid::cube(2, 2.0, n).unwrap();
                let f = spec.sample(&g).unwrap();
                let fd = gradient_fd(&f).unwrap();
                let an = f.analytic_gradient().unwrap();
                fd.iter().zip(an).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            };
            let (e1, e2) = (err(64), err(128));
            assert!(e2 < e1 / 3.0, "{spec}: {e1} -> {e2}");
        }
    }

    #[test]
    fn gaussian_gradient_at_half() {
        let g = Grid::uniform(1, 0.0, 1.0, 2).unwrap();
        let f = TestFunctionSpec::gaussian(1.0).sample(&g).unwrap();
        // center 0.25; check analytic form
        let x: f64 = 0.25;
        assert!((f.analytic_gradient().unwrap()[0] + 2.0 * x * (-x * x).exp()).abs() < 1e-15);
        let g = Grid::uniform(1, -2.0, 3.0, 200).unwrap();
        let f = TestFunctionSpec::gaussian(1.0).sample(&g).unwrap();
        let fd = gradient_fd(&f).unwrap();
        let i = g.locate(&[0.5]).unwrap();
        let c = g.axis_center(0, i);
        assert!((fd[i] + 2.0 * c * (-c * c).exp()).abs() < 2.0 * g.cell_size()[0].powi(2));
    }

    #[test]
    fn gradient_fd_rejects_small_grid() {
        let g = Grid::uniform(1, 0.0, 1.0, 2).unwrap();
        assert!(gradient_fd(&SampledField::zeros(&g)).is_err());
    }

    #[test]
    fn suggested_box_gaussian() {
        let l = TestFunctionSpec::gaussian(1.0).suggested_half_width(1, 1e-8).unwrap();
        assert!(erfc(l) <= 1e-8 && l < 6.5);
        assert!(TestFunctionSpec::Coordinate { axis: 0 }.suggested_half_width(1, 1e-8).is_none());
    }
}
