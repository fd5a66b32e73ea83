//! Domains as cell masks, zero extension, and a Monte Carlo falsifier for
//! the (ε,∞)-domain condition.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, SampledField};
use crate::spec_text::{broadcast, fmt_f64, fmt_vec, SpecString};

/// Open sets Ω ⊂ ℝⁿ. Vector parameters broadcast like test-function centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DomainSpec {
    FullBox,
    Ball { center: Vec<f64>, radius: f64 },
    /// `{x : x_axis > offset}`
    HalfSpace { axis: usize, offset: f64 },
    /// Union of two open boxes.
    LShape { lo1: Vec<f64>, hi1: Vec<f64>, lo2: Vec<f64>, hi2: Vec<f64> },
    Annulus { center: Vec<f64>, r1: f64, r2: f64 },
    /// Open box minus `{x_axis = at, x_b <= tip}` with `b = (axis + 1) mod n`.
    SlitBox { lo: Vec<f64>, hi: Vec<f64>, axis: usize, at: f64, tip: f64 },
}

impl DomainSpec {
    pub fn ball(radius: f64) -> Self {
        Self::Ball { center: vec![0.0], radius }
    }

    pub fn half_space(axis: usize, offset: f64) -> Self {
        Self::HalfSpace { axis, offset }
    }

    pub fn l_shape() -> Self {
        Self::LShape {
            lo1: vec![-1.0, -1.0],
            hi1: vec![0.0, 1.0],
            lo2: vec![0.0, -1.0],
            hi2: vec![1.0, 0.0],
        }
    }

    pub fn slit_box() -> Self {
        Self::SlitBox { lo: vec![-1.0], hi: vec![1.0], axis: 0, at: 0.0, tip: 0.5 }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let s = SpecString::parse(text)?;
        let spec = match s.kind.as_str() {
            "full" | "full-box" => {
                s.expect_keys(&[])?;
                Self::FullBox
            }
            "ball" => {
                s.expect_keys(&["center", "radius"])?;
                Self::Ball { center: s.vec_or("center", vec![0.0])?, radius: s.f64_or("radius", 1.0)? }
            }
            "half-space" | "halfspace" => {
                s.expect_keys(&["axis", "offset"])?;
                Self::HalfSpace {
                    axis: if s.has("axis") { s.usize("axis")? } else { 0 },
                    offset: s.f64_or("offset", 0.0)?,
                }
            }
            "l-shape" | "lshape" => {
                s.expect_keys(&["lo1", "hi1", "lo2", "hi2"])?;
                let Self::LShape { lo1, hi1, lo2, hi2 } = Self::l_shape() else { unreachable!() };
                Self::LShape {
                    lo1: s.vec_or("lo1", lo1)?,
                    hi1: s.vec_or("hi1", hi1)?,
                    lo2: s.vec_or("lo2", lo2)?,
                    hi2: s.vec_or("hi2", hi2)?,
                }
            }
            "annulus" => {
                s.expect_keys(&["center", "r1", "r2"])?;
                Self::Annulus {
                    center: s.vec_or("center", vec![0.0])?,
                    r1: s.f64_or("r1", 0.5)?,
                    r2: s.f64_or("r2", 1.0)?,
                }
            }
            "slit-box" | "slitbox" => {
                s.expect_keys(&["lo", "hi", "axis", "at", "tip"])?;
                Self::SlitBox {
                    lo: s.vec_or("lo", vec![-1.0])?,
                    hi: s.vec_or("hi", vec![1.0])?,
                    axis: if s.has("axis") { s.usize("axis")? } else { 0 },
                    at: s.f64_or("at", 0.0)?,
                    tip: s.f64_or("tip", 0.5)?,
                }
            }
            other => return Err(Error::Parse(format!("unknown domain `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let ok = match self {
            Self::FullBox => true,
            Self::Ball { center, radius } => finite(center) && *radius > 0.0 && radius.is_finite(),
            Self::HalfSpace { offset, .. } => offset.is_finite(),
            Self::LShape { lo1, hi1, lo2, hi2 } => {
                finite(lo1) && finite(hi1) && finite(lo2) && finite(hi2)
            }
            Self::Annulus { center, r1, r2 } => {
                finite(center) && *r1 >= 0.0 && r2 > r1 && r2.is_finite()
            }
            Self::SlitBox { lo, hi, at, tip, .. } => {
                finite(lo) && finite(hi) && at.is_finite() && tip.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("domain parameters out of range: {self}")))
        }
    }

    /// Whether the shape is convex (straight segments are optimal curves).
    pub fn is_convex(&self) -> bool {
        matches!(self, Self::FullBox | Self::Ball { .. } | Self::HalfSpace { .. })
    }

    /// Shape geometry in dimension `dim`; `ambient` supplies the box for `FullBox`.
    pub fn geometry(&self, dim: usize, ambient: (&[f64], &[f64])) -> Result<Geometry> {
        self.validate()?;
        let check_axis = |axis: usize| {
            if axis < dim {
                Ok(())
            } else {
                Err(invalid(format!("axis {axis} outside dimension {dim}")))
            }
        };
        let boxed = |lo: &[f64], hi: &[f64], what: &str| -> Result<(Vec<f64>, Vec<f64>)> {
            let lo = broadcast(lo, dim, what)?;
            let hi = broadcast(hi, dim, what)?;
            if lo.iter().zip(&hi).any(|(a, b)| b <= a) {
                return Err(invalid(format!("{what}: empty box")));
            }
            Ok((lo, hi))
        };
        Ok(match self {
            Self::FullBox => {
                let (lo, hi) = boxed(ambient.0, ambient.1, "box")?;
                Geometry::Boxes { boxes: vec![(lo, hi)] }
            }
            Self::Ball { center, radius } => {
                Geometry::Ball { center: broadcast(center, dim, "center")?, radius: *radius }
            }
            Self::HalfSpace { axis, offset } => {
                check_axis(*axis)?;
                Geometry::HalfSpace { axis: *axis, offset: *offset }
            }
            Self::LShape { lo1, hi1, lo2, hi2 } => Geometry::Boxes {
                boxes: vec![boxed(lo1, hi1, "lo1/hi1")?, boxed(lo2, hi2, "lo2/hi2")?],
            },
            Self::Annulus { center, r1, r2 } => Geometry::Annulus {
                center: broadcast(center, dim, "center")?,
                r1: *r1,
                r2: *r2,
            },
            Self::SlitBox { lo, hi, axis, at, tip } => {
                check_axis(*axis)?;
                let (lo, hi) = boxed(lo, hi, "slit box")?;
                Geometry::SlitBox { lo, hi, axis: *axis, at: *at, tip: *tip }
            }
        })
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FullBox => write!(f, "full-box"),
            Self::Ball { center, radius } => {
                write!(f, "ball:center={},radius={}", fmt_vec(center), fmt_f64(*radius))
            }
            Self::HalfSpace { axis, offset } => {
                write!(f, "half-space:axis={axis},offset={}", fmt_f64(*offset))
            }
            Self::LShape { lo1, hi1, lo2, hi2 } => write!(
                f,
                "l-shape:lo1={},hi1={},lo2={},hi2={}",
                fmt_vec(lo1),
                fmt_vec(hi1),
                fmt_vec(lo2),
                fmt_vec(hi2)
            ),
            Self::Annulus { center, r1, r2 } => write!(
                f,
                "annulus:center={},r1={},r2={}",
                fmt_vec(center),
                fmt_f64(*r1),
                fmt_f64(*r2)
            ),
            Self::SlitBox { lo, hi, axis, at, tip } => write!(
                f,
                "slit-box:lo={},hi={},axis={axis},at={},tip={}",
                fmt_vec(lo),
                fmt_vec(hi),
                fmt_f64(*at),
                fmt_f64(*tip)
            ),
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Distance from `t` to the interval `[lo, hi]` (empty intervals are infinitely far).
fn interval_dist(t: f64, lo: f64, hi: f64) -> f64 {
    if lo > hi {
        f64::INFINITY
    } else if t < lo {
        lo - t
    } else if t > hi {
        t - hi
    } else {
        0.0
    }
}

/// A shape instantiated in a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Boxes { boxes: Vec<(Vec<f64>, Vec<f64>)> },
    Ball { center: Vec<f64>, radius: f64 },
    HalfSpace { axis: usize, offset: f64 },
    Annulus { center: Vec<f64>, r1: f64, r2: f64 },
    SlitBox { lo: Vec<f64>, hi: Vec<f64>, axis: usize, at: f64, tip: f64 },
}

impl Geometry {
    fn slit_axes(&self) -> Option<(usize, usize)> {
        match self {
            Self::SlitBox { lo, axis, .. } if lo.len() >= 2 => Some((*axis, (*axis + 1) % lo.len())),
            _ => None,
        }
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        match self {
            Self::Boxes { boxes } => boxes
                .iter()
                .any(|(lo, hi)| z.iter().enumerate().all(|(a, &t)| t > lo[a] && t < hi[a])),
            Self::Ball { center, radius } => dist(z, center) < *radius,
            Self::HalfSpace { axis, offset } => z[*axis] > *offset,
            Self::Annulus { center, r1, r2 } => {
                let r = dist(z, center);
                r > *r1 && r < *r2
            }
            Self::SlitBox { lo, hi, axis, at, tip } => {
                let inside = z.iter().enumerate().all(|(a, &t)| t > lo[a] && t < hi[a]);
                let on_slit = match self.slit_axes() {
                    Some((_, b)) => z[*axis] == *at && z[b] <= *tip,
                    None => z[*axis] == *at,
                };
                inside && !on_slit
            }
        }
    }

    /// Exact `dist(z, ∂Ω)` for `z ∈ Ω`.
    pub fn boundary_distance(&self, z: &[f64]) -> f64 {
        match self {
            Self::Boxes { boxes } => {
                // The complement is a union of intersections of one outer
                // half-space per box; take the nearest of those pieces.
                let mut pieces: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new()];
                for (lo, hi) in boxes {
                    let mut next = Vec::new();
                    for piece in &pieces {
                        for a in 0..z.len() {
                            for (l, h) in [(f64::NEG_INFINITY, lo[a]), (hi[a], f64::INFINITY)] {
                                let mut p = piece.clone();
                                p.push((a, l, h));
                                next.push(p);
                            }
                        }
                    }
                    pieces = next;
                }
                pieces
                    .iter()
                    .map(|piece| {
                        let mut per_axis: Vec<(f64, f64)> =
                            vec![(f64::NEG_INFINITY, f64::INFINITY); z.len()];
                        for &(a, l, h) in piece {
                            per_axis[a].0 = per_axis[a].0.max(l);
                            per_axis[a].1 = per_axis[a].1.min(h);
                        }
                        per_axis
                            .iter()
                            .enumerate()
                            .map(|(a, &(l, h))| interval_dist(z[a], l, h).powi(2))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .fold(f64::INFINITY, f64::min)
            }
            Self::Ball { center, radius } => (radius - dist(z, center)).max(0.0),
            Self::HalfSpace { axis, offset } => (z[*axis] - offset).max(0.0),
            Self::Annulus { center, r1, r2 } => {
                let r = dist(z, center);
                (r - r1).min(r2 - r).max(0.0)
            }
            Self::SlitBox { lo, hi, axis, at, .. } => {
                let to_box = (0..z.len())
                    .map(|a| (z[a] - lo[a]).min(hi[a] - z[a]))
                    .fold(f64::INFINITY, f64::min)
                    .max(0.0);
                let to_slit = self.slit_distance(z).unwrap_or((z[*axis] - at).abs());
                to_box.min(to_slit)
            }
        }
    }

    /// Distance to the slit, for slit boxes in dimension ≥ 2.
    pub fn slit_distance(&self, z: &[f64]) -> Option<f64> {
        let (a, b) = self.slit_axes()?;
        let Self::SlitBox { at, tip, .. } = self else { return None };
        Some(((z[a] - at).powi(2) + (z[b] - tip).max(0.0).powi(2)).sqrt())
    }

    /// Whether the closed segment `[p, q]` stays off the slit.
    fn segment_avoids_slit(&self, p: &[f64], q: &[f64]) -> bool {
        let Some((a, b)) = self.slit_axes() else { return true };
        let Self::SlitBox { at, tip, .. } = self else { return true };
        let (dp, dq) = (p[a] - at, q[a] - at);
        if dp * dq > 0.0 {
            return true;
        }
        if dp == dq {
            return dp != 0.0 || (p[b] > *tip && q[b] > *tip);
        }
        let t = dp / (dp - dq);
        p[b] + t * (q[b] - p[b]) > *tip
    }

    /// Exact intrinsic distance through the domain when the straight segment
    /// is blocked by the slit; `None` when no certificate is available.
    fn certified_geodesic(&self, x: &[f64], y: &[f64]) -> Option<f64> {
        let (a, b) = self.slit_axes()?;
        if self.segment_avoids_slit(x, y) {
            return None;
        }
        let Self::SlitBox { at, tip, hi, .. } = self else { return None };
        if *tip >= hi[b] {
            return None;
        }
        let ux = ((x[a] - at).powi(2) + (x[b] - tip).powi(2)).sqrt();
        let uy = ((y[a] - at).powi(2) + (y[b] - tip).powi(2)).sqrt();
        let rest: f64 = (0..x.len())
            .filter(|&k| k != a && k != b)
            .map(|k| (x[k] - y[k]).powi(2))
            .sum();
        Some(((ux + uy).powi(2) + rest).sqrt())
    }

    /// An interior reference point used to bend candidate curves inward.
    fn anchor(&self, dim: usize) -> Vec<f64> {
        match self {
            Self::Boxes { boxes } => boxes[0].0.iter().zip(&boxes[0].1).map(|(l, h)| 0.5 * (l + h)).collect(),
            Self::Ball { center, .. } => center.clone(),
            Self::HalfSpace { axis, offset } => {
                let mut c = vec![0.0; dim];
                c[*axis] = offset + 1.0;
                c
            }
            Self::Annulus { center, r1, r2, .. } => {
                let mut c = center.clone();
                c[0] += 0.5 * (r1 + r2);
                c
            }
            Self::SlitBox { lo, hi, axis, at, .. } => {
                let mut c: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
                if let Some((_, b)) = self.slit_axes() {
                    c[b] = hi[b] - 0.25 * (hi[b] - lo[b]);
                } else {
                    c[*axis] = 0.5 * (at + hi[*axis]);
                }
                c
            }
        }
    }
}

/// Per-cell membership of Ω in a grid box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainMask {
    grid: Grid,
    inside: Vec<bool>,
    count: usize,
}

impl DomainMask {
    pub fn full(grid: &Grid) -> Self {
        Self { grid: grid.clone(), inside: vec![true; grid.len()], count: grid.len() }
    }

    pub fn from_cells(grid: &Grid, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "mask has {} cells, grid has {}",
                inside.len(),
                grid.len()
            )));
        }
        let count = inside.iter().filter(|&&b| b).count();
        if count == 0 {
            return Err(Error::EmptyMask);
        }
        Ok(Self { grid: grid.clone(), inside, count })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn cells(&self) -> &[bool] {
        &self.inside
    }
    pub fn contains(&self, idx: usize) -> bool {
        self.inside[idx]
    }
    pub fn count(&self) -> usize {
        self.count
    }
    pub fn is_full(&self) -> bool {
        self.count == self.grid.len()
    }
    pub fn volume(&self) -> f64 {
        self.count as f64 * self.grid.cell_volume()
    }
    pub fn indices(&self) -> Vec<usize> {
        (0..self.inside.len()).filter(|&i| self.inside[i]).collect()
    }

    pub fn is_subset_of(&self, other: &DomainMask) -> bool {
        self.grid == other.grid && self.inside.iter().zip(&other.inside).all(|(a, b)| !a || *b)
    }

    /// `f · 1_Ω` on the same grid; keeps the analytic gradient inside Ω.
    pub fn restrict(&self, f: &SampledField) -> Result<SampledField> {
        self.grid.ensure_same(f.grid(), "restrict")?;
        if self.is_full() {
            return Ok(f.clone());
        }
        let values = f
            .values()
            .iter()
            .zip(&self.inside)
            .map(|(&v, &m)| if m { v } else { 0.0 })
            .collect();
        let out = SampledField::new(self.grid.clone(), values)?;
        match f.analytic_gradient() {
            Some(g) => {
                let d = self.grid.dim();
                let mut g = g.to_vec();
                for (i, c) in g.chunks_mut(d).enumerate() {
                    if !self.inside[i] {
                        c.iter_mut().for_each(|v| *v = 0.0);
                    }
                }
                out.with_gradient(g)
            }
            None => Ok(out),
        }
    }
}

/// Cells whose centers satisfy the shape predicate.
pub fn mask(domain: &DomainSpec, grid: &Grid) -> Result<DomainMask> {
    if *domain == DomainSpec::FullBox {
        return Ok(DomainMask::full(grid));
    }
    let geom = domain.geometry(grid.dim(), (grid.lo(), grid.hi()))?;
    let d = grid.dim();
    let inside = (0..grid.len())
        .into_par_iter()
        .map_init(|| vec![0.0; d], |x, i| {
            grid.center_into(i, x);
            geom.contains(x)
        })
        .collect();
    DomainMask::from_cells(grid, inside)
}

/// Extends values given on the Ω cells (in canonical cell order) by zero.
pub fn zero_extend(values_on_omega: &[f64], omega: &DomainMask) -> Result<SampledField> {
    if values_on_omega.len() != omega.count() {
        return Err(Error::GridMismatch(format!(
            "{} values for {} domain cells",
            values_on_omega.len(),
            omega.count()
        )));
    }
    let mut out = vec![0.0; omega.grid().len()];
    let mut it = values_on_omega.iter();
    for (o, &m) in out.iter_mut().zip(omega.cells()) {
        if m {
            *o = *it.next().expect("length checked");
        }
    }
    SampledField::new(omega.grid().clone(), out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    /// A pair for which no admissible curve can exist, with the failed
    /// condition (3 or 4) and the violation ratio `geodesic / (|x-y|/ε)`.
    Refuted { x: Vec<f64>, y: Vec<f64>, condition: u8, ratio: f64, slit_distance: Option<f64> },
    NotRefuted { samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonCertificate {
    pub domain: String,
    pub dim: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub samples: usize,
    /// Pairs joined by a candidate curve satisfying all four conditions.
    pub passed: usize,
    /// Pairs where every candidate failed but no failure could be certified.
    pub unresolved: usize,
    /// Pairs with a certified failure.
    pub certified_failures: usize,
    pub verdict: Verdict,
}

impl EpsilonCertificate {
    pub fn refuted(&self) -> bool {
        matches!(self.verdict, Verdict::Refuted { .. })
    }
}

pub const CURVE_POINTS: usize = 64;
const APEX_SCALES: [f64; 4] = [0.125, 0.25, 0.5, 0.75];

/// Conditions (i)-(iv) along a polyline through `apex` (or the segment).
fn curve_passes(geom: &Geometry, x: &[f64], y: &[f64], apex: Option<&[f64]>, eps: f64) -> bool {
    let dxy = dist(x, y);
    let vertices: Vec<&[f64]> = match apex {
        Some(a) => vec![x, a, y],
        None => vec![x, y],
    };
    let legs: Vec<f64> = vertices.windows(2).map(|w| dist(w[0], w[1])).collect();
    let length: f64 = legs.iter().sum();
    if length > dxy / eps * (1.0 + 1e-12) {
        return false;
    }
    if vertices.windows(2).any(|w| !geom.segment_avoids_slit(w[0], w[1])) {
        return false;
    }
    let d = x.len();
    let mut z = vec![0.0; d];
    for k in 0..CURVE_POINTS {
        let mut s = length * k as f64 / (CURVE_POINTS - 1) as f64;
        let mut leg = 0;
        while leg + 1 < legs.len() && s > legs[leg] {
            s -= legs[leg];
            leg += 1;
        }
        let t = if legs[leg] > 0.0 { (s / legs[leg]).min(1.0) } else { 0.0 };
        for c in 0..d {
            z[c] = vertices[leg][c] + t * (vertices[leg + 1][c] - vertices[leg][c]);
        }
        let interior = k > 0 && k + 1 < CURVE_POINTS;
        if interior && !geom.contains(&z) {
            return false;
        }
        let need = eps * dist(x, &z) * dist(y, &z) / dxy;
        if interior && geom.boundary_distance(&z) < need * (1.0 - 1e-12) {
            return false;
        }
    }
    true
}

/// Apex points for one-bend candidate curves.
fn apex_candidates(geom: &Geometry, x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
    let d = x.len();
    let mid: Vec<f64> = (0..d).map(|c| 0.5 * (x[c] + y[c])).collect();
    let chord: Vec<f64> = (0..d).map(|c| y[c] - x[c]).collect();
    let len = norm(&chord);
    let unit: Vec<f64> = chord.iter().map(|c| c / len).collect();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for a in 0..d {
        let mut e = vec![0.0; d];
        e[a] = 1.0;
        let dot = unit[a];
        let perp: Vec<f64> = (0..d).map(|c| e[c] - dot * unit[c]).collect();
        let pn = norm(&perp);
        for sign in [1.0, -1.0] {
            dirs.push(e.iter().map(|v| sign * v).collect());
            if pn > 1e-9 {
                dirs.push(perp.iter().map(|v| sign * v / pn).collect());
            }
        }
    }
    let mut out = Vec::new();
    for dir in &dirs {
        for s in APEX_SCALES {
            out.push((0..d).map(|c| mid[c] + s * len * dir[c]).collect());
        }
    }
    let anchor = geom.anchor(d);
    for t in [0.25, 0.5, 0.75, 1.0] {
        out.push((0..d).map(|c| mid[c] + t * (anchor[c] - mid[c])).collect());
    }
    out
}

enum PairOutcome {
    Passed,
    Unresolved,
    Certified { ratio: f64 },
}

fn test_pair(geom: &Geometry, x: &[f64], y: &[f64], eps: f64) -> PairOutcome {
    if let Some(geo) = geom.certified_geodesic(x, y) {
        let ratio = geo * eps / dist(x, y);
        if ratio > 1.0 {
            return PairOutcome::Certified { ratio };
        }
    }
    if curve_passes(geom, x, y, None, eps) {
        return PairOutcome::Passed;
    }
    for apex in apex_candidates(geom, x, y) {
        if geom.contains(&apex) && curve_passes(geom, x, y, Some(&apex), eps) {
            return PairOutcome::Passed;
        }
    }
    PairOutcome::Unresolved
}

/// Samples `sample_count` pairs in Ω and searches for a certified violation
/// of the (ε,∞) conditions. Points are drawn from `sample_box`; the second
/// point of each pair is displaced by a log-uniform distance.
pub fn epsilon_falsifier(
    domain: &DomainSpec,
    sample_box: &Grid,
    epsilon: f64,
    sample_count: usize,
    seed: u64,
) -> Result<EpsilonCertificate> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if sample_count == 0 {
        return Err(invalid("sample_count must be at least 1"));
    }
    let d = sample_box.dim();
    let geom = domain.geometry(d, (sample_box.lo(), sample_box.hi()))?;
    let (lo, hi) = (sample_box.lo(), sample_box.hi());
    let diam = sample_box.diameter();
    let min_step = 1e-3 * sample_box.min_cell();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(sample_count);
    let mut attempts = 0usize;
    while pairs.len() < sample_count {
        attempts += 1;
        if attempts > 1000 * sample_count + 100_000 {
            return Err(invalid(format!("could not sample pairs inside {domain}")));
        }
        let x: Vec<f64> = (0..d).map(|a| rng.random_range(lo[a]..hi[a])).collect();
        if !geom.contains(&x) {
            continue;
        }
        let r = min_step * (diam / min_step).powf(rng.random::<f64>());
        let mut dir: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
        let n = norm(&dir);
        if n < 1e-12 {
            continue;
        }
        dir.iter_mut().for_each(|v| *v /= n);
        let y: Vec<f64> = (0..d).map(|a| x[a] + r * dir[a]).collect();
        if !sample_box.contains(&y) || !geom.contains(&y) || y == x {
            continue;
        }
        pairs.push((x, y));
    }

    let outcomes: Vec<PairOutcome> =
        pairs.par_iter().map(|(x, y)| test_pair(&geom, x, y, epsilon)).collect();

    let (mut passed, mut unresolved, mut certified) = (0, 0, 0);
    let mut worst: Option<(usize, f64)> = None;
    for (i, o) in outcomes.iter().enumerate() {
        match o {
            PairOutcome::Passed => passed += 1,
            PairOutcome::Unresolved => unresolved += 1,
            PairOutcome::Certified { ratio } => {
                certified += 1;
                if worst.is_none_or(|(_, r)| *ratio > r) {
                    worst = Some((i, *ratio));
                }
            }
        }
    }
    let verdict = match worst {
        Some((i, ratio)) => {
            let (x, y) = pairs[i].clone();
            let slit_distance = geom
                .slit_distance(&x)
                .zip(geom.slit_distance(&y))
                .map(|(a, b)| a.max(b));
            Verdict::Refuted { x, y, condition: 3, ratio, slit_distance }
        }
        None => Verdict::NotRefuted { samples: sample_count },
    };
    Ok(EpsilonCertificate {
        domain: domain.to_string(),
        dim: d,
        epsilon,
        seed,
        samples: sample_count,
        passed,
        unresolved,
        certified_failures: certified,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_box_mask() {
        let g = Grid::uniform(2, -1.0, 1.0, 4).unwrap();
        let m = mask(&DomainSpec::FullBox, &g).unwrap();
        assert_eq!(m.count(), 16);
        assert!(m.is_full());
    }

    #[test]
    fn ball_mask_1d() {
        let g = Grid::uniform(1, -2.0, 2.0, 8).unwrap();
        let m = mask(&DomainSpec::ball(1.0), &g).unwrap();
        let expected: Vec<bool> = g.axis_centers(0).iter().map(|c| c.abs() < 1.0).collect();
        assert_eq!(m.cells(), expected.as_slice());
        assert_eq!(m.count(), 4);
    }

    #[test]
    fn slit_box_1d_is_full() {
        let g = Grid::uniform(1, -1.0, 1.0, 8).unwrap();
        assert_eq!(mask(&DomainSpec::slit_box(), &g).unwrap().count(), 8);
    }

    #[test]
    fn empty_mask_rejected() {
        let g = Grid::uniform(1, -1.0, 1.0, 8).unwrap();
        let far = DomainSpec::Ball { center: vec![10.0], radius: 1.0 };
        assert_eq!(mask(&far, &g), Err(Error::EmptyMask));
    }

    #[test]
    fn ball_masks_nest() {
        let g = Grid::uniform(2, -2.0, 2.0, 16).unwrap();
        let small = mask(&DomainSpec::ball(0.7), &g).unwrap();
        let big = mask(&DomainSpec::ball(1.3), &g).unwrap();
        assert!(small.is_subset_of(&big));
    }

    #[test]
    fn parse_round_trip() {
        for text in [
            "full-box",
            "ball:center=0,radius=1",
            "half-space:axis=1,offset=0.5",
            "l-shape:lo1=-1;-1,hi1=0;1,lo2=0;-1,hi2=1;0",
            "annulus:center=0,r1=0.5,r2=1",
            "slit-box:lo=-1,hi=1,axis=0,at=0,tip=0.5",
        ] {
            let d = DomainSpec::parse(text).unwrap();
            assert_eq!(d.to_string(), text);
        }
        assert!(DomainSpec::parse("ball:radius=-1").is_err());
        assert!(DomainSpec::parse("triangle").is_err());
    }

    #[test]
    fn zero_extend_indicator() {
        let g = Grid::uniform(1, -2.0, 2.0, 8).unwrap();
        let m = mask(&DomainSpec::ball(1.0), &g).unwrap();
        let f = zero_extend(&vec![1.0; m.count()], &m).unwrap();
        let ind: Vec<f64> = m.cells().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        assert_eq!(f.values(), ind.as_slice());
        let full = DomainMask::full(&g);
        let vals: Vec<f64> = (0..8).map(|i| i as f64).collect();
        assert_eq!(zero_extend(&vals, &full).unwrap().values(), vals.as_slice());
    }

    #[test]
    fn boundary_distances() {
        let l = DomainSpec::l_shape().geometry(2, (&[-1.0], &[1.0])).unwrap();
        assert!((l.boundary_distance(&[-0.5, 0.5]) - 0.5).abs() < 1e-15);
        // near the reentrant corner (0,0)
        assert!((l.boundary_distance(&[-0.1, 0.2]) - 0.1).abs() < 1e-15);
        assert!((l.boundary_distance(&[-0.3, -0.4]) - 0.3).abs() < 1e-15);
        let s = DomainSpec::slit_box().geometry(2, (&[-1.0], &[1.0])).unwrap();
        assert!((s.boundary_distance(&[0.1, 0.0]) - 0.1).abs() < 1e-15);
        assert!((s.boundary_distance(&[0.0, 0.8]) - 0.2).abs() < 1e-15);
        let expected = (0.1f64 * 0.1 + 0.1 * 0.1).sqrt();
        assert!((s.boundary_distance(&[0.1, 0.6]) - expected).abs() < 1e-15);
        let a = DomainSpec::Annulus { center: vec![0.0], r1: 0.5, r2: 1.0 }
            .geometry(2, (&[-1.0], &[1.0]))
            .unwrap();
        assert!((a.boundary_distance(&[0.6, 0.0]) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn straight_segment_in_ball_satisfies_length() {
        let g = DomainSpec::ball(1.0).geometry(2, (&[-1.0], &[1.0])).unwrap();
        assert!(curve_passes(&g, &[-0.5, 0.0], &[0.5, 0.0], None, 0.5));
    }

    #[test]
    fn slit_geodesic() {
        let g = DomainSpec::slit_box().geometry(2, (&[-1.0], &[1.0])).unwrap();
        let geo = g.certified_geodesic(&[-0.1, 0.0], &[0.1, 0.0]).unwrap();
        assert!((geo - 2.0 * (0.01f64 + 0.25).sqrt()).abs() < 1e-12);
        assert!(g.certified_geodesic(&[-0.1, 0.7], &[0.1, 0.7]).is_none());
    }

    #[test]
    fn falsifier_rejects_bad_input() {
        let b = Grid::uniform(2, -1.0, 1.0, 8).unwrap();
        assert!(epsilon_falsifier(&DomainSpec::ball(1.0), &b, 0.0, 10, 1).is_err());
        assert!(epsilon_falsifier(&DomainSpec::ball(1.0), &b, 0.5, 0, 1).is_err());
    }

    #[test]
    fn falsifier_small_runs() {
        let b = Grid::uniform(2, -1.0, 1.0, 64).unwrap();
        let c = epsilon_falsifier(&DomainSpec::slit_box(), &b, 1.0, 500, 7).unwrap();
        assert!(c.refuted());
        let c = epsilon_falsifier(&DomainSpec::ball(1.0), &b, 0.5, 500, 7).unwrap();
        assert!(!c.refuted());
        assert_eq!(c.unresolved, 0);
    }
}
