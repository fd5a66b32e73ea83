//! Norms of the ball Banach function-space catalog on sampled fields.
//!
//! Every evaluator receives `f · 1_Ω` on the full grid, so the norm on Ω
//! is the norm of the zero extension.

mod associate;
mod dyadic;
mod herz;
mod lebesgue;
mod morrey;
mod orlicz;
mod rearrangement;

pub use associate::{associate_norm_empirical, AssociateEstimate};
pub use dyadic::{
    bbm_morrey_norm, bbm_morrey_norm_levels, cover_ball, default_levels, dyadic_cover_bound, dyadic_cubes, CoverResult,
    DyadicCube, DyadicSystem,
};
pub use herz::{
    herz_centers, herz_global_norm, herz_global_norm_over, herz_local_norm, mo_indices, HerzWeight, MoIndices,
};
pub use lebesgue::{
    lebesgue_norm, mixed_norm, variable_lebesgue_norm, weighted_lebesgue_norm, ExponentField,
};
pub use morrey::{morrey_norm, morrey_radii};
pub use orlicz::{luxemburg_norm, orlicz_slice_norm, orlicz_slice_ratios, OrliczFunction};
pub use rearrangement::{decreasing_rearrangement, lorentz_norm, Rearrangement};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{zero_extend, DomainMask};
use crate::error::{invalid, Error, Result};
use crate::grid::SampledField;
use crate::spec_text::{fmt_f64, fmt_vec, SpecString};
use crate::weights::WeightSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpaceSpec {
    Lebesgue { p: f64 },
    WeightedLebesgue { r: f64, weight: WeightSpec },
    Lorentz { r: f64, tau: f64 },
    Orlicz { phi: OrliczFunction },
    OrliczSlice { phi: OrliczFunction, r: f64, t: f64 },
    Morrey { r: f64, alpha: f64 },
    /// `levels` overrides the default dyadic level range.
    BesovBourgainMorrey { q: f64, p: f64, r: f64, tau: f64, levels: Option<(i32, i32)> },
    HerzLocal { p: f64, q: f64, a: f64, xi: Vec<f64> },
    /// Centers are every `stride`-th cell center per axis plus the origin.
    HerzGlobal { p: f64, q: f64, a: f64, stride: usize },
    MixedNorm { r: Vec<f64> },
    VariableLebesgue { exponent: ExponentField },
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(invalid(msg()))
    }
}

fn above_one(v: f64) -> bool {
    v > 1.0 && v.is_finite()
}

impl SpaceSpec {
    pub fn lebesgue(p: f64) -> Self {
        Self::Lebesgue { p }
    }

    /// Checks the parameter ranges on which each evaluator is defined.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Lebesgue { p } => check(*p >= 1.0 && p.is_finite(), || format!("Lebesgue p={p} outside [1, inf)")),
            Self::WeightedLebesgue { r, .. } => {
                check(*r > 0.0 && r.is_finite(), || format!("weighted Lebesgue r={r} outside (0, inf)"))
            }
            Self::Lorentz { r, tau } => check(above_one(*r) && above_one(*tau), || {
                format!("Lorentz (r, tau)=({r}, {tau}) outside (1, inf)")
            }),
            Self::Orlicz { phi } => phi.validate(),
            Self::OrliczSlice { phi, r, t } => {
                phi.validate()?;
                check(above_one(*r), || format!("Orlicz-slice r={r} outside (1, inf)"))?;
                check(*t > 0.0 && t.is_finite(), || format!("Orlicz-slice t={t} must be positive"))
            }
            Self::Morrey { r, alpha } => check(*r >= 1.0 && r <= alpha && alpha.is_finite(), || {
                format!("Morrey needs 1 <= r <= alpha < inf, got r={r}, alpha={alpha}")
            }),
            Self::BesovBourgainMorrey { q, p, r, tau, levels } => {
                check(*q > 1.0 && q <= p && p <= r && p.is_finite(), || {
                    format!("Besov-Bourgain-Morrey needs 1 < q <= p <= r <= inf, got q={q}, p={p}, r={r}")
                })?;
                check(*tau > 1.0, || format!("Besov-Bourgain-Morrey tau={tau} outside (1, inf]"))?;
                if let Some((lo, hi)) = levels {
                    check(lo <= hi, || format!("empty level range {lo}..={hi}"))?;
                }
                Ok(())
            }
            Self::HerzLocal { p, q, a, xi } => {
                check(above_one(*p) && above_one(*q), || format!("Herz (p, q)=({p}, {q}) outside (1, inf)"))?;
                check(a.is_finite() && xi.iter().all(|v| v.is_finite()), || "Herz weight/center must be finite".into())
            }
            Self::HerzGlobal { p, q, a, stride } => {
                check(above_one(*p) && above_one(*q), || format!("Herz (p, q)=({p}, {q}) outside (1, inf)"))?;
                check(a.is_finite() && *stride >= 1, || "Herz exponent must be finite and stride >= 1".into())
            }
            Self::MixedNorm { r } => check(!r.is_empty() && r.iter().all(|v| above_one(*v)), || {
                format!("mixed-norm exponents {r:?} outside (1, inf)")
            }),
            Self::VariableLebesgue { exponent } => exponent.validate(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let s = SpecString::parse(text)?;
        let spec = match s.kind.as_str() {
            "lebesgue" | "lp" => {
                s.expect_keys(&["p"])?;
                Self::Lebesgue { p: s.f64("p")? }
            }
            "weighted" | "weighted-lebesgue" => {
                s.expect_keys(&["r", "a", "center"])?;
                let weight = if s.has("a") {
                    WeightSpec::Power { a: s.f64("a")?, center: s.vec_or("center", vec![0.0])? }
                } else {
                    WeightSpec::Unit
                };
                Self::WeightedLebesgue { r: s.f64("r")?, weight }
            }
            "lorentz" => {
                s.expect_keys(&["r", "tau"])?;
                Self::Lorentz { r: s.f64("r")?, tau: s.f64("tau")? }
            }
            "orlicz" => {
                s.expect_keys(&["p", "p1", "p2"])?;
                Self::Orlicz { phi: OrliczFunction::from_spec(&s)? }
            }
            "orlicz-slice" => {
                s.expect_keys(&["p", "p1", "p2", "r", "t"])?;
                Self::OrliczSlice { phi: OrliczFunction::from_spec(&s)?, r: s.f64("r")?, t: s.f64("t")? }
            }
            "morrey" => {
                s.expect_keys(&["r", "alpha"])?;
                Self::Morrey { r: s.f64("r")?, alpha: s.f64("alpha")? }
            }
            "bbmorrey" | "besov-bourgain-morrey" => {
                s.expect_keys(&["q", "p", "r", "tau", "numin", "numax"])?;
                let levels = match (s.has("numin"), s.has("numax")) {
                    (true, true) => Some((s.f64("numin")? as i32, s.f64("numax")? as i32)),
                    (false, false) => None,
                    _ => return Err(Error::Parse("give both numin and numax".into())),
                };
                Self::BesovBourgainMorrey {
                    q: s.f64("q")?,
                    p: s.f64("p")?,
                    r: s.f64("r")?,
                    tau: s.f64("tau")?,
                    levels,
                }
            }
            "herz-local" => {
                s.expect_keys(&["p", "q", "a", "xi"])?;
                Self::HerzLocal {
                    p: s.f64("p")?,
                    q: s.f64("q")?,
                    a: s.f64_or("a", 0.0)?,
                    xi: s.vec_or("xi", vec![0.0])?,
                }
            }
            "herz-global" => {
                s.expect_keys(&["p", "q", "a", "stride"])?;
                Self::HerzGlobal {
                    p: s.f64("p")?,
                    q: s.f64("q")?,
                    a: s.f64_or("a", 0.0)?,
                    stride: if s.has("stride") { s.usize("stride")? } else { 4 },
                }
            }
            "mixed" | "mixed-norm" => {
                s.expect_keys(&["r"])?;
                Self::MixedNorm { r: s.vec("r")? }
            }
            "variable" | "variable-lebesgue" => Self::VariableLebesgue { exponent: ExponentField::from_spec(&s)? },
            other => return Err(Error::Parse(format!("unknown space `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The catalog member `Y` with `‖g‖_Y = ‖|g|^{1/p}‖_X^p`, so that
    /// `norm(|f|^p, Y)^{1/p} = norm(f, X)`.
    pub fn convexify(&self, p: f64) -> Result<SpaceSpec> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(invalid(format!("convexification exponent must be positive, got {p}")));
        }
        let out = match self {
            Self::Lebesgue { p: q } => Self::Lebesgue { p: q / p },
            Self::WeightedLebesgue { r, weight } => Self::WeightedLebesgue { r: r / p, weight: weight.clone() },
            Self::Lorentz { r, tau } => Self::Lorentz { r: r / p, tau: tau / p },
            Self::Orlicz { phi } => Self::Orlicz { phi: phi.scaled(p) },
            Self::OrliczSlice { phi, r, t } => Self::OrliczSlice { phi: phi.scaled(p), r: r / p, t: *t },
            Self::Morrey { r, alpha } => Self::Morrey { r: r / p, alpha: alpha / p },
            Self::BesovBourgainMorrey { q, p: pp, r, tau, levels } => Self::BesovBourgainMorrey {
                q: q / p,
                p: pp / p,
                r: r / p,
                tau: tau / p,
                levels: *levels,
            },
            Self::HerzLocal { p: hp, q, a, xi } => Self::HerzLocal { p: hp / p, q: q / p, a: a * p, xi: xi.clone() },
            Self::HerzGlobal { p: hp, q, a, stride } => {
                Self::HerzGlobal { p: hp / p, q: q / p, a: a * p, stride: *stride }
            }
            Self::MixedNorm { r } => Self::MixedNorm { r: r.iter().map(|v| v / p).collect() },
            Self::VariableLebesgue { exponent } => Self::VariableLebesgue { exponent: exponent.scaled(p) },
        };
        out.validate().map_err(|e| invalid(format!("convexification of {self} by {p} leaves the valid range: {e}")))?;
        Ok(out)
    }

    /// Whether the parameters lie in the range where the norm is a Banach norm.
    pub fn is_banach(&self) -> bool {
        match self {
            Self::Lebesgue { .. } => true,
            Self::WeightedLebesgue { r, .. } => *r >= 1.0,
            Self::Lorentz { r, tau } => tau <= r,
            _ => true,
        }
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Lebesgue { p } => write!(f, "lebesgue:p={}", fmt_f64(*p)),
            Self::WeightedLebesgue { r, weight } => match weight {
                WeightSpec::Unit => write!(f, "weighted:r={}", fmt_f64(*r)),
                WeightSpec::Power { a, center } => {
                    write!(f, "weighted:r={},a={},center={}", fmt_f64(*r), fmt_f64(*a), fmt_vec(center))
                }
                WeightSpec::Sampled { .. } => write!(f, "weighted:r={},weight=sampled", fmt_f64(*r)),
            },
            Self::Lorentz { r, tau } => write!(f, "lorentz:r={},tau={}", fmt_f64(*r), fmt_f64(*tau)),
            Self::Orlicz { phi } => write!(f, "orlicz:{}", phi.params()),
            Self::OrliczSlice { phi, r, t } => {
                write!(f, "orlicz-slice:{},r={},t={}", phi.params(), fmt_f64(*r), fmt_f64(*t))
            }
            Self::Morrey { r, alpha } => write!(f, "morrey:r={},alpha={}", fmt_f64(*r), fmt_f64(*alpha)),
            Self::BesovBourgainMorrey { q, p, r, tau, levels } => {
                write!(f, "bbmorrey:q={},p={},r={},tau={}", fmt_f64(*q), fmt_f64(*p), fmt_f64(*r), fmt_f64(*tau))?;
                if let Some((lo, hi)) = levels {
                    write!(f, ",numin={lo},numax={hi}")?;
                }
                Ok(())
            }
            Self::HerzLocal { p, q, a, xi } => write!(
                f,
                "herz-local:p={},q={},a={},xi={}",
                fmt_f64(*p),
                fmt_f64(*q),
                fmt_f64(*a),
                fmt_vec(xi)
            ),
            Self::HerzGlobal { p, q, a, stride } => write!(
                f,
                "herz-global:p={},q={},a={},stride={stride}",
                fmt_f64(*p),
                fmt_f64(*q),
                fmt_f64(*a)
            ),
            Self::MixedNorm { r } => write!(f, "mixed:r={}", fmt_vec(r)),
            Self::VariableLebesgue { exponent } => write!(f, "variable:{}", exponent.params()),
        }
    }
}

/// `‖f‖_{X(Ω)}`: the norm of `f · 1_Ω` on the full grid.
pub fn norm(f: &SampledField, space: &SpaceSpec, omega: &DomainMask) -> Result<f64> {
    space.validate()?;
    let g = omega.restrict(f)?;
    evaluate(&g, space)
}

/// `‖f̃‖_X` for `f` given on the Ω cells only (canonical cell order).
pub fn restriction_norm(values_on_omega: &[f64], space: &SpaceSpec, omega: &DomainMask) -> Result<f64> {
    let ext = zero_extend(values_on_omega, omega)?;
    norm(&ext, space, &DomainMask::full(omega.grid()))
}

fn evaluate(g: &SampledField, space: &SpaceSpec) -> Result<f64> {
    let value = match space {
        SpaceSpec::Lebesgue { p } => lebesgue_norm(g, *p),
        SpaceSpec::WeightedLebesgue { r, weight } => {
            let w = weight.sample(g.grid())?;
            weighted_lebesgue_norm(g, *r, &w)?
        }
        SpaceSpec::Lorentz { r, tau } => lorentz_norm(g, *r, *tau)?,
        SpaceSpec::Orlicz { phi } => luxemburg_norm(g, phi)?,
        SpaceSpec::OrliczSlice { phi, r, t } => orlicz_slice_norm(g, phi, *r, *t)?,
        SpaceSpec::Morrey { r, alpha } => morrey_norm(g, *r, *alpha, &morrey_radii(g.grid()))?,
        SpaceSpec::BesovBourgainMorrey { q, p, r, tau, levels } => {
            let (lo, hi) = levels.unwrap_or_else(|| default_levels(g.grid()));
            bbm_morrey_norm_levels(g, *q, *p, *r, *tau, lo, hi)?
        }
        SpaceSpec::HerzLocal { p, q, a, xi } => herz_local_norm(g, *p, *q, &HerzWeight { a: *a }, xi)?,
        SpaceSpec::HerzGlobal { p, q, a, stride } => herz_global_norm(g, *p, *q, &HerzWeight { a: *a }, *stride)?.0,
        SpaceSpec::MixedNorm { r } => mixed_norm(g, r)?,
        SpaceSpec::VariableLebesgue { exponent } => variable_lebesgue_norm(g, exponent)?,
    };
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("norm in {space}")));
    }
    Ok(value)
}

/// Solves `modular(μ) = 1` for a modular nonincreasing in `μ` by doubling
/// then geometric bisection to relative width `1e-14`.
pub(crate) fn modular_root<F: Fn(f64) -> f64>(modular: F) -> Result<f64> {
    let eval = |mu: f64| -> Result<f64> {
        let v = modular(mu);
        if v.is_nan() {
            Err(Error::Bracket(format!("modular is NaN at {mu}")))
        } else {
            Ok(v)
        }
    };
    let (mut lo, mut hi) = (1.0, 1.0);
    if eval(1.0)? > 1.0 {
        let mut steps = 0;
        while eval(hi)? > 1.0 {
            lo = hi;
            hi *= 2.0;
            steps += 1;
            if steps > 2000 {
                return Err(Error::Bracket("upper bracket not found".into()));
            }
        }
    } else {
        let mut steps = 0;
        while eval(lo)? <= 1.0 {
            hi = lo;
            lo *= 0.5;
            steps += 1;
            if steps > 2000 {
                return Err(Error::Bracket("lower bracket not found".into()));
            }
        }
    }
    for _ in 0..200 {
        if hi / lo - 1.0 <= 1e-14 {
            break;
        }
        let mid = (lo * hi).sqrt();
        if eval(mid)? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
