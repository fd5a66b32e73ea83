use serde::{Deserialize, Serialize};

use super::{hl_maximal, Weight};
use crate::domain::DomainMask;
use crate::error::{invalid, Error, Result};
use crate::grid::SampledField;
use crate::reduce::pairwise_sum;
use crate::spaces::{norm, SpaceSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdfResult {
    pub weight: Weight,
    pub depth: usize,
    pub opnorm_bound: f64,
    /// `2 ‖M^{K+1} g‖_∞ / A^K`
    pub running_norm: f64,
    /// `ε_K = 2^{-(K+1)} · running_norm`
    pub tail_bound: f64,
    /// `max_x [M(R_K g) - 2A R_K g - ε_K](x)`; nonpositive when the cell-wise bound holds.
    pub max_excess: f64,
    pub bound_holds: bool,
    /// `norm(R_K g, X') / norm(g, X')`; at most 2 when `A` dominates the operator norm.
    pub norm_ratio: f64,
}

/// `R_K g = Σ_{k=0}^{K} M^k g / (2A)^k` with `M^0 g = |g|`.
pub fn rubio_de_francia(
    g: &SampledField,
    space: &SpaceSpec,
    omega: &DomainMask,
    opnorm_bound: f64,
    depth: usize,
    radii: &[f64],
) -> Result<RdfResult> {
    if !(opnorm_bound > 0.0 && opnorm_bound.is_finite()) {
        return Err(invalid(format!("operator-norm bound must be positive, got {opnorm_bound}")));
    }
    if depth == 0 {
        return Err(invalid("iteration depth must be at least 1"));
    }
    let base = g.abs();
    if base.max_abs() == 0.0 {
        return Err(invalid("Rubio de Francia iteration needs g not identically 0"));
    }
    let two_a = 2.0 * opnorm_bound;
    let mut acc: Vec<f64> = base.values().to_vec();
    let mut iterate = base.clone();
    let mut scale = 1.0;
    for _ in 1..=depth {
        iterate = hl_maximal(&iterate, radii)?;
        scale /= two_a;
        for (a, v) in acc.iter_mut().zip(iterate.values()) {
            *a += scale * v;
        }
    }
    if acc.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Rubio de Francia sum".into()));
    }
    let tail = hl_maximal(&iterate, radii)?;
    let tail_sup = tail.max_abs();
    let running_norm = 2.0 * tail_sup / opnorm_bound.powi(depth as i32);
    let tail_bound = 0.5f64.powi(depth as i32 + 1) * running_norm;

    let r = SampledField::new(g.grid().clone(), acc)?;
    let mr = hl_maximal(&r, radii)?;
    let max_excess = mr
        .values()
        .iter()
        .zip(r.values())
        .map(|(m, v)| m - two_a * v - tail_bound)
        .fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-12 * mr.max_abs();
    let norm_ratio = norm(&r, space, omega)? / norm(&base, space, omega)?;
    Ok(RdfResult {
        weight: Weight::from_field(&r)?,
        depth,
        opnorm_bound,
        running_norm,
        tail_bound,
        max_excess,
        bound_holds: max_excess <= slack,
        norm_ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityBound {
    /// `(∫_Ω |f|^p g)^{1/p}`
    pub plain: f64,
    /// `(∫_Ω |f|^p R_K g)^{1/p}`
    pub iterated: f64,
    /// `‖f‖_{X(Ω)}`
    pub norm: f64,
}

/// The two weighted integrals of `|f|^p` against a witness `g` (raw and after
/// the Rubio de Francia iteration) together with `‖f‖_X`. The witness must
/// have unit norm in the associate of the `p`-convexification of `X`; this is
/// verified whenever that associate is a Lebesgue space.
pub fn weighted_norm_duality_bound(
    f: &SampledField,
    space: &SpaceSpec,
    p: f64,
    omega: &DomainMask,
    witness: &SampledField,
    opnorm_bound: f64,
    depth: usize,
    radii: &[f64],
) -> Result<DualityBound> {
    f.grid().ensure_same(witness.grid(), "duality witness")?;
    let f = omega.restrict(f)?;
    let x_norm = norm(&f, space, omega)?;
    if f.max_abs() == 0.0 {
        return Ok(DualityBound { plain: 0.0, iterated: 0.0, norm: 0.0 });
    }
    let g = omega.restrict(&witness.abs())?;
    let convex = space.convexify(p)?;
    if let SpaceSpec::Lebesgue { p: q } = convex {
        let dual = SpaceSpec::Lebesgue { p: super::conjugate(q) };
        let gn = if dual_is_sup(&dual) { g.max_abs() } else { norm(&g, &dual, omega)? };
        if (gn - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("duality witness has associate norm {gn}, expected 1")));
        }
    }
    let vol = f.grid().cell_volume();
    let integral = |w: &[f64]| -> f64 {
        let terms: Vec<f64> = f.values().iter().zip(w).map(|(v, w)| v.abs().powf(p) * w).collect();
        (pairwise_sum(&terms) * vol).powf(1.0 / p)
    };
    let plain = integral(g.values());
    let rdf = rubio_de_francia(&g, &SpaceSpec::Lebesgue { p: 1.0 }, omega, opnorm_bound, depth, radii)?;
    let iterated = integral(rdf.weight.samples());
    Ok(DualityBound { plain, iterated, norm: x_norm })
}

fn dual_is_sup(space: &SpaceSpec) -> bool {
    matches!(space, SpaceSpec::Lebesgue { p } if p.is_infinite())
}
