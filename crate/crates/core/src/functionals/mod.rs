//! Gagliardo seminorms, the Bourgain–Brezis–Mironescu quantity, the level-set
//! functional with its λ-sweep, the pair measure `ν_γ` and weak-Hölder checks.

mod bsvy;
mod gagliardo;
mod lattice;
mod weak;

pub use bsvy::{
    bsvy_functional, bsvy_inner, bsvy_inner_sweep, bsvy_sup, bsvy_sup_multi, default_lambda_grid,
    weak_product_quasinorm, FunctionalReport,
};
pub use gagliardo::{
    bbm_limit_extrapolate, bbm_scaled_value, bbm_sweep, gagliardo_inner, gagliardo_seminorm, Extrapolation,
    DEFAULT_S_GRID,
};
pub use weak::{weak_holder_check, weighted_mu_measure, PairField, WeakHolderResult};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::domain::DomainMask;
use crate::error::{invalid, Result};
use crate::grid::SampledField;
use crate::spaces::{norm, SpaceSpec};

/// `γ`, `p` and the λ grid of the level-set functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsvyParams {
    pub gamma: f64,
    pub p: f64,
    pub lambdas: Vec<f64>,
}

impl BsvyParams {
    pub fn new(gamma: f64, p: f64, lambdas: Vec<f64>) -> Result<Self> {
        let params = Self { gamma, p, lambdas };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma != 0.0 && self.gamma.is_finite()) {
            return Err(invalid(format!("gamma must be finite and nonzero, got {}", self.gamma)));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(invalid(format!("p must lie in [1, inf), got {}", self.p)));
        }
        if self.lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(invalid("lambda values must be positive and finite"));
        }
        if self.lambdas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("lambda grid must be strictly increasing"));
        }
        Ok(())
    }

    /// `1 + γ/p`
    pub fn level_exponent(&self) -> f64 {
        1.0 + self.gamma / self.p
    }

    /// `p = 1` with `γ ∈ [-1, 0)`: equivalence holds only under the extra
    /// maximal-operator hypothesis.
    pub fn theorem_conditional(&self) -> bool {
        self.p == 1.0 && (-1.0..0.0).contains(&self.gamma)
    }
}

/// `s` and `p` of the Gagliardo seminorm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GagliardoParams {
    pub s: f64,
    pub p: f64,
}

impl GagliardoParams {
    pub fn new(s: f64, p: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(invalid(format!("s must lie in (0, 1), got {s}")));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(invalid(format!("p must lie in [1, inf), got {p}")));
        }
        Ok(Self { s, p })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagonalPolicy {
    /// The own cell contributes nothing.
    Exclude,
    /// The own cell is replaced by a ball of equal volume with `∇f` frozen.
    EquivalentBall,
}

/// Quadrature of the singular kernel near `x = y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelPolicy {
    pub diagonal: DiagonalPolicy,
    /// Subpoints per axis for cell pairs whose level-set membership changes
    /// across the cell; `1` disables subsampling.
    pub subsample: usize,
    /// Largest per-axis cell offset that is subsampled; `0` means every pair.
    pub near: usize,
}

impl KernelPolicy {
    /// Plain off-diagonal midpoint sums.
    pub fn exclude() -> Self {
        Self { diagonal: DiagonalPolicy::Exclude, subsample: 1, near: 0 }
    }

    pub fn equivalent_ball() -> Self {
        Self { diagonal: DiagonalPolicy::EquivalentBall, subsample: 1, near: 0 }
    }

    /// Equivalent ball for `γ > 0`, exclusion for `γ < 0`; subsampling factor 4
    /// within 8 cells of the diagonal.
    pub fn default_for(gamma: f64) -> Self {
        let diagonal = if gamma > 0.0 { DiagonalPolicy::EquivalentBall } else { DiagonalPolicy::Exclude };
        Self { diagonal, subsample: 4, near: 8 }
    }

    pub fn with_subsample(self, subsample: usize) -> Self {
        Self { subsample, ..self }
    }

    pub fn with_near(self, near: usize) -> Self {
        Self { near, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.subsample == 0 {
            return Err(invalid("subsample factor must be at least 1"));
        }
        Ok(())
    }

    /// `exclude` or `equivalent-ball`, optionally followed by `:subsample=S,near=M`.
    pub fn parse(text: &str) -> Result<Self> {
        let (head, rest) = text.split_once(':').unwrap_or((text, ""));
        let diagonal = match head.trim() {
            "exclude" => DiagonalPolicy::Exclude,
            "ball" | "equivalent-ball" => DiagonalPolicy::EquivalentBall,
            other => return Err(invalid(format!("unknown kernel policy `{other}`"))),
        };
        let mut policy = Self { diagonal, subsample: 1, near: 0 };
        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| invalid(format!("expected key=value, got `{item}`")))?;
            let v: usize = v.trim().parse().map_err(|e| invalid(format!("{k}: {e}")))?;
            match k.trim() {
                "subsample" => policy.subsample = v,
                "near" => policy.near = v,
                other => return Err(invalid(format!("unknown kernel policy key `{other}`"))),
            }
        }
        policy.validate()?;
        Ok(policy)
    }
}

impl std::fmt::Display for KernelPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let d = match self.diagonal {
            DiagonalPolicy::Exclude => "exclude",
            DiagonalPolicy::EquivalentBall => "equivalent-ball",
        };
        write!(f, "{d}:subsample={},near={}", self.subsample, self.near)
    }
}

/// `K(p, n) = 2π^{(n-1)/2} Γ((p+1)/2) / (p Γ((p+n)/2))`.
pub fn bbm_constant(p: f64, n: usize) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) || n == 0 {
        return Err(invalid(format!("bbm constant needs p in [1, inf) and n >= 1, got p={p}, n={n}")));
    }
    let n = n as f64;
    Ok(2.0 * std::f64::consts::PI.powf((n - 1.0) / 2.0) * gamma((p + 1.0) / 2.0) / (p * gamma((p + n) / 2.0)))
}

/// `‖ |∇f| ‖_{X(Ω)}` with the analytic gradient when available.
pub fn sobolev_norm(f: &SampledField, space: &SpaceSpec, omega: &DomainMask) -> Result<f64> {
    norm(&f.gradient_magnitude()?, space, omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, TestFunctionSpec};
    use crate::quad::integrate;

    #[test]
    fn bbm_constants() {
        assert!((bbm_constant(1.0, 1).unwrap() - 2.0).abs() < 1e-14);
        assert!((bbm_constant(2.0, 1).unwrap() - 1.0).abs() < 1e-14);
        assert!((bbm_constant(2.0, 2).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
        assert!(bbm_constant(0.5, 1).is_err());
    }

    #[test]
    fn bbm_constant_is_sphere_moment() {
        // p K(p, n) = ∫_{S^{n-1}} |θ_1|^p; for n = 2 this is ∫_0^{2π} |cos t|^p dt.
        for p in [1.0, 1.5, 2.0, 3.0] {
            let moment = 4.0 * integrate(|t: f64| t.cos().powf(p), 0.0, std::f64::consts::FRAC_PI_2, 64);
            assert!((p * bbm_constant(p, 2).unwrap() - moment).abs() < 1e-8, "p={p}");
        }
    }

    #[test]
    fn params_validation() {
        assert!(BsvyParams::new(0.0, 2.0, vec![1.0]).is_err());
        assert!(BsvyParams::new(1.0, 0.5, vec![1.0]).is_err());
        assert!(BsvyParams::new(1.0, 2.0, vec![2.0, 1.0]).is_err());
        assert!(BsvyParams::new(-0.5, 1.0, vec![1.0]).unwrap().theorem_conditional());
        assert!(!BsvyParams::new(-2.0, 1.0, vec![1.0]).unwrap().theorem_conditional());
        assert!(GagliardoParams::new(1.0, 2.0).is_err());
        assert_eq!(KernelPolicy::parse("equivalent-ball:subsample=4,near=8").unwrap(), KernelPolicy::default_for(1.0));
        assert_eq!(KernelPolicy::parse("exclude").unwrap(), KernelPolicy::exclude());
        let p = KernelPolicy::default_for(-1.0);
        assert_eq!(KernelPolicy::parse(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn sobolev_norm_examples() {
        let g = Grid::uniform(1, 0.0, 1.0, 64).unwrap();
        let om = DomainMask::full(&g);
        let x = TestFunctionSpec::Coordinate { axis: 0 }.sample(&g).unwrap();
        assert!((sobolev_norm(&x, &SpaceSpec::Lebesgue { p: 1.0 }, &om).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(sobolev_norm(&SampledField::constant(&g, 3.0).unwrap(), &SpaceSpec::Lebesgue { p: 1.0 }, &om).unwrap(), 0.0);
    }

    #[test]
    fn sobolev_norm_gaussian_against_quadrature() {
        let g = Grid::uniform(1, -6.0, 6.0, 4096).unwrap();
        let f = TestFunctionSpec::gaussian(1.0).sample(&g).unwrap();
        let v = sobolev_norm(&f, &SpaceSpec::Lebesgue { p: 2.0 }, &DomainMask::full(&g)).unwrap();
        let oracle = (2.0 * integrate(|x: f64| 4.0 * x * x * (-2.0 * x * x).exp(), 0.0, 6.0, 200)).sqrt();
        assert!((v - oracle).abs() < 1e-6, "{v} vs {oracle}");
    }
}
