use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{norm, SpaceSpec};
use crate::domain::DomainMask;
use crate::error::{invalid, Result};
use crate::grid::SampledField;
use crate::reduce::pairwise_sum;
use crate::weights::{conjugate, dual_weight};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociateEstimate {
    /// `max_g ∫_Ω |f g|` over unit-norm witnesses; a lower bound on `‖f‖_{X'(Ω)}`.
    pub lower_bound: f64,
    /// Index of the best witness; `0` is the canonical one.
    pub best_witness: usize,
    pub witnesses: usize,
    /// Closed form for Lebesgue and weighted Lebesgue spaces.
    pub exact: Option<f64>,
}

/// Pointwise exponent used to shape the canonical witness `|f|^{p'-1}`.
fn leading_exponent(space: &SpaceSpec, f: &SampledField) -> Result<Vec<f64>> {
    let c = |p: f64| Ok(vec![p; f.values().len()]);
    match space {
        SpaceSpec::Lebesgue { p } => c(*p),
        SpaceSpec::WeightedLebesgue { r, .. } | SpaceSpec::Lorentz { r, .. } | SpaceSpec::Morrey { r, .. } => c(*r),
        SpaceSpec::Orlicz { phi } | SpaceSpec::OrliczSlice { phi, .. } => c(phi.types().0),
        SpaceSpec::BesovBourgainMorrey { q, .. } => c(*q),
        SpaceSpec::HerzLocal { p, .. } | SpaceSpec::HerzGlobal { p, .. } => c(*p),
        SpaceSpec::MixedNorm { r } => c(r.iter().sum::<f64>() / r.len() as f64),
        SpaceSpec::VariableLebesgue { exponent } => exponent.sample(f.grid()),
    }
}

fn pairing(f: &[f64], g: &[f64], omega: &DomainMask) -> f64 {
    let terms: Vec<f64> = omega.indices().iter().map(|&i| (f[i] * g[i]).abs()).collect();
    pairwise_sum(&terms) * omega.grid().cell_volume()
}

/// Empirical associate norm over `witness_count` seeded witnesses: the canonical
/// `|f|^{p'-1}`, then random perturbations of it and random nonnegative fields,
/// each scaled to unit norm in `X(Ω)`.
pub fn associate_norm_empirical(
    f: &SampledField,
    space: &SpaceSpec,
    omega: &DomainMask,
    witness_count: usize,
    seed: u64,
) -> Result<AssociateEstimate> {
    if witness_count == 0 {
        return Err(invalid("witness count must be at least 1"));
    }
    space.validate()?;
    f.grid().ensure_same(omega.grid(), "associate norm domain")?;
    let g = omega.restrict(f)?;
    let exact = exact_dual(&g, space)?;
    let m = g.max_abs();
    if m == 0.0 {
        return Ok(AssociateEstimate { lower_bound: 0.0, best_witness: 0, witnesses: witness_count, exact });
    }
    let exps = leading_exponent(space, &g)?;
    let canonical: Vec<f64> = g
        .values()
        .iter()
        .zip(&exps)
        .map(|(v, p)| {
            let e = if *p > 1.0 { conjugate(*p) - 1.0 } else { 0.0 };
            if *v == 0.0 { 0.0 } else { (v.abs() / m).powf(e) }
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut best, mut best_index) = (0.0, 0);
    for k in 0..witness_count {
        let raw: Vec<f64> = if k == 0 {
            canonical.clone()
        } else if k % 2 == 1 {
            let e: f64 = rng.random_range(0.0..3.0);
            g.values()
                .iter()
                .map(|v| if *v == 0.0 { 0.0 } else { (v.abs() / m).powf(e) * rng.random_range(0.5..1.5) })
                .collect()
        } else {
            (0..g.values().len()).map(|_| rng.random::<f64>()).collect()
        };
        let field = SampledField::new(g.grid().clone(), raw)?;
        let scale = norm(&field, space, omega)?;
        if scale == 0.0 || !scale.is_finite() {
            continue;
        }
        let value = pairing(g.values(), field.values(), omega) / scale;
        if value > best {
            best = value;
            best_index = k;
        }
    }
    Ok(AssociateEstimate { lower_bound: best, best_witness: best_index, witnesses: witness_count, exact })
}

/// `(∫|f|^{r'} ω^{1-r'})^{1/r'}` for `L^r(ω)`, `‖f‖_{p'}` for `L^p`.
fn exact_dual(g: &SampledField, space: &SpaceSpec) -> Result<Option<f64>> {
    match space {
        SpaceSpec::Lebesgue { p } if *p > 1.0 => Ok(Some(super::lebesgue_norm(g, conjugate(*p)))),
        SpaceSpec::Lebesgue { .. } => Ok(Some(g.max_abs())),
        SpaceSpec::WeightedLebesgue { r, weight } => {
            let w = weight.sample(g.grid())?;
            let dual = dual_weight(&w, *r)?;
            Ok(Some(super::weighted_lebesgue_norm(g, conjugate(*r), &dual)?))
        }
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, TestFunctionSpec};
    use crate::spaces::lebesgue_norm;
    use crate::weights::WeightSpec;

    #[test]
    fn l2_self_dual() {
        let g = Grid::uniform(1, -3.0, 3.0, 64).unwrap();
        let f = TestFunctionSpec::gaussian(0.7).sample(&g).unwrap();
        let om = DomainMask::full(&g);
        let est = associate_norm_empirical(&f, &SpaceSpec::Lebesgue { p: 2.0 }, &om, 16, 1).unwrap();
        let l2 = lebesgue_norm(&f, 2.0);
        assert!(est.lower_bound <= l2 * (1.0 + 1e-12));
        assert!((est.lower_bound - l2).abs() < 1e-12 * l2);
        assert_eq!(est.best_witness, 0);
        assert!((est.exact.unwrap() - l2).abs() < 1e-12 * l2);
    }

    #[test]
    fn weighted_exact_matches_direct_sum() {
        let g = Grid::uniform(1, -2.0, 2.0, 40).unwrap();
        let f = TestFunctionSpec::gaussian(0.5).sample(&g).unwrap();
        let weight = WeightSpec::Power { a: 0.5, center: vec![-3.0] };
        let space = SpaceSpec::WeightedLebesgue { r: 2.0, weight };
        let est = associate_norm_empirical(&f, &space, &DomainMask::full(&g), 8, 2).unwrap();
        let direct: f64 =
            (0..g.len()).map(|i| f.values()[i].powi(2) / (g.center(i)[0] + 3.0).sqrt()).sum::<f64>() * g.cell_volume();
        let exact = est.exact.unwrap();
        assert!((exact - direct.sqrt()).abs() < 1e-12 * exact);
        assert!(est.lower_bound <= exact * (1.0 + 1e-10));
    }

    #[test]
    fn zero_and_bad_count() {
        let g = Grid::uniform(1, 0.0, 1.0, 8).unwrap();
        let om = DomainMask::full(&g);
        let z = SampledField::zeros(&g);
        let space = SpaceSpec::Lebesgue { p: 3.0 };
        assert_eq!(associate_norm_empirical(&z, &space, &om, 4, 0).unwrap().lower_bound, 0.0);
        assert!(associate_norm_empirical(&z, &space, &om, 0, 0).is_err());
    }
}
