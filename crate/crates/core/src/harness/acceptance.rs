//! The acceptance suite run by `verify`: one outcome per criterion.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::experiments::{anchored_cubes, run_epsilon_check, run_experiment};
use crate::domain::{DomainMask, DomainSpec};
use crate::error::{invalid, Result};
use crate::functionals::{
    bbm_constant, bbm_limit_extrapolate, bbm_sweep, bsvy_inner, bsvy_inner_sweep, bsvy_sup, default_lambda_grid,
    gagliardo_seminorm, BsvyParams, GagliardoParams, KernelPolicy, DEFAULT_S_GRID,
};
use crate::grid::{Grid, SampledField, TestFunctionSpec};
use crate::quad::{sphere_area, unit_ball_volume};
use crate::spaces::{
    bbm_morrey_norm_levels, cover_ball, dyadic_cover_bound, herz_local_norm, lebesgue_norm, lorentz_norm, norm,
    HerzWeight, SpaceSpec,
};
use crate::weights::{muckenhoupt_constant, CubeFamily, WeightSpec};

pub const CRITERIA: [(usize, &str); 13] = [
    (1, "BBM constant n=1 p=1"),
    (2, "BBM constant n=1 p=2"),
    (3, "BBM constant n=2 p=2"),
    (4, "level-set functional closed form"),
    (5, "Lorentz indicator norm"),
    (6, "Muckenhoupt constants"),
    (7, "Rubio de Francia iteration"),
    (8, "collapse identities"),
    (9, "naive-loop oracles"),
    (10, "weak-Holder suite"),
    (11, "dyadic cover"),
    (12, "equivalence brackets"),
    (13, "(eps, inf) falsifier"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.seconds
        )
    }
}

/// Runs every criterion in order; evaluation errors count as failures.
pub fn run_acceptance(seed: u64) -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|(id, _)| run_criterion(*id, seed)).collect()
}

pub fn run_criterion(id: usize, seed: u64) -> CriterionOutcome {
    let title = CRITERIA.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or("unknown").to_string();
    let start = Instant::now();
    let result = match id {
        1 => bbm_1d(1.0),
        2 => bbm_1d(2.0),
        3 => bbm_2d(),
        4 => desk_profile(),
        5 => lorentz_indicator(),
        6 => muckenhoupt(),
        7 => from_table(ExperimentConfig { seed, ..ExperimentConfig::defaults(ExperimentKind::Maximal) }),
        8 => collapse(seed),
        9 => oracles(),
        10 => from_table(ExperimentConfig { seed, ..ExperimentConfig::defaults(ExperimentKind::WeakHolder) }),
        11 => dyadic_cover(seed),
        12 => from_table(ExperimentConfig { seed, ..ExperimentConfig::defaults(ExperimentKind::EquivalenceSuite) }),
        13 => epsilon(seed),
        _ => Err(invalid(format!("no criterion {id}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = match result {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    let limit = match id {
        1 | 2 => Some(60.0),
        3 => Some(600.0),
        _ => None,
    };
    if let Some(limit) = limit {
        if seconds > limit {
            passed = false;
            detail.push_str(&format!("; runtime {seconds:.1} s exceeds {limit} s"));
        }
    }
    CriterionOutcome { id, title, passed, detail, seconds }
}

fn from_table(cfg: ExperimentConfig) -> Result<(bool, String)> {
    let t = run_experiment(&cfg)?;
    let failed: Vec<String> = t.checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect();
    let mut detail = format!("{}/{} checks pass", t.checks.len() - failed.len(), t.checks.len());
    if let Some(b) = t.brackets.iter().map(|b| b.width).reduce(f64::max) {
        let r = t.brackets.iter().filter_map(|b| b.refinement).fold(0.0, f64::max);
        detail.push_str(&format!("; widest bracket {b:.3}, largest refinement change {r:.4}"));
    }
    if let Some(first) = failed.first() {
        detail.push_str(&format!("; first failure {first}"));
    }
    Ok((failed.is_empty() && !t.checks.is_empty(), detail))
}

/// `lim (1-s) |f|^p_{W^{s,p}}` against `K(p,n) ‖∇f‖_p^p` for `exp(-|x|^2)`.
fn bbm_check(grid: &Grid, p: f64, gradient_power: f64, tol: f64) -> Result<(bool, String)> {
    let f = TestFunctionSpec::gaussian(1.0).sample(grid)?;
    let om = DomainMask::full(grid);
    let x = SpaceSpec::Lebesgue { p };
    let sweep = bbm_sweep(&f, p, &DEFAULT_S_GRID, &x, &om, KernelPolicy::equivalent_ball())?;
    let ex = bbm_limit_extrapolate(&sweep)?;
    let reference = bbm_constant(p, grid.dim())? * gradient_power;
    let ratio = ex.limit.powf(p) / reference;
    Ok(((ratio - 1.0).abs() <= tol, format!("limit^p / (K ‖∇f‖^p) = {ratio:.5} (tolerance {tol})")))
}

fn bbm_1d(p: f64) -> Result<(bool, String)> {
    let grid = Grid::uniform(1, -8.0, 8.0, 4096)?;
    // ‖f'‖_1 = 2 (total variation), ‖f'‖_2^2 = sqrt(π/2).
    let gradient_power = if p == 1.0 { 2.0 } else { (PI / 2.0).sqrt() };
    bbm_check(&grid, p, gradient_power, 0.03)
}

fn bbm_2d() -> Result<(bool, String)> {
    let grid = Grid::uniform(2, -5.0, 5.0, 128)?;
    // ‖∇f‖_2^2 = π.
    bbm_check(&grid, 2.0, PI, 0.05)
}

fn desk_profile() -> Result<(bool, String)> {
    let grid = Grid::uniform(1, 0.0, 1.0, 2048)?;
    let f = TestFunctionSpec::Coordinate { axis: 0 }.sample(&grid)?;
    let om = DomainMask::full(&grid);
    let policy = KernelPolicy::equivalent_ball().with_subsample(32);
    let x = SpaceSpec::Lebesgue { p: 1.0 };
    let lambdas: Vec<f64> = (0..=24).map(|k| 2.0 * 500f64.powf(k as f64 / 24.0)).collect();
    let params = BsvyParams::new(1.0, 1.0, lambdas.clone())?;
    let fields = bsvy_inner_sweep(&f, &lambdas, &params, &om, policy)?;
    let mut worst: f64 = 0.0;
    for (l, field) in lambdas.iter().zip(&fields) {
        let v = l * norm(field, &x, &om)?;
        worst = worst.max((v / (2.0 - 1.0 / l) - 1.0).abs());
    }
    let sup = bsvy_sup(&f, &BsvyParams::new(1.0, 1.0, default_lambda_grid(1.0))?, &x, &om, policy)?;
    Ok((
        worst <= 0.01 && sup.value >= 1.99,
        format!("largest relative profile error {worst:.2e} on [2, 1000]; sup {:.5} at λ={:.1}", sup.value, sup.argmax),
    ))
}

fn lorentz_indicator() -> Result<(bool, String)> {
    let grid = Grid::uniform(1, 0.0, 1.0, 64)?;
    let f = SampledField::from_fn(&grid, |x| if x[0] < 0.5 { 1.0 } else { 0.0 })?;
    let v = lorentz_norm(&f, 2.0, 3.0)?;
    let expected = (2.0f64 / 3.0).powf(1.0 / 3.0) * 0.5f64.sqrt();
    let err = (v / expected - 1.0).abs();
    Ok((err <= 0.01, format!("{v:.6} vs {expected:.6}, relative error {err:.2e}")))
}

fn muckenhoupt() -> Result<(bool, String)> {
    let grid = Grid::uniform(1, -1.0, 1.0, 256)?;
    let unit = WeightSpec::Unit.sample(&grid)?;
    let family = CubeFamily::standard(&grid, &[])?;
    let mut worst_unit: f64 = 0.0;
    for p in [1.0, 2.0, 3.0] {
        worst_unit = worst_unit.max((muckenhoupt_constant(&unit, p, &family)?.value - 1.0).abs());
    }
    let w = WeightSpec::power(-0.5).sample(&grid)?;
    let anchored = muckenhoupt_constant(&w, 1.0, &anchored_cubes(&grid, &[0.0])?)?.value;
    let ok = worst_unit <= 1e-12 && (anchored / 2.0 - 1.0).abs() <= 0.02;
    Ok((ok, format!("unit weight off by {worst_unit:.1e}; [|x|^-1/2]_A1 on anchored cubes {anchored:.6}")))
}

fn step_field(grid: &Grid, rng: &mut ChaCha8Rng) -> Result<SampledField> {
    let blocks: Vec<f64> = (0..64).map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random_range(-2.0..2.0) }).collect();
    SampledField::from_fn(grid, |x| {
        let key = x.iter().fold(0usize, |acc, v| acc * 7 + ((v + 4.0) * 2.0).floor() as usize);
        blocks[key % blocks.len()]
    })
}

fn collapse(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = [
        ("orlicz:p=2.5", 1usize, 2.5),
        ("mixed:r=3", 1, 3.0),
        ("mixed:r=3;3", 2, 3.0),
        ("morrey:r=2,alpha=2", 1, 2.0),
        ("morrey:r=1.5,alpha=1.5", 2, 1.5),
        ("herz-local:p=2,q=2,a=0,xi=0.3", 1, 2.0),
        ("herz-local:p=3,q=3,a=0,xi=0", 2, 3.0),
        ("lorentz:r=2,tau=2", 1, 2.0),
        ("lorentz:r=1.7,tau=1.7", 2, 1.7),
    ];
    let mut worst: f64 = 0.0;
    let mut worst_name = "";
    for (spec, dim, p) in pairs {
        let grid = Grid::uniform(dim, -2.0, 2.0, if dim == 1 { 64 } else { 16 })?;
        for _ in 0..4 {
            let f = step_field(&grid, &mut rng)?;
            let v = norm(&f, &SpaceSpec::parse(spec)?, &DomainMask::full(&grid))?;
            let l = lebesgue_norm(&f, p);
            let err = if l == 0.0 { v.abs() } else { (v / l - 1.0).abs() };
            if err > worst {
                worst = err;
                worst_name = spec;
            }
        }
    }
    Ok((worst <= 1e-10, format!("largest relative deviation {worst:.2e} ({worst_name})")))
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn naive_gagliardo(f: &SampledField, s: f64, p: f64) -> f64 {
    let g = f.grid();
    let n = g.dim() as f64;
    let mut total = 0.0;
    for i in 0..g.len() {
        for j in 0..g.len() {
            if i != j {
                let r = distance(&g.center(i), &g.center(j));
                total += (f.values()[i] - f.values()[j]).abs().powf(p) / r.powf(s * p + n);
            }
        }
    }
    (total * g.cell_volume() * g.cell_volume()).powf(1.0 / p)
}

/// Off-diagonal level-set sums plus, when `own_cell`, the equivalent-ball term for `γ > 0`.
fn naive_level_set(f: &SampledField, lambda: f64, gamma: f64, p: f64, own_cell: bool) -> Result<Vec<f64>> {
    let g = f.grid();
    let n = g.dim();
    let grad = f.gradient_magnitude()?;
    let rho = (g.cell_volume() / unit_ball_volume(n)).powf(1.0 / n as f64);
    Ok((0..g.len())
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..g.len() {
                if i != j {
                    let r = distance(&g.center(i), &g.center(j));
                    if (f.values()[i] - f.values()[j]).abs() > lambda * r.powf(1.0 + gamma / p) {
                        acc += r.powf(gamma - n as f64) * g.cell_volume();
                    }
                }
            }
            if own_cell && gamma > 0.0 && grad.values()[i] > lambda * rho.powf(gamma / p) {
                acc += sphere_area(n) * rho.powf(gamma) / gamma;
            }
            acc
        })
        .collect())
}

fn naive_bbm_morrey_1d(f: &SampledField, q: f64, p: f64, r: f64, nu: std::ops::RangeInclusive<i32>) -> f64 {
    let g = f.grid();
    let h = g.cell_size()[0];
    let mut best: f64 = 0.0;
    for nu in nu {
        let side = 2f64.powi(nu);
        let mut level = 0.0;
        let (m0, m1) = ((g.lo()[0] / side).floor() as i64 - 1, (g.hi()[0] / side).ceil() as i64 + 1);
        for m in m0..=m1 {
            let (a, b) = (m as f64 * side, (m + 1) as f64 * side);
            let mut mass = 0.0;
            for k in 0..g.len() {
                let c = g.center(k)[0];
                let overlap = ((c + h / 2.0).min(b) - (c - h / 2.0).max(a)).max(0.0);
                mass += f.values()[k].abs().powf(q) * overlap;
            }
            level += (side.powf(1.0 / p - 1.0 / q) * mass.powf(1.0 / q)).powf(r);
        }
        best = best.max(level.powf(1.0 / r));
    }
    best
}

fn naive_herz_1d(f: &SampledField, p: f64, q: f64, a: f64, xi: f64) -> f64 {
    let g = f.grid();
    let h = g.cell_size()[0];
    let mut total = 0.0;
    for k in -60..60 {
        let (inner, outer) = (2f64.powi(k - 1), 2f64.powi(k));
        let mut acc = 0.0;
        for i in 0..g.len() {
            let d = (g.center(i)[0] - xi).abs();
            let d = if d == 0.0 { h / 2.0 } else { d };
            if inner <= d && d < outer {
                acc += f.values()[i].abs().powf(p) * h;
            }
        }
        total += (outer.powf(a) * acc.powf(1.0 / p)).powf(q);
    }
    total.powf(1.0 / q)
}

fn oracles() -> Result<(bool, String)> {
    let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
    let mut errors = Vec::new();

    let g = Grid::uniform(1, -2.0, 3.0, 64)?;
    let ind = SampledField::from_fn(&g, |x| if (0.0..=1.0).contains(&x[0]) { 1.0 } else { 0.0 })?;
    let v = gagliardo_seminorm(&ind, GagliardoParams::new(0.25, 1.0)?, &DomainMask::full(&g), KernelPolicy::exclude())?;
    let mut gag = rel(v, naive_gagliardo(&ind, 0.25, 1.0));
    let g2 = Grid::uniform(2, -1.0, 1.0, 8)?;
    let f2 = TestFunctionSpec::gaussian(0.5).sample(&g2)?;
    let v = gagliardo_seminorm(&f2, GagliardoParams::new(0.6, 1.7)?, &DomainMask::full(&g2), KernelPolicy::exclude())?;
    gag = gag.max(rel(v, naive_gagliardo(&f2, 0.6, 1.7)));
    errors.push(("gagliardo_seminorm", gag));

    let g = Grid::uniform(1, -3.0, 3.0, 64)?;
    let f = TestFunctionSpec::gaussian(1.0).sample(&g)?;
    let om = DomainMask::full(&g);
    let mut lev: f64 = 0.0;
    for (gamma, p, lambda) in [(2.0, 2.0, 1.0), (-1.0, 1.5, 0.3), (1.0, 1.0, 0.05)] {
        let params = BsvyParams::new(gamma, p, vec![lambda])?;
        for (policy, own) in [(KernelPolicy::exclude(), false), (KernelPolicy::equivalent_ball(), true)] {
            let v = bsvy_inner(&f, lambda, &params, &om, policy)?;
            for (a, b) in v.values().iter().zip(naive_level_set(&f, lambda, gamma, p, own)?) {
                lev = lev.max(rel(*a, b));
            }
        }
    }
    errors.push(("bsvy_inner", lev));

    let g = Grid::uniform(1, -2.0, 2.0, 64)?;
    let ind = SampledField::from_fn(&g, |x| if x[0] > 0.0 && x[0] <= 1.0 { 1.0 } else { 0.0 })?;
    let v = bbm_morrey_norm_levels(&ind, 2.0, 3.0, 4.0, f64::INFINITY, -3, 3)?;
    errors.push(("bbm_morrey_norm", rel(v, naive_bbm_morrey_1d(&ind, 2.0, 3.0, 4.0, -3..=3))));

    let ball = SampledField::from_fn(&g, |x| if x[0].abs() < 1.0 { 1.0 } else { 0.0 })?;
    let v = herz_local_norm(&ball, 2.0, 2.0, &HerzWeight { a: 1.0 }, &[0.0])?;
    errors.push(("herz_local_norm", rel(v, naive_herz_1d(&ball, 2.0, 2.0, 1.0, 0.0))));

    let worst = errors.iter().map(|e| e.1).fold(0.0, f64::max);
    let detail = errors.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect::<Vec<_>>().join(", ");
    Ok((worst <= 1e-12, detail))
}

fn dyadic_cover(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    let dim = 2;
    for _ in 0..200 {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect();
        let r = 10f64.powf(rng.random_range(-3.0..1.0));
        let c = cover_ball(&x, r)?;
        let contains = (0..dim).all(|a| c.cube.lo[a] <= x[a] - r && x[a] + r <= c.cube.hi[a]);
        let side = c.cube.hi[0] - c.cube.lo[0];
        let ratio = side.powi(dim as i32) / (PI * r * r);
        worst = worst.max(ratio);
        if !contains || ratio > dyadic_cover_bound(dim) {
            failures += 1;
        }
    }
    Ok((failures == 0, format!("{failures} failures over 200 balls, largest |Q|/|B| {worst:.3} (bound {:.1})", dyadic_cover_bound(dim))))
}

fn epsilon(seed: u64) -> Result<(bool, String)> {
    let base = ExperimentConfig { seed, ..ExperimentConfig::defaults(ExperimentKind::EpsilonCheck) };
    let slit = ExperimentConfig {
        domains: vec![DomainSpec::parse("slit-box")?],
        epsilon: vec![0.1, 0.5, 1.0],
        ..base.clone()
    };
    let convex = ExperimentConfig {
        domains: vec![DomainSpec::parse("ball")?, DomainSpec::parse("half-space")?],
        epsilon: vec![0.5],
        samples: 10_000,
        ..base
    };
    let mut verdicts = Vec::new();
    let mut ok = true;
    for cfg in [slit, convex] {
        let t = run_epsilon_check(&cfg)?;
        ok &= t.passed() && !t.checks.is_empty();
        for c in &t.certificates {
            verdicts.push(format!("{} eps={}: {}", c.domain, c.epsilon, if c.refuted() { "refuted" } else { "not-refuted" }));
        }
    }
    Ok((ok, verdicts.join(", ")))
}
