//! Acceptance suite: one pass/fail line per criterion, with reference values
//! computed here independently of the library.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ballspace::functionals::{
    bbm_limit_extrapolate, bbm_sweep, bsvy_inner, bsvy_inner_sweep, bsvy_sup, default_lambda_grid,
    gagliardo_seminorm, BsvyParams, GagliardoParams, KernelPolicy, DEFAULT_S_GRID,
};
use ballspace::harness::{run_experiment, ExperimentConfig, ExperimentKind};
use ballspace::spaces::{cover_ball, lorentz_norm, norm, SpaceSpec};
use ballspace::weights::{muckenhoupt_constant, Cube, CubeFamily, WeightSpec};
use ballspace::{DomainMask, Grid, SampledField, TestFunctionSpec};

type Outcome = Result<(bool, String), ballspace::Error>;

/// Midpoint rule on `[a, b]` with `m` panels.
fn midpoint<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    (0..m).map(|k| f(a + (k as f64 + 0.5) * h)).sum::<f64>() * h
}

/// `(1/p) ∫_{S^{n-1}} |ω_1|^p dσ` for `n ∈ {1, 2}`.
fn angular_constant(p: f64, n: usize) -> f64 {
    match n {
        1 => 2.0 / p,
        2 => midpoint(|t| t.cos().abs().powf(p), 0.0, 2.0 * PI, 200_000) / p,
        _ => unreachable!(),
    }
}

/// `∫ |∇ exp(-|x|^2)|^p dx` for `n ∈ {1, 2}`.
fn gradient_power(p: f64, n: usize) -> f64 {
    let radial = |r: f64| (2.0 * r * (-r * r).exp()).powf(p);
    match n {
        1 => 2.0 * midpoint(radial, 0.0, 12.0, 400_000),
        2 => 2.0 * PI * midpoint(|r| radial(r) * r, 0.0, 12.0, 400_000),
        _ => unreachable!(),
    }
}

fn bbm(n: usize, p: f64, half: f64, points: usize, tol: f64) -> Outcome {
    let grid = Grid::cube(n, half, points)?;
    let f = TestFunctionSpec::gaussian(1.0).sample(&grid)?;
    let om = DomainMask::full(&grid);
    let sweep = bbm_sweep(&f, p, &DEFAULT_S_GRID, &SpaceSpec::Lebesgue { p }, &om, KernelPolicy::equivalent_ball())?;
    let limit = bbm_limit_extrapolate(&sweep)?.limit;
    let reference = angular_constant(p, n) * gradient_power(p, n);
    let ratio = limit.powf(p) / reference;
    Ok(((ratio - 1.0).abs() <= tol, format!("ratio {ratio:.5} (tolerance {tol})")))
}

fn desk() -> Outcome {
    let grid = Grid::uniform(1, 0.0, 1.0, 2048)?;
    let f = TestFunctionSpec::Coordinate { axis: 0 }.sample(&grid)?;
    let om = DomainMask::full(&grid);
    let policy = KernelPolicy::equivalent_ball().with_subsample(32);
    let x = SpaceSpec::Lebesgue { p: 1.0 };
    let lambdas: Vec<f64> = (0..25).map(|k| 2.0 * 500f64.powf(k as f64 / 24.0)).collect();
    let fields = bsvy_inner_sweep(&f, &lambdas, &BsvyParams::new(1.0, 1.0, lambdas.clone())?, &om, policy)?;
    let mut worst: f64 = 0.0;
    for (l, field) in lambdas.iter().zip(&fields) {
        // |{(x, y) ∈ [0,1]^2 : |x - y| > λ |x - y|^2}| = 2/λ - 1/λ^2.
        let exact = 2.0 / l - 1.0 / (l * l);
        worst = worst.max((l * norm(field, &x, &om)? / (l * exact) - 1.0).abs());
    }
    let sup = bsvy_sup(&f, &BsvyParams::new(1.0, 1.0, default_lambda_grid(1.0))?, &x, &om, policy)?.value;
    Ok((worst <= 0.01 && sup >= 1.99, format!("profile error {worst:.2e} (tolerance 1e-2), sup {sup:.5} (bound 1.99)")))
}

fn lorentz() -> Outcome {
    let grid = Grid::uniform(1, 0.0, 1.0, 64)?;
    let f = SampledField::from_fn(&grid, |x| if x[0] < 0.5 { 1.0 } else { 0.0 })?;
    let v = lorentz_norm(&f, 2.0, 3.0)?;
    // (∫_0^{1/2} (t^{1/2})^3 dt/t)^{1/3} = ((2/3) 2^{-3/2})^{1/3}.
    let exact = (2.0 / 3.0 * 0.5f64.powf(1.5)).powf(1.0 / 3.0);
    let err = (v / exact - 1.0).abs();
    Ok((err <= 0.01, format!("{v:.6} vs {exact:.6} (tolerance 1e-2)")))
}

fn muckenhoupt() -> Outcome {
    let grid = Grid::uniform(1, -1.0, 1.0, 256)?;
    let unit = WeightSpec::Unit.sample(&grid)?;
    let family = CubeFamily::standard(&grid, &[])?;
    let mut unit_err: f64 = 0.0;
    for p in [1.0, 2.0, 3.0] {
        unit_err = unit_err.max((muckenhoupt_constant(&unit, p, &family)?.value - 1.0).abs());
    }
    let h = grid.cell_size()[0];
    let anchored = (1..=128).map(|k| Cube::new(&grid, vec![-(k as f64) * h], vec![k as f64 * h])).collect();
    let w = WeightSpec::power(-0.5).sample(&grid)?;
    let a1 = muckenhoupt_constant(&w, 1.0, &CubeFamily::new(anchored)?)?.value;
    // On [-t, t]: mean of |x|^{-1/2} is 2 t^{-1/2}, infimum is t^{-1/2}.
    let ok = unit_err <= 1e-12 && (a1 / 2.0 - 1.0).abs() <= 0.02;
    Ok((ok, format!("unit weight error {unit_err:.1e} (tolerance 1e-12), anchored A_1 {a1:.5} vs 2 (tolerance 2e-2)")))
}

fn table(kind: ExperimentKind) -> Outcome {
    let t = run_experiment(&ExperimentConfig::defaults(kind))?;
    let failed = t.checks.iter().filter(|c| !c.passed).count();
    let first = t.checks.iter().find(|c| !c.passed).map(|c| format!("; {}: {}", c.name, c.detail)).unwrap_or_default();
    Ok((failed == 0 && !t.checks.is_empty(), format!("{}/{} checks pass{first}", t.checks.len() - failed, t.checks.len())))
}

fn naive_lp(f: &SampledField, p: f64) -> f64 {
    (f.values().iter().map(|v| v.abs().powf(p)).sum::<f64>() * f.grid().cell_volume()).powf(1.0 / p)
}

fn collapse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cases = [
        ("orlicz:p=2.5", 1, 2.5),
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
    for (spec, dim, p) in cases {
        let grid = Grid::cube(dim, 2.0, if dim == 1 { 64 } else { 16 })?;
        for _ in 0..3 {
            let vals: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let f = SampledField::new(grid.clone(), vals)?;
            let v = norm(&f, &SpaceSpec::parse(spec)?, &DomainMask::full(&grid))?;
            worst = worst.max((v / naive_lp(&f, p) - 1.0).abs());
        }
    }
    Ok((worst <= 1e-10, format!("largest deviation from Lebesgue {worst:.2e} (tolerance 1e-10)")))
}

fn oracles() -> Outcome {
    let grid = Grid::uniform(1, -2.0, 3.0, 48)?;
    let xs = grid.axis_centers(0);
    let h = grid.cell_size()[0];
    let f = TestFunctionSpec::gaussian(0.8).sample(&grid)?;
    let om = DomainMask::full(&grid);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);

    let (s, p) = (0.4, 1.5);
    let mut sum = 0.0;
    for i in 0..xs.len() {
        for j in 0..xs.len() {
            if i != j {
                sum += (f.values()[i] - f.values()[j]).abs().powf(p) / (xs[i] - xs[j]).abs().powf(1.0 + s * p) * h * h;
            }
        }
    }
    let gag = rel(gagliardo_seminorm(&f, GagliardoParams::new(s, p)?, &om, KernelPolicy::exclude())?, sum.powf(1.0 / p));

    let (gamma, p, lambda) = (-0.5, 2.0, 0.2);
    let inner = bsvy_inner(&f, lambda, &BsvyParams::new(gamma, p, vec![lambda])?, &om, KernelPolicy::exclude())?;
    let mut lev: f64 = 0.0;
    for i in 0..xs.len() {
        let mut acc = 0.0;
        for j in 0..xs.len() {
            let r = (xs[i] - xs[j]).abs();
            if i != j && (f.values()[i] - f.values()[j]).abs() > lambda * r.powf(1.0 + gamma / p) {
                acc += r.powf(gamma - 1.0) * h;
            }
        }
        lev = lev.max(if acc == 0.0 { inner.values()[i].abs() } else { rel(inner.values()[i], acc) });
    }
    Ok((gag.max(lev) <= 1e-12, format!("fractional seminorm {gag:.1e}, level-set sums {lev:.1e} (tolerance 1e-12)")))
}

fn cover() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut contained = true;
    for _ in 0..200 {
        let x = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
        let r = 10f64.powf(rng.random_range(-3.0..1.0));
        let c = cover_ball(&x, r)?;
        contained &= (0..2).all(|a| c.cube.lo[a] <= x[a] - r && x[a] + r <= c.cube.hi[a]);
        worst = worst.max((c.cube.hi[0] - c.cube.lo[0]).powi(2) / (PI * r * r));
    }
    // A cube of side at most 6r among the adjacent dyadic systems: 36 r^2 / (π r^2).
    let bound = 36.0 / PI;
    Ok((contained && worst <= bound, format!("all balls covered: {contained}, largest |Q|/|B| {worst:.3} (bound {bound:.3})")))
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("BBM constant n=1 p=1", Box::new(|| bbm(1, 1.0, 8.0, 4096, 0.03))),
        ("BBM constant n=1 p=2", Box::new(|| bbm(1, 2.0, 8.0, 4096, 0.03))),
        ("BBM constant n=2 p=2", Box::new(|| bbm(2, 2.0, 5.0, 128, 0.05))),
        ("level-set functional closed form", Box::new(desk)),
        ("Lorentz indicator norm", Box::new(lorentz)),
        ("Muckenhoupt constants", Box::new(muckenhoupt)),
        ("Rubio de Francia iteration", Box::new(|| table(ExperimentKind::Maximal))),
        ("collapse identities", Box::new(collapse)),
        ("naive-loop oracles", Box::new(oracles)),
        ("weak-Holder suite", Box::new(|| table(ExperimentKind::WeakHolder))),
        ("dyadic cover", Box::new(cover)),
        ("equivalence brackets", Box::new(|| table(ExperimentKind::EquivalenceSuite))),
        ("(eps, inf) falsifier", Box::new(|| table(ExperimentKind::EpsilonCheck))),
    ];
    let mut failures = 0;
    for (k, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        let limit = match k + 1 {
            1 | 2 => 60.0,
            3 => 600.0,
            _ => f64::INFINITY,
        };
        let passed = passed && secs <= limit;
        failures += usize::from(!passed);
        println!("{} {:>2} {title}: {detail} ({secs:.1} s)", if passed { "PASS" } else { "FAIL" }, k + 1);
    }
    println!("{}/{} criteria pass", criteria.len() - failures, criteria.len());
    if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
