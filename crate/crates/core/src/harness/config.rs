//! Flat `key = value` experiment configuration with `[section]` headers.
//!
//! Lists use ` | ` between items so that spec strings keep their own commas.
//! Keys before the first header belong to `[experiment]`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{invalid, Error, Result};
use crate::functionals::{KernelPolicy, DEFAULT_S_GRID};
use crate::grid::{Grid, TestFunctionSpec};
use crate::spaces::SpaceSpec;
use crate::spec_text::{fmt_f64, parse_f64};
use crate::weights::WeightSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Norms,
    Bbm,
    Bsvy,
    EquivalenceSuite,
    MorreyDuality,
    WeakHolder,
    ApConstants,
    Maximal,
    EpsilonCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        Self::Norms,
        Self::Bbm,
        Self::Bsvy,
        Self::EquivalenceSuite,
        Self::MorreyDuality,
        Self::WeakHolder,
        Self::ApConstants,
        Self::Maximal,
        Self::EpsilonCheck,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Norms => "norms",
            Self::Bbm => "bbm",
            Self::Bsvy => "bsvy",
            Self::EquivalenceSuite => "equivalence-suite",
            Self::MorreyDuality => "morrey-duality",
            Self::WeakHolder => "weak-holder",
            Self::ApConstants => "ap-constants",
            Self::Maximal => "maximal",
            Self::EpsilonCheck => "epsilon-check",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .or(match s {
                "norm" => Some(Self::Norms),
                "apconst" => Some(Self::ApConstants),
                "equivalence" => Some(Self::EquivalenceSuite),
                _ => None,
            })
            .ok_or_else(|| Error::Parse(format!("unknown experiment kind `{s}`")))
    }
}

/// Everything an experiment run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// The finest grid; headline experiments also run the grid with half the cells.
    pub grid: Grid,
    pub refine: bool,
    pub functions: Vec<TestFunctionSpec>,
    pub spaces: Vec<SpaceSpec>,
    pub domains: Vec<DomainSpec>,
    pub weights: Vec<WeightSpec>,
    /// Box `(lo, hi)` of an indicator function added to the inputs.
    pub indicator: Option<(f64, f64)>,
    pub p: Vec<f64>,
    pub gamma: Vec<f64>,
    pub s: Vec<f64>,
    /// `None` selects the default λ grid scaled by `max |∇f|`.
    pub lambda: Option<Vec<f64>>,
    /// `None` selects the default policy of each experiment.
    pub policy: Option<KernelPolicy>,
    pub epsilon: Vec<f64>,
    pub samples: usize,
    pub instances: usize,
    pub degenerate: usize,
    pub theta: f64,
    pub cubes: usize,
    pub depth: usize,
    /// Relative tolerance for value checks against references.
    pub tolerance: f64,
    /// Largest admissible bracket width `c₂/c₁`.
    pub bracket: f64,
    /// Largest admissible relative change between the two grids.
    pub refinement: f64,
    /// Largest admissible spread `max/min` of A₁ constants.
    pub spread: f64,
}

fn specs<T>(items: &[&str], parse: fn(&str) -> Result<T>) -> Vec<T> {
    items.iter().map(|s| parse(s).expect("built-in spec parses")).collect()
}

fn grid(text: &str) -> Grid {
    Grid::parse(text).expect("built-in grid parses")
}

pub const SUITE_FUNCTIONS: [&str; 5] = [
    "gaussian:sigma=0.7",
    "tent:width=2.4",
    "bump:radius=1.2",
    "polygauss:degree=1,sigma=0.7",
    "gaussian:sigma=0.5,center=0.3",
];

pub const SUITE_SPACES: [&str; 7] = [
    "lebesgue:p=2",
    "weighted:r=2,a=0.5",
    "lorentz:r=2,tau=3",
    "orlicz:p1=2,p2=3",
    "mixed:r=3",
    "morrey:r=2,alpha=3",
    "herz-local:p=2,q=2,a=0.3,xi=0",
];

pub const SUITE_DOMAINS: [&str; 3] = ["full", "ball:radius=1.5", "half-space:axis=0,offset=0"];

pub const PROBE_FUNCTIONS: [&str; 5] = [
    "gaussian:sigma=0.5",
    "tent:width=1.5",
    "bump:radius=1",
    "polygauss:degree=2,sigma=0.8",
    "gaussian:sigma=0.3,center=1.2",
];

impl ExperimentConfig {
    /// Built-in configuration of each experiment kind.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = Self {
            kind,
            seed: 0,
            out: None,
            grid: grid("n=1,L=4,N=256"),
            refine: false,
            functions: specs(&["gaussian:sigma=1"], TestFunctionSpec::parse),
            spaces: specs(&["lebesgue:p=2"], SpaceSpec::parse),
            domains: vec![DomainSpec::FullBox],
            weights: Vec::new(),
            indicator: None,
            p: vec![2.0],
            gamma: vec![1.0],
            s: DEFAULT_S_GRID.to_vec(),
            lambda: None,
            policy: None,
            epsilon: Vec::new(),
            samples: 0,
            instances: 0,
            degenerate: 0,
            theta: 0.75,
            cubes: 0,
            depth: 12,
            tolerance: 0.03,
            bracket: 10.0,
            refinement: 0.1,
            spread: 2.0,
        };
        match kind {
            ExperimentKind::Norms => base,
            ExperimentKind::Bbm => Self {
                grid: grid("n=1,L=8,N=4096"),
                refine: true,
                spaces: specs(&["lebesgue:p=1"], SpaceSpec::parse),
                p: vec![1.0],
                policy: Some(KernelPolicy::equivalent_ball()),
                ..base
            },
            ExperimentKind::Bsvy => Self {
                grid: grid("n=1,lo=0,hi=1,N=2048"),
                refine: true,
                functions: specs(&["coordinate"], TestFunctionSpec::parse),
                spaces: specs(&["lebesgue:p=1"], SpaceSpec::parse),
                p: vec![1.0],
                policy: Some(KernelPolicy::equivalent_ball().with_subsample(32)),
                ..base
            },
            ExperimentKind::EquivalenceSuite => Self {
                grid: grid("n=1,L=2.5,N=512"),
                refine: true,
                functions: specs(&SUITE_FUNCTIONS, TestFunctionSpec::parse),
                spaces: specs(&SUITE_SPACES, SpaceSpec::parse),
                domains: specs(&SUITE_DOMAINS, DomainSpec::parse),
                p: vec![1.5],
                gamma: vec![1.0, 2.0, -1.0],
                ..base
            },
            ExperimentKind::MorreyDuality => Self {
                functions: Vec::new(),
                spaces: specs(&["morrey:r=2,alpha=4"], SpaceSpec::parse),
                indicator: Some((0.0, 1.0)),
                cubes: 64,
                ..base
            },
            ExperimentKind::WeakHolder => Self {
                grid: grid("n=1,L=1,N=16"),
                functions: Vec::new(),
                spaces: Vec::new(),
                instances: 100,
                degenerate: 5,
                ..base
            },
            ExperimentKind::ApConstants => Self {
                grid: grid("n=1,L=1,N=256"),
                functions: Vec::new(),
                spaces: Vec::new(),
                weights: specs(&["unit", "power:a=-0.5"], WeightSpec::parse),
                p: vec![1.0, 2.0, 3.0],
                tolerance: 1e-12,
                ..base
            },
            ExperimentKind::Maximal => Self {
                functions: specs(&PROBE_FUNCTIONS, TestFunctionSpec::parse),
                ..base
            },
            ExperimentKind::EpsilonCheck => Self {
                grid: grid("n=2,L=1,N=64"),
                functions: Vec::new(),
                spaces: Vec::new(),
                domains: specs(&["slit-box", "ball", "half-space"], DomainSpec::parse),
                epsilon: vec![0.1, 0.5, 1.0],
                samples: 10_000,
                ..base
            },
        }
    }

    /// Parses the text form, starting from the defaults of its `kind`.
    pub fn parse(text: &str) -> Result<Self> {
        let entries = parse_entries(text)?;
        let kind = match entries.get(&("experiment".to_string(), "kind".to_string())) {
            Some(v) => v.parse()?,
            None => return Err(Error::Parse("config needs `kind` in [experiment]".into())),
        };
        let mut cfg = Self::defaults(kind);
        for ((section, key), value) in &entries {
            cfg.set(section, key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `section.key = value` assignment.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let bad = |what: &str| Error::Parse(format!("[{section}] {key}: {what}"));
        match (section, key) {
            ("experiment", "kind") => self.kind = v.parse()?,
            ("experiment", "seed") => self.seed = v.parse().map_err(|_| bad("not an unsigned integer"))?,
            ("experiment", "out") => self.out = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            ("grid", "spec") => self.grid = Grid::parse(v)?,
            ("grid", "refine") => self.refine = v.parse().map_err(|_| bad("expected true or false"))?,
            ("inputs", "functions") => self.functions = list(v, TestFunctionSpec::parse)?,
            ("inputs", "spaces") => self.spaces = list(v, SpaceSpec::parse)?,
            ("inputs", "domains") => self.domains = list(v, DomainSpec::parse)?,
            ("inputs", "weights") => self.weights = list(v, WeightSpec::parse)?,
            ("inputs", "indicator") => {
                self.indicator = if v.is_empty() || v == "none" {
                    None
                } else {
                    let (a, b) = v.split_once(';').ok_or_else(|| bad("expected lo;hi"))?;
                    Some((parse_f64(a)?, parse_f64(b)?))
                }
            }
            ("sweep", "p") => self.p = list(v, parse_f64)?,
            ("sweep", "gamma") => self.gamma = list(v, parse_f64)?,
            ("sweep", "s") => self.s = list(v, parse_f64)?,
            ("sweep", "lambda") => self.lambda = if v == "default" { None } else { Some(list(v, parse_f64)?) },
            ("sweep", "policy") => self.policy = if v == "default" { None } else { Some(KernelPolicy::parse(v)?) },
            ("sweep", "epsilon") => self.epsilon = list(v, parse_f64)?,
            ("sweep", "samples") => self.samples = v.parse().map_err(|_| bad("not a count"))?,
            ("sweep", "instances") => self.instances = v.parse().map_err(|_| bad("not a count"))?,
            ("sweep", "degenerate") => self.degenerate = v.parse().map_err(|_| bad("not a count"))?,
            ("sweep", "theta") => self.theta = parse_f64(v)?,
            ("sweep", "cubes") => self.cubes = v.parse().map_err(|_| bad("not a count"))?,
            ("sweep", "depth") => self.depth = v.parse().map_err(|_| bad("not a count"))?,
            ("checks", "tolerance") => self.tolerance = parse_f64(v)?,
            ("checks", "bracket") => self.bracket = parse_f64(v)?,
            ("checks", "refinement") => self.refinement = parse_f64(v)?,
            ("checks", "spread") => self.spread = parse_f64(v)?,
            _ => return Err(Error::Parse(format!("unknown config key `{key}` in [{section}]"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{what} must be positive, got {v}")))
            }
        };
        positive(self.tolerance, "tolerance")?;
        positive(self.refinement, "refinement")?;
        if !(self.bracket >= 1.0 && self.spread >= 1.0) {
            return Err(invalid("bracket and spread bounds must be at least 1"));
        }
        if let Some(l) = &self.lambda {
            if l.is_empty() || l.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(invalid("λ values must be positive and finite"));
            }
        }
        if let Some(pol) = &self.policy {
            pol.validate()?;
        }
        if self.s.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
            return Err(invalid("s values must lie in (0, 1)"));
        }
        for x in &self.spaces {
            x.validate()?;
        }
        if let Some((a, b)) = self.indicator {
            if !(a < b && a.is_finite() && b.is_finite()) {
                return Err(invalid(format!("indicator box ({a}, {b}) is empty")));
            }
        }
        Ok(())
    }

    /// Canonical text form; `parse(to_text(c)) == c`.
    pub fn to_text(&self) -> String {
        let join = |items: Vec<String>| items.join(" | ");
        let nums = |v: &[f64]| join(v.iter().map(|x| fmt_f64(*x)).collect());
        let mut s = String::new();
        let _ = writeln!(s, "[experiment]");
        let _ = writeln!(s, "kind = {}", self.kind);
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out = {}", out.display());
        }
        let _ = writeln!(s, "\n[grid]");
        let _ = writeln!(s, "spec = {}", self.grid);
        let _ = writeln!(s, "refine = {}", self.refine);
        let _ = writeln!(s, "\n[inputs]");
        let _ = writeln!(s, "functions = {}", join(self.functions.iter().map(|x| x.to_string()).collect()));
        let _ = writeln!(s, "spaces = {}", join(self.spaces.iter().map(|x| x.to_string()).collect()));
        let _ = writeln!(s, "domains = {}", join(self.domains.iter().map(|x| x.to_string()).collect()));
        let _ = writeln!(s, "weights = {}", join(self.weights.iter().map(|x| x.to_string()).collect()));
        let indicator = self.indicator.map(|(a, b)| format!("{};{}", fmt_f64(a), fmt_f64(b)));
        let _ = writeln!(s, "indicator = {}", indicator.unwrap_or_else(|| "none".into()));
        let _ = writeln!(s, "\n[sweep]");
        let _ = writeln!(s, "p = {}", nums(&self.p));
        let _ = writeln!(s, "gamma = {}", nums(&self.gamma));
        let _ = writeln!(s, "s = {}", nums(&self.s));
        let _ = writeln!(s, "lambda = {}", self.lambda.as_deref().map(nums).unwrap_or_else(|| "default".into()));
        let _ = writeln!(s, "policy = {}", self.policy.map(|p| p.to_string()).unwrap_or_else(|| "default".into()));
        let _ = writeln!(s, "epsilon = {}", nums(&self.epsilon));
        let _ = writeln!(s, "samples = {}", self.samples);
        let _ = writeln!(s, "instances = {}", self.instances);
        let _ = writeln!(s, "degenerate = {}", self.degenerate);
        let _ = writeln!(s, "theta = {}", fmt_f64(self.theta));
        let _ = writeln!(s, "cubes = {}", self.cubes);
        let _ = writeln!(s, "depth = {}", self.depth);
        let _ = writeln!(s, "\n[checks]");
        let _ = writeln!(s, "tolerance = {}", fmt_f64(self.tolerance));
        let _ = writeln!(s, "bracket = {}", fmt_f64(self.bracket));
        let _ = writeln!(s, "refinement = {}", fmt_f64(self.refinement));
        let _ = writeln!(s, "spread = {}", fmt_f64(self.spread));
        s
    }
}

fn list<T>(value: &str, parse: fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value.split('|').map(str::trim).filter(|s| !s.is_empty()).map(parse).collect()
}

/// `(section, key) -> value`, rejecting duplicates.
fn parse_entries(text: &str) -> Result<BTreeMap<(String, String), String>> {
    let mut section = "experiment".to_string();
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse(format!("line {}: unterminated section header", lineno + 1)))?;
            section = name.trim().to_ascii_lowercase();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
        let key = (section.clone(), k.trim().to_ascii_lowercase());
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Parse(format!("line {}: duplicate key `{}`", lineno + 1, key.1)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_text() {
        for kind in ExperimentKind::ALL {
            let cfg = ExperimentConfig::defaults(kind);
            cfg.validate().unwrap();
            assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg, "{kind}");
        }
    }

    #[test]
    fn sections_and_overrides() {
        let text = "kind = bsvy\n# comment\n[grid]\nspec = n=1,L=2,N=64\n[sweep]\ngamma = 1 | -1\npolicy = exclude\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Bsvy);
        assert_eq!(cfg.gamma, vec![1.0, -1.0]);
        assert_eq!(cfg.grid.len(), 64);
        assert_eq!(cfg.policy, Some(KernelPolicy::exclude()));
        let spaces = "kind = norms\n[inputs]\nspaces = weighted:r=2,a=0.5 | lorentz:r=2,tau=3\n";
        assert_eq!(ExperimentConfig::parse(spaces).unwrap().spaces.len(), 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("[grid]\nspec = n=1,N=8").is_err());
        assert!(ExperimentConfig::parse("kind = bbm\nkind = bsvy").is_err());
        assert!(ExperimentConfig::parse("kind = bbm\n[sweep]\nwidth = 2").is_err());
        assert!(ExperimentConfig::parse("kind = nope").is_err());
        assert!(ExperimentConfig::parse("kind = bbm\n[sweep]\ns = 0.5 | 1.2").is_err());
        assert!(ExperimentConfig::parse("kind = bbm\n[grid\n").is_err());
    }
}
