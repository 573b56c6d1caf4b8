//! Seeded random instances.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Job, Mode};
use crate::power::PowerFunction;

/// Which power functions machines get.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
#[derive(Default)]
pub enum PowerFamily {
    /// `s^alpha` with alpha drawn from the list.
    Poly { alphas: Vec<f64> },
    /// `s^alpha` with alpha uniform in `[lo, hi]`.
    PolyRange { lo: f64, hi: f64 },
    /// Polynomial (60%, alpha in `[1.5, 3.5]`), affine (20%) or table (20%).
    #[default]
    Mixed,
}

impl fmt::Display for PowerFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerFamily::Poly { alphas } => {
                let parts: Vec<String> = alphas.iter().map(|a| a.to_string()).collect();
                write!(f, "poly:{}", parts.join(","))
            }
            PowerFamily::PolyRange { lo, hi } => write!(f, "poly:{lo}..{hi}"),
            PowerFamily::Mixed => f.write_str("mixed"),
        }
    }
}

impl FromStr for PowerFamily {
    type Err = Error;

    /// `mixed`, `poly:2,3` or `poly:1.5..3.5`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown power family {s:?}"));
        if s == "mixed" {
            return Ok(PowerFamily::Mixed);
        }
        let rest = s.strip_prefix("poly:").ok_or_else(bad)?;
        let family = if let Some((lo, hi)) = rest.split_once("..") {
            PowerFamily::PolyRange { lo: lo.parse().map_err(|_| bad())?, hi: hi.parse().map_err(|_| bad())? }
        } else {
            let alphas = rest.split(',').map(|a| a.trim().parse::<f64>()).collect::<std::result::Result<_, _>>();
            PowerFamily::Poly { alphas: alphas.map_err(|_| bad())? }
        };
        family.validate()?;
        Ok(family)
    }
}

impl PowerFamily {
    pub fn validate(&self) -> Result<()> {
        match self {
            PowerFamily::Poly { alphas } if alphas.is_empty() || alphas.iter().any(|a| !(*a > 1.0)) => {
                Err(Error::InvalidConfig("poly family needs exponents > 1".into()))
            }
            PowerFamily::PolyRange { lo, hi } if !(*lo > 1.0 && lo <= hi && hi.is_finite()) => {
                Err(Error::InvalidConfig(format!("bad exponent range {lo}..{hi}")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> PowerFunction {
        match self {
            PowerFamily::Poly { alphas } => PowerFunction::poly(alphas[rng.gen_range(0..alphas.len())]),
            PowerFamily::PolyRange { lo, hi } => {
                PowerFunction::poly(if lo == hi { *lo } else { rng.gen_range(*lo..*hi) })
            }
            PowerFamily::Mixed => {
                let u: f64 = rng.gen();
                if u < 0.6 {
                    PowerFunction::poly(rng.gen_range(1.5..3.5))
                } else if u < 0.8 {
                    PowerFunction::affine(random_affine(rng))
                } else {
                    PowerFunction::table(random_table(rng))
                }
            }
        }
        .expect("sampled power functions are valid")
    }
}

fn random_affine<R: Rng>(rng: &mut R) -> Vec<f64> {
    let c1 = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.05..1.0) };
    let c2 = rng.gen_range(0.5..2.0);
    let c3 = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.05..1.0) };
    vec![0.0, c1, c2, c3]
}

fn random_table<R: Rng>(rng: &mut R) -> Vec<[f64; 2]> {
    let k = rng.gen_range(2..=5);
    let mut points = Vec::with_capacity(k);
    let (mut s, mut p) = (0.0, 0.0);
    let mut slope = rng.gen_range(0.2..1.5);
    for _ in 0..k {
        let ds = rng.gen_range(0.2..1.5);
        s += ds;
        p += slope * ds;
        points.push([s, p]);
        slope += rng.gen_range(0.3..2.0);
    }
    points
}

/// Log-uniform sample in `[lo, hi]`.
pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub machines: usize,
    pub jobs: usize,
    pub mode: Mode,
    pub family: PowerFamily,
    /// Log-uniform range for sizes.
    pub size_range: (f64, f64),
    /// Log-uniform range for weights (weighted mode only).
    pub weight_range: (f64, f64),
    /// Releases are uniform in `[0, release_span]`; `None` means `jobs / 2`.
    pub release_span: Option<f64>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            machines: 2,
            jobs: 4,
            mode: Mode::Weighted,
            family: PowerFamily::Mixed,
            size_range: (0.1, 10.0),
            weight_range: (0.1, 10.0),
            release_span: None,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.machines == 0 {
            return Err(Error::InvalidConfig("need at least one machine".into()));
        }
        for (name, (lo, hi)) in [("size", self.size_range), ("weight", self.weight_range)] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::InvalidConfig(format!("bad {name} range [{lo}, {hi}]")));
            }
        }
        if let Some(r) = self.release_span {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidConfig(format!("bad release span {r}")));
            }
        }
        self.family.validate()
    }
}

/// Deterministic instance for `config.seed`.
pub fn generate(config: &GenConfig) -> Result<Instance> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    generate_with(config, &mut rng)
}

pub fn generate_with<R: Rng>(config: &GenConfig, rng: &mut R) -> Result<Instance> {
    config.validate()?;
    let machines: Vec<PowerFunction> = (0..config.machines).map(|_| config.family.sample(rng)).collect();
    let span = config.release_span.unwrap_or(config.jobs as f64 / 2.0);
    let mut jobs = Vec::with_capacity(config.jobs);
    for id in 0..config.jobs {
        let release = if span > 0.0 { rng.gen_range(0.0..span) } else { 0.0 };
        let size = log_uniform(rng, config.size_range.0, config.size_range.1);
        let weight = match config.mode {
            Mode::Weighted => log_uniform(rng, config.weight_range.0, config.weight_range.1),
            Mode::Unweighted => 1.0,
        };
        jobs.push(Job::new(id as u64, release, size, weight)?);
    }
    Instance::new(machines, jobs, config.mode)
}

/// One instance of a random suite together with its stream seed.
#[derive(Debug, Clone)]
pub struct SuiteItem {
    pub index: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub instance: Instance,
}

/// Small random instances: `m` uniform in `1..=max_machines`, `n` uniform in
/// `1..=max_jobs`, epsilon cycling through `epsilons`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub count: usize,
    pub mode: Mode,
    pub max_machines: usize,
    pub max_jobs: usize,
    pub epsilons: Vec<f64>,
    pub family: PowerFamily,
}

impl SuiteConfig {
    pub fn new(seed: u64, count: usize, mode: Mode, epsilons: Vec<f64>) -> Self {
        SuiteConfig { seed, count, mode, max_machines: 3, max_jobs: 8, epsilons, family: PowerFamily::Mixed }
    }

    pub fn generate(&self) -> Result<Vec<SuiteItem>> {
        if self.max_machines == 0 || self.max_jobs == 0 {
            return Err(Error::InvalidConfig("suite needs max_machines, max_jobs >= 1".into()));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e >= 0.0)) {
            return Err(Error::InvalidConfig("suite needs non-negative epsilons".into()));
        }
        let mut master = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count)
            .map(|index| {
                let seed: u64 = master.gen();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let cfg = GenConfig {
                    seed,
                    machines: rng.gen_range(1..=self.max_machines),
                    jobs: rng.gen_range(1..=self.max_jobs),
                    mode: self.mode,
                    family: self.family.clone(),
                    ..GenConfig::default()
                };
                let instance = generate_with(&cfg, &mut rng)?;
                Ok(SuiteItem { index, seed, epsilon: self.epsilons[index % self.epsilons.len()], instance })
            })
            .collect()
    }
}
