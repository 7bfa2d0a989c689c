//! Experiment files.
//!
//! An experiment is a TOML document with a few top-level keys and one
//! section per experiment kind:
//!
//! ```toml
//! kind = "truncated_sweep"
//! seed = 7
//! replicas = 1000
//! horizon = 30
//!
//! [group]
//! kind = "free_group"
//! rank = 2
//!
//! [step]
//! laziness = 0.2
//!
//! [offspring]
//! probs = [0.2, 0.55, 0.25]
//!
//! [truncated]
//! ns = [1, 2, 4, 8]
//! mode = "paper_exact"
//! ```
//!
//! Parsing happens in two passes. Serde checks shapes and names, and
//! [`ExperimentSpec::resolve`] builds validated distributions. Both report
//! the dotted path of the offending field.

use std::fmt;

use brwlab_core::brw::Caps;
use brwlab_core::group::{GroupElement, GroupSpec, StepDistribution};
use brwlab_core::gw::OffspringDistribution;
use brwlab_core::percolation::{RootBias, TransportFn};
use brwlab_core::truncated::TruncationMode;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Brw,
    TruncatedSweep,
    Competing,
    Adapted,
    Percolation,
    Spectral,
    Mtp,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Brw => "brw",
            Kind::TruncatedSweep => "truncated_sweep",
            Kind::Competing => "competing",
            Kind::Adapted => "adapted",
            Kind::Percolation => "percolation",
            Kind::Spectral => "spectral",
            Kind::Mtp => "mtp",
        }
    }

    fn section(&self) -> &'static str {
        match self {
            Kind::TruncatedSweep => "truncated",
            k => k.as_str(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: Kind,
    /// Mandatory: there is no clock-based default.
    pub seed: u64,
    #[serde(default = "one")]
    pub replicas: u64,
    pub horizon: Option<u32>,
    /// Name used for output files; defaults to the file stem.
    pub id: Option<String>,
    pub group: Option<GroupSpec>,
    pub step: Option<StepSpec>,
    pub offspring: Option<OffspringSpec>,
    #[serde(default)]
    pub caps: CapsSpec,
    pub brw: Option<BrwSection>,
    pub truncated: Option<TruncatedSection>,
    pub competing: Option<CompetingSection>,
    pub adapted: Option<AdaptedSection>,
    pub percolation: Option<PercolationSection>,
    pub spectral: Option<SpectralSection>,
    pub mtp: Option<MtpSection>,
}

fn one() -> u64 {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    pub laziness: f64,
    /// One weight per generator; uniform over the generators when absent.
    pub weights: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffspringSpec {
    pub probs: Vec<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsSpec {
    pub max_nodes: Option<usize>,
    pub max_seeds: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrwSection {
    pub gammas: Option<Vec<f64>>,
    /// Radius of the ball whose occupancy is reported.
    #[serde(default)]
    pub ball_radius: u32,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncatedSection {
    pub ns: Vec<u32>,
    #[serde(default = "paper_exact")]
    pub mode: TruncationMode,
    pub eps: Option<f64>,
}

fn paper_exact() -> TruncationMode {
    TruncationMode::PaperExact
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompetingSection {
    pub horizons: Vec<u32>,
    /// Generator letters spelling the invasive starting site.
    pub invasive_start: Vec<u8>,
    pub invasive_offspring: Option<OffspringSpec>,
    pub invasive_step: Option<StepSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptedSection {
    pub ns: Vec<u32>,
    pub gammas: Vec<f64>,
    pub window: u32,
    pub invasive_offspring: Option<OffspringSpec>,
    pub invasive_step: Option<StepSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PercolationSection {
    pub ps: Vec<f64>,
    pub depths: Vec<u32>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSection {
    pub n_max: usize,
    /// Times at which a row is written; every tenth step by default.
    pub checkpoints: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MtpSection {
    pub samples: u64,
    pub depth: Option<u32>,
    #[serde(default = "unimodular")]
    pub bias: RootBias,
    pub functions: Option<Vec<TransportFn>>,
}

fn unimodular() -> RootBias {
    RootBias::Unimodular
}

/// A diagnostic tied to one field of the experiment file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError { field: field.into(), message: message.to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = Result<T, ConfigError>;

impl ExperimentSpec {
    pub fn parse(text: &str) -> CResult<Self> {
        let de = toml::de::Deserializer::parse(text).map_err(|e| ConfigError::new("<document>", e.message()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." || path.is_empty() { "<document>".to_string() } else { path };
            ConfigError::new(field, e.inner().message())
        })
    }

    /// Checks cross-field constraints and builds the distributions.
    pub fn resolve(&self) -> CResult<Plan> {
        if self.replicas == 0 {
            return Err(ConfigError::new("replicas", "must be at least 1"));
        }
        let caps = self.caps();
        if caps.max_nodes == 0 {
            return Err(ConfigError::new("caps.max_nodes", "must be positive"));
        }
        let section = self.kind.section();
        let missing = || ConfigError::new(section, format!("section required for kind `{}`", self.kind.as_str()));
        let experiment = match self.kind {
            Kind::Brw => {
                let s = self.brw.clone().unwrap_or(BrwSection { gammas: None, ball_radius: 0 });
                let gammas = s.gammas.unwrap_or_else(|| vec![1.0]);
                nonempty("brw.gammas", &gammas)?;
                for (i, &g) in gammas.iter().enumerate() {
                    if !(0.0..=1.0).contains(&g) {
                        return Err(ConfigError::new(format!("brw.gammas[{i}]"), format!("{g} not in [0, 1]")));
                    }
                }
                Experiment::Brw {
                    walk: self.walk()?,
                    horizon: self.horizon()?,
                    gammas,
                    ball_radius: s.ball_radius,
                }
            }
            Kind::TruncatedSweep => {
                let s = self.truncated.clone().ok_or_else(missing)?;
                nonempty("truncated.ns", &s.ns)?;
                if let Some(i) = s.ns.iter().position(|&n| n == 0) {
                    return Err(ConfigError::new(format!("truncated.ns[{i}]"), "must be at least 1"));
                }
                let eps = s.eps.unwrap_or(brwlab_core::truncated::DEFAULT_EPS);
                if !(0.0..1.0).contains(&eps) {
                    return Err(ConfigError::new("truncated.eps", format!("{eps} not in [0, 1)")));
                }
                Experiment::Truncated { walk: self.walk()?, horizon: self.horizon()?, ns: s.ns, mode: s.mode, eps }
            }
            Kind::Competing => {
                let s = self.competing.clone().ok_or_else(missing)?;
                nonempty("competing.horizons", &s.horizons)?;
                if let Some(i) = s.horizons.iter().position(|&h| h == 0) {
                    return Err(ConfigError::new(format!("competing.horizons[{i}]"), "must be at least 1"));
                }
                let noninvasive = self.walk()?;
                let group = noninvasive.q.group();
                let start = group.word(&s.invasive_start).map_err(|e| ConfigError::new("competing.invasive_start", e))?;
                if start == group.identity() {
                    return Err(ConfigError::new("competing.invasive_start", "reduces to the identity, where the noninvasive process starts"));
                }
                let invasive = self.invasive_walk(
                    "competing",
                    s.invasive_offspring.as_ref(),
                    s.invasive_step.as_ref(),
                    start,
                )?;
                Experiment::Competing { invasive, noninvasive, horizons: s.horizons }
            }
            Kind::Adapted => {
                let s = self.adapted.clone().ok_or_else(missing)?;
                nonempty("adapted.ns", &s.ns)?;
                nonempty("adapted.gammas", &s.gammas)?;
                if let Some(i) = s.ns.iter().position(|&n| n == 0) {
                    return Err(ConfigError::new(format!("adapted.ns[{i}]"), "must be at least 1"));
                }
                if let Some(i) = s.gammas.iter().position(|&g| !(g > 0.0 && g <= 1.0)) {
                    return Err(ConfigError::new(format!("adapted.gammas[{i}]"), format!("{} not in (0, 1]", s.gammas[i])));
                }
                let noninvasive = self.walk()?;
                let origin = noninvasive.q.group().identity();
                let invasive = self.invasive_walk("adapted", s.invasive_offspring.as_ref(), s.invasive_step.as_ref(), origin)?;
                Experiment::Adapted {
                    invasive,
                    noninvasive,
                    horizon: self.horizon()?,
                    ns: s.ns,
                    gammas: s.gammas,
                    window: s.window,
                }
            }
            Kind::Percolation => {
                let s = self.percolation.clone().ok_or_else(missing)?;
                nonempty("percolation.ps", &s.ps)?;
                nonempty("percolation.depths", &s.depths)?;
                if let Some(i) = s.ps.iter().position(|p| !(0.0..=1.0).contains(p)) {
                    return Err(ConfigError::new(format!("percolation.ps[{i}]"), format!("{} not in [0, 1]", s.ps[i])));
                }
                Experiment::Percolation { mu: self.offspring()?, ps: s.ps, depths: s.depths }
            }
            Kind::Spectral => {
                let s = self.spectral.clone().ok_or_else(missing)?;
                if s.n_max == 0 {
                    return Err(ConfigError::new("spectral.n_max", "must be at least 1"));
                }
                let checkpoints = s.checkpoints.unwrap_or_else(|| (0..=s.n_max).step_by(10).collect());
                if let Some(i) = checkpoints.iter().position(|&n| n > s.n_max) {
                    return Err(ConfigError::new(format!("spectral.checkpoints[{i}]"), "exceeds n_max"));
                }
                Experiment::Spectral { q: self.step()?, n_max: s.n_max, checkpoints }
            }
            Kind::Mtp => {
                let s = self.mtp.clone().ok_or_else(missing)?;
                if s.samples == 0 {
                    return Err(ConfigError::new("mtp.samples", "must be at least 1"));
                }
                let functions = s.functions.unwrap_or_else(TransportFn::family);
                nonempty("mtp.functions", &functions)?;
                let needed = functions.iter().map(|f| f.radius()).max().unwrap_or(1);
                let depth = s.depth.unwrap_or(needed);
                if depth < needed {
                    return Err(ConfigError::new("mtp.depth", format!("test functions need depth {needed}")));
                }
                Experiment::Mtp { mu: self.offspring()?, samples: s.samples, depth, bias: s.bias, functions }
            }
        };
        // a stray section is almost always a typo in `kind`
        for (name, present) in [
            ("brw", self.brw.is_some()),
            ("truncated", self.truncated.is_some()),
            ("competing", self.competing.is_some()),
            ("adapted", self.adapted.is_some()),
            ("percolation", self.percolation.is_some()),
            ("spectral", self.spectral.is_some()),
            ("mtp", self.mtp.is_some()),
        ] {
            if present && name != section {
                return Err(ConfigError::new(name, format!("section does not apply to kind `{}`", self.kind.as_str())));
            }
        }
        Ok(Plan { kind: self.kind, seed: self.seed, replicas: self.replicas, caps, experiment })
    }

    fn caps(&self) -> Caps {
        let d = Caps::default();
        Caps { max_nodes: self.caps.max_nodes.unwrap_or(d.max_nodes), max_seeds: self.caps.max_seeds.unwrap_or(d.max_seeds) }
    }

    fn horizon(&self) -> CResult<u32> {
        match self.horizon {
            None => Err(ConfigError::new("horizon", format!("required for kind `{}`", self.kind.as_str()))),
            Some(0) => Err(ConfigError::new("horizon", "must be at least 1")),
            Some(h) => Ok(h),
        }
    }

    fn group(&self) -> CResult<GroupSpec> {
        let g = self.group.ok_or_else(|| ConfigError::new("group", "section required"))?;
        g.validated().map_err(|e| ConfigError::new("group", e))
    }

    fn step(&self) -> CResult<StepDistribution<f64>> {
        let s = self.step.as_ref().ok_or_else(|| ConfigError::new("step", "section required"))?;
        build_step(self.group()?, s, "step")
    }

    fn offspring(&self) -> CResult<OffspringDistribution<f64>> {
        let o = self.offspring.as_ref().ok_or_else(|| ConfigError::new("offspring", "section required"))?;
        build_offspring(o, "offspring.probs")
    }

    fn walk(&self) -> CResult<Walk> {
        let q = self.step()?;
        Ok(Walk { mu: self.offspring()?, start: q.group().identity(), q })
    }

    fn invasive_walk(
        &self,
        section: &str,
        offspring: Option<&OffspringSpec>,
        step: Option<&StepSpec>,
        start: GroupElement,
    ) -> CResult<Walk> {
        let mu = match offspring {
            Some(o) => build_offspring(o, &format!("{section}.invasive_offspring.probs"))?,
            None => self.offspring()?,
        };
        let q = match step {
            Some(s) => build_step(self.group()?, s, &format!("{section}.invasive_step"))?,
            None => self.step()?,
        };
        Ok(Walk { mu, q, start })
    }
}

fn nonempty<T>(field: &str, v: &[T]) -> CResult<()> {
    if v.is_empty() {
        Err(ConfigError::new(field, "must not be empty"))
    } else {
        Ok(())
    }
}

fn build_step(group: GroupSpec, s: &StepSpec, field: &str) -> CResult<StepDistribution<f64>> {
    match &s.weights {
        None => StepDistribution::lazy_uniform(group, s.laziness),
        Some(w) => StepDistribution::new(group, s.laziness, w.clone()),
    }
    .map_err(|e| ConfigError::new(field, e))
}

fn build_offspring(o: &OffspringSpec, field: &str) -> CResult<OffspringDistribution<f64>> {
    OffspringDistribution::new(o.probs.clone()).map_err(|e| ConfigError::new(field, e))
}

/// One branching random walk: offspring law, step law, starting site.
#[derive(Clone, Debug)]
pub struct Walk {
    pub mu: OffspringDistribution<f64>,
    pub q: StepDistribution<f64>,
    pub start: GroupElement,
}

/// A validated experiment.
#[derive(Clone, Debug)]
pub struct Plan {
    pub kind: Kind,
    pub seed: u64,
    pub replicas: u64,
    pub caps: Caps,
    pub experiment: Experiment,
}

#[derive(Clone, Debug)]
pub enum Experiment {
    Brw { walk: Walk, horizon: u32, gammas: Vec<f64>, ball_radius: u32 },
    Truncated { walk: Walk, horizon: u32, ns: Vec<u32>, mode: TruncationMode, eps: f64 },
    Competing { invasive: Walk, noninvasive: Walk, horizons: Vec<u32> },
    Adapted { invasive: Walk, noninvasive: Walk, horizon: u32, ns: Vec<u32>, gammas: Vec<f64>, window: u32 },
    Percolation { mu: OffspringDistribution<f64>, ps: Vec<f64>, depths: Vec<u32> },
    Spectral { q: StepDistribution<f64>, n_max: usize, checkpoints: Vec<usize> },
    Mtp { mu: OffspringDistribution<f64>, samples: u64, depth: u32, bias: RootBias, functions: Vec<TransportFn> },
}
