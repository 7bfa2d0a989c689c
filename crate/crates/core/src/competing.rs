//! Invasive and noninvasive BRWs on a common base graph.
//!
//! The invasive process ignores everything. A noninvasive particle of
//! generation `n` is killed when some invasive particle of generation `n`
//! sits on the same site; the noninvasive process is its auxiliary BRW with
//! those particles closed, and survival means an infinite open root cluster.
//!
//! The multi-seeded variant starts an independent invasive copy at every
//! site of a window that the (thinned) noninvasive process visits `N`
//! times, and closes every noninvasive particle standing on a site any copy
//! ever visits.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::brw::{run_brw, run_brw_with, Caps, FamilyTree, Mark};
use crate::error::{BrwError, Result};
use crate::group::{spectral_radius, GroupElement, StepDistribution};
use crate::gw::{gamma_truncate, OffspringDistribution, ThinnedOffspring};
use crate::scalar::Real;
use crate::seed::{role, Seed};
use crate::stats::Proportion;

/// Offspring law, step law and starting site of one process.
#[derive(Clone, Debug)]
pub struct ProcessSpec<T: Real> {
    pub mu: OffspringDistribution<T>,
    pub q: StepDistribution<T>,
    pub start: GroupElement,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CompetingMode {
    Pair,
    Adapted { n: u32, gamma: f64, window: u32 },
}

#[derive(Clone, Debug)]
pub struct CompetingConfig<T: Real> {
    pub invasive: ProcessSpec<T>,
    /// Starts at the identity in the multi-seeded mode regardless of
    /// `start`.
    pub noninvasive: ProcessSpec<T>,
    pub horizon: u32,
    pub mode: CompetingMode,
    pub caps: Caps,
}

impl<T: Real> CompetingConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let g = self.noninvasive.q.group();
        if self.invasive.q.group() != g {
            return Err(BrwError::GroupMismatch {
                group: g.to_string(),
                detail: format!("invasive step law lives on {}", self.invasive.q.group()),
            });
        }
        for (who, p) in [("invasive", &self.invasive), ("noninvasive", &self.noninvasive)] {
            if !g.contains(&p.start) {
                return Err(BrwError::GroupMismatch { group: g.to_string(), detail: format!("{who} start {}", p.start) });
            }
        }
        if self.horizon == 0 {
            return Err(BrwError::OutOfRange { name: "horizon", detail: "must be at least 1".into() });
        }
        match self.mode {
            CompetingMode::Pair => {
                if self.invasive.start == self.noninvasive.start {
                    return Err(BrwError::OutOfRange {
                        name: "invasive.start",
                        detail: "must differ from the noninvasive start".into(),
                    });
                }
            }
            CompetingMode::Adapted { n, gamma, .. } => {
                if n == 0 {
                    return Err(BrwError::OutOfRange { name: "N", detail: "must be at least 1".into() });
                }
                if !(gamma > 0.0 && gamma <= 1.0) {
                    return Err(BrwError::OutOfRange { name: "gamma", detail: format!("{gamma} not in (0, 1]") });
                }
            }
        }
        Ok(())
    }
}

/// Outcome of one pair run at its horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CoexistenceResult {
    pub horizon: u32,
    pub invasive_alive: bool,
    pub noninvasive_alive: bool,
    pub cap_triggered: bool,
}

impl CoexistenceResult {
    pub fn joint(&self) -> bool {
        self.invasive_alive && self.noninvasive_alive
    }
}

#[derive(Clone, Debug)]
pub struct CompetingRun {
    pub invasive: FamilyTree,
    /// Auxiliary noninvasive tree with killed particles marked dead.
    pub noninvasive: FamilyTree,
    pub result: CoexistenceResult,
}

impl CompetingRun {
    /// Alive flags at an earlier time `t`; marks up to generation `t` do not
    /// depend on later generations.
    pub fn at(&self, t: u32) -> CoexistenceResult {
        let profile = self.noninvasive.root_cluster_profile();
        CoexistenceResult {
            horizon: t,
            invasive_alive: self.invasive.reaches(t),
            noninvasive_alive: profile.get(t as usize).is_some_and(|&c| c > 0),
            cap_triggered: self.result.cap_triggered,
        }
    }
}

/// Marks every node of `non` sharing its site with a node of the same
/// generation of `inv`.
fn apply_kill_rule(inv: &FamilyTree, non: &mut FamilyTree) {
    non.clear_marks();
    let last = inv.num_generations().min(non.num_generations()) as u32;
    for g in 0..last {
        let occupied: HashSet<&GroupElement> = inv.generation(g).map(|i| inv.position(i)).collect();
        let doomed: Vec<u32> = non.generation(g).filter(|&i| occupied.contains(non.position(i))).collect();
        for i in doomed {
            non.set_mark(i, Mark::Dead);
        }
    }
}

/// Number of nodes in the listed generations of `non` whose mark disagrees
/// with a direct pairwise comparison against `inv`.
pub fn kill_rule_violations(inv: &FamilyTree, non: &FamilyTree, generations: impl IntoIterator<Item = u32>) -> usize {
    let mut bad = 0;
    for g in generations {
        for v in non.generation(g) {
            let hit = inv.generation(g).any(|w| inv.position(w) == non.position(v));
            if hit != (non.node(v).mark == Mark::Dead) {
                bad += 1;
            }
        }
    }
    bad
}

pub fn run_competing<T: Real>(cfg: &CompetingConfig<T>, seed: Seed) -> Result<CompetingRun> {
    cfg.validate()?;
    if cfg.mode != CompetingMode::Pair {
        return Err(BrwError::Unsupported("run_competing needs pair mode; use run_adapted".into()));
    }
    let (inv, non) = (&cfg.invasive, &cfg.noninvasive);
    let invasive = run_brw(&inv.q, &inv.mu, &inv.start, cfg.horizon, seed.derive(role::INVASIVE), cfg.caps)?;
    let mut noninvasive = run_brw(&non.q, &non.mu, &non.start, cfg.horizon, seed.derive(role::NONINVASIVE), cfg.caps)?;
    apply_kill_rule(&invasive, &mut noninvasive);
    let mut run = CompetingRun {
        result: CoexistenceResult {
            horizon: cfg.horizon,
            invasive_alive: false,
            noninvasive_alive: false,
            cap_triggered: invasive.truncated() || noninvasive.truncated(),
        },
        invasive,
        noninvasive,
    };
    run.result = run.at(cfg.horizon);
    Ok(run)
}

/// Frequencies over replicas at one horizon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoexistenceEstimate {
    pub horizon: u32,
    pub replicas: u64,
    pub invasive: Proportion,
    pub noninvasive: Proportion,
    pub joint: Proportion,
    pub caps_triggered: u64,
}

pub fn estimate_coexistence(results: &[CoexistenceResult]) -> Result<CoexistenceEstimate> {
    let first = results.first().ok_or(BrwError::NoReplicas)?;
    let n = results.len() as u64;
    let count = |f: &dyn Fn(&CoexistenceResult) -> bool| results.iter().filter(|r| f(r)).count() as u64;
    Ok(CoexistenceEstimate {
        horizon: first.horizon,
        replicas: n,
        invasive: Proportion::wilson(count(&|r| r.invasive_alive), n),
        noninvasive: Proportion::wilson(count(&|r| r.noninvasive_alive), n),
        joint: Proportion::wilson(count(&|r| r.joint()), n),
        caps_triggered: count(&|r| r.cap_triggered),
    })
}

/// Coexistence estimates at every horizon in `horizons`, from a single run
/// per replica at the largest one.
pub fn coexistence_sweep<T: Real>(
    cfg: &CompetingConfig<T>,
    horizons: &[u32],
    replicas: u64,
    master: u64,
    cell: u64,
) -> Result<Vec<CoexistenceEstimate>> {
    if replicas == 0 {
        return Err(BrwError::NoReplicas);
    }
    let max = *horizons
        .iter()
        .max()
        .ok_or_else(|| BrwError::OutOfRange { name: "horizons", detail: "empty".into() })?;
    let mut cfg = cfg.clone();
    cfg.horizon = max;
    cfg.validate()?;
    let per_replica: Vec<Vec<CoexistenceResult>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let run = run_competing(&cfg, Seed::replica(master, cell, r))?;
            Ok(horizons.iter().map(|&t| run.at(t)).collect())
        })
        .collect::<Result<_>>()?;
    (0..horizons.len())
        .map(|j| estimate_coexistence(&per_replica.iter().map(|v| v[j]).collect::<Vec<_>>()))
        .collect()
}

/// Probability that a given generation-1 noninvasive particle is killed,
/// computed exactly: the particle sits at `y` with probability `q_n`, and
/// each of the `K ~ mu_i` invasive children lands on `y` independently with
/// probability `q_i(x^-1 y)`.
pub fn one_step_collision_probability<T: Real>(cfg: &CompetingConfig<T>) -> Result<T> {
    cfg.validate()?;
    let group = cfg.noninvasive.q.group();
    let (x, o) = (&cfg.invasive.start, &cfg.noninvasive.start);
    let mut total = T::zero();
    for (sn, wn) in cfg.noninvasive.q.outcomes() {
        let mut y = o.clone();
        group.apply_step(&mut y, sn);
        let mut hit = T::zero();
        for (si, wi) in cfg.invasive.q.outcomes() {
            let mut z = x.clone();
            group.apply_step(&mut z, si);
            if z == y {
                hit = hit + wi;
            }
        }
        total = total + wn * (T::one() - cfg.invasive.mu.generating_function(T::one() - hit));
    }
    Ok(total)
}

/// An invasive copy started by the multi-seeded construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeededCopy {
    pub site: GroupElement,
    /// Generation at which the visit count of `site` reached `N`.
    pub generation: u32,
    /// Noninvasive node whose arrival triggered the seeding.
    pub trigger: u32,
    pub copy_size: usize,
}

#[derive(Clone, Debug)]
pub struct AdaptedRun {
    pub noninvasive: FamilyTree,
    pub seeded: Vec<SeededCopy>,
    /// Distinct sites visited by the union of invasive copies.
    pub killer_sites: usize,
    pub root_dagger: bool,
    pub noninvasive_alive: bool,
    pub cap_triggered: bool,
    pub seeding_capped: bool,
}

pub fn run_adapted<T: Real>(cfg: &CompetingConfig<T>, seed: Seed) -> Result<AdaptedRun> {
    cfg.validate()?;
    let CompetingMode::Adapted { n, gamma, window } = cfg.mode else {
        return Err(BrwError::Unsupported("run_adapted needs adapted mode".into()));
    };
    let group = cfg.noninvasive.q.group();
    let o = group.identity();
    let thinned = ThinnedOffspring { base: &cfg.noninvasive.mu, gamma };
    let mut aux = run_brw_with(&cfg.noninvasive.q, &thinned, &o, cfg.horizon, seed.derive(role::NONINVASIVE), cfg.caps)?;
    let mut cap_triggered = aux.truncated();

    let mut multiplicity: HashMap<&GroupElement, u32> = HashMap::new();
    let mut triggers = Vec::new();
    let mut seeding_capped = false;
    'scan: for g in 0..aux.num_generations() as u32 {
        for i in aux.generation(g) {
            let site = aux.position(i);
            let c = multiplicity.entry(site).or_default();
            *c += 1;
            if *c == n && group.norm(site) <= window {
                if triggers.len() == cfg.caps.max_seeds {
                    seeding_capped = true;
                    break 'scan;
                }
                triggers.push((site.clone(), g, i));
            }
        }
    }

    let inv = &cfg.invasive;
    let copies: Vec<FamilyTree> = triggers
        .par_iter()
        .map(|(site, _, i)| {
            let key = Seed(aux.node(*i).key).derive(role::SEEDING);
            run_brw(&inv.q, &inv.mu, site, cfg.horizon, key.derive(role::INVASIVE), cfg.caps)
        })
        .collect::<Result<_>>()?;
    let mut killers: HashSet<&GroupElement> = HashSet::new();
    for c in &copies {
        cap_triggered |= c.truncated();
        killers.extend(c.positions());
    }
    let seeded = triggers
        .iter()
        .zip(&copies)
        .map(|((site, g, i), c)| SeededCopy { site: site.clone(), generation: *g, trigger: *i, copy_size: c.len() })
        .collect();
    let killer_sites = killers.len();
    let doomed: Vec<u32> = (0..aux.len() as u32).filter(|&i| killers.contains(aux.position(i))).collect();
    drop(killers);
    aux.clear_marks();
    for i in doomed {
        aux.set_mark(i, Mark::Dead);
    }
    let root_dagger = aux.node(0).mark == Mark::Dead;
    let noninvasive_alive = aux.root_cluster_profile().get(cfg.horizon as usize).is_some_and(|&c| c > 0);
    Ok(AdaptedRun {
        noninvasive: aux,
        seeded,
        killer_sites,
        root_dagger,
        noninvasive_alive,
        cap_triggered,
        seeding_capped,
    })
}

/// Replica summary of a multi-seeded run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AdaptedOutcome {
    pub root_dagger: bool,
    pub noninvasive_alive: bool,
    pub seeded: usize,
    pub cap_triggered: bool,
}

impl From<&AdaptedRun> for AdaptedOutcome {
    fn from(r: &AdaptedRun) -> Self {
        AdaptedOutcome {
            root_dagger: r.root_dagger,
            noninvasive_alive: r.noninvasive_alive,
            seeded: r.seeded.len(),
            cap_triggered: r.cap_triggered || r.seeding_capped,
        }
    }
}

/// Frequency of a closed root with its driver quantities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DaggerMarginal {
    pub dagger: Proportion,
    pub noninvasive_alive: Proportion,
    pub mean_seeded: f64,
    pub caps_triggered: u64,
    /// `m_i * rho_i`.
    pub m_rho_invasive: f64,
    /// Mean of the thinned noninvasive law.
    pub m_gamma: f64,
    /// Fewer than [`MIN_MARGINAL_REPLICAS`] runs went into the estimate.
    pub thin: bool,
}

/// Below this many replicas the marginal is reported but flagged as thin.
pub const MIN_MARGINAL_REPLICAS: usize = 100;

pub fn estimate_dagger_marginal<T: Real>(cfg: &CompetingConfig<T>, runs: &[AdaptedOutcome]) -> Result<DaggerMarginal> {
    if runs.is_empty() {
        return Err(BrwError::NoReplicas);
    }
    let CompetingMode::Adapted { gamma, .. } = cfg.mode else {
        return Err(BrwError::Unsupported("dagger marginal needs adapted mode".into()));
    };
    let n = runs.len() as u64;
    let rho = spectral_radius(&cfg.invasive.q)?.value.as_f64();
    Ok(DaggerMarginal {
        dagger: Proportion::wilson(runs.iter().filter(|r| r.root_dagger).count() as u64, n),
        noninvasive_alive: Proportion::wilson(runs.iter().filter(|r| r.noninvasive_alive).count() as u64, n),
        mean_seeded: runs.iter().map(|r| r.seeded as f64).sum::<f64>() / n as f64,
        caps_triggered: runs.iter().filter(|r| r.cap_triggered).count() as u64,
        m_rho_invasive: cfg.invasive.mu.mean().as_f64() * rho,
        m_gamma: gamma_truncate(&cfg.noninvasive.mu, T::lit(gamma))?.m_gamma.as_f64(),
        thin: runs.len() < MIN_MARGINAL_REPLICAS,
    })
}

/// Runs `replicas` multi-seeded replicas and aggregates them.
pub fn adapted_sweep<T: Real>(cfg: &CompetingConfig<T>, replicas: u64, master: u64, cell: u64) -> Result<DaggerMarginal> {
    if replicas == 0 {
        return Err(BrwError::NoReplicas);
    }
    let outcomes: Vec<AdaptedOutcome> = (0..replicas)
        .into_par_iter()
        .map(|r| run_adapted(cfg, Seed::replica(master, cell, r)).map(|run| AdaptedOutcome::from(&run)))
        .collect::<Result<_>>()?;
    estimate_dagger_marginal(cfg, &outcomes)
}
