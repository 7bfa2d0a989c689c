//! `BRW_N`: at most `N` particles per site and generation.
//!
//! The auxiliary BRW is always simulated in full, with the same seed as a
//! plain run. Every node also carries an i.i.d. priority drawn from its own
//! key; ordering a cell `W_{n,x}` by priority is a uniform random
//! permutation of the cell, and keeping its first `min(N, |W|)` entries
//! realises the uniform choice `C(W, N)` for all `N` at once.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::brw::{run_brw, site_histogram, Caps, FamilyTree, Mark};
use crate::error::{BrwError, Result};
use crate::group::{spectral_radius, GroupElement, StepDistribution};
use crate::gw::OffspringDistribution;
use crate::scalar::Real;
use crate::seed::{role, Seed};
use crate::stats::Proportion;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationMode {
    /// Selection among all auxiliary particles of a cell; unselected
    /// lineages keep breeding in the auxiliary process.
    PaperExact,
    /// Selection among the live particles of a cell; dead particles have
    /// no offspring.
    Operational,
    /// Every particle at a site visited more than `N` times over the whole
    /// run is killed. Marks depend on the horizon: longer runs see more
    /// visits, hence more marks and smaller clusters.
    SiteResource,
}

impl TruncationMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TruncationMode::PaperExact => "paper_exact",
            TruncationMode::Operational => "operational",
            TruncationMode::SiteResource => "site_resource",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncationResult {
    pub n: u32,
    pub mode: TruncationMode,
    pub horizon: u32,
    pub seed: u64,
    pub root_cluster_size: usize,
    pub alive_at_horizon: bool,
    /// Root-cluster sizes per generation.
    pub alive_per_generation: Vec<usize>,
    pub aux_size: usize,
    pub cap_triggered: bool,
}

/// A marked auxiliary tree with its summary.
#[derive(Clone, Debug)]
pub struct TruncatedRun {
    pub tree: FamilyTree,
    pub result: TruncationResult,
}

/// Priority of a node within its cell.
#[inline]
pub fn priority(key: u64) -> u64 {
    Seed(key).derive(role::PRIORITY).0
}

/// Groups each generation of `tree` into cells `W_{n,x}`, each sorted by
/// priority.
fn cells(tree: &FamilyTree, g: u32) -> Vec<Vec<u32>> {
    let mut by_site: HashMap<&GroupElement, Vec<u32>> = HashMap::new();
    for i in tree.generation(g) {
        by_site.entry(tree.position(i)).or_default().push(i);
    }
    let mut out: Vec<Vec<u32>> = by_site.into_values().collect();
    for cell in &mut out {
        cell.sort_by_key(|&i| (priority(tree.node(i).key), i));
    }
    out
}

/// 0-based rank of every node within its cell.
pub fn cell_ranks(tree: &FamilyTree) -> Vec<u32> {
    let mut rank = vec![0u32; tree.len()];
    for g in 0..tree.num_generations() as u32 {
        for cell in cells(tree, g) {
            for (r, &i) in cell.iter().enumerate() {
                rank[i as usize] = r as u32;
            }
        }
    }
    rank
}

/// Per-node level such that, for every `N`, the node is open iff
/// `level < N`. Paper-exact: rank in cell. Site-resource: visits to the
/// node's site minus one.
fn levels(tree: &FamilyTree, mode: TruncationMode) -> Option<Vec<u32>> {
    match mode {
        TruncationMode::PaperExact => Some(cell_ranks(tree)),
        TruncationMode::SiteResource => {
            let h = site_histogram(tree);
            Some(tree.positions().iter().map(|p| h[p] - 1).collect())
        }
        TruncationMode::Operational => None,
    }
}

fn apply_level_marks(tree: &mut FamilyTree, level: &[u32], n: u32) {
    for (i, &l) in level.iter().enumerate() {
        tree.set_mark(i as u32, if l < n { Mark::Alive } else { Mark::Dead });
    }
}

/// Operational marks: generation by generation, the first `N` live
/// candidates of each cell by priority survive; nodes with a dead parent
/// are dead.
fn apply_operational_marks(tree: &mut FamilyTree, n: u32) {
    tree.clear_marks();
    for g in 0..tree.num_generations() as u32 {
        for cell in cells(tree, g) {
            let mut kept = 0;
            for i in cell {
                let node = *tree.node(i);
                let live_parent = node.parent == crate::brw::NO_PARENT || tree.node(node.parent).mark == Mark::Alive;
                if live_parent && kept < n {
                    kept += 1;
                } else {
                    tree.set_mark(i, Mark::Dead);
                }
            }
        }
    }
}

/// Marks `tree` in place for truncation level `n` under `mode`.
pub fn mark_truncation(tree: &mut FamilyTree, n: u32, mode: TruncationMode) {
    match levels(tree, mode) {
        Some(level) => apply_level_marks(tree, &level, n),
        None => apply_operational_marks(tree, n),
    }
}

fn summarise(tree: &FamilyTree, n: u32, mode: TruncationMode, seed: Seed) -> TruncationResult {
    let profile = tree.root_cluster_profile();
    TruncationResult {
        n,
        mode,
        horizon: tree.horizon(),
        seed: seed.0,
        root_cluster_size: profile.iter().sum(),
        alive_at_horizon: profile.len() == tree.horizon() as usize + 1 && profile.last().is_some_and(|&c| c > 0),
        alive_per_generation: profile,
        aux_size: tree.len(),
        cap_triggered: tree.truncated(),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn run_truncated<T: Real>(
    q: &StepDistribution<T>,
    mu: &OffspringDistribution<T>,
    start: &GroupElement,
    n: u32,
    mode: TruncationMode,
    horizon: u32,
    seed: Seed,
    caps: Caps,
) -> Result<TruncatedRun> {
    if n == 0 {
        return Err(BrwError::OutOfRange { name: "N", detail: "must be at least 1".into() });
    }
    if horizon == 0 {
        return Err(BrwError::OutOfRange { name: "horizon", detail: "must be at least 1".into() });
    }
    let mut tree = run_brw(q, mu, start, horizon, seed, caps)?;
    mark_truncation(&mut tree, n, mode);
    let result = summarise(&tree, n, mode, seed);
    Ok(TruncatedRun { tree, result })
}

/// All truncation levels of one auxiliary tree at once, for the modes in
/// which openness is monotone in `N`.
#[derive(Clone, Debug)]
pub struct CoupledTruncation {
    level: Vec<u32>,
    /// Maximum level along the path from the root; the node is in the root
    /// cluster iff this is below `N`.
    path_level: Vec<u32>,
    horizon_reached: bool,
    horizon_nodes: std::ops::Range<u32>,
}

impl CoupledTruncation {
    pub fn new(tree: &FamilyTree, mode: TruncationMode) -> Result<Self> {
        let level = levels(tree, mode).ok_or_else(|| {
            BrwError::Unsupported("operational truncation is not monotone in N and has no coupled form".into())
        })?;
        let mut path_level = level.clone();
        for (i, node) in tree.nodes().iter().enumerate().skip(1) {
            path_level[i] = path_level[i].max(path_level[node.parent as usize]);
        }
        let horizon_nodes = tree.generation(tree.horizon());
        Ok(Self { level, path_level, horizon_reached: !horizon_nodes.is_empty(), horizon_nodes })
    }

    /// Smallest `N` for which the root cluster reaches the horizon.
    pub fn survival_threshold(&self) -> Option<u32> {
        if !self.horizon_reached {
            return None;
        }
        self.horizon_nodes.clone().map(|i| self.path_level[i as usize] + 1).min()
    }

    pub fn alive_at_horizon(&self, n: u32) -> bool {
        self.survival_threshold().is_some_and(|t| n >= t)
    }

    pub fn cluster_size(&self, n: u32) -> usize {
        self.path_level.iter().filter(|&&l| l < n).count()
    }

    pub fn open(&self, i: u32, n: u32) -> bool {
        self.level[i as usize] < n
    }
}

/// One row of a survival sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: u32,
    pub alive: Proportion,
    pub mean_cluster_size: f64,
}

/// Bracket for the critical value: survival is certified (lower CI bound
/// above `eps`) at `certified_at` and not at `below`, the largest tested
/// value under it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CriticalBracket {
    pub below: Option<u32>,
    pub certified_at: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub mode: TruncationMode,
    pub horizon: u32,
    pub replicas: u64,
    pub rows: Vec<SweepRow>,
    /// Survival of the untruncated auxiliary BRW on the same seeds.
    pub plain: Proportion,
    pub critical: CriticalBracket,
    /// Node-by-node survivor-set containment failures between consecutive
    /// `N`; `None` for the operational mode.
    pub coupling_violations: Option<u64>,
    pub caps_triggered: u64,
    pub mrho: f64,
}

/// Default survival threshold for the critical-value estimate.
pub const DEFAULT_EPS: f64 = 0.01;

#[derive(Clone, Debug)]
struct ReplicaOutcome {
    alive: Vec<bool>,
    cluster: Vec<u64>,
    plain_alive: bool,
    violations: u64,
    capped: bool,
}

/// Survival curve over `ns` with common random numbers: replica `r` uses
/// seed `(master, cell, r)` for every `N`.
#[allow(clippy::too_many_arguments)]
pub fn survival_sweep<T: Real>(
    q: &StepDistribution<T>,
    mu: &OffspringDistribution<T>,
    start: &GroupElement,
    ns: &[u32],
    mode: TruncationMode,
    horizon: u32,
    replicas: u64,
    master: u64,
    cell: u64,
    caps: Caps,
    eps: f64,
) -> Result<SweepResult> {
    if ns.is_empty() || ns.contains(&0) {
        return Err(BrwError::OutOfRange { name: "N", detail: "need a nonempty list of positive values".into() });
    }
    if horizon == 0 {
        return Err(BrwError::OutOfRange { name: "horizon", detail: "must be at least 1".into() });
    }
    if replicas == 0 {
        return Err(BrwError::NoReplicas);
    }
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let rho = spectral_radius(q)?.value.as_f64();
    let mrho = mu.mean().as_f64() * rho;

    let outcomes: Vec<ReplicaOutcome> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<ReplicaOutcome> {
            let seed = Seed::replica(master, cell, r);
            let mut tree = run_brw(q, mu, start, horizon, seed, caps)?;
            let plain_alive = tree.reaches(horizon);
            let capped = tree.truncated();
            match CoupledTruncation::new(&tree, mode) {
                Ok(coupled) => {
                    let mut violations = 0;
                    let mut prev: Option<Vec<bool>> = None;
                    let mut alive = Vec::with_capacity(ns.len());
                    let mut cluster = Vec::with_capacity(ns.len());
                    for &n in &ns {
                        // independent route: mark, then extract the cluster by a forward pass
                        for i in 0..tree.len() as u32 {
                            tree.set_mark(i, if coupled.open(i, n) { Mark::Alive } else { Mark::Dead });
                        }
                        let inside = tree.root_cluster();
                        let size = inside.iter().filter(|&&b| b).count();
                        let reached = tree.generation(horizon).any(|i| inside[i as usize]);
                        if size != coupled.cluster_size(n) || reached != coupled.alive_at_horizon(n) {
                            violations += 1;
                        }
                        if let Some(p) = &prev {
                            violations += p.iter().zip(&inside).filter(|(a, b)| **a && !**b).count() as u64;
                        }
                        alive.push(reached);
                        cluster.push(size as u64);
                        prev = Some(inside);
                    }
                    Ok(ReplicaOutcome { alive, cluster, plain_alive, violations, capped })
                }
                Err(_) => {
                    let mut alive = Vec::with_capacity(ns.len());
                    let mut cluster = Vec::with_capacity(ns.len());
                    for &n in &ns {
                        apply_operational_marks(&mut tree, n);
                        let s = summarise(&tree, n, mode, seed);
                        alive.push(s.alive_at_horizon);
                        cluster.push(s.root_cluster_size as u64);
                    }
                    Ok(ReplicaOutcome { alive, cluster, plain_alive, violations: 0, capped })
                }
            }
        })
        .collect::<Result<_>>()?;

    let mut alive_counts = vec![0u64; ns.len()];
    let mut cluster_sums = vec![0u64; ns.len()];
    let (mut plain, mut violations, mut capped) = (0u64, 0u64, 0u64);
    for o in &outcomes {
        for j in 0..ns.len() {
            alive_counts[j] += o.alive[j] as u64;
            cluster_sums[j] += o.cluster[j];
        }
        plain += o.plain_alive as u64;
        violations += o.violations;
        capped += o.capped as u64;
    }
    let rows: Vec<SweepRow> = ns
        .iter()
        .enumerate()
        .map(|(j, &n)| SweepRow {
            n,
            alive: Proportion::wilson(alive_counts[j], replicas),
            mean_cluster_size: cluster_sums[j] as f64 / replicas as f64,
        })
        .collect();
    let certified = rows.iter().position(|r| r.alive.ci_low > eps);
    let critical = CriticalBracket {
        certified_at: certified.map(|j| rows[j].n),
        below: match certified {
            Some(0) => None,
            Some(j) => Some(rows[j - 1].n),
            None => rows.last().map(|r| r.n),
        },
    };
    Ok(SweepResult {
        mode,
        horizon,
        replicas,
        rows,
        plain: Proportion::wilson(plain, replicas),
        critical,
        coupling_violations: (mode != TruncationMode::Operational).then_some(violations),
        caps_triggered: capped,
        mrho,
    })
}

/// Outcome of comparing coupled paper-exact and operational runs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominanceReport {
    /// Paper-exact root cluster contained in the operational alive set.
    pub contained: bool,
    /// Some operational survivor is missing from the paper-exact cluster.
    pub strict: bool,
    /// Per generation: (paper-exact cluster size, operational alive count,
    /// containment violations).
    pub per_generation: Vec<(usize, usize, usize)>,
}

pub fn dominance_check(paper: &TruncatedRun, operational: &TruncatedRun) -> Result<DominanceReport> {
    let (a, b) = (&paper.result, &operational.result);
    if a.mode != TruncationMode::PaperExact || b.mode != TruncationMode::Operational {
        return Err(BrwError::CouplingMismatch("expected a paper-exact and an operational run".into()));
    }
    if a.seed != b.seed || a.n != b.n || a.horizon != b.horizon {
        return Err(BrwError::CouplingMismatch(format!(
            "seeds/N/horizon differ: ({}, {}, {}) vs ({}, {}, {})",
            a.seed, a.n, a.horizon, b.seed, b.n, b.horizon
        )));
    }
    let (ta, tb) = (&paper.tree, &operational.tree);
    if ta.len() != tb.len() || ta.nodes().iter().zip(tb.nodes()).any(|(x, y)| x.key != y.key) {
        return Err(BrwError::CouplingMismatch("auxiliary trees differ".into()));
    }
    let in_paper = ta.root_cluster();
    let in_op = tb.root_cluster();
    let mut per_generation = Vec::new();
    let (mut contained, mut strict) = (true, false);
    for g in 0..ta.num_generations() as u32 {
        let (mut pc, mut oc, mut bad) = (0, 0, 0);
        for i in ta.generation(g) {
            let (p, o) = (in_paper[i as usize], in_op[i as usize]);
            pc += p as usize;
            oc += o as usize;
            if p && !o {
                bad += 1;
            }
            if o && !p {
                strict = true;
            }
        }
        contained &= bad == 0;
        per_generation.push((pc, oc, bad));
    }
    Ok(DominanceReport { contained, strict, per_generation })
}
