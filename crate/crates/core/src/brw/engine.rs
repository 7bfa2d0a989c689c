use super::tree::{FamilyTree, Mark, Node, NO_PARENT};
use crate::error::{BrwError, Result};
use crate::group::{GroupElement, StepDistribution};
use crate::gw::{Branching, OffspringDistribution};
use crate::scalar::Real;
use crate::seed::{role, Seed};

/// Resource limits for a single run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Caps {
    pub max_nodes: usize,
    /// Invasive copies one multi-seeded run may start.
    #[serde(default = "default_max_seeds")]
    pub max_seeds: usize,
}

fn default_max_seeds() -> usize {
    10_000
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_nodes: 5_000_000, max_seeds: default_max_seeds() }
    }
}

/// Runs a BRW with offspring law `mu` and step law `q` from `start` for
/// `horizon` generations.
pub fn run_brw<T: Real>(
    q: &StepDistribution<T>,
    mu: &OffspringDistribution<T>,
    start: &GroupElement,
    horizon: u32,
    seed: Seed,
    caps: Caps,
) -> Result<FamilyTree> {
    run_brw_with(q, mu, start, horizon, seed, caps)
}

/// Generic form of [`run_brw`] over the branching rule.
///
/// Randomness is keyed by tree path: the root key comes from `seed`, child
/// `j` of a node with key `k` gets key `derive(k, j + 1)`, and a node's
/// offspring count, thinning uniform and incoming step are drawn from
/// separate streams of its own key. Two runs that share a seed therefore
/// agree on every node they both contain.
pub fn run_brw_with<T: Real, B: Branching>(
    q: &StepDistribution<T>,
    branching: &B,
    start: &GroupElement,
    horizon: u32,
    seed: Seed,
    caps: Caps,
) -> Result<FamilyTree> {
    let group = q.group();
    if !group.contains(start) {
        return Err(BrwError::GroupMismatch { group: group.to_string(), detail: format!("start {start:?}") });
    }
    if caps.max_nodes == 0 {
        return Err(BrwError::OutOfRange { name: "max_nodes", detail: "must be positive".into() });
    }
    let root_key = seed.derive(role::TREE).0;
    let mut tree = FamilyTree {
        group,
        nodes: vec![Node { parent: NO_PARENT, generation: 0, step: Default::default(), mark: Mark::Alive, key: root_key }],
        positions: vec![start.clone()],
        generations: vec![std::ops::Range { start: 0, end: 1 }],
        horizon,
        truncated: false,
        extinct: false,
    };
    for g in 0..horizon {
        let parents = tree.generations[g as usize].clone();
        let begin = tree.nodes.len() as u32;
        for p in parents {
            let key = tree.nodes[p as usize].key;
            let node_seed = Seed(key);
            let k = branching.children(&mut node_seed.derive(role::OFFSPRING).rng(), node_seed.derive(role::THINNING).unit());
            for j in 0..k {
                let child_key = node_seed.derive(j as u64 + 1).0;
                let step = q.sample(&mut Seed(child_key).derive(role::STEP).rng());
                let mut pos = tree.positions[p as usize].clone();
                group.apply_step(&mut pos, step);
                tree.nodes.push(Node { parent: p, generation: g + 1, step, mark: Mark::Alive, key: child_key });
                tree.positions.push(pos);
            }
            if tree.nodes.len() > caps.max_nodes {
                tree.nodes.truncate(begin as usize);
                tree.positions.truncate(begin as usize);
                tree.truncated = true;
                return Ok(tree);
            }
        }
        let end = tree.nodes.len() as u32;
        if end == begin {
            tree.extinct = true;
            break;
        }
        tree.generations.push(begin..end);
    }
    Ok(tree)
}
