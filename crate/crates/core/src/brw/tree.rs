use std::ops::Range;

use serde::Serialize;

use crate::group::{GroupElement, GroupSpec, Step};

/// Parent index of the root.
pub const NO_PARENT: u32 = u32::MAX;

/// Site-percolation mark of a family-tree vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize)]
pub enum Mark {
    #[default]
    Alive,
    Dead,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Node {
    pub parent: u32,
    pub generation: u32,
    /// Label `X_v` of the edge from the parent.
    pub step: Step,
    pub mark: Mark,
    /// Path-derived key; all randomness attached to the node is drawn from it.
    pub key: u64,
}

/// Append-only arena of a BRW family tree. Nodes are stored generation by
/// generation and the children of a node are contiguous, in parent order.
#[derive(Clone, Debug)]
pub struct FamilyTree {
    pub(crate) group: GroupSpec,
    pub(crate) nodes: Vec<Node>,
    pub(crate) positions: Vec<GroupElement>,
    pub(crate) generations: Vec<Range<u32>>,
    pub(crate) horizon: u32,
    pub(crate) truncated: bool,
    pub(crate) extinct: bool,
}

impl FamilyTree {
    pub fn group(&self) -> GroupSpec {
        self.group
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// The node cap stopped the run before the horizon.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Some generation before the horizon was empty.
    pub fn extinct(&self) -> bool {
        self.extinct
    }

    pub fn node(&self, i: u32) -> &Node {
        &self.nodes[i as usize]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn position(&self, i: u32) -> &GroupElement {
        &self.positions[i as usize]
    }

    pub fn positions(&self) -> &[GroupElement] {
        &self.positions
    }

    pub fn root_position(&self) -> &GroupElement {
        &self.positions[0]
    }

    /// Number of nonempty generations stored.
    pub fn num_generations(&self) -> usize {
        self.generations.len()
    }

    /// Node indices of generation `g` (empty past extinction or the cap).
    pub fn generation(&self, g: u32) -> Range<u32> {
        self.generations.get(g as usize).cloned().unwrap_or(0..0)
    }

    pub fn generation_sizes(&self) -> Vec<usize> {
        self.generations.iter().map(|r| r.len()).collect()
    }

    /// At least one particle in generation `g`.
    pub fn reaches(&self, g: u32) -> bool {
        !self.generation(g).is_empty()
    }

    /// Children ranges of every node of generation `g`, recovered by a scan
    /// of generation `g + 1`.
    pub fn children_ranges(&self, g: u32) -> Vec<Range<u32>> {
        let parents = self.generation(g);
        let kids = self.generation(g + 1);
        let mut out = Vec::with_capacity(parents.len());
        let mut c = kids.start;
        for p in parents {
            let start = c;
            while c < kids.end && self.nodes[c as usize].parent == p {
                c += 1;
            }
            out.push(start..c);
        }
        out
    }

    pub fn marks(&self) -> impl Iterator<Item = Mark> + '_ {
        self.nodes.iter().map(|n| n.mark)
    }

    pub fn set_mark(&mut self, i: u32, mark: Mark) {
        self.nodes[i as usize].mark = mark;
    }

    pub fn clear_marks(&mut self) {
        self.nodes.iter_mut().for_each(|n| n.mark = Mark::Alive);
    }

    pub fn dead_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.mark == Mark::Dead).count()
    }

    /// Membership in the open component of the root. Parents precede
    /// children, so a single forward pass suffices.
    pub fn root_cluster(&self) -> Vec<bool> {
        let mut inside = vec![false; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            inside[i] = n.mark == Mark::Alive && (n.parent == NO_PARENT || inside[n.parent as usize]);
        }
        inside
    }

    /// Per-generation sizes of the root cluster.
    pub fn root_cluster_profile(&self) -> Vec<usize> {
        let inside = self.root_cluster();
        self.generations.iter().map(|r| r.clone().filter(|&i| inside[i as usize]).count()).collect()
    }

    /// Steps on the geodesic from the root to `i`, root side first.
    pub fn path_steps(&self, mut i: u32) -> Vec<Step> {
        let mut steps = Vec::new();
        while self.nodes[i as usize].parent != NO_PARENT {
            steps.push(self.nodes[i as usize].step);
            i = self.nodes[i as usize].parent;
        }
        steps.reverse();
        steps
    }

    /// `S_v` recomputed from the root position and the edge labels.
    pub fn recompute_position(&self, i: u32) -> GroupElement {
        let mut x = self.positions[0].clone();
        for s in self.path_steps(i) {
            self.group.apply_step(&mut x, s);
        }
        x
    }
}
