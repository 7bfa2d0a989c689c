use std::collections::VecDeque;

use rand::Rng;

use crate::brw::{FamilyTree, Mark, NO_PARENT};
use crate::group::{Step, StepDistribution};
use crate::gw::{ugw_root_law, OffspringDistribution};
use crate::scalar::Real;

/// Finite rooted tree with explicit child lists, a site mark per vertex
/// and optional labels on the edges from parents. Vertex 0 is the root and
/// parents precede children.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedTree {
    parent: Vec<u32>,
    children: Vec<Vec<u32>>,
    depth: Vec<u32>,
    marks: Vec<Mark>,
    labels: Option<Vec<Step>>,
    max_depth: u32,
    censored: bool,
}

impl MarkedTree {
    /// A single open root.
    pub fn root() -> Self {
        MarkedTree {
            parent: vec![NO_PARENT],
            children: vec![Vec::new()],
            depth: vec![0],
            marks: vec![Mark::Alive],
            labels: None,
            max_depth: 0,
            censored: false,
        }
    }

    /// The tree with no vertices, produced when the root is closed.
    pub fn empty() -> Self {
        MarkedTree {
            parent: Vec::new(),
            children: Vec::new(),
            depth: Vec::new(),
            marks: Vec::new(),
            labels: None,
            max_depth: 0,
            censored: false,
        }
    }

    fn with_labels() -> Self {
        let mut t = Self::root();
        t.labels = Some(vec![Step::STAY]);
        t
    }

    pub fn add_child(&mut self, parent: u32, label: Option<Step>) -> u32 {
        let id = self.parent.len() as u32;
        let d = self.depth[parent as usize] + 1;
        self.parent.push(parent);
        self.children.push(Vec::new());
        self.children[parent as usize].push(id);
        self.depth.push(d);
        self.marks.push(Mark::Alive);
        if let Some(l) = &mut self.labels {
            l.push(label.unwrap_or(Step::STAY));
        }
        self.max_depth = self.max_depth.max(d);
        id
    }

    /// Ball of radius `radius` around a vertex of the `degree`-regular tree.
    pub fn regular_ball(degree: usize, radius: u32) -> Self {
        let mut t = Self::root();
        let mut layer = vec![0u32];
        for r in 0..radius {
            let mut next = Vec::new();
            for &v in &layer {
                let k = if r == 0 { degree } else { degree.saturating_sub(1) };
                for _ in 0..k {
                    next.push(t.add_child(v, None));
                }
            }
            layer = next;
        }
        t.max_depth = radius;
        t.censored = !layer.is_empty() && degree > 1;
        t
    }

    /// A path of `len` vertices rooted at one end.
    pub fn path(len: usize) -> Self {
        let mut t = Self::root();
        for v in 1..len {
            t.add_child(v as u32 - 1, None);
        }
        t
    }

    /// Family tree of a BRW with its marks and step labels.
    pub fn from_family_tree(tree: &FamilyTree) -> Self {
        let mut t = Self::with_labels();
        t.marks[0] = tree.node(0).mark;
        for (i, node) in tree.nodes().iter().enumerate().skip(1) {
            let id = t.add_child(node.parent, Some(node.step));
            debug_assert_eq!(id as usize, i);
            t.marks[i] = node.mark;
        }
        t.max_depth = tree.horizon();
        t.censored = tree.reaches(tree.horizon()) || tree.truncated();
        t
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, v: u32) -> Option<u32> {
        let p = self.parent[v as usize];
        (p != NO_PARENT).then_some(p)
    }

    pub fn children(&self, v: u32) -> &[u32] {
        &self.children[v as usize]
    }

    pub fn depth(&self, v: u32) -> u32 {
        self.depth[v as usize]
    }

    /// Graph degree: children plus the parent edge.
    pub fn degree(&self, v: u32) -> usize {
        self.children[v as usize].len() + (v != 0) as usize
    }

    pub fn max_degree(&self) -> usize {
        (0..self.len() as u32).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn neighbours(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.parent(v).into_iter().chain(self.children(v).iter().copied())
    }

    pub fn mark(&self, v: u32) -> Mark {
        self.marks[v as usize]
    }

    pub fn set_mark(&mut self, v: u32, m: Mark) {
        self.marks[v as usize] = m;
    }

    pub fn marks(&self) -> &[Mark] {
        &self.marks
    }

    pub fn label(&self, v: u32) -> Option<Step> {
        self.labels.as_ref().map(|l| l[v as usize])
    }

    pub fn has_labels(&self) -> bool {
        self.labels.is_some()
    }

    /// Depth at which sampling stopped.
    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    /// Vertices at `max_depth` may have children that were not sampled.
    pub fn censored(&self) -> bool {
        self.censored
    }

    /// Degree is exact for every vertex above the sampling depth.
    pub fn degree_known(&self, v: u32) -> bool {
        !self.censored || self.depth(v) < self.max_depth
    }

    pub fn vertices_at_depth(&self, d: u32) -> impl Iterator<Item = u32> + '_ {
        (0..self.len() as u32).filter(move |&v| self.depth[v as usize] == d)
    }
}

/// The open component of the root and where its vertices came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootCluster {
    pub tree: MarkedTree,
    /// `original[i]` is the vertex of the input tree that became `i`.
    pub original: Vec<u32>,
}

impl RootCluster {
    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }
}

/// Connected open component of the root, found by breadth-first search.
pub fn induced_root_cluster(tree: &MarkedTree) -> RootCluster {
    if tree.is_empty() || tree.mark(0) == Mark::Dead {
        return RootCluster { tree: MarkedTree::empty(), original: Vec::new() };
    }
    let mut out = if tree.has_labels() { MarkedTree::with_labels() } else { MarkedTree::root() };
    let mut original = vec![0u32];
    let mut queue = VecDeque::from([(0u32, 0u32)]);
    while let Some((v, image)) = queue.pop_front() {
        for &c in tree.children(v) {
            if tree.mark(c) == Mark::Alive {
                let id = out.add_child(image, tree.label(c));
                original.push(c);
                queue.push_back((c, id));
            }
        }
    }
    out.max_depth = tree.max_depth;
    out.censored = tree.censored && original.iter().any(|&v| tree.depth(v) == tree.max_depth);
    RootCluster { tree: out, original }
}

/// Offspring at the root and elsewhere.
fn grow<R: Rng + ?Sized, T: Real>(
    root_children: usize,
    mu: &OffspringDistribution<T>,
    q: Option<&StepDistribution<T>>,
    depth: u32,
    rng: &mut R,
) -> MarkedTree {
    let mut t = if q.is_some() { MarkedTree::with_labels() } else { MarkedTree::root() };
    let mut layer = vec![0u32];
    for d in 0..depth {
        let mut next = Vec::new();
        for &v in &layer {
            let k = if d == 0 { root_children } else { mu.sample(rng) };
            for _ in 0..k {
                let label = q.map(|q| q.sample(rng));
                next.push(t.add_child(v, label));
            }
        }
        if next.is_empty() {
            layer = next;
            break;
        }
        layer = next;
    }
    t.max_depth = depth;
    t.censored = !layer.is_empty();
    t
}

/// Galton-Watson tree: every vertex, the root included, has `k ~ mu`
/// children.
pub fn sample_gw<T: Real, R: Rng + ?Sized>(mu: &OffspringDistribution<T>, depth: u32, rng: &mut R) -> MarkedTree {
    let k = if depth == 0 { 0 } else { mu.sample(rng) };
    grow(k, mu, None, depth, rng)
}

/// Unimodular Galton-Watson tree: the root has degree `j` with probability
/// proportional to `mu_{j-1} / j`, every other vertex has `k ~ mu`
/// children (degree `k + 1`).
pub fn sample_ugw<T: Real, R: Rng + ?Sized>(mu: &OffspringDistribution<T>, depth: u32, rng: &mut R) -> MarkedTree {
    let k = if depth == 0 { 0 } else { ugw_root_law(mu).sample(rng) };
    grow(k, mu, None, depth, rng)
}

/// [`sample_ugw`] with i.i.d. edge labels drawn from `q`.
pub fn sample_ugw_labeled<T: Real, R: Rng + ?Sized>(
    mu: &OffspringDistribution<T>,
    q: &StepDistribution<T>,
    depth: u32,
    rng: &mut R,
) -> MarkedTree {
    let k = if depth == 0 { 0 } else { ugw_root_law(mu).sample(rng) };
    grow(k, mu, Some(q), depth, rng)
}

/// Closes every vertex independently with probability `1 - p`.
pub fn bernoulli_site_percolation<R: Rng + ?Sized>(tree: &MarkedTree, p: f64, rng: &mut R) -> MarkedTree {
    let mut out = tree.clone();
    for v in 0..out.len() as u32 {
        out.set_mark(v, if rng.random::<f64>() < p { Mark::Alive } else { Mark::Dead });
    }
    out
}
