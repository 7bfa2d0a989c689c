use serde::Serialize;

use super::tree::MarkedTree;

/// Default number of subsets the exhaustive search may visit.
pub const DEFAULT_BUDGET: u64 = 2_000_000;

/// A ratio `|∂S| / |S|` kept as a pair of integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Ratio {
    pub boundary: u64,
    pub size: u64,
}

impl Ratio {
    pub fn value(&self) -> f64 {
        self.boundary as f64 / self.size as f64
    }

    fn less_than(&self, other: &Ratio) -> bool {
        (self.boundary as u128) * (other.size as u128) < (other.boundary as u128) * (self.size as u128)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsoReport {
    /// Smallest ratio found; an upper bound on the anchored constant.
    pub upper_bound: Ratio,
    /// Smallest ratio among sets of at most `max_subset` vertices.
    pub subset_bound: Ratio,
    /// Root-containing connected set attaining it.
    pub witness: Vec<u32>,
    /// Every connected root-containing set up to `max_subset` was examined.
    pub exhaustive: bool,
    pub subsets_examined: u64,
    /// Ratios of the balls `B(o, r)` whose boundary lies inside the tree.
    pub balls: Vec<(u32, Ratio)>,
}

/// Vertices whose full neighbourhood is present, so boundaries are exact.
fn usable(t: &MarkedTree, v: u32) -> bool {
    t.degree_known(v)
}

/// For a connected root-containing `S` in a tree every boundary vertex has
/// exactly one neighbour in `S`, so `|∂S| = sum_S children - |S| + 1`.
fn boundary_of(children_sum: u64, size: u64) -> u64 {
    children_sum + 1 - size
}

struct Search<'a> {
    t: &'a MarkedTree,
    max_subset: usize,
    budget: u64,
    examined: u64,
    best: Ratio,
    best_set: Vec<u32>,
    current: Vec<u32>,
    aborted: bool,
}

impl Search<'_> {
    fn visit(&mut self, frontier: &[u32], children_sum: u64) {
        self.examined += 1;
        let r = Ratio { boundary: boundary_of(children_sum, self.current.len() as u64), size: self.current.len() as u64 };
        if r.less_than(&self.best) {
            self.best = r;
            self.best_set = self.current.clone();
        }
        if self.current.len() == self.max_subset {
            return;
        }
        for i in 0..frontier.len() {
            if self.examined >= self.budget {
                self.aborted = true;
                return;
            }
            let v = frontier[i];
            let mut next: Vec<u32> = frontier[i + 1..].to_vec();
            next.extend(self.t.children(v).iter().copied().filter(|&c| usable(self.t, c)));
            self.current.push(v);
            self.visit(&next, children_sum + self.t.children(v).len() as u64);
            self.current.pop();
            if self.aborted {
                return;
            }
        }
    }
}

fn greedy(t: &MarkedTree, max_subset: usize) -> (Ratio, Vec<u32>) {
    let mut set = vec![0u32];
    let mut sum = t.children(0).len() as u64;
    let mut frontier: Vec<u32> = t.children(0).iter().copied().filter(|&c| usable(t, c)).collect();
    let mut best = (Ratio { boundary: boundary_of(sum, 1), size: 1 }, set.clone());
    while set.len() < max_subset && !frontier.is_empty() {
        // add the vertex with most children: it lowers the boundary count most
        let (i, _) = frontier.iter().enumerate().max_by_key(|(_, &v)| (t.children(v).len(), std::cmp::Reverse(v))).unwrap();
        let v = frontier.swap_remove(i);
        set.push(v);
        sum += t.children(v).len() as u64;
        frontier.extend(t.children(v).iter().copied().filter(|&c| usable(t, c)));
        let r = Ratio { boundary: boundary_of(sum, set.len() as u64), size: set.len() as u64 };
        if r.less_than(&best.0) {
            best = (r, set.clone());
        }
    }
    best
}

/// Upper bound on `inf |∂S| / |S|` over finite connected sets containing the
/// root, from sets of at most `max_subset` vertices. Searches exhaustively
/// within `budget` subsets and falls back to greedy growth otherwise.
pub fn anchored_iso(t: &MarkedTree, max_subset: usize, budget: u64) -> IsoReport {
    assert!(!t.is_empty(), "anchored isoperimetry of an empty tree");
    let max_subset = max_subset.max(1);
    let root_ok = usable(t, 0);
    let mut balls = Vec::new();
    let (mut size, mut sum) = (0u64, 0u64);
    for r in 0..=t.max_depth() {
        let layer: Vec<u32> = t.vertices_at_depth(r).collect();
        if layer.is_empty() || !layer.iter().all(|&v| usable(t, v)) {
            break;
        }
        size += layer.len() as u64;
        sum += layer.iter().map(|&v| t.children(v).len() as u64).sum::<u64>();
        balls.push((r, Ratio { boundary: boundary_of(sum, size), size }));
    }
    if !root_ok {
        return IsoReport {
            upper_bound: Ratio { boundary: t.degree(0) as u64, size: 1 },
            subset_bound: Ratio { boundary: t.degree(0) as u64, size: 1 },
            witness: vec![0],
            exhaustive: false,
            subsets_examined: 0,
            balls,
        };
    }
    let mut s = Search {
        t,
        max_subset,
        budget,
        examined: 0,
        best: Ratio { boundary: u64::MAX / 2, size: 1 },
        best_set: Vec::new(),
        current: vec![0],
        aborted: false,
    };
    let frontier: Vec<u32> = t.children(0).iter().copied().filter(|&c| usable(t, c)).collect();
    s.visit(&frontier, t.children(0).len() as u64);
    let (mut best, mut witness, exhaustive) = (s.best, s.best_set, !s.aborted);
    if !exhaustive {
        let (g, set) = greedy(t, max_subset);
        if g.less_than(&best) {
            best = g;
            witness = set;
        }
    }
    let subset_bound = best;
    for &(r, b) in &balls {
        if b.less_than(&best) {
            best = b;
            witness = (0..t.len() as u32).filter(|&v| t.depth(v) <= r).collect();
        }
    }
    IsoReport { upper_bound: best, subset_bound, witness, exhaustive, subsets_examined: s.examined, balls }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gw::OffspringDistribution;
    use crate::percolation::sample_gw;
    use crate::seed::Seed;

    #[test]
    fn root_alone_in_the_cubic_tree() {
        let t = MarkedTree::regular_ball(3, 1);
        let rep = anchored_iso(&t, 1, DEFAULT_BUDGET);
        assert_eq!(rep.upper_bound, Ratio { boundary: 3, size: 1 });
        assert_eq!(rep.witness, vec![0]);
        assert!(rep.exhaustive);
    }

    #[test]
    fn balls_of_the_cubic_tree() {
        let t = MarkedTree::regular_ball(3, 7);
        let rep = anchored_iso(&t, 1, DEFAULT_BUDGET);
        for &(r, b) in &rep.balls {
            let p = 1u64 << r;
            assert_eq!(b.boundary * (1 + 3 * (p - 1)), 3 * p * b.size, "r = {r}");
        }
        let vals: Vec<f64> = rep.balls.iter().map(|(_, b)| b.value()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        assert!(vals.iter().all(|&v| v > 1.0));
        assert!(vals.last().unwrap() - 1.0 < 0.02);
    }

    #[test]
    fn exhaustive_matches_brute_force_count() {
        // each depth-1 vertex is absent or present with any subset of its two
        // leaves: 5 choices per branch, 125 root-containing subtrees
        let t = MarkedTree::regular_ball(3, 3);
        // same shape without the censoring flag, so the leaves are usable
        let small = induced(&MarkedTree::regular_ball(3, 2));
        let rep = anchored_iso(&small, 100, DEFAULT_BUDGET);
        assert_eq!(rep.subsets_examined, 125);
        assert!(rep.exhaustive);
        let rep = anchored_iso(&t, 4, DEFAULT_BUDGET);
        assert!(rep.exhaustive);
        // connected sets of size 4 containing the root in the cubic tree have ratio 6/4
        assert_eq!(rep.subset_bound.value(), 1.5);
        assert_eq!(rep.upper_bound, Ratio { boundary: 12, size: 10 });
    }

    fn induced(t: &MarkedTree) -> MarkedTree {
        let mut out = MarkedTree::root();
        for v in 1..t.len() as u32 {
            out.add_child(t.parent(v).unwrap(), None);
        }
        out
    }

    #[test]
    fn path_ratio_vanishes() {
        let mu = OffspringDistribution::<f64>::new(vec![0.0, 1.0]).unwrap();
        let t = sample_gw(&mu, 200, &mut Seed(0).rng());
        let rep = anchored_iso(&t, 50, DEFAULT_BUDGET);
        assert_eq!(rep.subsets_examined, 50);
        assert_eq!(rep.subset_bound, Ratio { boundary: 1, size: 50 });
        assert_eq!(rep.balls.last().unwrap().1, Ratio { boundary: 1, size: 200 });
        let rep = anchored_iso(&t, 150, 10);
        assert!(!rep.exhaustive);
        assert_eq!(rep.subset_bound, Ratio { boundary: 1, size: 150 });
    }
}
