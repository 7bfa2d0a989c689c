use std::collections::HashMap;

use serde::Serialize;

use super::tree::FamilyTree;
use crate::group::GroupElement;

/// Number of tree vertices sitting at `target`.
pub fn visits(tree: &FamilyTree, target: &GroupElement) -> usize {
    tree.positions().iter().filter(|p| *p == target).count()
}

/// Number of tree vertices in the ball `B(o, radius)` around the identity.
pub fn visits_in_ball(tree: &FamilyTree, radius: u32) -> usize {
    tree.positions().iter().filter(|p| p.length() <= radius).count()
}

/// Visit count of every site touched by the run.
pub fn site_histogram(tree: &FamilyTree) -> HashMap<GroupElement, u32> {
    let mut h = HashMap::new();
    for p in tree.positions() {
        *h.entry(p.clone()).or_insert(0) += 1;
    }
    h
}

/// Last exit time of the ball `B(o, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LastExit {
    /// Smallest `k` such that no vertex of generation `>= k` lies in the ball.
    pub value: u32,
    /// The last stored generation still meets the ball and the run was cut
    /// by the horizon or the node cap, so `value` is only a lower bound.
    pub censored: bool,
}

pub fn last_exit(tree: &FamilyTree, n: u32) -> LastExit {
    let mut last_in: Option<u32> = None;
    for (i, node) in tree.nodes().iter().enumerate() {
        if tree.position(i as u32).length() <= n {
            last_in = Some(last_in.map_or(node.generation, |g: u32| g.max(node.generation)));
        }
    }
    let value = last_in.map_or(0, |g| g + 1);
    let last_gen = tree.num_generations() as u32 - 1;
    let censored = !tree.extinct() && last_in == Some(last_gen);
    LastExit { value, censored }
}

/// Strong survival happens exactly when `m rho > 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    Strong,
    WeakOrExtinct { critical: bool },
}

/// Tolerance on `|m rho - 1|` for the critical flag.
pub const CRITICAL_TOL: f64 = 1e-12;

pub fn classify_survival_regime(m: f64, rho: f64) -> Regime {
    let prod = m * rho;
    if (prod - 1.0).abs() <= CRITICAL_TOL {
        Regime::WeakOrExtinct { critical: true }
    } else if prod > 1.0 {
        Regime::Strong
    } else {
        Regime::WeakOrExtinct { critical: false }
    }
}

/// One record of the optional per-generation trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerationTrace {
    pub generation: u32,
    pub size: usize,
    pub ball_occupancy: usize,
}

impl GenerationTrace {
    pub fn from_tree(tree: &FamilyTree, radius: u32) -> Vec<GenerationTrace> {
        (0..tree.num_generations() as u32)
            .map(|g| {
                let r = tree.generation(g);
                GenerationTrace {
                    generation: g,
                    size: r.len(),
                    ball_occupancy: r.filter(|&i| tree.position(i).length() <= radius).count(),
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brw::{run_brw, Caps};
    use crate::group::{GroupSpec, StepDistribution};
    use crate::gw::OffspringDistribution;
    use crate::seed::Seed;

    #[test]
    fn regime_examples() {
        assert_eq!(classify_survival_regime(1.2, 0.89282), Regime::Strong);
        assert_eq!(classify_survival_regime(1.05, 0.89282), Regime::WeakOrExtinct { critical: false });
        assert_eq!(classify_survival_regime(1.01, 1.0), Regime::Strong);
        assert_eq!(classify_survival_regime(2.0, 0.5), Regime::WeakOrExtinct { critical: true });
    }

    #[test]
    fn path_visits_count_returns() {
        let z1 = GroupSpec::integer_lattice(1).unwrap();
        let q = StepDistribution::<f64>::new(z1, 0.2, vec![0.4, 0.4]).unwrap();
        let mu = OffspringDistribution::<f64>::new(vec![0.0, 1.0]).unwrap();
        let t = run_brw(&q, &mu, &z1.identity(), 50, Seed(11), Caps::default()).unwrap();
        let mut x = 0i32;
        let mut returns = 0;
        for i in 1..t.len() as u32 {
            match t.node(i).step.generator_index() {
                Some(0) => x += 1,
                Some(1) => x -= 1,
                _ => {}
            }
            if x == 0 {
                returns += 1;
            }
        }
        assert_eq!(visits(&t, &z1.identity()), returns + 1);
        assert_eq!(site_histogram(&t).values().sum::<u32>() as usize, t.len());
    }

    #[test]
    fn last_exit_extinct_root() {
        let f2 = GroupSpec::free_group(2).unwrap();
        let q = StepDistribution::<f64>::lazy_uniform(f2, 0.2).unwrap();
        let mu = OffspringDistribution::<f64>::new(vec![1.0]).unwrap();
        let t = run_brw(&q, &mu, &f2.identity(), 10, Seed(1), Caps::default()).unwrap();
        for n in 0..5 {
            assert_eq!(last_exit(&t, n), LastExit { value: 1, censored: false });
        }
    }

    #[test]
    fn last_exit_censoring() {
        let f2 = GroupSpec::free_group(2).unwrap();
        let q = StepDistribution::<f64>::lazy_uniform(f2, 0.2).unwrap();
        let mu = OffspringDistribution::<f64>::new(vec![0.0, 1.0]).unwrap();
        let t = run_brw(&q, &mu, &f2.identity(), 5, Seed(1), Caps::default()).unwrap();
        // the ball of radius 5 contains the whole path
        assert_eq!(last_exit(&t, 5), LastExit { value: 6, censored: true });
    }

    #[test]
    fn generation_trace_sums() {
        let f2 = GroupSpec::free_group(2).unwrap();
        let q = StepDistribution::<f64>::lazy_uniform(f2, 0.2).unwrap();
        let mu = OffspringDistribution::<f64>::new(vec![0.2, 0.3, 0.5]).unwrap();
        let t = run_brw(&q, &mu, &f2.identity(), 8, Seed(2), Caps::default()).unwrap();
        let tr = GenerationTrace::from_tree(&t, 3);
        assert_eq!(tr.iter().map(|r| r.size).sum::<usize>(), t.len());
        assert_eq!(tr.iter().map(|r| r.ball_occupancy).sum::<usize>(), visits_in_ball(&t, 3));
    }
}
