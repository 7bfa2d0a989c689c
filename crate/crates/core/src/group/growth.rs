use std::collections::HashSet;

use super::{GroupSpec, Step};
use crate::scalar::Real;

/// Exponential growth rate `lim (1/n) log |B(n)|`.
pub fn growth_rate<T: Real>(spec: &GroupSpec) -> T {
    match *spec {
        GroupSpec::IntegerLattice { .. } => T::zero(),
        GroupSpec::FreeGroup { rank } => T::from_count(2 * rank as usize - 1).ln(),
        GroupSpec::FreeProductC2 { factors } => T::from_count(factors as usize - 1).ln(),
    }
}

/// Sphere sizes `|S(r)|` for `r = 0..=n`, by breadth-first enumeration of
/// the Cayley graph.
pub fn sphere_sizes_by_enumeration(spec: &GroupSpec, n: u32) -> Vec<u64> {
    let mut seen = HashSet::new();
    let mut frontier = vec![spec.identity()];
    seen.insert(spec.identity());
    let mut sizes = vec![1u64];
    for _ in 0..n {
        let mut next = Vec::new();
        for x in &frontier {
            for g in 0..spec.num_generators() as u8 {
                let mut y = x.clone();
                spec.apply_step(&mut y, Step::generator(g));
                if seen.insert(y.clone()) {
                    next.push(y);
                }
            }
        }
        sizes.push(next.len() as u64);
        frontier = next;
    }
    sizes
}
