use rayon::prelude::*;
use serde::Serialize;

use crate::error::{BrwError, Result};
use crate::gw::OffspringDistribution;
use crate::scalar::Real;
use crate::seed::{role, Seed};
use crate::stats::Proportion;

/// Extinction data of the root cluster under independent site thinning.
///
/// Each vertex is kept (open) with probability `p`. Given an open root, the
/// open children of a vertex form `Bin(k, p)` with `k ~ mu`, whose
/// generating function is `F(1 - p + p s)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThinningOracle<T> {
    pub p: T,
    /// Smallest fixed point of `s -> F(1 - p + p s)` in `[0, 1]`.
    pub q_star: T,
    pub thinned_mean: T,
}

impl<T: Real> ThinningOracle<T> {
    /// `P(root open and its cluster is infinite) = p (1 - q*)`.
    pub fn survival(&self) -> T {
        self.p * (T::one() - self.q_star)
    }

    /// `1 - q*`: survival given the root is open.
    pub fn conditional_survival(&self) -> T {
        T::one() - self.q_star
    }
}

/// Convergence target of the fixed-point iteration.
pub const FIXED_POINT_TOL: f64 = 1e-12;

pub fn thinning_oracle<T: Real>(mu: &OffspringDistribution<T>, p: T) -> Result<ThinningOracle<T>> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(BrwError::OutOfRange { name: "p", detail: format!("{p} not in [0, 1]") });
    }
    Ok(ThinningOracle { p, q_star: thinned_extinction(mu, p), thinned_mean: p * mu.mean() })
}

/// Smallest fixed point of `G(s) = F(1 - p + p s)`.
///
/// When the thinned law has mean at most one the answer is 1, except for
/// the degenerate one-child law (`G(s) = s`) whose smallest fixed point
/// is 0. Otherwise the monotone iteration from 0 converges geometrically.
pub fn thinned_extinction<T: Real>(mu: &OffspringDistribution<T>, p: T) -> T {
    let g = |s: T| mu.generating_function(T::one() - p + p * s);
    let tol = T::lit(FIXED_POINT_TOL);
    if p * mu.mean() <= T::one() {
        // G(s) = s for all s exactly when the thinned law is a point mass at 1
        let degenerate = p == T::one() && mu.prob(1) == T::one();
        return if degenerate { T::zero() } else { T::one() };
    }
    let mut s = T::zero();
    for _ in 0..1_000_000 {
        let next = g(s);
        if (next - s).abs() <= tol * T::lit(1e-3) {
            return next;
        }
        s = next;
    }
    s
}

/// `e_L = P(no open path from an open root to depth L)`:
/// `e_0 = 0`, `e_L = G(e_{L-1})`.
pub fn depth_extinction<T: Real>(mu: &OffspringDistribution<T>, p: T, depth: u32) -> T {
    let mut e = T::zero();
    for _ in 0..depth {
        e = mu.generating_function(T::one() - p + p * e);
    }
    e
}

/// Root-cluster survival to a fixed depth under independent site thinning.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepthSurvival {
    pub p: f64,
    pub depth: u32,
    /// Open path from an open root to depth `depth`.
    pub conditional: Proportion,
    /// Root open and such a path exists.
    pub unconditional: Proportion,
    /// `1 - e_L`.
    pub oracle_conditional: f64,
    /// `p (1 - e_L)`.
    pub oracle_unconditional: f64,
    /// `p (1 - q*)`, the limit in `L`.
    pub oracle_limit: f64,
}

/// Searches the GW tree below an open root depth-first, drawing each
/// vertex's offspring and mark from its path key only when it is reached,
/// and stops at the first open vertex of depth `depth`.
fn reaches_depth<T: Real>(mu: &OffspringDistribution<T>, p: f64, depth: u32, root: Seed) -> bool {
    let mut stack = vec![(root.0, 0u32)];
    while let Some((key, d)) = stack.pop() {
        if d == depth {
            return true;
        }
        let s = Seed(key);
        let k = mu.sample(&mut s.derive(role::OFFSPRING).rng());
        for j in (0..k).rev() {
            let child = s.derive(j as u64 + 1);
            if child.derive(role::THINNING).unit() < p {
                stack.push((child.0, d + 1));
            }
        }
    }
    false
}

pub fn depth_survival<T: Real>(
    mu: &OffspringDistribution<T>,
    p: f64,
    depth: u32,
    replicas: u64,
    master: u64,
    cell: u64,
) -> Result<DepthSurvival> {
    if !(0.0..=1.0).contains(&p) {
        return Err(BrwError::OutOfRange { name: "p", detail: format!("{p} not in [0, 1]") });
    }
    if replicas == 0 {
        return Err(BrwError::NoReplicas);
    }
    let (cond, uncond) = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let seed = Seed::replica(master, cell, r);
            let root_open = seed.derive(role::THINNING).unit() < p;
            let reach = reaches_depth(mu, p, depth, seed.derive(role::TREE));
            (reach as u64, (reach && root_open) as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let e = depth_extinction(mu, T::lit(p), depth).as_f64();
    let q_star = thinned_extinction(mu, T::lit(p)).as_f64();
    Ok(DepthSurvival {
        p,
        depth,
        conditional: Proportion::wilson(cond, replicas),
        unconditional: Proportion::wilson(uncond, replicas),
        oracle_conditional: 1.0 - e,
        oracle_unconditional: p * (1.0 - e),
        oracle_limit: p * (1.0 - q_star),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_tree_quadratic_root() {
        let mu = OffspringDistribution::<f64>::new(vec![0.0, 0.0, 1.0]).unwrap();
        let o = thinning_oracle(&mu, 0.9).unwrap();
        // q = (0.1 + 0.9 q)^2  =>  0.81 q^2 - 0.82 q + 0.01 = 0, smaller root
        let closed = (0.82 - (0.82f64 * 0.82 - 4.0 * 0.81 * 0.01).sqrt()) / (2.0 * 0.81);
        assert!((o.q_star - closed).abs() < 1e-9);
        assert!((o.q_star - 0.012_345_7).abs() < 1e-7);
        assert!((o.conditional_survival() - 0.987_654).abs() < 1e-6);
    }

    #[test]
    fn subcritical_thinning_dies() {
        let mu = OffspringDistribution::<f64>::new(vec![0.0, 0.0, 1.0]).unwrap();
        for p in [0.1, 0.3, 0.5] {
            assert_eq!(thinning_oracle(&mu, p).unwrap().q_star, 1.0);
        }
        let path = OffspringDistribution::<f64>::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(thinning_oracle(&path, 1.0).unwrap().q_star, 0.0);
        assert_eq!(thinning_oracle(&path, 0.99).unwrap().q_star, 1.0);
    }

    #[test]
    fn no_thinning_is_gw_extinction() {
        // s = 0.2 + 0.55 s + 0.25 s^2 has roots 0.8 and 1
        let mu = OffspringDistribution::<f64>::new(vec![0.2, 0.55, 0.25]).unwrap();
        assert!((thinning_oracle(&mu, 1.0).unwrap().q_star - 0.8).abs() < 1e-9);
        assert!((mu.extinction_probability() - 0.8).abs() < 1e-9);
    }

    #[test]
    fn depth_functional_decreases_to_fixed_point() {
        let mu = OffspringDistribution::<f64>::new(vec![0.0, 0.0, 1.0]).unwrap();
        let q = thinned_extinction(&mu, 0.9);
        let mut prev = -1.0;
        for l in 0..30 {
            let e = depth_extinction(&mu, 0.9, l);
            assert!(e >= prev && e <= q + 1e-15);
            prev = e;
        }
        assert!((prev - q).abs() < 1e-12);
        assert!(thinning_oracle(&mu, 1.5).is_err());
    }

    #[test]
    fn depth_survival_matches_oracle() {
        let mu = OffspringDistribution::<f64>::new(vec![0.0, 0.0, 1.0]).unwrap();
        let r = depth_survival(&mu, 0.6, 8, 20_000, 1, 0).unwrap();
        let sd = (r.oracle_conditional * (1.0 - r.oracle_conditional) / 20_000.0).sqrt();
        assert!((r.conditional.estimate - r.oracle_conditional).abs() < 4.0 * sd, "{r:?}");
        assert!(r.unconditional.successes <= r.conditional.successes);
        assert!(r.oracle_conditional * 0.6 >= r.oracle_limit);
        let dead = depth_survival(&mu, 0.0, 3, 10, 1, 0).unwrap();
        assert_eq!(dead.conditional.successes, 0);
    }
}
