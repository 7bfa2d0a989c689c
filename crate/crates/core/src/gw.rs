//! Offspring distributions, the unimodular Galton-Watson root law, and the
//! gamma-thinning that moves branching mass onto the single-child atom.

use rand::Rng;
use rand_distr::{weighted::WeightedAliasIndex, Distribution};
use serde::Serialize;

use crate::error::{BrwError, Result};
use crate::scalar::{close, tolerance, Real};

/// A finitely supported offspring law `(mu_0, ..., mu_{d-1})`.
#[derive(Clone, Debug)]
pub struct OffspringDistribution<T: Real> {
    probs: Vec<T>,
    mean: T,
    alias: WeightedAliasIndex<f64>,
}

impl<T: Real> OffspringDistribution<T> {
    /// Checks nonnegativity, normalisation and nonempty support. Trailing
    /// zero entries are dropped.
    pub fn new(probs: Vec<T>) -> Result<Self> {
        let mut probs = probs;
        if probs.iter().any(|p| !p.is_finite() || *p < T::zero()) {
            return Err(BrwError::InvalidOffspring("entries must be finite and nonnegative".into()));
        }
        while probs.last().is_some_and(|p| *p == T::zero()) {
            probs.pop();
        }
        if probs.is_empty() {
            return Err(BrwError::InvalidOffspring("empty support".into()));
        }
        let total = probs.iter().fold(T::zero(), |a, &b| a + b);
        if !close(total, T::one(), tolerance::<T>()) {
            return Err(BrwError::InvalidOffspring(format!("probabilities sum to {total}, not 1")));
        }
        let mean = probs.iter().enumerate().fold(T::zero(), |acc, (k, &p)| acc + T::from_count(k) * p);
        let alias = WeightedAliasIndex::new(probs.iter().map(|p| p.as_f64()).collect())
            .map_err(|e| BrwError::InvalidOffspring(e.to_string()))?;
        Ok(Self { probs, mean, alias })
    }

    /// Like [`new`](Self::new) but also enforces the standing assumption
    /// `mu_1 > 0`.
    pub fn validate(probs: Vec<T>) -> Result<Self> {
        let mu = Self::new(probs)?;
        if mu.prob(1) <= T::zero() {
            return Err(BrwError::InvalidOffspring("mu_1 must be positive".into()));
        }
        Ok(mu)
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn prob(&self, k: usize) -> T {
        self.probs.get(k).copied().unwrap_or(T::zero())
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    pub fn max_offspring(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn is_supercritical(&self) -> bool {
        self.mean > T::one()
    }

    /// `mu_1 > 0`
    pub fn satisfies_assumption(&self) -> bool {
        self.prob(1) > T::zero()
    }

    /// `F(s) = sum_k mu_k s^k` by Horner's rule.
    pub fn generating_function(&self, s: T) -> T {
        self.probs.iter().rev().fold(T::zero(), |acc, &p| acc * s + p)
    }

    /// Branching mass `sum_{k >= 2} (k - 1) mu_k`.
    pub fn branching_mass(&self) -> T {
        self.probs.iter().enumerate().skip(2).fold(T::zero(), |acc, (k, &p)| acc + T::from_count(k - 1) * p)
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.alias.sample(rng)
    }

    /// Smallest fixed point of `F` in `[0, 1]`: the extinction probability.
    pub fn extinction_probability(&self) -> T {
        crate::percolation::thinned_extinction(self, T::one())
    }
}

/// Law of the root degree of a unimodular Galton-Watson tree:
/// `P(deg = k + 1) ∝ mu_k / (k + 1)`.
#[derive(Clone, Debug)]
pub struct UgwRootLaw<T: Real> {
    /// `probs[j]` is the probability of root degree `j`; `probs[0] = 0`.
    probs: Vec<T>,
    alias: WeightedAliasIndex<f64>,
}

pub fn ugw_root_law<T: Real>(mu: &OffspringDistribution<T>) -> UgwRootLaw<T> {
    let weights: Vec<T> =
        std::iter::once(T::zero()).chain(mu.probs().iter().enumerate().map(|(k, &p)| p / T::from_count(k + 1))).collect();
    let z = weights.iter().fold(T::zero(), |a, &b| a + b);
    let probs: Vec<T> = weights.into_iter().map(|w| w / z).collect();
    let alias = WeightedAliasIndex::new(probs.iter().map(|p| p.as_f64()).collect()).expect("mu has nonempty support");
    UgwRootLaw { probs, alias }
}

impl<T: Real> UgwRootLaw<T> {
    pub fn prob(&self, degree: usize) -> T {
        self.probs.get(degree).copied().unwrap_or(T::zero())
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    /// Expected root degree, `1 / sum_k mu_k / (k + 1)`.
    pub fn mean_degree(&self) -> T {
        self.probs.iter().enumerate().fold(T::zero(), |acc, (j, &p)| acc + T::from_count(j) * p)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.alias.sample(rng)
    }
}

/// `mu^(gamma)`: `gamma mu_k` for `k >= 2`, the removed mass moved to `k = 1`.
#[derive(Clone, Debug)]
pub struct GammaTruncation<T: Real> {
    pub gamma: T,
    pub base: OffspringDistribution<T>,
    pub result: OffspringDistribution<T>,
    pub m_gamma: T,
}

pub fn gamma_truncate<T: Real>(mu: &OffspringDistribution<T>, gamma: T) -> Result<GammaTruncation<T>> {
    if !(gamma > T::zero() && gamma <= T::one()) {
        return Err(BrwError::OutOfRange { name: "gamma", detail: format!("{gamma} not in (0, 1]") });
    }
    let p = mu.probs();
    let tail = p.iter().skip(2).fold(T::zero(), |a, &b| a + b);
    let mut out: Vec<T> = p.to_vec();
    if out.len() < 2 {
        out.resize(2, T::zero());
    }
    out[1] = mu.prob(1) + (T::one() - gamma) * tail;
    for v in out.iter_mut().skip(2) {
        *v = gamma * *v;
    }
    let result = OffspringDistribution::new(out)?;
    let m_gamma = (T::one() - mu.prob(0)) + gamma * mu.branching_mass();
    Ok(GammaTruncation { gamma, base: mu.clone(), result, m_gamma })
}

/// Where `m_gamma = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum GammaCritical<T> {
    /// `gamma_c` in (0, 1]: thinned laws are supercritical exactly for `gamma > gamma_c`.
    Window(T),
    /// `gamma_c > 1`: the base law itself is not supercritical, so there is
    /// no subcritical window inside (0, 1].
    NoSubcriticalWindow(T),
    /// `mu_0 = 0`: `m_gamma > 1` for every `gamma > 0`.
    AlwaysSupercritical,
    /// No mass on `k >= 2`: `m_gamma` does not depend on `gamma`.
    NoBranchingMass,
}

impl<T: Copy> GammaCritical<T> {
    pub fn value(&self) -> Option<T> {
        match *self {
            GammaCritical::Window(g) | GammaCritical::NoSubcriticalWindow(g) => Some(g),
            _ => None,
        }
    }
}

pub fn gamma_critical<T: Real>(mu: &OffspringDistribution<T>) -> GammaCritical<T> {
    let slope = mu.branching_mass();
    if slope <= T::zero() {
        return GammaCritical::NoBranchingMass;
    }
    let mu0 = mu.prob(0);
    if mu0 <= T::zero() {
        return GammaCritical::AlwaysSupercritical;
    }
    let g = mu0 / slope;
    if g <= T::one() {
        GammaCritical::Window(g)
    } else {
        GammaCritical::NoSubcriticalWindow(g)
    }
}

/// `mu^(gamma)` sampled by thinning: draw `k ~ mu`, then, if `k >= 2`,
/// keep it when a uniform falls below `gamma` and replace it by 1
/// otherwise. The uniform comes from its own stream, so for
/// `gamma_1 < gamma_2` every node branching at `gamma_1` also branches at
/// `gamma_2`.
#[derive(Clone, Copy, Debug)]
pub struct ThinnedOffspring<'a, T: Real> {
    pub base: &'a OffspringDistribution<T>,
    pub gamma: f64,
}

/// Anything that can draw a number of children for a node. Offspring and
/// thinning draws come from separate per-node streams.
pub trait Branching: Sync {
    fn children<R: Rng + ?Sized>(&self, offspring_rng: &mut R, thinning_uniform: f64) -> usize;
}

impl<T: Real> Branching for OffspringDistribution<T> {
    #[inline]
    fn children<R: Rng + ?Sized>(&self, rng: &mut R, _: f64) -> usize {
        self.sample(rng)
    }
}

impl<T: Real> Branching for ThinnedOffspring<'_, T> {
    #[inline]
    fn children<R: Rng + ?Sized>(&self, rng: &mut R, u: f64) -> usize {
        let k = self.base.sample(rng);
        if k >= 2 && u >= self.gamma {
            1
        } else {
            k
        }
    }
}
