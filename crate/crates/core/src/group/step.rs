use rand::Rng;
use rand_distr::{weighted::WeightedAliasIndex, Distribution};

use super::{GroupSpec, Step};
use crate::error::{BrwError, Result};
use crate::scalar::{close, tolerance, Real};


/// A symmetric law `q` on `S ∪ {e}` with positive laziness `q(e)`.
#[derive(Clone, Debug)]
pub struct StepDistribution<T: Real> {
    group: GroupSpec,
    laziness: T,
    weights: Vec<T>,
    alias: WeightedAliasIndex<f64>,
}

impl<T: Real> StepDistribution<T> {
    /// `weights[g]` is `q(g)` for generator index `g`.
    pub fn new(group: GroupSpec, laziness: T, weights: Vec<T>) -> Result<Self> {
        let group = group.validated()?;
        if weights.len() != group.num_generators() {
            return Err(BrwError::InvalidStep(format!(
                "{} weights given for {} generators of {group}",
                weights.len(),
                group.num_generators()
            )));
        }
        if !laziness.is_finite() || weights.iter().any(|w| !w.is_finite() || *w < T::zero()) || laziness < T::zero()
        {
            return Err(BrwError::InvalidStep("weights must be finite and nonnegative".into()));
        }
        if laziness <= T::zero() {
            return Err(BrwError::InvalidStep("laziness q(e) must be positive".into()));
        }
        if let Some(g) = weights.iter().position(|w| *w <= T::zero()) {
            return Err(BrwError::InvalidStep(format!("generator {g} has zero weight; support must contain S")));
        }
        let total = weights.iter().fold(laziness, |acc, &w| acc + w);
        if !close(total, T::one(), tolerance::<T>()) {
            return Err(BrwError::InvalidStep(format!("weights sum to {total}, not 1")));
        }
        for g in 0..weights.len() {
            let inv = group.inverse_generator(g as u8) as usize;
            if !close(weights[g], weights[inv], tolerance::<T>()) {
                return Err(BrwError::NonSymmetricStep { s: g, a: weights[g].as_f64(), b: weights[inv].as_f64() });
            }
        }
        let table: Vec<f64> = std::iter::once(laziness).chain(weights.iter().copied()).map(T::as_f64).collect();
        let alias = WeightedAliasIndex::new(table).map_err(|e| BrwError::InvalidStep(e.to_string()))?;
        Ok(Self { group, laziness, weights, alias })
    }

    /// Laziness `a`, remaining mass spread uniformly over `S`.
    pub fn lazy_uniform(group: GroupSpec, laziness: T) -> Result<Self> {
        let s = group.validated()?.num_generators();
        let w = (T::one() - laziness) / T::from_count(s);
        Self::new(group, laziness, vec![w; s])
    }

    pub fn group(&self) -> GroupSpec {
        self.group
    }

    pub fn laziness(&self) -> T {
        self.laziness
    }

    pub fn generator_weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight(&self, step: Step) -> T {
        match step.generator_index() {
            None => self.laziness,
            Some(g) => self.weights[g as usize],
        }
    }

    /// Steps with their probabilities, identity first.
    pub fn outcomes(&self) -> impl Iterator<Item = (Step, T)> + '_ {
        (0..=self.weights.len()).map(|i| {
            let s = Step::from_outcome(i);
            (s, self.weight(s))
        })
    }

    /// Same weight on every generator.
    pub fn is_radial(&self) -> bool {
        let w0 = self.weights[0];
        self.weights.iter().all(|&w| close(w, w0, tolerance::<T>()))
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Step {
        Step::from_outcome(self.alias.sample(rng))
    }
}
