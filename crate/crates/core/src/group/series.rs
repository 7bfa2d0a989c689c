//! Exact n-step transition probabilities.
//!
//! For radial walks on the tree-like groups, `p^(n)(e, x)` only depends on
//! `|x|`, and the distance process is a birth-death chain: from distance
//! `r > 0` one generator steps back, `|S| - 1` step away, and `q(e)` stays.
//! On `Z^d` the walk is convolved exactly on the box of radius `n`.

use super::{GroupElement, GroupSpec, StepDistribution};
use crate::error::{BrwError, Result};
use crate::scalar::Real;

/// `rows[n][r] = p^(n)(e, x)` for any `x` with `|x| = r`, `r <= n`.
#[derive(Clone, Debug)]
pub struct RadialSeries<T: Real> {
    group: GroupSpec,
    rows: Vec<Vec<T>>,
}

/// `rows[n]` is the law of the walk after `n` steps on the box of radius `n`,
/// flattened with the first coordinate varying slowest.
#[derive(Clone, Debug)]
pub struct LatticeSeries<T: Real> {
    dim: usize,
    rows: Vec<Vec<T>>,
}

#[derive(Clone, Debug)]
pub enum ReturnSeries<T: Real> {
    Radial(RadialSeries<T>),
    Lattice(LatticeSeries<T>),
}

/// Computes `p^(n)(e, .)` for `n = 0..=n_max`.
///
/// Tree-like groups require a radial step law; other laws are reported as
/// unsupported.
pub fn return_probability_series<T: Real>(q: &StepDistribution<T>, n_max: usize) -> Result<ReturnSeries<T>> {
    if n_max == 0 {
        return Err(BrwError::OutOfRange { name: "n_max", detail: "must be at least 1".into() });
    }
    let group = q.group();
    match group {
        GroupSpec::IntegerLattice { dim } => Ok(ReturnSeries::Lattice(lattice_series(q, dim as usize, n_max))),
        _ if !q.is_radial() => Err(BrwError::Unsupported(
            "exact return probabilities on tree-like groups need a radial step law".into(),
        )),
        _ => Ok(ReturnSeries::Radial(radial_series(q, n_max))),
    }
}

fn radial_series<T: Real>(q: &StepDistribution<T>, n_max: usize) -> RadialSeries<T> {
    let group = q.group();
    let a = q.laziness();
    let w = q.generator_weights()[0];
    let s = T::from_count(group.num_generators());
    let away = (s - T::one()) * w;
    let mut rows = Vec::with_capacity(n_max + 1);
    rows.push(vec![T::one()]);
    for n in 0..n_max {
        let prev: &Vec<T> = &rows[n];
        let at = |r: usize| prev.get(r).copied().unwrap_or(T::zero());
        let mut next = vec![T::zero(); n + 2];
        next[0] = a * at(0) + s * w * at(1);
        for (r, slot) in next.iter_mut().enumerate().skip(1) {
            *slot = a * at(r) + w * at(r - 1) + away * at(r + 1);
        }
        rows.push(next);
    }
    RadialSeries { group, rows }
}

fn lattice_series<T: Real>(q: &StepDistribution<T>, dim: usize, n_max: usize) -> LatticeSeries<T> {
    let a = q.laziness();
    let w = q.generator_weights();
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(n_max + 1);
    rows.push(vec![T::one()]);
    for n in 0..n_max {
        let (old_r, new_r) = (n as i64, n as i64 + 1);
        let old_side = (2 * old_r + 1) as usize;
        let new_side = (2 * new_r + 1) as usize;
        let mut next = vec![T::zero(); new_side.pow(dim as u32)];
        let prev = &rows[n];
        let mut coords = vec![0i64; dim];
        for (idx, &mass) in prev.iter().enumerate() {
            if mass == T::zero() {
                continue;
            }
            // decode idx on the old box
            let mut rem = idx;
            for c in coords.iter_mut().rev() {
                *c = (rem % old_side) as i64 - old_r;
                rem /= old_side;
            }
            let encode = |cs: &[i64]| cs.iter().fold(0usize, |acc, &c| acc * new_side + (c + new_r) as usize);
            next[encode(&coords)] = next[encode(&coords)] + mass * a;
            for axis in 0..dim {
                for (g, delta) in [(2 * axis, 1i64), (2 * axis + 1, -1i64)] {
                    coords[axis] += delta;
                    let j = encode(&coords);
                    next[j] = next[j] + mass * w[g];
                    coords[axis] -= delta;
                }
            }
        }
        rows.push(next);
    }
    LatticeSeries { dim, rows }
}

impl<T: Real> RadialSeries<T> {
    pub fn group(&self) -> GroupSpec {
        self.group
    }

    /// `p^(n)(e, x)` for `|x| = r`.
    pub fn pointwise(&self, n: usize, r: usize) -> T {
        self.rows[n].get(r).copied().unwrap_or(T::zero())
    }
}

impl<T: Real> LatticeSeries<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, n: usize, z: &[i32]) -> T {
        let r = n as i64;
        let side = (2 * r + 1) as usize;
        if z.len() != self.dim || z.iter().any(|&c| (c as i64).abs() > r) {
            return T::zero();
        }
        let idx = z.iter().fold(0usize, |acc, &c| acc * side + (c as i64 + r) as usize);
        self.rows[n][idx]
    }

    fn l1_of_index(&self, n: usize, mut idx: usize) -> usize {
        let side = 2 * n + 1;
        let mut l1 = 0;
        for _ in 0..self.dim {
            l1 += ((idx % side) as i64 - n as i64).unsigned_abs() as usize;
            idx /= side;
        }
        l1
    }
}

impl<T: Real> ReturnSeries<T> {
    pub fn n_max(&self) -> usize {
        match self {
            ReturnSeries::Radial(s) => s.rows.len() - 1,
            ReturnSeries::Lattice(s) => s.rows.len() - 1,
        }
    }

    /// `p^(n)(e, e)`.
    pub fn return_prob(&self, n: usize) -> T {
        match self {
            ReturnSeries::Radial(s) => s.pointwise(n, 0),
            ReturnSeries::Lattice(s) => s.at(n, &vec![0; s.dim]),
        }
    }

    /// `p^(n)(e, z)`; zero beyond `n_max`-reachable range.
    pub fn prob_at(&self, n: usize, z: &GroupElement) -> T {
        match (self, z) {
            (ReturnSeries::Radial(s), GroupElement::Word(w)) => s.pointwise(n, w.len()),
            (ReturnSeries::Lattice(s), GroupElement::Lattice(v)) => s.at(n, v),
            _ => T::zero(),
        }
    }

    /// `p^(n)(x, y) = p^(n)(e, x^-1 y)`.
    pub fn transition(&self, spec: &GroupSpec, n: usize, x: &GroupElement, y: &GroupElement) -> Result<T> {
        let z = spec.compose(&spec.inverse(x)?, y)?;
        Ok(self.prob_at(n, &z))
    }

    /// Law of the distance `|S_n|`: entry `r` is `P(|S_n| = r)`.
    pub fn class_masses(&self, n: usize) -> Vec<T> {
        match self {
            ReturnSeries::Radial(s) => {
                s.rows[n].iter().enumerate().map(|(r, &u)| u * s.group.sphere_size::<T>(r as u32)).collect()
            }
            ReturnSeries::Lattice(s) => {
                let mut out = vec![T::zero(); n + 1];
                for (idx, &mass) in s.rows[n].iter().enumerate() {
                    // box corners beyond l1 = n carry no mass
                    let r = s.l1_of_index(n, idx);
                    if r <= n {
                        out[r] = out[r] + mass;
                    }
                }
                out
            }
        }
    }

    /// Total mass of row `n`; one up to rounding.
    pub fn row_total(&self, n: usize) -> T {
        self.class_masses(n).into_iter().fold(T::zero(), |a, b| a + b)
    }

    /// Green sum `sum_{k <= n_max} p^(k)(e, z) m^k` together with the tail
    /// bound `sum_{k > n_max} (m rho)^k` and the closed bound
    /// `(m rho)^d / (1 - m rho)`, both of which need `m rho < 1`.
    pub fn green_sum(&self, z: &GroupElement, m: T, rho: T) -> GreenSum<T> {
        let n_max = self.n_max();
        let mut partial = T::zero();
        let mut mk = T::one();
        for k in 0..=n_max {
            partial = partial + self.prob_at(k, z) * mk;
            mk = mk * m;
        }
        let d = z.length();
        let mr = m * rho;
        let convergent = mr < T::one();
        GreenSum {
            distance: d,
            n_max,
            partial,
            divergent_tail: !convergent,
            tail_bound: convergent.then(|| mr.powi(n_max as i32 + 1) / (T::one() - mr)),
            lemma_bound: convergent.then(|| mr.powi(d as i32) / (T::one() - mr)),
        }
    }
}

/// A truncated Green function value with its certified tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenSum<T> {
    pub distance: u32,
    pub n_max: usize,
    pub partial: T,
    /// `None` when `m rho >= 1`.
    pub tail_bound: Option<T>,
    pub divergent_tail: bool,
    pub lemma_bound: Option<T>,
}

impl<T: Real> GreenSum<T> {
    /// Partial sum plus certified tail: an upper bound on `G(x, y | m)`.
    pub fn certified_upper(&self) -> Option<T> {
        self.tail_bound.map(|t| self.partial + t)
    }

    /// Whether the certified upper value respects `(m rho)^d / (1 - m rho)`.
    pub fn within_bound(&self) -> Option<bool> {
        Some(self.certified_upper()? <= self.lemma_bound?)
    }
}

/// `G(x, y | m)` truncated at `n_max`, with the tail handled by the Kesten
/// bound `p^(n) <= rho^n`.
pub fn green_partial_sum<T: Real>(
    q: &StepDistribution<T>,
    x: &GroupElement,
    y: &GroupElement,
    m: T,
    n_max: usize,
) -> Result<GreenSum<T>> {
    let spec = q.group();
    let rho = super::spectral_radius(q)?.value;
    let z = spec.compose(&spec.inverse(x)?, y)?;
    let series = return_probability_series(q, n_max.max(1))?;
    let mut g = series.green_sum(&z, m, rho);
    if n_max == 0 {
        // only the k = 0 term
        g.partial = if z.is_identity() { T::one() } else { T::zero() };
        g.n_max = 0;
        g.tail_bound = (m * rho < T::one()).then(|| m * rho / (T::one() - m * rho));
    }
    Ok(g)
}
