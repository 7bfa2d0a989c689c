//! Base groups, their elements, symmetric step laws and the random-walk
//! quantities derived from them (return probabilities, spectral radius,
//! Green sums, growth).

mod element;
mod growth;
mod series;
mod spectral;
mod step;

pub use element::{GroupElement, Step};
pub use growth::{growth_rate, sphere_sizes_by_enumeration};
pub use series::{
    green_partial_sum, return_probability_series, GreenSum, LatticeSeries, RadialSeries, ReturnSeries,
};
pub use spectral::{
    estimate_spectral_radius, spectral_radius, SeriesEstimate, SpectralMethod, SpectralRadius,
};
pub use step::StepDistribution;

use serde::{Deserialize, Serialize};

use crate::error::{BrwError, Result};

/// One of the supported base groups with its canonical symmetric generating
/// set.
///
/// Generator indices:
/// * `IntegerLattice`: `2i` is `+e_i`, `2i+1` is `-e_i`.
/// * `FreeGroup`: `2i` is `a_i`, `2i+1` is `a_i^-1`.
/// * `FreeProductC2`: `i` is the involution `s_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupSpec {
    IntegerLattice { dim: u8 },
    FreeGroup { rank: u8 },
    FreeProductC2 { factors: u8 },
}

impl GroupSpec {
    pub fn integer_lattice(dim: u8) -> Result<Self> {
        GroupSpec::IntegerLattice { dim }.validated()
    }

    pub fn free_group(rank: u8) -> Result<Self> {
        GroupSpec::FreeGroup { rank }.validated()
    }

    pub fn free_product_c2(factors: u8) -> Result<Self> {
        GroupSpec::FreeProductC2 { factors }.validated()
    }

    /// Checks the parameter ranges that make the group infinite with a
    /// finite symmetric generating set.
    pub fn validated(self) -> Result<Self> {
        let ok = match self {
            GroupSpec::IntegerLattice { dim } => (1..=127).contains(&dim),
            GroupSpec::FreeGroup { rank } => (2..=127).contains(&rank),
            GroupSpec::FreeProductC2 { factors } => factors >= 3,
        };
        if ok {
            Ok(self)
        } else {
            Err(BrwError::InvalidGroup(format!(
                "{self}: need lattice dim in 1..=127, free rank in 2..=127, or at least 3 involutions"
            )))
        }
    }

    /// |S|
    pub fn num_generators(&self) -> usize {
        match *self {
            GroupSpec::IntegerLattice { dim } => 2 * dim as usize,
            GroupSpec::FreeGroup { rank } => 2 * rank as usize,
            GroupSpec::FreeProductC2 { factors } => factors as usize,
        }
    }

    pub fn inverse_generator(&self, g: u8) -> u8 {
        match self {
            GroupSpec::FreeProductC2 { .. } => g,
            _ => g ^ 1,
        }
    }

    /// Tree-like Cayley graph (free group or free product of `Z_2`'s).
    pub fn is_tree_like(&self) -> bool {
        !matches!(self, GroupSpec::IntegerLattice { .. })
    }

    pub fn identity(&self) -> GroupElement {
        match *self {
            GroupSpec::IntegerLattice { dim } => GroupElement::Lattice(vec![0; dim as usize]),
            _ => GroupElement::Word(Vec::new()),
        }
    }

    pub fn generator(&self, g: u8) -> Result<GroupElement> {
        if g as usize >= self.num_generators() {
            return Err(self.mismatch(format!("generator index {g} out of range")));
        }
        let mut x = self.identity();
        self.apply_step(&mut x, Step::generator(g));
        Ok(x)
    }

    /// Product of the generators in `letters`, left to right.
    pub fn word(&self, letters: &[u8]) -> Result<GroupElement> {
        let mut x = self.identity();
        for &g in letters {
            if g as usize >= self.num_generators() {
                return Err(self.mismatch(format!("generator index {g} out of range")));
            }
            self.apply_step(&mut x, Step::generator(g));
        }
        Ok(x)
    }

    /// Does `x` represent an element of this group in normal form?
    pub fn contains(&self, x: &GroupElement) -> bool {
        match (self, x) {
            (GroupSpec::IntegerLattice { dim }, GroupElement::Lattice(v)) => v.len() == *dim as usize,
            (GroupSpec::IntegerLattice { .. }, _) | (_, GroupElement::Lattice(_)) => false,
            (_, GroupElement::Word(w)) => {
                let s = self.num_generators() as u8;
                w.iter().all(|&g| g < s) && w.windows(2).all(|p| p[1] != self.inverse_generator(p[0]))
            }
        }
    }

    fn check(&self, x: &GroupElement) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(self.mismatch(format!("{x:?}")))
        }
    }

    fn mismatch(&self, detail: String) -> BrwError {
        BrwError::GroupMismatch { group: self.to_string(), detail }
    }

    /// Right multiplication by a single step, in place. `x` must belong to
    /// the group; this is the hot path of the simulators and is unchecked.
    #[inline]
    pub fn apply_step(&self, x: &mut GroupElement, step: Step) {
        let Some(g) = step.generator_index() else { return };
        match x {
            GroupElement::Lattice(v) => {
                let axis = (g / 2) as usize;
                if g & 1 == 0 {
                    v[axis] += 1;
                } else {
                    v[axis] -= 1;
                }
            }
            GroupElement::Word(w) => {
                if w.last() == Some(&self.inverse_generator(g)) {
                    w.pop();
                } else {
                    w.push(g);
                }
            }
        }
    }

    /// Reduced product `x * y`.
    pub fn compose(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        self.check(x)?;
        self.check(y)?;
        Ok(match (x, y) {
            (GroupElement::Lattice(a), GroupElement::Lattice(b)) => {
                GroupElement::Lattice(a.iter().zip(b).map(|(p, q)| p + q).collect())
            }
            (GroupElement::Word(a), GroupElement::Word(b)) => {
                // Cancel the longest suffix of a against the prefix of b.
                let mut k = 0;
                while k < a.len().min(b.len()) && b[k] == self.inverse_generator(a[a.len() - 1 - k]) {
                    k += 1;
                }
                let mut w = Vec::with_capacity(a.len() + b.len() - 2 * k);
                w.extend_from_slice(&a[..a.len() - k]);
                w.extend_from_slice(&b[k..]);
                GroupElement::Word(w)
            }
            _ => unreachable!("checked above"),
        })
    }

    pub fn inverse(&self, x: &GroupElement) -> Result<GroupElement> {
        self.check(x)?;
        Ok(match x {
            GroupElement::Lattice(v) => GroupElement::Lattice(v.iter().map(|c| -c).collect()),
            GroupElement::Word(w) => GroupElement::Word(w.iter().rev().map(|&g| self.inverse_generator(g)).collect()),
        })
    }

    /// Word length of `x` (distance from the identity).
    pub fn norm(&self, x: &GroupElement) -> u32 {
        x.length()
    }

    /// Cayley-graph distance `|x^-1 y|`.
    pub fn word_distance(&self, x: &GroupElement, y: &GroupElement) -> Result<u32> {
        self.check(x)?;
        self.check(y)?;
        Ok(match (x, y) {
            (GroupElement::Lattice(a), GroupElement::Lattice(b)) => {
                a.iter().zip(b).map(|(p, q)| (p - q).unsigned_abs()).sum()
            }
            (GroupElement::Word(a), GroupElement::Word(b)) => {
                let common = a.iter().zip(b).take_while(|(p, q)| p == q).count();
                (a.len() + b.len() - 2 * common) as u32
            }
            _ => unreachable!("checked above"),
        })
    }

    /// Number of elements at word length exactly `r`, in the scalar type.
    pub fn sphere_size<T: crate::Real>(&self, r: u32) -> T {
        if r == 0 {
            return T::one();
        }
        match *self {
            GroupSpec::FreeGroup { rank } => {
                let s = T::from_count(2 * rank as usize);
                s * (s - T::one()).powi(r as i32 - 1)
            }
            GroupSpec::FreeProductC2 { factors } => {
                let s = T::from_count(factors as usize);
                s * (s - T::one()).powi(r as i32 - 1)
            }
            GroupSpec::IntegerLattice { dim } => {
                // sum_k 2^k C(d,k) C(r-1,k-1)
                let d = dim as u32;
                let mut total = T::zero();
                for k in 1..=d.min(r) {
                    total = total
                        + T::lit(2f64.powi(k as i32)) * binomial::<T>(d, k) * binomial::<T>(r - 1, k - 1);
                }
                total
            }
        }
    }
}

fn binomial<T: crate::Real>(n: u32, k: u32) -> T {
    (0..k).fold(T::one(), |acc, i| acc * T::from_count((n - i) as usize) / T::from_count((i + 1) as usize))
}

impl std::fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GroupSpec::IntegerLattice { dim } => write!(f, "Z^{dim}"),
            GroupSpec::FreeGroup { rank } => write!(f, "F_{rank}"),
            GroupSpec::FreeProductC2 { factors } => write!(f, "C2^*{factors}"),
        }
    }
}
