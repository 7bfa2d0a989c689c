use serde::Serialize;

use super::{return_probability_series, GroupSpec, StepDistribution};
use crate::error::Result;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SpectralMethod {
    /// `rho = 1` for symmetric walks on the amenable lattices.
    Amenable,
    /// Kesten's value for the uniform walk plus spectral mapping of the
    /// lazy mixture `a I + (1 - a) P_0`.
    KestenClosedForm,
    /// One-dimensional convex minimisation (Akemann-Ostrand / Woess formula
    /// for nearest-neighbour walks on free groups and free products of
    /// `Z_2`) for non-radial weights.
    Variational,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralRadius<T> {
    pub value: T,
    pub method: SpectralMethod,
}

/// Spectral radius `rho(P)` of the walk driven by `q`.
pub fn spectral_radius<T: Real>(q: &StepDistribution<T>) -> Result<SpectralRadius<T>> {
    let a = q.laziness();
    let one = T::one();
    let two = T::lit(2.0);
    Ok(match q.group() {
        GroupSpec::IntegerLattice { .. } => SpectralRadius { value: one, method: SpectralMethod::Amenable },
        group if q.is_radial() => {
            let rho0 = match group {
                GroupSpec::FreeGroup { rank } => {
                    let k = T::from_count(rank as usize);
                    (two * k - one).sqrt() / k
                }
                GroupSpec::FreeProductC2 { factors } => {
                    let d = T::from_count(factors as usize);
                    two * (d - one).sqrt() / d
                }
                GroupSpec::IntegerLattice { .. } => unreachable!(),
            };
            SpectralRadius { value: a + (one - a) * rho0, method: SpectralMethod::KestenClosedForm }
        }
        group => {
            let w = q.generator_weights();
            // one weight per generator pair (free group) or per involution
            let (pair_weights, coef, slope): (Vec<T>, T, T) = match group {
                GroupSpec::FreeGroup { rank } => {
                    (w.iter().step_by(2).copied().collect(), two, two * T::from_count(rank as usize - 1))
                }
                GroupSpec::FreeProductC2 { factors } => (w.to_vec(), one, T::from_count(factors as usize - 2)),
                GroupSpec::IntegerLattice { .. } => unreachable!(),
            };
            let h = |t: T| {
                pair_weights.iter().fold(T::zero(), |acc, &p| acc + coef * (t * t + p * p).sqrt()) - slope * t
            };
            SpectralRadius { value: a + minimise_convex(h), method: SpectralMethod::Variational }
        }
    })
}

/// Minimum over `t >= 0` of a convex function growing at infinity.
fn minimise_convex<T: Real>(h: impl Fn(T) -> T) -> T {
    let mut hi = T::one();
    while h(hi * T::lit(2.0)) < h(hi) {
        hi = hi * T::lit(2.0);
    }
    let mut lo = T::zero();
    hi = hi * T::lit(2.0);
    let phi = T::lit(0.618_033_988_749_894_8);
    for _ in 0..200 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if h(m1) <= h(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    h((lo + hi) / T::lit(2.0))
}

/// Spectral radius read off a finite return-probability series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesEstimate<T> {
    /// Twice-iterated Aitken extrapolation of `sqrt(p^(2n+2)(e,e) / p^(2n)(e,e))`.
    pub estimate: T,
    /// `p^(2n)(e,e)^(1/2n)` at the largest `n`; a rigorous lower bound on `rho`.
    pub lower_bound: T,
    /// Size of the last acceleration correction, used as the error band.
    pub band: T,
    pub converged: bool,
    pub terms: usize,
}

/// Band below which the series estimate is reported as converged.
pub const SERIES_BAND_TOL: f64 = 5e-3;

/// Estimates `rho` from `p^(2n)(e,e)` for `2n <= n_max`.
pub fn estimate_spectral_radius<T: Real>(q: &StepDistribution<T>, n_max: usize) -> Result<SeriesEstimate<T>> {
    let series = return_probability_series(q, n_max.max(6))?;
    let half = series.n_max() / 2;
    let even: Vec<T> = (0..=half).map(|n| series.return_prob(2 * n)).collect();
    let lower_bound = even[half].powf(T::one() / T::from_count(2 * half));
    let ratios: Vec<T> = (1..half).map(|n| (even[n + 1] / even[n]).sqrt()).collect();
    let once = aitken(&ratios);
    let twice = aitken(&once);
    let estimate = twice.last().or(once.last()).or(ratios.last()).copied().unwrap_or(lower_bound);
    let band = (estimate - ratios.last().copied().unwrap_or(lower_bound)).abs();
    Ok(SeriesEstimate {
        estimate,
        lower_bound,
        band,
        converged: band <= T::lit(SERIES_BAND_TOL),
        terms: 2 * half,
    })
}

/// Aitken delta-squared transform; degenerate denominators keep the raw term.
fn aitken<T: Real>(x: &[T]) -> Vec<T> {
    x.windows(3)
        .map(|w| {
            let d1 = w[1] - w[0];
            let d2 = w[2] - w[1];
            let den = d2 - d1;
            if den.abs() <= T::epsilon() * w[2].abs() {
                w[2]
            } else {
                w[2] - d2 * d2 / den
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let f2 = GroupSpec::free_group(2).unwrap();
        let q = StepDistribution::<f64>::lazy_uniform(f2, 0.2).unwrap();
        let r = spectral_radius(&q).unwrap();
        assert!((r.value - (0.2 + 0.8 * 3f64.sqrt() / 2.0)).abs() < 1e-15);
        assert!((r.value - 0.89282).abs() < 1e-5);

        let z1 = GroupSpec::integer_lattice(1).unwrap();
        let q = StepDistribution::<f64>::new(z1, 0.2, vec![0.4, 0.4]).unwrap();
        assert_eq!(spectral_radius(&q).unwrap().value, 1.0);

        let c3 = GroupSpec::free_product_c2(3).unwrap();
        let q = StepDistribution::<f64>::lazy_uniform(c3, 0.1).unwrap();
        let r = spectral_radius(&q).unwrap().value;
        assert!((r - (0.1 + 0.9 * 2.0 * 2f64.sqrt() / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn variational_formula_recovers_closed_form() {
        // Radial weights pushed through the variational route.
        for (group, a) in [
            (GroupSpec::free_group(2).unwrap(), 0.2),
            (GroupSpec::free_group(3).unwrap(), 0.1),
            (GroupSpec::free_product_c2(4).unwrap(), 0.3),
        ] {
            let q = StepDistribution::<f64>::lazy_uniform(group, a).unwrap();
            let closed = spectral_radius(&q).unwrap().value;
            let w = q.generator_weights().to_vec();
            let (pairs, coef, slope) = match group {
                GroupSpec::FreeGroup { rank } => (w.iter().step_by(2).copied().collect::<Vec<_>>(), 2.0, 2.0 * (rank as f64 - 1.0)),
                GroupSpec::FreeProductC2 { factors } => (w.clone(), 1.0, factors as f64 - 2.0),
                _ => unreachable!(),
            };
            let v = a + minimise_convex(|t: f64| pairs.iter().map(|p| coef * (t * t + p * p).sqrt()).sum::<f64>() - slope * t);
            assert!((v - closed).abs() < 1e-10, "{group}: {v} vs {closed}");
        }
    }

    #[test]
    fn non_radial_radius_is_between_bounds() {
        let f2 = GroupSpec::free_group(2).unwrap();
        let q = StepDistribution::<f64>::new(f2, 0.2, vec![0.3, 0.3, 0.1, 0.1]).unwrap();
        let r = spectral_radius(&q).unwrap();
        assert_eq!(r.method, SpectralMethod::Variational);
        // more anisotropic walks look more like Z and have larger rho
        assert!(r.value > 0.89282 && r.value < 1.0, "{}", r.value);
    }

    #[test]
    fn series_estimate_f2() {
        let f2 = GroupSpec::free_group(2).unwrap();
        let q = StepDistribution::<f64>::lazy_uniform(f2, 0.2).unwrap();
        let e = estimate_spectral_radius(&q, 400).unwrap();
        assert!((e.estimate - 0.89282).abs() < 0.005, "{e:?}");
        assert!(e.lower_bound <= 0.892_820_323_027_550_9);
        assert!(e.converged);
    }

    #[test]
    fn series_estimate_lattice_tends_to_one() {
        let z1 = GroupSpec::integer_lattice(1).unwrap();
        let q = StepDistribution::<f64>::new(z1, 0.2, vec![0.4, 0.4]).unwrap();
        let e = estimate_spectral_radius(&q, 400).unwrap();
        assert!((e.estimate - 1.0).abs() < 0.005, "{e:?}");
    }
}
