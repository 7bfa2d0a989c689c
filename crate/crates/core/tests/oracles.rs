//! End-to-end checks of the numerical routines against independent
//! closed forms.

use brwlab_core::group::{
    estimate_spectral_radius, green_partial_sum, growth_rate, return_probability_series, spectral_radius,
    sphere_sizes_by_enumeration, GroupSpec, SpectralMethod, StepDistribution,
};
use brwlab_core::gw::{gamma_critical, gamma_truncate, ugw_root_law, OffspringDistribution};
use brwlab_core::percolation::{depth_extinction, thinning_oracle};
use brwlab_core::{OffspringDistribution32, StepDistribution32};

/// Return probabilities of the simple walk on F_k at even times by direct
/// path counting on word length (independent of the library's DP).
fn free_group_simple_returns(k: usize, n_max: usize) -> Vec<f64> {
    let s = 2.0 * k as f64;
    let mut dist = vec![0.0; n_max + 2];
    dist[0] = 1.0;
    let mut out = vec![1.0];
    for _ in 0..n_max {
        let mut next = vec![0.0; n_max + 2];
        for r in 0..=n_max {
            let m = dist[r];
            if m == 0.0 {
                continue;
            }
            if r == 0 {
                next[1] += m;
            } else {
                next[r - 1] += m / s;
                next[r + 1] += m * (s - 1.0) / s;
            }
        }
        dist = next;
        out.push(dist[0]);
    }
    out
}

#[test]
fn lazy_free_group_series_matches_binomial_mixture() {
    // p_lazy^(n) = sum_j C(n, j) a^(n-j) (1-a)^j p_simple^(j)
    let a = 0.2;
    let f2 = GroupSpec::free_group(2).unwrap();
    let q = StepDistribution::<f64>::lazy_uniform(f2, a).unwrap();
    let s = return_probability_series(&q, 60).unwrap();
    let simple = free_group_simple_returns(2, 60);
    for n in 0..=60usize {
        let mut expect = 0.0;
        let mut binom = 1.0f64;
        for (j, &sj) in simple.iter().enumerate().take(n + 1) {
            if j > 0 {
                binom *= (n + 1 - j) as f64 / j as f64;
            }
            expect += binom * a.powi((n - j) as i32) * (1.0 - a).powi(j as i32) * sj;
        }
        assert!((s.return_prob(n) - expect).abs() < 1e-13, "n = {n}");
    }
}

#[test]
fn spectral_radii_of_the_base_groups() {
    let cases = [
        (GroupSpec::free_group(2).unwrap(), 0.0f64, 3f64.sqrt() / 2.0),
        (GroupSpec::free_group(3).unwrap(), 0.0, 5f64.sqrt() / 3.0),
        (GroupSpec::free_product_c2(3).unwrap(), 0.0, 2.0 * 2f64.sqrt() / 3.0),
        (GroupSpec::free_group(2).unwrap(), 0.2, 0.2 + 0.8 * 3f64.sqrt() / 2.0),
        (GroupSpec::integer_lattice(2).unwrap(), 0.2, 1.0),
    ];
    for (g, a, rho) in cases {
        let q = StepDistribution::<f64>::lazy_uniform(g, a.max(1e-9)).unwrap();
        let r = spectral_radius(&q).unwrap();
        let expect = if a == 0.0 { 1e-9 + (1.0 - 1e-9) * rho } else { rho };
        assert!((r.value - expect).abs() < 1e-12, "{g}: {} vs {expect}", r.value);
    }
    let f2 = GroupSpec::free_group(2).unwrap();
    let q = StepDistribution::<f64>::lazy_uniform(f2, 0.2).unwrap();
    let est = estimate_spectral_radius(&q, 200).unwrap();
    assert!((est.estimate - 0.892_820_323).abs() < 0.005);
    assert!(est.lower_bound <= 0.892_820_324);
}

#[test]
fn variational_formula_reduces_to_closed_form() {
    let f3 = GroupSpec::free_group(3).unwrap();
    let uniform = StepDistribution::<f64>::new(f3, 0.1, vec![0.15; 6]).unwrap();
    let r = spectral_radius(&uniform).unwrap();
    assert_eq!(r.method, SpectralMethod::KestenClosedForm);
    let skew = StepDistribution::<f64>::new(f3, 0.1, vec![0.15 + 1e-7, 0.15 + 1e-7, 0.15 - 1e-7, 0.15 - 1e-7, 0.15, 0.15]).unwrap();
    let v = spectral_radius(&skew).unwrap();
    assert_eq!(v.method, SpectralMethod::Variational);
    assert!((v.value - r.value).abs() < 1e-9);
}

#[test]
fn green_partial_sums_stay_below_the_ball_bound() {
    let f2 = GroupSpec::free_group(2).unwrap();
    let q = StepDistribution::<f64>::lazy_uniform(f2, 0.2).unwrap();
    let rho = spectral_radius(&q).unwrap().value;
    let m = 1.05;
    for d in 0..=6u8 {
        let y = f2.word(&vec![0; d as usize]).unwrap();
        let g = green_partial_sum(&q, &f2.identity(), &y, m, 400).unwrap();
        let bound = (m * rho).powi(d as i32) / (1.0 - m * rho);
        assert!(g.partial <= bound, "d = {d}");
        assert_eq!(g.within_bound(), Some(true));
    }
}

#[test]
fn growth_matches_enumeration() {
    for g in [GroupSpec::free_group(2).unwrap(), GroupSpec::free_product_c2(4).unwrap(), GroupSpec::integer_lattice(2).unwrap()] {
        let counts = sphere_sizes_by_enumeration(&g, 6);
        for (r, &c) in counts.iter().enumerate() {
            assert_eq!(g.sphere_size::<f64>(r as u32), c as f64, "{g} r = {r}");
        }
    }
    assert!((growth_rate::<f64>(&GroupSpec::free_group(2).unwrap()) - 3f64.ln()).abs() < 1e-12);
}

#[test]
fn offspring_laws_in_single_precision() {
    let f2 = GroupSpec::free_group(2).unwrap();
    let q = StepDistribution32::lazy_uniform(f2, 0.2).unwrap();
    let rho = spectral_radius(&q).unwrap().value;
    assert!((rho - 0.892_820_3f32).abs() < 1e-5);
    let mu = OffspringDistribution32::new(vec![0.2, 0.3, 0.5]).unwrap();
    let t = gamma_truncate(&mu, 0.5).unwrap();
    assert!((t.m_gamma - 1.05).abs() < 1e-6);
    let root = ugw_root_law(&OffspringDistribution32::new(vec![0.0, 0.5, 0.5]).unwrap());
    assert!((root.prob(2) - 0.6).abs() < 1e-6 && (root.prob(3) - 0.4).abs() < 1e-6);
}

#[test]
fn gamma_window_and_thinning() {
    let mu = OffspringDistribution::<f64>::new(vec![0.2, 0.3, 0.5]).unwrap();
    // m_gamma = 0.8 + 0.5 gamma crosses 1 at 0.4
    let gc = gamma_critical(&mu).value().unwrap();
    assert!((gc - 0.4).abs() < 1e-12);
    let binary = OffspringDistribution::<f64>::new(vec![0.0, 0.0, 1.0]).unwrap();
    let o = thinning_oracle(&binary, 0.9).unwrap();
    let e: Vec<f64> = (0..40).map(|l| depth_extinction(&binary, 0.9, l)).collect();
    assert!(e.windows(2).all(|w| w[0] <= w[1]));
    assert!((e[39] - o.q_star).abs() < 1e-12);
}
