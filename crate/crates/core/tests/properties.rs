use brwlab_core::brw::{run_brw, run_brw_with, Caps, Mark};
use brwlab_core::competing::{run_competing, CompetingConfig, CompetingMode, ProcessSpec};
use brwlab_core::group::{
    return_probability_series, spectral_radius, GroupElement, GroupSpec, StepDistribution,
};
use brwlab_core::gw::{gamma_truncate, OffspringDistribution, ThinnedOffspring};
use brwlab_core::percolation::{
    bernoulli_site_percolation, induced_root_cluster, psi_masses, sample_ugw, MarkedTree, PsiConfig,
};
use brwlab_core::truncated::{mark_truncation, CoupledTruncation, TruncationMode};
use brwlab_core::{Rational, Seed};
use num_traits::Zero;
use proptest::prelude::*;

fn tree_group() -> impl Strategy<Value = GroupSpec> {
    prop_oneof![
        (2u8..=3).prop_map(|k| GroupSpec::free_group(k).unwrap()),
        (3u8..=5).prop_map(|d| GroupSpec::free_product_c2(d).unwrap()),
    ]
}

fn any_group() -> impl Strategy<Value = GroupSpec> {
    prop_oneof![tree_group(), (1u8..=3).prop_map(|d| GroupSpec::integer_lattice(d).unwrap())]
}

/// Group with a random word of up to `len` generators, reduced by a stack.
fn word_in(g: GroupSpec, len: usize) -> impl Strategy<Value = GroupElement> {
    let s = g.num_generators() as u8;
    prop::collection::vec(0..s, 0..=len).prop_map(move |letters| naive_product(&g, &letters))
}

fn naive_product(g: &GroupSpec, letters: &[u8]) -> GroupElement {
    match g {
        GroupSpec::IntegerLattice { dim } => {
            let mut v = vec![0i32; *dim as usize];
            for &l in letters {
                v[(l / 2) as usize] += if l % 2 == 0 { 1 } else { -1 };
            }
            GroupElement::Lattice(v)
        }
        _ => {
            let mut stack: Vec<u8> = Vec::new();
            for &l in letters {
                if stack.last() == Some(&g.inverse_generator(l)) {
                    stack.pop();
                } else {
                    stack.push(l);
                }
            }
            GroupElement::Word(stack)
        }
    }
}

fn letters_of(x: &GroupElement) -> Vec<u8> {
    match x {
        GroupElement::Word(w) => w.clone(),
        GroupElement::Lattice(v) => v
            .iter()
            .enumerate()
            .flat_map(|(axis, &c)| std::iter::repeat_n(if c >= 0 { 2 * axis as u8 } else { 2 * axis as u8 + 1 }, c.unsigned_abs() as usize))
            .collect(),
    }
}

fn group_and_pair() -> impl Strategy<Value = (GroupSpec, GroupElement, GroupElement, GroupElement)> {
    any_group().prop_flat_map(|g| (Just(g), word_in(g, 64), word_in(g, 64), word_in(g, 64)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn products_stay_reduced((g, x, y, _) in group_and_pair()) {
        prop_assert!(g.contains(&x) && g.contains(&y));
        let xy = g.compose(&x, &y).unwrap();
        prop_assert!(g.contains(&xy));
        let mut joined = letters_of(&x);
        joined.extend(letters_of(&y));
        prop_assert_eq!(&xy, &naive_product(&g, &joined));
        let back = g.compose(&xy, &g.inverse(&y).unwrap()).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn word_distance_is_a_metric((g, x, y, z) in group_and_pair()) {
        let d = |a: &GroupElement, b: &GroupElement| g.word_distance(a, b).unwrap();
        prop_assert_eq!(d(&x, &x), 0);
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z));
        prop_assert_eq!(d(&x, &y) == 0, x == y);
        // left invariance and agreement with |x^-1 y|
        let xinv_y = g.compose(&g.inverse(&x).unwrap(), &y).unwrap();
        prop_assert_eq!(d(&x, &y), g.norm(&xinv_y));
        let zx = g.compose(&z, &x).unwrap();
        let zy = g.compose(&z, &y).unwrap();
        prop_assert_eq!(d(&zx, &zy), d(&x, &y));
    }
}

fn lazy_step(g: GroupSpec) -> impl Strategy<Value = StepDistribution<f64>> {
    let pairs = match g {
        GroupSpec::FreeProductC2 { factors } => factors as usize,
        _ => g.num_generators() / 2,
    };
    (0.05f64..0.6, prop::collection::vec(0.1f64..1.0, pairs)).prop_map(move |(a, w)| {
        let total: f64 = w.iter().sum();
        let weights: Vec<f64> = match g {
            GroupSpec::FreeProductC2 { .. } => w.iter().map(|x| (1.0 - a) * x / total).collect(),
            _ => w.iter().flat_map(|x| [(1.0 - a) * x / total / 2.0; 2]).collect(),
        };
        StepDistribution::new(g, a, weights).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kernel_is_symmetric((g, q, x, y) in any_group().prop_flat_map(|g| (Just(g), lazy_step(g), word_in(g, 6), word_in(g, 6)))) {
        // radial series only exist for uniform generator weights on trees
        let q = if g.is_tree_like() { StepDistribution::lazy_uniform(g, q.laziness()).unwrap() } else { q };
        let s = return_probability_series(&q, 12).unwrap();
        for n in 0..=12 {
            let a = s.transition(&g, n, &x, &y).unwrap();
            let b = s.transition(&g, n, &y, &x).unwrap();
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn return_probabilities_respect_kesten((g, a) in tree_group().prop_flat_map(|g| (Just(g), 0.0f64..0.8))) {
        let q = StepDistribution::lazy_uniform(g, a.max(1e-3)).unwrap();
        let rho = spectral_radius(&q).unwrap().value;
        let s = return_probability_series(&q, 200).unwrap();
        for n in 0..=200 {
            prop_assert!(s.return_prob(n) <= rho.powi(n as i32) * (1.0 + 1e-12), "n = {}", n);
        }
    }

    #[test]
    fn gamma_thinning_is_monotone(g1 in 0.0f64..1.0, g2 in 0.0f64..1.0, seed in any::<u64>()) {
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let f2 = GroupSpec::free_group(2).unwrap();
        let q = StepDistribution::<f64>::lazy_uniform(f2, 0.2).unwrap();
        let mu = OffspringDistribution::<f64>::new(vec![0.1, 0.3, 0.4, 0.2]).unwrap();
        let small = run_brw_with(&q, &ThinnedOffspring { base: &mu, gamma: lo }, &f2.identity(), 8, Seed(seed), Caps::default()).unwrap();
        let big = run_brw_with(&q, &ThinnedOffspring { base: &mu, gamma: hi }, &f2.identity(), 8, Seed(seed), Caps::default()).unwrap();
        let keys: std::collections::HashSet<u64> = big.nodes().iter().map(|n| n.key).collect();
        prop_assert!(small.nodes().iter().all(|n| keys.contains(&n.key)));
        let m_lo = gamma_truncate(&mu, lo).unwrap().m_gamma;
        let m_hi = gamma_truncate(&mu, hi).unwrap().m_gamma;
        prop_assert!(m_lo <= m_hi + 1e-15);
    }

    #[test]
    fn root_cluster_is_idempotent(seed in any::<u64>(), p in 0.3f64..1.0) {
        let mu = OffspringDistribution::<f64>::new(vec![0.2, 0.3, 0.5]).unwrap();
        let mut rng = Seed(seed).rng();
        let t = bernoulli_site_percolation(&sample_ugw(&mu, 6, &mut rng), p, &mut rng);
        let once = induced_root_cluster(&t);
        let twice = induced_root_cluster(&once.tree);
        prop_assert_eq!(&once.tree, &twice.tree);
        prop_assert!(once.tree.marks().iter().all(|&m| m == Mark::Alive));
    }

    #[test]
    fn psi_flow_is_antisymmetric_and_conserves_mass(
        radius in 1u32..=5,
        k in prop::sample::select(vec![1i64, 2, 4]),
        bits in prop::collection::vec(any::<bool>(), 1 + 3 * 31),
    ) {
        let n = MarkedTree::regular_ball(3, radius).len();
        let cfg = PsiConfig::regular(3, radius, &bits[..n], Rational::from_integer(k.into())).unwrap();
        let m = psi_masses(&cfg).unwrap();
        prop_assert!(m.antisymmetric());
        prop_assert_eq!(m.total(), Rational::from_integer((n as i64).into()));
        prop_assert_eq!(m.psi_from_flow(n), m.psi.clone());
        for (&(v, w), f) in &m.flow {
            prop_assert!((m.flow[&(w, v)].clone() + f.clone()).is_zero());
        }
    }

    #[test]
    fn coupled_truncation_is_monotone(seed in any::<u64>()) {
        let f2 = GroupSpec::free_group(2).unwrap();
        let q = StepDistribution::<f64>::lazy_uniform(f2, 0.2).unwrap();
        let mu = OffspringDistribution::<f64>::new(vec![0.1, 0.2, 0.4, 0.3]).unwrap();
        let mut tree = run_brw(&q, &mu, &f2.identity(), 7, Seed(seed), Caps::default()).unwrap();
        let coupled = CoupledTruncation::new(&tree, TruncationMode::PaperExact).unwrap();
        let mut prev: Option<Vec<bool>> = None;
        for n in [1, 2, 4, 8, 16] {
            mark_truncation(&mut tree, n, TruncationMode::PaperExact);
            let inside = tree.root_cluster();
            if let Some(p) = &prev {
                prop_assert!(p.iter().zip(&inside).all(|(a, b)| !*a || *b));
            }
            prop_assert_eq!(coupled.alive_at_horizon(n), tree.generation(7).any(|i| inside[i as usize]));
            prev = Some(inside);
        }
    }

    #[test]
    fn coexistence_needs_both(seed in any::<u64>()) {
        let f2 = GroupSpec::free_group(2).unwrap();
        let q = StepDistribution::<f64>::lazy_uniform(f2, 0.2).unwrap();
        let mu = OffspringDistribution::<f64>::new(vec![0.2, 0.55, 0.25]).unwrap();
        let cfg = CompetingConfig {
            invasive: ProcessSpec { mu: mu.clone(), q: q.clone(), start: f2.word(&[0, 2]).unwrap() },
            noninvasive: ProcessSpec { mu, q, start: f2.identity() },
            horizon: 10,
            mode: CompetingMode::Pair,
            caps: Caps::default(),
        };
        let run = run_competing(&cfg, Seed(seed)).unwrap();
        for t in 0..=10 {
            let r = run.at(t);
            prop_assert_eq!(r.joint(), r.invasive_alive && r.noninvasive_alive);
            if t > 0 {
                let before = run.at(t - 1);
                prop_assert!(!r.noninvasive_alive || before.noninvasive_alive);
            }
        }
    }
}
