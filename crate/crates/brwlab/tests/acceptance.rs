//! Acceptance run: one PASS/FAIL line per criterion, then a nonzero exit if
//! any failed. Criteria run one after another so the wall-clock limits are
//! measured without competition from other tests.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use brwlab_core::competing::{coexistence_sweep, CompetingConfig, CompetingMode, ProcessSpec};
use brwlab_core::group::{
    estimate_spectral_radius, green_partial_sum, return_probability_series, spectral_radius, GroupSpec, StepDistribution,
};
use brwlab_core::gw::{ugw_root_law, OffspringDistribution};
use brwlab_core::percolation::{depth_survival, mtp_check, psi_masses, thinning_oracle, sample_ugw, MarkedTree, PsiConfig, RootBias, TransportFn};
use brwlab_core::stats::chi_square;
use brwlab_core::truncated::{survival_sweep, TruncationMode};
use brwlab_core::brw::Caps;
use brwlab_core::{Rational, Seed};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const RHO_F2_LAZY: f64 = 0.89282;
const RHO_TOL: f64 = 0.005;
const SPECTRAL_LIMIT: Duration = Duration::from_secs(1);
const KESTEN_N: usize = 400;
const GREEN_M: f64 = 1.05;
const GREEN_MAX_DISTANCE: usize = 20;
const GREEN_TERMS: usize = 800;
const GREEN_LIMIT: Duration = Duration::from_secs(5);
const UGW_SAMPLES: u64 = 100_000;
const UGW_MIN_P: f64 = 0.001;
const MTP_SAMPLES: u64 = 1_000_000;
const MTP_MAX_Z: f64 = 4.0;
const MTP_DEGREE3_VALUE: f64 = 1.2;
const MTP_DEGREE3_TOL: f64 = 0.01;
const MTP_CONTROL_MIN_Z: f64 = 5.0;
const MTP_LIMIT: Duration = Duration::from_secs(30);
const PSI_WINDOWS: u64 = 200;
const PSI_MAX_DEPTH: u32 = 8;
const SWEEP_NS: [u32; 7] = [1, 2, 4, 8, 16, 32, 64];
const SWEEP_REPLICAS: u64 = 10_000;
const SWEEP_HORIZON: u32 = 60;
const SWEEP_LIMIT: Duration = Duration::from_secs(120);
const COEX_HORIZONS: [u32; 3] = [30, 45, 60];
const COEX_REPLICAS: u64 = 10_000;
const COEX_MAX_DROP: f64 = 0.30;
const COEX_LIMIT: Duration = Duration::from_secs(180);
const THIN_P: f64 = 0.9;
const THIN_DEPTH: u32 = 14;
const THIN_REPLICAS: u64 = 200_000;
const THIN_MAX_SIGMA: f64 = 4.0;
const THIN_Q_TOL: f64 = 1e-9;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        let verdict = if pass { "PASS" } else { "FAIL" };
        // bypasses the test output capture so the lines always show
        let mut out = std::io::stdout().lock();
        writeln!(out, "acceptance {id:>2} {verdict} {name}: {detail}").unwrap();
        out.flush().unwrap();
    }
}

fn f2_lazy() -> (GroupSpec, StepDistribution<f64>) {
    let g = GroupSpec::free_group(2).unwrap();
    (g, StepDistribution::lazy_uniform(g, 0.2).unwrap())
}

fn standard_mu() -> OffspringDistribution<f64> {
    OffspringDistribution::new(vec![0.2, 0.55, 0.25]).unwrap()
}

fn spectral(r: &mut Report) {
    let (_, q) = f2_lazy();
    let t = Instant::now();
    let closed = spectral_radius(&q).unwrap().value;
    let est = estimate_spectral_radius(&q, 400).unwrap();
    let elapsed = t.elapsed();
    let pass = (est.estimate - RHO_F2_LAZY).abs() <= RHO_TOL
        && (closed - RHO_F2_LAZY).abs() <= 1e-5
        && (est.estimate - closed).abs() <= RHO_TOL
        && elapsed < SPECTRAL_LIMIT;
    r.line(
        1,
        "spectral radius",
        pass,
        format!(
            "series estimate {:.6} (band {:.1e}, lower bound {:.6}), closed form {closed:.6}, {elapsed:?}",
            est.estimate, est.band, est.lower_bound
        ),
    );
}

fn kesten(r: &mut Report) {
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for g in [GroupSpec::free_group(2).unwrap(), GroupSpec::free_product_c2(3).unwrap()] {
        let q = StepDistribution::<f64>::lazy_uniform(g, 0.2).unwrap();
        let rho = spectral_radius(&q).unwrap().value;
        let s = return_probability_series(&q, KESTEN_N).unwrap();
        for n in 0..=KESTEN_N {
            let (p, b) = (s.return_prob(n), rho.powi(n as i32));
            if p > b {
                violations += 1;
            }
            worst = worst.max(p / b);
        }
    }
    r.line(2, "Kesten bound", violations == 0, format!("{violations} violations for n <= {KESTEN_N}, max p/rho^n = {worst:.6}"));
}

fn green(r: &mut Report) {
    let (g, q) = f2_lazy();
    let t = Instant::now();
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for d in 0..=GREEN_MAX_DISTANCE {
        // every element at distance d gives the same value for a radial walk
        let y = g.word(&vec![0; d]).unwrap();
        let s = green_partial_sum(&q, &g.identity(), &y, GREEN_M, GREEN_TERMS).unwrap();
        match (s.certified_upper(), s.lemma_bound) {
            (Some(u), Some(b)) if u <= b => worst = worst.max(u / b),
            _ => violations += 1,
        }
    }
    let elapsed = t.elapsed();
    r.line(
        3,
        "Green bound",
        violations == 0 && elapsed < GREEN_LIMIT,
        format!("{violations} violations for d <= {GREEN_MAX_DISTANCE}, max (partial + tail)/bound = {worst:.4}, {elapsed:?}"),
    );
}

fn ugw_root(r: &mut Report) {
    let mu = OffspringDistribution::new(vec![0.0, 0.5, 0.5]).unwrap();
    let law = ugw_root_law(&mu);
    let mut rng = Seed(4).rng();
    let mut counts = [0u64; 4];
    for _ in 0..UGW_SAMPLES {
        let d = sample_ugw(&mu, 1, &mut rng).degree(0);
        counts[d.min(3)] += 1;
    }
    let probs: Vec<f64> = (0..4).map(|k| law.prob(k)).collect();
    let (stat, df) = chi_square(&counts, &probs);
    let p = 1.0 - ChiSquared::new(df as f64).unwrap().cdf(stat);
    let pass = p > UGW_MIN_P && (probs[2] - 0.6).abs() < 1e-12 && (probs[3] - 0.4).abs() < 1e-12;
    r.line(4, "UGW root law", pass, format!("counts {:?} vs (0.6, 0.4), chi2 = {stat:.3}, df = {df}, p = {p:.4}", &counts[2..]));
}

fn mtp(r: &mut Report) {
    let mu = OffspringDistribution::new(vec![0.0, 0.5, 0.5]).unwrap();
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut degree3 = (0.0, 0.0);
    for (i, f) in TransportFn::family().iter().enumerate() {
        let rep = mtp_check(&mu, f, MTP_SAMPLES, 3, RootBias::Unimodular, Seed(50).derive(i as u64)).unwrap();
        worst = worst.max(rep.z_pooled.abs());
        ok &= rep.balanced(MTP_MAX_Z);
        if *f == (TransportFn::NeighbourDegree { degree: 3 }) {
            degree3 = (rep.outgoing.mean, rep.incoming.mean);
        }
    }
    let f3 = TransportFn::NeighbourDegree { degree: 3 };
    let control = mtp_check(&mu, &f3, MTP_SAMPLES, 3, RootBias::GaltonWatson, Seed(51)).unwrap();
    let elapsed = t.elapsed();
    let d3_ok = (degree3.0 - MTP_DEGREE3_VALUE).abs() <= MTP_DEGREE3_TOL && (degree3.1 - MTP_DEGREE3_VALUE).abs() <= MTP_DEGREE3_TOL;
    let pass = ok && d3_ok && control.z_pooled.abs() > MTP_CONTROL_MIN_Z && elapsed < MTP_LIMIT;
    r.line(
        5,
        "mass transport",
        pass,
        format!(
            "{} functions, max |z| = {worst:.2}; degree-3 sides {:.4} / {:.4}; control z = {:.1}; {elapsed:?}",
            TransportFn::family().len(),
            degree3.0,
            degree3.1,
            control.z_pooled
        ),
    );
}

fn psi(r: &mut Report) {
    let mut rng = Seed(6).rng();
    let mut bad = 0;
    let mut vertices = 0usize;
    for _ in 0..PSI_WINDOWS {
        let radius = rng.random_range(1..=PSI_MAX_DEPTH);
        let k = [1i64, 2, 4][rng.random_range(0..3)];
        let p_open: f64 = rng.random_range(0.2..0.95);
        let n = MarkedTree::regular_ball(3, radius).len();
        let open: Vec<bool> = (0..n).map(|_| rng.random_bool(p_open)).collect();
        let cfg = PsiConfig::regular(3, radius, &open, Rational::from_integer(k.into())).unwrap();
        assert!(cfg.closed());
        let m = psi_masses(&cfg).unwrap();
        vertices += n;
        if m.total() != Rational::from_integer((n as i64).into()) || !m.antisymmetric() || m.psi_from_flow(n) != m.psi {
            bad += 1;
        }
    }
    r.line(6, "psi conservation", bad == 0, format!("{PSI_WINDOWS} closed windows ({vertices} vertices), {bad} with inexact mass or flow"));
}

fn truncated(r: &mut Report) {
    let (g, q) = f2_lazy();
    let t = Instant::now();
    let s = survival_sweep(
        &q,
        &standard_mu(),
        &g.identity(),
        &SWEEP_NS,
        TruncationMode::PaperExact,
        SWEEP_HORIZON,
        SWEEP_REPLICAS,
        2024,
        0,
        Caps::default(),
        0.01,
    )
    .unwrap();
    let elapsed = t.elapsed();
    let alive: Vec<f64> = s.rows.iter().map(|row| row.alive.estimate).collect();
    let monotone = alive.windows(2).all(|w| w[0] <= w[1]);
    let violations = s.coupling_violations.unwrap_or(u64::MAX);
    r.line(
        7,
        "truncated monotonicity",
        monotone && violations == 0 && s.caps_triggered == 0 && elapsed < SWEEP_LIMIT,
        format!("alive {alive:?}, {violations} coupling violations, {} capped, {elapsed:?}", s.caps_triggered),
    );
    let top = s.rows.last().unwrap().alive;
    let gap = (top.estimate - s.plain.estimate).abs();
    let widths = top.width().max(s.plain.width());
    r.line(
        8,
        "truncated survival at N = 64",
        top.ci_low > 0.0 && gap <= 2.0 * widths,
        format!(
            "N = 64: {:.4} [{:.4}, {:.4}]; plain BRW {:.4}; gap {gap:.4} vs 2 CI widths {:.4}",
            top.estimate,
            top.ci_low,
            top.ci_high,
            s.plain.estimate,
            2.0 * widths
        ),
    );
}

fn coexistence(r: &mut Report) {
    let (g, q) = f2_lazy();
    let cfg = CompetingConfig {
        invasive: ProcessSpec { mu: standard_mu(), q: q.clone(), start: g.word(&[0, 0, 2, 2]).unwrap() },
        noninvasive: ProcessSpec { mu: standard_mu(), q: q.clone(), start: g.identity() },
        horizon: 60,
        mode: CompetingMode::Pair,
        caps: Caps::default(),
    };
    let t = Instant::now();
    let est = coexistence_sweep(&cfg, &COEX_HORIZONS, COEX_REPLICAS, 77, 0).unwrap();
    let elapsed = t.elapsed();
    let joint: Vec<f64> = est.iter().map(|e| e.joint.estimate).collect();
    let positive = est.iter().all(|e| e.joint.ci_low > 0.0);
    let drop = (joint[1] - joint[2]) / joint[1];
    let mrho = 1.05 * spectral_radius(&q).unwrap().value;
    r.line(
        9,
        "coexistence",
        positive && drop < COEX_MAX_DROP && elapsed < COEX_LIMIT,
        format!(
            "m rho = {mrho:.4}; joint at T = {COEX_HORIZONS:?}: {joint:?}; lower CI {:?}; drop 45->60 {:.1}%; {elapsed:?}",
            est.iter().map(|e| (e.joint.ci_low * 1e4).round() / 1e4).collect::<Vec<_>>(),
            100.0 * drop
        ),
    );
}

fn thinning(r: &mut Report) {
    let mu = OffspringDistribution::new(vec![0.0, 0.0, 1.0]).unwrap();
    let oracle = thinning_oracle(&mu, THIN_P).unwrap();
    // F(s) = (1 - p + p s)^2 = s has the root ((1 - p) / p)^2 below 1
    let closed = ((1.0 - THIN_P) / THIN_P).powi(2);
    let d = depth_survival(&mu, THIN_P, THIN_DEPTH, THIN_REPLICAS, 10, 0).unwrap();
    let target = d.oracle_conditional;
    let sigma = (target * (1.0 - target) / THIN_REPLICAS as f64).sqrt();
    let z = (d.conditional.estimate - target) / sigma;
    let pass = z.abs() <= THIN_MAX_SIGMA && (oracle.q_star - closed).abs() <= THIN_Q_TOL;
    r.line(
        10,
        "thinning oracle",
        pass,
        format!(
            "depth {THIN_DEPTH}: MC {:.6} vs 1 - e_L = {target:.6} (z = {z:.2}); limit 1 - q* = {:.6}; q* = {:.10} vs closed form {closed:.10}",
            d.conditional.estimate,
            1.0 - oracle.q_star,
            oracle.q_star
        ),
    );
}

fn determinism(r: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut names: Vec<_> = std::fs::read_dir(&configs)
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    names.sort();
    let mut mismatched = Vec::new();
    for cfg in &names {
        let mut bytes = Vec::new();
        for workers in [1, 4] {
            let out = dir.path().join(workers.to_string());
            let opts = brwlab::RunOptions { workers: Some(workers), out: Some(out), trace: false };
            let w = brwlab::run_file(cfg, &opts).unwrap_or_else(|e| panic!("{}: {e}", cfg.display()));
            bytes.push(std::fs::read(w.csv).unwrap());
        }
        if bytes[0] != bytes[1] {
            mismatched.push(cfg.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    r.line(
        11,
        "determinism across worker counts",
        mismatched.is_empty() && !names.is_empty(),
        format!("{} shipped configs at 1 and 4 workers, mismatched: {mismatched:?}", names.len()),
    );
}

fn main() {
    let mut r = Report { failures: 0 };
    spectral(&mut r);
    kesten(&mut r);
    green(&mut r);
    ugw_root(&mut r);
    mtp(&mut r);
    psi(&mut r);
    truncated(&mut r);
    coexistence(&mut r);
    thinning(&mut r);
    determinism(&mut r);
    if r.failures > 0 {
        eprintln!("{} acceptance criteria failed", r.failures);
        std::process::exit(1);
    }
}
