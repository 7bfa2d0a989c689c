use brwlab_core::brw::{last_exit, run_brw_with, visits_in_ball, GenerationTrace};
use brwlab_core::competing::{adapted_sweep, coexistence_sweep, CompetingConfig, CompetingMode, ProcessSpec};
use brwlab_core::group::{estimate_spectral_radius, return_probability_series, spectral_radius};
use brwlab_core::gw::{gamma_truncate, ThinnedOffspring};
use brwlab_core::percolation::{depth_survival, mtp_check, thinning_oracle};
use brwlab_core::truncated::survival_sweep;
use brwlab_core::{BrwError, Seed};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Experiment, Plan, Walk};
use crate::table::{num, Table};

/// Everything an experiment produces before it is written out.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub table: Table,
    /// Kind-specific figures that do not fit the per-row layout.
    pub summary: Value,
    /// NDJSON records, filled only when traces were requested.
    pub traces: Vec<Value>,
    /// Replicas, summed over rows, that hit a resource cap.
    pub caps_triggered: u64,
}

pub fn execute(plan: &Plan, trace: bool) -> Result<Outcome, BrwError> {
    match &plan.experiment {
        Experiment::Brw { walk, horizon, gammas, ball_radius } => brw(plan, walk, *horizon, gammas, *ball_radius, trace),
        Experiment::Truncated { walk, horizon, ns, mode, eps } => {
            let s = survival_sweep(&walk.q, &walk.mu, &walk.start, ns, *mode, *horizon, plan.replicas, plan.seed, 0, plan.caps, *eps)?;
            let mut table = Table::new(&[
                "N",
                "mode",
                "horizon",
                "replicas",
                "alive_fraction",
                "ci_low",
                "ci_high",
                "mean_cluster_size",
                "mrho",
                "window",
                "caps_triggered",
            ]);
            for r in &s.rows {
                table.push(vec![
                    r.n.to_string(),
                    s.mode.as_str().into(),
                    s.horizon.to_string(),
                    s.replicas.to_string(),
                    num(r.alive.estimate),
                    num(r.alive.ci_low),
                    num(r.alive.ci_high),
                    num(r.mean_cluster_size),
                    num(s.mrho),
                    String::new(),
                    s.caps_triggered.to_string(),
                ]);
            }
            let summary = json!({
                "plain_alive": s.plain,
                "critical": s.critical,
                "coupling_violations": s.coupling_violations,
                "mu_assumption": walk.mu.satisfies_assumption(),
            });
            let traces = if trace { s.rows.iter().map(|r| json!({"record": "sweep_row", "row": r})).collect() } else { vec![] };
            Ok(Outcome { caps_triggered: s.caps_triggered, table, summary, traces })
        }
        Experiment::Competing { invasive, noninvasive, horizons } => {
            let cfg = competing_config(invasive, noninvasive, *horizons.iter().max().unwrap_or(&1), CompetingMode::Pair, plan);
            let estimates = coexistence_sweep(&cfg, horizons, plan.replicas, plan.seed, 0)?;
            let mut table = competing_table();
            let mut capped = 0;
            for e in &estimates {
                capped += e.caps_triggered;
                table.push(vec![
                    "pair".into(),
                    String::new(),
                    String::new(),
                    e.horizon.to_string(),
                    String::new(),
                    e.replicas.to_string(),
                    num(e.invasive.estimate),
                    num(e.noninvasive.estimate),
                    num(e.joint.estimate),
                    num(e.joint.ci_low),
                    num(e.joint.ci_high),
                    String::new(),
                    String::new(),
                    e.caps_triggered.to_string(),
                ]);
            }
            let rho_i = spectral_radius(&invasive.q)?.value;
            let summary = json!({
                "m_rho_invasive": invasive.mu.mean() * rho_i,
                "start_distance": invasive.q.group().norm(&invasive.start),
            });
            let traces = if trace { estimates.iter().map(|e| json!({"record": "coexistence", "estimate": e})).collect() } else { vec![] };
            Ok(Outcome { table, summary, traces, caps_triggered: capped })
        }
        Experiment::Adapted { invasive, noninvasive, horizon, ns, gammas, window } => {
            let mut table = competing_table();
            let mut traces = Vec::new();
            let mut capped = 0;
            let mut cell = 0u64;
            for &n in ns {
                for &gamma in gammas {
                    let mode = CompetingMode::Adapted { n, gamma, window: *window };
                    let cfg = competing_config(invasive, noninvasive, *horizon, mode, plan);
                    cfg.validate()?;
                    let d = adapted_sweep(&cfg, plan.replicas, plan.seed, cell)?;
                    cell += 1;
                    capped += d.caps_triggered;
                    table.push(vec![
                        "adapted".into(),
                        n.to_string(),
                        num(gamma),
                        horizon.to_string(),
                        window.to_string(),
                        plan.replicas.to_string(),
                        String::new(),
                        num(d.noninvasive_alive.estimate),
                        String::new(),
                        num(d.dagger.ci_low),
                        num(d.dagger.ci_high),
                        num(d.dagger.estimate),
                        num(d.mean_seeded),
                        d.caps_triggered.to_string(),
                    ]);
                    if trace {
                        traces.push(json!({"record": "dagger_marginal", "N": n, "gamma": gamma, "estimate": d}));
                    }
                }
            }
            let rho_i = spectral_radius(&invasive.q)?.value;
            let summary = json!({ "m_rho_invasive": invasive.mu.mean() * rho_i });
            Ok(Outcome { table, summary, traces, caps_triggered: capped })
        }
        Experiment::Percolation { mu, ps, depths } => {
            let mut table = Table::new(&[
                "p",
                "depth",
                "replicas",
                "alive_frac",
                "ci_low",
                "ci_high",
                "oracle_value",
                "oracle_limit",
                "horizon",
                "window",
                "caps_triggered",
            ]);
            let mut traces = Vec::new();
            let mut oracles = Vec::new();
            for (cell, &p) in ps.iter().enumerate() {
                let o = thinning_oracle(mu, p)?;
                oracles.push(json!({"p": p, "q_star": o.q_star, "survival": o.survival(), "conditional_survival": o.conditional_survival()}));
                // one cell per p: every depth reuses the same trees
                for &depth in depths {
                    let d = depth_survival(mu, p, depth, plan.replicas, plan.seed, cell as u64)?;
                    table.push(vec![
                        num(p),
                        depth.to_string(),
                        plan.replicas.to_string(),
                        num(d.conditional.estimate),
                        num(d.conditional.ci_low),
                        num(d.conditional.ci_high),
                        num(d.oracle_conditional),
                        num(1.0 - o.q_star),
                        depth.to_string(),
                        String::new(),
                        "0".into(),
                    ]);
                    if trace {
                        traces.push(json!({"record": "depth_survival", "estimate": d}));
                    }
                }
            }
            Ok(Outcome { table, summary: json!({ "oracles": oracles }), traces, caps_triggered: 0 })
        }
        Experiment::Spectral { q, n_max, checkpoints } => {
            let series = return_probability_series(q, *n_max)?;
            let rho = spectral_radius(q)?;
            let est = estimate_spectral_radius(q, *n_max)?;
            let mut table = Table::new(&["n", "return_prob", "root", "kesten_bound", "rho", "horizon", "window", "caps_triggered"]);
            for &n in checkpoints {
                let p = series.return_prob(n);
                let root = if n == 0 { f64::NAN } else { p.powf(1.0 / n as f64) };
                table.push(vec![
                    n.to_string(),
                    num(p),
                    num(root),
                    num(rho.value.powi(n as i32)),
                    num(rho.value),
                    n_max.to_string(),
                    String::new(),
                    "0".into(),
                ]);
            }
            let summary = json!({ "spectral_radius": rho, "series_estimate": est });
            Ok(Outcome { table, summary, traces: vec![], caps_triggered: 0 })
        }
        Experiment::Mtp { mu, samples, depth, bias, functions } => {
            let mut table = Table::new(&[
                "function",
                "bias",
                "samples",
                "outgoing",
                "incoming",
                "difference",
                "pooled_se",
                "z_pooled",
                "z_paired",
                "horizon",
                "window",
                "caps_triggered",
            ]);
            let mut traces = Vec::new();
            for (cell, f) in functions.iter().enumerate() {
                let r = mtp_check(mu, f, *samples, *depth, *bias, Seed(plan.seed).derive(cell as u64))?;
                table.push(vec![
                    r.function.clone(),
                    match r.bias {
                        brwlab_core::percolation::RootBias::Unimodular => "unimodular".into(),
                        brwlab_core::percolation::RootBias::GaltonWatson => "galton_watson".into(),
                    },
                    r.samples.to_string(),
                    num(r.outgoing.mean),
                    num(r.incoming.mean),
                    num(r.difference.mean),
                    num(r.pooled_std_error),
                    num(r.z_pooled),
                    num(r.z_paired),
                    depth.to_string(),
                    String::new(),
                    "0".into(),
                ]);
                if trace {
                    traces.push(json!({"record": "mtp", "report": r}));
                }
            }
            Ok(Outcome { table, summary: json!({}), traces, caps_triggered: 0 })
        }
    }
}

fn competing_table() -> Table {
    Table::new(&[
        "mode",
        "N",
        "gamma",
        "horizon",
        "window",
        "replicas",
        "inv_alive_frac",
        "noninv_alive_frac",
        "joint_frac",
        "ci_low",
        "ci_high",
        "dagger_marginal",
        "mean_seeded",
        "caps_triggered",
    ])
}

fn competing_config(invasive: &Walk, noninvasive: &Walk, horizon: u32, mode: CompetingMode, plan: &Plan) -> CompetingConfig<f64> {
    let spec = |w: &Walk| ProcessSpec { mu: w.mu.clone(), q: w.q.clone(), start: w.start.clone() };
    CompetingConfig { invasive: spec(invasive), noninvasive: spec(noninvasive), horizon, mode, caps: plan.caps }
}

#[derive(Default)]
struct BrwTally {
    alive: u64,
    population: u64,
    ball: u64,
    capped: u64,
    /// Per radius `1..=ball_radius`: summed last exit times and censored runs.
    exits: Vec<(u64, u64)>,
    traces: Vec<Value>,
}

fn brw(plan: &Plan, walk: &Walk, horizon: u32, gammas: &[f64], ball_radius: u32, trace: bool) -> Result<Outcome, BrwError> {
    let rho = spectral_radius(&walk.q)?.value;
    let mut table = Table::new(&[
        "gamma",
        "m_gamma",
        "mrho",
        "horizon",
        "replicas",
        "alive_frac",
        "ci_low",
        "ci_high",
        "mean_population",
        "mean_ball_visits",
        "window",
        "caps_triggered",
    ]);
    let mut traces = Vec::new();
    let mut last_exits = Vec::new();
    let mut capped = 0;
    for &gamma in gammas {
        let m_gamma = gamma_truncate(&walk.mu, gamma)?.m_gamma;
        let branching = ThinnedOffspring { base: &walk.mu, gamma };
        // common seeds across gammas give a monotone coupling in gamma
        let per: Vec<BrwTally> = (0..plan.replicas)
            .into_par_iter()
            .map(|r| {
                let tree = run_brw_with(&walk.q, &branching, &walk.start, horizon, Seed::replica(plan.seed, 0, r), plan.caps)?;
                let mut t = BrwTally {
                    alive: tree.reaches(horizon) as u64,
                    population: if tree.reaches(horizon) { tree.generation(horizon).len() as u64 } else { 0 },
                    ball: visits_in_ball(&tree, ball_radius) as u64,
                    capped: tree.truncated() as u64,
                    exits: (1..=ball_radius)
                        .map(|n| {
                            let e = last_exit(&tree, n);
                            (e.value as u64, e.censored as u64)
                        })
                        .collect(),
                    traces: vec![],
                };
                if trace {
                    t.traces = GenerationTrace::from_tree(&tree, ball_radius)
                        .into_iter()
                        .map(|g| json!({"record": "generation", "gamma": gamma, "replica": r, "trace": g}))
                        .collect();
                }
                Ok(t)
            })
            .collect::<Result<_, BrwError>>()?;
        let mut total = BrwTally { exits: vec![(0, 0); ball_radius as usize], ..Default::default() };
        for t in per {
            for (acc, e) in total.exits.iter_mut().zip(&t.exits) {
                acc.0 += e.0;
                acc.1 += e.1;
            }
            total.alive += t.alive;
            total.population += t.population;
            total.ball += t.ball;
            total.capped += t.capped;
            traces.extend(t.traces);
        }
        let n = plan.replicas;
        let p = brwlab_core::stats::Proportion::wilson(total.alive, n);
        capped += total.capped;
        // empirical stand-ins for the existential constants bounding R_n / n
        let exits: Vec<Value> = total
            .exits
            .iter()
            .enumerate()
            .map(|(i, &(sum, cens))| {
                let mean = sum as f64 / n as f64;
                json!({"n": i + 1, "mean_last_exit": mean, "ratio": mean / (i + 1) as f64, "censored_fraction": cens as f64 / n as f64})
            })
            .collect();
        last_exits.push(json!({"gamma": gamma, "radii": exits}));
        table.push(vec![
            num(gamma),
            num(m_gamma),
            num(m_gamma * rho),
            horizon.to_string(),
            n.to_string(),
            num(p.estimate),
            num(p.ci_low),
            num(p.ci_high),
            num(total.population as f64 / n as f64),
            num(total.ball as f64 / n as f64),
            ball_radius.to_string(),
            total.capped.to_string(),
        ]);
    }
    let summary = json!({
        "rho": rho,
        "regime": brwlab_core::brw::classify_survival_regime(walk.mu.mean(), rho),
        "mu_assumption": walk.mu.satisfies_assumption(),
        "start": walk.start.to_string(),
        "last_exit": last_exits,
    });
    Ok(Outcome { table, summary, traces, caps_triggered: capped })
}
