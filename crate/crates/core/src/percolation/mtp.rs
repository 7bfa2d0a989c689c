use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use super::tree::{sample_gw, sample_ugw, MarkedTree};
use crate::error::{BrwError, Result};
use crate::gw::OffspringDistribution;
use crate::scalar::Real;
use crate::seed::Seed;
use crate::stats::{Moments, Z95};

/// Bounded-range transport functions `f(G, u, x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransportFn {
    /// `1{x ~ u}`.
    Adjacent,
    /// `1{x ~ u, deg(x) = degree}`.
    NeighbourDegree { degree: usize },
    /// `1{x ~ u, deg(u) = degree}`.
    SourceDegree { degree: usize },
    /// `1{d(u, x) = 2}`.
    DistanceTwo,
    /// `1{d(u, x) = 2, deg(x) = degree}`.
    DistanceTwoDegree { degree: usize },
    /// `1{d(u, x) = 2, deg(w) = degree}` for the midpoint `w`.
    ThroughDegree { degree: usize },
}

impl TransportFn {
    /// The family checked by default.
    pub fn family() -> Vec<TransportFn> {
        vec![
            TransportFn::Adjacent,
            TransportFn::NeighbourDegree { degree: 2 },
            TransportFn::NeighbourDegree { degree: 3 },
            TransportFn::SourceDegree { degree: 3 },
            TransportFn::DistanceTwo,
            TransportFn::DistanceTwoDegree { degree: 3 },
            TransportFn::ThroughDegree { degree: 2 },
        ]
    }

    /// Largest `d(u, x)` with `f(G, u, x) != 0`.
    pub fn reach(&self) -> u32 {
        match self {
            TransportFn::Adjacent | TransportFn::NeighbourDegree { .. } | TransportFn::SourceDegree { .. } => 1,
            _ => 2,
        }
    }

    /// Sampling depth that makes every evaluation around the root exact.
    pub fn radius(&self) -> u32 {
        self.reach() + 1
    }

    pub fn name(&self) -> String {
        match self {
            TransportFn::Adjacent => "adjacent".into(),
            TransportFn::NeighbourDegree { degree } => format!("neighbour_degree_{degree}"),
            TransportFn::SourceDegree { degree } => format!("source_degree_{degree}"),
            TransportFn::DistanceTwo => "distance_two".into(),
            TransportFn::DistanceTwoDegree { degree } => format!("distance_two_degree_{degree}"),
            TransportFn::ThroughDegree { degree } => format!("through_degree_{degree}"),
        }
    }

    /// `f(G, u, x)`, given `d(u, x)` and the midpoint when the distance is 2.
    fn eval(&self, t: &MarkedTree, u: u32, x: u32, dist: u32, mid: Option<u32>) -> f64 {
        let hit = match *self {
            TransportFn::Adjacent => dist == 1,
            TransportFn::NeighbourDegree { degree } => dist == 1 && t.degree(x) == degree,
            TransportFn::SourceDegree { degree } => dist == 1 && t.degree(u) == degree,
            TransportFn::DistanceTwo => dist == 2,
            TransportFn::DistanceTwoDegree { degree } => dist == 2 && t.degree(x) == degree,
            TransportFn::ThroughDegree { degree } => dist == 2 && mid.is_some_and(|w| t.degree(w) == degree),
        };
        hit as u8 as f64
    }
}

/// Vertices within distance `r` of the root, with distance and the vertex
/// preceding them on the geodesic.
fn ball(t: &MarkedTree, r: u32) -> Vec<(u32, u32, Option<u32>)> {
    let mut out = vec![(0, 0, None)];
    let mut queue = VecDeque::from([(0u32, 0u32, None::<u32>)]);
    while let Some((v, d, from)) = queue.pop_front() {
        if d == r {
            continue;
        }
        for w in t.neighbours(v) {
            if Some(w) != from {
                out.push((w, d + 1, Some(v)));
                queue.push_back((w, d + 1, Some(v)));
            }
        }
    }
    out
}

/// `(sum_x f(G, o, x), sum_x f(G, x, o))` on one rooted tree.
pub fn transport_sides(t: &MarkedTree, f: &TransportFn) -> (f64, f64) {
    let (mut out, mut inn) = (0.0, 0.0);
    for (x, d, prev) in ball(t, f.reach()) {
        // the midpoint of a distance-2 pair is the vertex before x on the geodesic
        let mid = if d == 2 { prev } else { None };
        out += f.eval(t, 0, x, d, mid);
        inn += f.eval(t, x, 0, d, mid);
    }
    (out, inn)
}

/// How the root of the sampled trees is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootBias {
    Unimodular,
    /// Plain Galton-Watson root; not unimodular, used as a negative control.
    GaltonWatson,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl From<&Moments> for MeanEstimate {
    fn from(m: &Moments) -> Self {
        let se = m.std_error();
        MeanEstimate { mean: m.mean, std_error: se, ci_low: m.mean - Z95 * se, ci_high: m.mean + Z95 * se }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MtpReport {
    pub function: String,
    pub bias: RootBias,
    pub samples: u64,
    /// `E sum_x f(G, o, x)`.
    pub outgoing: MeanEstimate,
    /// `E sum_x f(G, x, o)`.
    pub incoming: MeanEstimate,
    /// Mean of the per-sample difference and its standard error.
    pub difference: MeanEstimate,
    /// `sqrt(se_out^2 + se_in^2)`, ignoring the correlation of the sides.
    pub pooled_std_error: f64,
    /// Mean difference in pooled standard errors.
    pub z_pooled: f64,
    /// Mean difference in units of its paired standard error; zero when both
    /// sides agree on every sample.
    pub z_paired: f64,
}

impl MtpReport {
    /// `|outgoing - incoming| <= max_z` pooled standard errors.
    pub fn balanced(&self, max_z: f64) -> bool {
        self.z_pooled.abs() <= max_z
    }
}

fn ratio(num: f64, se: f64) -> f64 {
    if se > 0.0 {
        num / se
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

const CHUNK: u64 = 4096;

pub fn mtp_check<T: Real>(
    mu: &OffspringDistribution<T>,
    f: &TransportFn,
    samples: u64,
    depth: u32,
    bias: RootBias,
    seed: Seed,
) -> Result<MtpReport> {
    if samples == 0 {
        return Err(BrwError::NoReplicas);
    }
    if depth < f.radius() {
        return Err(BrwError::RadiusTooLarge { needed: f.radius(), depth });
    }
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<[Moments; 3]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed.derive(c).rng();
            let mut m: [Moments; 3] = Default::default();
            for _ in (c * CHUNK)..((c + 1) * CHUNK).min(samples) {
                let t = match bias {
                    RootBias::Unimodular => sample_ugw(mu, depth, &mut rng),
                    RootBias::GaltonWatson => sample_gw(mu, depth, &mut rng),
                };
                let (a, b) = transport_sides(&t, f);
                m[0].push(a);
                m[1].push(b);
                m[2].push(a - b);
            }
            m
        })
        .collect();
    let mut total: [Moments; 3] = Default::default();
    for p in &parts {
        for j in 0..3 {
            total[j].merge(&p[j]);
        }
    }
    let (outgoing, incoming) = (MeanEstimate::from(&total[0]), MeanEstimate::from(&total[1]));
    let difference = MeanEstimate::from(&total[2]);
    let pooled = outgoing.std_error.hypot(incoming.std_error);
    Ok(MtpReport {
        function: f.name(),
        bias,
        samples,
        outgoing,
        incoming,
        difference,
        pooled_std_error: pooled,
        z_pooled: ratio(difference.mean, pooled),
        z_paired: ratio(difference.mean, difference.std_error),
    })
}
