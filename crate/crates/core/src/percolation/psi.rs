//! Mass redistribution on a window of the regular tree.
//!
//! Every vertex starts with mass one. An open cluster `C` that is finite and
//! has `|C| / |∂C| < K` sends all its mass to its closed vertex boundary,
//! each boundary vertex receiving `|C| / |∂C|`; every other vertex keeps its
//! mass. On a finite window a cluster counts as infinite when it reaches the
//! outer layer of the window.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::tree::MarkedTree;
use crate::brw::Mark;
use crate::error::{BrwError, Result};
use crate::scalar::Field;

#[derive(Clone, Debug)]
pub struct PsiConfig<F> {
    /// Window with the site configuration as marks (open = alive).
    pub window: MarkedTree,
    pub k: F,
}

impl<F: Field> PsiConfig<F> {
    /// Ball of radius `radius` in the `degree`-regular tree with the given
    /// open/closed pattern in vertex order.
    pub fn regular(degree: usize, radius: u32, open: &[bool], k: F) -> Result<Self> {
        let mut window = MarkedTree::regular_ball(degree, radius);
        if open.len() != window.len() {
            return Err(BrwError::OutOfRange {
                name: "open",
                detail: format!("{} marks for a window of {} vertices", open.len(), window.len()),
            });
        }
        for (v, &o) in open.iter().enumerate() {
            window.set_mark(v as u32, if o { Mark::Alive } else { Mark::Dead });
        }
        Ok(PsiConfig { window, k })
    }

    /// The window is a full ball: every vertex strictly inside has all its
    /// neighbours in the window, so every cluster that misses the outer
    /// layer is seen whole together with its boundary.
    pub fn closed(&self) -> bool {
        let t = &self.window;
        if t.is_empty() {
            return false;
        }
        let d = t.degree(0);
        (0..t.len() as u32).filter(|&v| t.depth(v) < t.max_depth()).all(|v| t.degree(v) == d)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OpenCluster {
    pub vertices: Vec<u32>,
    /// Closed neighbours of the cluster.
    pub boundary: Vec<u32>,
    /// Touches the outer layer; treated as infinite.
    pub spanning: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsiMasses<F> {
    pub psi: Vec<F>,
    /// `flow[(v, w)]` is the mass moved from `v` to `w`; stored for both
    /// orientations with opposite signs.
    pub flow: BTreeMap<(u32, u32), F>,
    pub clusters: Vec<OpenCluster>,
}

impl<F: Field> PsiMasses<F> {
    pub fn total(&self) -> F {
        self.psi.iter().cloned().fold(F::zero(), |a, b| a + b)
    }

    /// `1 - sum_w flow(v, w)` for every vertex.
    pub fn psi_from_flow(&self, n: usize) -> Vec<F> {
        let mut out = vec![F::one(); n];
        for (&(v, _), m) in &self.flow {
            out[v as usize] = out[v as usize].clone() - m.clone();
        }
        out
    }

    pub fn antisymmetric(&self) -> bool {
        self.flow
            .iter()
            .all(|(&(v, w), m)| self.flow.get(&(w, v)).is_some_and(|r| r.clone() + m.clone() == F::zero()))
    }
}

fn open_clusters(t: &MarkedTree) -> Vec<OpenCluster> {
    let n = t.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n as u32 {
        if seen[s as usize] || t.mark(s) == Mark::Dead {
            continue;
        }
        seen[s as usize] = true;
        let mut stack = vec![s];
        let mut vertices = Vec::new();
        let mut boundary = BTreeSet::new();
        let mut spanning = false;
        while let Some(v) = stack.pop() {
            vertices.push(v);
            spanning |= t.depth(v) == t.max_depth();
            for w in t.neighbours(v) {
                if t.mark(w) == Mark::Dead {
                    boundary.insert(w);
                } else if !seen[w as usize] {
                    seen[w as usize] = true;
                    stack.push(w);
                }
            }
        }
        vertices.sort_unstable();
        out.push(OpenCluster { vertices, boundary: boundary.into_iter().collect(), spanning });
    }
    out
}

pub fn psi_masses<F: Field>(cfg: &PsiConfig<F>) -> Result<PsiMasses<F>> {
    if !cfg.closed() {
        return Err(BrwError::WindowNotClosed("window is not a full ball of a regular tree".into()));
    }
    let t = &cfg.window;
    let clusters = open_clusters(t);
    let mut psi = vec![F::one(); t.len()];
    let mut flow = BTreeMap::new();
    for c in &clusters {
        if c.spanning || c.boundary.is_empty() {
            continue;
        }
        let size = F::from_count(c.vertices.len());
        let bsize = F::from_count(c.boundary.len());
        let ratio = size / bsize.clone();
        if ratio >= cfg.k {
            continue;
        }
        let unit = F::one() / bsize;
        for &v in &c.vertices {
            psi[v as usize] = F::zero();
        }
        for &w in &c.boundary {
            psi[w as usize] = psi[w as usize].clone() + ratio.clone();
            for &v in &c.vertices {
                flow.insert((v, w), unit.clone());
                flow.insert((w, v), F::zero() - unit.clone());
            }
        }
    }
    Ok(PsiMasses { psi, flow, clusters })
}
