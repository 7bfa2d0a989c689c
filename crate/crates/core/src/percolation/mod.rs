//! Percolation on marked trees: induced root clusters, unimodular
//! Galton-Watson sampling, mass transport, mass redistribution, anchored
//! isoperimetry and independent site thinning.

mod iso;
mod mtp;
mod psi;
mod thinning;
mod tree;

pub use iso::{anchored_iso, IsoReport, Ratio, DEFAULT_BUDGET};
pub use mtp::{mtp_check, transport_sides, MeanEstimate, MtpReport, RootBias, TransportFn};
pub use psi::{psi_masses, OpenCluster, PsiConfig, PsiMasses};
pub use thinning::{
    depth_extinction, depth_survival, thinned_extinction, thinning_oracle, DepthSurvival, ThinningOracle,
    FIXED_POINT_TOL,
};
pub use tree::{
    bernoulli_site_percolation, induced_root_cluster, sample_gw, sample_ugw, sample_ugw_labeled, MarkedTree, RootCluster,
};
