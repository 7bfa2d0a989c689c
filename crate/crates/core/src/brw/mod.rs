//! Generation-synchronous branching random walks stored as family trees.

mod analysis;
mod engine;
mod tree;

pub use analysis::{
    classify_survival_regime, last_exit, site_histogram, visits, visits_in_ball, GenerationTrace, LastExit, Regime,
};
pub use engine::{run_brw, run_brw_with, Caps};
pub use tree::{FamilyTree, Mark, Node, NO_PARENT};
