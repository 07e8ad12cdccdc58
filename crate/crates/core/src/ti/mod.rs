//! Boolean share arithmetic and the three-share Sbox.

mod decomposition;
mod shares;
mod verify;

pub use decomposition::{
    direct_sharing, quadratic_f, quadratic_g, ComponentTable, SboxDecomposition, ShareComponents,
    SharedSbox, Stage, TableError, COMPONENT_INPUTS, SHIPPED_TABLES,
};
pub use shares::{expand_2to3, recombine_2to1, reduce_3to2, split_1to2, Share2, Share3};
pub use verify::{
    verify_all, verify_correctness, verify_noncompleteness, verify_uniformity, Counterexample,
    Property, PropertyReport, TiReport, MAX_COUNTEREXAMPLES,
};
