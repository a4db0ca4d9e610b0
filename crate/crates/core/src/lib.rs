//! Exact-arithmetic engine for harmonic functions on the infinite d-regular
//! tree.
//!
//! A harmonic function here is one whose value at every vertex equals the
//! average of its neighbors' values. Models are built level by level from
//! root data plus a splitter rule, in either an enumerated (one record per
//! vertex) or class-compressed representation. On top of the models the
//! crate computes level aggregates and three monotone functionals -- the
//! weighted Dirichlet energy G, the Weiss functional W, and the Almgren
//! frequency N -- and verifies the algebraic identities relating them.

pub mod error;
pub mod functionals;
pub mod identities;
pub mod model;
pub mod modelfile;
pub mod oracles;
pub mod scalar;
pub mod splitter;
pub mod tree;

pub use error::{Error, Result};
pub use functionals::{
    aggregates, almgren_n, almgren_series, dirichlet_g, dirichlet_g_series, f_level, f_series,
    monotonicity_report, weiss_series, weiss_w, weiss_w2, FunctionalKind, FunctionalSeries,
    LevelAggregates, MonotonicityVerdict,
};
pub use identities::{
    identity_suite, identity_suite_with, scalar_inequality_checks, IdentityReport, SuiteOptions,
};
pub use model::{
    build_model, check_harmonic, compress, linear_2reg, states_equivalent, CompressedLevel,
    EnumeratedLevel, HarmonicModel, HarmonicityVerdict, LevelState, Representation, RootData,
    VertexRecord,
};
pub use oracles::{builtin_model, oracle_diff, BuiltinModel, DiffReport};
pub use scalar::{parse_rational, BigFloat, Exponent, Scalar, ScalarMode, DEFAULT_PRECISION};
pub use splitter::Splitter;
pub use tree::{TreeConfig, VertexAddress};
