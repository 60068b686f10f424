//! Invariant block multilinear completely positive maps on finite-dimensional
//! C*-algebras: evaluation, amplification, Gram kernels, Stinespring-type
//! dilations, and norm estimation.

pub mod algebra;
pub mod blockmap;
mod chain;
pub mod error;
pub mod factory;
pub mod gram;
pub mod invariance;
pub mod io;
pub mod linalg;
pub mod multimap;
pub mod norms;
pub mod stinespring;

pub use algebra::{Algebra, AlgebraElement, Amplification, MatrixOverAlgebra, MatrixUnit};
pub use blockmap::{BlockMultilinearMap, BlockView};
pub use error::{Error, Result};
pub use factory::{random_icp, standard_corpus, CorpusEntry, IcpSpec};
pub use gram::{
    build_gram, cp_refute, gram_is_psd, positivity_falsify, Counterexample, CounterexampleKind, FalsifyOptions,
    GramKernel,
};
pub use invariance::{InvarianceOptions, InvarianceReport};
pub use linalg::{CMat, CVec};
pub use multimap::MultilinearMap;
pub use norms::{
    cb_16_bound_check, cb_russo_dye_check, norm_estimate, russo_dye_check, CheckStatus, NormEstimate, NormOptions,
};
pub use stinespring::{
    dilate, minimal_compress, unitary_equivalence, verify_dilation, DilateOptions, DilationTriple, Representation,
};
