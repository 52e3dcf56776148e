//! Post-processing order on quantum instruments and POVMs.
//!
//! Instruments are kept in Kraus form and compared through their Choi
//! matrices. The crate decides and certifies when one instrument (or POVM)
//! is obtained from another by classical or quantum post-processing, and
//! returns explicit witnesses that can be replayed.

pub mod classify;
pub mod error;
pub mod instrument;
pub mod linalg;
pub mod lp;
pub mod order;
pub mod povm;
pub mod random;
pub mod simulate;
pub mod validation;

pub use classify::*;
pub use error::{Error, Result};
pub use instrument::*;
pub use linalg::{ComplexMatrix, Tolerance, C64};
pub use order::*;
pub use povm::*;
pub use random::{
    random_identity_class, random_instrument, random_isometry, random_measure_and_prepare, random_povm,
    random_rank_one_povm, random_state, Seed,
};
pub use simulate::*;
pub use validation::{ValidationReport, Violation};
