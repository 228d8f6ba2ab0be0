//! Jordan-form combinatorics, the `Ψ` reduction, exact genericity checks and a
//! numerical witness lab for the Deligne–Simpson problem.
//!
//! The crate is organised bottom-up:
//!
//! - [`jnf`]: partitions, Jordan forms, `r`, `d`, `κ` and the conditions `(α)`, `(β)`, `(ω)`;
//! - [`reduction`]: the reduction `Ψ`, the solvability decision and the `κ = 0` classifier;
//! - [`spectra`]: exact eigenvalues, non-genericity relations, `q`, `ξ`, `l` and sampling;
//! - [`witness`]: numerical search for matrix tuples and their diagnostics;
//! - [`io`] and [`experiment`]: JSON schemas and reproducible experiment presets.

pub mod experiment;
pub mod io;
pub mod jnf;
pub mod reduction;
pub mod spectra;
pub mod witness;

pub use jnf::{ClassTuple, ConditionReport, EigenSlot, JnfError, JordanForm, Mode, MultiplicityVector, Partition};
pub use reduction::{
    classify_kappa0_stop, decide_generic, psi_step, DecisionTrace, PsiStep, ReductionError, StopCase, StopTag, Verdict,
};
pub use spectra::{ExactEigen, GcdData, Relation, SpectraError, Spectrum};
pub use witness::{ConcreteClass, Diagnostics, SearchReport, Witness, WitnessError};
