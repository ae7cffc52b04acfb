//! Scott analysis and independent axiomatization for finite relational structures.
//!
//! Every semantic judgement in this crate is taken relative to a [`ModelSpace`]: all
//! isomorphism classes of structures up to a fixed size over a fixed signature. A verdict
//! such as "independent" or "equivalent" therefore certifies the claim over that bound only,
//! and every report records the bound it was computed under.
//!
//! Layout:
//!
//! - [`model`]: signatures, structures, the formula AST, the s-expression grammar,
//!   evaluation, and model spaces.
//! - [`scott`]: back-and-forth type partitions, Scott height, Scott sentences and
//!   isomorphism invariants.
//! - [`transforms`]: theory transforms that produce independent axiomatizations.
//! - [`setfam`]: finite set families and the two independent-family constructions.
//! - [`verify`]: brute-force oracles that certify the above.
//! - [`fuzz`]: seeded instance generators and the fuzz loop used by the CLI and tests.

pub mod fuzz;
pub mod model;
pub mod scott;
pub mod setfam;
pub mod transforms;
pub mod verify;

pub use model::{
    Assignment, Axiom, Entailment, Formula, ModelError, ModelSpace, Origin, Provenance,
    Signature, Structure, Theory,
};
pub use scott::{CanonicalInvariant, ScottError, ScottReport, TypeId, TypePartition};
pub use setfam::{SetFamily, SetFamilyError};
pub use transforms::{Method, TransformError, TransformReport};
pub use verify::{Verdict, VerificationReport, VerifyError};
