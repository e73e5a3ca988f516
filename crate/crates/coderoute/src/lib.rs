//! Code-routing protocols for the f-routing task.
//!
//! This crate compiles Boolean functions into tapes of share records built
//! from quantum secret sharing schemes, accounts their entanglement cost,
//! evaluates where the routed system ends up with three independent
//! algorithms, and verifies small threshold-code instances end to end with a
//! dense qudit state-vector simulation.
//!
//! The pieces:
//!
//! - [`field`]: exact linear algebra over Z_p.
//! - [`span`]: span programs, the built-in example library, and the
//!   decomposition into monotone indicator-function programs.
//! - [`protocol`]: the protocol tape and tree, validation, and the H, H~ and
//!   E metrics.
//! - [`formula`]: the Boolean formula grammar and De Morgan normalization.
//! - [`compile`]: tape construction from formulas, indicator functions,
//!   arbitrary span programs, and the garden-hose examples.
//! - [`eval`]: the recursive, mod-p, and bounded-memory evaluators.
//! - [`qsim`]: the state-vector simulator and the quantum verification
//!   harness.
//! - [`tapegen`]: seeded random tapes for the equivalence harness.

pub mod compile;
pub mod eval;
pub mod field;
pub mod formula;
pub mod protocol;
pub mod qsim;
pub mod span;
pub mod tapegen;

pub use compile::{
    compile_formula, compile_garden_hose, compile_theorem1_indicator, compile_theorem2,
    garden_hose_resource_pairs, CompileError, GardenHoseFunction,
};
pub use eval::{
    eval_depth_first, eval_modp, get_owner, lemma3_transform, DepthFirstReport, EvalError,
    OwnerReport,
};
pub use field::{FieldError, FieldMatrix};
pub use formula::{parse_formula, Formula, FormulaError};
pub use protocol::{
    BitRef, CodeSpec, ProtocolError, ProtocolTape, ProtocolTree, RecordKind, ShareRecord, Side,
};
pub use span::{
    check_indicator, library_program, CopyNegateMap, DecompositionResult, IndicatorViolation,
    LibraryFunction, SpanError, SpanProgram,
};
