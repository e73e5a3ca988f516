//! Dense state-vector simulation of base-k qudit registers, and the quantum
//! verification harness that runs small tapes as genuine protocols.

mod run;
mod state;

pub use run::{
    decode_threshold23, encode_threshold23, run_quantum_tape, simulate_garden_hose, teleport,
    RunReport, SimConfig, DEFAULT_REGISTER_CAP,
};
pub use state::{trace_distance, Owner, PureState, QuditId};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QsimError {
    #[error(transparent)]
    Protocol(#[from] crate::protocol::ProtocolError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
    #[error("record {index}: {reason} is not one-round realizable")]
    NotRealizable { index: usize, reason: String },
    #[error("record {index}: smith codes are verified classically only")]
    SmithNotSimulable { index: usize },
    #[error("register needs {needed} qudits, cap is {cap}")]
    RegisterTooLarge { needed: usize, cap: usize },
    #[error("threshold code needs base 3, tape has base {0}")]
    BadBase(u64),
    #[error("cannot Bell-measure across sides: qudits are held by {0:?} and {1:?}")]
    SidesMismatch(Owner, Owner),
    #[error("decoding needs two distinct shares, got share {0} twice")]
    DecodeSameShare(usize),
}
