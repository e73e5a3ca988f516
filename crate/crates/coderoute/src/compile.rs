//! Tape construction: the single-encoding indicator protocol, the general
//! span-program protocol, formula concatenation, and the two garden-hose
//! examples.

use crate::formula::Formula;
use crate::protocol::{
    BitRef, CodeSpec, ProtocolError, ProtocolTape, RecordKind, ShareRecord, Side,
};
use crate::span::{check_indicator, IndicatorViolation, SpanError, SpanProgram};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("not a valid indicator function: {0}")]
    InvalidIndicator(IndicatorViolation),
    #[error("span program is not monotone, so it defines no secret sharing scheme")]
    NotMonotone,
    #[error("assignment has {got} bits, program has {expected} inputs")]
    AssignmentLength { got: usize, expected: usize },
    #[error("input split {alpha} + {beta} does not match the program's {inputs} inputs")]
    BadSplit {
        alpha: usize,
        beta: usize,
        inputs: usize,
    },
    #[error(transparent)]
    Span(#[from] SpanError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

struct TapeBuilder {
    records: Vec<ShareRecord>,
    counter: usize,
}

impl TapeBuilder {
    fn new() -> Self {
        TapeBuilder {
            records: Vec::new(),
            counter: 0,
        }
    }

    fn fresh(&mut self) -> String {
        self.counter += 1;
        format!("s{}", self.counter)
    }

    fn push(&mut self, input: String, outputs: Vec<String>, kind: RecordKind) {
        self.records.push(ShareRecord {
            input,
            outputs,
            kind,
        });
    }
}

/// Compiles a normalized formula into a tape of concatenated 3-share
/// threshold codes. An AND keeps one share with the current holder, an OR
/// sends one share to the opposite side, and each leaf unit-routes on its
/// variable. The root system starts on the left.
pub fn compile_formula(formula: &Formula) -> Result<ProtocolTape, CompileError> {
    let (left_bits, right_bits) = formula.input_widths();
    let mut b = TapeBuilder::new();
    compile_node(formula, "q".to_string(), Side::Left, &mut b);
    let tape = ProtocolTape {
        base: 3,
        left_bits,
        right_bits,
        root_id: "q".into(),
        root_log_dim: 1,
        records: b.records,
    };
    tape.validate()?;
    Ok(tape)
}

fn compile_node(node: &Formula, share: String, holder: Side, b: &mut TapeBuilder) {
    match node {
        Formula::Var(bit) => {
            b.push(share, vec![], RecordKind::UnitRoute(*bit));
        }
        Formula::And(lhs, rhs) => {
            let fixed = b.fresh();
            let l = b.fresh();
            let r = b.fresh();
            // The kept share counts as a 0 input to the 2-of-3 indicator,
            // so the secret moves right only when both subtrees do.
            b.push(
                share,
                vec![fixed, l.clone(), r.clone()],
                RecordKind::Encode(CodeSpec::Threshold23),
            );
            compile_node(lhs, l, holder, b);
            compile_node(rhs, r, holder, b);
        }
        Formula::Or(lhs, rhs) => {
            let fixed = b.fresh();
            let l = b.fresh();
            let r = b.fresh();
            b.push(
                share,
                vec![fixed.clone(), l.clone(), r.clone()],
                RecordKind::Encode(CodeSpec::Threshold23),
            );
            // One share crosses unconditionally: a 1 input to the indicator.
            b.push(fixed, vec![], RecordKind::Send(holder.opposite()));
            compile_node(lhs, l, holder, b);
            compile_node(rhs, r, holder, b);
        }
    }
}

/// Single-encoding protocol for a function that is already a valid indicator:
/// encode Q into the Smith code of the monotone program on the left, keep the
/// purifier, and unit-route share i on the caller-assigned bit.
pub fn compile_theorem1_indicator(
    msp: &SpanProgram,
    assignment: &[BitRef],
) -> Result<ProtocolTape, CompileError> {
    let table = msp.truth_table()?;
    check_indicator(&table).map_err(CompileError::InvalidIndicator)?;
    if !msp.is_monotone() {
        return Err(CompileError::NotMonotone);
    }
    if assignment.len() != msp.num_inputs() {
        return Err(CompileError::AssignmentLength {
            got: assignment.len(),
            expected: msp.num_inputs(),
        });
    }
    let mut left_bits = 0;
    let mut right_bits = 0;
    for bit in assignment {
        match bit.side {
            Side::Left => left_bits = left_bits.max(bit.index),
            Side::Right => right_bits = right_bits.max(bit.index),
        }
    }
    let mut b = TapeBuilder::new();
    let outputs: Vec<String> = (0..msp.num_inputs()).map(|_| b.fresh()).collect();
    b.push(
        "q".into(),
        outputs.clone(),
        RecordKind::Encode(CodeSpec::Smith(msp.clone())),
    );
    for (share, bit) in outputs.into_iter().zip(assignment) {
        b.push(share, vec![], RecordKind::UnitRoute(*bit));
    }
    let tape = ProtocolTape {
        base: msp.modulus(),
        left_bits,
        right_bits,
        root_id: "q".into(),
        root_log_dim: 1,
        records: b.records,
    };
    tape.validate()?;
    Ok(tape)
}

/// General protocol: decompose the program for h into a monotone indicator
/// program on 2m+1 inputs, encode Q once into the corresponding Smith code,
/// unit-route share 2k-1 on input bit k and share 2k on its negation, and
/// send the final share (the AND bit, fixed to 1) to the right. Inputs
/// 1..=alpha_len are read from the left string, the rest from the right.
pub fn compile_theorem2(
    sp: &SpanProgram,
    alpha_len: usize,
    beta_len: usize,
) -> Result<ProtocolTape, CompileError> {
    if alpha_len + beta_len != sp.num_inputs() {
        return Err(CompileError::BadSplit {
            alpha: alpha_len,
            beta: beta_len,
            inputs: sp.num_inputs(),
        });
    }
    let decomposition = sp.decompose()?;
    let msp = decomposition.msp;
    let m = decomposition.g.m;

    let mut b = TapeBuilder::new();
    let outputs: Vec<String> = (0..2 * m + 1).map(|_| b.fresh()).collect();
    b.push(
        "q".into(),
        outputs.clone(),
        RecordKind::Encode(CodeSpec::Smith(msp)),
    );
    for k in 1..=m {
        let bit = if k <= alpha_len {
            BitRef::left(k)
        } else {
            BitRef::right(k - alpha_len)
        };
        b.push(
            outputs[2 * k - 2].clone(),
            vec![],
            RecordKind::UnitRoute(bit),
        );
        b.push(
            outputs[2 * k - 1].clone(),
            vec![],
            RecordKind::UnitRoute(bit.negate()),
        );
    }
    b.push(
        outputs[2 * m].clone(),
        vec![],
        RecordKind::Send(Side::Right),
    );

    let tape = ProtocolTape {
        base: sp.modulus(),
        left_bits: alpha_len,
        right_bits: beta_len,
        root_id: "q".into(),
        root_log_dim: 1,
        records: b.records,
    };
    tape.validate()?;
    Ok(tape)
}

/// The two garden-hose figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GardenHoseFunction {
    And,
    Or,
}

impl GardenHoseFunction {
    pub fn truth(self, x: bool, y: bool) -> bool {
        match self {
            GardenHoseFunction::And => x && y,
            GardenHoseFunction::Or => x || y,
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "AND" => Some(GardenHoseFunction::And),
            "OR" => Some(GardenHoseFunction::Or),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GardenHoseFunction::And => "AND",
            GardenHoseFunction::Or => "OR",
        }
    }
}

/// EPR pairs in the resource state of the garden-hose figure: 2 for AND and 3
/// for OR. A fixed resource must cover every input, so this exceeds the
/// per-input tape cost on inputs that measure fewer pairs.
pub fn garden_hose_resource_pairs(f: GardenHoseFunction) -> u64 {
    match f {
        GardenHoseFunction::And => 2,
        GardenHoseFunction::Or => 3,
    }
}

/// Per-input garden-hose tape: the chain of Bell measurements the figure
/// actually performs on Q's path at this input, as teleports, ending in a
/// kept share. The measurements are conditional (Alice_0 on x, Alice_1 on y),
/// so the tape depends on the input.
pub fn compile_garden_hose(f: GardenHoseFunction, x: bool, y: bool) -> ProtocolTape {
    let mut records = Vec::new();
    let hops: &[Side] = match (f, x, y) {
        // AND: Alice_0 measures iff x = 1, Alice_1 measures iff y = 0.
        (GardenHoseFunction::And, true, true) => &[Side::Right],
        (GardenHoseFunction::And, true, false) => &[Side::Right, Side::Left],
        (GardenHoseFunction::And, false, _) => &[],
        // OR: Alice_0 teleports into the y-pipe pair when x = 1, and into
        // the first pair otherwise; Alice_1 bridges pairs 1 and 2 iff y = 0.
        (GardenHoseFunction::Or, true, _) => &[Side::Right],
        (GardenHoseFunction::Or, false, true) => &[Side::Right],
        (GardenHoseFunction::Or, false, false) => &[Side::Right, Side::Left],
    };
    let mut current = "q".to_string();
    for (i, dest) in hops.iter().enumerate() {
        let next = format!("s{}", i + 1);
        records.push(ShareRecord {
            input: current,
            outputs: vec![next.clone()],
            kind: RecordKind::Teleport(*dest),
        });
        current = next;
    }
    if hops.is_empty() {
        // Root kept in place, written out explicitly.
        records.push(ShareRecord {
            input: current,
            outputs: vec![],
            kind: RecordKind::Send(Side::Left),
        });
    }
    ProtocolTape {
        base: 2,
        left_bits: 1,
        right_bits: 1,
        root_id: "q".into(),
        root_log_dim: 1,
        records,
    }
}
