//! Span programs over Z_p and the decomposition pipeline that turns an
//! arbitrary program into a monotone one computing a valid indicator function.
//!
//! A span program is a matrix M over Z_p, a labelling of each row by an input
//! index and a polarity bit, and a nonzero target vector t. On input z it
//! accepts iff t lies in the span of the rows whose labelled input bit matches
//! their polarity. Input indices are 1-based throughout, matching the file
//! format.

use crate::field::{check_modulus, FieldError, FieldMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpanError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("target vector must be nonzero")]
    ZeroTarget,
    #[error("target length {got} does not match {expected} columns")]
    TargetLength { got: usize, expected: usize },
    #[error("row {row} labelled with input {input}, but the program has {num_inputs} inputs")]
    InputOutOfRange {
        row: usize,
        input: usize,
        num_inputs: usize,
    },
    #[error("row labelling has {got} entries for {rows} rows")]
    LabelCount { got: usize, rows: usize },
    #[error("input has length {got}, program takes {expected} bits")]
    InputLength { got: usize, expected: usize },
    #[error("{n} inputs exceed the cap of {cap} for table enumeration")]
    TooManyInputs { n: usize, cap: usize },
    #[error("table length {0} is not a power of two")]
    BadTableLength(usize),
    #[error("program is not the output of the AND-bit extension: {0}")]
    NotAndExtended(String),
    #[error("epsilon must be 0 or 1, got {0}")]
    BadEpsilon(u64),
    #[error("internal consistency failure (implementation bug): {0}")]
    InternalConsistency(String),
    #[error("unknown library program {0:?}")]
    UnknownLibrary(String),
    #[error("malformed span program file: {0}")]
    Format(String),
}

/// Cap on input count for truth-table enumeration.
pub const TABLE_INPUT_CAP: usize = 20;

/// Labels one matrix row with the 1-based input it watches and the bit value
/// that activates it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowLabel {
    pub input: usize,
    pub epsilon: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanProgram {
    matrix: FieldMatrix,
    phi: Vec<RowLabel>,
    target: Vec<u64>,
    num_inputs: usize,
}

/// The five built-in example programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LibraryFunction {
    And,
    Or,
    Xor,
    Maj3,
    Eq2,
}

impl LibraryFunction {
    pub const ALL: [LibraryFunction; 5] = [
        LibraryFunction::And,
        LibraryFunction::Or,
        LibraryFunction::Xor,
        LibraryFunction::Maj3,
        LibraryFunction::Eq2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LibraryFunction::And => "AND",
            LibraryFunction::Or => "OR",
            LibraryFunction::Xor => "XOR",
            LibraryFunction::Maj3 => "MAJ3",
            LibraryFunction::Eq2 => "EQ2",
        }
    }

    pub fn parse(name: &str) -> Result<Self, SpanError> {
        match name.to_ascii_uppercase().as_str() {
            "AND" => Ok(LibraryFunction::And),
            "OR" => Ok(LibraryFunction::Or),
            "XOR" => Ok(LibraryFunction::Xor),
            "MAJ3" => Ok(LibraryFunction::Maj3),
            "EQ2" => Ok(LibraryFunction::Eq2),
            other => Err(SpanError::UnknownLibrary(other.to_string())),
        }
    }

    /// Reference truth value, used by tests as an oracle.
    pub fn truth(self, z: &[bool]) -> bool {
        match self {
            LibraryFunction::And => z[0] && z[1],
            LibraryFunction::Or => z[0] || z[1],
            LibraryFunction::Xor => z[0] ^ z[1],
            LibraryFunction::Maj3 => (z[0] as u8 + z[1] as u8 + z[2] as u8) >= 2,
            LibraryFunction::Eq2 => z[0] == z[1],
        }
    }

    pub fn num_inputs(self) -> usize {
        match self {
            LibraryFunction::Maj3 => 3,
            _ => 2,
        }
    }
}

impl SpanProgram {
    pub fn new(
        matrix: FieldMatrix,
        phi: Vec<RowLabel>,
        target: Vec<u64>,
        num_inputs: usize,
    ) -> Result<Self, SpanError> {
        if phi.len() != matrix.rows() {
            return Err(SpanError::LabelCount {
                got: phi.len(),
                rows: matrix.rows(),
            });
        }
        if target.len() != matrix.cols() {
            return Err(SpanError::TargetLength {
                got: target.len(),
                expected: matrix.cols(),
            });
        }
        let p = matrix.modulus();
        for &v in &target {
            if v >= p {
                return Err(SpanError::Field(FieldError::EntryOutOfRange {
                    value: v,
                    p,
                }));
            }
        }
        if target.iter().all(|&v| v == 0) {
            return Err(SpanError::ZeroTarget);
        }
        for (i, label) in phi.iter().enumerate() {
            if label.input == 0 || label.input > num_inputs {
                return Err(SpanError::InputOutOfRange {
                    row: i + 1,
                    input: label.input,
                    num_inputs,
                });
            }
        }
        Ok(Self {
            matrix,
            phi,
            target,
            num_inputs,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.matrix.modulus()
    }

    /// Program size: the number of matrix rows.
    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn matrix(&self) -> &FieldMatrix {
        &self.matrix
    }

    pub fn phi(&self) -> &[RowLabel] {
        &self.phi
    }

    pub fn target(&self) -> &[u64] {
        &self.target
    }

    /// True iff every row has polarity 1, so the program computes a monotone
    /// function.
    pub fn is_monotone(&self) -> bool {
        self.phi.iter().all(|l| l.epsilon)
    }

    /// Advisory note when the matrix is wider than tall. Such programs always
    /// have linearly dependent columns that could be deleted without changing
    /// the computed function; they are accepted as-is.
    pub fn width_note(&self) -> Option<String> {
        if self.matrix.cols() > self.matrix.rows() {
            Some(format!(
                "program has {} columns but only {} rows; redundant columns could be removed",
                self.matrix.cols(),
                self.matrix.rows()
            ))
        } else {
            None
        }
    }

    /// 1-based indices of the rows activated by `z`.
    pub fn activated_rows(&self, z: &[bool]) -> Result<Vec<usize>, SpanError> {
        if z.len() != self.num_inputs {
            return Err(SpanError::InputLength {
                got: z.len(),
                expected: self.num_inputs,
            });
        }
        Ok(self
            .phi
            .iter()
            .enumerate()
            .filter(|(_, l)| z[l.input - 1] == l.epsilon)
            .map(|(i, _)| i + 1)
            .collect())
    }

    /// Evaluates the program: 1 iff the target is in the span of the rows
    /// activated by `z`.
    pub fn evaluate(&self, z: &[bool]) -> Result<bool, SpanError> {
        let rows = self.activated_rows(z)?;
        let zero_based: Vec<usize> = rows.iter().map(|r| r - 1).collect();
        let sub = self.matrix.select_rows(&zero_based);
        Ok(sub.in_span(&self.target)?)
    }

    /// Full truth table, indexed so that input 1 is the least significant bit
    /// of the table index.
    pub fn truth_table(&self) -> Result<Vec<bool>, SpanError> {
        if self.num_inputs > TABLE_INPUT_CAP {
            return Err(SpanError::TooManyInputs {
                n: self.num_inputs,
                cap: TABLE_INPUT_CAP,
            });
        }
        let n = self.num_inputs;
        let mut table = Vec::with_capacity(1 << n);
        for idx in 0u32..(1u32 << n) {
            let z: Vec<bool> = (0..n).map(|k| (idx >> k) & 1 == 1).collect();
            table.push(self.evaluate(&z)?);
        }
        Ok(table)
    }

    /// Appends one row, one column, and one input so the new program computes
    /// f(z) AND b, with b the new final input. The added row is (0,...,0,1)
    /// labelled (n+1, 1) and the target gains a trailing 1.
    pub fn extend_with_and_bit(&self) -> SpanProgram {
        let p = self.modulus();
        let d = self.matrix.rows();
        let e = self.matrix.cols();
        let mut rows: Vec<Vec<u64>> = Vec::with_capacity(d + 1);
        for r in 0..d {
            let mut row = self.matrix.row(r).to_vec();
            row.push(0);
            rows.push(row);
        }
        let mut last = vec![0u64; e + 1];
        last[e] = 1;
        rows.push(last);
        let matrix = FieldMatrix::from_rows(p, &rows, e + 1).expect("valid extension");
        let mut phi = self.phi.clone();
        phi.push(RowLabel {
            input: self.num_inputs + 1,
            epsilon: true,
        });
        let mut target = self.target.clone();
        target.push(1);
        SpanProgram::new(matrix, phi, target, self.num_inputs + 1).expect("valid extension")
    }

    /// Relabels an AND-bit-extended program so that every row has polarity 1:
    /// rows watching input k keep index 2k-1 when their polarity was 1 and
    /// move to the negated copy 2k when it was 0; the AND-bit row moves to
    /// input 2m+1. The matrix and target are unchanged.
    pub fn monotonize(&self) -> Result<DecompositionResult, SpanError> {
        self.check_and_extended()?;
        let m = self.num_inputs - 1;
        let d = self.matrix.rows();
        let mut phi = Vec::with_capacity(d);
        for (i, label) in self.phi.iter().enumerate() {
            let input = if i == d - 1 {
                2 * m + 1
            } else if label.epsilon {
                2 * label.input - 1
            } else {
                2 * label.input
            };
            phi.push(RowLabel {
                input,
                epsilon: true,
            });
        }
        let msp = SpanProgram::new(self.matrix.clone(), phi, self.target.clone(), 2 * m + 1)?;
        Ok(DecompositionResult {
            msp,
            g: CopyNegateMap { m },
            original_size: d - 1,
            msp_size: d,
        })
    }

    /// Structural convention for "output of extend_with_and_bit": the last row
    /// is the unit vector on the last column, labelled (n, 1), no other row
    /// touches the last column or the last input, and the target ends in 1.
    fn check_and_extended(&self) -> Result<(), SpanError> {
        let d = self.matrix.rows();
        let e = self.matrix.cols();
        if d == 0 {
            return Err(SpanError::NotAndExtended("program has no rows".into()));
        }
        let last = self.phi[d - 1];
        if last.input != self.num_inputs || !last.epsilon {
            return Err(SpanError::NotAndExtended(format!(
                "last row labelled ({}, {}), expected ({}, 1)",
                last.input, last.epsilon as u8, self.num_inputs
            )));
        }
        let last_row = self.matrix.row(d - 1);
        let unit_ok = last_row[e - 1] == 1 && last_row[..e - 1].iter().all(|&v| v == 0);
        if !unit_ok {
            return Err(SpanError::NotAndExtended(
                "last row is not (0,...,0,1)".into(),
            ));
        }
        for r in 0..d - 1 {
            if self.matrix.get(r, e - 1) != 0 {
                return Err(SpanError::NotAndExtended(format!(
                    "row {} has a nonzero entry in the AND column",
                    r + 1
                )));
            }
            if self.phi[r].input == self.num_inputs {
                return Err(SpanError::NotAndExtended(format!(
                    "row {} watches the AND bit",
                    r + 1
                )));
            }
        }
        if self.target[e - 1] != 1 {
            return Err(SpanError::NotAndExtended("target does not end in 1".into()));
        }
        Ok(())
    }

    /// Runs the AND-bit extension followed by monotonization and verifies the
    /// decomposition contract on the result: f'(z,1) = f(z), f' = f_I o g, f_I
    /// is a valid indicator, and the size grows by exactly one. Any failure
    /// here is an implementation bug, never a property of the input.
    pub fn decompose(&self) -> Result<DecompositionResult, SpanError> {
        let m = self.num_inputs;
        // The indicator check enumerates 2^(2m+1) inputs.
        if 2 * m + 1 > TABLE_INPUT_CAP {
            return Err(SpanError::TooManyInputs {
                n: 2 * m + 1,
                cap: TABLE_INPUT_CAP,
            });
        }
        let extended = self.extend_with_and_bit();
        let result = extended.monotonize()?;

        if result.msp_size != result.original_size + 1 || result.original_size != self.size() {
            return Err(SpanError::InternalConsistency(format!(
                "size relation violated: {} -> {}",
                result.original_size, result.msp_size
            )));
        }
        for idx in 0u32..(1u32 << m) {
            let z: Vec<bool> = (0..m).map(|k| (idx >> k) & 1 == 1).collect();
            let f = self.evaluate(&z)?;
            for b in [false, true] {
                let mut zb = z.clone();
                zb.push(b);
                let f_prime = extended.evaluate(&zb)?;
                if b && f_prime != f {
                    return Err(SpanError::InternalConsistency(format!(
                        "f'(z,1) != f(z) at z={z:?}"
                    )));
                }
                let composed = result.msp.evaluate(&result.g.apply(&z, b))?;
                if composed != f_prime {
                    return Err(SpanError::InternalConsistency(format!(
                        "f_I o g != f' at z={z:?}, b={b}"
                    )));
                }
            }
        }
        let table = result.msp.truth_table()?;
        if let Err(violation) = check_indicator(&table) {
            return Err(SpanError::InternalConsistency(format!(
                "monotonized program is not a valid indicator: {violation}"
            )));
        }
        Ok(result)
    }
}

/// The copy-and-negate map g: (z_1..z_m, b) -> (z_1, !z_1, ..., z_m, !z_m, b).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CopyNegateMap {
    pub m: usize,
}

impl CopyNegateMap {
    pub fn apply(&self, z: &[bool], b: bool) -> Vec<bool> {
        assert_eq!(z.len(), self.m);
        let mut out = Vec::with_capacity(2 * self.m + 1);
        for &bit in z {
            out.push(bit);
            out.push(!bit);
        }
        out.push(b);
        out
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::with_capacity(2 * self.m + 1);
        for i in 1..=self.m {
            parts.push(format!("z{i}"));
            parts.push(format!("¬z{i}"));
        }
        parts.push("b".to_string());
        format!("(z,b) -> ({})", parts.join(","))
    }
}

/// Output of the decomposition pipeline: a monotone indicator-function
/// program on 2m+1 inputs plus the input-relabelling map.
#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub msp: SpanProgram,
    pub g: CopyNegateMap,
    pub original_size: usize,
    pub msp_size: usize,
}

/// Why a truth table fails to be a valid indicator function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndicatorViolation {
    /// f(lower) = 1 but f(upper) = 0 with lower bitwise below upper.
    NotMonotone { lower: u32, upper: u32 },
    /// f(z) = 1 and f(complement of z) = 1, violating no-cloning.
    Cloning { z: u32, z_complement: u32 },
}

impl std::fmt::Display for IndicatorViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IndicatorViolation::NotMonotone { lower, upper } => {
                write!(f, "not monotone: f({lower:#b}) = 1 > f({upper:#b}) = 0")
            }
            IndicatorViolation::Cloning { z, z_complement } => {
                write!(
                    f,
                    "no-cloning violated: f({z:#b}) = f({z_complement:#b}) = 1"
                )
            }
        }
    }
}

/// Checks a truth table for the two indicator-function requirements: the
/// function must be monotone, and f(z) = 1 must force f on the bitwise
/// complement of z to 0. Table index bit k holds input k+1.
pub fn check_indicator(table: &[bool]) -> Result<(), IndicatorViolation> {
    let n = table.len().trailing_zeros() as usize;
    assert!(
        table.len().is_power_of_two() && n <= TABLE_INPUT_CAP,
        "table length must be a power of two within the input cap"
    );
    let mask = (table.len() - 1) as u32;
    // Monotonicity: find z <= z' with f(z) = 1 and f(z') = 0. Checking
    // single-bit increments suffices.
    for idx in 0..table.len() as u32 {
        if !table[idx as usize] {
            continue;
        }
        for k in 0..n {
            if idx >> k & 1 == 1 {
                continue;
            }
            let above = idx | (1 << k);
            if !table[above as usize] {
                return Err(IndicatorViolation::NotMonotone {
                    lower: idx,
                    upper: above,
                });
            }
        }
    }
    for idx in 0..table.len() as u32 {
        let comp = !idx & mask;
        if table[idx as usize] && table[comp as usize] {
            return Err(IndicatorViolation::Cloning {
                z: idx,
                z_complement: comp,
            });
        }
    }
    Ok(())
}

type ProgramParts = (u64, Vec<Vec<u64>>, Vec<(usize, bool)>, Vec<u64>, usize);

/// Builds one of the example programs.
pub fn library_program(f: LibraryFunction) -> SpanProgram {
    let (p, rows, phi, target, n): ProgramParts = match f {
        LibraryFunction::And => (
            2,
            vec![vec![1, 0], vec![0, 1]],
            vec![(1, true), (2, true)],
            vec![1, 1],
            2,
        ),
        LibraryFunction::Or => (
            2,
            vec![vec![1], vec![1]],
            vec![(1, true), (2, true)],
            vec![1],
            2,
        ),
        LibraryFunction::Xor => (
            2,
            vec![vec![1, 0], vec![0, 1], vec![1, 0], vec![0, 1]],
            vec![(1, true), (1, false), (2, true), (2, false)],
            vec![1, 1],
            2,
        ),
        // Shamir-style 2-of-3 threshold over Z_3: any two rows span the
        // target, no single row reaches it. Monotone, so it doubles as the
        // canonical indicator program of the 3-share threshold code.
        LibraryFunction::Maj3 => (
            3,
            vec![vec![1, 1], vec![1, 2], vec![1, 0]],
            vec![(1, true), (2, true), (3, true)],
            vec![0, 1],
            3,
        ),
        // XOR's matrix with the polarities on input 2 flipped.
        LibraryFunction::Eq2 => (
            2,
            vec![vec![1, 0], vec![0, 1], vec![1, 0], vec![0, 1]],
            vec![(1, true), (1, false), (2, false), (2, true)],
            vec![1, 1],
            2,
        ),
    };
    let cols = rows[0].len();
    let matrix = FieldMatrix::from_rows(p, &rows, cols).expect("library matrix");
    let phi = phi
        .into_iter()
        .map(|(input, epsilon)| RowLabel { input, epsilon })
        .collect();
    SpanProgram::new(matrix, phi, target, n).expect("library program")
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpanProgramFile {
    p: u64,
    num_inputs: usize,
    target: Vec<u64>,
    rows: Vec<SpanRowFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpanRowFile {
    coeffs: Vec<u64>,
    input: usize,
    epsilon: u64,
}

impl SpanProgram {
    pub fn to_json(&self) -> String {
        let file = SpanProgramFile {
            p: self.modulus(),
            num_inputs: self.num_inputs,
            target: self.target.clone(),
            rows: (0..self.size())
                .map(|r| SpanRowFile {
                    coeffs: self.matrix.row(r).to_vec(),
                    input: self.phi[r].input,
                    epsilon: self.phi[r].epsilon as u64,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, SpanError> {
        let file: SpanProgramFile =
            serde_json::from_str(text).map_err(|e| SpanError::Format(e.to_string()))?;
        check_modulus(file.p)?;
        let cols = file.target.len();
        if cols == 0 {
            return Err(SpanError::Format("target must be non-empty".into()));
        }
        let mut rows = Vec::with_capacity(file.rows.len());
        let mut phi = Vec::with_capacity(file.rows.len());
        for row in &file.rows {
            if row.epsilon > 1 {
                return Err(SpanError::BadEpsilon(row.epsilon));
            }
            rows.push(row.coeffs.clone());
            phi.push(RowLabel {
                input: row.input,
                epsilon: row.epsilon == 1,
            });
        }
        let matrix = FieldMatrix::from_rows(file.p, &rows, cols)?;
        SpanProgram::new(matrix, phi, file.target, file.num_inputs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(idx: u32, n: usize) -> Vec<bool> {
        (0..n).map(|k| (idx >> k) & 1 == 1).collect()
    }

    /// Independent oracle: test span membership by enumerating all p^d
    /// coefficient vectors over the activated rows, bypassing row reduction.
    fn evaluate_brute(sp: &SpanProgram, z: &[bool]) -> bool {
        let p = sp.modulus();
        let active: Vec<usize> = sp
            .activated_rows(z)
            .unwrap()
            .iter()
            .map(|r| r - 1)
            .collect();
        let d = active.len();
        let total = (p as u128).pow(d as u32);
        for mut idx in 0..total {
            let mut acc = vec![0u64; sp.matrix().cols()];
            for &r in &active {
                let coeff = (idx % p as u128) as u64;
                idx /= p as u128;
                for c in 0..sp.matrix().cols() {
                    acc[c] = (acc[c] + coeff * sp.matrix().get(r, c)) % p;
                }
            }
            if acc == sp.target() {
                return true;
            }
        }
        false
    }

    #[test]
    fn and_program_shape_and_semantics() {
        let and = library_program(LibraryFunction::And);
        assert_eq!(and.matrix().row(0), &[1, 0]);
        assert_eq!(and.matrix().row(1), &[0, 1]);
        assert_eq!(and.target(), &[1, 1]);
        assert!(and.evaluate(&[true, true]).unwrap());
        assert!(!and.evaluate(&[true, false]).unwrap());
        let table: Vec<u8> = and
            .truth_table()
            .unwrap()
            .iter()
            .map(|&b| b as u8)
            .collect();
        assert_eq!(table, vec![0, 0, 0, 1]);
    }

    #[test]
    fn or_program_semantics() {
        let or = library_program(LibraryFunction::Or);
        assert!(!or.evaluate(&[false, false]).unwrap());
        let table: Vec<u8> = or.truth_table().unwrap().iter().map(|&b| b as u8).collect();
        assert_eq!(table, vec![0, 1, 1, 1]);
    }

    #[test]
    fn xor_program_full_table() {
        let xor = library_program(LibraryFunction::Xor);
        let table: Vec<u8> = xor
            .truth_table()
            .unwrap()
            .iter()
            .map(|&b| b as u8)
            .collect();
        assert_eq!(table, vec![0, 1, 1, 0]);
    }

    #[test]
    fn xor_activated_rows() {
        let xor = library_program(LibraryFunction::Xor);
        // z = 10: input 1 set activates row 1, input 2 clear activates row 4.
        assert_eq!(xor.activated_rows(&[true, false]).unwrap(), vec![1, 4]);
    }

    #[test]
    fn and_activates_nothing_on_zero() {
        let and = library_program(LibraryFunction::And);
        assert!(and.activated_rows(&[false, false]).unwrap().is_empty());
    }

    #[test]
    fn monotone_program_activates_all_rows_on_ones() {
        let maj = library_program(LibraryFunction::Maj3);
        assert_eq!(
            maj.activated_rows(&[true, true, true]).unwrap(),
            vec![1, 2, 3]
        );
    }

    #[test]
    fn library_tables_match_reference_functions() {
        for f in LibraryFunction::ALL {
            let sp = library_program(f);
            let n = sp.num_inputs();
            assert_eq!(n, f.num_inputs());
            for idx in 0..(1u32 << n) {
                let z = bits(idx, n);
                assert_eq!(
                    sp.evaluate(&z).unwrap(),
                    f.truth(&z),
                    "{} at {idx:b}",
                    f.name()
                );
            }
        }
    }

    #[test]
    fn library_evaluation_matches_brute_force_oracle() {
        for f in LibraryFunction::ALL {
            let sp = library_program(f);
            let n = sp.num_inputs();
            for idx in 0..(1u32 << n) {
                let z = bits(idx, n);
                assert_eq!(sp.evaluate(&z).unwrap(), evaluate_brute(&sp, &z));
            }
        }
    }

    #[test]
    fn input_length_is_checked() {
        let and = library_program(LibraryFunction::And);
        assert!(matches!(
            and.evaluate(&[true]),
            Err(SpanError::InputLength {
                got: 1,
                expected: 2
            })
        ));
    }

    #[test]
    fn constant_zero_truth_table() {
        // Target outside the column space: single row (1,0), target (0,1).
        let m = FieldMatrix::from_rows(2, &[vec![1, 0]], 2).unwrap();
        let sp = SpanProgram::new(
            m,
            vec![RowLabel {
                input: 1,
                epsilon: true,
            }],
            vec![0, 1],
            1,
        )
        .unwrap();
        assert_eq!(sp.truth_table().unwrap(), vec![false, false]);
    }

    #[test]
    fn zero_target_rejected() {
        let m = FieldMatrix::from_rows(2, &[vec![1]], 1).unwrap();
        let err = SpanProgram::new(
            m,
            vec![RowLabel {
                input: 1,
                epsilon: true,
            }],
            vec![0],
            1,
        );
        assert!(matches!(err, Err(SpanError::ZeroTarget)));
    }

    #[test]
    fn indicator_check_examples() {
        let and = library_program(LibraryFunction::And).truth_table().unwrap();
        assert_eq!(check_indicator(&and), Ok(()));

        let xor = library_program(LibraryFunction::Xor).truth_table().unwrap();
        // f(10) = 1 while f(11) = 0.
        assert_eq!(
            check_indicator(&xor),
            Err(IndicatorViolation::NotMonotone {
                lower: 0b01,
                upper: 0b11
            })
        );

        let ones = vec![true; 4];
        assert!(matches!(
            check_indicator(&ones),
            Err(IndicatorViolation::Cloning { .. })
        ));

        let or = library_program(LibraryFunction::Or).truth_table().unwrap();
        assert!(matches!(
            check_indicator(&or),
            Err(IndicatorViolation::Cloning { .. })
        ));
    }

    #[test]
    fn extend_xor_reproduces_worked_example() {
        let xor = library_program(LibraryFunction::Xor);
        let ext = xor.extend_with_and_bit();
        assert_eq!(ext.size(), 5);
        assert_eq!(ext.matrix().cols(), 3);
        let expected: Vec<&[u64]> =
            vec![&[1, 0, 0], &[0, 1, 0], &[1, 0, 0], &[0, 1, 0], &[0, 0, 1]];
        for (r, want) in expected.iter().enumerate() {
            assert_eq!(ext.matrix().row(r), *want);
        }
        assert_eq!(ext.target(), &[1, 1, 1]);
        assert_eq!(
            ext.phi()[4],
            RowLabel {
                input: 3,
                epsilon: true
            }
        );
    }

    #[test]
    fn extend_and_computes_three_way_and() {
        let and = library_program(LibraryFunction::And);
        let ext = and.extend_with_and_bit();
        assert_eq!(ext.size(), 3);
        for idx in 0..8u32 {
            let z = bits(idx, 3);
            assert_eq!(ext.evaluate(&z).unwrap(), z[0] && z[1] && z[2]);
        }
    }

    #[test]
    fn extension_restricts_to_original_at_b_one() {
        for f in LibraryFunction::ALL {
            let sp = library_program(f);
            let ext = sp.extend_with_and_bit();
            for idx in 0..(1u32 << sp.num_inputs()) {
                let z = bits(idx, sp.num_inputs());
                let mut zb = z.clone();
                zb.push(true);
                assert_eq!(ext.evaluate(&zb).unwrap(), sp.evaluate(&z).unwrap());
            }
        }
    }

    #[test]
    fn monotonize_xor_matches_appendix_labelling() {
        let ext = library_program(LibraryFunction::Xor).extend_with_and_bit();
        let result = ext.monotonize().unwrap();
        let expected: Vec<usize> = vec![1, 2, 3, 4, 5];
        let got: Vec<usize> = result.msp.phi().iter().map(|l| l.input).collect();
        assert_eq!(got, expected);
        assert!(result.msp.is_monotone());
        assert_eq!(result.msp.num_inputs(), 5);
    }

    #[test]
    fn monotonize_requires_and_extension() {
        let xor = library_program(LibraryFunction::Xor);
        assert!(matches!(
            xor.monotonize(),
            Err(SpanError::NotAndExtended(_))
        ));
    }

    #[test]
    fn decompose_all_library_programs() {
        for f in LibraryFunction::ALL {
            let sp = library_program(f);
            let result = sp.decompose().unwrap();
            assert_eq!(result.msp_size, sp.size() + 1, "{}", f.name());
            assert!(result.msp.is_monotone());
            let table = result.msp.truth_table().unwrap();
            assert_eq!(check_indicator(&table), Ok(()), "{}", f.name());
        }
    }

    #[test]
    fn decompose_or_composes_correctly() {
        let or = library_program(LibraryFunction::Or);
        let result = or.decompose().unwrap();
        assert_eq!(result.msp.size(), 3);
        assert_eq!(result.msp.num_inputs(), 5);
        for idx in 0..4u32 {
            let z = bits(idx, 2);
            let composed = result.msp.evaluate(&result.g.apply(&z, true)).unwrap();
            assert_eq!(composed, z[0] || z[1]);
        }
    }

    #[test]
    fn copy_negate_map_description() {
        let g = CopyNegateMap { m: 2 };
        assert_eq!(g.describe(), "(z,b) -> (z1,¬z1,z2,¬z2,b)");
        assert_eq!(
            g.apply(&[true, false], true),
            vec![true, false, false, true, true]
        );
    }

    #[test]
    fn monotone_programs_compute_monotone_functions() {
        // Every all-ones-polarity program in the corpus is monotone as a
        // function: checked exhaustively over single-bit increments.
        for f in LibraryFunction::ALL {
            let result = library_program(f).decompose().unwrap();
            let msp = result.msp;
            let n = msp.num_inputs();
            let table = msp.truth_table().unwrap();
            for idx in 0..(1u32 << n) {
                for k in 0..n {
                    if idx >> k & 1 == 0 {
                        let above = idx | (1 << k);
                        assert!(table[idx as usize] <= table[above as usize]);
                    }
                }
            }
        }
    }

    #[test]
    fn json_round_trip() {
        for f in LibraryFunction::ALL {
            let sp = library_program(f);
            let back = SpanProgram::from_json(&sp.to_json()).unwrap();
            assert_eq!(sp, back);
        }
    }

    #[test]
    fn json_rejects_out_of_range_entries() {
        let text = r#"{"p": 2, "num_inputs": 1, "target": [1], "rows": [{"coeffs": [2], "input": 1, "epsilon": 1}]}"#;
        assert!(SpanProgram::from_json(text).is_err());
        let text = r#"{"p": 2, "num_inputs": 1, "target": [1], "rows": [{"coeffs": [1], "input": 1, "epsilon": 3}]}"#;
        assert!(matches!(
            SpanProgram::from_json(text),
            Err(SpanError::BadEpsilon(3))
        ));
        let text = r#"{"p": 6, "num_inputs": 1, "target": [1], "rows": []}"#;
        assert!(SpanProgram::from_json(text).is_err());
    }
}
