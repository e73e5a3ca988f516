//! Seeded random tape generation for the evaluator-equivalence harness.
//!
//! Generated tapes are valid by construction: every share is produced once,
//! consumed at most once, teleports always cross sides, and encodings only
//! act on unit-dimension shares. Each encoding has at most one child whose
//! subtree contains further encodings, which keeps the bounded-memory
//! evaluator's override set within its arity bound (see the notes on
//! Theorem 5 in the evaluator module).

use crate::field::FieldMatrix;
use crate::protocol::{BitRef, CodeSpec, ProtocolTape, RecordKind, ShareRecord, Side};
use crate::span::{RowLabel, SpanProgram};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Parameters for the random family. Defaults match the acceptance harness.
#[derive(Debug, Clone, Copy)]
pub struct TapeGenParams {
    pub max_depth: usize,
    pub max_arity: usize,
    pub max_bits_per_side: usize,
}

impl Default for TapeGenParams {
    fn default() -> Self {
        TapeGenParams {
            max_depth: 6,
            max_arity: 3,
            max_bits_per_side: 6,
        }
    }
}

/// Seed for the randomized harness: `CODEROUTE_SEED` if set, else a fixed
/// default.
pub fn seed_from_env() -> u64 {
    std::env::var("CODEROUTE_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0xC0DE_0001)
}

/// Small monotone span programs over Z_p used as random Smith codes, chosen
/// so every input owns at least one row and the matrix is no wider than tall.
fn smith_pool(p: u64) -> Vec<SpanProgram> {
    let mk = |rows: Vec<Vec<u64>>, inputs: Vec<usize>, target: Vec<u64>, n: usize| {
        let cols = target.len();
        let matrix = FieldMatrix::from_rows(p, &rows, cols).unwrap();
        let phi = inputs
            .into_iter()
            .map(|input| RowLabel {
                input,
                epsilon: true,
            })
            .collect();
        SpanProgram::new(matrix, phi, target, n).unwrap()
    };
    let mut pool = vec![
        // 2-input AND: both shares needed.
        mk(vec![vec![1, 0], vec![0, 1]], vec![1, 2], vec![1, 1], 2),
        // 2-input OR: either share recovers.
        mk(vec![vec![1], vec![1]], vec![1, 2], vec![1], 2),
        // OR with a two-row first share.
        mk(
            vec![vec![1, 0], vec![0, 1], vec![1, 1]],
            vec![1, 1, 2],
            vec![1, 1],
            2,
        ),
        // 3-input OR.
        mk(vec![vec![1], vec![1], vec![1]], vec![1, 2, 3], vec![1], 3),
        // 3-input AND with a wide middle share.
        mk(
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 1, 0], vec![0, 0, 1]],
            vec![1, 2, 2, 3],
            vec![1, 1, 1],
            3,
        ),
    ];
    if p == 3 {
        // 2-of-3 threshold, same access structure as the threshold code.
        pool.push(mk(
            vec![vec![1, 1], vec![1, 2], vec![1, 0]],
            vec![1, 2, 3],
            vec![0, 1],
            3,
        ));
    }
    pool
}

pub fn random_tape(rng: &mut ChaCha8Rng, params: &TapeGenParams) -> ProtocolTape {
    let base = *[2u64, 3].choose(rng).unwrap();
    let left_bits = rng.gen_range(1..=params.max_bits_per_side);
    let right_bits = rng.gen_range(1..=params.max_bits_per_side);
    let mut gen = Generator {
        rng,
        base,
        left_bits,
        right_bits,
        params: *params,
        records: Vec::new(),
        counter: 0,
        pool: smith_pool(base),
    };
    gen.grow("q".to_string(), Side::Left, 1, params.max_depth, true);
    // The root must be consumed; an unconsumed root becomes an explicit keep.
    if !gen.records.iter().any(|r| r.input == "q") {
        gen.records.push(ShareRecord {
            input: "q".into(),
            outputs: vec![],
            kind: RecordKind::Send(Side::Left),
        });
    }
    ProtocolTape {
        base,
        left_bits,
        right_bits,
        root_id: "q".into(),
        root_log_dim: 1,
        records: gen.records,
    }
}

struct Generator<'a> {
    rng: &'a mut ChaCha8Rng,
    base: u64,
    left_bits: usize,
    right_bits: usize,
    params: TapeGenParams,
    records: Vec<ShareRecord>,
    counter: usize,
    pool: Vec<SpanProgram>,
}

impl Generator<'_> {
    fn fresh(&mut self) -> String {
        self.counter += 1;
        format!("s{}", self.counter)
    }

    fn random_bit_ref(&mut self) -> BitRef {
        let side = if self.rng.gen_bool(0.5) {
            Side::Left
        } else {
            Side::Right
        };
        let len = match side {
            Side::Left => self.left_bits,
            Side::Right => self.right_bits,
        };
        BitRef {
            side,
            index: self.rng.gen_range(1..=len),
            negated: self.rng.gen_bool(0.5),
        }
    }

    /// Terminates the share with a unit-route, a send, or by keeping it.
    fn leaf(&mut self, share: String, holder: Side) {
        match self.rng.gen_range(0..4u8) {
            0 => {
                let dest = if self.rng.gen_bool(0.5) {
                    holder
                } else {
                    holder.opposite()
                };
                self.records.push(ShareRecord {
                    input: share,
                    outputs: vec![],
                    kind: RecordKind::Send(dest),
                });
            }
            1 => {} // kept
            _ => {
                let bit = self.random_bit_ref();
                self.records.push(ShareRecord {
                    input: share,
                    outputs: vec![],
                    kind: RecordKind::UnitRoute(bit),
                });
            }
        }
    }

    /// Grows the subtree fed by `share`. `may_encode` limits sibling
    /// encodings: only one child of each encoding may contain further
    /// encodings.
    fn grow(&mut self, share: String, holder: Side, log_dim: u32, depth: usize, may_encode: bool) {
        let can_encode = may_encode && depth > 0 && log_dim == 1;
        let choice = self.rng.gen_range(0..10u8);
        if can_encode && choice < 5 {
            let codes: Vec<CodeSpec> = {
                let mut v: Vec<CodeSpec> = self
                    .pool
                    .iter()
                    .filter(|sp| sp.num_inputs() <= self.params.max_arity)
                    .cloned()
                    .map(CodeSpec::Smith)
                    .collect();
                if self.base == 3 {
                    v.push(CodeSpec::Threshold23);
                }
                v
            };
            let code = codes.choose(self.rng).unwrap().clone();
            let dims = code.share_log_dims();
            let outputs: Vec<String> = (0..code.num_shares()).map(|_| self.fresh()).collect();
            self.records.push(ShareRecord {
                input: share,
                outputs: outputs.clone(),
                kind: RecordKind::Encode(code),
            });
            let deep_child = self.rng.gen_range(0..outputs.len());
            for (i, (out, dim)) in outputs.into_iter().zip(dims).enumerate() {
                self.grow(out, holder, dim, depth - 1, i == deep_child);
            }
        } else if depth > 0 && choice < 7 {
            let next = self.fresh();
            self.records.push(ShareRecord {
                input: share,
                outputs: vec![next.clone()],
                kind: RecordKind::Teleport(holder.opposite()),
            });
            self.grow(next, holder.opposite(), log_dim, depth - 1, may_encode);
        } else {
            self.leaf(share, holder);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn generated_tapes_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = TapeGenParams::default();
        for _ in 0..50 {
            let tape = random_tape(&mut rng, &params);
            let tree = tape.validate().expect("generated tape must be valid");
            assert!(tree.size_h() <= tree.weighted_size());
        }
    }

    #[test]
    fn generation_is_deterministic_for_a_seed() {
        let params = TapeGenParams::default();
        let mut a = ChaCha8Rng::seed_from_u64(42);
        let mut b = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            assert_eq!(random_tape(&mut a, &params), random_tape(&mut b, &params));
        }
    }
}
