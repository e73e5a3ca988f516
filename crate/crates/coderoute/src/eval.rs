//! Three independently derived algorithms that decide on which side the
//! routed system ends up, for a validated tape and concrete inputs.
//!
//! `get_owner` walks the tree recursively and runs one span-membership test
//! per encoding, with a field-operation audit against the quadratic run-time
//! bound. `eval_modp` replaces every node by exact path-count arithmetic mod
//! p and never branches on intermediate bits. `eval_depth_first` evaluates
//! the tree with a bounded override set instead of a recursion stack.

use crate::field::{check_modulus, pow_mod, FieldError};
use crate::protocol::{ProtocolError, ProtocolTree, RecordKind, Side};
use crate::span::SpanError;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Span(#[from] SpanError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("field-operation audit exceeded: {ops} operations against budget {budget}")]
    AuditExceeded { ops: u64, budget: u64 },
    #[error("encode fan-in {got} exceeds the cap of {cap} for the mod-p sum")]
    FanInExceeded { got: usize, cap: usize },
    #[error("encode with {got} shares exceeds the arity bound {bound}")]
    ArityExceeded { got: usize, bound: usize },
    #[error("override set grew to {got}, beyond the arity bound {bound}")]
    OverrideSetExceeded { got: usize, bound: usize },
    #[error("evaluators disagree: mod-{p} composition gave {got}, tree walk gave {expected}")]
    ModpMismatch { p: u64, got: u64, expected: u64 },
}

/// Default cap on encode fan-in for the 2^k multilinear sum.
pub const MODP_FAN_IN_CAP: usize = 16;
/// Default arity bound for the bounded-memory evaluator.
pub const DEPTH_FIRST_ARITY_BOUND: usize = 3;

/// Result of the recursive tree walk, with its run-time audit: `field_ops`
/// counts row eliminations across all span-membership tests and must stay
/// within `budget`, the sum of squared total share sizes over the visited
/// encodings.
#[derive(Debug, Clone, Copy)]
pub struct OwnerReport {
    pub owner: Side,
    pub field_ops: u64,
    pub budget: u64,
}

/// Recursive evaluation: a unit-route resolves its bit, a send lands on its
/// side, a teleport passes through, a kept share stays with its holder, and
/// an encoding collects the children recoverable on the right as activated
/// rows of its indicator program and tests span membership of the target.
pub fn get_owner(tree: &ProtocolTree, x: &[bool], y: &[bool]) -> Result<OwnerReport, EvalError> {
    tree.tape().check_input_lengths(x, y)?;
    let mut audit = (0u64, 0u64);
    let owner = resolve_share(tree, &tree.tape().root_id, x, y, &mut audit)?;
    let (field_ops, budget) = audit;
    if field_ops > budget {
        return Err(EvalError::AuditExceeded {
            ops: field_ops,
            budget,
        });
    }
    Ok(OwnerReport {
        owner,
        field_ops,
        budget,
    })
}

/// Side on which a single share (and the subtree hanging off it) is
/// recoverable, without the run-time audit.
pub fn share_owner(
    tree: &ProtocolTree,
    share: &str,
    x: &[bool],
    y: &[bool],
) -> Result<Side, EvalError> {
    let mut audit = (0u64, 0u64);
    resolve_share(tree, share, x, y, &mut audit)
}

fn resolve_share(
    tree: &ProtocolTree,
    share: &str,
    x: &[bool],
    y: &[bool],
    audit: &mut (u64, u64),
) -> Result<Side, EvalError> {
    let Some(idx) = tree.consumer_of(share) else {
        return Ok(tree.holder_of(share));
    };
    let rec = tree.record(idx);
    match &rec.kind {
        RecordKind::UnitRoute(bit) => Ok(Side::from_bit(bit.resolve(x, y))),
        RecordKind::Send(dest) => Ok(*dest),
        RecordKind::Teleport(_) => resolve_share(tree, &rec.outputs[0], x, y, audit),
        RecordKind::Encode(code) => {
            let program = code.indicator_program();
            let mut z = Vec::with_capacity(rec.outputs.len());
            for out in &rec.outputs {
                z.push(resolve_share(tree, out, x, y, audit)? == Side::Right);
            }
            let activated: Vec<usize> = program
                .phi()
                .iter()
                .enumerate()
                .filter(|(_, label)| z[label.input - 1])
                .map(|(i, _)| i)
                .collect();
            let sub = program.matrix().select_rows(&activated);
            let (hit, ops) = sub.in_span_counted(program.target())?;
            let share_size = code.total_share_size() as u64;
            audit.0 += ops;
            audit.1 += share_size * share_size;
            Ok(Side::from_bit(hit))
        }
    }
}

/// Fermat path-count normalization: from a machine with `f0` accepting and
/// `f0bar` rejecting paths, produce counts (f2, f2bar) with f2 = [f0 != 0 mod
/// p] and f2bar = 1 - f2, both mod p.
pub fn lemma3_transform(f0: u64, f0bar: u64, p: u64) -> Result<(u64, u64), EvalError> {
    check_modulus(p)?;
    let f1 = pow_mod(f0, p - 1, p);
    let f2 = f1;
    let f2bar = ((1 + (p as u128 - 1) * f1 as u128 + p as u128 * f0bar as u128) % p as u128) as u64;
    Ok((f2, f2bar))
}

/// Multilinear path-count composition of one node: given the indicator table
/// of the node and the children's values a_j in Z_p, returns
/// sum over z of f(z) * prod_j (z_j a_j + (1 - z_j)(1 - a_j)) mod p.
pub fn modp_compose(table: &[bool], children: &[u64], p: u64) -> u64 {
    let k = children.len();
    debug_assert_eq!(table.len(), 1 << k);
    let mut total: u128 = 0;
    for (z, &accepted) in table.iter().enumerate() {
        if !accepted {
            continue;
        }
        let mut term: u128 = 1;
        for (j, &a) in children.iter().enumerate() {
            let factor = if z >> j & 1 == 1 {
                a
            } else {
                (1 + p - a % p) % p
            };
            term = term * factor as u128 % p as u128;
        }
        total = (total + term) % p as u128;
    }
    total as u64
}

/// Bottom-up evaluation where every node carries a value in Z_p. Leaves carry
/// their resolved bit, teleports pass values through, and encodings apply the
/// multilinear extension of their indicator function. On a valid tape all
/// values stay exactly 0 or 1, and the result is checked against the tree
/// walk before being returned.
pub fn eval_modp(tree: &ProtocolTree, x: &[bool], y: &[bool], p: u64) -> Result<Side, EvalError> {
    eval_modp_capped(tree, x, y, p, MODP_FAN_IN_CAP)
}

pub fn eval_modp_capped(
    tree: &ProtocolTree,
    x: &[bool],
    y: &[bool],
    p: u64,
    fan_in_cap: usize,
) -> Result<Side, EvalError> {
    check_modulus(p)?;
    tree.tape().check_input_lengths(x, y)?;
    let value = modp_share_value(tree, &tree.tape().root_id, x, y, p, fan_in_cap)?;
    let expected = get_owner(tree, x, y)?.owner;
    if value != expected.bit() as u64 {
        return Err(EvalError::ModpMismatch {
            p,
            got: value,
            expected: expected.bit() as u64,
        });
    }
    Ok(Side::from_bit(value == 1))
}

fn modp_share_value(
    tree: &ProtocolTree,
    share: &str,
    x: &[bool],
    y: &[bool],
    p: u64,
    cap: usize,
) -> Result<u64, EvalError> {
    let Some(idx) = tree.consumer_of(share) else {
        return Ok(tree.holder_of(share).bit() as u64 % p);
    };
    let rec = tree.record(idx);
    match &rec.kind {
        RecordKind::UnitRoute(bit) => Ok(bit.resolve(x, y) as u64 % p),
        RecordKind::Send(dest) => Ok(dest.bit() as u64 % p),
        RecordKind::Teleport(_) => modp_share_value(tree, &rec.outputs[0], x, y, p, cap),
        RecordKind::Encode(code) => {
            let k = rec.outputs.len();
            if k > cap {
                return Err(EvalError::FanInExceeded { got: k, cap });
            }
            let mut children = Vec::with_capacity(k);
            for out in &rec.outputs {
                children.push(modp_share_value(tree, out, x, y, p, cap)?);
            }
            let table = code.indicator_program().truth_table()?;
            Ok(modp_compose(&table, &children, p))
        }
    }
}

/// Result of the bounded-memory evaluation with its audits.
#[derive(Debug, Clone, Copy)]
pub struct DepthFirstReport {
    pub owner: Side,
    /// Largest number of override records held at any point.
    pub peak_overrides: usize,
    /// Number of times an encoding was collapsed into an override.
    pub prunes: u64,
}

pub fn eval_depth_first(
    tree: &ProtocolTree,
    x: &[bool],
    y: &[bool],
) -> Result<DepthFirstReport, EvalError> {
    eval_depth_first_bounded(tree, x, y, DEPTH_FIRST_ARITY_BOUND)
}

/// Evaluates by pruning: walk to the deepest encoding whose children are all
/// resolved, collapse it into an override record, and repeat until the
/// effective tree is a single node. Retains only the current share name and
/// the override set R, never a root-to-leaf stack; teleports are transparent.
///
/// `instrument`, when provided, receives the effective tree after every prune
/// so tests can check that pruning preserves the outcome and shrinks the
/// tree.
pub fn eval_depth_first_bounded(
    tree: &ProtocolTree,
    x: &[bool],
    y: &[bool],
    arity_bound: usize,
) -> Result<DepthFirstReport, EvalError> {
    eval_depth_first_instrumented(tree, x, y, arity_bound, &mut |_| {})
}

pub fn eval_depth_first_instrumented(
    tree: &ProtocolTree,
    x: &[bool],
    y: &[bool],
    arity_bound: usize,
    observe: &mut dyn FnMut(&Overrides),
) -> Result<DepthFirstReport, EvalError> {
    tree.tape().check_input_lengths(x, y)?;
    for idx in tree.topo_order() {
        let rec = tree.record(*idx);
        if matches!(rec.kind, RecordKind::Encode(_)) && rec.outputs.len() > arity_bound {
            return Err(EvalError::ArityExceeded {
                got: rec.outputs.len(),
                bound: arity_bound,
            });
        }
    }

    let mut overrides = Overrides::default();
    let mut peak = 0usize;
    let mut prunes = 0u64;
    // Current node, named by the share feeding it. Teleport chains are
    // skipped up front so the current node is always an encoding or a leaf.
    let mut current = skip_teleports(tree, tree.tape().root_id.clone());

    loop {
        if let Some(side) = leaf_value(tree, &overrides, &current, x, y) {
            // Effective tree is a single node.
            return Ok(DepthFirstReport {
                owner: side,
                peak_overrides: peak,
                prunes,
            });
        }
        let idx = tree.consumer_of(&current).expect("non-leaf has a consumer");
        let rec = tree.record(idx);
        debug_assert!(matches!(rec.kind, RecordKind::Encode(_)));

        let children: Vec<String> = rec
            .outputs
            .iter()
            .map(|out| skip_teleports(tree, out.clone()))
            .collect();
        let unresolved: Vec<&String> = children
            .iter()
            .filter(|c| leaf_value(tree, &overrides, c, x, y).is_none())
            .collect();

        if unresolved.is_empty() {
            // Prune: evaluate this encoding on its children's sides and
            // replace it by an override leaf, erasing the consumed children.
            let RecordKind::Encode(code) = &rec.kind else {
                unreachable!()
            };
            let z: Vec<bool> = children
                .iter()
                .map(|c| leaf_value(tree, &overrides, c, x, y).unwrap().bit())
                .collect();
            let program = code.indicator_program();
            let activated: Vec<usize> = program
                .phi()
                .iter()
                .enumerate()
                .filter(|(_, label)| z[label.input - 1])
                .map(|(i, _)| i)
                .collect();
            let hit = program
                .matrix()
                .select_rows(&activated)
                .in_span(program.target())?;
            for child in &children {
                overrides.map.remove(child.as_str());
            }
            overrides.map.insert(current.clone(), Side::from_bit(hit));
            prunes += 1;
            peak = peak.max(overrides.map.len());
            if overrides.map.len() > arity_bound {
                return Err(EvalError::OverrideSetExceeded {
                    got: overrides.map.len(),
                    bound: arity_bound,
                });
            }
            observe(&overrides);
            // Move to the parent, found by searching the tape rather than
            // keeping a path stack.
            match parent_of(tree, &current) {
                Some(parent) => current = parent,
                None => {
                    let side = overrides.map[current.as_str()];
                    return Ok(DepthFirstReport {
                        owner: side,
                        peak_overrides: peak,
                        prunes,
                    });
                }
            }
        } else {
            // Descend to the unresolved child of maximal layer, recomputing
            // depth on demand.
            let deepest = unresolved
                .into_iter()
                .max_by_key(|c| effective_depth(tree, &overrides, c))
                .unwrap();
            current = deepest.clone();
        }
    }
}

/// Override set R: shares whose subtrees have been collapsed to a known side.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    map: HashMap<String, Side>,
}

impl Overrides {
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, share: &str) -> Option<Side> {
        self.map.get(share).copied()
    }
}

fn skip_teleports(tree: &ProtocolTree, mut share: String) -> String {
    while let Some(idx) = tree.consumer_of(&share) {
        match &tree.record(idx).kind {
            RecordKind::Teleport(_) => share = tree.record(idx).outputs[0].clone(),
            _ => break,
        }
    }
    share
}

fn leaf_value(
    tree: &ProtocolTree,
    overrides: &Overrides,
    share: &str,
    x: &[bool],
    y: &[bool],
) -> Option<Side> {
    if let Some(side) = overrides.get(share) {
        return Some(side);
    }
    match tree.consumer_of(share) {
        None => Some(tree.holder_of(share)),
        Some(idx) => match &tree.record(idx).kind {
            RecordKind::UnitRoute(bit) => Some(Side::from_bit(bit.resolve(x, y))),
            RecordKind::Send(dest) => Some(*dest),
            _ => None,
        },
    }
}

/// Depth of the effective subtree rooted at `share`: 0 for leaves and
/// overridden shares, 1 + max over children for encodings. Teleports are
/// transparent.
fn effective_depth(tree: &ProtocolTree, overrides: &Overrides, share: &str) -> usize {
    if overrides.get(share).is_some() {
        return 0;
    }
    let resolved = skip_teleports(tree, share.to_string());
    if overrides.get(&resolved).is_some() {
        return 0;
    }
    match tree.consumer_of(&resolved) {
        None => 0,
        Some(idx) => match &tree.record(idx).kind {
            RecordKind::UnitRoute(_) | RecordKind::Send(_) => 0,
            RecordKind::Teleport(_) => unreachable!("teleports were skipped"),
            RecordKind::Encode(_) => {
                1 + tree
                    .record(idx)
                    .outputs
                    .iter()
                    .map(|out| effective_depth(tree, overrides, out))
                    .max()
                    .unwrap_or(0)
            }
        },
    }
}

/// The share feeding the encoding above `share`, skipping teleport chains,
/// found by searching the tape.
fn parent_of(tree: &ProtocolTree, share: &str) -> Option<String> {
    let mut needle = share.to_string();
    loop {
        let producer = tree
            .tape()
            .records
            .iter()
            .find(|rec| rec.outputs.iter().any(|o| o == &needle))?;
        match &producer.kind {
            RecordKind::Teleport(_) => needle = producer.input.clone(),
            RecordKind::Encode(_) => return Some(producer.input.clone()),
            _ => unreachable!("only teleports and encodes produce shares"),
        }
    }
}

/// Effective size: number of nodes in the effective tree (override leaves
/// count as one node). Used by instrumented tests.
pub fn effective_size(tree: &ProtocolTree, overrides: &Overrides, share: &str) -> u64 {
    if overrides.get(share).is_some() {
        return 1;
    }
    match tree.consumer_of(share) {
        None => 1,
        Some(idx) => {
            let rec = tree.record(idx);
            match &rec.kind {
                RecordKind::UnitRoute(_) | RecordKind::Send(_) => 1,
                RecordKind::Teleport(_) => 1 + effective_size(tree, overrides, &rec.outputs[0]),
                RecordKind::Encode(_) => {
                    1 + rec
                        .outputs
                        .iter()
                        .map(|out| effective_size(tree, overrides, out))
                        .sum::<u64>()
                }
            }
        }
    }
}

/// Owner of the effective tree: like `get_owner` but respecting overrides.
/// Used by instrumented tests to check that pruning preserves the outcome.
pub fn effective_owner(
    tree: &ProtocolTree,
    overrides: &Overrides,
    share: &str,
    x: &[bool],
    y: &[bool],
) -> Result<Side, EvalError> {
    if let Some(side) = overrides.get(share) {
        return Ok(side);
    }
    let Some(idx) = tree.consumer_of(share) else {
        return Ok(tree.holder_of(share));
    };
    let rec = tree.record(idx);
    match &rec.kind {
        RecordKind::UnitRoute(bit) => Ok(Side::from_bit(bit.resolve(x, y))),
        RecordKind::Send(dest) => Ok(*dest),
        RecordKind::Teleport(_) => effective_owner(tree, overrides, &rec.outputs[0], x, y),
        RecordKind::Encode(code) => {
            let program = code.indicator_program();
            let mut z = Vec::with_capacity(rec.outputs.len());
            for out in &rec.outputs {
                z.push(effective_owner(tree, overrides, out, x, y)? == Side::Right);
            }
            let activated: Vec<usize> = program
                .phi()
                .iter()
                .enumerate()
                .filter(|(_, label)| z[label.input - 1])
                .map(|(i, _)| i)
                .collect();
            let hit = program
                .matrix()
                .select_rows(&activated)
                .in_span(program.target())?;
            Ok(Side::from_bit(hit))
        }
    }
}
