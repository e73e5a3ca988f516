//! Dense pure-state register of base-k qudits with stable handles, side
//! ownership labels, and the primitive operations the protocols need:
//! EPR creation, generalized Bell measurement, single- and two-qudit
//! unitaries, isometries, and reduced density matrices.

use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

/// Stable handle to a qudit; registry positions shift as qudits are measured
/// out, handles do not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuditId(usize);

/// Who holds a qudit. The reference system purifying Q belongs to the
/// verifier and never moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Owner {
    Left,
    Right,
    Reference,
}

impl Owner {
    pub fn from_side(side: crate::protocol::Side) -> Owner {
        match side {
            crate::protocol::Side::Left => Owner::Left,
            crate::protocol::Side::Right => Owner::Right,
        }
    }
}

#[derive(Debug, Clone)]
struct Slot {
    id: QuditId,
    owner: Owner,
}

#[derive(Debug, Clone)]
pub struct PureState {
    base: u64,
    slots: Vec<Slot>,
    amps: Vec<Complex64>,
    next_id: usize,
}

impl PureState {
    pub fn new(base: u64) -> Self {
        PureState {
            base,
            slots: Vec::new(),
            amps: vec![Complex64::new(1.0, 0.0)],
            next_id: 0,
        }
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn num_qudits(&self) -> usize {
        self.slots.len()
    }

    fn k(&self) -> usize {
        self.base as usize
    }

    fn fresh(&mut self, owner: Owner) -> QuditId {
        let id = QuditId(self.next_id);
        self.next_id += 1;
        self.slots.push(Slot { id, owner });
        id
    }

    fn pos_of(&self, q: QuditId) -> usize {
        self.slots
            .iter()
            .position(|s| s.id == q)
            .expect("qudit handle is live")
    }

    /// Stride of the digit at `pos` in the flattened amplitude index.
    fn stride(&self, pos: usize) -> usize {
        self.k().pow((self.slots.len() - 1 - pos) as u32)
    }

    pub fn owner(&self, q: QuditId) -> Owner {
        self.slots[self.pos_of(q)].owner
    }

    pub fn set_owner(&mut self, q: QuditId, owner: Owner) {
        let pos = self.pos_of(q);
        self.slots[pos].owner = owner;
    }

    pub fn qudits_owned_by(&self, owner: Owner) -> Vec<QuditId> {
        self.slots
            .iter()
            .filter(|s| s.owner == owner)
            .map(|s| s.id)
            .collect()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn root_of_unity(&self, power: i64) -> Complex64 {
        let k = self.base as i64;
        let angle = 2.0 * PI * ((power % k + k) % k) as f64 / k as f64;
        Complex64::new(angle.cos(), angle.sin())
    }

    /// Appends a fresh qudit in the basis state `value`.
    pub fn add_qudit(&mut self, owner: Owner, value: u64) -> QuditId {
        let k = self.k();
        assert!((value as usize) < k);
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len() * k];
        for (idx, &a) in self.amps.iter().enumerate() {
            amps[idx * k + value as usize] = a;
        }
        self.amps = amps;
        self.fresh(owner)
    }

    /// Appends a fresh qudit in the given pure state.
    pub fn add_qudit_state(&mut self, owner: Owner, state: &[Complex64]) -> QuditId {
        let k = self.k();
        assert_eq!(state.len(), k);
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len() * k];
        for (idx, &a) in self.amps.iter().enumerate() {
            for (t, &s) in state.iter().enumerate() {
                amps[idx * k + t] = a * s;
            }
        }
        self.amps = amps;
        self.fresh(owner)
    }

    /// Appends a maximally entangled pair (1/sqrt(k)) sum |t,t>.
    pub fn make_epr(&mut self, owner_a: Owner, owner_b: Owner) -> (QuditId, QuditId) {
        let k = self.k();
        let scale = 1.0 / (k as f64).sqrt();
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len() * k * k];
        for (idx, &a) in self.amps.iter().enumerate() {
            for t in 0..k {
                amps[idx * k * k + t * k + t] = a * scale;
            }
        }
        self.amps = amps;
        (self.fresh(owner_a), self.fresh(owner_b))
    }

    /// Applies a k x k unitary (row-major) to one qudit.
    pub fn apply_single(&mut self, q: QuditId, u: &[Complex64]) {
        let k = self.k();
        assert_eq!(u.len(), k * k);
        let stride = self.stride(self.pos_of(q));
        let block = stride * k;
        let mut vals = vec![Complex64::new(0.0, 0.0); k];
        for chunk in (0..self.amps.len()).step_by(block) {
            for off in 0..stride {
                for (d, v) in vals.iter_mut().enumerate() {
                    *v = self.amps[chunk + d * stride + off];
                }
                for d in 0..k {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for s in 0..k {
                        acc += u[d * k + s] * vals[s];
                    }
                    self.amps[chunk + d * stride + off] = acc;
                }
            }
        }
    }

    /// Applies a k^2 x k^2 unitary (row-major, index a*k+b) to an ordered
    /// pair of distinct qudits.
    pub fn apply_two(&mut self, qa: QuditId, qb: QuditId, u: &[Complex64]) {
        let k = self.k();
        assert_eq!(u.len(), k * k * k * k);
        let (pa, pb) = (self.pos_of(qa), self.pos_of(qb));
        assert_ne!(pa, pb);
        let (sa, sb) = (self.stride(pa), self.stride(pb));
        let mut vals = vec![Complex64::new(0.0, 0.0); k * k];
        for idx in 0..self.amps.len() {
            // Visit each subspace once, at the representative with both
            // digits zero.
            if idx / sa % k != 0 || idx / sb % k != 0 {
                continue;
            }
            for a in 0..k {
                for b in 0..k {
                    vals[a * k + b] = self.amps[idx + a * sa + b * sb];
                }
            }
            for a in 0..k {
                for b in 0..k {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for s in 0..k * k {
                        acc += u[(a * k + b) * k * k + s] * vals[s];
                    }
                    self.amps[idx + a * sa + b * sb] = acc;
                }
            }
        }
    }

    /// Replaces qudit `q` by `m` fresh qudits through an isometry given as a
    /// k^m x k matrix (row-major). The new qudits are appended at the end of
    /// the register with the given owner.
    pub fn apply_isometry(
        &mut self,
        q: QuditId,
        owner: Owner,
        m: usize,
        v: &[Complex64],
    ) -> Vec<QuditId> {
        let k = self.k();
        let out_dim = k.pow(m as u32);
        assert_eq!(v.len(), out_dim * k);
        let pos = self.pos_of(q);
        let stride = self.stride(pos);
        let old_len = self.amps.len();
        let mut amps = vec![Complex64::new(0.0, 0.0); old_len / k * out_dim];
        for idx in 0..old_len {
            let digit = idx / stride % k;
            let a = self.amps[idx];
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            // Remove the digit at `pos`, then append the output digits.
            let high = idx / (stride * k);
            let low = idx % stride;
            let rest = high * stride + low;
            for out in 0..out_dim {
                let c = v[out * k + digit];
                if c != Complex64::new(0.0, 0.0) {
                    amps[rest * out_dim + out] += a * c;
                }
            }
        }
        self.amps = amps;
        self.slots.remove(pos);
        (0..m).map(|_| self.fresh(owner)).collect()
    }

    /// Generalized Bell measurement of the ordered pair (qa, qb) in the basis
    /// |Phi_ab> = (1/sqrt(k)) sum_j w^(jb) |j, j+a>. Samples an outcome,
    /// collapses, removes both qudits, and returns (a, b).
    pub fn measure_bell<R: Rng>(&mut self, qa: QuditId, qb: QuditId, rng: &mut R) -> (u64, u64) {
        let k = self.k();
        let (pa, pb) = (self.pos_of(qa), self.pos_of(qb));
        assert_ne!(pa, pb);
        let (sa, sb) = (self.stride(pa), self.stride(pb));
        let scale = 1.0 / (k as f64).sqrt();
        let rest_len = self.amps.len() / (k * k);
        let mut branches = vec![vec![Complex64::new(0.0, 0.0); rest_len]; k * k];
        let (lo, hi) = (pa.min(pb), pa.max(pb));
        for idx in 0..self.amps.len() {
            let a_digit = idx / sa % k;
            let b_digit = idx / sb % k;
            let amp = self.amps[idx];
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            // Strip both measured digits from the index.
            let (s_lo, s_hi) = (self.stride(lo), self.stride(hi));
            let top = idx / (s_lo * k);
            let mid = idx % s_lo / (s_hi * k);
            let bot = idx % s_hi;
            let rest = top * (s_lo / k) + mid * s_hi + bot;
            let a = (b_digit + k - a_digit) % k;
            for b in 0..k {
                let phase = self.root_of_unity(-((a_digit * b) as i64));
                branches[a * k + b][rest] += amp * phase * scale;
            }
        }
        let probs: Vec<f64> = branches
            .iter()
            .map(|v| v.iter().map(|a| a.norm_sqr()).sum())
            .collect();
        let total: f64 = probs.iter().sum();
        let mut draw = rng.gen_range(0.0..1.0) * total;
        let mut outcome = k * k - 1;
        for (i, &p) in probs.iter().enumerate() {
            if draw < p {
                outcome = i;
                break;
            }
            draw -= p;
        }
        let norm = probs[outcome].sqrt();
        self.amps = branches[outcome].iter().map(|a| a / norm).collect();
        self.slots.remove(hi);
        self.slots.remove(lo);
        ((outcome / k) as u64, (outcome % k) as u64)
    }

    /// Generalized Pauli X^a: |j> -> |j + a>.
    pub fn pauli_x(&mut self, q: QuditId, a: u64) {
        let k = self.k();
        let a = (a % self.base) as usize;
        if a == 0 {
            return;
        }
        let mut u = vec![Complex64::new(0.0, 0.0); k * k];
        for j in 0..k {
            u[(j + a) % k * k + j] = Complex64::new(1.0, 0.0);
        }
        self.apply_single(q, &u);
    }

    /// Generalized Pauli Z^b: |j> -> w^(jb) |j>.
    pub fn pauli_z(&mut self, q: QuditId, b: u64) {
        let k = self.k();
        let b = (b % self.base) as i64;
        if b == 0 {
            return;
        }
        let mut u = vec![Complex64::new(0.0, 0.0); k * k];
        for j in 0..k {
            u[j * k + j] = self.root_of_unity(j as i64 * b);
        }
        self.apply_single(q, &u);
    }

    /// Undoes the byproduct of a Bell measurement with outcome (a, b) on the
    /// far half: the far qudit holds X^a Z^(-b) psi, so apply Z^b X^(-a).
    pub fn apply_teleport_correction(&mut self, q: QuditId, a: u64, b: u64) {
        self.pauli_x(q, (self.base - a % self.base) % self.base);
        self.pauli_z(q, b);
    }

    /// Probability that the ordered pair (qa, qb) is in the canonical
    /// maximally entangled state.
    pub fn epr_projection_probability(&self, qa: QuditId, qb: QuditId) -> f64 {
        let k = self.k();
        let (pa, pb) = (self.pos_of(qa), self.pos_of(qb));
        let (sa, sb) = (self.stride(pa), self.stride(pb));
        let (lo, hi) = (pa.min(pb), pa.max(pb));
        let (s_lo, s_hi) = (self.stride(lo), self.stride(hi));
        let rest_len = self.amps.len() / (k * k);
        let mut acc = vec![Complex64::new(0.0, 0.0); rest_len];
        for idx in 0..self.amps.len() {
            if idx / sa % k != idx / sb % k {
                continue;
            }
            let top = idx / (s_lo * k);
            let mid = idx % s_lo / (s_hi * k);
            let bot = idx % s_hi;
            let rest = top * (s_lo / k) + mid * s_hi + bot;
            acc[rest] += self.amps[idx];
        }
        acc.iter().map(|a| a.norm_sqr()).sum::<f64>() / k as f64
    }

    /// Reduced density matrix of the given qudits (in the given order),
    /// row-major with dimension k^n.
    pub fn reduced_density(&self, qs: &[QuditId]) -> Vec<Complex64> {
        let k = self.k();
        let dim = k.pow(qs.len() as u32);
        let positions: Vec<usize> = qs.iter().map(|&q| self.pos_of(q)).collect();
        let rest_len = self.amps.len() / dim;
        let mut grouped = vec![vec![Complex64::new(0.0, 0.0); dim]; rest_len];
        let strides: Vec<usize> = positions.iter().map(|&p| self.stride(p)).collect();
        let mut sorted = positions.clone();
        sorted.sort_unstable();
        for idx in 0..self.amps.len() {
            let amp = self.amps[idx];
            let mut sub = 0usize;
            for &s in &strides {
                sub = sub * k + idx / s % k;
            }
            // Strip the selected digits, least significant first; each strip
            // shrinks the strides of the digits still to be stripped.
            let mut rest = idx;
            for (stripped, &p) in sorted.iter().rev().enumerate() {
                let s = self.stride(p) / k.pow(stripped as u32);
                rest = rest / (s * k) * s + rest % s;
            }
            grouped[rest][sub] += amp;
        }
        let mut rho = vec![Complex64::new(0.0, 0.0); dim * dim];
        for v in &grouped {
            for r in 0..dim {
                if v[r] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..dim {
                    rho[r * dim + c] += v[r] * v[c].conj();
                }
            }
        }
        rho
    }

    /// Overlap of one qudit's reduced state with a target pure state.
    pub fn fidelity_single(&self, q: QuditId, target: &[Complex64]) -> f64 {
        let k = self.k();
        assert_eq!(target.len(), k);
        let rho = self.reduced_density(&[q]);
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..k {
            for c in 0..k {
                acc += target[r].conj() * rho[r * k + c] * target[c];
            }
        }
        acc.re
    }
}

/// Trace distance (1/2)||rho - sigma||_1 between two density matrices given
/// row-major with the same dimension.
pub fn trace_distance(rho: &[Complex64], sigma: &[Complex64], dim: usize) -> f64 {
    assert_eq!(rho.len(), dim * dim);
    assert_eq!(sigma.len(), dim * dim);
    let diff: Vec<Complex64> = rho.iter().zip(sigma).map(|(a, b)| a - b).collect();
    let eigs = hermitian_eigenvalues(&diff, dim);
    eigs.iter().map(|v| v.abs()).sum::<f64>() / 2.0
}

/// Eigenvalues of a Hermitian matrix via the real symmetric embedding
/// [[A, -B], [B, A]] of M = A + iB, whose spectrum is that of M doubled.
fn hermitian_eigenvalues(m: &[Complex64], dim: usize) -> Vec<f64> {
    let n = 2 * dim;
    let mut a = vec![0.0f64; n * n];
    for r in 0..dim {
        for c in 0..dim {
            a[r * n + c] = m[r * dim + c].re;
            a[(r + dim) * n + c + dim] = m[r * dim + c].re;
            a[r * n + c + dim] = -m[r * dim + c].im;
            a[(r + dim) * n + c] = m[r * dim + c].im;
        }
    }
    let mut eigs = symmetric_eigenvalues(&mut a, n);
    // Each eigenvalue of M appears twice; keep one copy of each.
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs.into_iter().step_by(2).collect()
}

/// Cyclic Jacobi eigenvalue iteration for a real symmetric matrix, returning
/// the eigenvalues.
fn symmetric_eigenvalues(a: &mut [f64], n: usize) -> Vec<f64> {
    for _sweep in 0..64 {
        let mut off = 0.0;
        for r in 0..n {
            for c in r + 1..n {
                off += a[r * n + c] * a[r * n + c];
            }
        }
        if off < 1e-28 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-16 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = a[p * n + i];
                    let aqi = a[q * n + i];
                    a[p * n + i] = c * api - s * aqi;
                    a[q * n + i] = s * api + c * aqi;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn epr_pair_is_maximally_entangled() {
        for k in [2u64, 3] {
            let mut st = PureState::new(k);
            let (a, b) = st.make_epr(Owner::Left, Owner::Right);
            assert!((st.norm() - 1.0).abs() < 1e-12);
            assert!((st.epr_projection_probability(a, b) - 1.0).abs() < 1e-12);
            // Reduced state of either half is I/k.
            let rho = st.reduced_density(&[a]);
            for r in 0..k as usize {
                for col in 0..k as usize {
                    let expect = if r == col { 1.0 / k as f64 } else { 0.0 };
                    assert!((rho[r * k as usize + col] - c(expect)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn two_epr_pairs_have_mixed_singles() {
        let mut st = PureState::new(3);
        let (a, _) = st.make_epr(Owner::Left, Owner::Right);
        let (_, d) = st.make_epr(Owner::Left, Owner::Right);
        for q in [a, d] {
            let rho = st.reduced_density(&[q]);
            // Purity tr(rho^2) of a maximally mixed qutrit is 1/3.
            let mut purity = 0.0;
            for r in 0..3 {
                for col in 0..3 {
                    purity += (rho[r * 3 + col] * rho[col * 3 + r]).re;
                }
            }
            assert!((purity - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn teleportation_is_identity_after_correction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in [2u64, 3] {
            for trial in 0..50 {
                let mut st = PureState::new(k);
                // Random pure input state.
                let raw: Vec<Complex64> = (0..k)
                    .map(|i| {
                        Complex64::new(
                            (trial * 7 + i) as f64 + rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                        )
                    })
                    .collect();
                let norm: f64 = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                let target: Vec<Complex64> = raw.iter().map(|a| a / norm).collect();
                let src = st.add_qudit_state(Owner::Left, &target);
                let (near, far) = st.make_epr(Owner::Left, Owner::Right);
                let (a, b) = st.measure_bell(src, near, &mut rng);
                st.apply_teleport_correction(far, a, b);
                assert!((st.norm() - 1.0).abs() < 1e-12);
                assert!(st.fidelity_single(far, &target) > 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn entanglement_swapping_preserves_the_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut st = PureState::new(3);
        let (a, b) = st.make_epr(Owner::Left, Owner::Right);
        let (cq, d) = st.make_epr(Owner::Left, Owner::Right);
        // Swap: measure (b, c); afterwards (a, d) is maximally entangled up
        // to the correction on d.
        let (oa, ob) = st.measure_bell(b, cq, &mut rng);
        st.apply_teleport_correction(d, oa, ob);
        assert!((st.epr_projection_probability(a, d) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn basis_teleport_preserves_basis_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for v in 0..3u64 {
            let mut st = PureState::new(3);
            let src = st.add_qudit(Owner::Left, v);
            let (near, far) = st.make_epr(Owner::Left, Owner::Right);
            let (a, b) = st.measure_bell(src, near, &mut rng);
            st.apply_teleport_correction(far, a, b);
            let mut target = vec![c(0.0); 3];
            target[v as usize] = c(1.0);
            assert!(st.fidelity_single(far, &target) > 1.0 - 1e-12);
        }
    }

    #[test]
    fn trace_distance_of_known_matrices() {
        // Distance between |0><0| and |1><1| is 1.
        let zero = vec![c(1.0), c(0.0), c(0.0), c(0.0)];
        let one = vec![c(0.0), c(0.0), c(0.0), c(1.0)];
        assert!((trace_distance(&zero, &one, 2) - 1.0).abs() < 1e-12);
        // Distance between |0><0| and I/2 is 1/2.
        let mixed = vec![c(0.5), c(0.0), c(0.0), c(0.5)];
        assert!((trace_distance(&zero, &mixed, 2) - 0.5).abs() < 1e-12);
        // A Hermitian difference with complex off-diagonals: |+i><+i| vs I/2.
        let plus_i = vec![
            c(0.5),
            Complex64::new(0.0, -0.5),
            Complex64::new(0.0, 0.5),
            c(0.5),
        ];
        assert!((trace_distance(&plus_i, &mixed, 2) - 0.5).abs() < 1e-12);
    }
}
