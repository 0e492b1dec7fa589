//! Dense statevector engine: reference-state preparation, ansatz gates (one
//! Trotter step per fermionic gate), exact expectation values, exact
//! diagonalisation, and POVM outcome sampling.
//!
//! Qubit 0 is the most significant bit of the basis index throughout, so the
//! four-qubit state |1100⟩ lives at index 12.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense;
use crate::error::{Error, Result};
use crate::fermion::{number_operator, IntegralSet, MappingScheme};
use crate::pauli::{PauliString, PauliSum};
use crate::pools::PoolOperator;
use crate::povm::{ProductPovm, ShotRecord};
use crate::tensor;

pub const MAX_STATE_QUBITS: usize = 13;
/// Above this qubit count the sampler switches from the precomputed 4^N
/// joint distribution to sequential per-qubit conditional sampling.
pub const MAX_JOINT_QUBITS: usize = 10;

#[derive(Clone, Debug)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits > MAX_STATE_QUBITS {
            return Err(Error::TooManyQubits("StateVector", n_qubits, MAX_STATE_QUBITS));
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, n: dim });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Basis state from per-qubit occupation bits, qubit 0 first.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let mut index = 0usize;
        for &b in bits {
            index = index << 1 | b as usize;
        }
        Self::basis(bits.len(), index)
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n_qubits > MAX_STATE_QUBITS {
            return Err(Error::TooManyQubits("StateVector", n_qubits, MAX_STATE_QUBITS));
        }
        if amps.len() != 1 << n_qubits {
            return Err(Error::Invalid(format!(
                "amplitude vector has length {}, expected {}",
                amps.len(),
                1 << n_qubits
            )));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Invalid(format!("state norm {norm} is not 1")));
        }
        let mut state = StateVector { n_qubits, amps };
        state.scale(Complex64::new(1.0 / norm, 0.0));
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn scale(&mut self, c: Complex64) {
        for a in &mut self.amps {
            *a *= c;
        }
    }

    /// In-place e^{iθS}; the returning wrapper is `apply_string_exponential`.
    pub fn rotate_string(&mut self, s: &PauliString, theta: f64) -> Result<()> {
        if s.n_qubits() != self.n_qubits {
            return Err(Error::NQubitsMismatch(s.n_qubits(), self.n_qubits));
        }
        if theta == 0.0 {
            return Ok(());
        }
        let (xbits, zbits) = dense::index_masks(s);
        let cos = theta.cos();
        let isin = Complex64::new(0.0, theta.sin());
        if xbits == 0 {
            // all-Z string: diagonal action e^{±iθ}
            let plus = Complex64::new(cos, 0.0) + isin;
            let minus = Complex64::new(cos, 0.0) - isin;
            for (b, a) in self.amps.iter_mut().enumerate() {
                *a *= if (b as u64 & zbits).count_ones() % 2 == 0 { plus } else { minus };
            }
            return Ok(());
        }
        let high = 1u64 << (63 - xbits.leading_zeros());
        for b in 0..self.amps.len() as u64 {
            if b & high != 0 {
                continue;
            }
            let p = b ^ xbits;
            let alpha_b = dense::string_phase(s, b, zbits);
            let alpha_p = dense::string_phase(s, p, zbits);
            let (vb, vp) = (self.amps[b as usize], self.amps[p as usize]);
            self.amps[b as usize] = vb * cos + isin * alpha_p * vp;
            self.amps[p as usize] = vp * cos + isin * alpha_b * vb;
        }
        Ok(())
    }

    /// In-place single-Trotter-step pool gate (see `apply_pool_gate`).
    pub fn rotate_pool(&mut self, op: &PoolOperator, theta: f64) -> Result<()> {
        for (s, c) in op.generator.terms() {
            debug_assert!(c.re.abs() < 1e-12, "pool generator must be antihermitian");
            self.rotate_string(s, theta * c.im)?;
        }
        Ok(())
    }
}

/// e^{iθS}|ψ⟩ = cos θ·|ψ⟩ + i sin θ·S|ψ⟩.
pub fn apply_string_exponential(state: &StateVector, s: &PauliString, theta: f64) -> Result<StateVector> {
    let mut out = state.clone();
    out.rotate_string(s, theta)?;
    Ok(out)
}

/// One Trotter step of e^{θP}: Π_k e^{iθw_k S_k} over the canonical
/// (lexicographic) term order of the generator P = Σ_k i·w_k·S_k.  Exact for
/// single-string generators; for fermionic and qubit-excitation generators
/// the terms mutually commute, so the product is e^{θP} exactly as well.
pub fn apply_pool_gate(state: &StateVector, op: &PoolOperator, theta: f64) -> Result<StateVector> {
    let mut out = state.clone();
    out.rotate_pool(op, theta)?;
    Ok(out)
}

/// Exact ⟨ψ|O|ψ⟩ (complex in general; real within 1e-10 for Hermitian O).
pub fn expectation(state: &StateVector, o: &PauliSum) -> Result<Complex64> {
    matrix_element(state, o, state)
}

/// ⟨bra|O|ket⟩.
pub fn matrix_element(bra: &StateVector, o: &PauliSum, ket: &StateVector) -> Result<Complex64> {
    if o.n_qubits() != ket.n_qubits || bra.n_qubits != ket.n_qubits {
        return Err(Error::NQubitsMismatch(o.n_qubits(), ket.n_qubits));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for (s, c) in o.terms() {
        let (xbits, zbits) = dense::index_masks(s);
        let mut acc = Complex64::new(0.0, 0.0);
        for b in 0..ket.amps.len() as u64 {
            let target = (b ^ xbits) as usize;
            acc += bra.amps[target].conj() * dense::string_phase(s, b, zbits) * ket.amps[b as usize];
        }
        total += c * acc;
    }
    Ok(total)
}

/// O|ψ⟩ as a raw amplitude vector (not normalised in general).
pub fn apply_sum(state: &StateVector, o: &PauliSum) -> Result<Vec<Complex64>> {
    if o.n_qubits() != state.n_qubits {
        return Err(Error::NQubitsMismatch(o.n_qubits(), state.n_qubits));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); state.dim()];
    for (s, c) in o.terms() {
        let (xbits, zbits) = dense::index_masks(s);
        for b in 0..state.amps.len() as u64 {
            let target = (b ^ xbits) as usize;
            out[target] += c * dense::string_phase(s, b, zbits) * state.amps[b as usize];
        }
    }
    Ok(out)
}

/// Minimum eigenvalue and a matching eigenvector by dense diagonalisation.
pub fn exact_ground_energy(h: &PauliSum) -> Result<(f64, StateVector)> {
    if h.n_qubits() > MAX_STATE_QUBITS {
        return Err(Error::TooManyQubits("exact_ground_energy", h.n_qubits(), MAX_STATE_QUBITS));
    }
    if !h.is_hermitian() {
        let worst = h
            .terms()
            .map(|(_, c)| c.im.abs())
            .fold(0.0, f64::max);
        return Err(Error::NotHermitian(worst));
    }
    let m = dense::sum_matrix(h);
    let (energy, vec) = dense::ground_pair(&m);
    let amps = fix_phase(vec.iter().copied().collect());
    Ok((energy, StateVector::from_amplitudes(h.n_qubits(), amps)?))
}

/// Make the largest-magnitude amplitude real and positive (determinism).
fn fix_phase(mut amps: Vec<Complex64>) -> Vec<Complex64> {
    let mut best = 0;
    for (i, a) in amps.iter().enumerate() {
        if a.norm_sqr() > amps[best].norm_sqr() {
            best = i;
        }
    }
    let mag = amps[best].norm();
    if mag > 0.0 {
        let phase = amps[best].conj() / Complex64::new(mag, 0.0);
        for a in &mut amps {
            *a *= phase;
        }
    }
    amps
}

/// Reference (Hartree-Fock) state: the unique ground state of
/// Σ_p (n̂_p − occ_p)² under the mapped number operators, returned as a
/// computational basis state whenever one spans the ground space
/// (lowest basis index wins).
pub fn prepare_reference(
    ints: &IntegralSet,
    scheme: MappingScheme,
    n_electrons: usize,
) -> Result<StateVector> {
    let n = ints.n_spin_orbitals;
    if n > MAX_STATE_QUBITS {
        return Err(Error::TooManyQubits("prepare_reference", n, MAX_STATE_QUBITS));
    }
    if n_electrons > n {
        return Err(Error::IndexOutOfRange { index: n_electrons, n });
    }
    let occ = crate::fermion::hartree_fock_occupation(n_electrons, n);
    // (n̂ − o)² = (1 − 2o)·n̂ + o²·I because n̂² = n̂.
    let mut m = PauliSum::zero(n);
    let mut shift = 0.0;
    for (p, &o) in occ.iter().enumerate() {
        let o = o as u8 as f64;
        let num = number_operator(p, scheme, n)?;
        m = m.add(&num.scaled(Complex64::new(1.0 - 2.0 * o, 0.0)))?;
        shift += o * o;
    }
    m.add_term(PauliString::identity(n), Complex64::new(shift, 0.0));

    // A basis state |b⟩ spans the (always simple, eigenvalue-0) ground space
    // exactly when M|b⟩ = 0; M applied to a basis ket is cheap and sparse.
    let dim = 1usize << n;
    'basis: for b in 0..dim as u64 {
        let mut entries: std::collections::HashMap<u64, Complex64> = std::collections::HashMap::new();
        for (s, c) in m.terms() {
            let (xbits, zbits) = dense::index_masks(s);
            *entries.entry(b ^ xbits).or_insert(Complex64::new(0.0, 0.0)) +=
                c * dense::string_phase(s, b, zbits);
        }
        for v in entries.values() {
            if v.norm() > 1e-9 {
                continue 'basis;
            }
        }
        return StateVector::basis(n, b as usize);
    }

    // No basis-state representative (possible under tree-based mappings):
    // diagonalise and insist the ground space is simple.
    let dense_m = dense::sum_matrix(&m);
    let pairs = dense::eigenpairs(&dense_m);
    let ground: Vec<_> = pairs.iter().take_while(|(v, _)| *v < 0.5).collect();
    if ground.len() != 1 || pairs[0].0.abs() > 1e-9 {
        return Err(Error::DegenerateReference);
    }
    let amps = fix_phase(ground[0].1.iter().copied().collect());
    StateVector::from_amplitudes(n, amps)
}

/// All 4^N Pauli-string expectation values ⟨ψ|⊗_q σ_{τ_q}|ψ⟩ of a state,
/// stored with qubit q's letter (I,X,Y,Z → 0..3) in bits 2q..2q+1.
pub struct MomentTensor {
    n_qubits: usize,
    data: Vec<f64>,
}

impl MomentTensor {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn string_index(s: &PauliString) -> usize {
        let mut idx = 0usize;
        for q in 0..s.n_qubits() {
            idx |= (s.letter(q) as usize) << (2 * q);
        }
        idx
    }

    pub fn value(&self, s: &PauliString) -> f64 {
        self.data[Self::string_index(s)]
    }

    /// Exact expectation of a Hermitian PauliSum by table lookup.
    pub fn expectation_of(&self, o: &PauliSum) -> Result<f64> {
        if o.n_qubits() != self.n_qubits {
            return Err(Error::NQubitsMismatch(o.n_qubits(), self.n_qubits));
        }
        Ok(o.terms().map(|(s, c)| c.re * self.data[Self::string_index(s)]).sum())
    }
}

/// Compute the full moment tensor of a state (N ≤ 10: two 4^N scratch
/// buffers).  Start from ρ = |ψ⟩⟨ψ| laid out with qubit q's (bra, ket) bit
/// pair as tensor digit, then rotate each axis into the Pauli basis.
pub fn pauli_moments(state: &StateVector) -> Result<MomentTensor> {
    let n = state.n_qubits;
    if n > MAX_JOINT_QUBITS {
        return Err(Error::TooManyQubits("pauli_moments", n, MAX_JOINT_QUBITS));
    }
    let dim = state.dim();
    // digit_mask[v]: state index v spread onto even tensor bits, qubit 0 at
    // the lowest digit (undoing the qubit-0-most-significant convention)
    let mut digit_mask = vec![0usize; dim];
    for (v, m) in digit_mask.iter_mut().enumerate() {
        for q in 0..n {
            if v >> (n - 1 - q) & 1 == 1 {
                *m |= 1 << (2 * q);
            }
        }
    }
    let mut t = vec![Complex64::new(0.0, 0.0); dim * dim];
    for a in 0..dim {
        let bra = state.amps[a].conj();
        let am = digit_mask[a];
        for b in 0..dim {
            t[am + (digit_mask[b] << 1)] = bra * state.amps[b];
        }
    }
    // per-axis: out[τ] = Σ_{a,b} σ_τ[a,b] · in[a + 2b]
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let m: [[Complex64; 4]; 4] = [
        [l, o, o, l],  // I
        [o, l, l, o],  // X
        [o, i, -i, o], // Y
        [l, o, o, -l], // Z
    ];
    for axis in 0..n {
        tensor::transform_axis_c64(&mut t, axis, &m);
    }
    let data = t.iter().map(|c| c.re).collect();
    Ok(MomentTensor { n_qubits: n, data })
}

/// Exact joint outcome distribution p_m = Tr[ρ ⊗_q Π^{(q)}_{m_q}], indexed
/// like the moment tensor (qubit q's outcome in bits 2q..2q+1).
pub fn joint_probabilities(moments: &MomentTensor, povm: &ProductPovm) -> Result<Vec<f64>> {
    let n = moments.n_qubits;
    if povm.n_qubits() != n {
        return Err(Error::NQubitsMismatch(povm.n_qubits(), n));
    }
    let mut p = moments.data.clone();
    for axis in 0..n {
        let a = povm.qubit(axis).effect_coefficients();
        tensor::transform_axis_f64(&mut p, axis, &a);
    }
    let mut total = 0.0;
    for v in p.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-8 {
                return Err(Error::InvalidPovm(format!("negative outcome probability {v:.3e}")));
            }
            *v = 0.0;
        }
        total += *v;
    }
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidPovm(format!("outcome probabilities sum to {total}")));
    }
    for v in p.iter_mut() {
        *v /= total;
    }
    Ok(p)
}

/// Draw `n_shots` i.i.d. product-POVM outcomes from the Born distribution.
/// Deterministic for a given seed.  N ≤ 10 samples from the precomputed
/// joint distribution; larger systems fall back to per-qubit conditional
/// sampling with Kraus operators Π_m^{1/2} (identical in distribution).
pub fn sample_povm(
    state: &StateVector,
    povm: &ProductPovm,
    n_shots: usize,
    rng_seed: u64,
) -> Result<ShotRecord> {
    if povm.n_qubits() != state.n_qubits {
        return Err(Error::NQubitsMismatch(povm.n_qubits(), state.n_qubits));
    }
    if n_shots == 0 {
        return Err(Error::Invalid("n_shots must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let outcomes = if state.n_qubits <= MAX_JOINT_QUBITS {
        let moments = pauli_moments(state)?;
        let p = joint_probabilities(&moments, povm)?;
        sample_categorical(&p, n_shots, &mut rng)
    } else {
        sample_conditional(state, povm, n_shots, &mut rng)
    };
    Ok(ShotRecord {
        n_qubits: state.n_qubits,
        outcomes,
        povm_fingerprint: povm.fingerprint(),
        seed: rng_seed,
    })
}

/// Sampling from an explicit moment tensor, for callers that reuse the
/// tensor across many batches on the same state.
pub fn sample_povm_from_moments(
    moments: &MomentTensor,
    povm: &ProductPovm,
    n_shots: usize,
    rng_seed: u64,
) -> Result<ShotRecord> {
    if n_shots == 0 {
        return Err(Error::Invalid("n_shots must be at least 1".into()));
    }
    let p = joint_probabilities(moments, povm)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let outcomes = sample_categorical(&p, n_shots, &mut rng);
    Ok(ShotRecord {
        n_qubits: moments.n_qubits,
        outcomes,
        povm_fingerprint: povm.fingerprint(),
        seed: rng_seed,
    })
}

fn sample_categorical(p: &[f64], n_shots: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut cdf = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for &v in p {
        acc += v;
        cdf.push(acc);
    }
    let top = cdf.len() - 1;
    (0..n_shots)
        .map(|_| {
            let r: f64 = rng.gen();
            cdf.partition_point(|&c| c <= r).min(top) as u32
        })
        .collect()
}

/// The generic-N sampling path: per-qubit conditional collapse with Kraus
/// operators Π_m^{1/2}.  `sample_povm` uses it above `MAX_JOINT_QUBITS`; it
/// is public so the two paths can be compared in distribution.
pub fn sample_povm_conditional(
    state: &StateVector,
    povm: &ProductPovm,
    n_shots: usize,
    rng_seed: u64,
) -> Result<ShotRecord> {
    if povm.n_qubits() != state.n_qubits {
        return Err(Error::NQubitsMismatch(povm.n_qubits(), state.n_qubits));
    }
    if n_shots == 0 {
        return Err(Error::Invalid("n_shots must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Ok(ShotRecord {
        n_qubits: state.n_qubits,
        outcomes: sample_conditional(state, povm, n_shots, &mut rng),
        povm_fingerprint: povm.fingerprint(),
        seed: rng_seed,
    })
}

fn sample_conditional(
    state: &StateVector,
    povm: &ProductPovm,
    n_shots: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<u32> {
    let n = state.n_qubits;
    let dim = state.dim();
    let mut outcomes = Vec::with_capacity(n_shots);
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    for _ in 0..n_shots {
        amps.copy_from_slice(&state.amps);
        let mut word = 0u32;
        for q in 0..n {
            let bit = 1usize << (n - 1 - q);
            let kraus = povm.qubit(q).kraus();
            // probabilities of the four outcomes on qubit q given the record so far
            let mut probs = [0.0f64; 4];
            for (m, k) in kraus.iter().enumerate() {
                let mut acc = 0.0;
                for b0 in 0..dim {
                    if b0 & bit != 0 {
                        continue;
                    }
                    let b1 = b0 | bit;
                    let new0 = k[(0, 0)] * amps[b0] + k[(0, 1)] * amps[b1];
                    let new1 = k[(1, 0)] * amps[b0] + k[(1, 1)] * amps[b1];
                    acc += new0.norm_sqr() + new1.norm_sqr();
                }
                probs[m] = acc;
            }
            let total: f64 = probs.iter().sum();
            let r: f64 = rng.gen::<f64>() * total;
            let mut m = 3;
            let mut acc = 0.0;
            for (j, &pj) in probs.iter().enumerate() {
                acc += pj;
                if r < acc {
                    m = j;
                    break;
                }
            }
            // collapse: amps ← K_m amps / √p_m
            let k = &kraus[m];
            let scale = Complex64::new(1.0 / probs[m].sqrt(), 0.0);
            for b0 in 0..dim {
                if b0 & bit != 0 {
                    continue;
                }
                let b1 = b0 | bit;
                let (v0, v1) = (amps[b0], amps[b1]);
                amps[b0] = (k[(0, 0)] * v0 + k[(0, 1)] * v1) * scale;
                amps[b1] = (k[(1, 0)] * v0 + k[(1, 1)] * v1) * scale;
            }
            word |= (m as u32) << (2 * q);
        }
        outcomes.push(word);
    }
    outcomes
}
