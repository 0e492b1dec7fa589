//! Monte-Carlo estimation of arbitrary PauliSum observables from shared IC
//! POVM measurement data.
//!
//! The workhorse representation is table-based: each batch of shots becomes
//! a dense table of outcome counts over 4^N, which a per-axis dual-frame
//! transform turns into an empirical Pauli-moment table.  Every observable
//! mean is then a K-term lookup, and second moments (error bars, ε_E,
//! candidate variances) are dot products against dense per-observable ω
//! tables.  Above `MAX_TABLE_QUBITS` the estimator falls back to a direct
//! per-shot evaluation with cached per-qubit dual lookups.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::povm::{DualTable, ProductPovm, ShotRecord, SingleQubitPovm};
use crate::simulator::{self, MomentTensor};
use crate::tensor;

pub const MAX_TABLE_QUBITS: usize = simulator::MAX_JOINT_QUBITS;

/// counts[m] → moments[τ]: out[τ] = Σ_m b[τ][m]·in[m].
fn moment_matrix(duals: &DualTable) -> [[f64; 4]; 4] {
    *duals
}

/// coefficients[τ] → ω[m]: out[m] = Σ_τ b[τ][m]·in[τ].
fn omega_matrix(duals: &DualTable) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for t in 0..4 {
        for mm in 0..4 {
            m[mm][t] = duals[t][mm];
        }
    }
    m
}

/// Dense real coefficient tensor of a Hermitian PauliSum.
fn scatter_coefficients(o: &PauliSum, into: &mut [f64]) {
    for (s, c) in o.terms() {
        into[MomentTensor::string_index(s)] = c.re;
    }
}

fn clear_coefficients(o: &PauliSum, into: &mut [f64]) {
    for (s, _) in o.terms() {
        into[MomentTensor::string_index(s)] = 0.0;
    }
}

fn require_hermitian(o: &PauliSum) -> Result<()> {
    if !o.is_hermitian() {
        let worst = o.terms().map(|(_, c)| c.im.abs()).fold(0.0, f64::max);
        return Err(Error::NotHermitian(worst));
    }
    Ok(())
}

fn check_letters(o: &PauliSum, masks: &[[bool; 4]], all_ok: bool) -> Result<()> {
    if all_ok {
        return Ok(());
    }
    for (s, _) in o.terms() {
        for (q, mask) in masks.iter().enumerate() {
            if !mask[s.letter(q) as usize] {
                return Err(Error::NotInformationallyComplete { cond: f64::INFINITY });
            }
        }
    }
    Ok(())
}

struct Batch {
    record: ShotRecord,
    duals: Vec<DualTable>,
    masks: Vec<[bool; 4]>,
    ic: bool,
    /// dense outcome counts over 4^N (absent above MAX_TABLE_QUBITS)
    counts: Option<Vec<f64>>,
}

/// Accumulated measurement data: a growing pool of shot batches, each tagged
/// with the POVM that produced it.  All estimates pool every batch, weighting
/// per-shot values by their own batch's dual frame.
pub struct ShotData {
    n_qubits: usize,
    total_shots: usize,
    batches: Vec<Batch>,
}

/// Frequencies merged across batches that share a POVM fingerprint.
struct Group {
    duals: Vec<DualTable>,
    counts: Vec<f64>,
}

impl ShotData {
    pub fn new(n_qubits: usize) -> Self {
        ShotData { n_qubits, total_shots: 0, batches: Vec::new() }
    }

    /// Append one batch.  The record's fingerprint must match `povm`.
    pub fn append(&mut self, record: ShotRecord, povm: &ProductPovm) -> Result<()> {
        if record.n_qubits != self.n_qubits || povm.n_qubits() != self.n_qubits {
            return Err(Error::NQubitsMismatch(record.n_qubits, self.n_qubits));
        }
        if record.povm_fingerprint != povm.fingerprint() {
            return Err(Error::StaleShots);
        }
        let counts = if self.n_qubits <= MAX_TABLE_QUBITS {
            let mut c = vec![0.0f64; 1 << (2 * self.n_qubits)];
            for &w in &record.outcomes {
                let w = w as usize;
                if w >= c.len() {
                    return Err(Error::Invalid(format!("outcome word {w} out of range")));
                }
                c[w] += 1.0;
            }
            Some(c)
        } else {
            None
        };
        let mut duals = Vec::with_capacity(self.n_qubits);
        let mut masks = Vec::with_capacity(self.n_qubits);
        for q in 0..self.n_qubits {
            let (d, ok) = povm.partial_dual(q);
            duals.push(*d);
            masks.push(ok);
        }
        let ic = masks.iter().all(|m| m.iter().all(|&v| v));
        self.total_shots += record.n_shots();
        self.batches.push(Batch { record, duals, masks, ic, counts });
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn total_shots(&self) -> usize {
        self.total_shots
    }

    pub fn n_batches(&self) -> usize {
        self.batches.len()
    }

    pub fn batch_record(&self, i: usize) -> &ShotRecord {
        &self.batches[i].record
    }

    fn require_data(&self) -> Result<()> {
        if self.batches.is_empty() {
            return Err(Error::Invalid("no measurement data".into()));
        }
        Ok(())
    }

    fn groups(&self) -> Vec<Group> {
        let mut by_fp: HashMap<u64, usize> = HashMap::new();
        let mut out: Vec<Group> = Vec::new();
        for b in &self.batches {
            let counts = b.counts.as_ref().expect("table path requires counts");
            match by_fp.get(&b.record.povm_fingerprint) {
                Some(&gi) => {
                    for (acc, v) in out[gi].counts.iter_mut().zip(counts) {
                        *acc += v;
                    }
                }
                None => {
                    by_fp.insert(b.record.povm_fingerprint, out.len());
                    out.push(Group { duals: b.duals.clone(), counts: counts.clone() });
                }
            }
        }
        out
    }

    /// Σ_g (dual transform of that group's raw counts): dividing by the
    /// total shot count yields the pooled empirical Pauli-moment table,
    /// an unbiased estimate of the state's moment tensor.
    fn pooled_moments_raw(&self, groups: &[Group]) -> Vec<f64> {
        let dim = 1usize << (2 * self.n_qubits);
        let mut acc = vec![0.0f64; dim];
        let mut scratch = vec![0.0f64; dim];
        for g in groups {
            scratch.copy_from_slice(&g.counts);
            for axis in 0..self.n_qubits {
                tensor::transform_axis_f64(&mut scratch, axis, &moment_matrix(&g.duals[axis]));
            }
            for (a, v) in acc.iter_mut().zip(&scratch) {
                *a += v;
            }
        }
        acc
    }

    fn letters_ok(&self, o: &PauliSum) -> Result<()> {
        for b in &self.batches {
            check_letters(o, &b.masks, b.ic)?;
        }
        Ok(())
    }

    /// (mean, per-shot variance) of one observable over the pooled data.
    fn stats(&self, o: &PauliSum) -> Result<(f64, f64)> {
        Ok(self.stats_many(&[o])?[0])
    }

    fn stats_many(&self, observables: &[&PauliSum]) -> Result<Vec<(f64, f64)>> {
        self.require_data()?;
        for o in observables {
            if o.n_qubits() != self.n_qubits {
                return Err(Error::NQubitsMismatch(o.n_qubits(), self.n_qubits));
            }
            require_hermitian(o)?;
            self.letters_ok(o)?;
        }
        if self.n_qubits > MAX_TABLE_QUBITS {
            return self.stats_many_direct(observables);
        }
        let dim = 1usize << (2 * self.n_qubits);
        let s_tot = self.total_shots as f64;
        let groups = self.groups();
        let w_raw = self.pooled_moments_raw(&groups);
        let mut coeff = vec![0.0f64; dim];
        let mut omega = vec![0.0f64; dim];
        let mut results = Vec::with_capacity(observables.len());
        for &o in observables {
            scatter_coefficients(o, &mut coeff);
            let mut mean = 0.0;
            for (s, c) in o.terms() {
                mean += c.re * w_raw[MomentTensor::string_index(s)];
            }
            mean /= s_tot;
            let mut sum_sq = 0.0;
            for g in &groups {
                omega.copy_from_slice(&coeff);
                for axis in 0..self.n_qubits {
                    tensor::transform_axis_f64(&mut omega, axis, &omega_matrix(&g.duals[axis]));
                }
                let mut acc = 0.0;
                for (cnt, w) in g.counts.iter().zip(&omega) {
                    if *cnt != 0.0 {
                        acc += cnt * w * w;
                    }
                }
                sum_sq += acc;
            }
            let var = (sum_sq / s_tot - mean * mean).max(0.0);
            results.push((mean, var));
            clear_coefficients(o, &mut coeff);
        }
        Ok(results)
    }

    /// Per-shot path for large N: one pass over shots, per-qubit dual
    /// lookups cached per shot and shared across all observables.
    fn stats_many_direct(&self, observables: &[&PauliSum]) -> Result<Vec<(f64, f64)>> {
        let n = self.n_qubits;
        let mut sums = vec![0.0f64; observables.len()];
        let mut sums_sq = vec![0.0f64; observables.len()];
        let mut lookup = vec![[0.0f64; 4]; n];
        for b in &self.batches {
            for s in 0..b.record.n_shots() {
                for q in 0..n {
                    let m = b.record.outcome(s, q) as usize;
                    for t in 0..4 {
                        lookup[q][t] = b.duals[q][t][m];
                    }
                }
                for (oi, o) in observables.iter().enumerate() {
                    let mut w = 0.0;
                    for (string, c) in o.terms() {
                        let mut prod = c.re;
                        for q in string.support() {
                            prod *= lookup[q][string.letter(q) as usize];
                        }
                        // identity letters contribute b[I][m] = 1 exactly
                        w += prod;
                    }
                    sums[oi] += w;
                    sums_sq[oi] += w * w;
                }
            }
        }
        let s_tot = self.total_shots as f64;
        Ok(sums
            .iter()
            .zip(&sums_sq)
            .map(|(&s1, &s2)| {
                let mean = s1 / s_tot;
                (mean, (s2 / s_tot - mean * mean).max(0.0))
            })
            .collect())
    }

    /// Eq.-(7)-style estimate: (mean, standard error of the mean).
    pub fn estimate(&self, o: &PauliSum) -> Result<(f64, f64)> {
        let (mean, var) = self.stats(o)?;
        Ok((mean, (var / self.total_shots as f64).sqrt()))
    }

    /// Shared-data estimates for many observables at once.
    pub fn estimate_many(&self, observables: &[&PauliSum]) -> Result<Vec<(f64, f64)>> {
        let s_tot = self.total_shots as f64;
        Ok(self
            .stats_many(observables)?
            .into_iter()
            .map(|(mean, var)| (mean, (var / s_tot).sqrt()))
            .collect())
    }

    /// Means only — the cheap screening path (moment-table lookups).
    pub fn means(&self, observables: &[&PauliSum]) -> Result<Vec<f64>> {
        self.require_data()?;
        for o in observables {
            if o.n_qubits() != self.n_qubits {
                return Err(Error::NQubitsMismatch(o.n_qubits(), self.n_qubits));
            }
            require_hermitian(o)?;
            self.letters_ok(o)?;
        }
        if self.n_qubits > MAX_TABLE_QUBITS {
            return Ok(self
                .stats_many_direct(observables)?
                .into_iter()
                .map(|(m, _)| m)
                .collect());
        }
        let groups = self.groups();
        let w_raw = self.pooled_moments_raw(&groups);
        let s_tot = self.total_shots as f64;
        Ok(observables
            .iter()
            .map(|o| {
                o.terms()
                    .map(|(s, c)| c.re * w_raw[MomentTensor::string_index(s)])
                    .sum::<f64>()
                    / s_tot
            })
            .collect())
    }

    /// Per-shot standard deviation of the energy weights (not divided by √S).
    pub fn epsilon_e(&self, h: &PauliSum) -> Result<f64> {
        Ok(self.stats(h)?.1.sqrt())
    }

    /// Estimate of the candidate POVM's per-shot variance ⟨ω'²⟩ − mean²
    /// from the data in hand: the pooled empirical moment table is pushed
    /// through the candidate's effect coefficients to predict its outcome
    /// distribution, then dotted with the candidate's squared ω table.
    /// When the candidate is the POVM that produced every batch this reduces
    /// to ε_E² through the identical per-shot tables.
    pub fn candidate_variance(&self, h: &PauliSum, candidate: &ProductPovm) -> Result<f64> {
        self.require_data()?;
        require_hermitian(h)?;
        if candidate.n_qubits() != self.n_qubits {
            return Err(Error::NQubitsMismatch(candidate.n_qubits(), self.n_qubits));
        }
        if self
            .batches
            .iter()
            .all(|b| b.record.povm_fingerprint == candidate.fingerprint())
        {
            return Ok(self.stats(h)?.1);
        }
        if self.n_qubits > MAX_TABLE_QUBITS {
            return Err(Error::TooManyQubits("candidate_variance", self.n_qubits, MAX_TABLE_QUBITS));
        }
        for b in &self.batches {
            if !b.ic {
                return Err(Error::Invalid(
                    "candidate variance requires IC measurement data".into(),
                ));
            }
        }
        let mut cand_duals = Vec::with_capacity(self.n_qubits);
        for q in 0..self.n_qubits {
            cand_duals.push(*candidate.dual(q)?);
        }
        self.letters_ok(h)?;
        let dim = 1usize << (2 * self.n_qubits);
        let s_tot = self.total_shots as f64;
        let groups = self.groups();
        let w_raw = self.pooled_moments_raw(&groups);
        let mut mean = 0.0;
        for (s, c) in h.terms() {
            mean += c.re * w_raw[MomentTensor::string_index(s)];
        }
        mean /= s_tot;
        // predicted candidate outcome distribution
        let mut p = w_raw;
        for v in p.iter_mut() {
            *v /= s_tot;
        }
        for axis in 0..self.n_qubits {
            let a = candidate.qubit(axis).effect_coefficients();
            tensor::transform_axis_f64(&mut p, axis, &a);
        }
        // candidate ω table
        let mut omega = vec![0.0f64; dim];
        scatter_coefficients(h, &mut omega);
        for axis in 0..self.n_qubits {
            tensor::transform_axis_f64(&mut omega, axis, &omega_matrix(&cand_duals[axis]));
        }
        let second: f64 = p.iter().zip(&omega).map(|(pv, w)| pv * w * w).sum();
        Ok(second - mean * mean)
    }

    /// Precomputed tensors for the POVM-parameter search: all-axes-but-one
    /// transforms of the pooled moment table and of the energy coefficient
    /// tensor, so single-qubit candidate variances cost one axis transform.
    pub fn variance_workspace(&self, h: &PauliSum, current: &ProductPovm) -> Result<VarianceWorkspace> {
        self.require_data()?;
        require_hermitian(h)?;
        if current.n_qubits() != self.n_qubits {
            return Err(Error::NQubitsMismatch(current.n_qubits(), self.n_qubits));
        }
        if self.n_qubits > MAX_TABLE_QUBITS {
            return Err(Error::TooManyQubits("variance_workspace", self.n_qubits, MAX_TABLE_QUBITS));
        }
        for b in &self.batches {
            if !b.ic {
                return Err(Error::Invalid(
                    "variance workspace requires IC measurement data".into(),
                ));
            }
        }
        let mut cur_duals = Vec::with_capacity(self.n_qubits);
        for q in 0..self.n_qubits {
            cur_duals.push(*current.dual(q)?);
        }
        let (mean, current_variance) = self.stats(h)?;
        let dim = 1usize << (2 * self.n_qubits);
        let s_tot = self.total_shots as f64;
        let groups = self.groups();
        let mut w_pooled = self.pooled_moments_raw(&groups);
        for v in w_pooled.iter_mut() {
            *v /= s_tot;
        }
        let mut coeff = vec![0.0f64; dim];
        scatter_coefficients(h, &mut coeff);
        let n = self.n_qubits;
        let mut p_except = Vec::with_capacity(n);
        let mut o_except = Vec::with_capacity(n);
        for skip in 0..n {
            let mut p = w_pooled.clone();
            let mut o = coeff.clone();
            for axis in 0..n {
                if axis == skip {
                    continue;
                }
                let a = current.qubit(axis).effect_coefficients();
                tensor::transform_axis_f64(&mut p, axis, &a);
                tensor::transform_axis_f64(&mut o, axis, &omega_matrix(&cur_duals[axis]));
            }
            p_except.push(p);
            o_except.push(o);
        }
        Ok(VarianceWorkspace {
            n_qubits: n,
            mean,
            current_variance,
            w_pooled,
            coeff,
            p_except,
            o_except,
        })
    }
}

/// See [`ShotData::variance_workspace`].
pub struct VarianceWorkspace {
    n_qubits: usize,
    mean: f64,
    current_variance: f64,
    w_pooled: Vec<f64>,
    coeff: Vec<f64>,
    p_except: Vec<Vec<f64>>,
    o_except: Vec<Vec<f64>>,
}

impl VarianceWorkspace {
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// ε_E² of the data in hand (per-shot table path).
    pub fn current_variance(&self) -> f64 {
        self.current_variance
    }

    /// Candidate variance when only `axis`'s POVM is replaced.
    pub fn axis_variance(&self, axis: usize, single: &SingleQubitPovm) -> Result<f64> {
        let duals = crate::povm::compute_duals(single)?;
        let mut p = self.p_except[axis].clone();
        tensor::transform_axis_f64(&mut p, axis, &single.effect_coefficients());
        let mut o = self.o_except[axis].clone();
        tensor::transform_axis_f64(&mut o, axis, &omega_matrix(&duals));
        let second: f64 = p.iter().zip(&o).map(|(pv, w)| pv * w * w).sum();
        Ok(second - self.mean * self.mean)
    }

    /// Candidate variance for a full product POVM.
    pub fn full_variance(&self, candidate: &ProductPovm) -> Result<f64> {
        if candidate.n_qubits() != self.n_qubits {
            return Err(Error::NQubitsMismatch(candidate.n_qubits(), self.n_qubits));
        }
        let mut p = self.w_pooled.clone();
        let mut o = self.coeff.clone();
        for axis in 0..self.n_qubits {
            let duals = candidate.dual(axis)?;
            tensor::transform_axis_f64(&mut p, axis, &candidate.qubit(axis).effect_coefficients());
            tensor::transform_axis_f64(&mut o, axis, &omega_matrix(duals));
        }
        let second: f64 = p.iter().zip(&o).map(|(pv, w)| pv * w * w).sum();
        Ok(second - self.mean * self.mean)
    }
}

fn single_record_data(povm: &ProductPovm, shots: &ShotRecord) -> Result<ShotData> {
    let mut data = ShotData::new(shots.n_qubits);
    data.append(shots.clone(), povm)?;
    Ok(data)
}

/// Mean and standard error of ⟨O⟩ from one batch of IC POVM data.
pub fn estimate(o: &PauliSum, povm: &ProductPovm, shots: &ShotRecord) -> Result<(f64, f64)> {
    single_record_data(povm, shots)?.estimate(o)
}

/// Shared-data estimates for a list of observables (identical numbers to
/// calling `estimate` per observable, at amortised cost).
pub fn estimate_many(
    observables: &[PauliSum],
    povm: &ProductPovm,
    shots: &ShotRecord,
) -> Result<Vec<(f64, f64)>> {
    let data = single_record_data(povm, shots)?;
    let refs: Vec<&PauliSum> = observables.iter().collect();
    data.estimate_many(&refs)
}

/// Per-shot standard deviation of the energy weights ω (Eq.-(7) data).
pub fn epsilon_e(h: &PauliSum, povm: &ProductPovm, shots: &ShotRecord) -> Result<f64> {
    single_record_data(povm, shots)?.epsilon_e(h)
}

/// Data-driven estimate of a candidate POVM's per-shot energy variance.
pub fn candidate_variance(
    h: &PauliSum,
    candidate: &ProductPovm,
    current: &ProductPovm,
    shots: &ShotRecord,
) -> Result<f64> {
    single_record_data(current, shots)?.candidate_variance(h, candidate)
}

/// Exact per-shot standard deviation of ω under `povm` for the state whose
/// moment tensor is given: √(Σ_m p_m ω_m² − (Σ_m p_m ω_m)²).
pub fn exact_epsilon_e(
    h: &PauliSum,
    povm: &ProductPovm,
    moments: &MomentTensor,
) -> Result<f64> {
    Ok(exact_variance(h, povm, moments)?.max(0.0).sqrt())
}

/// Exact candidate variance ⟨ω²⟩ − ⟨ω⟩² from a state's moment tensor.
pub fn exact_variance(h: &PauliSum, povm: &ProductPovm, moments: &MomentTensor) -> Result<f64> {
    require_hermitian(h)?;
    let n = moments.n_qubits();
    if h.n_qubits() != n || povm.n_qubits() != n {
        return Err(Error::NQubitsMismatch(h.n_qubits(), n));
    }
    check_letters(
        h,
        &(0..n).map(|q| povm.partial_dual(q).1).collect::<Vec<_>>(),
        povm.is_ic(),
    )?;
    let p = simulator::joint_probabilities(moments, povm)?;
    let dim = 1usize << (2 * n);
    let mut omega = vec![0.0f64; dim];
    scatter_coefficients(h, &mut omega);
    for axis in 0..n {
        let (duals, _) = povm.partial_dual(axis);
        tensor::transform_axis_f64(&mut omega, axis, &omega_matrix(duals));
    }
    let mut first = 0.0;
    let mut second = 0.0;
    for (pv, w) in p.iter().zip(&omega) {
        first += pv * w;
        second += pv * w * w;
    }
    Ok(second - first * first)
}
