//! Informationally complete POVM machinery: parameterised single-qubit
//! 4-effect POVMs, dual frames, shot records, Monte-Carlo estimation from
//! shared measurement data, and the adaptive POVM optimisation loop.

mod estimate;
mod optimise;

pub use estimate::{
    candidate_variance, epsilon_e, estimate, estimate_many, exact_epsilon_e, exact_variance,
    ShotData, VarianceWorkspace,
};
pub use optimise::{
    optimise_povm, MeasurementSchedule, OptimiseOutcome, PovmSampler, StateSampler, StopRule,
    TraceRow,
};

use nalgebra::Matrix4 as NMatrix4;
use num_complex::Complex64;

use crate::dense::{expi_hermitian4, letter_matrix, sqrt_psd2, Mat2, Mat4};
use crate::error::{Error, Result};
use crate::pauli::Letter;

pub const N_EFFECTS: usize = 4;

const LETTERS: [Letter; 4] = [Letter::I, Letter::X, Letter::Y, Letter::Z];

/// A single-qubit 4-effect POVM obtained from a qubit ⊗ ancilla dilation
/// unitary U = base · exp(i H(params)): effect m is K_m† K_m with K_m the
/// m-th row of U restricted to the ancilla-in-|0⟩ columns.
///
/// `params` is a 16-real chart around `base`; after an optimisation step is
/// accepted the unitary is re-based so the chart stays centred at the current
/// POVM (see `with_params` / `rebased`).
#[derive(Clone, Debug)]
pub struct SingleQubitPovm {
    base: Mat4,
    params: [f64; 16],
    effects: [Mat2; 4],
    kraus: [Mat2; 4],
}

pub const N_PARAMS: usize = 16;

fn hermitian_from_params(p: &[f64; N_PARAMS]) -> Mat4 {
    let mut h = Mat4::zeros();
    for d in 0..4 {
        h[(d, d)] = Complex64::new(p[d], 0.0);
    }
    let mut k = 4;
    for r in 0..4 {
        for c in (r + 1)..4 {
            let v = Complex64::new(p[k], p[k + 1]);
            h[(r, c)] = v;
            h[(c, r)] = v.conj();
            k += 2;
        }
    }
    h
}

impl SingleQubitPovm {
    pub fn from_base(base: Mat4, params: [f64; N_PARAMS]) -> Result<Self> {
        let u = base * expi_hermitian4(&hermitian_from_params(&params));
        let mut effects = [Mat2::zeros(); 4];
        let mut kraus_rows = [[Complex64::new(0.0, 0.0); 2]; 4];
        for m in 0..4 {
            // ancilla starts in |0⟩: columns 0 (system |0⟩) and 2 (system |1⟩)
            kraus_rows[m] = [u[(m, 0)], u[(m, 2)]];
            let k = kraus_rows[m];
            for r in 0..2 {
                for c in 0..2 {
                    effects[m][(r, c)] = k[r].conj() * k[c];
                }
            }
        }
        let kraus = effects.map(|e| sqrt_psd2(&e));
        let povm = SingleQubitPovm { base, params, effects, kraus };
        povm.validate()?;
        Ok(povm)
    }

    /// Same base, different chart point.
    pub fn with_params(&self, params: [f64; N_PARAMS]) -> Result<Self> {
        Self::from_base(self.base, params)
    }

    /// Fold the current params into the base so the chart is centred here.
    pub fn rebased(&self) -> Self {
        let u = self.base * expi_hermitian4(&hermitian_from_params(&self.params));
        SingleQubitPovm {
            base: u,
            params: [0.0; N_PARAMS],
            effects: self.effects,
            kraus: self.kraus,
        }
    }

    pub fn params(&self) -> &[f64; N_PARAMS] {
        &self.params
    }

    pub fn effects(&self) -> &[Mat2; 4] {
        &self.effects
    }

    /// Π_m^{1/2}, the Kraus operator of the conditional-sampling path.
    pub fn kraus(&self) -> &[Mat2; 4] {
        &self.kraus
    }

    fn validate(&self) -> Result<()> {
        let mut sum = Mat2::zeros();
        for e in &self.effects {
            sum += e;
        }
        let dev = (sum - Mat2::identity()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if dev > 1e-10 {
            return Err(Error::InvalidPovm(format!("effects sum deviates from identity by {dev:.3e}")));
        }
        for e in &self.effects {
            // 2x2 Hermitian PSD check via trace/determinant
            let herm = (e[(0, 1)] - e[(1, 0)].conj()).norm();
            if herm > 1e-10 {
                return Err(Error::InvalidPovm(format!("effect not Hermitian ({herm:.3e})")));
            }
            let tr = (e[(0, 0)] + e[(1, 1)]).re;
            let det = (e[(0, 0)] * e[(1, 1)] - e[(0, 1)] * e[(1, 0)]).re;
            let min_eig = 0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt());
            if min_eig < -1e-12 {
                return Err(Error::InvalidPovm(format!("effect has eigenvalue {min_eig:.3e}")));
            }
        }
        Ok(())
    }

    /// A[m][σ] with Π_m = Σ_σ A[m][σ]·σ, i.e. A[m][σ] = Tr[Π_m σ]/2.
    pub fn effect_coefficients(&self) -> [[f64; 4]; 4] {
        let mut a = [[0.0; 4]; 4];
        for (m, e) in self.effects.iter().enumerate() {
            for (si, &letter) in LETTERS.iter().enumerate() {
                let sm = letter_matrix(letter);
                let tr = (e[(0, 0)] * sm[(0, 0)]
                    + e[(0, 1)] * sm[(1, 0)]
                    + e[(1, 0)] * sm[(0, 1)]
                    + e[(1, 1)] * sm[(1, 1)])
                    .re;
                a[m][si] = 0.5 * tr;
            }
        }
        a
    }
}

/// Dual frame b[σ][m] solving σ = Σ_m b[σ][m] Π_m.
pub type DualTable = [[f64; 4]; 4];

/// Least-squares dual frame of a possibly rank-deficient POVM: the table is
/// the pseudoinverse solution, and `ok[σ]` records which Pauli letters are
/// actually reconstructed (all four iff the POVM is IC).  Also returns the
/// condition number of the effect-coefficient matrix.
pub(crate) fn partial_duals(p: &SingleQubitPovm) -> (DualTable, [bool; 4], f64) {
    let a = p.effect_coefficients();
    let m = NMatrix4::from_fn(|r, c| a[r][c]);
    let svd = m.svd(false, false);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let pinv = match m.pseudo_inverse(1e-10 * smax.max(1.0)) {
        Ok(inv) => inv,
        Err(_) => NMatrix4::zeros(),
    };
    let mut b = [[0.0; 4]; 4];
    for si in 0..4 {
        for mm in 0..4 {
            b[si][mm] = pinv[(si, mm)];
        }
    }
    // The decomposition of the identity is exactly Σ_m 1·Π_m; pin it so the
    // identity component of any observable is estimated without noise.
    b[0] = [1.0; 4];
    let mut ok = [false; 4];
    for (si, &letter) in LETTERS.iter().enumerate() {
        let target = letter_matrix(letter);
        let mut rec = Mat2::zeros();
        for mm in 0..4 {
            rec += p.effects[mm] * Complex64::new(b[si][mm], 0.0);
        }
        let dev = (rec - target).iter().map(|c| c.norm()).fold(0.0, f64::max);
        ok[si] = dev < 1e-9;
    }
    (b, ok, cond)
}

/// Solve the 4-dim Hilbert-Schmidt system for the dual table.  Errors with
/// the condition number when the effects are not informationally complete.
pub fn compute_duals(p: &SingleQubitPovm) -> Result<DualTable> {
    let (b, ok, cond) = partial_duals(p);
    if ok.iter().all(|&v| v) {
        Ok(b)
    } else {
        Err(Error::NotInformationallyComplete { cond })
    }
}

/// Tetrahedral SIC POVM Π_m = ¼(I + r_m·σ), the default initial measurement.
pub fn default_sic() -> SingleQubitPovm {
    let s3 = 1.0 / 3.0f64.sqrt();
    let dirs = [
        [s3, s3, s3],
        [s3, -s3, -s3],
        [-s3, s3, -s3],
        [-s3, -s3, s3],
    ];
    // K_m = ⟨u_m|/√2 with |u_m⟩ the Bloch state along r_m; embed the 4x2
    // isometry into columns 0,2 of a unitary and complete the rest.
    let mut u = Mat4::zeros();
    for (m, r) in dirs.iter().enumerate() {
        let theta = r[2].clamp(-1.0, 1.0).acos();
        let phi = r[1].atan2(r[0]);
        let a = Complex64::new((theta / 2.0).cos(), 0.0);
        let b = Complex64::from_polar((theta / 2.0).sin(), phi);
        let inv_sqrt2 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        u[(m, 0)] = a.conj() * inv_sqrt2;
        u[(m, 2)] = b.conj() * inv_sqrt2;
    }
    complete_unitary(&mut u);
    SingleQubitPovm::from_base(u, [0.0; N_PARAMS]).expect("SIC construction is valid")
}

/// Fill columns 1 and 3 with an orthonormal complement (Gram-Schmidt).
fn complete_unitary(u: &mut Mat4) {
    let filled = [0usize, 2];
    let free = [1usize, 3];
    let mut basis: Vec<nalgebra::Vector4<Complex64>> =
        filled.iter().map(|&c| u.column(c).into_owned()).collect();
    let mut candidates: Vec<nalgebra::Vector4<Complex64>> = Vec::new();
    for k in 0..4 {
        let mut e = nalgebra::Vector4::zeros();
        e[k] = Complex64::new(1.0, 0.0);
        candidates.push(e);
    }
    for &col in &free {
        let mut picked = None;
        for cand in &candidates {
            let mut v = cand.clone();
            for b in &basis {
                let overlap = b.dotc(&v);
                v -= b * overlap;
            }
            let norm = v.norm();
            if norm > 1e-6 {
                picked = Some(v / Complex64::new(norm, 0.0));
                break;
            }
        }
        let v = picked.expect("orthonormal completion exists");
        u.set_column(col, &v);
        basis.push(v);
    }
    debug_assert!(
        (u.adjoint() * *u - Mat4::identity())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
            < 1e-10
    );
}

/// Product of per-qubit POVMs together with their dual tables and a stable
/// fingerprint tying shot records to the POVM that produced them.
///
/// Construction does not require informational completeness — sampling from
/// a valid but non-IC POVM is well defined.  Estimation does; `dual` errors
/// for qubits whose effects do not span the operator space, while
/// `partial_dual` exposes the least-squares table with a per-letter validity
/// mask (observables supported on the reconstructed letters remain
/// estimable).
#[derive(Clone)]
pub struct ProductPovm {
    qubits: Vec<SingleQubitPovm>,
    duals: Vec<DualTable>,
    letter_ok: Vec<[bool; 4]>,
    conds: Vec<f64>,
    fingerprint: u64,
}

impl ProductPovm {
    pub fn new(qubits: Vec<SingleQubitPovm>) -> Self {
        let mut duals = Vec::with_capacity(qubits.len());
        let mut letter_ok = Vec::with_capacity(qubits.len());
        let mut conds = Vec::with_capacity(qubits.len());
        for q in &qubits {
            let (b, ok, cond) = partial_duals(q);
            duals.push(b);
            letter_ok.push(ok);
            conds.push(cond);
        }
        let fingerprint = fingerprint_of(&qubits);
        ProductPovm { qubits, duals, letter_ok, conds, fingerprint }
    }

    pub fn uniform(n_qubits: usize, single: SingleQubitPovm) -> Self {
        Self::new(vec![single; n_qubits])
    }

    pub fn uniform_sic(n_qubits: usize) -> Self {
        Self::uniform(n_qubits, default_sic())
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubit(&self, i: usize) -> &SingleQubitPovm {
        &self.qubits[i]
    }

    pub fn is_ic(&self) -> bool {
        self.letter_ok.iter().all(|ok| ok.iter().all(|&v| v))
    }

    pub fn dual(&self, i: usize) -> Result<&DualTable> {
        if self.letter_ok[i].iter().all(|&v| v) {
            Ok(&self.duals[i])
        } else {
            Err(Error::NotInformationallyComplete { cond: self.conds[i] })
        }
    }

    /// Least-squares dual table plus the mask of reconstructed letters.
    pub fn partial_dual(&self, i: usize) -> (&DualTable, [bool; 4]) {
        (&self.duals[i], self.letter_ok[i])
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Worst per-qubit condition number of the effect-to-moment map.
    pub fn max_condition(&self) -> f64 {
        self.conds.iter().fold(0.0f64, |m, &c| m.max(c))
    }

    /// Replace one qubit's POVM (dual table and fingerprint are refreshed).
    pub fn with_qubit(&self, i: usize, p: SingleQubitPovm) -> Self {
        let mut qubits = self.qubits.clone();
        qubits[i] = p;
        Self::new(qubits)
    }

    /// Re-centre every qubit's parameter chart at the current point.
    pub fn rebased(&self) -> Self {
        let qubits: Vec<SingleQubitPovm> = self.qubits.iter().map(|q| q.rebased()).collect();
        let fingerprint = fingerprint_of(&qubits);
        ProductPovm {
            qubits,
            duals: self.duals.clone(),
            letter_ok: self.letter_ok.clone(),
            conds: self.conds.clone(),
            fingerprint,
        }
    }
}

fn fingerprint_of(qubits: &[SingleQubitPovm]) -> u64 {
    // FNV-1a over the effect entries; stable across runs and platforms.
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |v: f64| {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    for q in qubits {
        for e in q.effects() {
            for r in 0..2 {
                for c in 0..2 {
                    eat(e[(r, c)].re);
                    eat(e[(r, c)].im);
                }
            }
        }
    }
    h
}

/// Outcomes of S shots of a product POVM: per shot, qubit i's outcome lives
/// in bits 2i..2i+1 of the packed word (so the word doubles as an index into
/// 4^N outcome tables).
#[derive(Clone, Debug)]
pub struct ShotRecord {
    pub n_qubits: usize,
    pub outcomes: Vec<u32>,
    pub povm_fingerprint: u64,
    pub seed: u64,
}

impl ShotRecord {
    pub fn n_shots(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcome(&self, shot: usize, qubit: usize) -> u8 {
        (self.outcomes[shot] >> (2 * qubit) & 3) as u8
    }

    /// Compact text form: a header line, then one digit string per shot
    /// (qubit 0 first).
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# n_qubits={} shots={} fingerprint={:016x} seed={}\n",
            self.n_qubits,
            self.n_shots(),
            self.povm_fingerprint,
            self.seed
        );
        for s in 0..self.n_shots() {
            for q in 0..self.n_qubits {
                out.push((b'0' + self.outcome(s, q)) as char);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Invalid("empty shot record".into()))?;
        let field = |key: &str| -> Result<u64> {
            let start = header
                .find(key)
                .ok_or_else(|| Error::Invalid(format!("missing {key} in header")))?;
            let rest = &header[start + key.len()..];
            let end = rest.find(' ').unwrap_or(rest.len());
            let tok = &rest[..end];
            if key == "fingerprint=" {
                u64::from_str_radix(tok, 16).map_err(|_| Error::Invalid("bad fingerprint".into()))
            } else {
                tok.parse().map_err(|_| Error::Invalid(format!("bad {key}")))
            }
        };
        let n_qubits = field("n_qubits=")? as usize;
        let povm_fingerprint = field("fingerprint=")?;
        let seed = field("seed=")?;
        let mut outcomes = Vec::new();
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line.chars().count() != n_qubits {
                return Err(Error::Invalid("shot line length mismatch".into()));
            }
            let mut word = 0u32;
            for (q, c) in line.chars().enumerate() {
                let d = c.to_digit(10).filter(|&d| d < 4).ok_or_else(|| {
                    Error::Invalid(format!("bad outcome digit '{c}'"))
                })?;
                word |= d << (2 * q);
            }
            outcomes.push(word);
        }
        Ok(ShotRecord { n_qubits, outcomes, povm_fingerprint, seed })
    }
}
