//! The three ADAPT operator pools: spin-dependent fermionic excitations,
//! their Z-chain-stripped QEB images, and single-string qubit-ADAPT
//! operators obtained by term splitting.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fermion::{map_fermion_op, FermionOp, Ladder, MappingScheme};
use crate::pauli::{PauliString, PauliSum};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    FermionicSingle,
    FermionicDouble,
    QebSingle,
    QebDouble,
    QubitString,
}

impl OperatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::FermionicSingle => "fermionic-single",
            OperatorKind::FermionicDouble => "fermionic-double",
            OperatorKind::QebSingle => "qeb-single",
            OperatorKind::QebDouble => "qeb-double",
            OperatorKind::QubitString => "qubit-string",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolKind {
    Fermionic,
    Qeb,
    QubitAdapt,
}

impl PoolKind {
    pub fn name(&self) -> &'static str {
        match self {
            PoolKind::Fermionic => "fermionic",
            PoolKind::Qeb => "qeb",
            PoolKind::QubitAdapt => "qubit-adapt",
        }
    }
}

impl std::str::FromStr for PoolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fermionic" => Ok(PoolKind::Fermionic),
            "qeb" => Ok(PoolKind::Qeb),
            "qubit-adapt" | "qubit_adapt" | "qubitadapt" => Ok(PoolKind::QubitAdapt),
            other => Err(Error::Invalid(format!("unknown pool kind '{other}'"))),
        }
    }
}

/// Spin-orbital provenance of an excitation operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceIndices {
    Single { p: usize, q: usize },
    Double { p: usize, q: usize, r: usize, s: usize },
    None,
}

#[derive(Clone, Debug)]
pub struct PoolOperator {
    pub id: usize,
    pub generator: PauliSum,
    pub kind: OperatorKind,
    pub source_indices: SourceIndices,
}

#[derive(Clone)]
pub struct OperatorPool {
    pub operators: Vec<PoolOperator>,
    pub scheme: MappingScheme,
    pub kind: PoolKind,
}

impl OperatorPool {
    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn n_qubits(&self) -> usize {
        self.operators.first().map(|op| op.generator.n_qubits()).unwrap_or(0)
    }

    /// Text manifest: one line per operator (id, kind, indices, stats).
    pub fn manifest(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# pool kind={} scheme={} size={}", self.kind.name(), self.scheme.name(), self.len());
        for op in &self.operators {
            let idx = match op.source_indices {
                SourceIndices::Single { p, q } => format!("({p},{q})"),
                SourceIndices::Double { p, q, r, s } => format!("({p},{q},{r},{s})"),
                SourceIndices::None => "-".to_string(),
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                op.id,
                op.kind.name(),
                idx,
                op.generator.n_terms(),
                op.generator.max_weight()
            );
        }
        out
    }
}

fn spin(idx: usize) -> usize {
    idx % 2
}

/// Enumerate the excitations of the spin-dependent pool in a fixed canonical
/// order: singles (same spin, p < q), then doubles over unordered
/// creation/annihilation pairs with equal spin multisets, distinct index
/// sets, and creation pair < annihilation pair to drop the sign-equivalent
/// duplicate.
fn enumerate_excitations(n_spatial: usize) -> Vec<(FermionOp, OperatorKind, SourceIndices)> {
    let n = 2 * n_spatial;
    let one = Complex64::new(1.0, 0.0);
    let m_one = Complex64::new(-1.0, 0.0);
    let mut out = Vec::new();

    // singles: τ_p^q = a_q† a_p − a_p† a_q, same spin
    for p in 0..n {
        for q in (p + 1)..n {
            if spin(p) != spin(q) {
                continue;
            }
            let mut op = FermionOp::new();
            op.push(one, vec![Ladder::create(q), Ladder::annihilate(p)]);
            op.push(m_one, vec![Ladder::create(p), Ladder::annihilate(q)]);
            out.push((op, OperatorKind::FermionicSingle, SourceIndices::Single { p, q }));
        }
    }

    // doubles: τ_rs^pq = a_p† a_q† a_r a_s − a_s† a_r† a_q a_p
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            pairs.push((a, b));
        }
    }
    for (i, &(p, q)) in pairs.iter().enumerate() {
        for &(r, s) in pairs.iter().skip(i + 1) {
            if spin(p) + spin(q) != spin(r) + spin(s) {
                continue;
            }
            if p == r && q == s {
                continue; // same set → Hermitian product, zero operator
            }
            let mut op = FermionOp::new();
            op.push(
                one,
                vec![
                    Ladder::create(p),
                    Ladder::create(q),
                    Ladder::annihilate(r),
                    Ladder::annihilate(s),
                ],
            );
            op.push(
                m_one,
                vec![
                    Ladder::create(s),
                    Ladder::create(r),
                    Ladder::annihilate(q),
                    Ladder::annihilate(p),
                ],
            );
            out.push((op, OperatorKind::FermionicDouble, SourceIndices::Double { p, q, r, s }));
        }
    }
    out
}

pub fn build_fermionic_pool(n_spatial: usize, scheme: MappingScheme) -> Result<OperatorPool> {
    let n_qubits = 2 * n_spatial;
    let mut operators = Vec::new();
    for (op, kind, src) in enumerate_excitations(n_spatial) {
        let generator = map_fermion_op(&op, scheme, n_qubits)?;
        debug_assert!(generator.is_antihermitian());
        debug_assert!(!generator.is_zero());
        operators.push(PoolOperator { id: operators.len(), generator, kind, source_indices: src });
    }
    Ok(OperatorPool { operators, scheme, kind: PoolKind::Fermionic })
}

/// JW images of the fermionic pool with every letter outside the excitation's
/// own spin-orbital set replaced by identity (this deletes exactly the
/// anticommutation Z-chains; coefficients are untouched).
pub fn build_qeb_pool(n_spatial: usize) -> Result<OperatorPool> {
    let n_qubits = 2 * n_spatial;
    let mut operators = Vec::new();
    for (op, kind, src) in enumerate_excitations(n_spatial) {
        let jw = map_fermion_op(&op, MappingScheme::JW, n_qubits)?;
        let keep: Vec<usize> = match src {
            SourceIndices::Single { p, q } => vec![p, q],
            SourceIndices::Double { p, q, r, s } => vec![p, q, r, s],
            SourceIndices::None => unreachable!(),
        };
        let mut stripped = PauliSum::zero(n_qubits);
        for (s, c) in jw.terms() {
            let mut t = PauliString::identity(n_qubits);
            for &qb in &keep {
                t.set_letter(qb, s.letter(qb));
            }
            stripped.add_term(t, *c);
        }
        let stripped = stripped.pruned(crate::pauli::PRUNE_TOL);
        debug_assert!(stripped.is_antihermitian());
        let kind = match kind {
            OperatorKind::FermionicSingle => OperatorKind::QebSingle,
            OperatorKind::FermionicDouble => OperatorKind::QebDouble,
            k => k,
        };
        operators.push(PoolOperator {
            id: operators.len(),
            generator: stripped,
            kind,
            source_indices: src,
        });
    }
    Ok(OperatorPool { operators, scheme: MappingScheme::JW, kind: PoolKind::Qeb })
}

/// Split every distinct Pauli string of the base pool into its own operator
/// i·S (identity excluded, duplicates merged, coefficients normalised to i).
pub fn build_qubit_adapt_pool(base: &OperatorPool) -> OperatorPool {
    let mut strings: BTreeMap<PauliString, ()> = BTreeMap::new();
    for op in &base.operators {
        for (s, _) in op.generator.terms() {
            if !s.is_identity() {
                strings.insert(*s, ());
            }
        }
    }
    let operators = strings
        .into_keys()
        .enumerate()
        .map(|(id, s)| PoolOperator {
            id,
            generator: PauliSum::from_string(s, Complex64::new(0.0, 1.0)),
            kind: OperatorKind::QubitString,
            source_indices: SourceIndices::None,
        })
        .collect();
    OperatorPool { operators, scheme: base.scheme, kind: PoolKind::QubitAdapt }
}

/// The pool a given (scheme, kind) request resolves to: QEB exists only under
/// JW; the qubit-ADAPT pool is split from the QEB pool under JW and from the
/// mapped fermionic pool otherwise.
pub fn build_pool(n_spatial: usize, scheme: MappingScheme, kind: PoolKind) -> Result<OperatorPool> {
    match kind {
        PoolKind::Fermionic => build_fermionic_pool(n_spatial, scheme),
        PoolKind::Qeb => {
            if scheme != MappingScheme::JW {
                return Err(Error::Invalid("the QEB pool requires the JW mapping".into()));
            }
            build_qeb_pool(n_spatial)
        }
        PoolKind::QubitAdapt => {
            let base = if scheme == MappingScheme::JW {
                build_qeb_pool(n_spatial)?
            } else {
                build_fermionic_pool(n_spatial, scheme)?
            };
            Ok(build_qubit_adapt_pool(&base))
        }
    }
}
