//! Fermion-to-qubit mappings, all realised through Majorana pairs.
//!
//! Every scheme supplies 2N Hermitian, pairwise-anticommuting Pauli strings
//! γ_0..γ_{2N-1}; the lowering operator is then a_p = (γ_{2p} + i γ_{2p+1})/2,
//! which for Jordan-Wigner reproduces the Z⊗...⊗(X+iY)/2 convention.

use num_complex::Complex64;

use crate::error::Result;
use crate::pauli::{Letter, PauliString, PauliSum};

use super::FermionOp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MappingScheme {
    JW,
    BK,
    JKMN,
}

impl MappingScheme {
    pub const ALL: [MappingScheme; 3] = [MappingScheme::JW, MappingScheme::BK, MappingScheme::JKMN];

    pub fn name(&self) -> &'static str {
        match self {
            MappingScheme::JW => "jw",
            MappingScheme::BK => "bk",
            MappingScheme::JKMN => "jkmn",
        }
    }
}

impl std::str::FromStr for MappingScheme {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jw" | "jordan-wigner" => Ok(MappingScheme::JW),
            "bk" | "bravyi-kitaev" => Ok(MappingScheme::BK),
            "jkmn" => Ok(MappingScheme::JKMN),
            other => Err(crate::error::Error::Invalid(format!("unknown mapping '{other}'"))),
        }
    }
}

/// The 2N Majorana strings of a scheme on `n_modes` modes (= qubits).
pub fn majorana_strings(scheme: MappingScheme, n_modes: usize) -> Vec<PauliString> {
    match scheme {
        MappingScheme::JW => jw_majoranas(n_modes),
        MappingScheme::BK => bk_majoranas(n_modes),
        MappingScheme::JKMN => jkmn_majoranas(n_modes),
    }
}

fn jw_majoranas(n: usize) -> Vec<PauliString> {
    let mut out = Vec::with_capacity(2 * n);
    for p in 0..n {
        for letter in [Letter::X, Letter::Y] {
            let mut s = PauliString::identity(n);
            for q in 0..p {
                s.set_letter(q, Letter::Z);
            }
            s.set_letter(p, letter);
            out.push(s);
        }
    }
    out
}

// ---- Bravyi-Kitaev via Fenwick-tree index sets ----
//
// 1-based node k of the binary indexed tree stores modes (k - lowbit(k), k].
// U(j): strictly-above update path of mode j; P(j): prefix-parity path of j;
// F(j): children of node j+1; R(j) = P(j) \ F(j).

fn lowbit(k: usize) -> usize {
    k & k.wrapping_neg()
}

fn bk_update_set(j: usize, n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut k = j + 1;
    k += lowbit(k);
    while k <= n {
        out.push(k - 1);
        k += lowbit(k);
    }
    out
}

fn bk_parity_set(j: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut k = j;
    while k > 0 {
        out.push(k - 1);
        k -= lowbit(k);
    }
    out
}

fn bk_flip_set(j: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let k = j + 1;
    let mut t = 1;
    while t < lowbit(k) {
        out.push(k - t - 1);
        t <<= 1;
    }
    out
}

fn bk_majoranas(n: usize) -> Vec<PauliString> {
    let mut out = Vec::with_capacity(2 * n);
    for j in 0..n {
        let update = bk_update_set(j, n);
        let parity = bk_parity_set(j);
        let flip = bk_flip_set(j);
        let remainder: Vec<usize> = parity.iter().copied().filter(|q| !flip.contains(q)).collect();

        let mut even = PauliString::identity(n);
        for &q in &update {
            even.set_letter(q, Letter::X);
        }
        for &q in &parity {
            even.set_letter(q, Letter::Z);
        }
        even.set_letter(j, Letter::X);
        out.push(even);

        let mut odd = PauliString::identity(n);
        for &q in &update {
            odd.set_letter(q, Letter::X);
        }
        for &q in &remainder {
            odd.set_letter(q, Letter::Z);
        }
        odd.set_letter(j, Letter::Y);
        out.push(odd);
    }
    out
}

// ---- JKMN via a balanced ternary tree ----
//
// Nodes 0..N-1 numbered breadth-first; node v's X/Y/Z edges point at children
// 3v+1 / 3v+2 / 3v+3.  Each vacant child slot defines a root-to-slot Pauli
// string; the 2N+1 slot strings pairwise anticommute.  Slots are ordered by
// their would-be child index (breadth-first), the last is discarded, and the
// rest become γ_0..γ_{2N-1}.

fn jkmn_majoranas(n: usize) -> Vec<PauliString> {
    // path_string[v] = product of edge letters from the root down to node v
    let mut path: Vec<PauliString> = Vec::with_capacity(n);
    path.push(PauliString::identity(n));
    for v in 1..n {
        let parent = (v - 1) / 3;
        let edge = match (v - 1) % 3 {
            0 => Letter::X,
            1 => Letter::Y,
            _ => Letter::Z,
        };
        let mut s = path[parent];
        debug_assert_eq!(s.letter(parent), Letter::I);
        s.set_letter(parent, edge);
        path.push(s);
    }

    let mut slots: Vec<(usize, PauliString)> = Vec::with_capacity(2 * n + 1);
    for v in 0..n {
        for e in 0..3 {
            let child = 3 * v + e + 1;
            if child >= n {
                let letter = match e {
                    0 => Letter::X,
                    1 => Letter::Y,
                    _ => Letter::Z,
                };
                let mut s = path[v];
                s.set_letter(v, letter);
                slots.push((child, s));
            }
        }
    }
    slots.sort_by_key(|(child, _)| *child);
    debug_assert_eq!(slots.len(), 2 * n + 1);
    slots.truncate(2 * n);
    slots.into_iter().map(|(_, s)| s).collect()
}

/// Image of a single ladder operator under `scheme`.
pub fn map_ladder(
    scheme: MappingScheme,
    index: usize,
    dagger: bool,
    n_qubits: usize,
) -> Result<PauliSum> {
    if index >= n_qubits {
        return Err(crate::error::Error::IndexOutOfRange { index, n: n_qubits });
    }
    let gammas = majorana_strings(scheme, n_qubits);
    let half = Complex64::new(0.5, 0.0);
    let sign = if dagger { -0.5 } else { 0.5 };
    let mut out = PauliSum::zero(n_qubits);
    out.add_term(gammas[2 * index], half);
    out.add_term(gammas[2 * index + 1], Complex64::new(0.0, sign));
    Ok(out)
}

/// Image of a whole FermionOp: sums of ordered products of ladder images.
pub fn map_fermion_op(op: &FermionOp, scheme: MappingScheme, n_qubits: usize) -> Result<PauliSum> {
    op.check_indices(n_qubits)?;
    let gammas = majorana_strings(scheme, n_qubits);
    let mut out = PauliSum::zero(n_qubits);
    for (coeff, ops) in &op.terms {
        let mut acc = PauliSum::identity(n_qubits).scaled(*coeff);
        for l in ops {
            let sign = if l.dagger { -0.5 } else { 0.5 };
            let mut img = PauliSum::zero(n_qubits);
            img.add_term(gammas[2 * l.index], Complex64::new(0.5, 0.0));
            img.add_term(gammas[2 * l.index + 1], Complex64::new(0.0, sign));
            acc = acc.multiply(&img)?;
        }
        out = out.add(&acc)?;
    }
    Ok(out)
}

/// Image of the number operator a_p† a_p.
pub fn number_operator(p: usize, scheme: MappingScheme, n_qubits: usize) -> Result<PauliSum> {
    let op = FermionOp::term(
        Complex64::new(1.0, 0.0),
        vec![super::Ladder::create(p), super::Ladder::annihilate(p)],
    );
    map_fermion_op(&op, scheme, n_qubits)
}
