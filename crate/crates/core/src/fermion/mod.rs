//! Second-quantised operators: integral ingestion and fermion-to-qubit maps.

mod fcidump;
mod hamiltonian;
mod mapping;

pub use fcidump::parse_fcidump;
pub use hamiltonian::{build_hamiltonian, hartree_fock_energy};
pub use mapping::{map_fermion_op, map_ladder, number_operator, MappingScheme};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One- and two-electron integrals in spin-orbital form, Hartree units.
///
/// `two_body[[p,q,r,s]]` is the coefficient of a_p† a_q† a_s a_r in the
/// second-quantised Hamiltonian's two-body part (physicists' <pq|rs> with the
/// 1/2 factor applied later).
#[derive(Clone, Debug)]
pub struct IntegralSet {
    pub n_spin_orbitals: usize,
    pub n_electrons: usize,
    pub one_body: Vec<f64>,
    pub two_body: Vec<f64>,
    pub core_energy: f64,
}

impl IntegralSet {
    pub fn empty(n_spin_orbitals: usize, n_electrons: usize) -> Self {
        let n = n_spin_orbitals;
        IntegralSet {
            n_spin_orbitals: n,
            n_electrons,
            one_body: vec![0.0; n * n],
            two_body: vec![0.0; n * n * n * n],
            core_energy: 0.0,
        }
    }

    pub fn h1(&self, p: usize, q: usize) -> f64 {
        self.one_body[p * self.n_spin_orbitals + q]
    }

    pub fn h2(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_spin_orbitals;
        self.two_body[((p * n + q) * n + r) * n + s]
    }
}

/// A single creation or annihilation operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ladder {
    pub index: usize,
    pub dagger: bool,
}

impl Ladder {
    pub fn create(index: usize) -> Self {
        Ladder { index, dagger: true }
    }

    pub fn annihilate(index: usize) -> Self {
        Ladder { index, dagger: false }
    }
}

/// Sum of products of ladder operators; order inside a product is preserved.
#[derive(Clone, Debug)]
pub struct FermionOp {
    pub terms: Vec<(Complex64, Vec<Ladder>)>,
}

impl FermionOp {
    pub fn new() -> Self {
        FermionOp { terms: Vec::new() }
    }

    pub fn term(coeff: Complex64, ops: Vec<Ladder>) -> Self {
        FermionOp { terms: vec![(coeff, ops)] }
    }

    pub fn push(&mut self, coeff: Complex64, ops: Vec<Ladder>) {
        self.terms.push((coeff, ops));
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.iter().flat_map(|(_, ops)| ops.iter().map(|l| l.index)).max()
    }

    pub fn check_indices(&self, n_modes: usize) -> Result<()> {
        if let Some(m) = self.max_index() {
            if m >= n_modes {
                return Err(Error::IndexOutOfRange { index: m, n: n_modes });
            }
        }
        Ok(())
    }
}

impl Default for FermionOp {
    fn default() -> Self {
        Self::new()
    }
}

/// Lowest-index spin-orbitals occupied (aufbau on the ingested ordering).
pub fn hartree_fock_occupation(n_electrons: usize, n_spin_orbitals: usize) -> Vec<bool> {
    assert!(n_electrons <= n_spin_orbitals);
    (0..n_spin_orbitals).map(|p| p < n_electrons).collect()
}
