//! Molecular Hamiltonian assembly:
//!   H = Σ_pq h_pq a_q†a_p + ½ Σ_pqrs h_pqrs a_p†a_q†a_s a_r + E_core·I

use num_complex::Complex64;

use crate::error::Result;
use crate::pauli::PauliSum;

use super::mapping::{map_fermion_op, MappingScheme};
use super::{FermionOp, IntegralSet, Ladder};

const INTEGRAL_FLOOR: f64 = 1e-12;

pub fn build_hamiltonian(ints: &IntegralSet, scheme: MappingScheme) -> Result<PauliSum> {
    let n = ints.n_spin_orbitals;
    let mut op = FermionOp::new();
    for p in 0..n {
        for q in 0..n {
            let h = ints.h1(p, q);
            if h.abs() > INTEGRAL_FLOOR {
                op.push(
                    Complex64::new(h, 0.0),
                    vec![Ladder::create(q), Ladder::annihilate(p)],
                );
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let h = ints.h2(p, q, r, s);
                    if h.abs() > INTEGRAL_FLOOR {
                        op.push(
                            Complex64::new(0.5 * h, 0.0),
                            vec![
                                Ladder::create(p),
                                Ladder::create(q),
                                Ladder::annihilate(s),
                                Ladder::annihilate(r),
                            ],
                        );
                    }
                }
            }
        }
    }
    let mut h = map_fermion_op(&op, scheme, n)?;
    if ints.core_energy != 0.0 {
        h = h.add(&PauliSum::identity(n).scaled(Complex64::new(ints.core_energy, 0.0)))?;
    }
    Ok(h)
}

/// Slater-determinant energy of the aufbau reference, straight from the
/// integrals — the independent oracle for reference-state preparation.
pub fn hartree_fock_energy(ints: &IntegralSet, n_electrons: usize) -> f64 {
    let occ: Vec<usize> = (0..n_electrons).collect();
    let mut e = ints.core_energy;
    for &p in &occ {
        e += ints.h1(p, p);
    }
    for &p in &occ {
        for &q in &occ {
            e += 0.5 * (ints.h2(p, q, p, q) - ints.h2(p, q, q, p));
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_only_is_identity() {
        let mut ints = IntegralSet::empty(4, 2);
        ints.core_energy = -2.5;
        for scheme in MappingScheme::ALL {
            let h = build_hamiltonian(&ints, scheme).unwrap();
            assert_eq!(h.n_terms(), 1);
            assert_eq!(
                h.coefficient(&crate::pauli::PauliString::identity(4)),
                Complex64::new(-2.5, 0.0)
            );
        }
    }
}
