//! Symbolic algebra of N-qubit Pauli strings and complex linear combinations.
//!
//! Strings use the symplectic encoding: two bitmasks (x, z) with bit q set
//! when qubit q carries an X / Z factor; Y is both bits.  Products then cost
//! O(N/word) with a closed-form power-of-i phase.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default magnitude below which coefficients are dropped after algebra.
pub const PRUNE_TOL: f64 = 1e-12;

pub const MAX_QUBITS: usize = 64;

/// One of I, X, Y, Z on a single qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Letter {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Letter {
    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }
}

/// A tensor product of single-qubit Paulis on `n_qubits` qubits (no phase).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        assert!(n_qubits >= 1 && n_qubits <= MAX_QUBITS);
        PauliString { n_qubits, x: 0, z: 0 }
    }

    pub fn from_masks(n_qubits: usize, x: u64, z: u64) -> Self {
        assert!(n_qubits >= 1 && n_qubits <= MAX_QUBITS);
        let keep = mask(n_qubits);
        PauliString { n_qubits, x: x & keep, z: z & keep }
    }

    /// Single non-identity letter at `qubit`.
    pub fn single(n_qubits: usize, qubit: usize, letter: Letter) -> Self {
        assert!(qubit < n_qubits);
        let bit = 1u64 << qubit;
        let (x, z) = match letter {
            Letter::I => (0, 0),
            Letter::X => (bit, 0),
            Letter::Y => (bit, bit),
            Letter::Z => (0, bit),
        };
        PauliString { n_qubits, x, z }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn letter(&self, qubit: usize) -> Letter {
        assert!(qubit < self.n_qubits);
        Letter::from_bits(self.x >> qubit & 1 == 1, self.z >> qubit & 1 == 1)
    }

    pub fn set_letter(&mut self, qubit: usize, letter: Letter) {
        assert!(qubit < self.n_qubits);
        let bit = 1u64 << qubit;
        self.x &= !bit;
        self.z &= !bit;
        match letter {
            Letter::I => {}
            Letter::X => self.x |= bit,
            Letter::Y => {
                self.x |= bit;
                self.z |= bit;
            }
            Letter::Z => self.z |= bit,
        }
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Qubits carrying a non-identity letter, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        let m = self.x | self.z;
        (0..self.n_qubits).filter(move |q| m >> q & 1 == 1)
    }

    /// True iff the two strings commute as matrices.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        anti % 2 == 0
    }

    /// Matrix product `a * b` as `phase * string` with phase in {1, i, -1, -i}.
    pub fn multiply(&self, other: &PauliString) -> Result<(Complex64, PauliString)> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::NQubitsMismatch(self.n_qubits, other.n_qubits));
        }
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        // Power of i: count Y letters before/after plus the ZX reorder sign.
        let e = (self.x & self.z).count_ones() as i32 + (other.x & other.z).count_ones() as i32
            - (x & z).count_ones() as i32
            + 2 * (self.z & other.x).count_ones() as i32;
        let phase = match e.rem_euclid(4) {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        Ok((phase, PauliString { n_qubits: self.n_qubits, x, z }))
    }

    /// Key realising lexicographic letter order (I<X<Y<Z) from qubit 0.
    fn sort_key(&self) -> u128 {
        let mut k = 0u128;
        for q in 0..self.n_qubits {
            let rank = ((self.x >> q & 1) | (self.z >> q & 1) << 1) as u128;
            // I=0, X=1, Z=2, Y=3 in raw bits; remap to I<X<Y<Z
            let rank = match rank {
                0 => 0,
                1 => 1,
                3 => 2,
                _ => 3,
            };
            k |= rank << (2 * (MAX_QUBITS - 1 - q));
        }
        k
    }
}

fn mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.n_qubits
            .cmp(&other.n_qubits)
            .then_with(|| self.sort_key().cmp(&other.sort_key()))
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n_qubits {
            write!(f, "{}", self.letter(q).to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses "XIYZ" with qubit 0 leftmost.
    fn from_str(s: &str) -> Result<Self> {
        let n = s.chars().count();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::Invalid(format!("bad string length {n}")));
        }
        let mut p = PauliString::identity(n);
        for (q, c) in s.chars().enumerate() {
            let letter = match c {
                'I' | 'i' => Letter::I,
                'X' | 'x' => Letter::X,
                'Y' | 'y' => Letter::Y,
                'Z' | 'z' => Letter::Z,
                _ => return Err(Error::Invalid(format!("bad Pauli letter '{c}'"))),
            };
            p.set_letter(q, letter);
        }
        Ok(p)
    }
}

/// A complex linear combination of Pauli strings, the workhorse operator type.
///
/// Terms live in a BTreeMap keyed by the canonical string order, so iteration
/// order (and hence every exported result) is deterministic.
#[derive(Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        assert!(n_qubits >= 1 && n_qubits <= MAX_QUBITS);
        PauliSum { n_qubits, terms: BTreeMap::new() }
    }

    pub fn identity(n_qubits: usize) -> Self {
        let mut s = Self::zero(n_qubits);
        s.terms.insert(PauliString::identity(n_qubits), Complex64::new(1.0, 0.0));
        s
    }

    pub fn from_string(s: PauliString, coeff: Complex64) -> Self {
        let mut out = Self::zero(s.n_qubits());
        out.add_term(s, coeff);
        out
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, Complex64)>,
    {
        let mut out = Self::zero(n_qubits);
        for (s, c) in terms {
            if s.n_qubits() != n_qubits {
                return Err(Error::NQubitsMismatch(s.n_qubits(), n_qubits));
            }
            out.add_term(s, c);
        }
        Ok(out)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, s: &PauliString) -> Complex64 {
        self.terms.get(s).copied().unwrap_or_default()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_weight(&self) -> usize {
        self.terms.keys().map(|s| s.weight()).max().unwrap_or(0)
    }

    /// Merge `coeff * s` into the sum (exact-zero results are removed).
    pub fn add_term(&mut self, s: PauliString, coeff: Complex64) {
        assert_eq!(s.n_qubits(), self.n_qubits);
        let e = self.terms.entry(s).or_insert(Complex64::new(0.0, 0.0));
        *e += coeff;
        if e.norm() == 0.0 {
            self.terms.remove(&s);
        }
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::NQubitsMismatch(self.n_qubits, other.n_qubits));
        }
        let mut out = self.clone();
        for (s, c) in other.terms() {
            out.add_term(*s, *c);
        }
        Ok(out.pruned(PRUNE_TOL))
    }

    pub fn sub(&self, other: &PauliSum) -> Result<PauliSum> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> PauliSum {
        let mut out = Self::zero(self.n_qubits);
        for (s, c) in self.terms() {
            out.add_term(*s, c * factor);
        }
        out.pruned(PRUNE_TOL)
    }

    pub fn multiply(&self, other: &PauliSum) -> Result<PauliSum> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::NQubitsMismatch(self.n_qubits, other.n_qubits));
        }
        let mut out = Self::zero(self.n_qubits);
        for (sa, ca) in self.terms() {
            for (sb, cb) in other.terms() {
                let (phase, s) = sa.multiply(sb)?;
                out.add_term(s, ca * cb * phase);
            }
        }
        Ok(out.pruned(PRUNE_TOL))
    }

    /// `AB - BA`, with the handy shortcut that commuting string pairs
    /// contribute nothing.
    pub fn commutator(&self, other: &PauliSum) -> Result<PauliSum> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::NQubitsMismatch(self.n_qubits, other.n_qubits));
        }
        let mut out = Self::zero(self.n_qubits);
        for (sa, ca) in self.terms() {
            for (sb, cb) in other.terms() {
                if sa.commutes_with(sb) {
                    continue;
                }
                // anticommuting strings: [A,B] = 2AB
                let (phase, s) = sa.multiply(sb)?;
                out.add_term(s, 2.0 * ca * cb * phase);
            }
        }
        Ok(out.pruned(PRUNE_TOL))
    }

    pub fn adjoint(&self) -> PauliSum {
        let mut out = Self::zero(self.n_qubits);
        for (s, c) in self.terms() {
            out.add_term(*s, c.conj());
        }
        out
    }

    pub fn pruned(mut self, tol: f64) -> PauliSum {
        assert!(tol >= 0.0);
        if tol > 0.0 {
            self.terms.retain(|_, c| c.norm() >= tol);
        }
        self
    }

    pub fn is_hermitian(&self) -> bool {
        self.terms.values().all(|c| c.im.abs() < PRUNE_TOL)
    }

    pub fn is_antihermitian(&self) -> bool {
        self.terms.values().all(|c| c.re.abs() < PRUNE_TOL)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (s, c)) in self.terms().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:+.12e}{:+.12e}i) * {}", c.re, c.im, s)?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliSum[{} qubits, {} terms]", self.n_qubits, self.terms.len())
    }
}
