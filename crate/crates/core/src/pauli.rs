//! Symplectic representation of n-qubit Pauli operators.
//!
//! An operator is stored as `i^phase * L_1 ⊗ ... ⊗ L_n` where each letter
//! `L_j` is `X^{x_j} Z^{z_j}` with the convention `Y = iXZ`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const WORD: usize = 64;

fn words_for(n: usize) -> usize {
    n.div_ceil(WORD)
}

/// Fixed-length packed bit vector.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec { len, words: vec![0; words_for(len)] }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Parity of the bitwise AND with `other`.
    pub fn dot(&self, other: &BitVec) -> bool {
        self.and_count(other) % 2 == 1
    }

    pub fn and_count(&self, other: &BitVec) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn or(&self, other: &BitVec) -> BitVec {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect();
        BitVec { len: self.len, words }
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Letter {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }
}

/// An n-qubit Pauli operator with phase `i^phase`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct PauliOp {
    n: usize,
    x: BitVec,
    z: BitVec,
    phase: u8,
}

impl PauliOp {
    pub fn identity(n: usize) -> Self {
        PauliOp { n, x: BitVec::zeros(n), z: BitVec::zeros(n), phase: 0 }
    }

    /// Builds an operator from its X and Z parts, phase 0 in letter form.
    pub fn from_parts(x: BitVec, z: BitVec) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::DimensionMismatch { left: x.len(), right: z.len() });
        }
        Ok(PauliOp { n: x.len(), x, z, phase: 0 })
    }

    /// Single letter on qubit `q`, identity elsewhere.
    pub fn single(n: usize, q: usize, letter: Letter) -> Self {
        let mut p = PauliOp::identity(n);
        p.set_letter(q, letter);
        p
    }

    /// The same letter on every qubit of `support`.
    pub fn on_support(n: usize, support: &[usize], letter: Letter) -> Self {
        let mut p = PauliOp::identity(n);
        for &q in support {
            p.set_letter(q, letter);
        }
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_bits(&self) -> &BitVec {
        &self.x
    }

    pub fn z_bits(&self) -> &BitVec {
        &self.z
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn with_phase(mut self, phase: u8) -> Self {
        self.phase = phase % 4;
        self
    }

    pub fn letter(&self, q: usize) -> Letter {
        Letter::from_bits(self.x.get(q), self.z.get(q))
    }

    pub fn set_letter(&mut self, q: usize, letter: Letter) {
        let (x, z) = letter.bits();
        self.x.set(q, x);
        self.z.set(q, z);
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero() && self.phase == 0
    }

    /// True when the bit parts vanish, ignoring phase.
    pub fn is_trivial(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    pub fn weight(&self) -> usize {
        self.x.or(&self.z).count_ones()
    }

    /// Symplectic form: 1 iff the operators anticommute.
    pub fn sympl(&self, other: &PauliOp) -> Result<bool> {
        self.check_dim(other)?;
        Ok(self.x.dot(&other.z) ^ self.z.dot(&other.x))
    }

    pub fn commutes(&self, other: &PauliOp) -> Result<bool> {
        Ok(!self.sympl(other)?)
    }

    /// Group product `self * other` with the phase tracked mod 4.
    pub fn multiply(&self, other: &PauliOp) -> Result<PauliOp> {
        self.check_dim(other)?;
        let mut x = self.x.clone();
        x.xor_assign(&other.x);
        let mut z = self.z.clone();
        z.xor_assign(&other.z);
        // L(a) L(b) = i^{a_x a_z + b_x b_z + 2 a_z b_x - c_x c_z} L(a+b)
        let e = self.x.and_count(&self.z) as i64 + other.x.and_count(&other.z) as i64
            + 2 * self.z.and_count(&other.x) as i64
            - x.and_count(&z) as i64;
        let phase = (self.phase as i64 + other.phase as i64 + e).rem_euclid(4) as u8;
        Ok(PauliOp { n: self.n, x, z, phase })
    }

    /// Product ignoring phase; the common case inside frame simulation.
    pub fn mul_assign_bits(&mut self, other: &PauliOp) {
        debug_assert_eq!(self.n, other.n);
        self.x.xor_assign(&other.x);
        self.z.xor_assign(&other.z);
    }

    pub fn letters(&self) -> String {
        (0..self.n).map(|q| self.letter(q).as_char()).collect()
    }

    fn check_dim(&self, other: &PauliOp) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { left: self.n, right: other.n });
        }
        Ok(())
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}{}", self.letters())
    }
}

impl FromStr for PauliOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (phase, rest) = if let Some(r) = s.strip_prefix("+i") {
            (1, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (0, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (2, r)
        } else {
            (0, s)
        };
        let mut p = PauliOp::identity(rest.chars().count());
        for (q, c) in rest.chars().enumerate() {
            let letter = Letter::from_char(c)
                .ok_or_else(|| Error::Parse(format!("invalid Pauli letter {c:?} in {s:?}")))?;
            p.set_letter(q, letter);
        }
        p.phase = phase;
        Ok(p)
    }
}
