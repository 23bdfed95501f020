//! Code constructions, syndromes and the ideal decoder.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gf2;
use crate::pauli::{BitVec, Letter, PauliOp};

/// Brute-force searches over 2^n patterns are used up to this size.
const EXHAUSTIVE_MAX_N: usize = 9;
/// Per-type lookup tables are enumerated up to this size.
const LOOKUP_MAX_N: usize = 20;

/// X- and Z-type check matrices of a CSS code.
#[derive(Clone, Debug, PartialEq)]
pub struct CssChecks {
    pub h_x: Vec<BitVec>,
    pub h_z: Vec<BitVec>,
}

#[derive(Clone, Debug)]
pub enum Decoder {
    /// Repetition decoding of row parities (Z part) and column parities (X part).
    BaconShor { size: usize },
    /// Shor's code: X errors by repetition within each row, Z errors by row parities.
    Shor { size: usize },
    /// Minimum-weight lookup, X and Z parts decoded independently.
    CssLookup { x_table: HashMap<BitVec, BitVec>, z_table: HashMap<BitVec, BitVec> },
}

#[derive(Clone, Debug)]
pub struct SubsystemCode {
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub stabilizer_generators: Vec<PauliOp>,
    pub gauge_generators: Vec<PauliOp>,
    pub logical_x: PauliOp,
    pub logical_z: PauliOp,
    pub geometry: Option<(usize, usize)>,
    pub css: CssChecks,
    pub decoder: Decoder,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Syndrome {
    pub bits: BitVec,
}

fn row_vec(n: usize, ones: impl IntoIterator<Item = usize>) -> BitVec {
    let mut v = BitVec::zeros(n);
    for i in ones {
        v.set(i, true);
    }
    v
}

fn pauli_from(bits: &BitVec, letter: Letter) -> PauliOp {
    let support: Vec<usize> = bits.iter_ones().collect();
    PauliOp::on_support(bits.len(), &support, letter)
}

/// Iterates all length-n patterns of each weight in increasing order, lexicographic within a weight.
fn for_each_by_weight(n: usize, max_weight: usize, mut f: impl FnMut(&BitVec) -> bool) {
    fn rec(
        n: usize,
        start: usize,
        left: usize,
        cur: &mut BitVec,
        f: &mut dyn FnMut(&BitVec) -> bool,
    ) -> bool {
        if left == 0 {
            return f(cur);
        }
        for i in start..=n - left {
            cur.set(i, true);
            let stop = rec(n, i + 1, left - 1, cur, f);
            cur.set(i, false);
            if stop {
                return true;
            }
        }
        false
    }
    let mut cur = BitVec::zeros(n);
    for w in 0..=max_weight.min(n) {
        if rec(n, 0, w, &mut cur, &mut f) {
            return;
        }
    }
}

fn check_syndrome(checks: &[BitVec], v: &BitVec) -> BitVec {
    BitVec::from_bools(&checks.iter().map(|c| c.dot(v)).collect::<Vec<_>>())
}

fn lookup_table(checks: &[BitVec], n: usize) -> HashMap<BitVec, BitVec> {
    let target = 1usize << gf2::rank(checks, n);
    let mut table = HashMap::new();
    for_each_by_weight(n, n, |v| {
        table.entry(check_syndrome(checks, v)).or_insert_with(|| v.clone());
        table.len() >= target
    });
    table
}

/// Minimum-weight vector in ker(commute_with) outside rowspace(modulo), optionally with odd overlap against `pair`.
fn find_logical(
    commute_with: &[BitVec],
    modulo: &[BitVec],
    pair: Option<&BitVec>,
    n: usize,
) -> Option<BitVec> {
    let ok = |v: &BitVec| {
        commute_with.iter().all(|c| !c.dot(v))
            && pair.is_none_or(|p| p.dot(v))
            && !gf2::in_rowspace(v, modulo, n)
    };
    if n <= EXHAUSTIVE_MAX_N {
        let mut found = None;
        for_each_by_weight(n, n, |v| {
            if !v.is_zero() && ok(v) {
                found = Some(v.clone());
                true
            } else {
                false
            }
        });
        return found;
    }
    let basis = gf2::kernel(commute_with, n);
    let mut candidates = basis.clone();
    for a in 0..basis.len() {
        for b in a + 1..basis.len() {
            let mut v = basis[a].clone();
            v.xor_assign(&basis[b]);
            candidates.push(v);
        }
    }
    candidates.into_iter().filter(|v| ok(v)).min_by_key(|v| v.count_ones())
}

/// CSS code from X-type checks `h_x` and Z-type checks `h_z`.
pub fn css_construct(h_x: &[Vec<u8>], h_z: &[Vec<u8>]) -> Result<SubsystemCode> {
    let n = h_x.iter().chain(h_z).map(|r| r.len()).max().unwrap_or(0);
    let to_rows = |m: &[Vec<u8>]| -> Result<Vec<BitVec>> {
        m.iter()
            .map(|r| {
                if r.len() != n {
                    return Err(Error::DimensionMismatch { left: r.len(), right: n });
                }
                Ok(BitVec::from_bools(&r.iter().map(|&b| b & 1 == 1).collect::<Vec<_>>()))
            })
            .collect()
    };
    let hx = to_rows(h_x)?;
    let hz = to_rows(h_z)?;
    build_css("css".into(), n, hx, hz, None)
}

fn build_css(
    name: String,
    n: usize,
    hx: Vec<BitVec>,
    hz: Vec<BitVec>,
    logicals: Option<(BitVec, BitVec)>,
) -> Result<SubsystemCode> {
    build_css_with(name, n, hx, hz, logicals, None)
}

fn build_css_with(
    name: String,
    n: usize,
    hx: Vec<BitVec>,
    hz: Vec<BitVec>,
    logicals: Option<(BitVec, BitVec)>,
    decoder: Option<Decoder>,
) -> Result<SubsystemCode> {
    if n == 0 {
        return Err(Error::InvalidCode("zero qubits".into()));
    }
    for (i, a) in hx.iter().enumerate() {
        for (j, b) in hz.iter().enumerate() {
            if a.dot(b) {
                return Err(Error::Duality { x_row: i, z_row: j });
            }
        }
    }
    let k = n - gf2::rank(&hx, n) - gf2::rank(&hz, n);
    if k != 1 {
        return Err(Error::LogicalCount(k));
    }
    let (lx, lz) = match logicals {
        Some(l) => l,
        None => {
            let lx = find_logical(&hz, &hx, None, n)
                .ok_or_else(|| Error::InvalidCode("no logical X found".into()))?;
            let lz = find_logical(&hx, &hz, Some(&lx), n)
                .ok_or_else(|| Error::InvalidCode("no logical Z found".into()))?;
            (lx, lz)
        }
    };
    let mut stabs: Vec<PauliOp> = hx.iter().map(|r| pauli_from(r, Letter::X)).collect();
    stabs.extend(hz.iter().map(|r| pauli_from(r, Letter::Z)));
    let decoder = if let Some(d) = decoder {
        d
    } else if n <= LOOKUP_MAX_N {
        Decoder::CssLookup { x_table: lookup_table(&hz, n), z_table: lookup_table(&hx, n) }
    } else {
        return Err(Error::Unsupported(format!("lookup decoder for n={n}")));
    };
    Ok(SubsystemCode {
        name,
        n,
        k,
        stabilizer_generators: stabs,
        gauge_generators: Vec::new(),
        logical_x: pauli_from(&lx, Letter::X),
        logical_z: pauli_from(&lz, Letter::Z),
        geometry: None,
        css: CssChecks { h_x: hx, h_z: hz },
        decoder,
    })
}

/// Parity-check matrix of the [7,4,3] Hamming code.
pub const HAMMING_7: [[u8; 7]; 3] =
    [[0, 0, 0, 1, 1, 1, 1], [0, 1, 1, 0, 0, 1, 1], [1, 0, 1, 0, 1, 0, 1]];

pub fn steane() -> SubsystemCode {
    let h: Vec<Vec<u8>> = HAMMING_7.iter().map(|r| r.to_vec()).collect();
    let mut c = css_construct(&h, &h).expect("Hamming code is self-orthogonal");
    c.name = "steane".into();
    c
}

/// Row-major qubit index of grid site (row, col).
pub fn grid(n: usize, row: usize, col: usize) -> usize {
    row * n + col
}

fn check_odd(n: usize) -> Result<()> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidCode(format!("grid size must be odd and at least 3, got {n}")));
    }
    Ok(())
}

fn row_pair_x(n: usize, j: usize) -> BitVec {
    row_vec(n * n, (0..n).flat_map(|c| [grid(n, j, c), grid(n, j + 1, c)]))
}

/// Shor's code on an n×n grid: X on adjacent row pairs, Z on horizontally adjacent qubits.
pub fn shor_code(n: usize) -> Result<SubsystemCode> {
    check_odd(n)?;
    let hx: Vec<BitVec> = (0..n - 1).map(|j| row_pair_x(n, j)).collect();
    let hz: Vec<BitVec> = (0..n)
        .flat_map(|i| (0..n - 1).map(move |j| row_vec(n * n, [grid(n, i, j), grid(n, i, j + 1)])))
        .collect();
    let lx = row_vec(n * n, (0..n).map(|c| grid(n, 0, c)));
    let lz = row_vec(n * n, (0..n).map(|r| grid(n, r, 0)));
    let mut c = build_css_with(format!("shor_{n}"), n * n, hx, hz, Some((lx, lz)), Some(Decoder::Shor { size: n }))?;
    c.geometry = Some((n, n));
    Ok(c)
}

/// The n×n Bacon-Shor subsystem code.
pub fn bacon_shor(n: usize) -> Result<SubsystemCode> {
    check_odd(n)?;
    let nq = n * n;
    let hx: Vec<BitVec> = (0..n - 1).map(|j| row_pair_x(n, j)).collect();
    let hz: Vec<BitVec> = (0..n - 1)
        .map(|j| row_vec(nq, (0..n).flat_map(|r| [grid(n, r, j), grid(n, r, j + 1)])))
        .collect();
    let mut gauge = Vec::new();
    for col in 0..n {
        for j in 0..n - 1 {
            gauge.push(PauliOp::on_support(nq, &[grid(n, j, col), grid(n, j + 1, col)], Letter::X));
        }
    }
    for row in 0..n {
        for j in 0..n - 1 {
            gauge.push(PauliOp::on_support(nq, &[grid(n, row, j), grid(n, row, j + 1)], Letter::Z));
        }
    }
    let mut stabs: Vec<PauliOp> = hx.iter().map(|r| pauli_from(r, Letter::X)).collect();
    stabs.extend(hz.iter().map(|r| pauli_from(r, Letter::Z)));
    let lx: Vec<usize> = (0..n).map(|c| grid(n, 0, c)).collect();
    let lz: Vec<usize> = (0..n).map(|r| grid(n, r, 0)).collect();
    Ok(SubsystemCode {
        name: format!("bacon_shor_{n}"),
        n: nq,
        k: 1,
        stabilizer_generators: stabs,
        gauge_generators: gauge,
        logical_x: PauliOp::on_support(nq, &lx, Letter::X),
        logical_z: PauliOp::on_support(nq, &lz, Letter::Z),
        geometry: Some((n, n)),
        css: CssChecks { h_x: hx, h_z: hz },
        decoder: Decoder::BaconShor { size: n },
    })
}

/// Same code with its decoder replaced by the generic minimum-weight lookup.
pub fn with_lookup_decoder(code: &SubsystemCode) -> SubsystemCode {
    let mut c = code.clone();
    c.decoder = Decoder::CssLookup {
        x_table: lookup_table(&code.css.h_z, code.n),
        z_table: lookup_table(&code.css.h_x, code.n),
    };
    c
}

pub fn syndrome(code: &SubsystemCode, error: &PauliOp) -> Result<Syndrome> {
    let bits = code
        .stabilizer_generators
        .iter()
        .map(|g| error.sympl(g))
        .collect::<Result<Vec<_>>>()?;
    Ok(Syndrome { bits: BitVec::from_bools(&bits) })
}

/// Minority side of a repetition-code pattern given adjacent differences.
///
/// `diffs[j]` is the parity difference between element j and j+1. Ties
/// (possible only for even lengths) keep the side containing element 0.
pub fn repetition_flips(diffs: &[bool]) -> Vec<bool> {
    let mut pattern = Vec::with_capacity(diffs.len() + 1);
    pattern.push(false);
    for &d in diffs {
        let last = *pattern.last().unwrap();
        pattern.push(last ^ d);
    }
    let ones = pattern.iter().filter(|&&b| b).count();
    if 2 * ones > pattern.len() {
        for b in &mut pattern {
            *b = !*b;
        }
    }
    pattern
}

/// Recovery operator the code's convention assigns to a syndrome.
pub fn recovery(code: &SubsystemCode, s: &Syndrome) -> PauliOp {
    let nx = code.css.h_x.len();
    let sx: Vec<bool> = (0..nx).map(|i| s.bits.get(i)).collect();
    let sz: Vec<bool> = (nx..s.bits.len()).map(|i| s.bits.get(i)).collect();
    let mut rec = PauliOp::identity(code.n);
    match &code.decoder {
        Decoder::BaconShor { size } => {
            let n = *size;
            for (row, flip) in repetition_flips(&sx).into_iter().enumerate() {
                if flip {
                    rec.set_letter(grid(n, row, 0), Letter::Z);
                }
            }
            for (col, flip) in repetition_flips(&sz).into_iter().enumerate() {
                if flip {
                    let q = grid(n, 0, col);
                    let l = rec.letter(q);
                    rec.set_letter(q, if l == Letter::Z { Letter::Y } else { Letter::X });
                }
            }
        }
        Decoder::Shor { size } => {
            let n = *size;
            for (row, flip) in repetition_flips(&sx).into_iter().enumerate() {
                if flip {
                    rec.set_letter(grid(n, row, 0), Letter::Z);
                }
            }
            for row in 0..n {
                let diffs = &sz[row * (n - 1)..(row + 1) * (n - 1)];
                for (col, flip) in repetition_flips(diffs).into_iter().enumerate() {
                    if flip {
                        let q = grid(n, row, col);
                        let l = rec.letter(q);
                        rec.set_letter(q, if l == Letter::Z { Letter::Y } else { Letter::X });
                    }
                }
            }
        }
        Decoder::CssLookup { x_table, z_table } => {
            let xs = x_table.get(&BitVec::from_bools(&sz)).cloned().unwrap_or_else(|| BitVec::zeros(code.n));
            let zs = z_table.get(&BitVec::from_bools(&sx)).cloned().unwrap_or_else(|| BitVec::zeros(code.n));
            rec = PauliOp::from_parts(xs, zs).expect("lengths agree");
        }
    }
    rec
}

/// Logical action of a syndrome-free operator, read off against the bare logicals.
pub fn logical_class(code: &SubsystemCode, op: &PauliOp) -> Letter {
    let x = op.sympl(&code.logical_z).expect("dimension checked");
    let z = op.sympl(&code.logical_x).expect("dimension checked");
    Letter::from_bits(x, z)
}

/// Ideal recovery followed by decoding; returns the residual logical Pauli.
pub fn ideal_decode(code: &SubsystemCode, error: &PauliOp) -> Result<Letter> {
    let s = syndrome(code, error)?;
    let mut residual = error.clone();
    residual.mul_assign_bits(&recovery(code, &s));
    Ok(logical_class(code, &residual))
}

/// Fast Bacon-Shor decode straight from the X and Z bit parts.
pub fn bacon_shor_decode_bits(n: usize, x: &[bool], z: &[bool]) -> (bool, bool) {
    let majority = |parities: Vec<bool>| 2 * parities.iter().filter(|&&b| b).count() > parities.len();
    let col_par = (0..n).map(|c| (0..n).fold(false, |a, r| a ^ x[grid(n, r, c)])).collect();
    let row_par = (0..n).map(|r| (0..n).fold(false, |a, c| a ^ z[grid(n, r, c)])).collect();
    (majority(col_par), majority(row_par))
}

/// Text export: counts followed by one Pauli per line under section headers.
pub fn export(code: &SubsystemCode) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# code {}", code.name);
    let _ = writeln!(s, "n {}", code.n);
    let _ = writeln!(s, "k {}", code.k);
    if let Some((r, c)) = code.geometry {
        let _ = writeln!(s, "grid {r}x{c}");
    }
    let section = |s: &mut String, title: &str, ops: &[PauliOp]| {
        let _ = writeln!(s, "[{title}]");
        for p in ops {
            let _ = writeln!(s, "{p}");
        }
    };
    section(&mut s, "stabilizers", &code.stabilizer_generators);
    section(&mut s, "gauge", &code.gauge_generators);
    section(&mut s, "logical_x", std::slice::from_ref(&code.logical_x));
    section(&mut s, "logical_z", std::slice::from_ref(&code.logical_z));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steane_has_six_generators() {
        let c = steane();
        assert_eq!(c.n, 7);
        assert_eq!(c.stabilizer_generators.len(), 6);
        assert_eq!(c.logical_x.weight(), 3);
        assert!(!c.logical_x.commutes(&c.logical_z).unwrap());
    }

    #[test]
    fn two_qubit_repetition() {
        let c = css_construct(&[vec![1, 1]], &[]).unwrap();
        assert_eq!(c.stabilizer_generators[0].to_string(), "+XX");
        assert_eq!(c.k, 1);
    }

    #[test]
    fn duality_violation() {
        let e = css_construct(&[vec![1, 1]], &[vec![1, 0]]).unwrap_err();
        assert!(matches!(e, Error::Duality { .. }));
    }

    #[test]
    fn zero_logical_qubits() {
        let e = css_construct(&[vec![1, 0], vec![0, 1]], &[]).unwrap_err();
        assert_eq!(e, Error::LogicalCount(0));
    }

    #[test]
    fn invalid_sizes() {
        assert!(bacon_shor(4).is_err());
        assert!(bacon_shor(1).is_err());
        assert!(shor_code(2).is_err());
    }

    #[test]
    fn repetition_minority() {
        assert_eq!(repetition_flips(&[true, false]), vec![true, false, false]);
        assert_eq!(repetition_flips(&[false, true]), vec![false, false, true]);
        assert_eq!(repetition_flips(&[true, true]), vec![false, true, false]);
    }

    #[test]
    fn export_has_sections() {
        let s = export(&bacon_shor(3).unwrap());
        assert!(s.contains("[stabilizers]\n+XXXXXXIII\n"));
        assert!(s.contains("[logical_z]\n+ZIIZIIZII\n"));
    }
}
