//! Small dense GF(2) linear algebra over [`BitVec`] rows.

use crate::pauli::BitVec;

/// Row echelon form; returns the reduced rows and their pivot columns.
pub fn echelon(rows: &[BitVec], ncols: usize) -> (Vec<BitVec>, Vec<usize>) {
    let mut m: Vec<BitVec> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..m.len()).find(|&i| m[i].get(c)) else { continue };
        m.swap(r, p);
        let pivot = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && row.get(c) {
                row.xor_assign(&pivot);
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    m.truncate(r);
    (m, pivots)
}

pub fn rank(rows: &[BitVec], ncols: usize) -> usize {
    echelon(rows, ncols).1.len()
}

/// Reduces `v` against a fully reduced echelon basis; zero result means membership.
pub fn reduce(v: &BitVec, basis: &[BitVec], pivots: &[usize]) -> BitVec {
    let mut out = v.clone();
    for (row, &c) in basis.iter().zip(pivots) {
        if out.get(c) {
            out.xor_assign(row);
        }
    }
    out
}

pub fn in_rowspace(v: &BitVec, rows: &[BitVec], ncols: usize) -> bool {
    let (basis, pivots) = echelon(rows, ncols);
    reduce(v, &basis, &pivots).is_zero()
}

/// Basis of the right kernel {v : rows·v = 0}.
pub fn kernel(rows: &[BitVec], ncols: usize) -> Vec<BitVec> {
    let (basis, pivots) = echelon(rows, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = BitVec::zeros(ncols);
            v.set(f, true);
            for (row, &p) in basis.iter().zip(&pivots) {
                if row.get(f) {
                    v.set(p, true);
                }
            }
            v
        })
        .collect()
}
