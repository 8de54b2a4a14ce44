//! Gaussian elimination over the residue field.

use crate::wittring::{FieldElement, ResidueField};

/// Row-major matrix over 𝔽_{p^d}.
pub type FieldMatrix = Vec<Vec<FieldElement>>;

/// Reduced row echelon form in place; returns the pivot columns.
fn rref(f: &ResidueField, m: &mut FieldMatrix) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, pr);
        let inv = f.inv(&m[r][c]).expect("nonzero pivot");
        for x in m[r].iter_mut() {
            *x = f.mul(x, &inv);
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let factor = m[i][c].clone();
                for j in 0..cols {
                    let t = f.mul(&factor, &m[r][j]);
                    m[i][j] = f.sub(&m[i][j], &t);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(f: &ResidueField, m: &FieldMatrix) -> usize {
    let mut work = m.clone();
    rref(f, &mut work).len()
}

/// Basis of `{x : M x = 0}` for an `rows × cols` matrix, as vectors of length `cols`.
pub fn kernel(f: &ResidueField, m: &FieldMatrix, cols: usize) -> Vec<Vec<FieldElement>> {
    let mut work = m.clone();
    let pivots = rref(f, &mut work);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![f.zero(); cols];
            v[fc] = f.one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = f.neg(&work[r][fc]);
            }
            v
        })
        .collect()
}

/// `M x` for a row-major matrix.
pub fn apply(f: &ResidueField, m: &FieldMatrix, x: &[FieldElement]) -> Vec<FieldElement> {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .fold(f.zero(), |acc, (a, b)| f.add(&acc, &f.mul(a, b)))
        })
        .collect()
}
