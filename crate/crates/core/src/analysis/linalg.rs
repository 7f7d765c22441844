//! Dense Gaussian elimination.

use super::negligible;
use crate::scalar::Scalar;

/// Rank of a dense matrix. Exact for rationals; for floats entries below the
/// operator tolerance count as zero and pivots are chosen by magnitude.
pub fn rank<S: Scalar>(mut m: Vec<Vec<S>>) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let pivot = if S::EXACT {
            (rank..rows).find(|&r| !negligible(&m[r][c]))
        } else {
            (rank..rows)
                .filter(|&r| !negligible(&m[r][c]))
                .max_by(|&x, &y| m[x][c].abs().partial_cmp(&m[y][c].abs()).expect("finite"))
        };
        let Some(p) = pivot else { continue };
        m.swap(rank, p);
        let inv = m[rank][c].recip();
        let (top, bottom) = m.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        for row in bottom {
            if row[c].is_zero() {
                continue;
            }
            let factor = row[c].mul_ref(&inv);
            for j in c..cols {
                let t = factor.mul_ref(&pivot_row[j]);
                row[j] -= &t;
            }
        }
        rank += 1;
    }
    rank
}

/// `dim ker(M)` for a square matrix.
pub fn nullity<S: Scalar>(m: Vec<Vec<S>>) -> usize {
    let n = m.first().map_or(0, Vec::len);
    n - rank(m)
}
