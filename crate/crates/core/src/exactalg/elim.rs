//! Fraction-free elimination and the operations built on it.
//!
//! Every routine first clears denominators row by row (which leaves row
//! space, kernel and pivot structure unchanged), then runs Bareiss
//! elimination over the integers. Intermediate entries are minors of the
//! scaled input, so coefficient growth stays polynomial. Back substitution to
//! reduced row echelon form happens over the rationals once the pivot
//! structure is known.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{RMatrix, Rational};
use crate::error::{Error, Result};

/// Upper echelon form produced by fraction-free elimination.
#[derive(Debug, Clone)]
pub(crate) struct Echelon {
    pub rows: Vec<Vec<BigInt>>,
    pub pivots: Vec<usize>,
    /// Parity of the row swaps performed, for determinants.
    pub swaps_odd: bool,
}

/// Scales each row by the lcm of its denominators.
fn integer_rows(m: &RMatrix) -> Vec<Vec<BigInt>> {
    (0..m.rows())
        .map(|i| {
            let row = m.row(i);
            let lcm = row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            row.iter().map(|v| v.numer() * (&lcm / v.denom())).collect()
        })
        .collect()
}

pub(crate) fn bareiss(mut a: Vec<Vec<BigInt>>, cols: usize) -> Echelon {
    let nrows = a.len();
    let mut prev = BigInt::one();
    let mut pivots = Vec::new();
    let mut swaps_odd = false;
    let mut r = 0;
    for c in 0..cols {
        if r == nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        if p != r {
            a.swap(p, r);
            swaps_odd = !swaps_odd;
        }
        let (top, bottom) = a.split_at_mut(r + 1);
        let pivot_row = &top[r];
        let pivot = &pivot_row[c];
        for row in bottom.iter_mut() {
            let factor = row[c].clone();
            for j in c + 1..cols {
                let num = pivot * &row[j] - &factor * &pivot_row[j];
                let (quot, rem) = num.div_rem(&prev);
                debug_assert!(rem.is_zero(), "Bareiss division must be exact");
                row[j] = quot;
            }
            row[c] = BigInt::zero();
        }
        prev = pivot.clone();
        pivots.push(c);
        r += 1;
    }
    Echelon {
        rows: a,
        pivots,
        swaps_odd,
    }
}

/// Reduced row echelon form: `(R, pivot columns)`. Rows past the rank are zero.
pub(crate) fn rref(m: &RMatrix) -> (RMatrix, Vec<usize>) {
    let ech = bareiss(integer_rows(m), m.cols());
    let rank = ech.pivots.len();
    let mut out = RMatrix::zeros(m.rows(), m.cols());
    for (i, row) in ech.rows.iter().take(rank).enumerate() {
        let lead = &row[ech.pivots[i]];
        for (j, v) in row.iter().enumerate() {
            if !v.is_zero() {
                out[(i, j)] = Rational::from_big(BigRational::new(v.clone(), lead.clone()));
            }
        }
    }
    // Clear above each pivot, last pivot first.
    for i in (0..rank).rev() {
        let pc = ech.pivots[i];
        let pivot_row = out.row(i).to_vec();
        for k in 0..i {
            let f = out[(k, pc)].clone();
            if f.is_zero() {
                continue;
            }
            for (j, pv) in pivot_row.iter().enumerate().skip(pc) {
                if !pv.is_zero() {
                    let d = &f * pv;
                    out[(k, j)] -= &d;
                }
            }
        }
    }
    (out, ech.pivots)
}

/// Exact rank.
pub fn rank(m: &RMatrix) -> usize {
    bareiss(integer_rows(m), m.cols()).pivots.len()
}

/// Exact determinant of a square matrix.
pub fn determinant(m: &RMatrix) -> Result<Rational> {
    if !m.is_square() {
        return Err(Error::dims(
            "determinant",
            format!("{}x{} is not square", m.rows(), m.cols()),
        ));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(Rational::one());
    }
    let rows = integer_rows(m);
    // Undo the per-row denominator clearing afterwards.
    let mut scale = BigRational::one();
    for i in 0..n {
        let lcm = m.row(i).iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        scale /= BigRational::from_integer(lcm);
    }
    let ech = bareiss(rows, n);
    if ech.pivots.len() < n {
        return Ok(Rational::zero());
    }
    let mut det = BigRational::from_integer(ech.rows[n - 1][n - 1].clone()) * scale;
    if ech.swaps_odd {
        det = -det;
    }
    Ok(Rational::from_big(det))
}

/// Exact inverse of a square matrix.
pub fn inverse(m: &RMatrix) -> Result<RMatrix> {
    if !m.is_square() {
        return Err(Error::dims(
            "inverse",
            format!("{}x{} is not square", m.rows(), m.cols()),
        ));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(RMatrix::zeros(0, 0));
    }
    let (r, pivots) = rref(&m.hstack(&RMatrix::identity(n)));
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return Err(Error::SingularMatrix);
    }
    Ok(r.select_cols(&(n..2 * n).collect::<Vec<_>>()))
}

/// Canonical kernel basis read off the reduced row echelon form: one vector
/// per free column, with that free entry set to 1 and the other free
/// entries zero.
pub fn kernel_basis(m: &RMatrix) -> Vec<Vec<Rational>> {
    let (r, pivots) = rref(m);
    let n = m.cols();
    let mut is_pivot = vec![false; n];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    (0..n)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut v = vec![Rational::zero(); n];
            v[f] = Rational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -&r[(row, f)];
            }
            v
        })
        .collect()
}

/// Lexicographically first maximal set of linearly independent rows, found
/// by a greedy top-to-bottom scan. These are exactly the pivot columns of
/// the transpose.
pub fn select_independent_rows(m: &RMatrix) -> Vec<usize> {
    let t = m.transpose();
    bareiss(integer_rows(&t), t.cols()).pivots
}

/// Expresses every non-pivot row as a combination of the pivot rows.
///
/// Returns a `(rows - pivots) x pivots` matrix whose `k`-th row holds the
/// coefficients for the `k`-th non-pivot row in ascending index order.
pub fn row_dependencies(m: &RMatrix, pivot_rows: &[usize]) -> Result<RMatrix> {
    let r = pivot_rows.len();
    if pivot_rows.iter().any(|&p| p >= m.rows()) {
        return Err(Error::dims("row_dependencies", "pivot index out of range"));
    }
    let others: Vec<usize> = (0..m.rows()).filter(|i| !pivot_rows.contains(i)).collect();
    // Solve P^T g = row_k^T for all k at once: RREF of (P^T | O^T).
    let pt = m.select_rows(pivot_rows).transpose();
    let ot = m.select_rows(&others).transpose();
    let (red, pivots) = rref(&pt.hstack(&ot));
    if pivots.iter().filter(|&&p| p < r).count() < r {
        return Err(Error::DependentPivots);
    }
    if let Some(&bad) = pivots.iter().find(|&&p| p >= r) {
        return Err(Error::NotSpanning { row: others[bad - r] });
    }
    let mut gamma = RMatrix::zeros(others.len(), r);
    for k in 0..others.len() {
        for i in 0..r {
            gamma[(k, i)] = red[(i, r + k)].clone();
        }
    }
    Ok(gamma)
}

/// True when `v` lies in the row space of `m`.
pub fn in_row_space(m: &RMatrix, v: &[Rational]) -> bool {
    let mut ext = m.clone();
    if ext.rows() == 0 {
        ext = RMatrix::zeros(0, v.len());
    }
    ext.push_row(v.to_vec());
    rank(&ext) == rank(m)
}

/// Normalises the sign of an integer vector so its first nonzero entry is
/// positive; used to compare direction sets irrespective of sign.
pub fn sign_normalized(v: &[Rational]) -> Vec<Rational> {
    match v.iter().find(|x| !x.is_zero()) {
        Some(first) if first.as_big().is_negative() => v.iter().map(|x| -x).collect(),
        _ => v.to_vec(),
    }
}
