//! Exact Gaussian elimination over big rationals, for the small linear
//! systems behind absorption and stationary distributions.

use num::{BigRational, Zero};

use crate::error::{Error, Result};

/// Solves `A X = B` exactly for possibly many right-hand columns.
///
/// `a` is square row-major, `b` holds one row per equation. Fails on a
/// singular system.
pub(crate) fn solve(mut a: Vec<Vec<BigRational>>, mut b: Vec<Vec<BigRational>>) -> Result<Vec<Vec<BigRational>>> {
    let n = a.len();
    debug_assert!(a.iter().all(|row| row.len() == n));
    debug_assert_eq!(b.len(), n);
    let cols = b.first().map_or(0, Vec::len);

    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or(Error::SingularSystem)?;
        a.swap(col, pivot);
        b.swap(col, pivot);

        let inv = a[col][col].recip();
        for j in col..n {
            a[col][j] = &a[col][j] * &inv;
        }
        for j in 0..cols {
            b[col][j] = &b[col][j] * &inv;
        }

        for row in 0..n {
            if row == col || a[row][col].is_zero() {
                continue;
            }
            let factor = std::mem::replace(&mut a[row][col], BigRational::zero());
            for j in (col + 1)..n {
                let delta = &factor * &a[col][j];
                a[row][j] = &a[row][j] - delta;
            }
            for j in 0..cols {
                let delta = &factor * &b[col][j];
                b[row][j] = &b[row][j] - delta;
            }
        }
    }
    Ok(b)
}

/// Solves a possibly overdetermined system `A x = b` (rows >= columns),
/// returning `None` when the solution is not unique or the system is
/// inconsistent.
pub(crate) fn solve_unique(
    mut a: Vec<Vec<BigRational>>,
    mut b: Vec<BigRational>,
) -> Result<Option<Vec<BigRational>>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    debug_assert_eq!(b.len(), rows);
    if rows < cols {
        return Ok(None);
    }

    let mut pivot_row = 0usize;
    for col in 0..cols {
        let Some(found) = (pivot_row..rows).find(|&r| !a[r][col].is_zero()) else {
            return Ok(None); // rank deficient
        };
        a.swap(pivot_row, found);
        b.swap(pivot_row, found);

        let inv = a[pivot_row][col].recip();
        for j in col..cols {
            a[pivot_row][j] = &a[pivot_row][j] * &inv;
        }
        b[pivot_row] = &b[pivot_row] * &inv;

        for r in 0..rows {
            if r == pivot_row || a[r][col].is_zero() {
                continue;
            }
            let factor = std::mem::replace(&mut a[r][col], BigRational::zero());
            for j in (col + 1)..cols {
                let delta = &factor * &a[pivot_row][j];
                a[r][j] = &a[r][j] - delta;
            }
            let delta = &factor * &b[pivot_row];
            b[r] = &b[r] - delta;
        }
        pivot_row += 1;
    }

    // Leftover rows must have reduced to 0 = 0.
    for r in pivot_row..rows {
        if !b[r].is_zero() {
            return Ok(None);
        }
    }
    Ok(Some(b.into_iter().take(cols).collect()))
}
