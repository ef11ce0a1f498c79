//! Dense symmetric-positive-definite helpers built on blocked kernels.
//!
//! The surrogate fit spends nearly all of its time in Cholesky
//! factorizations and triangular solves of matrices up to a few thousand
//! rows. nalgebra's built-in implementations are unblocked, so this module
//! provides right-looking blocked variants whose bulk work runs through
//! `gemm` (and therefore through matrixmultiply for `f32`/`f64`), with the
//! panel work done on small contiguous scratch buffers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

/// Block size for the panel decompositions. Diagonal blocks are factored
/// unblocked; everything else is rank-`NB` GEMM updates.
const NB: usize = 64;

/// Multiplicative jitter ladder: try the matrix as given, then escalate the
/// diagonal shift tenfold per failure and give up after the last rung.
pub const JITTER_LADDER: [f64; 6] = [0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

/// Lower-triangular Cholesky factor of an SPD matrix, possibly obtained
/// after adding diagonal jitter.
#[derive(Debug, Clone)]
pub struct CholeskyFactor<F: Scalar> {
    l: DMatrix<F>,
    jitter: f64,
}

impl<F: Scalar> CholeskyFactor<F> {
    /// Factors `a` (symmetric), escalating through [`JITTER_LADDER`] until a
    /// factorization succeeds.
    pub fn factor(a: &DMatrix<F>) -> Result<Self> {
        debug_assert_eq!(a.nrows(), a.ncols());
        for &jitter in &JITTER_LADDER {
            let mut work = a.clone();
            if jitter > 0.0 {
                let j = cast::<F>(jitter);
                for i in 0..work.nrows() {
                    work[(i, i)] += j;
                }
            }
            if cholesky_in_place(&mut work).is_ok() {
                zero_strict_upper(&mut work);
                return Ok(CholeskyFactor { l: work, jitter });
            }
        }
        Err(Error::CholeskyFailed {
            jitter: *JITTER_LADDER.last().unwrap(),
        })
    }

    /// The lower-triangular factor.
    pub fn l(&self) -> &DMatrix<F> {
        &self.l
    }

    /// Diagonal jitter that was added to make the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// log det(A) computed from the factor diagonal.
    pub fn log_det(&self) -> F {
        let mut acc = F::zero();
        for i in 0..self.l.nrows() {
            acc += self.l[(i, i)].ln();
        }
        acc + acc
    }

    /// Solves A x = b.
    pub fn solve_vec(&self, b: &DVector<F>) -> DVector<F> {
        let mut x = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
        self.solve_in_place(&mut x);
        DVector::from_column_slice(x.as_slice())
    }

    /// Solves A X = B in place.
    pub fn solve_in_place(&self, b: &mut DMatrix<F>) {
        solve_lower_in_place(&self.l, b);
        solve_lower_transpose_in_place(&self.l, b);
    }

    /// Solves L X = B in place (forward substitution only).
    pub fn solve_lower_in_place(&self, b: &mut DMatrix<F>) {
        solve_lower_in_place(&self.l, b);
    }

    /// A^{-1}, assembled as L^{-T} L^{-1}.
    pub fn inverse(&self) -> DMatrix<F> {
        let n = self.l.nrows();
        let mut inv = DMatrix::identity(n, n);
        self.solve_in_place(&mut inv);
        inv
    }
}

/// Blocked in-place lower Cholesky. On success the lower triangle of `a`
/// holds L; the strict upper triangle is left untouched. Fails with the
/// offending pivot index when the matrix is not positive definite.
pub fn cholesky_in_place<F: Scalar>(a: &mut DMatrix<F>) -> std::result::Result<(), usize> {
    let n = a.nrows();
    let mut panel: Vec<F> = Vec::new();
    let mut k = 0;
    while k < n {
        let kb = NB.min(n - k);
        let mr = n - k;

        // Copy the panel (rows k.., cols k..k+kb) into contiguous scratch.
        // `a` is column-major, so each panel column is one contiguous run.
        panel.clear();
        panel.resize(mr * kb, F::zero());
        {
            let data = a.as_slice();
            for j in 0..kb {
                let off = (k + j) * n + k;
                panel[j * mr..(j + 1) * mr].copy_from_slice(&data[off..off + mr]);
            }
        }

        // Left-looking factorization of the panel: after column j is done,
        // rows 0..kb hold L11 and rows kb.. hold L21 for that column.
        for j in 0..kb {
            for t in 0..j {
                let c = panel[t * mr + j];
                let (done, cur) = panel.split_at_mut(j * mr);
                let col_t = &done[t * mr + j..t * mr + mr];
                let col_j = &mut cur[j..mr];
                for (x, &y) in col_j.iter_mut().zip(col_t) {
                    *x -= c * y;
                }
            }
            let d = panel[j * mr + j];
            if d <= F::zero() || !d.is_finite() {
                return Err(k + j);
            }
            let d = d.sqrt();
            panel[j * mr + j] = d;
            for x in &mut panel[j * mr + j + 1..(j + 1) * mr] {
                *x /= d;
            }
        }

        // Copy the factored panel back.
        {
            let data = a.as_mut_slice();
            for j in 0..kb {
                let off = (k + j) * n + k;
                data[off..off + mr].copy_from_slice(&panel[j * mr..(j + 1) * mr]);
            }
        }

        // Trailing update: A22 -= L21 L21^T (full block; the upper triangle
        // written here is never read again).
        let m = n - k - kb;
        if m > 0 {
            let l21 = DMatrix::from_column_slice(m, kb, &{
                let mut buf = Vec::with_capacity(m * kb);
                for j in 0..kb {
                    buf.extend_from_slice(&panel[j * mr + kb..(j + 1) * mr]);
                }
                buf
            });
            let l21_t = l21.transpose();
            let mut trailing = a.view_mut((k + kb, k + kb), (m, m));
            trailing.gemm(-F::one(), &l21, &l21_t, F::one());
        }
        k += kb;
    }
    Ok(())
}

fn zero_strict_upper<F: Scalar>(a: &mut DMatrix<F>) {
    let n = a.nrows();
    for j in 1..n {
        for i in 0..j {
            a[(i, j)] = F::zero();
        }
    }
}

/// Copies the `kb`-square diagonal block of `l` starting at `start` into a
/// contiguous column-major buffer, optionally transposed.
fn diag_block<F: Scalar>(l: &DMatrix<F>, start: usize, kb: usize, transposed: bool) -> Vec<F> {
    let mut block = vec![F::zero(); kb * kb];
    for j in 0..kb {
        for i in j..kb {
            let v = l[(start + i, start + j)];
            if transposed {
                block[i * kb + j] = v;
            } else {
                block[j * kb + i] = v;
            }
        }
    }
    block
}

/// Solves L X = B in place for lower-triangular L.
pub fn solve_lower_in_place<F: Scalar>(l: &DMatrix<F>, b: &mut DMatrix<F>) {
    let n = l.nrows();
    debug_assert_eq!(b.nrows(), n);
    let m = b.ncols();
    let mut k = 0;
    while k < n {
        let kb = NB.min(n - k);
        let block = diag_block(l, k, kb, false);
        {
            let data = b.as_mut_slice();
            for c in 0..m {
                let col = &mut data[c * n + k..c * n + k + kb];
                for j in 0..kb {
                    let x = col[j] / block[j * kb + j];
                    col[j] = x;
                    let lcol = &block[j * kb + j + 1..(j + 1) * kb];
                    for (bi, &li) in col[j + 1..].iter_mut().zip(lcol) {
                        *bi -= x * li;
                    }
                }
            }
        }
        let rest = n - k - kb;
        if rest > 0 {
            let l_block = l.view((k + kb, k), (rest, kb));
            let (solved, mut remaining) = b.rows_range_pair_mut(k..k + kb, k + kb..n);
            remaining.gemm(-F::one(), &l_block, &solved, F::one());
        }
        k += kb;
    }
}

/// Solves L^T X = B in place for lower-triangular L.
pub fn solve_lower_transpose_in_place<F: Scalar>(l: &DMatrix<F>, b: &mut DMatrix<F>) {
    let n = l.nrows();
    debug_assert_eq!(b.nrows(), n);
    let m = b.ncols();
    let mut k = n;
    while k > 0 {
        let kb = NB.min(k);
        let start = k - kb;
        // Transposed copy, so columns of `block` are rows of L.
        let block = diag_block(l, start, kb, true);
        {
            let data = b.as_mut_slice();
            for c in 0..m {
                let col = &mut data[c * n + start..c * n + start + kb];
                for j in (0..kb).rev() {
                    let x = col[j] / block[j * kb + j];
                    col[j] = x;
                    let ucol = &block[j * kb..j * kb + j];
                    for (bi, &ui) in col[..j].iter_mut().zip(ucol) {
                        *bi -= x * ui;
                    }
                }
            }
        }
        if start > 0 {
            // Rows above the block: B_top -= (L[start.., ..start])^T X_block.
            let l_block_t = l.view((start, 0), (kb, start)).transpose();
            let (mut top, solved) = b.rows_range_pair_mut(0..start, start..k);
            top.gemm(-F::one(), &l_block_t, &solved, F::one());
        }
        k = start;
    }
}
