//! Scrambled Sobol sequence generator.
//!
//! Direction numbers come from the Joe–Kuo D6 tables (vendored for the
//! first 1024 dimensions; regenerate the asset to raise the limit).
//! Points are produced in Gray-code order starting at index 0, and
//! scrambling is a per-dimension random digital shift, which preserves the
//! net structure of the base sequence.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

const DIRECTION_TABLE: &str = include_str!("../../assets/sobol_directions.txt");
const BITS: usize = 32;

struct TableRow {
    poly: u32,
    m_init: Vec<u32>,
}

fn direction_table() -> &'static Vec<TableRow> {
    static TABLE: OnceLock<Vec<TableRow>> = OnceLock::new();
    TABLE.get_or_init(|| {
        DIRECTION_TABLE
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                let mut it = line.split_whitespace();
                let poly: u32 = it.next().expect("poly").parse().expect("poly int");
                let m_init: Vec<u32> = it.map(|v| v.parse().expect("m int")).collect();
                debug_assert_eq!(m_init.len(), (32 - poly.leading_zeros() - 1) as usize);
                TableRow { poly, m_init }
            })
            .collect()
    })
}

/// Largest supported dimension count.
pub fn max_dimension() -> usize {
    direction_table().len() + 1
}

/// Direction numbers v_1..v_32 for one dimension.
fn direction_numbers(row: &TableRow) -> [u32; BITS] {
    let s = row.m_init.len();
    let mut m = [0u32; BITS];
    m[..s].copy_from_slice(&row.m_init);
    for k in s..BITS {
        // m_k = m_{k-s} ^ 2^s m_{k-s} ^ sum_j 2^j a_j m_{k-j}
        let mut v = m[k - s] ^ (m[k - s] << s);
        for j in 1..s {
            let a_j = (row.poly >> (s - j)) & 1;
            if a_j == 1 {
                v ^= m[k - j] << j;
            }
        }
        m[k] = v;
    }
    let mut dirs = [0u32; BITS];
    for (k, dir) in dirs.iter_mut().enumerate() {
        *dir = m[k] << (BITS - 1 - k);
    }
    dirs
}

/// Incremental Sobol point generator over `[0, 1)^d`.
#[derive(Debug, Clone)]
pub struct SobolSequence {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    shift: Vec<u32>,
    index: u64,
}

impl SobolSequence {
    /// Unscrambled base sequence.
    pub fn new(dims: usize) -> Result<Self> {
        Self::with_shift(dims, vec![0; dims])
    }

    /// Digitally shifted sequence; the shift masks are drawn from a
    /// deterministic stream seeded by `seed`.
    pub fn scrambled(dims: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dims).map(|_| rng.random::<u32>()).collect();
        Self::with_shift(dims, shift)
    }

    fn with_shift(dims: usize, shift: Vec<u32>) -> Result<Self> {
        if dims == 0 {
            return Err(Error::invalid("sobol dimension must be positive"));
        }
        if dims > max_dimension() {
            return Err(Error::invalid(format!(
                "sobol dimension {dims} exceeds the direction-number table ({})",
                max_dimension()
            )));
        }
        let table = direction_table();
        let mut directions = Vec::with_capacity(dims);
        // Dimension 0 is the van der Corput sequence: all m_k = 1.
        let mut vdc = [0u32; BITS];
        for (k, v) in vdc.iter_mut().enumerate() {
            *v = 1u32 << (BITS - 1 - k);
        }
        directions.push(vdc);
        for row in table.iter().take(dims - 1) {
            directions.push(direction_numbers(row));
        }
        Ok(SobolSequence {
            directions,
            state: vec![0; dims],
            shift,
            index: 0,
        })
    }

    pub fn dims(&self) -> usize {
        self.state.len()
    }

    /// Writes the next point into `out` and advances the sequence.
    pub fn next_point<F: Scalar>(&mut self, out: &mut [F]) {
        debug_assert_eq!(out.len(), self.dims());
        let scale = cast::<F>((u32::MAX as f64 + 1.0).recip());
        for (j, o) in out.iter_mut().enumerate() {
            let bits = self.state[j] ^ self.shift[j];
            *o = cast::<F>(bits as f64) * scale;
        }
        // Gray-code update for the following point.
        let c = (self.index + 1).trailing_zeros() as usize;
        if c < BITS {
            for (j, s) in self.state.iter_mut().enumerate() {
                *s ^= self.directions[j][c];
            }
        }
        self.index += 1;
    }

    /// The next `count` points as a `count x d` matrix.
    pub fn take_matrix<F: Scalar>(&mut self, count: usize) -> DMatrix<F> {
        let d = self.dims();
        let mut out = DMatrix::zeros(count, d);
        let mut row = vec![F::zero(); d];
        for i in 0..count {
            self.next_point(&mut row);
            for j in 0..d {
                out[(i, j)] = row[j];
            }
        }
        out
    }
}

/// `count` scrambled Sobol points in `[0, 1)^d`, deterministic in `seed`.
pub fn sobol<F: Scalar>(count: usize, dims: usize, seed: u64) -> Result<DMatrix<F>> {
    if count == 0 {
        return Err(Error::invalid("sobol point count must be positive"));
    }
    let mut seq = SobolSequence::scrambled(dims, seed)?;
    Ok(seq.take_matrix(count))
}
