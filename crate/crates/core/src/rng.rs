//! Seeded randomness.
//!
//! Every random quantity in the crate is derived from one 64-bit seed through
//! a ChaCha20 stream so that other implementations can replay instances
//! exactly:
//!
//! * the 32-byte ChaCha20 key is the seed in little-endian order followed by
//!   24 zero bytes; stream 0, block counter starting at 0 (the `rand_chacha`
//!   `ChaCha20Rng::from_seed` layout);
//! * a uniform double is `(next_u64 >> 11) * 2^-53`;
//! * a standard normal is produced by Box-Muller from two uniforms `u1, u2`
//!   as `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)` (one normal per pair);
//! * a complex Gaussian of unit variance is `(x + i y) / sqrt(2)` with
//!   `x` drawn before `y`;
//! * an integer below `n` is `floor(uniform * n)`.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use num_complex::Complex64;

use crate::linalg::CMat;

#[derive(Clone, Debug)]
pub struct SeededRng {
    inner: ChaCha20Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        Self {
            inner: ChaCha20Rng::from_seed(key),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn complex_gaussian(&mut self) -> Complex64 {
        let x = self.normal();
        let y = self.normal();
        Complex64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    pub fn phase(&mut self) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * self.uniform())
    }

    /// Matrix with independent unit-variance complex Gaussian entries,
    /// filled in row-major order.
    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize) -> CMat {
        let data: Vec<Complex64> = (0..rows * cols).map(|_| self.complex_gaussian()).collect();
        CMat::from_row_slice(rows, cols, &data)
    }

    /// Unitary obtained from Gram-Schmidt on a Gaussian matrix (columns
    /// orthonormalised left to right).
    pub fn unitary(&mut self, n: usize) -> CMat {
        let mut m = self.gaussian_matrix(n, n);
        for j in 0..n {
            for k in 0..j {
                let proj = m.column(k).dotc(&m.column(j));
                let col_k = m.column(k).clone_owned();
                let mut col_j = m.column_mut(j);
                col_j -= col_k * proj;
            }
            let norm = m.column(j).norm();
            let mut col_j = m.column_mut(j);
            col_j /= Complex64::new(norm, 0.0);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, identity};

    #[test]
    fn same_seed_same_stream() {
        let mut a = SeededRng::new(42);
        let mut b = SeededRng::new(42);
        for _ in 0..16 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = SeededRng::new(43);
        assert_ne!(SeededRng::new(42).next_u64(), c.next_u64());
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut r = SeededRng::new(1);
        for _ in 0..1000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
            assert!(r.below(7) < 7);
        }
    }

    #[test]
    fn unitary_is_unitary() {
        let mut r = SeededRng::new(9);
        let u = r.unitary(3);
        assert!(frobenius(&(u.adjoint() * &u - identity(3))) < 1e-12);
    }
}
