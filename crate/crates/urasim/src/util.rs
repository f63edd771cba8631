//! Small shared helpers: a row-major complex matrix, complex Gaussian
//! sampling, and the splittable seeding scheme used by the harness.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Dense row-major complex matrix.
///
/// All receiver processing here is row-centric (rows are per-antenna channel
/// observations), so rows are kept contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Complex64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Squared l2 norm of row `r`.
    pub fn row_energy(&self, r: usize) -> f64 {
        self.row(r).iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self - other`, entrywise.
    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                let orow = other.row(k).to_vec();
                let out_row = out.row_mut(r);
                for (o, &b) in out_row.iter_mut().zip(&orow) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Unit-magnitude complex exponential `e^{j*theta}`.
#[inline]
pub fn cis(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

/// One circularly-symmetric complex Gaussian sample with per-entry variance
/// `var` (i.e. `var/2` per real dimension).
pub fn complex_gaussian<R: Rng>(rng: &mut R, var: f64) -> Complex64 {
    if var == 0.0 {
        return Complex64::ZERO;
    }
    let n = Normal::new(0.0, (var / 2.0).sqrt()).expect("valid std dev");
    Complex64::new(n.sample(rng), n.sample(rng))
}

/// Fill a slice with i.i.d. circularly-symmetric complex Gaussian samples.
pub fn fill_complex_gaussian<R: Rng>(rng: &mut R, out: &mut [Complex64], var: f64) {
    if var == 0.0 {
        out.fill(Complex64::ZERO);
        return;
    }
    let n = Normal::new(0.0, (var / 2.0).sqrt()).expect("valid std dev");
    for z in out {
        *z = Complex64::new(n.sample(rng), n.sample(rng));
    }
}

/// SplitMix64 step; the standard finalizer used for seed derivation.
#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Mix a word into a seed, one SplitMix64 round per call.
#[inline]
pub fn mix_seed(seed: u64, word: u64) -> u64 {
    let mut s = seed ^ word.wrapping_mul(0xD1B54A32D192ED03);
    splitmix64(&mut s)
}

/// Deterministic, platform-independent RNG from a 64-bit key.
///
/// The ChaCha key is expanded from the key with a SplitMix64 stream, so two
/// distinct keys give unrelated streams.
pub fn rng_from_key(key: u64) -> ChaCha8Rng {
    let mut state = key;
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    <ChaCha8Rng as rand::SeedableRng>::from_seed(seed)
}

/// Per-trial seed: `master` split by sweep point and trial index.
///
/// Pure function of its inputs, so any parallel schedule reproduces the same
/// per-trial streams.
pub fn trial_key(master: u64, point: u64, trial: u64) -> u64 {
    mix_seed(mix_seed(mix_seed(master, 0x7261_7369_6d21), point), trial)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cmat_indexing_and_rows() {
        let m = CMat::from_fn(3, 2, |r, c| Complex64::new(r as f64, c as f64));
        assert_eq!(m[(2, 1)], Complex64::new(2.0, 1.0));
        assert_eq!(m.row(1), &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 1.0)]);
        assert!((m.row_energy(2) - (4.0 + 5.0)).abs() < 1e-12);
    }

    #[test]
    fn matmul_against_hand_result() {
        let a = CMat::from_fn(2, 2, |r, c| Complex64::new((r * 2 + c) as f64, 0.0));
        let id = CMat::from_fn(2, 2, |r, c| {
            if r == c {
                Complex64::ONE
            } else {
                Complex64::ZERO
            }
        });
        assert_eq!(a.matmul(&id), a);
    }

    #[test]
    fn trial_keys_distinct_and_stable() {
        let k = trial_key(7, 0, 0);
        assert_eq!(k, trial_key(7, 0, 0));
        assert_ne!(k, trial_key(7, 0, 1));
        assert_ne!(k, trial_key(7, 1, 0));
        assert_ne!(k, trial_key(8, 0, 0));
    }

    #[test]
    fn complex_gaussian_variance() {
        let mut rng = rng_from_key(1);
        let n = 20_000;
        let var: f64 = (0..n).map(|_| complex_gaussian(&mut rng, 2.0).norm_sqr()).sum::<f64>() / n as f64;
        assert!((var - 2.0).abs() < 0.1, "measured {var}");
    }
}
