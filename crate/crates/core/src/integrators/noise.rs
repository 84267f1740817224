use rand::RngCore;

use crate::stats::rng::{box_muller, domain, rng_in_domain, StreamRng};

/// Brownian increments `dW = (dW¹, ..., dWⁿ)` of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrement {
    pub dw: Vec<f64>,
}

impl NoiseIncrement {
    pub fn zeros(n: usize) -> Self {
        Self { dw: vec![0.0; n] }
    }
}

/// Gaussian increments addressed by `(seed, path, fine step, coordinate)`.
///
/// Standard normal number `q = fine_step · n + coordinate` of a path is the
/// `q`-th Box-Muller output of the path's keystream, so every draw is fixed
/// by its address. A coarse step of `refine` fine steps is the sum of those
/// fine increments; runs at `dt` and `dt/refine` therefore share one noise
/// tree.
pub struct NoiseStream {
    rng: StreamRng,
    n: usize,
    refine: u32,
    sqrt_fine_dt: f64,
    spare: Option<f64>,
    fine_step: u64,
}

impl NoiseStream {
    /// `dt` is the coarse step; fine increments have variance `dt / refine`.
    pub fn new(seed: u64, path_index: u64, n: usize, dt: f64, refine: u32) -> Self {
        let refine = refine.max(1);
        Self {
            rng: rng_in_domain(seed, domain::NOISE, path_index),
            n,
            refine,
            sqrt_fine_dt: (dt / refine as f64).sqrt(),
            spare: None,
            fine_step: 0,
        }
    }

    #[inline]
    fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (a, b) = box_muller(self.rng.next_u64(), self.rng.next_u64());
        self.spare = Some(b);
        a
    }

    /// Position the stream at the start of coarse step `step`.
    pub fn seek(&mut self, step: u64) {
        let fine = step * self.refine as u64;
        let draw = fine * self.n as u64;
        // one Box-Muller pair = two u64 = four 32-bit words
        self.rng.set_word_pos((draw / 2) as u128 * 4);
        self.spare = None;
        if draw % 2 == 1 {
            let _ = self.gaussian();
        }
        self.fine_step = fine;
    }

    /// Increments of the next coarse step.
    pub fn fill(&mut self, dw: &mut [f64]) {
        debug_assert_eq!(dw.len(), self.n);
        dw.iter_mut().for_each(|d| *d = 0.0);
        for _ in 0..self.refine {
            for d in dw.iter_mut() {
                *d += self.gaussian();
            }
        }
        let s = self.sqrt_fine_dt;
        dw.iter_mut().for_each(|d| *d *= s);
        self.fine_step += self.refine as u64;
    }

    pub fn next_increment(&mut self) -> NoiseIncrement {
        let mut dw = vec![0.0; self.n];
        self.fill(&mut dw);
        NoiseIncrement { dw }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seek_matches_sequential() {
        for n in [1usize, 2, 3] {
            let mut seq = NoiseStream::new(5, 9, n, 0.01, 1);
            let incs: Vec<NoiseIncrement> = (0..20).map(|_| seq.next_increment()).collect();
            let mut ra = NoiseStream::new(5, 9, n, 0.01, 1);
            for k in [7u64, 3, 19, 0, 11] {
                ra.seek(k);
                assert_eq!(ra.next_increment(), incs[k as usize]);
            }
        }
    }

    #[test]
    fn coarse_is_sum_of_fine() {
        let n = 3;
        let dt = 4e-3;
        let mut fine = NoiseStream::new(1, 2, n, dt / 4.0, 1);
        let mut coarse = NoiseStream::new(1, 2, n, dt, 4);
        for _ in 0..50 {
            let mut acc = vec![0.0; n];
            for _ in 0..4 {
                let f = fine.next_increment();
                for (a, d) in acc.iter_mut().zip(&f.dw) {
                    *a += d;
                }
            }
            let c = coarse.next_increment();
            for (a, d) in acc.iter().zip(&c.dw) {
                assert!((a - d).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn increments_have_variance_dt() {
        let mut s = NoiseStream::new(3, 0, 2, 0.5, 2);
        let xs: Vec<f64> = (0..50_000).flat_map(|_| s.next_increment().dw).collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((var - 0.5).abs() < 0.02, "var {var}");
    }
}
