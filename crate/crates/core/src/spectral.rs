//! Fast sine transform in three dimensions, the exact eigenbasis of the
//! Dirichlet 7-point Laplacian.
//!
//! A DST-I of length `n` is taken from a complex FFT of length `2(n+1)` of the
//! odd extension; two real lines are packed into one complex line.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Field, Grid3};
use crate::scalar::Real;

pub struct SineTransform3<T: Real> {
    n: usize,
    fft: Arc<dyn Fft<T>>,
    /// `4 sin^2(pi (k+1) / (2(n+1))) / h^2`, the 1D stencil eigenvalues.
    eig1: Vec<T>,
}

impl<T: Real> std::fmt::Debug for SineTransform3<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SineTransform3").field("n", &self.n).finish()
    }
}

impl<T: Real> SineTransform3<T> {
    pub fn new(grid: &Grid3<T>) -> Self {
        let n = grid.n();
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        let h2 = grid.h() * grid.h();
        let eig1 = (0..n)
            .map(|k| {
                let s = (T::PI() * T::from_usize_lossy(k + 1) / T::from_usize_lossy(2 * (n + 1))).sin();
                T::lit(4.0) * s * s / h2
            })
            .collect();
        Self { n, fft, eig1 }
    }

    pub fn eigenvalue(&self, i: usize, j: usize, k: usize) -> T {
        self.eig1[i] + self.eig1[j] + self.eig1[k]
    }

    /// Unnormalized DST-I along every axis, in place:
    /// `S_k = sum_j x_j sin(pi (j+1)(k+1)/(n+1))`.
    pub fn forward(&self, data: &mut [T]) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n);
        // (base, stride) for the n^2 lines along each axis
        self.transform_axis(data, 1, |a, b| (a * n + b) * n);
        self.transform_axis(data, n, |a, b| a * n * n + b);
        self.transform_axis(data, n * n, |a, b| a * n + b);
    }

    /// Inverse of [`forward`](Self::forward).
    pub fn inverse(&self, data: &mut [T]) {
        self.forward(data);
        let s = T::lit(2.0) / T::from_usize_lossy(self.n + 1);
        let s3 = s * s * s;
        data.iter_mut().for_each(|v| *v = *v * s3);
    }

    /// Solves `(-Delta_h + shift) x = rhs` with zero Dirichlet data.
    pub fn solve_shifted(&self, rhs: &Field<T>, shift: T) -> Field<T> {
        let mut data = rhs.values().to_vec();
        self.solve_shifted_in_place(&mut data, shift);
        Field::from_values_unchecked(*rhs.grid(), data)
    }

    pub(crate) fn solve_shifted_in_place(&self, data: &mut [T], shift: T) {
        let n = self.n;
        self.forward(data);
        for i in 0..n {
            for j in 0..n {
                let row = (i * n + j) * n;
                let eij = self.eig1[i] + self.eig1[j] + shift;
                for k in 0..n {
                    data[row + k] = data[row + k] / (eij + self.eig1[k]);
                }
            }
        }
        let s = T::lit(2.0) / T::from_usize_lossy(n + 1);
        let s3 = s * s * s;
        self.forward(data);
        data.iter_mut().for_each(|v| *v = *v * s3);
    }

    fn transform_axis(&self, data: &mut [T], stride: usize, base: impl Fn(usize, usize) -> usize) {
        let n = self.n;
        let len = 2 * (n + 1);
        let lines: Vec<usize> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| base(a, b)).collect();
        let pairs = lines.len().div_ceil(2);
        let zero = Complex::new(T::zero(), T::zero());
        let mut buf = vec![zero; pairs * len];
        for (p, chunk) in buf.chunks_exact_mut(len).enumerate() {
            let la = lines[2 * p];
            let lb = lines.get(2 * p + 1).copied();
            for j in 0..n {
                let a = data[la + j * stride];
                let b = lb.map_or(T::zero(), |l| data[l + j * stride]);
                chunk[j + 1] = Complex::new(a, b);
                chunk[len - 1 - j] = Complex::new(-a, -b);
            }
        }
        let mut scratch = vec![zero; self.fft.get_inplace_scratch_len()];
        self.fft.process_with_scratch(&mut buf, &mut scratch);
        let half = T::lit(0.5);
        for (p, chunk) in buf.chunks_exact(len).enumerate() {
            let la = lines[2 * p];
            let lb = lines.get(2 * p + 1).copied();
            for k in 0..n {
                let y = chunk[k + 1];
                data[la + k * stride] = -y.im * half;
                if let Some(l) = lb {
                    data[l + k * stride] = y.re * half;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::neg_laplacian;

    #[test]
    fn forward_matches_direct_sum() {
        let g = Grid3::<f64>::new(1.0, 5).unwrap();
        let t = SineTransform3::new(&g);
        let x: Vec<f64> = (0..g.len()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
        let mut y = x.clone();
        t.forward(&mut y);
        let n = g.n();
        let s = |a: usize, b: usize| (std::f64::consts::PI * ((a + 1) * (b + 1)) as f64 / (n + 1) as f64).sin();
        for idx in [0, 7, 62, 124] {
            let (p, q, r) = g.unravel(idx);
            let mut acc = 0.0;
            for j in 0..g.len() {
                let (a, b, c) = g.unravel(j);
                acc += x[j] * s(a, p) * s(b, q) * s(c, r);
            }
            assert!((acc - y[idx]).abs() < 1e-12, "{acc} vs {}", y[idx]);
        }
        t.inverse(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn shifted_solve_inverts_stencil() {
        let g = Grid3::<f64>::new(2.0, 8).unwrap();
        let t = SineTransform3::new(&g);
        let rhs = Field::from_fn(g, |x| (x[0] - 0.3).exp() * x[1].cos() + x[2]);
        let c = 1.7;
        let x = t.solve_shifted(&rhs, c);
        let back = &neg_laplacian(&x) + &x.scaled(c);
        for (a, b) in back.values().iter().zip(rhs.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
