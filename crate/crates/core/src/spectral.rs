//! Transforms between mode coefficients on a `ModeLattice` and values on the
//! periodic grid x_j = -pi + 2 pi j / n, per axis.
//!
//! A field is u(x) = sum_k a_k e^{i k.x}; on the grid e^{i k x_j} = (-1)^k e^{2 pi i k j / n}.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::lattice::ModeLattice;

pub struct GridFft {
    pub n: usize,
    pub d: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    line: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Clone for GridFft {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            d: self.d,
            fwd: Arc::clone(&self.fwd),
            inv: Arc::clone(&self.inv),
            line: self.line.clone(),
            scratch: self.scratch.clone(),
        }
    }
}

impl std::fmt::Debug for GridFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GridFft {{ n: {}, d: {} }}", self.n, self.d)
    }
}

impl GridFft {
    pub fn new(n: usize, d: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Self {
            n,
            d,
            fwd,
            inv,
            line: vec![Complex64::default(); n],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn transform(&mut self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let total = self.len();
        assert_eq!(data.len(), total);
        let plan = if inverse { Arc::clone(&self.inv) } else { Arc::clone(&self.fwd) };
        if self.d == 1 {
            plan.process_with_scratch(data, &mut self.scratch);
            return;
        }
        for axis in 0..self.d {
            let stride = n.pow((self.d - 1 - axis) as u32);
            let block = stride * n;
            for base in (0..total).step_by(block) {
                for off in 0..stride {
                    let start = base + off;
                    for (j, v) in self.line.iter_mut().enumerate() {
                        *v = data[start + j * stride];
                    }
                    plan.process_with_scratch(&mut self.line, &mut self.scratch);
                    for (j, v) in self.line.iter().enumerate() {
                        data[start + j * stride] = *v;
                    }
                }
            }
        }
    }

    /// Unnormalized sum_k X_k e^{-2 pi i k j / n} along every axis.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// Unnormalized sum_k X_k e^{+2 pi i k j / n} along every axis.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    /// Scatter lattice coefficients into an n^d buffer with the (-1)^k phase of the
    /// shifted grid, then synthesize grid values.
    pub fn synthesize(&mut self, lattice: &ModeLattice, coeffs: &[Complex64], out: &mut [Complex64]) {
        assert!(self.n >= lattice.side(), "grid too small for lattice");
        out.iter_mut().for_each(|v| *v = Complex64::default());
        let mut k = vec![0i64; lattice.d];
        for (i, &c) in coeffs.iter().enumerate() {
            if c == Complex64::default() {
                continue;
            }
            lattice.mode(i, &mut k);
            out[self.flat_of_mode(&k)] += c * sign_of(&k);
        }
        self.inverse(out);
    }

    /// Project grid values onto the lattice: a_k = n^{-d} sum_j u_j e^{-i k x_j}.
    pub fn analyze(&mut self, lattice: &ModeLattice, values: &mut [Complex64], coeffs: &mut [Complex64]) {
        assert!(self.n >= lattice.side(), "grid too small for lattice");
        self.forward(values);
        let norm = 1.0 / self.len() as f64;
        let mut k = vec![0i64; lattice.d];
        for (i, c) in coeffs.iter_mut().enumerate() {
            lattice.mode(i, &mut k);
            *c = values[self.flat_of_mode(&k)] * (sign_of(&k) * norm);
        }
    }

    pub fn flat_of_mode(&self, k: &[i64]) -> usize {
        let n = self.n as i64;
        k.iter().fold(0usize, |acc, &ki| acc * self.n + ki.rem_euclid(n) as usize)
    }
}

fn sign_of(k: &[i64]) -> f64 {
    if k.iter().sum::<i64>().rem_euclid(2) == 0 { 1.0 } else { -1.0 }
}

/// Smallest 2^a 3^b 5^c >= n.
pub fn fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::grid_point;

    #[test]
    fn synthesize_matches_direct_sum() {
        let lat = ModeLattice::new(2, 3);
        let n = 9;
        let mut fft = GridFft::new(n, 2);
        let coeffs: Vec<Complex64> = (0..lat.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut out = vec![Complex64::default(); fft.len()];
        fft.synthesize(&lat, &coeffs, &mut out);
        for (flat, v) in out.iter().enumerate() {
            let x = grid_point(flat, n, 2);
            let direct: Complex64 = lat
                .modes()
                .zip(&coeffs)
                .map(|(k, c)| c * Complex64::from_polar(1.0, k[0] as f64 * x[0] + k[1] as f64 * x[1]))
                .sum();
            assert!((direct - v).norm() < 1e-12);
        }
        let mut back = vec![Complex64::default(); lat.len()];
        fft.analyze(&lat, &mut out, &mut back);
        for (a, b) in coeffs.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn fast_len_values() {
        assert_eq!(fast_len(97), 100);
        assert_eq!(fast_len(385), 400);
        assert_eq!(fast_len(1), 1);
    }
}
