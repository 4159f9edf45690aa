//! Integer mode lattices {k in Z^d : |k|_inf <= K} and periodic grids on [-pi, pi)^d.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use statrs::function::gamma::gamma;

/// Row-major box of modes, axis 0 slowest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ModeLattice {
    pub d: usize,
    pub k_max: usize,
}

impl ModeLattice {
    pub fn new(d: usize, k_max: usize) -> Self {
        assert!(d >= 1, "dimension must be >= 1");
        Self { d, k_max }
    }

    pub fn side(&self) -> usize {
        2 * self.k_max + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, k: &[i64]) -> Option<usize> {
        let kk = self.k_max as i64;
        let mut idx = 0usize;
        for &ki in k {
            if ki.abs() > kk {
                return None;
            }
            idx = idx * self.side() + (ki + kk) as usize;
        }
        Some(idx)
    }

    pub fn mode(&self, mut idx: usize, out: &mut [i64]) {
        let s = self.side();
        for i in (0..self.d).rev() {
            out[i] = (idx % s) as i64 - self.k_max as i64;
            idx /= s;
        }
    }

    /// Index of -k.
    pub fn mirror(&self, idx: usize) -> usize {
        self.len() - 1 - idx
    }

    pub fn modes(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.len()).map(move |i| {
            let mut k = vec![0; self.d];
            self.mode(i, &mut k);
            k
        })
    }
}

pub fn norm_sq(k: &[i64]) -> f64 {
    k.iter().map(|&v| (v * v) as f64).sum()
}

/// True for the half lattice whose first nonzero coordinate is positive.
pub fn is_positive_half(k: &[i64]) -> bool {
    k.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0)
}

/// Grid coordinate -pi + 2 pi j / n.
pub fn grid_coord(j: usize, n: usize) -> f64 {
    -PI + TAU * j as f64 / n as f64
}

/// Multi-index of flat grid position (row-major, axis 0 slowest).
pub fn grid_index(mut flat: usize, n: usize, d: usize, out: &mut [usize]) {
    for i in (0..d).rev() {
        out[i] = flat % n;
        flat /= n;
    }
}

pub fn grid_point(flat: usize, n: usize, d: usize) -> Vec<f64> {
    let mut idx = vec![0; d];
    grid_index(flat, n, d, &mut idx);
    idx.iter().map(|&j| grid_coord(j, n)).collect()
}

/// Flat index of the periodic lag x_a - x_b, per axis (i_a - i_b) mod n.
pub fn grid_lag_flat(a: usize, b: usize, n: usize, d: usize) -> usize {
    let mut ia = vec![0; d];
    let mut ib = vec![0; d];
    grid_index(a, n, d, &mut ia);
    grid_index(b, n, d, &mut ib);
    (0..d).fold(0, |acc, i| acc * n + (ia[i] + n - ib[i]) % n)
}

/// Coordinates 2 pi m / n of a lag index.
pub fn lag_point(flat: usize, n: usize, d: usize) -> Vec<f64> {
    let mut idx = vec![0; d];
    grid_index(flat, n, d, &mut idx);
    idx.iter().map(|&m| TAU * m as f64 / n as f64).collect()
}

/// Surface area of the unit sphere in R^d.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

/// Nonzero lattice points of Z^d grouped by |k|^2, inside the ball of radius `r`.
#[derive(Debug, Clone)]
pub struct Shells {
    pub d: usize,
    pub radius: f64,
    /// (|k|^2, multiplicity), ascending
    pub shells: Vec<(f64, f64)>,
    /// radius of the ball whose volume equals the number of lattice points counted
    /// (origin included); the continuum tail starts here
    pub tail_radius: f64,
}

impl Shells {
    pub fn new(d: usize, radius: f64) -> Self {
        let r = radius.floor() as i64;
        let r2 = radius * radius;
        let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
        let mut k = vec![-r; d];
        let mut total = 0u64;
        loop {
            let q: i64 = k.iter().map(|v| v * v).sum();
            if (q as f64) <= r2 {
                total += 1;
                if q > 0 {
                    *counts.entry(q).or_default() += 1;
                }
            }
            let mut i = d;
            loop {
                if i == 0 {
                    let shells = counts.into_iter().map(|(q, c)| (q as f64, c as f64)).collect();
                    let tail_radius = (total as f64 * d as f64 / sphere_area(d)).powf(1.0 / d as f64);
                    return Self { d, radius, shells, tail_radius };
                }
                i -= 1;
                if k[i] < r {
                    k[i] += 1;
                    break;
                }
                k[i] = -r;
            }
        }
    }

    /// Sum over nonzero |k| <= radius of g(|k|^2).
    pub fn sum<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.shells.iter().map(|&(q, m)| m * g(q)).sum()
    }
}
