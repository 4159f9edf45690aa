//! The covariance f_{alpha,rho} on the torus: Fourier weights, three evaluation
//! routes and the positivity threshold in rho.
//!
//! f(x) = (2 pi)^{-d/2} sum_k theta_k e^{i k.x},
//! theta_0 = rho (2 pi)^{-d/2}, theta_k = |k|^{-2 alpha} (2 pi)^{-d/2}.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{domain, Error, Result};
use crate::heat_kernel::{norm, theta_eps_d, wrap, KernelConfig, TorusPoint};
use crate::lattice::{grid_point, norm_sq, ModeLattice};
use crate::quadrature::{integrate, QuadOptions};
use crate::spectral::GridFft;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub d: usize,
    pub alpha: f64,
    pub rho: f64,
    pub lambda: f64,
}

impl NoiseSpec {
    pub fn new(d: usize, alpha: f64, rho: f64, lambda: f64) -> Result<Self> {
        let s = Self { d, alpha, rho, lambda };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_noise()?;
        if !(self.lambda != 0.0 && self.lambda.is_finite()) {
            return domain(format!("lambda must be finite and nonzero, got {}", self.lambda));
        }
        Ok(())
    }

    /// Checks d, alpha and rho only; lambda = 0 is allowed (deterministic heat flow).
    pub fn validate_noise(&self) -> Result<()> {
        if self.d == 0 {
            return domain("dimension d must be >= 1");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return domain(format!("alpha must be > 0, got {}", self.alpha));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return domain(format!("rho must be >= 0, got {}", self.rho));
        }
        if !self.lambda.is_finite() {
            return domain("lambda must be finite");
        }
        Ok(())
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn dalang(&self) -> bool {
        dalang_check(self)
    }

    pub fn require_dalang(&self) -> Result<()> {
        if self.dalang() {
            Ok(())
        } else {
            Err(Error::Dalang { lhs: 2.0 * (self.alpha + 1.0), d: self.d })
        }
    }

    /// (2 pi)^{-d}
    pub fn flat(&self) -> f64 {
        TAU.powi(-(self.d as i32))
    }
}

pub fn dalang_check(spec: &NoiseSpec) -> bool {
    2.0 * (spec.alpha + 1.0) > spec.d as f64
}

pub fn fourier_weight(spec: &NoiseSpec, k: &[i64]) -> f64 {
    weight_of_norm_sq(spec, norm_sq(k))
}

pub(crate) fn weight_of_norm_sq(spec: &NoiseSpec, q: f64) -> f64 {
    let c = TAU.powf(-(spec.d as f64) / 2.0);
    if q == 0.0 { spec.rho * c } else { q.powf(-spec.alpha) * c }
}

/// theta_k on the box |k|_inf <= K.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralWeights {
    pub lattice: ModeLattice,
    pub weights: Vec<f64>,
}

impl SpectralWeights {
    pub fn new(spec: &NoiseSpec, k_max: usize) -> Self {
        let lattice = ModeLattice::new(spec.d, k_max);
        let weights = lattice.modes().map(|k| fourier_weight(spec, &k)).collect();
        Self { lattice, weights }
    }

    /// Only the k = 0 weight kept: spatially constant noise.
    pub fn constant_only(spec: &NoiseSpec, k_max: usize) -> Self {
        let mut w = Self::new(spec, k_max);
        let zero = w.lattice.index(&vec![0; spec.d]).expect("origin in lattice");
        for (i, v) in w.weights.iter_mut().enumerate() {
            if i != zero {
                *v = 0.0;
            }
        }
        w
    }

    pub fn k_max(&self) -> usize {
        self.lattice.k_max
    }

    pub fn theta(&self, k: &[i64]) -> Option<f64> {
        self.lattice.index(k).map(|i| self.weights[i])
    }

    /// Truncated covariance (2 pi)^{-d/2} sum theta_k e^{ik.x} on the n^d grid.
    pub fn covariance_grid(&self, n: usize) -> Result<Vec<f64>> {
        if n < self.lattice.side() {
            return Err(Error::Aliasing { grid_n: n, mode_k: self.k_max() });
        }
        let d = self.lattice.d;
        let c = TAU.powf(-(d as f64) / 2.0);
        let coeffs: Vec<Complex64> = self.weights.iter().map(|w| Complex64::new(w * c, 0.0)).collect();
        let mut fft = GridFft::new(n, d);
        let mut out = vec![Complex64::default(); fft.len()];
        fft.synthesize(&self.lattice, &coeffs, &mut out);
        Ok(out.iter().map(|v| v.re).collect())
    }

    /// Truncated covariance at one point.
    pub fn covariance_at(&self, x: &[f64]) -> f64 {
        let c = TAU.powf(-(self.lattice.d as f64) / 2.0);
        let mut k = vec![0i64; self.lattice.d];
        let mut s = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            self.lattice.mode(i, &mut k);
            let ph: f64 = k.iter().zip(x).map(|(&a, b)| a as f64 * b).sum();
            s += w * ph.cos();
        }
        c * s
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
    /// true when the bound is rigorous (absolutely convergent series)
    pub rigorous: bool,
}

/// Truncated Fourier series at x with a bound on the neglected modes.
pub fn covariance_eval(spec: &NoiseSpec, x: &TorusPoint, k_max: usize) -> Result<SeriesValue> {
    spec.validate()?;
    if x.dim() != spec.d {
        return domain(format!("point dimension {} != d = {}", x.dim(), spec.d));
    }
    let d = spec.d;
    let is_origin = x.coords().iter().all(|&v| v == 0.0);
    let abs_conv = 2.0 * spec.alpha > d as f64;
    if is_origin && !abs_conv {
        return Err(Error::Singularity(format!(
            "f diverges at x = 0 when alpha = {} <= d/2 = {}",
            spec.alpha,
            d as f64 / 2.0
        )));
    }
    let value = SpectralWeights::new(spec, k_max).covariance_at(x.coords());
    let kk = k_max as f64;
    let flat = spec.flat();
    let (tail_bound, rigorous) = if abs_conv {
        // sum_{|k|_inf > K} |k|^{-2a} <= sum_{m > K} 2d (2m+1)^{d-1} m^{-2a}
        //                            <= 2d 3^{d-1} int_K^inf m^{d-1-2a} dm
        let kk = kk.max(1.0);
        let b = 2.0 * d as f64 * 3f64.powi(d as i32 - 1) * kk.powf(d as f64 - 2.0 * spec.alpha)
            / (2.0 * spec.alpha - d as f64);
        (flat * b, true)
    } else {
        // Abel summation against bounded Dirichlet partial sums
        let s = x.coords().iter().map(|&v| (v / 2.0).sin().abs()).fold(0.0, f64::max);
        let b = 2.0 * (2.0 * kk + 1.0).powi(d as i32 - 1) * (kk + 1.0).powf(-2.0 * spec.alpha) / s;
        (flat * b, d == 1)
    };
    Ok(SeriesValue { value, tail_bound, rigorous })
}

/// Largest cutoff the accelerated spectral route will use, per dimension.
fn spectral_cap(d: usize) -> usize {
    match d {
        1 => 20_000_000,
        2 => 4_000,
        3 => 250,
        _ => 60,
    }
}

/// f at x from Gaussian-damped lattice sums S(eps) = f * G(2 eps), extrapolated
/// to eps = 0 by Neville's scheme over eps_j = eps_0 / 2^j.
pub fn covariance_spectral(spec: &NoiseSpec, x: &TorusPoint) -> Result<f64> {
    spec.validate()?;
    let d = spec.d;
    if x.dim() != d {
        return domain(format!("point dimension {} != d = {}", x.dim(), d));
    }
    let r = norm(x.coords());
    if r == 0.0 {
        return Err(Error::Singularity(
            "the damped spectral route needs x != 0; use the time-integral route".into(),
        ));
    }
    const LEVELS: usize = 5;
    let eps0 = (r * r / 100.0).min(1e-2);
    let eps: Vec<f64> = (0..LEVELS).map(|j| eps0 / 2f64.powi(j as i32)).collect();
    let q_max = 40.0 / eps[LEVELS - 1];
    let k_max = q_max.sqrt().ceil() as usize;
    if k_max > spectral_cap(d) {
        return Err(Error::Numeric(format!(
            "x = {:?} is too close to the singularity for the spectral route (needs K = {k_max})",
            x.coords()
        )));
    }
    let sums = damped_sums(spec, x.coords(), k_max, q_max, &eps);
    Ok(neville_at_zero(&eps, &sums))
}

/// sum over |k|^2 <= q_max of theta_k e^{-eps |k|^2} cos(k.x), times (2 pi)^{-d/2}, per eps.
///
/// `eps` must halve from one level to the next: the damping factors are then
/// obtained from the smallest level by repeated squaring.
fn damped_sums(spec: &NoiseSpec, x: &[f64], k_max: usize, q_max: f64, eps: &[f64]) -> Vec<f64> {
    let d = spec.d;
    let kk = k_max as i64;
    let side = 2 * k_max + 1;
    let q_cap = q_max.floor() as u64;
    let levels = eps.len();
    let e_last = eps[levels - 1];
    let add = |acc: &mut [f64], q: u64, w: f64| {
        let mut f = (-e_last * q as f64).exp();
        for a in acc.iter_mut().rev() {
            *a += w * f;
            f *= f;
        }
    };
    let weight = |q: u64| if q == 0 { spec.rho } else { (q as f64).powf(-spec.alpha) };
    // phases e^{i k_i x_i}
    let phase: Vec<Vec<Complex64>> = x
        .iter()
        .map(|&xi| (-kk..=kk).map(|k| Complex64::from_polar(1.0, k as f64 * xi)).collect())
        .collect();

    let c = TAU.powf(-(d as f64));
    if d == 1 {
        let mut acc = vec![0.0; levels];
        for k in 0..=k_max {
            let q = (k * k) as u64;
            if q > q_cap {
                break;
            }
            let w = weight(q) * if k == 0 { 1.0 } else { 2.0 } * phase[0][k + k_max].re;
            add(&mut acc, q, w);
        }
        return acc.into_iter().map(|a| a * c).collect();
    }

    // split over the slowest axis for parallelism; the remaining axes run an odometer
    let partial: Vec<Vec<f64>> = (0..side)
        .into_par_iter()
        .map(|i0| {
            let k0 = i0 as i64 - kk;
            let mut acc = vec![0.0; levels];
            let q0 = (k0 * k0) as u64;
            if q0 > q_cap {
                return acc;
            }
            let mut idx = vec![0usize; d - 1];
            loop {
                let mut q = q0;
                let mut ph = phase[0][i0];
                for (a, &j) in idx.iter().enumerate() {
                    let kj = j as i64 - kk;
                    q += (kj * kj) as u64;
                    ph *= phase[a + 1][j];
                }
                if q <= q_cap {
                    add(&mut acc, q, weight(q) * ph.re);
                }
                let mut a = d - 1;
                loop {
                    if a == 0 {
                        return acc;
                    }
                    a -= 1;
                    idx[a] += 1;
                    if idx[a] < side {
                        break;
                    }
                    idx[a] = 0;
                }
            }
        })
        .collect();
    let mut acc = vec![0.0; levels];
    for p in partial {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    acc.into_iter().map(|a| a * c).collect()
}

/// Polynomial extrapolation of (x_i, y_i) to x = 0.
pub(crate) fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i]);
        }
    }
    p[0]
}

/// Quadrature plan for the time-integral route.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadPlan {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// split point between the short- and long-time pieces
    pub u_split: f64,
    /// truncation of the long-time piece; the remainder is bounded separately
    pub u_max: f64,
    pub max_intervals: usize,
}

impl Default for QuadPlan {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-11,
            u_split: 1.0,
            u_max: 90.0,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntegralValue {
    pub value: f64,
    pub error_estimate: f64,
    pub tail_bound: f64,
}

/// G_d(u, x) - (2 pi)^{-d} without cancellation at large u.
fn kernel_minus_flat(cfg: &KernelConfig, u: f64, x: &[f64]) -> f64 {
    let c = 1.0 / TAU;
    if u <= cfg.t_switch {
        return cfg.g(u, x) - c.powi(x.len() as i32);
    }
    let mut a = 0.0; // prod_{i<=k}(c + delta_i) - c^k
    let mut ck = 1.0;
    for &xi in x {
        let mut s = 0.0;
        for n in 1..=64 {
            let n = n as f64;
            let env = (-n * n * u / 2.0).exp();
            s += env * (n * xi).cos();
            if env <= 1e-17 * s.abs().max(1e-300) || env < 1e-300 {
                break;
            }
        }
        let delta = s / PI;
        a = a * (c + delta) + ck * delta;
        ck *= c;
    }
    a
}

/// f(x) = rho (2 pi)^{-d} + 2^{-alpha} / Gamma(alpha) int_0^inf u^{alpha-1} (G(u,x) - (2 pi)^{-d}) du.
pub fn covariance_eval_integral(spec: &NoiseSpec, x: &TorusPoint, plan: &QuadPlan) -> Result<IntegralValue> {
    spec.validate()?;
    let d = spec.d;
    if x.dim() != d {
        return domain(format!("point dimension {} != d = {}", x.dim(), d));
    }
    let xs = x.coords();
    let r = norm(xs);
    if r == 0.0 && spec.alpha <= d as f64 / 2.0 {
        return Err(Error::Singularity(format!(
            "f diverges at x = 0 when alpha = {} <= d/2",
            spec.alpha
        )));
    }
    let cfg = KernelConfig::default();
    let a = spec.alpha;
    let opts = QuadOptions {
        abs_tol: plan.abs_tol,
        rel_tol: plan.rel_tol,
        max_intervals: plan.max_intervals,
    };

    // short times: u = tau^{1/alpha} absorbs u^{alpha-1}
    let tau_end = plan.u_split.powf(a);
    let short = |tau: f64| kernel_minus_flat(&cfg, tau.powf(1.0 / a), xs) / a;
    let mut breaks = vec![0.0];
    if r > 0.0 {
        // the kernel at x switches on near u ~ r^2 / d
        let tb = (r * r / d as f64).powf(a);
        for f in [0.25, 1.0, 4.0] {
            let b = tb * f;
            if b < tau_end {
                breaks.push(b);
            }
        }
    }
    breaks.push(tau_end);
    let mut value = 0.0;
    let mut err = 0.0;
    for w in breaks.windows(2) {
        let q = integrate(short, w[0], w[1], opts)?;
        value += q.value;
        err += q.error;
    }

    let long = |u: f64| u.powf(a - 1.0) * kernel_minus_flat(&cfg, u, xs);
    let q = integrate(long, plan.u_split, plan.u_max, opts)?;
    value += q.value;
    err += q.error;

    // |G - (2pi)^{-d}| <= Theta_{1,d} e^{-u/2} beyond u_max
    let theta = theta_eps_d(1.0, d)?;
    let tail = theta * tail_gamma(a, plan.u_max);

    let scale = 2f64.powf(-a) / gamma(a);
    Ok(IntegralValue {
        value: spec.rho * spec.flat() + scale * value,
        error_estimate: scale * err,
        tail_bound: scale * tail,
    })
}

/// Upper bound for int_U^inf u^{a-1} e^{-u/2} du.
fn tail_gamma(a: f64, u: f64) -> f64 {
    if a <= 1.0 {
        2.0 * u.powf(a - 1.0) * (-u / 2.0).exp()
    } else {
        // u^{a-1} e^{-u/4} is decreasing past 4(a-1)
        let peak = 4.0 * (a - 1.0);
        let m = if u >= peak { u.powf(a - 1.0) * (-u / 4.0).exp() } else { peak.powf(a - 1.0) * (-(a - 1.0)).exp() };
        4.0 * m * (-u / 4.0).exp()
    }
}

/// Convenience: f by the integral route with the default plan.
pub fn covariance_integral(spec: &NoiseSpec, x: &[f64]) -> Result<f64> {
    Ok(covariance_eval_integral(spec, &TorusPoint::new(x.to_vec())?, &QuadPlan::default())?.value)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhoStar {
    pub d: usize,
    pub alpha: f64,
    pub grid_n: usize,
    /// min over the grid of f_{alpha,0}
    pub grid_min: f64,
    pub argmin: Vec<f64>,
    pub rho_star_est: f64,
    pub rho_sufficient: f64,
}

/// Analytic sufficient level (2 pi)^{-d/2} / Gamma(alpha+1) + (2 pi)^{d/2} 2^alpha Theta_{1,d}.
pub fn rho_sufficient(d: usize, alpha: f64) -> Result<f64> {
    Ok(TAU.powf(-(d as f64) / 2.0) / gamma(alpha + 1.0) + TAU.powf(d as f64 / 2.0) * 2f64.powf(alpha) * theta_eps_d(1.0, d)?)
}

/// Grid estimate of the smallest rho making f_{alpha,rho} nonnegative.
pub fn rho_star(d: usize, alpha: f64, grid_n: usize) -> Result<RhoStar> {
    if grid_n < 2 {
        return domain("grid_n must be >= 2");
    }
    let spec = NoiseSpec::new(d, alpha, 0.0, 1.0)?;
    let total = grid_n.pow(d as u32);
    let vals: Vec<(f64, usize)> = (0..total)
        .into_par_iter()
        .filter_map(|flat| {
            let x = grid_point(flat, grid_n, d);
            if x.iter().all(|&v| wrap(v) == 0.0) {
                return None;
            }
            Some(covariance_integral(&spec, &x).map(|v| (v, flat)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (grid_min, at) = vals
        .iter()
        .copied()
        .fold((f64::INFINITY, 0), |acc, v| if v.0 < acc.0 { v } else { acc });
    Ok(RhoStar {
        d,
        alpha,
        grid_n,
        grid_min,
        argmin: grid_point(at, grid_n, d),
        rho_star_est: TAU.powi(d as i32) * (-grid_min),
        rho_sufficient: rho_sufficient(d, alpha)?,
    })
}

/// Covariance table on a periodic grid with the diagonal singularity capped at
/// the value one cell away from the origin; multilinear interpolation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CappedTable {
    pub d: usize,
    pub n: usize,
    pub cap_radius: f64,
    pub values: Vec<f64>,
}

impl CappedTable {
    pub fn build(spec: &NoiseSpec, n: usize) -> Result<Self> {
        spec.validate()?;
        let d = spec.d;
        let h = TAU / n as f64;
        let total = n.pow(d as u32);
        let values = (0..total)
            .into_par_iter()
            .map(|flat| {
                let x = grid_point(flat, n, d);
                let r = norm(&x.iter().map(|&v| wrap(v)).collect::<Vec<_>>());
                if r < h * 0.999 {
                    let mut y = vec![0.0; d];
                    y[0] = h;
                    covariance_integral(spec, &y)
                } else {
                    covariance_integral(spec, &x)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { d, n, cap_radius: h, values })
    }

    /// Table of the truncated series f_K on the n^d grid (bounded, so nothing is capped).
    pub fn from_spectral(weights: &SpectralWeights, n: usize) -> Result<Self> {
        Ok(Self { d: weights.lattice.d, n, cap_radius: 0.0, values: weights.covariance_grid(n)? })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let h = TAU / n as f64;
        let mut base = vec![0usize; self.d];
        let mut frac = vec![0.0; self.d];
        for i in 0..self.d {
            let s = (wrap(x[i]) + PI) / h;
            let j = s.floor();
            base[i] = (j as usize) % n;
            frac[i] = s - j;
        }
        let mut out = 0.0;
        for corner in 0..(1usize << self.d) {
            let mut w = 1.0;
            let mut flat = 0usize;
            for i in 0..self.d {
                let bit = (corner >> i) & 1;
                w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
                flat = flat * n + (base[i] + bit) % n;
            }
            if w != 0.0 {
                out += w * self.values[flat];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(d: usize, a: f64, rho: f64) -> NoiseSpec {
        NoiseSpec::new(d, a, rho, 1.0).unwrap()
    }

    #[test]
    fn weight_examples() {
        assert!((fourier_weight(&spec(1, 0.3, 2.0), &[0]) - 2.0 / TAU.sqrt()).abs() < 1e-15);
        assert!((fourier_weight(&spec(2, 1.0, 0.0), &[1, 0]) - 1.0 / TAU).abs() < 1e-15);
        let s = spec(3, 0.7, 1.0);
        assert_eq!(fourier_weight(&s, &[2, -1, 3]), fourier_weight(&s, &[-2, 1, -3]));
    }

    #[test]
    fn dalang_examples() {
        assert!(dalang_check(&spec(3, 0.6, 0.0)));
        assert!(!dalang_check(&spec(3, 0.5, 0.0)));
        assert!(dalang_check(&spec(1, 0.3, 0.0)));
    }

    #[test]
    fn spec_validation() {
        assert!(NoiseSpec::new(1, 0.0, 1.0, 1.0).is_err());
        assert!(NoiseSpec::new(1, 0.3, -1.0, 1.0).is_err());
        assert!(NoiseSpec::new(1, 0.3, 1.0, 0.0).is_err());
        assert!(NoiseSpec::new(0, 0.3, 1.0, 1.0).is_err());
    }

    #[test]
    fn singular_origin_rejected() {
        let s = spec(1, 0.3, 0.0);
        let o = TorusPoint::origin(1);
        assert!(matches!(covariance_eval(&s, &o, 10), Err(Error::Singularity(_))));
        assert!(matches!(
            covariance_eval_integral(&s, &o, &QuadPlan::default()),
            Err(Error::Singularity(_))
        ));
        assert!(covariance_eval(&spec(1, 0.8, 0.0), &o, 10).is_ok());
    }

    #[test]
    fn rho_shift_is_additive() {
        let x = TorusPoint::new(vec![0.9]).unwrap();
        let p = QuadPlan::default();
        let a = covariance_eval_integral(&spec(1, 0.45, 1.0), &x, &p).unwrap().value;
        let b = covariance_eval_integral(&spec(1, 0.45, 0.0), &x, &p).unwrap().value;
        assert!((a - b - 1.0 / TAU).abs() < 1e-15);
    }

    #[test]
    fn routes_agree_in_one_dimension() {
        let s = spec(1, 0.3, 0.0);
        let x = TorusPoint::new(vec![1.0]).unwrap();
        let a = covariance_spectral(&s, &x).unwrap();
        let b = covariance_eval_integral(&s, &x, &QuadPlan::default()).unwrap();
        assert!((a - b.value).abs() < 1e-8, "{a} vs {}", b.value);
        let s = spec(1, 0.45, 1.0);
        let x = TorusPoint::new(vec![PI]).unwrap();
        let a = covariance_spectral(&s, &x).unwrap();
        let b = covariance_eval_integral(&s, &x, &QuadPlan::default()).unwrap();
        assert!((a - b.value).abs() < 1e-8, "{a} vs {}", b.value);
    }

    #[test]
    fn truncated_series_bound_covers_error() {
        let s = spec(1, 0.8, 0.5);
        let x = TorusPoint::new(vec![0.7]).unwrap();
        let exact = covariance_spectral(&s, &x).unwrap();
        for k in [4, 16, 64] {
            let v = covariance_eval(&s, &x, k).unwrap();
            assert!(v.rigorous);
            assert!((v.value - exact).abs() <= v.tail_bound, "K={k}");
        }
        let s = spec(1, 0.3, 0.0);
        let exact = covariance_spectral(&s, &x).unwrap();
        for k in [8, 32, 128] {
            let v = covariance_eval(&s, &x, k).unwrap();
            assert!((v.value - exact).abs() <= v.tail_bound, "K={k}");
        }
    }

    #[test]
    fn sign_change_and_rho_sufficient() {
        let s = spec(1, 0.3, 0.0);
        let w = SpectralWeights::new(&s, 200);
        let g = w.covariance_grid(1000).unwrap();
        assert!(g.iter().any(|&v| v > 0.0) && g.iter().any(|&v| v < 0.0));
        let r = rho_sufficient(1, 1.0).unwrap();
        assert!(r.is_finite() && r > 0.0);
    }

    #[test]
    fn neville_recovers_polynomial() {
        let xs = [0.1, 0.05, 0.025, 0.0125];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 3.0 * x + 5.0 * x * x * x).collect();
        assert!((neville_at_zero(&xs, &ys) - 2.0).abs() < 1e-13);
    }
}
