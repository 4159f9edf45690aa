//! Heat kernel of (1/2) Laplacian on the flat torus [-pi, pi)^d.
//!
//! In one dimension two dual theta-series are available: the Fourier cosine
//! series, fast for large t, and the Gaussian image sum, fast for small t.
//! Higher dimensions are products of one-dimensional factors.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Signed remainder into [-pi, pi); `x - r` is a multiple of 2 pi.
pub fn signed_mod(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return domain(format!("signed_mod of non-finite value {x}"));
    }
    Ok(wrap(x))
}

#[inline]
pub(crate) fn wrap(x: f64) -> f64 {
    if (-PI..PI).contains(&x) {
        return x;
    }
    let r = (x + PI).rem_euclid(TAU) - PI;
    // rem_euclid may round up to exactly TAU
    if r >= PI { r - TAU } else { r }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return domain("torus point needs dimension >= 1");
        }
        let coords = coords.into_iter().map(signed_mod).collect::<Result<Vec<_>>>()?;
        Ok(Self { coords })
    }

    pub fn origin(d: usize) -> Self {
        Self { coords: vec![0.0; d.max(1)] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Representative of x - y in [-pi, pi)^d.
    pub fn diff(&self, other: &TorusPoint) -> Result<TorusPoint> {
        check_dims(self, other)?;
        Ok(Self {
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| wrap(a - b)).collect(),
        })
    }
}

fn check_dims(x: &TorusPoint, y: &TorusPoint) -> Result<()> {
    if x.dim() != y.dim() {
        return domain(format!("dimension mismatch: {} vs {}", x.dim(), y.dim()));
    }
    Ok(())
}

pub fn torus_distance(x: &TorusPoint, y: &TorusPoint) -> Result<f64> {
    Ok(norm(x.diff(y)?.coords()))
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Euclidean Gaussian density p_d(t, x).
pub fn gauss_kernel(t: f64, x: &[f64]) -> Result<f64> {
    check_time(t)?;
    Ok(gauss_unchecked(t, x))
}

pub(crate) fn gauss_unchecked(t: f64, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|a| a * a).sum();
    (TAU * t).powf(-(x.len() as f64) / 2.0) * (-r2 / (2.0 * t)).exp()
}

pub(crate) fn log_gauss(t: f64, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|a| a * a).sum();
    -(x.len() as f64) / 2.0 * (TAU * t).ln() - r2 / (2.0 * t)
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("time must be finite and > 0, got {t}"));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaEntry {
    pub eps: f64,
    pub d: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelConfig {
    pub tail_tol: f64,
    pub t_switch: f64,
    pub max_terms: usize,
    pub theta_eps_d: Vec<ThetaEntry>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            tail_tol: 1e-15,
            t_switch: TAU,
            max_terms: 64,
            theta_eps_d: Vec::new(),
        }
    }
}

impl KernelConfig {
    pub fn new(tail_tol: f64, t_switch: f64) -> Result<Self> {
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return domain(format!("tail_tol must lie in (0,1), got {tail_tol}"));
        }
        if !(t_switch > 0.0 && t_switch.is_finite()) {
            return domain(format!("t_switch must be > 0, got {t_switch}"));
        }
        Ok(Self { tail_tol, t_switch, ..Self::default() })
    }

    /// Compute and store Theta_{eps,d}.
    pub fn with_theta(mut self, eps: f64, d: usize) -> Result<Self> {
        let value = theta_eps_d(eps, d)?;
        self.theta_eps_d.push(ThetaEntry { eps, d, value });
        Ok(self)
    }

    /// Stored Theta_{eps,d}, computed on the fly when absent.
    pub fn theta(&self, eps: f64, d: usize) -> Result<f64> {
        match self.theta_eps_d.iter().find(|e| e.eps == eps && e.d == d) {
            Some(e) => Ok(e.value),
            None => theta_eps_d(eps, d),
        }
    }

    /// One-dimensional kernel from the image sum.
    pub fn g1_images(&self, t: f64, x: f64) -> f64 {
        let x = wrap(x);
        let c = (TAU * t).sqrt().recip();
        let mut sum = (-x * x / (2.0 * t)).exp();
        for n in 1..=self.max_terms {
            let a = x + TAU * n as f64;
            let b = x - TAU * n as f64;
            let term = (-a * a / (2.0 * t)).exp() + (-b * b / (2.0 * t)).exp();
            sum += term;
            if term <= self.tail_tol * sum {
                break;
            }
        }
        c * sum
    }

    /// One-dimensional kernel from the cosine series.
    pub fn g1_spectral(&self, t: f64, x: f64) -> f64 {
        let mut sum = 1.0;
        for n in 1..=self.max_terms {
            let n = n as f64;
            let env = 2.0 * (-n * n * t / 2.0).exp();
            sum += env * (n * x).cos();
            if env <= self.tail_tol * sum.abs() {
                break;
            }
        }
        sum / TAU
    }

    pub fn g1(&self, t: f64, x: f64) -> f64 {
        if t <= self.t_switch { self.g1_images(t, x) } else { self.g1_spectral(t, x) }
    }

    /// G_1(t, x) / p_1(t, signed_mod(x)) without underflow.
    pub fn g1_gauss_ratio(&self, t: f64, x: f64) -> f64 {
        let x = wrap(x);
        if t <= self.t_switch {
            let mut sum = 1.0;
            for n in 1..=self.max_terms {
                let n = n as f64;
                let base = 4.0 * PI * PI * n * n;
                let term = (-(base + 4.0 * PI * n * x) / (2.0 * t)).exp()
                    + (-(base - 4.0 * PI * n * x) / (2.0 * t)).exp();
                sum += term;
                if term <= self.tail_tol * sum {
                    break;
                }
            }
            sum
        } else {
            self.g1_spectral(t, x) / gauss_unchecked(t, &[x])
        }
    }

    pub fn log_g1(&self, t: f64, x: f64) -> f64 {
        if t <= self.t_switch {
            let x = wrap(x);
            log_gauss(t, &[x]) + self.g1_gauss_ratio(t, x).ln()
        } else {
            self.g1_spectral(t, x).ln()
        }
    }

    /// G_d(t, x) for raw coordinates; no validation.
    pub fn g(&self, t: f64, x: &[f64]) -> f64 {
        x.iter().map(|&xi| self.g1(t, xi)).product()
    }

    pub fn log_g(&self, t: f64, x: &[f64]) -> f64 {
        x.iter().map(|&xi| self.log_g1(t, xi)).sum()
    }

    pub fn gauss_ratio(&self, t: f64, x: &[f64]) -> f64 {
        x.iter().map(|&xi| self.g1_gauss_ratio(t, xi)).product()
    }
}

/// G_d(t, x) on the torus.
pub fn heat_kernel(t: f64, x: &TorusPoint, cfg: &KernelConfig) -> Result<f64> {
    check_time(t)?;
    Ok(cfg.g(t, x.coords()))
}

pub fn log_heat_kernel(t: f64, x: &TorusPoint, cfg: &KernelConfig) -> Result<f64> {
    check_time(t)?;
    Ok(cfg.log_g(t, x.coords()))
}

/// C_t from the short-time form 1 + 2 sum exp(-2 pi^2 n^2 / t).
pub fn theta_c_short(t: f64, tol: f64) -> f64 {
    let mut sum = 1.0;
    for n in 1..=64 {
        let n = n as f64;
        let term = 2.0 * (-2.0 * PI * PI * n * n / t).exp();
        sum += term;
        if term <= tol * sum {
            break;
        }
    }
    sum
}

/// C_t from the rescaled form sqrt(t / 2 pi) (1 + 2 sum exp(-n^2 t / 2)).
pub fn theta_c_long(t: f64, tol: f64) -> f64 {
    let mut sum = 1.0;
    for n in 1..=64 {
        let n = n as f64;
        let term = 2.0 * (-n * n * t / 2.0).exp();
        sum += term;
        if term <= tol * sum {
            break;
        }
    }
    (t / TAU).sqrt() * sum
}

pub fn theta_c(t: f64, tol: f64) -> Result<f64> {
    check_time(t)?;
    if !(tol > 0.0 && tol < 1.0) {
        return domain(format!("tol must lie in (0,1), got {tol}"));
    }
    Ok(if t <= TAU { theta_c_short(t, tol) } else { theta_c_long(t, tol) })
}

/// Lambda_eps = max(2, sup_{t >= eps} e^{t/2} log(sqrt(2 pi / t) C_t)) by grid scan.
pub fn lambda_eps(eps: f64) -> Result<f64> {
    check_time(eps)?;
    let h = |t: f64| {
        // sqrt(2 pi / t) C_t = 1 + 2 sum exp(-n^2 t / 2); ln_1p keeps the large-t end exact
        let mut s = 0.0;
        for n in 1..=64 {
            let n = n as f64;
            let term = 2.0 * (-n * n * t / 2.0).exp();
            s += term;
            if term <= 1e-17 * (1.0 + s) {
                break;
            }
        }
        (t / 2.0).exp() * s.ln_1p()
    };
    let t_hi = eps.max(80.0);
    let n = 40_000;
    let mut best = 2.0f64;
    // geometric near eps, where the sup of the small-time branch sits
    for i in 0..=n {
        let t = eps * (t_hi / eps).powf(i as f64 / n as f64);
        best = best.max(h(t));
    }
    Ok(best)
}

pub fn theta_eps_1(eps: f64) -> Result<f64> {
    let l = lambda_eps(eps)?;
    Ok(l * l.exp())
}

pub fn theta_eps_d(eps: f64, d: usize) -> Result<f64> {
    if d == 0 {
        return domain("dimension must be >= 1");
    }
    let t1 = theta_eps_1(eps)?;
    let b = 1.0 + (TAU / eps).sqrt();
    let s: f64 = (1..=d)
        .map(|i| TAU.powi(-(i as i32 - 1)) * b.powi((d - i) as i32))
        .sum();
    Ok(t1 * s)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SandwichReport {
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

/// C_t^d <= G(t,x) / p_d(t, x) <= (2 C_t)^d.
pub fn kernel_sandwich_check(t: f64, x: &TorusPoint, cfg: &KernelConfig) -> Result<SandwichReport> {
    check_time(t)?;
    let d = x.dim() as i32;
    let ratio = cfg.gauss_ratio(t, x.coords());
    let ct = if t <= cfg.t_switch { theta_c_short(t, cfg.tail_tol) } else { theta_c_long(t, cfg.tail_tol) };
    let lower = ct.powi(d);
    let upper = (2.0 * ct).powi(d);
    let slack = 10.0 * cfg.tail_tol * ratio;
    let pass = lower - slack <= ratio && ratio <= upper + slack;
    Ok(SandwichReport { ratio, lower, upper, pass })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IncrementReport {
    /// |G(t,x) - G(t',x)|
    pub lhs_time: f64,
    /// t^{-beta/2} G(2t', x) (t' - t)^{beta/2}
    pub rhs_time: f64,
    /// smallest constant making the time bound hold here
    pub c_time: f64,
    /// |G(t,x) - G(t,y)|
    pub lhs_space: f64,
    /// t^{-beta/2} [G(2t,x) + G(2t,y)] dist(x,y)^beta
    pub rhs_space: f64,
    pub c_space: f64,
}

fn ratio_or_zero(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 { 0.0 } else { lhs / rhs }
}

pub fn kernel_increment_bounds(
    t: f64,
    t_prime: f64,
    x: &TorusPoint,
    y: &TorusPoint,
    beta: f64,
    cfg: &KernelConfig,
) -> Result<IncrementReport> {
    check_time(t)?;
    check_time(t_prime)?;
    if t_prime < t {
        return domain(format!("need t <= t', got t = {t}, t' = {t_prime}"));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return domain(format!("beta must lie in (0,1], got {beta}"));
    }
    check_dims(x, y)?;
    let xs = x.coords();
    let ys = y.coords();
    let pre = t.powf(-beta / 2.0);
    let lhs_time = (cfg.g(t, xs) - cfg.g(t_prime, xs)).abs();
    let rhs_time = pre * cfg.g(2.0 * t_prime, xs) * (t_prime - t).powf(beta / 2.0);
    let lhs_space = (cfg.g(t, xs) - cfg.g(t, ys)).abs();
    let dist = torus_distance(x, y)?;
    let rhs_space = pre * (cfg.g(2.0 * t, xs) + cfg.g(2.0 * t, ys)) * dist.powf(beta);
    let out = IncrementReport {
        lhs_time,
        rhs_time,
        c_time: ratio_or_zero(lhs_time, rhs_time),
        lhs_space,
        rhs_space,
        c_space: ratio_or_zero(lhs_space, rhs_space),
    };
    if !(out.c_time.is_finite() && out.c_space.is_finite()) {
        return Err(Error::Numeric(format!("increment ratio overflow at t={t}, t'={t_prime}")));
    }
    Ok(out)
}
