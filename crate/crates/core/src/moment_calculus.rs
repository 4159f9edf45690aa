//! Temporal kernels k1, k2, the iterated convolutions h_n, the series H_lambda,
//! the Laplace-side quantity Theta_gamma with its root gamma_0, and the
//! moment bounds built from them.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::covariance::{weight_of_norm_sq, NoiseSpec};
use crate::error::{domain, Error, Result};
use crate::lattice::{norm_sq, sphere_area, ModeLattice, Shells};
use crate::quadrature::{integrate, integrate_to_inf, QuadOptions};

const TIGHT: QuadOptions = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-13, max_intervals: 4000 };

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return domain(format!("time argument must be > 0, got {s}"));
    }
    Ok(())
}

fn shell_radius(d: usize) -> f64 {
    match d {
        1 => 4000.0,
        2 => 150.0,
        3 => 40.0,
        _ => 12.0,
    }
}

/// Truncated k1(s) = sum_{|k|_inf <= K} theta_k e^{-s |k|^2}.
pub fn k1(s: f64, spec: &NoiseSpec, k_max: usize) -> Result<f64> {
    check_s(s)?;
    spec.validate()?;
    let lat = ModeLattice::new(spec.d, k_max);
    Ok(lat
        .modes()
        .map(|k| {
            let q = norm_sq(&k);
            weight_of_norm_sq(spec, q) * (-s * q).exp()
        })
        .sum())
}

/// sum_{|k|_inf <= K} theta_k / (|k|^2 + gamma), the Laplace transform of the truncated k1.
pub fn k1_laplace_modesum(gamma_: f64, spec: &NoiseSpec, k_max: usize) -> f64 {
    ModeLattice::new(spec.d, k_max)
        .modes()
        .map(|k| {
            let q = norm_sq(&k);
            weight_of_norm_sq(spec, q) / (q + gamma_)
        })
        .sum()
}

/// int_0^inf e^{-gamma s} k1_K(s) ds by adaptive quadrature.
pub fn k1_laplace_quadrature(gamma_: f64, spec: &NoiseSpec, k_max: usize) -> Result<f64> {
    let lat = ModeLattice::new(spec.d, k_max);
    let modes: Vec<(f64, f64)> = lat
        .modes()
        .map(|k| {
            let q = norm_sq(&k);
            (q, weight_of_norm_sq(spec, q))
        })
        .collect();
    let f = |s: f64| (-gamma_ * s).exp() * modes.iter().map(|&(q, w)| w * (-s * q).exp()).sum::<f64>();
    let kk = (k_max.max(1) as f64).powi(2);
    let mut total = 0.0;
    let mut a = 0.0;
    // dyadic pieces resolve the e^{-s|k|^2} scales
    let mut b = 1.0 / kk;
    while b < 1.0 {
        total += integrate(f, a, b, TIGHT)?.value;
        a = b;
        b *= 4.0;
    }
    total += integrate(f, a, 1.0, TIGHT)?.value;
    total += integrate_to_inf(f, 1.0, TIGHT)?.value;
    Ok(total)
}

/// c-hat in the Fourier transform of the Riesz kernel |x|^{-d+2 alpha} under the
/// unitary angular-frequency convention.
pub fn riesz_c_hat(d: usize, alpha: f64) -> f64 {
    2f64.powf(2.0 * alpha - d as f64 / 2.0) * gamma(alpha) / gamma(d as f64 / 2.0 - alpha)
}

/// C_{d,alpha} in closed form: 2^alpha Gamma(alpha) pi^{d/2} / Gamma(d/2).
pub fn k2_constant_closed(d: usize, alpha: f64) -> f64 {
    2f64.powf(alpha) * gamma(alpha) * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

/// C_{d,alpha} = k2(1) from radial quadrature of c-hat |xi|^{-2 alpha} e^{-|xi|^2/2}.
/// For alpha >= d/2 the defining integral diverges and the closed form (its
/// analytic continuation) is returned.
pub fn k2_constant(d: usize, alpha: f64) -> Result<f64> {
    if d == 0 || !(alpha > 0.0) {
        return domain(format!("need d >= 1 and alpha > 0, got d={d}, alpha={alpha}"));
    }
    let p = d as f64 - 1.0 - 2.0 * alpha;
    if p <= -1.0 {
        return Ok(k2_constant_closed(d, alpha));
    }
    // r = v^{1/(p+1)} on [0,1] removes the r^p endpoint singularity
    let e = 1.0 / (p + 1.0);
    let near = integrate(|v: f64| e * (-v.powf(2.0 * e) / 2.0).exp(), 0.0, 1.0, TIGHT)?.value;
    let far = integrate_to_inf(|r: f64| r.powf(p) * (-r * r / 2.0).exp(), 1.0, TIGHT)?.value;
    Ok(riesz_c_hat(d, alpha) * sphere_area(d) * (near + far))
}

pub fn k2(s: f64, alpha: f64, d: usize) -> Result<f64> {
    check_s(s)?;
    Ok(k2_constant(d, alpha)? * s.powf(alpha - d as f64 / 2.0))
}

/// C'_{d,alpha} with int_0^inf e^{-gamma s} k2(s) ds = C' gamma^{-(alpha+1-d/2)}.
pub fn k2_laplace_constant(d: usize, alpha: f64) -> Result<f64> {
    let e = alpha + 1.0 - d as f64 / 2.0;
    if e <= 0.0 {
        return domain("Dalang's condition is needed for the Laplace transform of k2");
    }
    Ok(k2_constant(d, alpha)? * gamma(e))
}

/// Full-lattice sums for one spec: shells up to a radius plus a continuum tail.
#[derive(Debug, Clone)]
pub struct LatticeSums {
    pub spec: NoiseSpec,
    shells: Shells,
    /// (|k|^2, multiplicity * theta_k) for k != 0
    weighted: Vec<(f64, f64)>,
    norm: f64,
}

impl LatticeSums {
    pub fn new(spec: &NoiseSpec) -> Result<Self> {
        spec.validate()?;
        let shells = Shells::new(spec.d, shell_radius(spec.d));
        let weighted = shells.shells.iter().map(|&(q, m)| (q, m * weight_of_norm_sq(spec, q))).collect();
        Ok(Self { spec: *spec, shells, weighted, norm: TAU.powf(-(spec.d as f64) / 2.0) })
    }

    pub fn theta0(&self) -> f64 {
        self.spec.rho * self.norm
    }

    /// (2 pi)^{-d/2} omega_d int_{R}^inf r^{d-1-2 alpha} g(r) dr, with r = R / u.
    pub fn tail<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let d = self.spec.d as f64;
        let r0 = self.shells.tail_radius;
        let a = self.spec.alpha;
        let f = |u: f64| {
            let r = r0 / u;
            r0 * r.powf(d - 1.0 - 2.0 * a) * g(r) / (u * u)
        };
        let v = integrate(f, 0.0, 1.0, TIGHT)?.value;
        Ok(self.norm * sphere_area(self.spec.d) * v)
    }

    /// sum_{k != 0} theta_k g(|k|^2) plus the continuum tail of the same g.
    pub fn sum_nonzero<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let body: f64 = self.weighted.iter().map(|&(q, w)| w * g(q)).sum();
        Ok(body + self.tail(|r| g(r * r))?)
    }

    /// k1(s) over the whole lattice.
    pub fn k1(&self, s: f64) -> Result<f64> {
        check_s(s)?;
        let r = self.shells.tail_radius;
        let body: f64 = self.weighted.iter().map(|&(q, w)| w * (-s * q).exp()).sum();
        let tail = if s * r * r > 46.0 { 0.0 } else { self.tail(|x| (-s * x * x).exp())? };
        Ok(self.theta0() + body + tail)
    }

    /// Theta_gamma lattice piece: sum_{k != 0} theta_k / (|k|^2 + gamma).
    pub fn resolvent_sum(&self, gamma_: f64) -> Result<f64> {
        self.sum_nonzero(|q| 1.0 / (q + gamma_))
    }
}

/// int_0^h v (1+v)^p dv, stable for small h.
fn moment1_power(h: f64, p: f64) -> f64 {
    if h < 0.5 {
        let mut term = 1.0; // binom(p, m) h^m
        let mut s = 0.0;
        for m in 0..200 {
            let add = term * h * h / (m as f64 + 2.0);
            s += add;
            if add.abs() < 1e-17 * s.abs() {
                break;
            }
            term *= (p - m as f64) / (m as f64 + 1.0) * h;
        }
        s
    } else {
        let b = 1.0 + h;
        (b.powf(p + 2.0) - 1.0) / (p + 2.0) - (b.powf(p + 1.0) - 1.0) / (p + 1.0)
    }
}

/// (1 - e^{-x}(1 + x)) / x^2
fn g2(x: f64) -> f64 {
    if x < 0.1 {
        // sum_{n>=2} (-1)^n (n-1) x^{n-2} / n!
        let mut s = 0.0;
        let mut fact_pow = 0.5; // x^{n-2} / n!
        for n in 2..30 {
            let term = (n - 1) as f64 * fact_pow;
            s += if n % 2 == 0 { term } else { -term };
            fact_pow *= x / (n + 1) as f64;
            if term < 1e-18 {
                break;
            }
        }
        s
    } else {
        (1.0 - (-x).exp() * (1.0 + x)) / (x * x)
    }
}

/// Product-integration weights of kappa = k1 + k2 + 1 on cells [j dt, (j+1) dt]:
/// int_cell kappa(s) phi(s) ds = A_j phi(left) + B_j phi(right) for linear phi.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvolutionWeights {
    pub dt: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl ConvolutionWeights {
    pub fn new(spec: &NoiseSpec, dt: f64, n_cells: usize) -> Result<Self> {
        spec.require_dalang()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return domain(format!("dt must be > 0, got {dt}"));
        }
        let sums = LatticeSums::new(spec)?;
        let c2 = k2_constant(spec.d, spec.alpha)?;
        let p = spec.alpha - spec.d as f64 / 2.0;
        let r_t = sums.shells.tail_radius;
        let mut a = Vec::with_capacity(n_cells);
        let mut b = Vec::with_capacity(n_cells);
        for j in 0..n_cells {
            let lo = j as f64 * dt;
            // m0 = int kappa, m1 = int (s - lo) kappa / dt
            let mut m0 = dt * (1.0 + sums.theta0());
            let mut m1 = dt / 2.0 * (1.0 + sums.theta0());
            // k2
            if j == 0 {
                m0 += c2 * dt.powf(p + 1.0) / (p + 1.0);
                m1 += c2 * dt.powf(p + 1.0) / (p + 2.0);
            } else {
                let h = dt / lo;
                m0 += c2 * lo.powf(p + 1.0) * ((p + 1.0) * h.ln_1p()).exp_m1() / (p + 1.0);
                m1 += c2 * lo.powf(p + 2.0) * moment1_power(h, p) / dt;
            }
            // k1 shells, exact per mode
            for &(q, w) in &sums.weighted {
                let e = (-lo * q).exp();
                if e == 0.0 {
                    break;
                }
                m0 += w * e * dt * if dt * q < 1e-8 { 1.0 - dt * q / 2.0 } else { -(-dt * q).exp_m1() / (dt * q) };
                m1 += w * e * dt * g2(dt * q);
            }
            // continuum tail of k1
            if lo * r_t * r_t < 46.0 {
                m0 += sums.tail(|r| {
                    let q = r * r;
                    (-lo * q).exp() * -(-dt * q).exp_m1() / q
                })?;
                m1 += sums.tail(|r| {
                    let q = r * r;
                    (-lo * q).exp() * dt * g2(dt * q)
                })?;
            }
            a.push(m0 - m1);
            b.push(m1);
        }
        Ok(Self { dt, a, b })
    }

    /// (kappa * h)(t_i) = sum_j A_j h[i-j] + B_j h[i-j-1] for i >= 1.
    pub fn convolve(&self, h: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
        for i in 1..h.len() {
            let mut s = 0.0;
            for j in 0..i {
                s += self.a[j] * h[i - j] + self.b[j] * h[i - j - 1];
            }
            out[i] = s;
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HnTable {
    pub spec: NoiseSpec,
    pub t_grid: Vec<f64>,
    /// values[n][i] = h_n(t_i)
    pub values: Vec<Vec<f64>>,
    /// k1 + k2 + 1 at t_i (infinite at t = 0 when alpha < d/2)
    pub hstar_combined: Vec<f64>,
    #[serde(skip)]
    weights: Option<ConvolutionWeights>,
    /// half-step table covering the first `FINE_CELLS` cells; its values replace
    /// the coarse ones there, where h_n ~ t^{n(alpha+1-d/2)} defeats linear interpolation
    #[serde(skip)]
    fine: Option<Box<HnTable>>,
}

const FINE_CELLS: usize = 32;
const FINE_LEVELS: usize = 6;

/// Uniform grid 0, dt, ..., n dt.
pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t_max * i as f64 / n as f64).collect()
}

fn grid_step(t_grid: &[f64]) -> Result<f64> {
    if t_grid.len() < 2 || t_grid[0] != 0.0 {
        return domain("time grid must start at 0 and have at least two points");
    }
    let dt = t_grid[1];
    for (i, &t) in t_grid.iter().enumerate() {
        if (t - dt * i as f64).abs() > 1e-9 * dt * (i as f64).max(1.0) {
            return domain("time grid must be uniform");
        }
    }
    if !(dt > 0.0) {
        return domain("time grid must be increasing");
    }
    Ok(dt)
}

/// kappa(s) = k1(s) + k2(s) + 1 over the full lattice.
pub fn kappa(spec: &NoiseSpec, sums: &LatticeSums, s: f64) -> Result<f64> {
    Ok(sums.k1(s)? + k2(s, spec.alpha, spec.d)? + 1.0)
}

impl HnTable {
    pub fn new(spec: &NoiseSpec, n_max: usize, t_grid: &[f64]) -> Result<Self> {
        spec.require_dalang()?;
        let dt = grid_step(t_grid)?;
        let sums = LatticeSums::new(spec)?;
        let hstar_combined = t_grid
            .iter()
            .map(|&t| if t == 0.0 { Ok(f64::INFINITY) } else { kappa(spec, &sums, t) })
            .collect::<Result<Vec<_>>>()?;
        let mut table = Self::bare(spec, dt, t_grid.len() - 1, FINE_LEVELS)?;
        table.t_grid = t_grid.to_vec();
        table.hstar_combined = hstar_combined;
        for _ in 0..n_max {
            table.push_row();
        }
        Ok(table)
    }

    fn bare(spec: &NoiseSpec, dt: f64, n_cells: usize, levels: usize) -> Result<Self> {
        let fine = if levels > 0 && n_cells > 1 {
            let m = (2 * FINE_CELLS).min(2 * n_cells);
            Some(Box::new(Self::bare(spec, dt / 2.0, m, levels - 1)?))
        } else {
            None
        };
        Ok(Self {
            spec: *spec,
            t_grid: (0..=n_cells).map(|i| i as f64 * dt).collect(),
            values: vec![vec![1.0; n_cells + 1]],
            hstar_combined: Vec::new(),
            weights: Some(ConvolutionWeights::new(spec, dt, n_cells)?),
            fine,
        })
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    fn push_row(&mut self) {
        let w = self.weights.as_ref().expect("weights present while building");
        let prev = self.values.last().expect("row 0");
        let mut next = vec![0.0; prev.len()];
        w.convolve(prev, &mut next);
        if let Some(fine) = self.fine.as_mut() {
            fine.push_row();
            let f = fine.values.last().expect("fine row");
            for i in 1..next.len().min(FINE_CELLS) {
                if 2 * i < f.len() {
                    next[i] = f[2 * i];
                }
            }
        }
        self.values.push(next);
    }

    /// Grid index of t, which must be a grid point.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let dt = self.t_grid[1];
        let i = (t / dt).round() as usize;
        if i >= self.t_grid.len() || (self.t_grid[i] - t).abs() > 1e-9 * dt.max(t) {
            return domain(format!("t = {t} is not on the table grid"));
        }
        Ok(i)
    }

    /// Partial sums of lambda^{2n} h_n(t_i), extending rows on demand up to `cap`.
    pub fn h_lambda(&mut self, lambda: f64, i: usize, tol: f64, cap: usize) -> Result<HSeries> {
        let l2 = lambda * lambda;
        let mut sum = 0.0;
        let mut pow = 1.0;
        let mut prev_term = f64::NAN;
        let mut last_ratio = f64::NAN;
        for n in 0..=cap {
            if n > self.n_max() {
                if self.weights.is_none() {
                    return Err(Error::Numeric("table was deserialized; rows cannot be extended".into()));
                }
                self.push_row();
            }
            let term = pow * self.values[n][i];
            sum += term;
            if n > 0 && prev_term > 0.0 {
                last_ratio = term / prev_term;
            }
            prev_term = term;
            // keep going while the terms still grow
            if n > 0 && term <= tol * sum && !(last_ratio >= 1.0) {
                return Ok(HSeries { value: sum, terms: n + 1, last_ratio });
            }
            pow *= l2;
        }
        Err(Error::Numeric(format!(
            "H_lambda series did not converge within {cap} terms (lambda = {lambda}, t = {}, last term ratio {last_ratio})",
            self.t_grid[i]
        )))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HSeries {
    pub value: f64,
    pub terms: usize,
    pub last_ratio: f64,
}

/// H_lambda(t) = sum lambda^{2n} h_n(t) on a grid of step `dt`.
pub fn h_lambda(spec: &NoiseSpec, t: f64, lambda: f64, tol: f64, dt: f64) -> Result<HSeries> {
    if t == 0.0 {
        return Ok(HSeries { value: 1.0, terms: 1, last_ratio: 0.0 });
    }
    check_s(t)?;
    let n = (t / dt).ceil().max(1.0) as usize;
    let mut table = HnTable::new(spec, 0, &uniform_grid(t, n))?;
    table.h_lambda(lambda, n, tol, 64)
}

/// H solving the renewal equation H = 1 + lambda^2 kappa * H on a uniform grid;
/// it equals the series sum_n lambda^{2n} h_n under the same product rule.
pub fn h_lambda_volterra(spec: &NoiseSpec, lambda: f64, t_grid: &[f64]) -> Result<Vec<f64>> {
    let dt = grid_step(t_grid)?;
    let w = ConvolutionWeights::new(spec, dt, t_grid.len() - 1)?;
    let l2 = lambda * lambda;
    let denom = 1.0 - l2 * w.a[0];
    if !(denom > 0.0) {
        return Err(Error::Numeric(format!(
            "time step {dt} too coarse for lambda = {lambda}: 1 - lambda^2 A_0 = {denom}"
        )));
    }
    let mut h = vec![1.0; t_grid.len()];
    for i in 1..t_grid.len() {
        let mut s = w.b[0] * h[i - 1];
        for j in 1..i {
            s += w.a[j] * h[i - j] + w.b[j] * h[i - j - 1];
        }
        h[i] = (1.0 + l2 * s) / denom;
    }
    Ok(h)
}

/// Theta_gamma = rho (2pi)^{-d/2} / gamma + (2pi)^{-d/2} sum |k|^{-2a} / (|k|^2 + gamma)
///             + C' gamma^{-(alpha + 1 - d/2)} + 1 / gamma.
pub fn theta_gamma(gamma_: f64, spec: &NoiseSpec) -> Result<f64> {
    let sums = LatticeSums::new(spec)?;
    theta_gamma_with(gamma_, spec, &sums)
}

fn theta_gamma_with(gamma_: f64, spec: &NoiseSpec, sums: &LatticeSums) -> Result<f64> {
    check_s(gamma_)?;
    spec.require_dalang()?;
    let e = spec.alpha + 1.0 - spec.d as f64 / 2.0;
    Ok(sums.theta0() / gamma_
        + sums.resolvent_sum(gamma_)?
        + k2_laplace_constant(spec.d, spec.alpha)? * gamma_.powf(-e)
        + 1.0 / gamma_)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GammaSolve {
    pub lambda: f64,
    pub gamma0: f64,
    pub theta_at_gamma0: f64,
    pub residual: f64,
    pub bracket: (f64, f64),
    /// radius of the explicit lattice shells; the rest is a continuum tail
    pub mode_cutoff: f64,
}

/// gamma_0(lambda): root of lambda^2 Theta_gamma = 1 by bisection in log gamma.
pub fn gamma0(lambda: f64, spec: &NoiseSpec) -> Result<GammaSolve> {
    if !(lambda != 0.0 && lambda.is_finite()) {
        return domain(format!("lambda must be finite and nonzero, got {lambda}"));
    }
    spec.require_dalang()?;
    let sums = LatticeSums::new(spec)?;
    let l2 = lambda * lambda;
    let phi = |g: f64| theta_gamma_with(g, spec, &sums).map(|v| l2 * v - 1.0);
    let (mut lo, mut hi) = (1.0, 1.0);
    while phi(lo)? <= 0.0 {
        lo /= 4.0;
        if lo < 1e-300 {
            return Err(Error::Numeric("gamma_0 bracket: lower end underflowed".into()));
        }
    }
    while phi(hi)? > 0.0 {
        hi *= 4.0;
        if hi > 1e300 {
            return Err(Error::Numeric("gamma_0 bracket: upper end overflowed".into()));
        }
    }
    if lo == hi {
        hi = lo * 4.0;
    }
    let bracket = (lo, hi);
    while hi / lo - 1.0 > 1e-13 {
        let mid = (lo * hi).sqrt();
        if phi(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let g = hi;
    let th = theta_gamma_with(g, spec, &sums)?;
    Ok(GammaSolve {
        lambda,
        gamma0: g,
        theta_at_gamma0: th,
        residual: (l2 * th - 1.0).abs(),
        bracket,
        mode_cutoff: shell_radius(spec.d),
    })
}

/// Exponent max(4 / (2(1+alpha) - d), 2) of the large-lambda growth of gamma_0.
pub fn gamma0_exponent(alpha: f64, d: usize) -> f64 {
    (4.0 / (2.0 * (1.0 + alpha) - d as f64)).max(2.0)
}

/// Default beta in the k1 upper bound: midpoint of the admissible interval.
pub fn default_beta(alpha: f64, d: usize) -> f64 {
    let lo = (-alpha + d as f64 / 2.0).max(0.0);
    lo + (alpha + 1.0 - d as f64 / 2.0).min(1.0) / 2.0
}

/// rho (2 pi)^{-d/2} + C_{alpha,beta,d} s^{-beta}.
pub fn k1_upper(s: f64, spec: &NoiseSpec, beta: f64) -> Result<f64> {
    check_s(s)?;
    if 2.0 * (spec.alpha + beta) <= spec.d as f64 {
        return domain("beta too small: the lattice sum in the constant diverges");
    }
    let sums = LatticeSums::new(spec)?;
    let lat = sums.sum_nonzero(|q| q.powf(-beta))?;
    let c = beta.powf(beta) * (-beta).exp() * lat;
    Ok(sums.theta0() + c * s.powf(-beta))
}

/// C_{alpha,d} = (2 pi)^{-d/2} sum_{k != 0} |k|^{-2 alpha - 2}.
pub fn k1_integral_constant(spec: &NoiseSpec) -> Result<f64> {
    spec.require_dalang()?;
    LatticeSums::new(spec)?.sum_nonzero(|q| 1.0 / q)
}

pub fn holder_exponents(alpha: f64, d: usize) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < d as f64 / 2.0) {
        return domain(format!("Hoelder exponents need alpha in (0, d/2), got {alpha}"));
    }
    let e = 2.0 * alpha + 2.0 - d as f64;
    Ok((e / 4.0, e / 2.0))
}

/// J0^2 + (1/2) lambda^{-2} c_eps^d C_mu^2 exp(C_f t / 2).
pub fn lower_bound_second_moment(
    t: f64,
    eps: f64,
    c_f: f64,
    c_mu: f64,
    lambda: f64,
    d: usize,
    j0: f64,
) -> Result<f64> {
    if !(eps > 0.0 && t >= eps) {
        return domain(format!("need t >= eps > 0, got t={t}, eps={eps}"));
    }
    if !(c_f > 0.0) {
        return domain(format!("C_f must be > 0, got {c_f}"));
    }
    if lambda == 0.0 {
        return domain("lambda must be nonzero");
    }
    let (c_eps, _) = crate::bridge::comparison_constants(eps)?;
    Ok(j0 * j0 + 0.5 / (lambda * lambda) * c_eps.powi(d as i32) * c_mu * c_mu * (c_f * t / 2.0).exp())
}

/// sqrt(2) J0 [H_{4 lambda sqrt p}(t)]^{1/2}, with H from the renewal equation.
pub fn p_moment_upper(j0: f64, t: f64, p: f64, spec: &NoiseSpec, dt: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return domain(format!("p must be >= 2, got {p}"));
    }
    spec.require_dalang()?;
    if t == 0.0 {
        return Ok(2f64.sqrt() * j0);
    }
    check_s(t)?;
    let lam = 4.0 * spec.lambda * p.sqrt();
    // the implicit first cell needs lambda^2 A_0 well below 1
    let mut n = (t / dt).ceil().max(1.0) as usize;
    while lam * lam * ConvolutionWeights::new(spec, t / n as f64, 1)?.a[0] > 0.5 {
        if n > 1 << 20 {
            return Err(Error::Numeric(format!("no workable time step for lambda = {lam}")));
        }
        n *= 2;
    }
    let h = h_lambda_volterra(spec, lam, &uniform_grid(t, n))?;
    Ok(2f64.sqrt() * j0 * h[n].sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(d: usize, a: f64, rho: f64) -> NoiseSpec {
        NoiseSpec::new(d, a, rho, 1.0).unwrap()
    }

    #[test]
    fn k1_limits() {
        let s = spec(1, 0.3, 2.0);
        let v = k1(200.0, &s, 20).unwrap();
        assert!((v - 2.0 / TAU.sqrt()).abs() < 1e-15);
        assert!(k1(0.0, &s, 20).is_err());
        assert!(k1(0.5, &s, 20).unwrap() > k1(1.0, &s, 20).unwrap());
    }

    #[test]
    fn k2_scaling_and_constant() {
        for (d, a) in [(1usize, 0.3), (2, 0.5), (3, 0.9)] {
            let q = k2_constant(d, a).unwrap();
            let c = k2_constant_closed(d, a);
            assert!((q / c - 1.0).abs() < 1e-10, "d={d} a={a}: {q} vs {c}");
        }
        let r = k2(2.0, 1.0, 2).unwrap() / k2(1.0, 1.0, 2).unwrap();
        assert!((r - 1.0).abs() < 1e-14);
        let r = k2(2.0, 0.3, 1).unwrap() / k2(1.0, 0.3, 1).unwrap();
        assert!((r - 2f64.powf(-0.2)).abs() < 1e-14);
    }

    #[test]
    fn power_moment_series_matches_direct() {
        for p in [-0.2, 0.4, -0.7] {
            for h in [0.1, 0.3, 0.49] {
                let direct = integrate(|v: f64| v * (1.0 + v).powf(p), 0.0, h, TIGHT).unwrap().value;
                assert!((moment1_power(h, p) - direct).abs() < 1e-15, "p={p} h={h}");
            }
        }
        for x in [0.05, 0.099, 0.1, 2.0] {
            let direct = integrate(|u: f64| u * (-u * x).exp(), 0.0, 1.0, TIGHT).unwrap().value;
            assert!((g2(x) - direct).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn h_rows_start_at_one_and_zero() {
        let t = HnTable::new(&spec(1, 0.3, 1.0), 3, &uniform_grid(1.0, 50)).unwrap();
        assert!(t.values[0].iter().all(|&v| v == 1.0));
        for n in 1..=3 {
            assert_eq!(t.values[n][0], 0.0);
        }
    }

    #[test]
    fn dalang_refused() {
        let s = spec(3, 0.4, 1.0);
        assert!(matches!(HnTable::new(&s, 2, &uniform_grid(1.0, 10)), Err(Error::Dalang { .. })));
    }

    #[test]
    fn holder_examples() {
        let (b1, b2) = holder_exponents(0.3, 1).unwrap();
        assert!((b1 - 0.4).abs() < 1e-15 && (b2 - 0.8).abs() < 1e-15);
        assert!(holder_exponents(0.5, 1).is_err());
    }

    #[test]
    fn h_lambda_small_coupling() {
        let s = spec(1, 0.3, 1.0);
        let h = h_lambda(&s, 2.0, 1e-6, 1e-14, 0.02).unwrap();
        assert!((h.value - 1.0).abs() < 1e-9);
        assert_eq!(h_lambda(&s, 0.0, 1.0, 1e-14, 0.02).unwrap().value, 1.0);
    }

    #[test]
    fn p_moment_domain() {
        let s = spec(1, 0.3, 1.0);
        assert!(p_moment_upper(1.0, 1.0, 1.5, &s, 0.01).is_err());
    }
}
