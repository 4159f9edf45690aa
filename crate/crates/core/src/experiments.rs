//! Monte-Carlo and quadrature experiments: moments against their bounds, the
//! resolvent recursion in d = 1, the two-point function, the Feynman-Kac
//! second moment, ergodic averages, and empirical Hölder exponents.

use log::warn;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::covariance::{rho_star, CappedTable, NoiseSpec, SpectralWeights};
use crate::error::{domain, Result};
use crate::heat_kernel::{wrap, KernelConfig, TorusPoint};
use crate::lattice::norm_sq;
use crate::moment_calculus::{lower_bound_second_moment, p_moment_upper, uniform_grid, HnTable};
use crate::pam_solver::{ensemble_values, j0, InitialMeasure, Solver, SolverConfig};
use crate::rng::stream_rng;
use crate::spectral::GridFft;

// ---------------------------------------------------------------- statistics

/// Mean and standard error.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Delete-one jackknife standard error of g(mean).
pub fn jackknife_se<G: Fn(f64) -> f64>(v: &[f64], g: G) -> f64 {
    let n = v.len() as f64;
    if v.len() < 2 {
        return f64::NAN;
    }
    let total: f64 = v.iter().sum();
    let loo: Vec<f64> = v.iter().map(|x| g((total - x) / (n - 1.0))).collect();
    let m = loo.iter().sum::<f64>() / n;
    ((n - 1.0) / n * loo.iter().map(|x| (x - m).powi(2)).sum::<f64>()).sqrt()
}

// ---------------------------------------------------------------- moments

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub t: f64,
    pub x: Vec<f64>,
    pub p: f64,
    /// E|u|^p
    pub value: f64,
    pub std_err: f64,
    pub n_samples: usize,
    /// (E|u|^p)^{1/p} with its jackknife standard error
    pub norm: f64,
    pub norm_se: f64,
    pub j0: f64,
    /// p-th power of the moment upper bound
    pub upper_bound: Option<f64>,
    pub lower_bound: Option<f64>,
    pub upper_ok: Option<bool>,
    pub lower_ok: Option<bool>,
}

impl MomentEstimate {
    pub fn from_samples(t: f64, x: Vec<f64>, p: f64, samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return domain("need at least two samples");
        }
        let pow: Vec<f64> = samples.iter().map(|u| pow_abs(*u, p)).collect();
        let (value, std_err) = mean_se(&pow);
        Ok(Self {
            t,
            x,
            p,
            value,
            std_err,
            n_samples: samples.len(),
            norm: value.powf(1.0 / p),
            norm_se: jackknife_se(&pow, |m| m.powf(1.0 / p)),
            j0: f64::NAN,
            upper_bound: None,
            lower_bound: None,
            upper_ok: None,
            lower_ok: None,
        })
    }

    /// Within `k` standard errors of `target`.
    pub fn matches(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_err + 1e-12 * target.abs()
    }
}

fn pow_abs(u: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p >= 0.0 && p <= 64.0 {
        u.abs().powi(p as i32)
    } else {
        u.abs().powf(p)
    }
}

/// Inputs of the second-moment lower bound; only meaningful when f >= c_f > 0.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LowerBoundInputs {
    pub eps: f64,
    pub c_f: f64,
}

/// C_f = inf f for rho >= rho_star, from a grid estimate of rho_star.
pub fn lower_bound_inputs(spec: &NoiseSpec, eps: f64, grid_n: usize) -> Result<Option<LowerBoundInputs>> {
    let rs = rho_star(spec.d, spec.alpha, grid_n)?;
    let c_f = (spec.rho - rs.rho_star_est) * TAU.powi(-(spec.d as i32));
    Ok(if c_f > 0.0 { Some(LowerBoundInputs { eps, c_f }) } else { None })
}

/// Ensemble moments of u(t, x) for each (t, x, p), with the moment upper bound and,
/// when `lower` is given and p = 2, the second-moment lower bound.
pub fn mc_moments(
    config: &SolverConfig,
    mu: &InitialMeasure,
    p_list: &[f64],
    n_samples: usize,
    t_list: &[f64],
    x_list: &[Vec<f64>],
    seed: u64,
    lower: Option<LowerBoundInputs>,
) -> Result<Vec<MomentEstimate>> {
    let vals = ensemble_values(config, mu, seed, n_samples, t_list, x_list)?;
    let kc = KernelConfig::default();
    let d = config.spec.d;
    let c_mu = mu.total_mass(d);
    let np = x_list.len();
    let mut out = Vec::new();
    for (it, &t) in t_list.iter().enumerate() {
        for (ix, x) in x_list.iter().enumerate() {
            let samples: Vec<f64> = vals.iter().map(|v| v[it * np + ix]).collect();
            let jv = j0(t, &TorusPoint::new(x.clone())?, mu, &kc)?;
            for &p in p_list {
                let mut e = MomentEstimate::from_samples(t, x.clone(), p, &samples)?;
                e.j0 = jv;
                let ub = p_moment_upper(jv, t, p, &config.spec, (t / 400.0).min(0.01))?.powf(p);
                e.upper_bound = Some(ub);
                e.upper_ok = Some(e.value - 3.0 * e.std_err <= ub);
                if let (Some(lb), true) = (lower, p == 2.0) {
                    if t >= lb.eps {
                        let v = lower_bound_second_moment(t, lb.eps, lb.c_f, c_mu, config.spec.lambda, d, jv)?;
                        e.lower_bound = Some(v);
                        e.lower_ok = Some(e.value + 3.0 * e.std_err >= v);
                    }
                }
                out.push(e);
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- resolvent, d = 1

/// Fourier coefficients c_m of z -> f(z) in d = 1: f(z - z') = sum_m c_m e^{i m (z - z')}.
#[derive(Debug, Clone)]
pub struct PairKernel {
    m_max: i64,
    c: Vec<f64>,
}

impl PairKernel {
    pub fn from_spec(spec: &NoiseSpec, m_max: usize) -> Self {
        let m_max = m_max as i64;
        let c = (-m_max..=m_max)
            .map(|m| if m == 0 { spec.rho / TAU } else { (m.abs() as f64).powf(-2.0 * spec.alpha) / TAU })
            .collect();
        Self { m_max, c }
    }

    /// f identically equal to `c_f`.
    pub fn constant(c_f: f64) -> Self {
        Self { m_max: 0, c: vec![c_f] }
    }

    pub fn get(&self, m: i64) -> f64 {
        if m.abs() > self.m_max {
            0.0
        } else {
            self.c[(m + self.m_max) as usize]
        }
    }
}

/// One-dimensional finite measure as seen by the recursion.
#[derive(Debug, Clone)]
pub enum Measure1 {
    /// (location, mass)
    Atoms(Vec<(f64, f64)>),
    /// coefficients a_k = (2 pi)^{-1} int e^{-ikz} mu(dz) for |k| <= radius
    Finite { radius: i64, a: Vec<Complex64> },
}

impl Measure1 {
    pub fn from_initial(mu: &InitialMeasure) -> Result<Self> {
        Ok(match mu {
            InitialMeasure::Delta { x0, .. } => Self::Atoms(vec![(x0[0], 1.0)]),
            InitialMeasure::Atoms { atoms } => Self::Atoms(atoms.iter().map(|(x, m)| (x[0], *m)).collect()),
            InitialMeasure::Uniform { mass } => Self::Finite { radius: 0, a: vec![Complex64::new(mass / TAU, 0.0)] },
            InitialMeasure::Density { grid_n, .. } => {
                let r = ((grid_n - 1) / 2) as i64;
                let lat = crate::lattice::ModeLattice::new(1, r as usize);
                Self::Finite { radius: r, a: mu.coefficients(&lat, 0.0)? }
            }
        })
    }

    fn coeff(&self, k: i64) -> Complex64 {
        match self {
            Self::Atoms(atoms) => atoms.iter().map(|(y, m)| Complex64::from_polar(m / TAU, -(k as f64) * y)).sum(),
            Self::Finite { radius, a } => {
                if k.abs() > *radius {
                    Complex64::default()
                } else {
                    a[(k + radius) as usize]
                }
            }
        }
    }
}

/// Mode box |k|, |k'| <= K for functions of (z, z') on the 2-torus.
#[derive(Debug, Clone, Copy)]
struct PairBox {
    k: i64,
}

impl PairBox {
    fn side(&self) -> usize {
        (2 * self.k + 1) as usize
    }
    fn len(&self) -> usize {
        self.side() * self.side()
    }
    fn idx(&self, k: i64, kp: i64) -> Option<usize> {
        if k.abs() > self.k || kp.abs() > self.k {
            None
        } else {
            Some((k + self.k) as usize * self.side() + (kp + self.k) as usize)
        }
    }
    fn modes(&self) -> impl Iterator<Item = (usize, i64, i64)> + '_ {
        let s = self.side();
        (0..self.len()).map(move |i| (i, (i / s) as i64 - self.k, (i % s) as i64 - self.k))
    }
    fn eval(&self, w: &[Complex64], x: f64, xp: f64) -> f64 {
        let mut s = 0.0;
        for (i, k, kp) in self.modes() {
            let ph = k as f64 * x + kp as f64 * xp;
            s += w[i].re * ph.cos() - w[i].im * ph.sin();
        }
        s
    }
}

/// (1 - e^{-x}) / x
fn phi1(x: f64) -> f64 {
    if x < 1e-8 {
        1.0 - x / 2.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// int_0^delta e^{-p r - q (delta - r)} dr
fn exp_mix(p: f64, q: f64, delta: f64) -> f64 {
    (-p.min(q) * delta).exp() * phi1((p - q).abs() * delta) * delta
}

/// Settings of the spectral recursion for one (x0, x0') configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResolventGrid {
    /// mode cutoff K of the (k, k') box
    pub modes: usize,
    /// uniform time steps up to the largest requested time
    pub time_steps: usize,
    /// m-range of the exact first level for atomic data
    pub m_max: usize,
    /// points per axis of the (x, x') evaluation grid
    pub x_grid_n: usize,
    /// the bound is fitted where G G is at least this fraction of its largest value at that t
    #[serde(default = "default_fit_floor")]
    pub fit_floor: f64,
}

fn default_fit_floor() -> f64 {
    1e-2
}

impl Default for ResolventGrid {
    fn default() -> Self {
        Self { modes: 16, time_steps: 400, m_max: 1000, x_grid_n: 17, fit_floor: default_fit_floor() }
    }
}

/// Coefficients of L_1, ..., L_{n_max} at every time node for the pair (mu, mu').
struct PairRecursion {
    bx: PairBox,
    delta: f64,
    /// levels[n-1][node][mode]
    levels: Vec<Vec<Vec<Complex64>>>,
}

fn level_one(kernel: &PairKernel, a: &Measure1, b: &Measure1, bx: PairBox, delta: f64, nodes: usize, m_max: i64) -> Result<Vec<Vec<Complex64>>> {
    let mut w = vec![vec![Complex64::default(); bx.len()]; nodes + 1];
    match (a, b) {
        (Measure1::Atoms(aa), Measure1::Atoms(bb)) => {
            let kk = bx.k;
            let dvals: Vec<i64> = (-2 * kk..=2 * kk).collect();
            for &(y, wy) in aa {
                for &(yp, wyp) in bb {
                    let shift = y - yp;
                    // S[D][j] = sum_m c_m e^{i m shift} int_0^{t_j} e^{-(m-D/2)^2 s - (D^2/4)(t_j - s)} ds
                    let s_tab: Vec<Vec<Complex64>> = dvals
                        .par_iter()
                        .map(|&dd| {
                            let q = (dd * dd) as f64 / 4.0;
                            let eq = (-q * delta).exp();
                            let mut row = vec![Complex64::default(); nodes + 1];
                            for m in -m_max..=m_max {
                                let c = kernel.get(m);
                                if c == 0.0 {
                                    continue;
                                }
                                let p = (m as f64 - dd as f64 / 2.0).powi(2);
                                let ep = (-p * delta).exp();
                                let idelta = exp_mix(p, q, delta);
                                let cm = Complex64::from_polar(c, m as f64 * shift);
                                let mut i_acc = 0.0;
                                let mut e_acc = 1.0;
                                for r in row.iter_mut().skip(1) {
                                    i_acc = eq * i_acc + e_acc * idelta;
                                    e_acc *= ep;
                                    *r += cm * i_acc;
                                }
                            }
                            row
                        })
                        .collect();
                    let pref = wy * wyp / (TAU * TAU);
                    for (i, k, kp) in bx.modes() {
                        let dd = k - kp;
                        let decay_rate = (k * k + kp * kp) as f64 / 2.0 - (dd * dd) as f64 / 4.0;
                        let ph = Complex64::from_polar(pref, -(k as f64 * y + kp as f64 * yp));
                        let srow = &s_tab[(dd + 2 * kk) as usize];
                        for (j, wj) in w.iter_mut().enumerate().skip(1) {
                            let t = j as f64 * delta;
                            wj[i] += ph * (-decay_rate * t).exp() * srow[j];
                        }
                    }
                }
            }
        }
        (Measure1::Finite { radius: ra, .. }, Measure1::Finite { radius: rb, .. }) => {
            let (ra, rb) = (*ra, *rb);
            let rows: Vec<(usize, Vec<Complex64>)> = bx
                .modes()
                .collect::<Vec<_>>()
                .par_iter()
                .map(|&(i, k, kp)| {
                    let aa = (k * k + kp * kp) as f64 / 2.0;
                    let ea = (-aa * delta).exp();
                    let mut row = vec![Complex64::default(); nodes + 1];
                    let lo = (k - ra).max(-kp - rb);
                    let hi = (k + ra).min(-kp + rb);
                    for m in lo..=hi {
                        let c = kernel.get(m);
                        if c == 0.0 {
                            continue;
                        }
                        let coef = a.coeff(k - m) * b.coeff(kp + m) * c;
                        if coef == Complex64::default() {
                            continue;
                        }
                        let bb = (((k - m) * (k - m) + (kp + m) * (kp + m)) as f64) / 2.0;
                        let eb = (-bb * delta).exp();
                        let idelta = exp_mix(bb, aa, delta);
                        let mut i_acc = 0.0;
                        let mut e_acc = 1.0;
                        for r in row.iter_mut().skip(1) {
                            i_acc = ea * i_acc + e_acc * idelta;
                            e_acc *= eb;
                            *r += coef * i_acc;
                        }
                    }
                    (i, row)
                })
                .collect();
            for (i, row) in rows {
                for (j, v) in row.into_iter().enumerate() {
                    w[j][i] = v;
                }
            }
        }
        _ => return domain("the two measures must both be atomic or both have finite Fourier support"),
    }
    Ok(w)
}

/// w_n from w_{n-1}: exponential integrator with F = f * w_{n-1} interpolated linearly in time.
fn next_level(kernel: &PairKernel, prev: &[Vec<Complex64>], bx: PairBox, delta: f64) -> Vec<Vec<Complex64>> {
    let kk = bx.k;
    let forcing: Vec<Vec<Complex64>> = prev
        .par_iter()
        .map(|wp| {
            let mut f = vec![Complex64::default(); bx.len()];
            for (i, k, kp) in bx.modes() {
                let mut s = Complex64::default();
                for m in (k - kk)..=(k + kk) {
                    if let Some(j) = bx.idx(k - m, kp + m) {
                        let c = kernel.get(m);
                        if c != 0.0 {
                            s += wp[j] * c;
                        }
                    }
                }
                f[i] = s;
            }
            f
        })
        .collect();
    let coef: Vec<(f64, f64, f64)> = bx
        .modes()
        .map(|(_, k, kp)| {
            let lam = (k * k + kp * kp) as f64 / 2.0;
            let x = lam * delta;
            let e = (-x).exp();
            let (a, b) = if x < 1e-3 {
                (delta * (0.5 - x / 3.0 + x * x / 8.0), delta * (0.5 - x / 6.0 + x * x / 24.0))
            } else {
                let p1 = phi1(x);
                let p2 = (1.0 - e * (1.0 + x)) / (x * x);
                (delta * p2, delta * (p1 - p2))
            };
            (e, a, b)
        })
        .collect();
    let mut out = vec![vec![Complex64::default(); bx.len()]; prev.len()];
    for j in 1..prev.len() {
        let (lo, hi) = out.split_at_mut(j);
        let cur = &mut hi[0];
        let last = &lo[j - 1];
        for i in 0..bx.len() {
            let (e, a, b) = coef[i];
            cur[i] = last[i] * e + forcing[j - 1][i] * a + forcing[j][i] * b;
        }
    }
    out
}

impl PairRecursion {
    fn new(kernel: &PairKernel, a: &Measure1, b: &Measure1, t_max: f64, n_max: usize, grid: &ResolventGrid) -> Result<Self> {
        if n_max > 3 {
            return domain(format!("n_max = {n_max} refused: the recursion is limited to n <= 3"));
        }
        if !(t_max > 0.0 && t_max.is_finite()) || grid.time_steps == 0 {
            return domain("need t_max > 0 and at least one time step");
        }
        let bx = PairBox { k: grid.modes as i64 };
        let delta = t_max / grid.time_steps as f64;
        let mut levels = Vec::new();
        if n_max >= 1 {
            levels.push(level_one(kernel, a, b, bx, delta, grid.time_steps, grid.m_max as i64)?);
        }
        for _ in 2..=n_max {
            let nl = next_level(kernel, levels.last().expect("level"), bx, delta);
            levels.push(nl);
        }
        Ok(Self { bx, delta, levels })
    }

    fn node(&self, t: f64) -> Result<usize> {
        let x = t / self.delta;
        let j = x.round();
        if (x - j).abs() > 1e-6 || j < 1.0 || j as usize >= self.levels.first().map_or(usize::MAX, |l| l.len()) {
            return domain(format!("t = {t} is not a node of the resolvent time grid (step {})", self.delta));
        }
        Ok(j as usize)
    }

    fn value(&self, n: usize, j: usize, x: f64, xp: f64) -> f64 {
        self.bx.eval(&self.levels[n - 1][j], x, xp)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolventTable {
    pub n_max: usize,
    pub spec: NoiseSpec,
    /// rho used for the kernel: max(rho, rho_star)
    pub rho_hat: f64,
    pub t_list: Vec<f64>,
    pub x0_pairs: Vec<(f64, f64)>,
    pub x_grid: Vec<f64>,
    pub grid: ResolventGrid,
    /// values[n][((it * pairs + ip) * nx + ix) * nx + ixp]; n = 0 is G G
    pub values: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    /// max over the grid of (|L_n| / (G G h_n))^{1/n}, per n >= 1
    pub fitted_by_n: Vec<f64>,
    pub fitted_constant: f64,
    /// partial resolvent sum_{n <= n_max} lambda^{2n} L_n at the same indices
    pub k_partial: Vec<f64>,
}

/// L_0, ..., L_{n_max} on a grid of (t, x0, x0', x, x') in d = 1, and the fitted constant
/// of the bound L_n <= C^n G G h_n. The kernel uses rho_hat = max(rho, rho_star) so that
/// it dominates |f|; `rho_star_value` may be supplied to skip the grid search.
pub fn resolvent_ln(
    spec: &NoiseSpec,
    n_max: usize,
    t_list: &[f64],
    x0_pairs: &[(f64, f64)],
    grid: &ResolventGrid,
    rho_star_value: Option<f64>,
) -> Result<ResolventTable> {
    if spec.d != 1 {
        return domain("the resolvent recursion is implemented for d = 1 only");
    }
    if n_max > 3 {
        return domain(format!("n_max = {n_max} refused: the recursion is limited to n <= 3"));
    }
    spec.require_dalang()?;
    let rs = match rho_star_value {
        Some(v) => v,
        None => rho_star(1, spec.alpha, 256)?.rho_star_est,
    };
    let rho_hat = spec.rho.max(rs);
    let spec_hat = spec.with_rho(rho_hat);
    let kernel = PairKernel::from_spec(&spec_hat, grid.m_max.max(2 * grid.modes));
    let t_max = t_list.iter().cloned().fold(0.0, f64::max);
    let kc = KernelConfig::default();
    let nx = grid.x_grid_n;
    let x_grid: Vec<f64> = (0..nx).map(|j| crate::lattice::grid_coord(j, nx)).collect();
    // h grid refines the recursion grid so every node is shared
    let steps = grid.time_steps.max(1);
    let n_h = steps * ((t_max / 0.005).max(200.0) / steps as f64).ceil() as usize;
    let hn = HnTable::new(&spec_hat, n_max, &uniform_grid(t_max, n_h))?;
    let h: Vec<Vec<f64>> = (0..=n_max)
        .map(|n| t_list.iter().map(|&t| hn.index_of(t).map(|i| hn.values[n][i])).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut values = vec![Vec::new(); n_max + 1];
    let mut k_partial = Vec::new();
    for &(x0, x0p) in x0_pairs {
        let rec = PairRecursion::new(&kernel, &Measure1::Atoms(vec![(x0, 1.0)]), &Measure1::Atoms(vec![(x0p, 1.0)]), t_max, n_max, grid)?;
        for &t in t_list {
            let j = if n_max > 0 { rec.node(t)? } else { 0 };
            for &x in &x_grid {
                for &xp in &x_grid {
                    let g0 = kc.g(t, &[x - x0]) * kc.g(t, &[xp - x0p]);
                    values[0].push(g0);
                    let mut kp = g0;
                    for n in 1..=n_max {
                        let v = rec.value(n, j, x, xp);
                        values[n].push(v);
                        kp += spec.lambda.powi(2 * n as i32) * v;
                    }
                    k_partial.push(kp);
                }
            }
        }
    }
    // reorder from (pair, t, x, x') to (t, pair, x, x')
    let np = x0_pairs.len();
    let per = nx * nx;
    let reorder = |v: &Vec<f64>| -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for ip in 0..np {
            for it in 0..t_list.len() {
                let src = (ip * t_list.len() + it) * per;
                let dst = (it * np + ip) * per;
                out[dst..dst + per].copy_from_slice(&v[src..src + per]);
            }
        }
        out
    };
    let values: Vec<Vec<f64>> = values.iter().map(reorder).collect();
    let k_partial = reorder(&k_partial);
    let mut fitted_by_n = Vec::new();
    for n in 1..=n_max {
        let mut worst: f64 = 0.0;
        for it in 0..t_list.len() {
            let block = it * np * per..(it + 1) * np * per;
            let gmax = values[0][block.clone()].iter().cloned().fold(0.0, f64::max);
            for idx in block {
                if values[0][idx] < grid.fit_floor * gmax {
                    continue;
                }
                let r = values[n][idx].abs() / (values[0][idx] * h[n][it]);
                if r.is_finite() {
                    worst = worst.max(r);
                }
            }
        }
        fitted_by_n.push(worst.powf(1.0 / n as f64));
    }
    let fitted_constant = fitted_by_n.iter().cloned().fold(0.0, f64::max);
    Ok(ResolventTable {
        n_max,
        spec: *spec,
        rho_hat,
        t_list: t_list.to_vec(),
        x0_pairs: x0_pairs.to_vec(),
        x_grid,
        grid: *grid,
        values,
        h,
        fitted_by_n,
        fitted_constant,
        k_partial,
    })
}

/// L_1 for a constant covariance f = c_f at one point; equals c_f t G G exactly.
pub fn l1_constant_kernel(c_f: f64, t: f64, x0: f64, x: f64, x0p: f64, xp: f64, grid: &ResolventGrid) -> Result<f64> {
    let rec = PairRecursion::new(
        &PairKernel::constant(c_f),
        &Measure1::Atoms(vec![(x0, 1.0)]),
        &Measure1::Atoms(vec![(x0p, 1.0)]),
        t,
        1,
        grid,
    )?;
    Ok(rec.value(1, rec.node(t)?, x, xp))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoPoint {
    pub value: f64,
    /// J0(t,x) J0(t,x') and lambda^{2n} (mu x mu)(L_n), n = 1..n_max
    pub terms: Vec<f64>,
    /// |last term| / |value|
    pub truncation_ratio: f64,
    pub warning: Option<String>,
}

/// E[u(t,x) u(t,x')] = J0(t,x) J0(t,x') + sum_{n=1}^{n_max} lambda^{2n} (mu x mu)(L_n)(t, x, x'), d = 1.
pub fn two_point(t: f64, x: f64, xp: f64, mu: &InitialMeasure, spec: &NoiseSpec, n_max: usize, grid: &ResolventGrid) -> Result<TwoPoint> {
    if spec.d != 1 {
        return domain("two_point is implemented for d = 1 only");
    }
    spec.validate_noise()?;
    let kernel = PairKernel::from_spec(spec, grid.m_max.max(2 * grid.modes));
    two_point_with_kernel(t, x, xp, mu, spec.lambda, &kernel, n_max, grid)
}

/// Same as [`two_point`] with an explicit covariance kernel.
pub fn two_point_with_kernel(
    t: f64,
    x: f64,
    xp: f64,
    mu: &InitialMeasure,
    lambda: f64,
    kernel: &PairKernel,
    n_max: usize,
    grid: &ResolventGrid,
) -> Result<TwoPoint> {
    mu.validate(1)?;
    let kc = KernelConfig::default();
    let j = |y: f64| j0(t, &TorusPoint::new(vec![y])?, mu, &kc);
    let mut terms = vec![j(x)? * j(xp)?];
    if n_max > 0 {
        let m = Measure1::from_initial(mu)?;
        let rec = PairRecursion::new(kernel, &m, &m, t, n_max, grid)?;
        let node = rec.node(t)?;
        for n in 1..=n_max {
            terms.push(lambda.powi(2 * n as i32) * rec.value(n, node, x, xp));
        }
    }
    let value: f64 = terms.iter().sum();
    let truncation_ratio = if n_max == 0 { 0.0 } else { (terms[n_max] / value).abs() };
    let warning = if truncation_ratio > 0.1 {
        let msg = format!("truncation ratio {truncation_ratio:.3} exceeds 0.1 at n_max = {n_max}");
        warn!("{msg}");
        Some(msg)
    } else {
        None
    };
    Ok(TwoPoint { value, terms, truncation_ratio, warning })
}

// ---------------------------------------------------------------- Feynman-Kac

/// Covariance used along the Brownian pair.
#[derive(Debug, Clone)]
pub enum FkCovariance {
    Constant(f64),
    /// table of the truncated series or of the capped integral route
    Table(CappedTable),
}

impl FkCovariance {
    pub fn constant_for(spec: &NoiseSpec) -> Self {
        Self::Constant(spec.rho * spec.flat())
    }

    /// f_K on a fine grid, same truncation as the solver with cutoff `k_max`.
    pub fn truncated(spec: &NoiseSpec, k_max: usize, table_n: usize) -> Result<Self> {
        Ok(Self::Table(CappedTable::from_spectral(&SpectralWeights::new(spec, k_max), table_n)?))
    }

    /// Integral-route f with the diagonal capped one table cell from the origin.
    pub fn capped(spec: &NoiseSpec, table_n: usize) -> Result<Self> {
        Ok(Self::Table(CappedTable::build(spec, table_n)?))
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Table(t) => t.eval(x),
        }
    }

    pub fn cap_radius(&self) -> f64 {
        match self {
            Self::Constant(_) => 0.0,
            Self::Table(t) => t.cap_radius,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeynmanKacEstimate {
    pub estimate: MomentEstimate,
    pub cap_radius: f64,
    pub dt_bm: f64,
    /// exp(lambda^2 E int f) times the squared lower bound of the density, with f the
    /// covariance actually used along the paths
    pub jensen_floor: f64,
}

/// lambda^2 int_0^t E f(B_s - B~_s) ds for two Brownian motions from the same point,
/// summed over |k|_inf <= k_max: lambda^2 (2 pi)^{-d} (rho t + sum_{k != 0} |k|^{-2 alpha - 2} (1 - e^{-|k|^2 t})).
pub fn jensen_exponent(spec: &NoiseSpec, t: f64, k_max: usize) -> f64 {
    let lat = crate::lattice::ModeLattice::new(spec.d, k_max);
    let mut s = spec.rho * t;
    for k in lat.modes() {
        let q = norm_sq(&k);
        if q > 0.0 {
            s += q.powf(-spec.alpha - 1.0) * -(-q * t).exp_m1();
        }
    }
    spec.lambda * spec.lambda * TAU.powi(-(spec.d as i32)) * s
}

/// lambda^2 int_0^t E g(B_s - B~_s) ds for the multilinear interpolant g of a table,
/// from its exact Fourier coefficients D_k prod sinc^2(k_i h / 2), summed over |k_i| <= 2n.
pub fn table_jensen_exponent(table: &CappedTable, lambda: f64, t: f64) -> f64 {
    let (n, d) = (table.n, table.d);
    let mut fft = GridFft::new(n, d);
    let mut buf: Vec<Complex64> = table.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut buf);
    let scale = (n as f64).powi(-(d as i32));
    let h = TAU / n as f64;
    let r = 2 * n as i64;
    let side = (2 * r + 1) as usize;
    let total = side.pow(d as u32);
    let sinc2 = |k: i64| {
        if k == 0 {
            1.0
        } else {
            let a = k as f64 * h / 2.0;
            (a.sin() / a).powi(2)
        }
    };
    let sum: f64 = (0..total)
        .into_par_iter()
        .map(|mut flat| {
            let mut q = 0.0;
            let mut w = 1.0;
            let mut idx = 0usize;
            let mut parity = 0i64;
            for _ in 0..d {
                let k = (flat % side) as i64 - r;
                flat /= side;
                q += (k * k) as f64;
                w *= sinc2(k);
                idx = idx * n + k.rem_euclid(n as i64) as usize;
                parity += k;
            }
            // the weights are symmetric under permuting axes, so the order of decoding is immaterial
            let dk = buf[idx].re * scale * if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let time = if q == 0.0 { t } else { -(-q * t).exp_m1() / q };
            dk * w * time
        })
        .sum();
    lambda * lambda * sum
}

fn density_at(mu: &InitialMeasure, x: &[f64]) -> f64 {
    match mu {
        InitialMeasure::Uniform { mass } => mass * TAU.powi(-(x.len() as i32)),
        InitialMeasure::Density { grid_n, values } => {
            let t = CappedTable { d: x.len(), n: *grid_n, cap_radius: 0.0, values: values.clone() };
            t.eval(x)
        }
        _ => f64::NAN,
    }
}

/// E[phi(B_t) phi(B~_t) exp(lambda^2 int_0^t f(B_s - B~_s) ds)] for independent torus
/// Brownian motions from x, with left-point quadrature of the exponent.
pub fn feynman_kac_second_moment(
    spec: &NoiseSpec,
    mu: &InitialMeasure,
    cov: &FkCovariance,
    t: f64,
    x: &[f64],
    n_paths: usize,
    dt_bm: f64,
    seed: u64,
) -> Result<FeynmanKacEstimate> {
    let d = spec.d;
    if !matches!(mu, InitialMeasure::Uniform { .. } | InitialMeasure::Density { .. }) {
        return domain("the Feynman-Kac estimator needs a bounded density as initial data");
    }
    mu.validate(d)?;
    if x.len() != d {
        return domain("start point has the wrong dimension");
    }
    if !(t > 0.0 && dt_bm > 0.0) {
        return domain("need t > 0 and dt_bm > 0");
    }
    let n_steps = (t / dt_bm).round().max(1.0) as usize;
    let h = t / n_steps as f64;
    let sd = h.sqrt();
    let l2 = spec.lambda * spec.lambda;
    let samples: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut rng = stream_rng(seed, path, 0);
            let mut b = x.to_vec();
            let mut bt = x.to_vec();
            let mut diff = vec![0.0; d];
            let mut integral = 0.0;
            for _ in 0..n_steps {
                for i in 0..d {
                    diff[i] = b[i] - bt[i];
                }
                integral += cov.eval(&diff) * h;
                for i in 0..d {
                    let z1: f64 = rng.sample(StandardNormal);
                    let z2: f64 = rng.sample(StandardNormal);
                    b[i] = wrap(b[i] + sd * z1);
                    bt[i] = wrap(bt[i] + sd * z2);
                }
            }
            density_at(mu, &b) * density_at(mu, &bt) * (l2 * integral).exp()
        })
        .collect();
    let mut est = MomentEstimate::from_samples(t, x.to_vec(), 2.0, &samples)?;
    // samples are already u^2-type quantities
    let (m, se) = mean_se(&samples);
    est.value = m;
    est.std_err = se;
    est.norm = m.sqrt();
    est.norm_se = jackknife_se(&samples, f64::sqrt);
    est.j0 = j0(t, &TorusPoint::new(x.to_vec())?, mu, &KernelConfig::default())?;
    let inf_phi = match mu {
        InitialMeasure::Uniform { mass } => mass * TAU.powi(-(d as i32)),
        InitialMeasure::Density { values, .. } => values.iter().cloned().fold(f64::INFINITY, f64::min),
        _ => 0.0,
    };
    let exponent = match cov {
        FkCovariance::Constant(c) => l2 * c * t,
        FkCovariance::Table(tab) => table_jensen_exponent(tab, spec.lambda, t),
    };
    Ok(FeynmanKacEstimate { estimate: est, cap_radius: cov.cap_radius(), dt_bm: h, jensen_floor: inf_phi * inf_phi * exponent.exp() })
}

// ---------------------------------------------------------------- ergodic averages

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErgodicRow {
    pub t: f64,
    pub mean: f64,
    pub std_err: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErgodicReport {
    pub target: f64,
    pub rows: Vec<ErgodicRow>,
    pub n_paths: usize,
    pub dt_bm: f64,
    pub seed: u64,
    /// the largest t is within 3 SE of the target
    pub converged: bool,
    pub variance_decreasing: bool,
    pub pass: bool,
}

/// Time averages (1/t) int_0^t f(B_s - B~_s) ds against the space average rho (2 pi)^{-d}.
pub fn ergodic_average_check(spec: &NoiseSpec, cov: &FkCovariance, t_list: &[f64], n_paths: usize, dt_bm: f64, seed: u64) -> Result<ErgodicReport> {
    spec.validate_noise()?;
    if t_list.is_empty() || t_list.windows(2).any(|w| w[1] <= w[0]) || t_list[0] <= 0.0 {
        return domain("t_list must be positive and increasing");
    }
    let d = spec.d;
    let steps: Vec<usize> = t_list.iter().map(|t| (t / dt_bm).round().max(1.0) as usize).collect();
    let n_total = *steps.last().expect("nonempty");
    let sd = (2.0 * dt_bm).sqrt();
    let per_path: Vec<Vec<f64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut rng = stream_rng(seed, path, 1);
            // B - B~ is a Brownian motion run at twice the speed, started at 0
            let mut z = vec![0.0; d];
            let mut acc = 0.0;
            let mut out = Vec::with_capacity(steps.len());
            let mut next = 0;
            for n in 0..n_total {
                acc += cov.eval(&z) * dt_bm;
                for zi in z.iter_mut() {
                    let g: f64 = rng.sample(StandardNormal);
                    *zi = wrap(*zi + sd * g);
                }
                while next < steps.len() && steps[next] == n + 1 {
                    out.push(acc / (steps[next] as f64 * dt_bm));
                    next += 1;
                }
            }
            out
        })
        .collect();
    let rows: Vec<ErgodicRow> = t_list
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let v: Vec<f64> = per_path.iter().map(|p| p[i]).collect();
            let (mean, std_err) = mean_se(&v);
            ErgodicRow { t, mean, std_err, variance: std_err * std_err * n_paths as f64 }
        })
        .collect();
    let target = spec.rho * spec.flat();
    let last = rows.last().expect("nonempty");
    let converged = (last.mean - target).abs() <= 3.0 * last.std_err;
    let variance_decreasing = rows.windows(2).all(|w| w[1].variance <= w[0].variance * 1.1);
    Ok(ErgodicReport { target, rows, n_paths, dt_bm, seed, converged, variance_decreasing, pass: converged && variance_decreasing })
}

// ---------------------------------------------------------------- Hölder exponents

/// Fields needed for structure functions: per path, u(t0, .) and u(t0 + h_j, .) on a 1-D grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderSamples {
    pub grid_n: usize,
    pub time_lags: Vec<f64>,
    /// spatial lags in grid cells
    pub space_lags: Vec<usize>,
    pub base: Vec<Vec<f64>>,
    /// lagged[path][j]
    pub lagged: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    /// half-width of an approximate 95% interval from batch slopes
    pub ci: f64,
    pub lags: Vec<f64>,
    /// sqrt of the structure function at each lag
    pub root_sf: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub beta1_hat: SlopeFit,
    pub beta2_hat: SlopeFit,
    pub n_paths: usize,
}

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn fit_structure(lags: &[f64], sf_by_path: &[Vec<f64>], batches: usize) -> SlopeFit {
    let n = sf_by_path.len();
    let lx: Vec<f64> = lags.iter().map(|v| v.ln()).collect();
    let mean_sf = |range: std::ops::Range<usize>| -> Vec<f64> {
        let c = range.len() as f64;
        (0..lags.len()).map(|j| sf_by_path[range.clone()].iter().map(|p| p[j]).sum::<f64>() / c).collect()
    };
    let all = mean_sf(0..n);
    let root_sf: Vec<f64> = all.iter().map(|v| v.sqrt()).collect();
    let slope = ols_slope(&lx, &root_sf.iter().map(|v| v.ln()).collect::<Vec<_>>());
    let b = batches.min(n).max(1);
    let ci = if b >= 2 {
        let size = n / b;
        let slopes: Vec<f64> = (0..b)
            .map(|i| {
                let sf = mean_sf(i * size..(i + 1) * size);
                ols_slope(&lx, &sf.iter().map(|v| 0.5 * v.ln()).collect::<Vec<_>>())
            })
            .collect();
        let (_, se) = mean_se(&slopes);
        2.0 * se
    } else {
        f64::NAN
    };
    SlopeFit { slope, ci, lags: lags.to_vec(), root_sf }
}

/// Log-log regression of sqrt(mean |increment|^2) on the lag, in time and in space.
pub fn empirical_holder(samples: &HolderSamples, batches: usize) -> Result<HolderEstimate> {
    if samples.time_lags.len() < 4 || samples.space_lags.len() < 4 {
        return domain("need at least four time lags and four space lags");
    }
    let n = samples.grid_n;
    if samples.base.len() < 2 {
        return domain("need at least two paths");
    }
    let time_sf: Vec<Vec<f64>> = samples
        .base
        .iter()
        .zip(&samples.lagged)
        .map(|(b, lag)| lag.iter().map(|u| u.iter().zip(b).map(|(a, c)| (a - c).powi(2)).sum::<f64>() / n as f64).collect())
        .collect();
    let space_sf: Vec<Vec<f64>> = samples
        .base
        .iter()
        .map(|b| {
            samples
                .space_lags
                .iter()
                .map(|&m| (0..n).map(|j| (b[(j + m) % n] - b[j]).powi(2)).sum::<f64>() / n as f64)
                .collect()
        })
        .collect();
    let space_lags: Vec<f64> = samples.space_lags.iter().map(|&m| TAU * m as f64 / n as f64).collect();
    Ok(HolderEstimate {
        beta1_hat: fit_structure(&samples.time_lags, &time_sf, batches),
        beta2_hat: fit_structure(&space_lags, &space_sf, batches),
        n_paths: samples.base.len(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderSettings {
    pub mode_k: usize,
    pub grid_n: usize,
    pub dt: f64,
    pub t0: f64,
    /// time lags as multiples of dt
    pub time_lag_steps: Vec<usize>,
    pub space_lags: Vec<usize>,
    pub n_paths: usize,
}

impl Default for HolderSettings {
    fn default() -> Self {
        Self {
            mode_k: 128,
            grid_n: 512,
            dt: 2.5e-4,
            t0: 0.5,
            time_lag_steps: vec![4, 8, 16, 32, 64],
            space_lags: vec![4, 8, 16, 32, 64],
            n_paths: 64,
        }
    }
}

impl HolderSettings {
    /// Same physical lags with dt halved.
    pub fn halved_dt(&self) -> Self {
        let mut s = self.clone();
        s.dt /= 2.0;
        s.time_lag_steps = self.time_lag_steps.iter().map(|v| 2 * v).collect();
        s
    }
}

/// Runs the solver from uniform data and collects structure-function samples (d = 1).
pub fn holder_samples(spec: &NoiseSpec, settings: &HolderSettings, seed: u64) -> Result<HolderSamples> {
    if spec.d != 1 {
        return domain("the Hölder experiment is implemented for d = 1");
    }
    let max_lag = settings.time_lag_steps.iter().cloned().max().unwrap_or(0);
    let n0 = (settings.t0 / settings.dt).round() as usize;
    let t_end = (n0 + max_lag) as f64 * settings.dt;
    let cfg = SolverConfig::new(*spec, settings.grid_n, settings.mode_k, settings.dt, t_end)?;
    let solver = Solver::new(&cfg)?;
    let mu = InitialMeasure::Uniform { mass: TAU };
    let (t_start, u0) = solver.initial(&mu)?;
    let res: Vec<(Vec<f64>, Vec<Vec<f64>>)> = (0..settings.n_paths as u64)
        .into_par_iter()
        .map_init(
            || (solver.workspace(), solver.workspace()),
            |(ws, ows), path| {
                let mut u = u0.clone();
                let mut base = Vec::new();
                let mut lagged = vec![Vec::new(); settings.time_lag_steps.len()];
                solver.run_path(ws, t_start, &mut u, seed, path, n0 + max_lag, |n, _, c| {
                    if n == n0 {
                        base = solver.field(ows, c).0;
                    } else if n > n0 {
                        for (j, &l) in settings.time_lag_steps.iter().enumerate() {
                            if n == n0 + l {
                                lagged[j] = solver.field(ows, c).0;
                            }
                        }
                    }
                });
                (base, lagged)
            },
        )
        .collect();
    let (base, lagged) = res.into_iter().unzip();
    Ok(HolderSamples {
        grid_n: settings.grid_n,
        time_lags: settings.time_lag_steps.iter().map(|&l| l as f64 * settings.dt).collect(),
        space_lags: settings.space_lags.clone(),
        base,
        lagged,
    })
}

/// Points x_j = -pi + 2 pi j / n as single-coordinate vectors.
pub fn grid_points_1d(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|j| vec![-PI + TAU * j as f64 / n as f64]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_of_identity_is_standard_error() {
        let v: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let (_, se) = mean_se(&v);
        assert!((jackknife_se(&v, |m| m) - se).abs() < 1e-12);
    }

    #[test]
    fn exp_mix_matches_quadrature() {
        for &(p, q) in &[(3.0, 1.0), (1.0, 3.0), (2.0, 2.0), (0.0, 5.0)] {
            let d = 0.7;
            let n = 20000;
            let h = d / n as f64;
            let num: f64 = (0..n).map(|i| {
                let r = (i as f64 + 0.5) * h;
                (-p * r - q * (d - r)).exp() * h
            }).sum();
            assert!((exp_mix(p, q, d) - num).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_kernel_first_level_is_exact() {
        let g = ResolventGrid { modes: 16, time_steps: 100, m_max: 0, x_grid_n: 9, fit_floor: 1e-2 };
        let kc = KernelConfig::default();
        let (t, x0, x, x0p, xp) = (0.8, 0.3, -1.0, 2.0, 2.5);
        let v = l1_constant_kernel(0.7, t, x0, x, x0p, xp, &g).unwrap();
        let exact = 0.7 * t * kc.g(t, &[x - x0]) * kc.g(t, &[xp - x0p]);
        assert!((v / exact - 1.0).abs() < 1e-6, "{v} vs {exact}");
    }

    #[test]
    fn refuses_deep_recursion() {
        let s = NoiseSpec::new(1, 0.3, 1.0, 1.0).unwrap();
        let g = ResolventGrid::default();
        assert!(resolvent_ln(&s, 4, &[1.0], &[(0.0, 0.0)], &g, Some(1.25)).is_err());
    }

    #[test]
    fn two_point_constant_noise_closed_form() {
        // f constant: E[u u'] = J0 J0' e^{lambda^2 c t}, truncated after three terms
        let g = ResolventGrid { modes: 4, time_steps: 200, m_max: 0, x_grid_n: 9, fit_floor: 1e-2 };
        let mu = InitialMeasure::Uniform { mass: 1.0 };
        let c = 2.0 / TAU;
        let tp = two_point_with_kernel(1.0, 0.2, -0.4, &mu, 0.8, &PairKernel::constant(c), 3, &g).unwrap();
        let a = 0.64 * c;
        let series = (1.0 + a + a * a / 2.0 + a * a * a / 6.0) / (TAU * TAU);
        assert!((tp.value / series - 1.0).abs() < 1e-6, "{} vs {series}", tp.value);
    }

    #[test]
    fn two_point_constant_kernel_atoms() {
        // delta data: J0 J0' (1 + a t + (a t)^2 / 2) with a = lambda^2 c
        let g = ResolventGrid { modes: 24, time_steps: 400, m_max: 0, x_grid_n: 9, fit_floor: 1e-2 };
        let mu = InitialMeasure::Atoms { atoms: vec![(vec![0.3], 1.0)] };
        let c = 0.5;
        let t = 0.6;
        let tp = two_point_with_kernel(t, 0.9, -0.2, &mu, 1.0, &PairKernel::constant(c), 2, &g).unwrap();
        let a = c * t;
        let expect = tp.terms[0] * (1.0 + a + a * a / 2.0);
        assert!((tp.value / expect - 1.0).abs() < 1e-5, "{} vs {expect}", tp.value);
    }

    #[test]
    fn two_point_symmetric() {
        let s = NoiseSpec::new(1, 0.3, 1.0, 0.5).unwrap();
        let g = ResolventGrid { modes: 8, time_steps: 100, m_max: 200, x_grid_n: 9, fit_floor: 1e-2 };
        let mu = InitialMeasure::Delta { x0: vec![0.4], t0: 0.01 };
        let a = two_point(0.5, 0.1, 1.2, &mu, &s, 2, &g).unwrap();
        let b = two_point(0.5, 1.2, 0.1, &mu, &s, 2, &g).unwrap();
        assert!((a.value - b.value).abs() < 1e-12 * a.value.abs());
    }

    #[test]
    fn jensen_exponent_constant_part() {
        let s = NoiseSpec::new(1, 0.3, 2.0, 1.0).unwrap();
        let v = jensen_exponent(&s, 3.0, 0);
        assert!((v - 6.0 / TAU).abs() < 1e-14);
    }

    #[test]
    fn table_exponent_matches_mode_sum() {
        // interpolating the smooth f_K costs O(h^2) relative to the exact mode sum
        let s = NoiseSpec::new(1, 0.3, 1.0, 0.7).unwrap();
        let tab = CappedTable::from_spectral(&SpectralWeights::new(&s, 16), 512).unwrap();
        let a = table_jensen_exponent(&tab, 0.7, 0.5);
        let b = jensen_exponent(&s, 0.5, 16);
        assert!((a / b - 1.0).abs() < 2e-3, "{a} vs {b}");
    }

    #[test]
    fn table_exponent_constant_table() {
        let tab = CappedTable { d: 2, n: 8, cap_radius: 0.0, values: vec![0.3; 64] };
        assert!((table_jensen_exponent(&tab, 2.0, 1.5) - 4.0 * 0.3 * 1.5).abs() < 1e-12);
    }

    #[test]
    fn holder_needs_lags() {
        let s = HolderSamples { grid_n: 8, time_lags: vec![0.1, 0.2], space_lags: vec![1, 2, 3, 4], base: vec![vec![0.0; 8]; 2], lagged: vec![vec![vec![0.0; 8]; 2]; 2] };
        assert!(empirical_holder(&s, 2).is_err());
    }
}
