//! Exponential-Euler spectral solver for the mild equation
//! u(t) = J0(t) + lambda int_0^t P_{t-s}(u(s) dW(s)).
//!
//! The state is the coefficient vector of u on the box |k|_inf <= K. One step is
//! u <- e^{-|k|^2 dt/2} (u + lambda P_K(u dW)), where dW is drawn on the same modes
//! as the solver, so the discrete Ito isometry is exact.

use log::debug;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::covariance::{NoiseSpec, SpectralWeights};
use crate::error::{domain, Error, Result};
use crate::heat_kernel::{KernelConfig, TorusPoint};
use crate::lattice::{norm_sq, ModeLattice};
use crate::noise_field::{NoiseIncrement, NoiseSampler};
use crate::rng::stream_rng;
use crate::spectral::{fast_len, GridFft};

/// Finite nonnegative initial measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialMeasure {
    /// total mass spread uniformly
    Uniform { mass: f64 },
    /// density sampled on the n^d grid x_j = -pi + 2 pi j / n (row-major)
    Density { grid_n: usize, values: Vec<f64> },
    Atoms { atoms: Vec<(Vec<f64>, f64)> },
    /// point mass at x0; the solver starts from J0(t0) at time t0
    Delta { x0: Vec<f64>, t0: f64 },
}

impl InitialMeasure {
    /// Uniform measure with density (2 pi)^{-d}, i.e. unit mass.
    pub fn normalized_uniform() -> Self {
        Self::Uniform { mass: 1.0 }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            Self::Uniform { mass } => {
                if !(*mass >= 0.0 && mass.is_finite()) {
                    return domain(format!("uniform mass must be finite and >= 0, got {mass}"));
                }
            }
            Self::Density { grid_n, values } => {
                if *grid_n == 0 || values.len() != grid_n.pow(d as u32) {
                    return domain(format!("density has {} values, expected {grid_n}^{d}", values.len()));
                }
                if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return domain("density values must be finite and >= 0");
                }
            }
            Self::Atoms { atoms } => {
                for (x, m) in atoms {
                    if x.len() != d || x.iter().any(|v| !v.is_finite()) {
                        return domain(format!("atom location {x:?} is not a point of the {d}-torus"));
                    }
                    if !(*m >= 0.0 && m.is_finite()) {
                        return domain(format!("atom mass must be finite and >= 0, got {m}"));
                    }
                }
            }
            Self::Delta { x0, t0 } => {
                if x0.len() != d || x0.iter().any(|v| !v.is_finite()) {
                    return domain(format!("delta location {x0:?} is not a point of the {d}-torus"));
                }
                if !(*t0 > 0.0 && t0.is_finite()) {
                    return domain(format!("delta smoothing time must be > 0, got {t0}"));
                }
            }
        }
        Ok(())
    }

    /// C_mu, the total mass.
    pub fn total_mass(&self, d: usize) -> f64 {
        match self {
            Self::Uniform { mass } => *mass,
            Self::Density { grid_n, values } => values.iter().sum::<f64>() * (TAU / *grid_n as f64).powi(d as i32),
            Self::Atoms { atoms } => atoms.iter().map(|a| a.1).sum(),
            Self::Delta { .. } => 1.0,
        }
    }

    /// Upper bound on the density, if it has one.
    pub fn sup_density(&self, d: usize) -> Option<f64> {
        match self {
            Self::Uniform { mass } => Some(mass * TAU.powi(-(d as i32))),
            Self::Density { values, .. } => Some(values.iter().cloned().fold(0.0, f64::max)),
            _ => None,
        }
    }

    /// Time at which stepping begins: singular measures are first smoothed by the heat flow.
    pub fn start_time(&self, dt: f64) -> f64 {
        match self {
            Self::Delta { t0, .. } => *t0,
            Self::Atoms { .. } => dt,
            _ => 0.0,
        }
    }

    /// Coefficients of J0(t, .) on `lattice`.
    pub fn coefficients(&self, lattice: &ModeLattice, t: f64) -> Result<Vec<Complex64>> {
        let d = lattice.d;
        self.validate(d)?;
        let c = TAU.powi(-(d as i32));
        let mut out = vec![Complex64::default(); lattice.len()];
        let mut k = vec![0i64; d];
        let point_mass = |out: &mut [Complex64], y: &[f64], m: f64, k: &mut [i64]| {
            for (i, o) in out.iter_mut().enumerate() {
                lattice.mode(i, k);
                let ph: f64 = -k.iter().zip(y).map(|(&a, b)| a as f64 * b).sum::<f64>();
                *o += Complex64::from_polar(m * c * (-norm_sq(k) * t / 2.0).exp(), ph);
            }
        };
        match self {
            Self::Uniform { mass } => {
                let zero = lattice.index(&vec![0; d]).expect("origin");
                out[zero] = Complex64::new(mass * c, 0.0);
            }
            Self::Atoms { atoms } => {
                for (y, m) in atoms {
                    point_mass(&mut out, y, *m, &mut k);
                }
            }
            Self::Delta { x0, .. } => point_mass(&mut out, x0, 1.0, &mut k),
            Self::Density { grid_n, values } => {
                let n = *grid_n;
                let own = ModeLattice::new(d, (n - 1) / 2);
                let mut fft = GridFft::new(n, d);
                let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                let mut a = vec![Complex64::default(); own.len()];
                fft.analyze(&own, &mut buf, &mut a);
                for (i, o) in out.iter_mut().enumerate() {
                    lattice.mode(i, &mut k);
                    if let Some(j) = own.index(&k) {
                        *o = a[j] * (-norm_sq(&k) * t / 2.0).exp();
                    }
                }
            }
        }
        Ok(out)
    }
}

/// J0(t, x) = int G(t, x - y) mu(dy).
pub fn j0(t: f64, x: &TorusPoint, mu: &InitialMeasure, cfg: &KernelConfig) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("J0 needs t > 0, got {t}"));
    }
    let d = x.dim();
    mu.validate(d)?;
    let diff = |y: &[f64]| -> Vec<f64> { x.coords().iter().zip(y).map(|(a, b)| a - b).collect() };
    Ok(match mu {
        InitialMeasure::Uniform { mass } => mass * TAU.powi(-(d as i32)),
        InitialMeasure::Atoms { atoms } => atoms.iter().map(|(y, m)| m * cfg.g(t, &diff(y))).sum(),
        InitialMeasure::Delta { x0, .. } => cfg.g(t, &diff(x0)),
        InitialMeasure::Density { grid_n, .. } => {
            let lattice = ModeLattice::new(d, (grid_n - 1) / 2);
            eval_at(&lattice, &mu.coefficients(&lattice, t)?, x.coords())
        }
    })
}

/// Real part of sum_k a_k e^{ik.x}.
pub fn eval_at(lattice: &ModeLattice, coeffs: &[Complex64], x: &[f64]) -> f64 {
    let mut k = vec![0i64; lattice.d];
    let mut s = 0.0;
    for (i, a) in coeffs.iter().enumerate() {
        lattice.mode(i, &mut k);
        let ph: f64 = k.iter().zip(x).map(|(&a, b)| a as f64 * b).sum();
        s += a.re * ph.cos() - a.im * ph.sin();
    }
    s
}

/// Which Fourier weights drive the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModes {
    #[default]
    Full,
    /// only the k = 0 weight: spatially constant noise
    ConstantOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid_n: usize,
    pub mode_k: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "yes")]
    pub dealias: bool,
    pub spec: NoiseSpec,
    /// store every this many steps in a trajectory (0: only the first and last)
    #[serde(default)]
    pub save_every: usize,
    #[serde(default)]
    pub noise_modes: NoiseModes,
}

fn yes() -> bool {
    true
}

impl SolverConfig {
    pub fn new(spec: NoiseSpec, grid_n: usize, mode_k: usize, dt: f64, t_end: f64) -> Result<Self> {
        let c = Self { grid_n, mode_k, dt, t_end, dealias: true, spec, save_every: 0, noise_modes: NoiseModes::Full };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate_noise()?;
        if self.grid_n < 2 * self.mode_k + 1 {
            return Err(Error::Aliasing { grid_n: self.grid_n, mode_k: self.mode_k });
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return domain(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return domain(format!("horizon {} shorter than dt {}", self.t_end, self.dt));
        }
        Ok(())
    }

    pub fn weights(&self) -> SpectralWeights {
        match self.noise_modes {
            NoiseModes::Full => SpectralWeights::new(&self.spec, self.mode_k),
            NoiseModes::ConstantOnly => SpectralWeights::constant_only(&self.spec, self.mode_k),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// u(t_n, .) on the grid_n^d grid, row-major
    pub fields: Vec<Vec<f64>>,
    pub seed: u64,
    pub config: SolverConfig,
    /// grid values below zero, summed over stored slices
    pub negative_values: usize,
    pub max_imag_residue: f64,
}

/// Per-thread scratch for stepping.
#[derive(Debug, Clone)]
pub struct Workspace {
    fft: GridFft,
    out_fft: GridFft,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    prod: Vec<Complex64>,
    out: Vec<Complex64>,
    pub noise: Vec<Complex64>,
}

/// Prepared solver: weights, decay factors, and noise amplitudes.
#[derive(Debug, Clone)]
pub struct Solver {
    pub config: SolverConfig,
    pub lattice: ModeLattice,
    decay: Vec<f64>,
    sampler: NoiseSampler,
    work_n: usize,
}

impl Solver {
    pub fn new(config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        if !config.spec.dalang() {
            return Err(Error::Dalang { lhs: 2.0 * (config.spec.alpha + 1.0), d: config.spec.d });
        }
        let weights = config.weights();
        let lattice = weights.lattice.clone();
        let decay = lattice.modes().map(|k| (-norm_sq(&k) * config.dt / 2.0).exp()).collect();
        let sampler = NoiseSampler::new(&config.spec, &weights, config.dt, config.grid_n)?;
        let work_n = if config.dealias { fast_len(3 * config.mode_k + 1) } else { config.grid_n };
        Ok(Self { config: config.clone(), lattice, decay, sampler, work_n })
    }

    pub fn workspace(&self) -> Workspace {
        let d = self.lattice.d;
        let fft = GridFft::new(self.work_n, d);
        let out_fft = GridFft::new(self.config.grid_n, d);
        let m = fft.len();
        let n = out_fft.len();
        Workspace {
            fft,
            out_fft,
            a: vec![Complex64::default(); m],
            b: vec![Complex64::default(); m],
            prod: vec![Complex64::default(); self.lattice.len()],
            out: vec![Complex64::default(); n],
            noise: vec![Complex64::default(); self.lattice.len()],
        }
    }

    /// Starting time and J0 coefficients for `mu`.
    pub fn initial(&self, mu: &InitialMeasure) -> Result<(f64, Vec<Complex64>)> {
        let t0 = mu.start_time(self.config.dt);
        Ok((t0, mu.coefficients(&self.lattice, t0)?))
    }

    /// Noise coefficients for (seed, path, step) into `ws.noise`.
    pub fn draw_noise(&self, ws: &mut Workspace, seed: u64, path: u64, step: u64) {
        let mut rng = stream_rng(seed, path, step);
        self.sampler.sample_coefficients(&mut rng, &mut ws.noise);
    }

    /// One exponential-Euler step in coefficient space, with noise taken from `ws.noise`.
    pub fn step_coeffs(&self, ws: &mut Workspace, u: &mut [Complex64]) {
        let lambda = self.config.spec.lambda;
        if lambda != 0.0 {
            ws.fft.synthesize(&self.lattice, u, &mut ws.a);
            ws.fft.synthesize(&self.lattice, &ws.noise, &mut ws.b);
            for (x, y) in ws.a.iter_mut().zip(&ws.b) {
                *x = Complex64::new(x.re * y.re, 0.0);
            }
            ws.fft.analyze(&self.lattice, &mut ws.a, &mut ws.prod);
            for ((v, p), g) in u.iter_mut().zip(&ws.prod).zip(&self.decay) {
                *v = (*v + p * lambda) * g;
            }
        } else {
            for (v, g) in u.iter_mut().zip(&self.decay) {
                *v *= g;
            }
        }
    }

    /// Runs one path from `(t0, u)`; `observe(step, t, coeffs)` is called at step 0 and after every step.
    pub fn run_path<F>(&self, ws: &mut Workspace, t0: f64, u: &mut [Complex64], seed: u64, path: u64, n_steps: usize, mut observe: F)
    where
        F: FnMut(usize, f64, &[Complex64]),
    {
        observe(0, t0, u);
        for n in 0..n_steps {
            self.draw_noise(ws, seed, path, n as u64);
            self.step_coeffs(ws, u);
            observe(n + 1, t0 + (n + 1) as f64 * self.config.dt, u);
        }
    }

    /// Grid values of the field on the output grid, plus the largest imaginary residue.
    pub fn field(&self, ws: &mut Workspace, u: &[Complex64]) -> (Vec<f64>, f64) {
        ws.out_fft.synthesize(&self.lattice, u, &mut ws.out);
        let im = ws.out.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        (ws.out.iter().map(|v| v.re).collect(), im)
    }

    /// Number of steps from `t0` to `t`; `t - t0` must be a whole number of steps.
    pub fn steps_to(&self, t0: f64, t: f64) -> Result<usize> {
        let x = (t - t0) / self.config.dt;
        let n = x.round();
        if n < 0.0 || (x - n).abs() > 1e-6 {
            return domain(format!("time {t} is not on the step grid from {t0} with dt {}", self.config.dt));
        }
        Ok(n as usize)
    }
}

/// One step on grid fields: analyze u and dW on the solver's modes, then step.
pub fn step(u: &[f64], dw: &NoiseIncrement, config: &SolverConfig) -> Result<Vec<f64>> {
    let solver = Solver::new(config)?;
    let n = config.grid_n;
    if dw.grid_n != n || dw.d != config.spec.d || u.len() != dw.values.len() {
        return domain("field, increment and config disagree on the grid");
    }
    let mut ws = solver.workspace();
    let mut analyze = |vals: &[f64]| {
        let mut buf: Vec<Complex64> = vals.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut c = vec![Complex64::default(); solver.lattice.len()];
        ws.out_fft.analyze(&solver.lattice, &mut buf, &mut c);
        c
    };
    let mut coeffs = analyze(u);
    let noise = analyze(&dw.values);
    ws.noise = noise;
    solver.step_coeffs(&mut ws, &mut coeffs);
    Ok(solver.field(&mut ws, &coeffs).0)
}

/// Single trajectory; deterministic given the seed (path index 0).
pub fn solve(config: &SolverConfig, mu: &InitialMeasure, seed: u64) -> Result<Trajectory> {
    solve_path(config, mu, seed, 0)
}

pub fn solve_path(config: &SolverConfig, mu: &InitialMeasure, seed: u64, path: u64) -> Result<Trajectory> {
    let solver = Solver::new(config)?;
    let (t0, mut u) = solver.initial(mu)?;
    if config.t_end <= t0 {
        return domain(format!("horizon {} does not exceed the start time {t0}", config.t_end));
    }
    let n_steps = ((config.t_end - t0) / config.dt).round().max(1.0) as usize;
    let mut ws = solver.workspace();
    let mut out_ws = solver.workspace();
    let mut traj = Trajectory {
        times: Vec::new(),
        fields: Vec::new(),
        seed,
        config: config.clone(),
        negative_values: 0,
        max_imag_residue: 0.0,
    };
    let every = config.save_every;
    solver.run_path(&mut ws, t0, &mut u, seed, path, n_steps, |n, t, c| {
        if n == 0 || n == n_steps || (every > 0 && n % every == 0) {
            let (f, im) = solver.field(&mut out_ws, c);
            let neg = f.iter().filter(|v| **v < 0.0).count();
            if neg > 0 {
                debug!("t={t:.4}: {neg} negative grid values");
            }
            traj.negative_values += neg;
            traj.max_imag_residue = traj.max_imag_residue.max(im);
            traj.times.push(t);
            traj.fields.push(f);
        }
    });
    Ok(traj)
}

/// Values u(t, x) for every path, time and point: result[path][i_t * points.len() + i_x].
///
/// Paths run in parallel; the output order does not depend on scheduling.
pub fn ensemble_values(
    config: &SolverConfig,
    mu: &InitialMeasure,
    seed: u64,
    n_paths: usize,
    times: &[f64],
    points: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let solver = Solver::new(config)?;
    let (t0, u0) = solver.initial(mu)?;
    let steps: Vec<usize> = times.iter().map(|&t| solver.steps_to(t0, t)).collect::<Result<_>>()?;
    let n_steps = steps.iter().cloned().max().unwrap_or(0);
    for p in points {
        if p.len() != config.spec.d {
            return domain("evaluation point has the wrong dimension");
        }
    }
    let np = points.len();
    let out = (0..n_paths as u64)
        .into_par_iter()
        .map_init(
            || solver.workspace(),
            |ws, path| {
                let mut u = u0.clone();
                let mut vals = vec![0.0; steps.len() * np];
                solver.run_path(ws, t0, &mut u, seed, path, n_steps, |n, _, c| {
                    for (it, _) in steps.iter().enumerate().filter(|(_, &s)| s == n) {
                        for (ix, x) in points.iter().enumerate() {
                            vals[it * np + ix] = eval_at(&solver.lattice, c, x);
                        }
                    }
                });
                vals
            },
        )
        .collect();
    Ok(out)
}
