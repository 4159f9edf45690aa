//! Subcommand arguments and their implementations.

use clap::{Args, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::TAU;

use torus_pam::bridge::{check_large_time_bound, fit_image_sum_constant};
use torus_pam::covariance::{covariance_integral, covariance_spectral, rho_star, NoiseSpec, SpectralWeights};
use torus_pam::experiments::{
    empirical_holder, ergodic_average_check, feynman_kac_second_moment, holder_samples, lower_bound_inputs, mc_moments,
    mean_se, resolvent_ln, two_point, FkCovariance, HolderSettings, ResolventGrid, ResolventTable,
};
use torus_pam::heat_kernel::{kernel_sandwich_check, KernelConfig, TorusPoint};
use torus_pam::io::{parse_points, parse_value_list, FieldFile};
use torus_pam::moment_calculus::{gamma0, holder_exponents, uniform_grid, HnTable};
use torus_pam::noise_field::{constant_functional_check, empirical_covariance, NoiseSampler};
use torus_pam::pam_solver::{ensemble_values, j0, solve_path, InitialMeasure, NoiseModes, SolverConfig};
use torus_pam::rng::{stream_rng, StreamId};
use torus_pam::{Error, Result};

use crate::output::{Output, Table};

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Evaluate the torus heat kernel at (t, x) pairs
    KernelEval(KernelEvalArgs),
    /// Check the dual-series identity, the Gaussian sandwich and long-time flattening
    KernelVerify(KernelVerifyArgs),
    /// Evaluate the covariance by the spectral and the time-integral routes
    CovEval(CovEvalArgs),
    /// Grid estimate of the smallest rho making the covariance nonnegative
    CovRhoStar(CovRhoStarArgs),
    /// Write sampled noise increments as field files
    NoiseSample(NoiseSampleArgs),
    /// Empirical covariance of sampled increments against dt f_K
    NoiseVerify(NoiseVerifyArgs),
    /// Tabulate h_0 .. h_n on a uniform time grid
    MomentsTable(MomentsTableArgs),
    /// Solve lambda^2 Theta_gamma = 1 for gamma_0
    Gamma0(Gamma0Args),
    /// Randomized checks of the bridge comparison bounds
    BridgeVerify(BridgeVerifyArgs),
    /// Run one solver path and write the stored slices
    Simulate(SimulateArgs),
    /// Monte-Carlo moments against the upper and lower bounds
    McMoments(McMomentsArgs),
    /// Two-point function from the resolvent series (d = 1)
    TwoPoint(TwoPointArgs),
    /// L_0 .. L_n on a grid and the fitted constant of their bound (d = 1)
    Resolvent(ResolventArgs),
    /// Feynman-Kac estimate of the second moment
    FeynmanKac(FeynmanKacArgs),
    /// Time averages of f along a Brownian pair against the space average
    ErgodicCheck(ErgodicArgs),
    /// Empirical Hoelder exponents from structure functions (d = 1)
    Holder(HolderArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::KernelEval(_) => "kernel-eval",
            Self::KernelVerify(_) => "kernel-verify",
            Self::CovEval(_) => "cov-eval",
            Self::CovRhoStar(_) => "cov-rho-star",
            Self::NoiseSample(_) => "noise-sample",
            Self::NoiseVerify(_) => "noise-verify",
            Self::MomentsTable(_) => "moments-table",
            Self::Gamma0(_) => "gamma0",
            Self::BridgeVerify(_) => "bridge-verify",
            Self::Simulate(_) => "simulate",
            Self::McMoments(_) => "mc-moments",
            Self::TwoPoint(_) => "two-point",
            Self::Resolvent(_) => "resolvent",
            Self::FeynmanKac(_) => "feynman-kac",
            Self::ErgodicCheck(_) => "ergodic-check",
            Self::Holder(_) => "holder",
        }
    }

    /// Runs the command; `Ok(false)` means a verification failed.
    pub fn run(&self, seed: u64, out: &mut Output) -> Result<bool> {
        match self {
            Self::KernelEval(a) => kernel_eval(a, out),
            Self::KernelVerify(a) => kernel_verify(a, seed, out),
            Self::CovEval(a) => cov_eval(a, out),
            Self::CovRhoStar(a) => cov_rho_star(a, out),
            Self::NoiseSample(a) => noise_sample(a, seed, out),
            Self::NoiseVerify(a) => noise_verify(a, seed, out),
            Self::MomentsTable(a) => moments_table(a, out),
            Self::Gamma0(a) => gamma0_cmd(a, out),
            Self::BridgeVerify(a) => bridge_verify(a, seed, out),
            Self::Simulate(a) => simulate(a, seed, out),
            Self::McMoments(a) => mc_moments_cmd(a, seed, out),
            Self::TwoPoint(a) => two_point_cmd(a, seed, out),
            Self::Resolvent(a) => resolvent_cmd(a, out),
            Self::FeynmanKac(a) => feynman_kac(a, seed, out),
            Self::ErgodicCheck(a) => ergodic(a, seed, out),
            Self::Holder(a) => holder(a, seed, out),
        }
    }
}

// ---------------------------------------------------------------- shared argument groups

#[derive(Debug, Args, Serialize, Clone)]
pub struct NoiseArgs {
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = 0.3)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
}

impl NoiseArgs {
    fn spec(&self) -> Result<NoiseSpec> {
        let s = NoiseSpec { d: self.d, alpha: self.alpha, rho: self.rho, lambda: self.lambda };
        s.validate_noise()?;
        Ok(s)
    }
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 64)]
    pub grid_n: usize,
    #[arg(long, default_value_t = 16)]
    pub mode_k: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// keep every product mode instead of projecting on the padded grid
    #[arg(long)]
    pub no_dealias: bool,
    /// drive with the k = 0 mode only (spatially constant noise)
    #[arg(long)]
    pub constant_noise: bool,
}

impl SolverArgs {
    fn config(&self, spec: NoiseSpec, t_end: f64) -> Result<SolverConfig> {
        let mut c = SolverConfig::new(spec, self.grid_n, self.mode_k, self.dt, t_end)?;
        c.dealias = !self.no_dealias;
        if self.constant_noise {
            c.noise_modes = NoiseModes::ConstantOnly;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    Uniform,
    Delta,
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct InitialArgs {
    #[arg(long, value_enum, default_value_t = InitialKind::Uniform)]
    pub initial: InitialKind,
    /// total mass of uniform data
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    /// location of the point mass
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// smoothing time of the point mass
    #[arg(long, default_value_t = 0.01)]
    pub t0: f64,
}

impl InitialArgs {
    fn measure(&self, d: usize) -> Result<InitialMeasure> {
        let mu = match self.initial {
            InitialKind::Uniform => InitialMeasure::Uniform { mass: self.mass },
            InitialKind::Delta => {
                let x0 = match &self.x0 {
                    Some(s) => one_point(s, d)?,
                    None => vec![0.0; d],
                };
                InitialMeasure::Delta { x0, t0: self.t0 }
            }
        };
        mu.validate(d)?;
        Ok(mu)
    }
}

fn values(s: &str) -> Result<Vec<f64>> {
    parse_value_list(s)
}

fn one_point(s: &str, d: usize) -> Result<Vec<f64>> {
    let v = values(s)?;
    if v.len() != d {
        return Err(Error::Domain(format!("point {s:?} needs {d} coordinates")));
    }
    Ok(v)
}

fn fmt_point(x: &[f64]) -> String {
    x.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" ")
}

fn pass_str(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

// ---------------------------------------------------------------- heat kernel

#[derive(Debug, Args, Serialize)]
pub struct KernelEvalArgs {
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value = "0.1,1,10")]
    pub t_list: String,
    /// `x1,..,xd;y1,..,yd`; with d = 1 a plain list
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub points: String,
}

fn kernel_eval(a: &KernelEvalArgs, out: &mut Output) -> Result<bool> {
    let ts = values(&a.t_list)?;
    let pts = parse_points(&a.points, a.d)?;
    let kc = KernelConfig::default();
    let wide = KernelConfig { max_terms: 100_000, ..KernelConfig::default() };
    let mut t = Table::new(&["t", "x", "g", "g_images", "g_spectral", "log_g"]);
    for &tt in &ts {
        for p in &pts {
            let x = TorusPoint::new(p.clone())?;
            let g = torus_pam::heat_kernel::heat_kernel(tt, &x, &kc)?;
            let gi: f64 = x.coords().iter().map(|&v| wide.g1_images(tt, v)).product();
            let gs: f64 = x.coords().iter().map(|&v| wide.g1_spectral(tt, v)).product();
            t.push(vec![json!(tt), json!(fmt_point(x.coords())), json!(g), json!(gi), json!(gs), json!(kc.log_g(tt, x.coords()))]);
            println!("G({tt}, [{}]) = {g:.12e}", fmt_point(x.coords()));
        }
    }
    out.table("kernel", &t)?;
    Ok(true)
}

#[derive(Debug, Args, Serialize)]
pub struct KernelVerifyArgs {
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value = "0.1,1,10")]
    pub t_list: String,
    /// random points per time
    #[arg(long, default_value_t = 1000)]
    pub n_points: usize,
    /// tolerance of the image-sum vs cosine-series comparison
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

fn kernel_verify(a: &KernelVerifyArgs, seed: u64, out: &mut Output) -> Result<bool> {
    let ts = values(&a.t_list)?;
    let kc = KernelConfig::default();
    let wide = KernelConfig { max_terms: 100_000, ..KernelConfig::default() };
    let d = a.d;
    let theta = kc.theta(1.0, d)?;
    let mut tab = Table::new(&[
        "t", "n_points", "max_dual_diff", "dual_pass", "sandwich_violations", "flat_sup", "flat_bound", "flat_pass", "pass",
    ]);
    let mut all = true;
    for (i, &t) in ts.iter().enumerate() {
        let mut rng = stream_rng(seed, i as u64, 0);
        let mut pts: Vec<Vec<f64>> = vec![vec![0.0; d]];
        pts.extend((0..a.n_points).map(|_| (0..d).map(|_| -std::f64::consts::PI + TAU * rng.random::<f64>()).collect()));
        let mut dual: f64 = 0.0;
        let mut viol = 0usize;
        let mut flat: f64 = 0.0;
        for p in &pts {
            let x = TorusPoint::new(p.clone())?;
            let gi: f64 = p.iter().map(|&v| wide.g1_images(t, v)).product();
            let gs: f64 = p.iter().map(|&v| wide.g1_spectral(t, v)).product();
            dual = dual.max((gi - gs).abs());
            if !kernel_sandwich_check(t, &x, &kc)?.pass {
                viol += 1;
            }
            flat = flat.max((kc.g(t, p) - TAU.powi(-(d as i32))).abs());
        }
        let (fb, fp) = if t >= 1.0 {
            let b = theta * (-t / 2.0).exp();
            (json!(b), flat <= b)
        } else {
            (Value::Null, true)
        };
        let dp = dual <= a.tol;
        let pass = dp && viol == 0 && fp;
        all &= pass;
        println!(
            "t={t}: dual diff {dual:.2e} [{}], sandwich violations {viol} [{}], flattening [{}]",
            pass_str(dp),
            pass_str(viol == 0),
            pass_str(fp)
        );
        tab.push(vec![json!(t), json!(pts.len()), json!(dual), json!(dp), json!(viol), json!(flat), fb, json!(fp), json!(pass)]);
    }
    out.table("kernel_verify", &tab)?;
    Ok(all)
}

// ---------------------------------------------------------------- covariance

#[derive(Debug, Args, Serialize)]
pub struct CovEvalArgs {
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value = "0.1,0.5,1,2,3", allow_hyphen_values = true)]
    pub points: String,
}

fn cov_eval(a: &CovEvalArgs, out: &mut Output) -> Result<bool> {
    let spec = a.noise.spec()?;
    let pts = parse_points(&a.points, spec.d)?;
    let mut t = Table::new(&["x", "spectral", "integral", "abs_diff"]);
    for p in &pts {
        let x = TorusPoint::new(p.clone())?;
        let s = covariance_spectral(&spec, &x)?;
        let i = covariance_integral(&spec, x.coords())?;
        println!("f([{}]) = {s:.12e} (integral route {i:.12e})", fmt_point(x.coords()));
        t.push(vec![json!(fmt_point(x.coords())), json!(s), json!(i), json!((s - i).abs())]);
    }
    out.table("covariance", &t)?;
    Ok(true)
}

#[derive(Debug, Args, Serialize)]
pub struct CovRhoStarArgs {
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = 0.3)]
    pub alpha: f64,
    #[arg(long, default_value_t = 256)]
    pub grid_n: usize,
}

fn cov_rho_star(a: &CovRhoStarArgs, out: &mut Output) -> Result<bool> {
    let r = rho_star(a.d, a.alpha, a.grid_n)?;
    println!("rho_star ~ {:.6} (argmin {:?}); sufficient level {:.4}", r.rho_star_est, r.argmin, r.rho_sufficient);
    out.json("rho_star", &r)?;
    Ok(true)
}

// ---------------------------------------------------------------- noise

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldFormat {
    Bin,
    Csv,
}

fn write_field(out: &mut Output, stem: &str, f: &FieldFile, fmt: FieldFormat) -> Result<()> {
    match fmt {
        FieldFormat::Bin => out.bytes(&format!("{stem}.bin"), &f.encode())?,
        FieldFormat::Csv => out.bytes(&format!("{stem}.csv"), f.to_csv()?.as_bytes())?,
    };
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct NoiseSampleArgs {
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value_t = 33)]
    pub grid_n: usize,
    #[arg(long, default_value_t = 16)]
    pub mode_k: usize,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = FieldFormat::Bin)]
    pub field_format: FieldFormat,
}

fn noise_sample(a: &NoiseSampleArgs, seed: u64, out: &mut Output) -> Result<bool> {
    let spec = a.noise.spec()?;
    let w = SpectralWeights::new(&spec, a.mode_k);
    let mut s = NoiseSampler::new(&spec, &w, a.dt, a.grid_n)?;
    for step in 0..a.steps {
        let inc = s.sample(StreamId { seed, path: 0, step: step as u64 });
        write_field(out, &format!("noise_{step:05}"), &FieldFile::from_increment(&inc, seed), a.field_format)?;
    }
    println!("wrote {} increments on a {}^{} grid", a.steps, a.grid_n, spec.d);
    Ok(true)
}

#[derive(Debug, Args, Serialize)]
pub struct NoiseVerifyArgs {
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value_t = 33)]
    pub grid_n: usize,
    #[arg(long, default_value_t = 16)]
    pub mode_k: usize,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 10_000)]
    pub n_samples: usize,
    /// steps summed for the constant-functional variance
    #[arg(long, default_value_t = 10)]
    pub functional_steps: usize,
    #[arg(long, default_value_t = 4.0)]
    pub se_threshold: f64,
}

fn noise_verify(a: &NoiseVerifyArgs, seed: u64, out: &mut Output) -> Result<bool> {
    let spec = a.noise.spec()?;
    let w = SpectralWeights::new(&spec, a.mode_k);
    let cov = empirical_covariance(&spec, &w, a.dt, a.grid_n, a.n_samples, seed)?;
    let fun = constant_functional_check(&spec, &w, a.dt, a.grid_n, a.functional_steps, a.n_samples, seed ^ 0x5eed)?;
    let cov_ok = cov.max_dev_se <= a.se_threshold;
    let stat_ok = cov.stationarity_spread_se <= 2.0 * a.se_threshold;
    let mut t = Table::new(&["lag", "estimate", "dt_f_k"]);
    for (j, (e, r)) in cov.by_lag.iter().enumerate() {
        t.push(vec![json!(TAU * j as f64 / a.grid_n as f64), json!(e), json!(r)]);
    }
    out.table("covariance_by_lag", &t)?;
    out.json("noise_verify", &json!({ "covariance": cov, "covariance_pass": cov_ok, "stationarity_pass": stat_ok, "functional": fun }))?;
    println!("covariance: worst deviation {:.2} SE [{}]", cov.max_dev_se, pass_str(cov_ok));
    println!("stationarity spread {:.2} SE [{}]", cov.stationarity_spread_se, pass_str(stat_ok));
    println!("Var W(t,1) = {:.5} vs {:.5} (SE {:.2e}) [{}]", fun.variance, fun.target, fun.std_err, pass_str(fun.pass));
    Ok(cov_ok && stat_ok && fun.pass)
}

// ---------------------------------------------------------------- moment calculus

#[derive(Debug, Args, Serialize)]
pub struct MomentsTableArgs {
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value_t = 4)]
    pub n_max: usize,
    #[arg(long, default_value_t = 10.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1000)]
    pub n_t: usize,
}

fn moments_table(a: &MomentsTableArgs, out: &mut Output) -> Result<bool> {
    let spec = a.noise.spec()?;
    let h = HnTable::new(&spec, a.n_max, &uniform_grid(a.t_max, a.n_t))?;
    let mut cols = vec!["t".to_string()];
    cols.extend((0..=a.n_max).map(|n| format!("h_{n}")));
    let mut t = Table::new(&cols);
    let mut violations = 0;
    for (i, &tt) in h.t_grid.iter().enumerate() {
        let mut row = vec![json!(tt)];
        for n in 0..=a.n_max {
            row.push(json!(h.values[n][i]));
            if i > 0 && h.values[n][i] < h.values[n][i - 1] {
                violations += 1;
            }
        }
        t.push(row);
    }
    out.table("h_table", &t)?;
    out.json("h_summary", &json!({ "spec": spec, "n_max": a.n_max, "t_max": a.t_max, "n_t": a.n_t, "monotonicity_violations": violations }))?;
    println!("h_0..h_{} on {} points; monotonicity violations {violations} [{}]", a.n_max, a.n_t + 1, pass_str(violations == 0));
    Ok(violations == 0)
}

#[derive(Debug, Args, Serialize)]
pub struct Gamma0Args {
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

fn gamma0_cmd(a: &Gamma0Args, out: &mut Output) -> Result<bool> {
    let spec = a.noise.spec()?;
    let g = gamma0(spec.lambda, &spec)?;
    let ok = g.residual.abs() < a.tol;
    out.json("gamma0", &json!({ "spec": spec, "solve": g, "pass": ok }))?;
    println!("gamma0 = {:.10e}, residual {:.2e} [{}]", g.gamma0, g.residual, pass_str(ok));
    Ok(ok)
}

// ---------------------------------------------------------------- bridge

#[derive(Debug, Args, Serialize)]
pub struct BridgeVerifyArgs {
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    /// times of the long-time check (default: eps)
    #[arg(long)]
    pub t_list: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub n_samples: usize,
    /// horizon of the image-sum fit
    #[arg(long, default_value_t = 1.0)]
    pub t_max: f64,
}

fn bridge_verify(a: &BridgeVerifyArgs, seed: u64, out: &mut Output) -> Result<bool> {
    let kc = KernelConfig::default();
    let ts = match &a.t_list {
        Some(s) => values(s)?,
        None => vec![a.eps],
    };
    let mut reports = Vec::new();
    let mut ok = true;
    for (i, &t) in ts.iter().enumerate() {
        let r = check_large_time_bound(a.eps, t, a.d, a.n_samples, seed.wrapping_add(i as u64), &kc)?;
        println!(
            "large-time sandwich t={t}: {} violations (with the corrected lower constant: {}) [{}]",
            r.violations,
            r.violations_corrected.unwrap_or(0),
            pass_str(r.violations == 0)
        );
        ok &= r.violations == 0;
        reports.push(r);
    }
    let fit = fit_image_sum_constant(a.d, a.t_max, a.n_samples, seed, &kc)?;
    let refined = fit_image_sum_constant(a.d, a.t_max, 2 * a.n_samples, seed, &kc)?;
    let stable = fit.fitted_constant.is_finite() && (refined.fitted_constant / fit.fitted_constant - 1.0).abs() <= 0.2;
    println!("image-sum constant {:.4} (refined {:.4}) [{}]", fit.fitted_constant, refined.fitted_constant, pass_str(stable));
    out.json("bridge", &json!({ "large_time": reports, "image_sum": fit, "image_sum_refined": refined, "image_sum_stable": stable }))?;
    Ok(ok && stable)
}

// ---------------------------------------------------------------- solver

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub init: InitialArgs,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    /// store every this many steps (0: first and last only)
    #[arg(long, default_value_t = 0)]
    pub save_every: usize,
    #[arg(long, default_value_t = 0)]
    pub path: u64,
    #[arg(long, value_enum, default_value_t = FieldFormat::Bin)]
    pub field_format: FieldFormat,
}

fn simulate(a: &SimulateArgs, seed: u64, out: &mut Output) -> Result<bool> {
    let spec = a.noise.spec()?;
    let mut cfg = a.solver.config(spec, a.t_end)?;
    cfg.save_every = a.save_every;
    let mu = a.init.measure(spec.d)?;
    let traj = solve_path(&cfg, &mu, seed, a.path)?;
    for (i, f) in traj.fields.iter().enumerate() {
        let ff = FieldFile::new(spec.d, cfg.grid_n, cfg.dt, seed, f.clone())?;
        write_field(out, &format!("field_{i:05}"), &ff, a.field_format)?;
    }
    out.json(
        "trajectory",
        &json!({
            "config": traj.config, "initial": mu, "seed": seed, "path": a.path, "times": traj.times,
            "negative_values": traj.negative_values, "max_imag_residue": traj.max_imag_residue,
        }),
    )?;
    println!("{} slices up to t={:.4}; negative grid values {}", traj.times.len(), traj.times.last().unwrap_or(&0.0), traj.negative_values);
    Ok(true)
}

#[derive(Debug, Args, Serialize)]
pub struct McMomentsArgs {
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub init: InitialArgs,
    #[arg(long, default_value = "2")]
    pub p_list: String,
    #[arg(long, default_value_t = 1000)]
    pub n_samples: usize,
    #[arg(long, default_value = "0.5,1")]
    pub t_list: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub points: String,
    /// also check the second-moment lower bound (needs rho above rho_star)
    #[arg(long)]
    pub lower: bool,
    /// eps of the lower bound; defaults to the smallest t
    #[arg(long)]
    pub eps: Option<f64>,
}

fn mc_moments_cmd(a: &McMomentsArgs, seed: u64, out: &mut Output) -> Result<bool> {
    let spec = a.noise.spec()?;
    let ts = values(&a.t_list)?;
    let t_max = ts.iter().cloned().fold(0.0, f64::max);
    let cfg = a.solver.config(spec, t_max)?;
    let mu = a.init.measure(spec.d)?;
    let pts = parse_points(&a.points, spec.d)?;
    let ps = values(&a.p_list)?;
    let lower = if a.lower {
        let eps = a.eps.unwrap_or_else(|| ts.iter().cloned().fold(f64::INFINITY, f64::min));
        let li = lower_bound_inputs(&spec, eps, 256)?;
        if li.is_none() {
            println!("lower bound skipped: rho is below the grid estimate of rho_star");
        }
        li
    } else {
        None
    };
    let est = mc_moments(&cfg, &mu, &ps, a.n_samples, &ts, &pts, seed, lower)?;
    let mut t = Table::new(&[
        "t", "x", "p", "value", "std_err", "norm", "norm_se", "j0", "upper_bound", "lower_bound", "upper_ok", "lower_ok",
    ]);
    let mut ok = true;
    for e in &est {
        ok &= e.upper_ok.unwrap_or(true) && e.lower_ok.unwrap_or(true);
        t.push(vec![
            json!(e.t), json!(fmt_point(&e.x)), json!(e.p), json!(e.value), json!(e.std_err), json!(e.norm), json!(e.norm_se),
            json!(e.j0), json!(e.upper_bound), json!(e.lower_bound), json!(e.upper_ok), json!(e.lower_ok),
        ]);
        println!(
            "t={} x=[{}] p={}: E|u|^p = {:.6e} +- {:.1e}, upper {:.3e}{}",
            e.t,
            fmt_point(&e.x),
            e.p,
            e.value,
            e.std_err,
            e.upper_bound.unwrap_or(f64::NAN),
            e.lower_bound.map(|v| format!(", lower {v:.3e}")).unwrap_or_default()
        );
    }
    out.table("moments", &t)?;
    out.json("moments_summary", &json!({ "config": cfg, "initial": mu, "lower_inputs": lower, "pass": ok }))?;
    println!("bounds respected within 3 SE [{}]", pass_str(ok));
    Ok(ok)
}

// ---------------------------------------------------------------- resolvent

#[derive(Debug, Args, Serialize, Clone)]
pub struct GridArgs {
    #[arg(long, default_value_t = 16)]
    pub modes: usize,
    #[arg(long, default_value_t = 400)]
    pub time_steps: usize,
    #[arg(long, default_value_t = 1000)]
    pub m_max: usize,
    #[arg(long, default_value_t = 17)]
    pub x_grid_n: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub fit_floor: f64,
}

impl GridArgs {
    fn grid(&self) -> ResolventGrid {
        ResolventGrid { modes: self.modes, time_steps: self.time_steps, m_max: self.m_max, x_grid_n: self.x_grid_n, fit_floor: self.fit_floor }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TwoPointArgs {
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub init: InitialArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub x_prime: f64,
    #[arg(long, default_value_t = 3)]
    pub n_max: usize,
    /// Monte-Carlo paths for a solver comparison (0: none)
    #[arg(long, default_value_t = 0)]
    pub mc_paths: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}

fn two_point_cmd(a: &TwoPointArgs, seed: u64, out: &mut Output) -> Result<bool> {
    let spec = a.noise.spec()?;
    let mu = a.init.measure(spec.d)?;
    let tp = two_point(a.t, a.x, a.x_prime, &mu, &spec, a.n_max, &a.grid.grid())?;
    println!("E[u(t,x)u(t,x')] ~ {:.8e} (truncation ratio {:.2e})", tp.value, tp.truncation_ratio);
    let mut ok = true;
    let mut mc = Value::Null;
    if a.mc_paths > 0 {
        let cfg = a.solver.config(spec, a.t)?;
        let v = ensemble_values(&cfg, &mu, seed, a.mc_paths, &[a.t], &[vec![a.x], vec![a.x_prime]])?;
        let prod: Vec<f64> = v.iter().map(|r| r[0] * r[1]).collect();
        let (m, se) = mean_se(&prod);
        let tol = 3.0 * se + tp.terms.last().map_or(0.0, |l| l.abs());
        ok = (m - tp.value).abs() <= tol;
        println!("Monte Carlo {m:.8e} +- {se:.1e} [{}]", pass_str(ok));
        mc = json!({ "mean": m, "std_err": se, "n_paths": a.mc_paths, "config": cfg, "pass": ok });
    }
    out.json("two_point", &json!({ "spec": spec, "initial": mu, "t": a.t, "x": a.x, "x_prime": a.x_prime, "result": tp, "monte_carlo": mc }))?;
    Ok(ok)
}

#[derive(Debug, Args, Serialize)]
pub struct ResolventArgs {
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 3)]
    pub n_max: usize,
    /// times; each must be a node of the recursion grid
    #[arg(long, default_value = "0.25,0.5,1,2")]
    pub t_list: String,
    /// starting pairs `x0,x0';y0,y0'`
    #[arg(long, default_value = "0,0;0,1.5;0,3", allow_hyphen_values = true)]
    pub x0_pairs: String,
    /// repeat on a finer grid and require the fitted constant to move by at most 20%
    #[arg(long)]
    pub refine: bool,
}

fn resolvent_table(r: &ResolventTable) -> Table {
    let mut cols: Vec<String> = ["t", "x0", "x0_prime", "x", "x_prime"].iter().map(|s| s.to_string()).collect();
    cols.extend((0..=r.n_max).map(|n| format!("l_{n}")));
    cols.push("k_partial".into());
    let mut t = Table::new(&cols);
    let nx = r.x_grid.len();
    let np = r.x0_pairs.len();
    for (it, &tt) in r.t_list.iter().enumerate() {
        for (ip, &(x0, x0p)) in r.x0_pairs.iter().enumerate() {
            for (ix, &x) in r.x_grid.iter().enumerate() {
                for (jx, &xp) in r.x_grid.iter().enumerate() {
                    let idx = ((it * np + ip) * nx + ix) * nx + jx;
                    let mut row = vec![json!(tt), json!(x0), json!(x0p), json!(x), json!(xp)];
                    row.extend((0..=r.n_max).map(|n| json!(r.values[n][idx])));
                    row.push(json!(r.k_partial[idx]));
                    t.push(row);
                }
            }
        }
    }
    t
}

fn resolvent_cmd(a: &ResolventArgs, out: &mut Output) -> Result<bool> {
    let spec = a.noise.spec()?;
    let ts = values(&a.t_list)?;
    let pairs: Vec<(f64, f64)> = parse_points(&a.x0_pairs, 2)?.into_iter().map(|p| (p[0], p[1])).collect();
    let g = a.grid.grid();
    let r = resolvent_ln(&spec, a.n_max, &ts, &pairs, &g, None)?;
    let finite = r.values.iter().all(|v| v.iter().all(|x| x.is_finite())) && r.fitted_constant.is_finite();
    println!("fitted constant C = {:.5} (per level {:?}) with rho_hat = {:.4}", r.fitted_constant, r.fitted_by_n, r.rho_hat);
    let mut refined = Value::Null;
    let mut stable = true;
    if a.refine {
        let g2 = ResolventGrid { modes: g.modes * 3 / 2, time_steps: 2 * g.time_steps, x_grid_n: 2 * g.x_grid_n - 1, ..g };
        let r2 = resolvent_ln(&spec, a.n_max, &ts, &pairs, &g2, Some(r.rho_hat.max(spec.rho)))?;
        stable = (r2.fitted_constant / r.fitted_constant - 1.0).abs() <= 0.2;
        println!("refined grid: C = {:.5} [{}]", r2.fitted_constant, pass_str(stable));
        refined = json!({ "grid": g2, "fitted_by_n": r2.fitted_by_n, "fitted_constant": r2.fitted_constant, "stable": stable });
    }
    out.table("resolvent", &resolvent_table(&r))?;
    out.json(
        "resolvent_summary",
        &json!({
            "spec": spec, "rho_hat": r.rho_hat, "grid": g, "n_max": a.n_max, "fitted_by_n": r.fitted_by_n,
            "fitted_constant": r.fitted_constant, "finite": finite, "refined": refined,
        }),
    )?;
    Ok(finite && stable)
}

// ---------------------------------------------------------------- Feynman-Kac and ergodic averages

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceKind {
    /// f replaced by its mean rho (2 pi)^{-d}
    Constant,
    /// the mode-truncated series f_K, same as the solver
    Truncated,
    /// the full covariance, capped one table cell from the diagonal
    Capped,
}

#[derive(Debug, Args, Serialize)]
pub struct FeynmanKacArgs {
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub x: String,
    #[arg(long, default_value_t = 10_000)]
    pub n_paths: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub dt_bm: f64,
    #[arg(long, value_enum, default_value_t = CovarianceKind::Capped)]
    pub covariance: CovarianceKind,
    /// mode cutoff of the truncated series
    #[arg(long, default_value_t = 16)]
    pub modes: usize,
    #[arg(long, default_value_t = 256)]
    pub table_n: usize,
}

fn fk_covariance(kind: CovarianceKind, spec: &NoiseSpec, modes: usize, table_n: usize) -> Result<FkCovariance> {
    match kind {
        CovarianceKind::Constant => Ok(FkCovariance::constant_for(spec)),
        CovarianceKind::Truncated => FkCovariance::truncated(spec, modes, table_n),
        CovarianceKind::Capped => FkCovariance::capped(spec, table_n),
    }
}

fn feynman_kac(a: &FeynmanKacArgs, seed: u64, out: &mut Output) -> Result<bool> {
    let spec = a.noise.spec()?;
    let mu = InitialMeasure::Uniform { mass: a.mass };
    let x = one_point(&a.x, spec.d)?;
    let cov = fk_covariance(a.covariance, &spec, a.modes, a.table_n)?;
    let r = feynman_kac_second_moment(&spec, &mu, &cov, a.t, &x, a.n_paths, a.dt_bm, seed)?;
    let e = &r.estimate;
    let floor_ok = e.value + 3.0 * e.std_err >= r.jensen_floor * (1.0 - 1e-12);
    let mut ok = floor_ok;
    let mut closed = Value::Null;
    if let CovarianceKind::Constant = a.covariance {
        let jv = j0(a.t, &TorusPoint::new(x.clone())?, &mu, &KernelConfig::default())?;
        let target = jv * jv * (spec.lambda.powi(2) * spec.rho * spec.flat() * a.t).exp();
        let m = e.matches(target, 3.0);
        ok &= m;
        closed = json!({ "target": target, "pass": m });
        println!("closed form {target:.8e} [{}]", pass_str(m));
    }
    println!("E u^2 ~ {:.8e} +- {:.1e}; Jensen floor {:.6e} [{}]", e.value, e.std_err, r.jensen_floor, pass_str(floor_ok));
    out.json("feynman_kac", &json!({ "spec": spec, "initial": mu, "covariance": a.covariance, "result": r, "jensen_pass": floor_ok, "closed_form": closed }))?;
    Ok(ok)
}

#[derive(Debug, Args, Serialize)]
pub struct ErgodicArgs {
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value = "10,50,200")]
    pub t_list: String,
    #[arg(long, default_value_t = 200)]
    pub n_paths: usize,
    #[arg(long, default_value_t = 0.01)]
    pub dt_bm: f64,
    /// mode cutoff of the covariance table
    #[arg(long, default_value_t = 2047)]
    pub modes: usize,
    #[arg(long, default_value_t = 4096)]
    pub table_n: usize,
}

fn ergodic(a: &ErgodicArgs, seed: u64, out: &mut Output) -> Result<bool> {
    let spec = a.noise.spec()?;
    let cov = FkCovariance::truncated(&spec, a.modes, a.table_n)?;
    let r = ergodic_average_check(&spec, &cov, &values(&a.t_list)?, a.n_paths, a.dt_bm, seed)?;
    for row in &r.rows {
        println!("t={}: time average {:.6} +- {:.1e} (target {:.6})", row.t, row.mean, row.std_err, r.target);
    }
    println!("converged [{}], variance decreasing [{}]", pass_str(r.converged), pass_str(r.variance_decreasing));
    let mut t = Table::new(&["t", "mean", "std_err", "variance"]);
    for row in &r.rows {
        t.push(vec![json!(row.t), json!(row.mean), json!(row.std_err), json!(row.variance)]);
    }
    out.table("ergodic", &t)?;
    out.json("ergodic_summary", &r)?;
    Ok(r.pass)
}

// ---------------------------------------------------------------- Hoelder exponents

#[derive(Debug, Args, Serialize)]
pub struct HolderArgs {
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value_t = 128)]
    pub mode_k: usize,
    #[arg(long, default_value_t = 512)]
    pub grid_n: usize,
    #[arg(long, default_value_t = 2.5e-4)]
    pub dt: f64,
    #[arg(long, default_value_t = 0.5)]
    pub t0: f64,
    #[arg(long, default_value = "4,8,16,32,64")]
    pub time_lag_steps: String,
    #[arg(long, default_value = "4,8,16,32,64")]
    pub space_lags: String,
    #[arg(long, default_value_t = 64)]
    pub n_paths: usize,
    #[arg(long, default_value_t = 8)]
    pub batches: usize,
    /// half-widths of the acceptance bands around the theoretical suprema
    #[arg(long, default_value_t = 0.1)]
    pub time_band: f64,
    #[arg(long, default_value_t = 0.2)]
    pub space_band: f64,
    /// skip the dt-halving stability run
    #[arg(long)]
    pub no_halving: bool,
}

fn usizes(s: &str) -> Result<Vec<usize>> {
    values(s)?
        .into_iter()
        .map(|v| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Domain(format!("{v} is not a positive integer")))
            }
        })
        .collect()
}

fn holder(a: &HolderArgs, seed: u64, out: &mut Output) -> Result<bool> {
    let spec = a.noise.spec()?;
    let (b1, b2) = holder_exponents(spec.alpha, spec.d)?;
    let settings = HolderSettings {
        mode_k: a.mode_k,
        grid_n: a.grid_n,
        dt: a.dt,
        t0: a.t0,
        time_lag_steps: usizes(&a.time_lag_steps)?,
        space_lags: usizes(&a.space_lags)?,
        n_paths: a.n_paths,
    };
    let est = empirical_holder(&holder_samples(&spec, &settings, seed)?, a.batches)?;
    let in1 = (est.beta1_hat.slope - b1).abs() <= a.time_band;
    let in2 = (est.beta2_hat.slope - b2).abs() <= a.space_band;
    println!("time slope {:.3} +- {:.3} vs sup {b1} [{}]", est.beta1_hat.slope, est.beta1_hat.ci, pass_str(in1));
    println!("space slope {:.3} +- {:.3} vs sup {b2} [{}]", est.beta2_hat.slope, est.beta2_hat.ci, pass_str(in2));
    let mut stable = true;
    let mut halved = Value::Null;
    if !a.no_halving {
        let h = empirical_holder(&holder_samples(&spec, &settings.halved_dt(), seed ^ 0x4a1f)?, a.batches)?;
        let shift = (h.beta1_hat.slope - est.beta1_hat.slope).abs();
        stable = shift <= est.beta1_hat.ci.max(h.beta1_hat.ci);
        println!("dt halved: time slope {:.3} (shift {shift:.3}) [{}]", h.beta1_hat.slope, pass_str(stable));
        halved = json!({ "estimate": h, "shift": shift, "stable": stable });
    }
    out.json(
        "holder",
        &json!({
            "spec": spec, "settings": settings, "estimate": est, "beta1_sup": b1, "beta2_sup": b2,
            "time_in_band": in1, "space_in_band": in2, "halved_dt": halved,
        }),
    )?;
    Ok(in1 && in2 && stable)
}
