//! Brownian-bridge densities on the torus and on R^d, and numerical checks of
//! the two comparison lemmas between them.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::heat_kernel::{log_gauss, KernelConfig, TorusPoint};
use crate::rng::{halton, stream_rng};

const PI: f64 = std::f64::consts::PI;
const TAU: f64 = std::f64::consts::TAU;

/// Pinned Brownian motion from `x0` at time 0 to `x` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeSpec {
    pub t: f64,
    pub x0: Vec<f64>,
    pub x: Vec<f64>,
}

impl BridgeSpec {
    pub fn new(t: f64, x0: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return domain(format!("bridge horizon must be > 0, got {t}"));
        }
        if x0.is_empty() || x0.len() != x.len() {
            return domain(format!("endpoint dimensions {} and {} differ", x0.len(), x.len()));
        }
        if x0.iter().chain(&x).any(|v| !v.is_finite()) {
            return domain("non-finite bridge endpoint");
        }
        Ok(Self { t, x0, x })
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    fn check(&self, s: f64, z: &[f64]) -> Result<()> {
        if !(s > 0.0 && s < self.t) {
            return domain(format!("bridge time s={s} outside (0, {})", self.t));
        }
        if z.len() != self.dim() {
            return domain(format!("point has dimension {}, expected {}", z.len(), self.dim()));
        }
        Ok(())
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// log G_{t,x0,x}(s,z), kept in log form so that tiny s does not underflow.
pub fn log_bridge_density_torus(spec: &BridgeSpec, s: f64, z: &TorusPoint, cfg: &KernelConfig) -> Result<f64> {
    let z = z.coords();
    spec.check(s, z)?;
    Ok(cfg.log_g(s, &sub(z, &spec.x0)) + cfg.log_g(spec.t - s, &sub(&spec.x, z))
        - cfg.log_g(spec.t, &sub(&spec.x, &spec.x0)))
}

pub fn bridge_density_torus(spec: &BridgeSpec, s: f64, z: &TorusPoint, cfg: &KernelConfig) -> Result<f64> {
    log_bridge_density_torus(spec, s, z, cfg).map(f64::exp)
}

/// Which closed form of the Euclidean bridge density to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EuclidForm {
    /// p(s, z-x0) p(t-s, x-z) / p(t, x-x0)
    Ratio,
    /// p(s(t-s)/t, z - x0 - (s/t)(x-x0))
    Collapsed,
}

pub fn log_bridge_density_euclid(spec: &BridgeSpec, s: f64, z: &[f64], form: EuclidForm) -> Result<f64> {
    spec.check(s, z)?;
    let t = spec.t;
    Ok(match form {
        EuclidForm::Ratio => {
            log_gauss(s, &sub(z, &spec.x0)) + log_gauss(t - s, &sub(&spec.x, z)) - log_gauss(t, &sub(&spec.x, &spec.x0))
        }
        EuclidForm::Collapsed => {
            let shift: Vec<f64> = (0..z.len())
                .map(|i| z[i] - (spec.x0[i] + s / t * (spec.x[i] - spec.x0[i])))
                .collect();
            log_gauss(s * (t - s) / t, &shift)
        }
    })
}

pub fn bridge_density_euclid(spec: &BridgeSpec, s: f64, z: &[f64], form: EuclidForm) -> Result<f64> {
    log_bridge_density_euclid(spec, s, z, form).map(f64::exp)
}

/// (c_eps, C_eps) of the long-time bridge comparison.
pub fn comparison_constants(eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps.is_finite()) {
        return domain(format!("eps must be > 0, got {eps}"));
    }
    let c = eps.sqrt() / (2.0 * PI.sqrt() + (2.0 * eps).sqrt()) / (2.0 * 2f64.sqrt()) * (-PI * PI / (2.0 * eps)).exp();
    let cc = 2.0 * (1.0 + (TAU / eps).sqrt()) * (PI * PI / eps).exp();
    Ok((c, cc))
}

/// Lower constant for the long-time comparison obtained when the Gaussian quotient
/// p(t-s, z-x)/p(t, x0-x) is bounded below by exp(-pi^2 / (2(t-s))) >= exp(-pi^2/eps).
///
/// `comparison_constants(eps).0` is not a valid lower bound near t = eps: at
/// t = eps = 1, s = 1/2, x = x0, z = x0 + pi the quotient is about 0.29 c_1.
pub fn corrected_lower_constant(eps: f64) -> Result<f64> {
    comparison_constants(eps)?;
    Ok(eps.sqrt() / (2.0 * PI.sqrt() + (2.0 * eps).sqrt()) / 2.0 * (-PI * PI / eps).exp())
}

/// Summary of a randomized sweep; serialized as the JSON report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BridgeReport {
    pub n_samples: usize,
    pub violations: usize,
    /// violations of the long-time sandwich when the lower constant is `corrected_lower_constant`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violations_corrected: Option<usize>,
    /// For the long-time check: the extreme observed values of the bridge/heat ratio
    /// scaled by c_eps^-d and C_eps^-d. For the image-sum check: the fitted C.
    pub fitted_constant: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub parameters: serde_json::Value,
    pub seed: u64,
}

/// Halton point `i` shifted by a seeded Cranley-Patterson rotation.
fn rqmc_points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, 0xb41d_6e00, 0);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    (0..n as u64)
        .map(|i| {
            halton(i, dim)
                .into_iter()
                .zip(&shift)
                .map(|(u, s)| (u + s).fract())
                .collect()
        })
        .collect()
}

fn to_torus(u: f64) -> f64 {
    -PI + TAU * u
}

/// Checks c_eps^d G(s,x0,z) <= G_{t,x0,x}(s,z) <= C_eps^d G(s,x0,z) for s in (0, t/2].
///
/// The comparison only involves G(t-s,z,x)/G(t,x0,x), which is what gets evaluated;
/// `min_ratio`/`max_ratio` are that quotient divided by c_eps^d and C_eps^d respectively,
/// so a clean run has min_ratio >= 1 and max_ratio <= 1.
pub fn check_large_time_bound(
    eps: f64,
    t: f64,
    d: usize,
    n_samples: usize,
    seed: u64,
    cfg: &KernelConfig,
) -> Result<BridgeReport> {
    let (c, cc) = comparison_constants(eps)?;
    if !(t >= eps && t.is_finite()) {
        return domain(format!("need t >= eps, got t={t}, eps={eps}"));
    }
    if d == 0 {
        return domain("dimension must be >= 1");
    }
    let lo = c.powi(d as i32).ln();
    let hi = cc.powi(d as i32).ln();
    let pts = rqmc_points(n_samples, 1 + 3 * d, seed);
    let ratios: Vec<f64> = pts
        .par_iter()
        .map(|u| {
            let s = (u[0] * t / 2.0).max(f64::MIN_POSITIVE);
            let x0: Vec<f64> = u[1..=d].iter().map(|&v| to_torus(v)).collect();
            let x: Vec<f64> = u[d + 1..=2 * d].iter().map(|&v| to_torus(v)).collect();
            let z: Vec<f64> = u[2 * d + 1..].iter().map(|&v| to_torus(v)).collect();
            cfg.log_g(t - s, &sub(&x, &z)) - cfg.log_g(t, &sub(&x, &x0))
        })
        .collect();
    let slack = 1e-10;
    let violations = ratios.iter().filter(|&&r| !(r >= lo - slack && r <= hi + slack)).count();
    let lo_fix = corrected_lower_constant(eps)?.powi(d as i32).ln();
    let violations_corrected = ratios.iter().filter(|&&r| !(r >= lo_fix - slack && r <= hi + slack)).count();
    let min_ratio = ratios.iter().fold(f64::INFINITY, |m, &r| m.min((r - lo).exp()));
    let max_ratio = ratios.iter().fold(0.0f64, |m, &r| m.max((r - hi).exp()));
    let fitted = ratios.iter().fold(0.0f64, |m, &r| m.max(r.exp()));
    Ok(BridgeReport {
        n_samples,
        violations,
        violations_corrected: Some(violations_corrected),
        fitted_constant: fitted,
        min_ratio,
        max_ratio,
        parameters: serde_json::json!({ "eps": eps, "t": t, "d": d, "c_eps": c, "C_eps": cc }),
        seed,
    })
}

/// Single-point value of the long-time comparison, in the same normalisation as the sweep.
pub fn large_time_ratio(spec: &BridgeSpec, s: f64, z: &TorusPoint, cfg: &KernelConfig) -> Result<f64> {
    spec.check(s, z.coords())?;
    Ok((cfg.log_g(spec.t - s, &sub(&spec.x, z.coords())) - cfg.log_g(spec.t, &sub(&spec.x, &spec.x0))).exp())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ImageSumPoint {
    pub log_bridge: f64,
    pub log_image_sum: f64,
    /// smallest C for which the bound holds at this point
    pub constant: f64,
}

/// Compares G_{t,x0,x}(s,z) with (1+sqrt t)^d sum_{k in {-2pi,0,2pi}^d} p_{t,x0,x+k}(s,z).
///
/// `z` is a point of R^d with z - x0 in [-pi, pi)^d.
pub fn check_image_sum_bound(spec: &BridgeSpec, s: f64, z: &[f64], cfg: &KernelConfig) -> Result<ImageSumPoint> {
    spec.check(s, z)?;
    let d = spec.dim();
    for i in 0..d {
        let w = z[i] - spec.x0[i];
        if !(-PI..PI).contains(&w) {
            return domain(format!("z - x0 = {w} outside [-pi, pi) in coordinate {i}"));
        }
    }
    let t = spec.t;
    let log_bridge = cfg.log_g(s, &sub(z, &spec.x0)) + cfg.log_g(t - s, &sub(&spec.x, z))
        - cfg.log_g(t, &sub(&spec.x, &spec.x0));
    let var = s * (t - s) / t;
    // per-coordinate logsumexp over the three images, then a product across coordinates
    let mut log_sum = 0.0;
    for i in 0..d {
        let terms: Vec<f64> = [-TAU, 0.0, TAU]
            .iter()
            .map(|k| {
                let mean = spec.x0[i] + s / t * (spec.x[i] + k - spec.x0[i]);
                log_gauss(var, &[z[i] - mean])
            })
            .collect();
        let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        log_sum += m + terms.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    }
    let log_image_sum = d as f64 * (1.0 + t.sqrt()).ln() + log_sum;
    Ok(ImageSumPoint { log_bridge, log_image_sum, constant: (log_bridge - log_image_sum).exp() })
}

/// Fits the constant of the image-sum bound over random (t, s, x0, x, z) with t <= t_max.
pub fn fit_image_sum_constant(d: usize, t_max: f64, n_samples: usize, seed: u64, cfg: &KernelConfig) -> Result<BridgeReport> {
    if d == 0 || !(t_max > 0.0 && t_max.is_finite()) {
        return domain("need d >= 1 and t_max > 0");
    }
    let pts = rqmc_points(n_samples, 2 + 3 * d, seed);
    let cs: Vec<f64> = pts
        .par_iter()
        .map(|u| {
            let t = (u[0] * t_max).max(1e-6 * t_max);
            let s = (u[1] * t).clamp(1e-9 * t, t * (1.0 - 1e-9));
            let x0: Vec<f64> = u[2..2 + d].iter().map(|&v| to_torus(v)).collect();
            let x: Vec<f64> = u[2 + d..2 + 2 * d].iter().map(|&v| to_torus(v)).collect();
            let z: Vec<f64> = (0..d).map(|i| x0[i] + to_torus(u[2 + 2 * d + i])).collect();
            let spec = BridgeSpec { t, x0, x };
            check_image_sum_bound(&spec, s, &z, cfg).map(|p| p.constant)
        })
        .collect::<Result<Vec<_>>>()?;
    let fitted = cs.iter().cloned().fold(0.0f64, f64::max);
    let min_ratio = cs.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(BridgeReport {
        n_samples,
        violations: cs.iter().filter(|c| !c.is_finite()).count(),
        violations_corrected: None,
        fitted_constant: fitted,
        min_ratio,
        max_ratio: fitted,
        parameters: serde_json::json!({ "d": d, "t_max": t_max }),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadOptions};

    fn cfg() -> KernelConfig {
        KernelConfig::default()
    }

    #[test]
    fn torus_bridge_normalises() {
        let spec = BridgeSpec::new(1.3, vec![0.4], vec![-2.9]).unwrap();
        for &s in &[0.05, 0.6, 1.25] {
            let f = |z: f64| bridge_density_torus(&spec, s, &TorusPoint::new(vec![z]).unwrap(), &cfg()).unwrap();
            let v = integrate(f, -PI, PI, QuadOptions::default()).unwrap().value;
            assert!((v - 1.0).abs() < 1e-8, "s={s}: {v}");
        }
    }

    #[test]
    fn torus_bridge_time_reversal() {
        let a = BridgeSpec::new(2.0, vec![0.3, -1.0], vec![2.5, 1.1]).unwrap();
        let b = BridgeSpec::new(2.0, a.x.clone(), a.x0.clone()).unwrap();
        let z = TorusPoint::new(vec![-0.7, 3.0]).unwrap();
        let l = bridge_density_torus(&a, 0.7, &z, &cfg()).unwrap();
        let r = bridge_density_torus(&b, 1.3, &z, &cfg()).unwrap();
        assert!((l / r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn euclid_forms_agree() {
        let spec = BridgeSpec::new(1.0, vec![0.0], vec![0.5]).unwrap();
        let a = bridge_density_euclid(&spec, 0.3, &[0.2], EuclidForm::Ratio).unwrap();
        let b = bridge_density_euclid(&spec, 0.3, &[0.2], EuclidForm::Collapsed).unwrap();
        // independent: mean 0.15, variance 0.21
        let oracle = (-(0.05f64).powi(2) / 0.42).exp() / (TAU * 0.21).sqrt();
        assert!((a - b).abs() < 1e-12 && (b - oracle).abs() < 1e-12);
    }

    #[test]
    fn euclid_variance() {
        let spec = BridgeSpec::new(2.0, vec![0.1], vec![1.0]).unwrap();
        let s = 0.5;
        let mean = 0.1 + s / 2.0 * 0.9;
        let f = |z: f64| (z - mean).powi(2) * bridge_density_euclid(&spec, s, &[z], EuclidForm::Ratio).unwrap();
        let v = integrate(f, mean - 12.0, mean + 12.0, QuadOptions::default()).unwrap().value;
        assert!((v - s * (2.0 - s) / 2.0).abs() < 1e-10);
    }

    #[test]
    fn constants() {
        let (c, cc) = comparison_constants(1.0).unwrap();
        assert!(c < 1.0 && 1.0 < cc);
        let a = comparison_constants(0.1).unwrap().0;
        let b = comparison_constants(10.0).unwrap().0;
        assert!(a < c && c < b);
        assert!(comparison_constants(0.0).is_err());
    }

    #[test]
    fn large_time_sweep_small() {
        let r = check_large_time_bound(1.0, 2.0, 1, 2000, 3, &cfg()).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.min_ratio >= 1.0 && r.max_ratio <= 1.0);
    }

    #[test]
    fn stated_lower_constant_fails_at_t_eq_eps() {
        // independent cosine series for G
        let g = |t: f64, x: f64| {
            (1.0 + 2.0 * (1..200).map(|n| (-(n * n) as f64 * t / 2.0).exp() * (n as f64 * x).cos()).sum::<f64>()) / TAU
        };
        let q = g(0.5, PI) / g(1.0, 0.0);
        let (c, _) = comparison_constants(1.0).unwrap();
        assert!(q < c);
        assert!(q >= corrected_lower_constant(1.0).unwrap());
        let r = check_large_time_bound(1.0, 1.0, 1, 4000, 2, &cfg()).unwrap();
        assert!(r.violations > 0);
        assert_eq!(r.violations_corrected, Some(0));
    }

    #[test]
    fn image_sum_rejects_window() {
        let spec = BridgeSpec::new(1.0, vec![0.0], vec![0.5]).unwrap();
        assert!(check_image_sum_bound(&spec, 0.5, &[3.5], &cfg()).is_err());
        assert!(check_image_sum_bound(&spec, 0.5, &[-3.0], &cfg()).is_ok());
    }

    #[test]
    fn image_sum_short_time_near_one() {
        let spec = BridgeSpec::new(0.01, vec![0.0], vec![0.3]).unwrap();
        let p = check_image_sum_bound(&spec, 0.005, &[0.15], &cfg()).unwrap();
        let euclid = (1.0 + 0.1f64).recip();
        assert!((p.constant / euclid - 1.0).abs() < 1e-9, "{}", p.constant);
    }
}
