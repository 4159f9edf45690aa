//! Spectral sampling of space-time noise increments with covariance dt * f_K.
//!
//! An increment is sum_{|k|_inf <= K} sqrt(dt (2 pi)^{-d/2} theta_k) xi_k e^{ik.x}
//! with Hermitian xi: xi_0 real N(0,1), Re/Im of xi_k independent N(0,1/2).

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use crate::covariance::{NoiseSpec, SpectralWeights};
use crate::error::{domain, Error, Result};
use crate::lattice::is_positive_half;
use crate::rng::StreamId;
use crate::spectral::GridFft;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseIncrement {
    pub d: usize,
    pub grid_n: usize,
    pub dt: f64,
    pub values: Vec<f64>,
    pub stream: StreamId,
    /// max |Im| left after synthesis
    pub imag_residue: f64,
}

/// Reusable sampler: amplitudes and FFT plan are built once.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    pub weights: SpectralWeights,
    pub dt: f64,
    pub grid_n: usize,
    amp: Vec<f64>,
    positive: Vec<bool>,
    zero: usize,
    fft: GridFft,
    coeffs: Vec<Complex64>,
    buf: Vec<Complex64>,
}

impl NoiseSampler {
    pub fn new(spec: &NoiseSpec, weights: &SpectralWeights, dt: f64, grid_n: usize) -> Result<Self> {
        spec.validate_noise()?;
        if weights.lattice.d != spec.d {
            return domain("weights and spec disagree on d");
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return domain(format!("dt must be > 0, got {dt}"));
        }
        if grid_n < weights.lattice.side() {
            return Err(Error::Aliasing { grid_n, mode_k: weights.k_max() });
        }
        let c = TAU.powf(-(spec.d as f64) / 2.0);
        let amp = weights.weights.iter().map(|w| (dt * c * w).sqrt()).collect();
        let positive = weights.lattice.modes().map(|k| is_positive_half(&k)).collect();
        let zero = weights.lattice.index(&vec![0; spec.d]).expect("origin");
        let fft = GridFft::new(grid_n, spec.d);
        let n_grid = fft.len();
        Ok(Self {
            weights: weights.clone(),
            dt,
            grid_n,
            amp,
            positive,
            zero,
            fft,
            coeffs: vec![Complex64::default(); weights.lattice.len()],
            buf: vec![Complex64::default(); n_grid],
        })
    }

    /// Mode coefficients of one increment; draws in lattice order.
    pub fn sample_coefficients<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [Complex64]) {
        let lat = &self.weights.lattice;
        for i in 0..lat.len() {
            if i == self.zero {
                let z: f64 = rng.sample(StandardNormal);
                out[i] = Complex64::new(self.amp[i] * z, 0.0);
            } else if self.positive[i] {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                let c = Complex64::new(a, b) * (FRAC_1_SQRT_2 * self.amp[i]);
                out[i] = c;
                out[lat.mirror(i)] = c.conj();
            }
        }
    }

    pub fn sample(&mut self, stream: StreamId) -> NoiseIncrement {
        let mut rng = stream.rng();
        let mut coeffs = std::mem::take(&mut self.coeffs);
        self.sample_coefficients(&mut rng, &mut coeffs);
        self.fft.synthesize(&self.weights.lattice, &coeffs, &mut self.buf);
        self.coeffs = coeffs;
        let imag_residue = self.buf.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        NoiseIncrement {
            d: self.weights.lattice.d,
            grid_n: self.grid_n,
            dt: self.dt,
            values: self.buf.iter().map(|v| v.re).collect(),
            stream,
            imag_residue,
        }
    }
}

pub fn sample_increment(
    spec: &NoiseSpec,
    weights: &SpectralWeights,
    dt: f64,
    grid_n: usize,
    stream: StreamId,
) -> Result<NoiseIncrement> {
    Ok(NoiseSampler::new(spec, weights, dt, grid_n)?.sample(stream))
}

/// sum_n <dW_n, phi> with the periodic trapezoid inner product.
pub fn wiener_functional(increments: &[NoiseIncrement], phi: &[f64]) -> Result<f64> {
    let Some(first) = increments.first() else {
        return Ok(0.0);
    };
    let (d, n, dt) = (first.d, first.grid_n, first.dt);
    if phi.len() != first.values.len() {
        return domain(format!("test function has {} values, grid has {}", phi.len(), first.values.len()));
    }
    let cell = (TAU / n as f64).powi(d as i32);
    let mut total = 0.0;
    for inc in increments {
        if inc.d != d || inc.grid_n != n || inc.dt != dt {
            return domain("increments do not share grid and dt");
        }
        total += inc.values.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>();
    }
    Ok(total * cell)
}

/// <phi, phi>_{alpha,rho} for a grid function, via its discrete Fourier coefficients
/// restricted to the weight lattice: (2 pi)^{2d} (2 pi)^{-d/2} sum theta_k |a_k|^2.
pub fn quadratic_form(weights: &SpectralWeights, phi: &[f64], grid_n: usize) -> Result<f64> {
    let d = weights.lattice.d;
    if grid_n < weights.lattice.side() {
        return Err(Error::Aliasing { grid_n, mode_k: weights.k_max() });
    }
    let mut fft = GridFft::new(grid_n, d);
    if phi.len() != fft.len() {
        return domain("test function length does not match grid");
    }
    let mut buf: Vec<Complex64> = phi.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut a = vec![Complex64::default(); weights.lattice.len()];
    fft.analyze(&weights.lattice, &mut buf, &mut a);
    let c = TAU.powf(2.0 * d as f64 - d as f64 / 2.0);
    Ok(c * weights.weights.iter().zip(&a).map(|(w, ak)| w * ak.norm_sqr()).sum::<f64>())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub t: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// mean of W(t, 1)^2 over samples (the mean is known to be zero)
    pub variance: f64,
    pub std_err: f64,
    /// t rho (2 pi)^d
    pub target: f64,
    pub pass: bool,
}

/// Variance of W(t, 1) = sum of n_steps increments against the constant test function.
pub fn constant_functional_check(
    spec: &NoiseSpec,
    weights: &SpectralWeights,
    dt: f64,
    grid_n: usize,
    n_steps: usize,
    n_samples: usize,
    seed: u64,
) -> Result<FunctionalReport> {
    if n_samples < 2 || n_steps == 0 {
        return domain("need n_samples >= 2 and n_steps >= 1");
    }
    let mut sampler = NoiseSampler::new(spec, weights, dt, grid_n)?;
    let one = vec![1.0; sampler.buf.len()];
    let mut sq = Vec::with_capacity(n_samples);
    for path in 0..n_samples as u64 {
        let incs: Vec<NoiseIncrement> = (0..n_steps as u64).map(|step| sampler.sample(StreamId { seed, path, step })).collect();
        let w = wiener_functional(&incs, &one)?;
        sq.push(w * w);
    }
    let n = n_samples as f64;
    let variance = sq.iter().sum::<f64>() / n;
    let var_sq = sq.iter().map(|v| (v - variance).powi(2)).sum::<f64>() / (n - 1.0);
    let std_err = (var_sq / n).sqrt();
    let t = dt * n_steps as f64;
    let target = t * spec.rho * TAU.powi(spec.d as i32);
    let pass = (variance - target).abs() <= 3.0 * std_err + 1e-12 * target;
    Ok(FunctionalReport { t, n_samples, seed, variance, std_err, target, pass })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub d: usize,
    pub grid_n: usize,
    pub dt: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// worst |C_hat - dt f_K| over all pairs
    pub max_abs_dev: f64,
    /// worst |C_hat - dt f_K| / SE over all pairs
    pub max_dev_se: f64,
    pub mean_se: f64,
    /// worst spread between pair estimates sharing one lag, in SE units
    pub stationarity_spread_se: f64,
    /// estimate averaged over pairs with lag x_j - x_0, and dt f_K there
    pub by_lag: Vec<(f64, f64)>,
}

/// Sample covariance of grid values against dt * f_K, pair by pair.
pub fn empirical_covariance(
    spec: &NoiseSpec,
    weights: &SpectralWeights,
    dt: f64,
    grid_n: usize,
    n_samples: usize,
    seed: u64,
) -> Result<CovarianceReport> {
    if n_samples < 1000 {
        return domain(format!("n_samples must be >= 1000, got {n_samples}"));
    }
    let mut sampler = NoiseSampler::new(spec, weights, dt, grid_n)?;
    let m = sampler.buf.len();
    if m > 2048 {
        return domain(format!("{m} grid points is too many for a full covariance matrix"));
    }
    let d = spec.d;
    let reference: Vec<f64> = (0..m)
        .map(|l| dt * weights.covariance_at(&crate::lattice::lag_point(l, grid_n, d)))
        .collect();
    let mut s = vec![0.0; m * m];
    let mut q = vec![0.0; m * m];
    for i in 0..n_samples {
        let inc = sampler.sample(StreamId { seed, path: i as u64, step: 0 });
        let v = &inc.values;
        for a in 0..m {
            let va = v[a];
            let row = a * m;
            for b in a..m {
                let p = va * v[b];
                s[row + b] += p;
                q[row + b] += p * p;
            }
        }
    }
    let nf = n_samples as f64;
    let lag = |a: usize, b: usize| crate::lattice::grid_lag_flat(a, b, grid_n, d);
    let mut max_abs_dev: f64 = 0.0;
    let mut max_dev_se: f64 = 0.0;
    let mut se_sum = 0.0;
    let mut count = 0.0;
    let mut lag_min = vec![f64::INFINITY; m];
    let mut lag_max = vec![f64::NEG_INFINITY; m];
    let mut lag_sum = vec![0.0; m];
    let mut lag_cnt: Vec<f64> = vec![0.0; m];
    let mut lag_se: Vec<f64> = vec![0.0; m];
    for a in 0..m {
        for b in a..m {
            let c = s[a * m + b] / nf;
            let var = (q[a * m + b] / nf - c * c).max(0.0);
            let se = (var / nf).sqrt();
            let l = lag(a, b);
            let dev = (c - reference[l]).abs();
            max_abs_dev = max_abs_dev.max(dev);
            if se > 0.0 {
                max_dev_se = max_dev_se.max(dev / se);
            } else if dev > 0.0 {
                max_dev_se = f64::INFINITY;
            }
            se_sum += se;
            count += 1.0;
            for l in [l, lag(b, a)] {
                lag_min[l] = lag_min[l].min(c);
                lag_max[l] = lag_max[l].max(c);
                lag_sum[l] += c;
                lag_cnt[l] += 1.0;
                lag_se[l] = lag_se[l].max(se);
            }
        }
    }
    let stationarity_spread_se = (0..m)
        .filter(|&l| lag_cnt[l] > 0.0 && lag_se[l] > 0.0)
        .map(|l| (lag_max[l] - lag_min[l]) / lag_se[l])
        .fold(0.0, f64::max);
    let by_lag = (0..m).map(|l| (lag_sum[l] / lag_cnt[l].max(1.0), reference[l])).collect();
    Ok(CovarianceReport {
        d,
        grid_n,
        dt,
        n_samples,
        seed,
        max_abs_dev,
        max_dev_se,
        mean_se: se_sum / count,
        stationarity_spread_se,
        by_lag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::grid_coord;

    fn setup(alpha: f64, rho: f64, k: usize) -> (NoiseSpec, SpectralWeights) {
        let s = NoiseSpec::new(1, alpha, rho, 1.0).unwrap();
        let w = SpectralWeights::new(&s, k);
        (s, w)
    }

    #[test]
    fn constant_functional_variance() {
        let (s, w) = setup(0.3, 2.0, 8);
        let r = constant_functional_check(&s, &w, 0.05, 17, 4, 4000, 11).unwrap();
        assert!((r.target - 0.2 * 2.0 * TAU).abs() < 1e-12);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn aliasing_rejected() {
        let (s, w) = setup(0.3, 1.0, 8);
        let r = sample_increment(&s, &w, 0.1, 16, StreamId { seed: 1, path: 0, step: 0 });
        assert!(matches!(r, Err(Error::Aliasing { .. })));
    }

    #[test]
    fn deterministic_and_real() {
        let (s, w) = setup(0.3, 1.0, 8);
        let id = StreamId { seed: 9, path: 3, step: 4 };
        let a = sample_increment(&s, &w, 0.1, 17, id).unwrap();
        let b = sample_increment(&s, &w, 0.1, 17, id).unwrap();
        assert_eq!(a.values, b.values);
        assert!(a.imag_residue < 1e-12);
    }

    #[test]
    fn constant_direction_is_null_without_rho() {
        let (s, w) = setup(0.3, 0.0, 8);
        let inc: Vec<_> = (0..5)
            .map(|i| sample_increment(&s, &w, 0.1, 17, StreamId { seed: 2, path: 0, step: i }).unwrap())
            .collect();
        let one = vec![1.0; 17];
        assert!(wiener_functional(&inc, &one).unwrap().abs() < 1e-12);
        let zero = vec![0.0; 17];
        assert_eq!(wiener_functional(&inc, &zero).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_form_of_cosine() {
        // <cos(kx), cos(kx)> = (2 pi)^d |k|^{-2 alpha} / 2
        let (_, w) = setup(0.3, 1.0, 8);
        let n = 17;
        let phi: Vec<f64> = (0..n).map(|j| (2.0 * grid_coord(j, n)).cos()).collect();
        let v = quadratic_form(&w, &phi, n).unwrap();
        assert!((v - TAU * 2f64.powf(-0.6) / 2.0).abs() < 1e-12);
        let one = vec![1.0; n];
        assert!((quadratic_form(&w, &one, n).unwrap() - TAU).abs() < 1e-12);
    }
}
