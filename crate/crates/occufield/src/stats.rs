//! Empirical distances to the standard Gaussian and rate regression.
//!
//! The Wasserstein estimator is the quantile coupling on sorted samples,
//! `(1/m) sum_i |x_(i) - Phi^{-1}((i - 0.5)/m)|`; the midpoint grid makes the
//! Gaussian quantile grid itself an exact fixed point. The Kolmogorov
//! distance is the usual sup gap between the empirical CDF and Phi at the
//! jump points. Bootstrap resampling supplies a standard-error proxy for the
//! Wasserstein estimate; resamples run on their own counter-derived streams,
//! so the proxy is reproducible and chunk-order independent.

use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::rng::{substream, SUBSTREAM_BOOTSTRAP};
use rand::Rng;
use serde::Serialize;

/// Sample moments with standard errors.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SampleSummary {
    pub m: usize,
    pub mean: f64,
    /// unbiased sample variance
    pub variance: f64,
    pub se_mean: f64,
    /// standard error of the sample variance (fourth-moment formula)
    pub se_variance: f64,
}

/// Mean, variance, and their standard errors in one pass over the data.
pub fn summary(samples: &[f64]) -> SampleSummary {
    let m = samples.len();
    assert!(m >= 2, "summary needs at least two samples");
    let mf = m as f64;
    let mean = samples.iter().sum::<f64>() / mf;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &x in samples {
        let d = x - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    let variance = m2 / (mf - 1.0);
    m2 /= mf;
    m4 /= mf;
    // Var(s^2) = (m4 - sigma^4 (m-3)/(m-1)) / m
    let var_s2 = ((m4 - m2 * m2 * (mf - 3.0) / (mf - 1.0)) / mf).max(0.0);
    SampleSummary {
        m,
        mean,
        variance,
        se_mean: (variance / mf).sqrt(),
        se_variance: var_s2.sqrt(),
    }
}

/// Sample covariance of paired observations with a delta-method standard
/// error (the spread of the centered cross-products).
pub fn covariance_with_se(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let products: Vec<f64> = x
        .iter()
        .zip(y.iter())
        .map(|(&a, &b)| (a - mx) * (b - my))
        .collect();
    let cov = products.iter().sum::<f64>() / (m - 1.0);
    let var_products = products
        .iter()
        .map(|&p| (p - cov) * (p - cov))
        .sum::<f64>()
        / (m - 1.0);
    (cov, (var_products / m).sqrt())
}

/// Standard Gaussian CDF through the complementary error function.
pub fn gaussian_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard Gaussian density.
pub fn gaussian_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Gaussian quantile `Phi^{-1}(u)`: rational initial guess plus one
/// Halley refinement against the erfc-based CDF. Absolute error is far below
/// the 1e-9 contract over the whole open interval.
pub fn gaussian_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidQuantile(u));
    }
    let x = quantile_initial_guess(u);
    // one refinement step
    let err = gaussian_cdf(x) - u;
    let scaled = err * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    Ok(x - scaled / (1.0 + 0.5 * x * scaled))
}

/// Peter Acklam's rational approximation (absolute error below 1.2e-9 on its
/// own; the refinement above takes it to machine level).
fn quantile_initial_guess(u: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const U_LOW: f64 = 0.02425;
    if u < U_LOW {
        let q = (-2.0 * u.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if u <= 1.0 - U_LOW {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - u).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

fn checked_sorted(samples: &[f64], min_len: usize) -> Result<Vec<f64>> {
    if samples.len() < min_len || samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidSamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(sorted)
}

/// Empirical 1-Wasserstein distance to the standard Gaussian.
pub fn wasserstein_gaussian(samples: &[f64]) -> Result<f64> {
    let sorted = checked_sorted(samples, 2)?;
    let m = sorted.len() as f64;
    let mut acc = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let grid = gaussian_quantile((i as f64 + 0.5) / m)?;
        acc += (x - grid).abs();
    }
    Ok(acc / m)
}

/// Empirical Kolmogorov distance to the standard Gaussian.
pub fn kolmogorov_gaussian(samples: &[f64]) -> Result<f64> {
    let sorted = checked_sorted(samples, 1)?;
    let m = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let phi = gaussian_cdf(x);
        sup = sup
            .max(((i as f64 + 1.0) / m - phi).abs())
            .max((i as f64 / m - phi).abs());
    }
    Ok(sup)
}

/// Distances of a sample to the standard Gaussian, with a bootstrap
/// standard-error proxy for the Wasserstein estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DistanceEstimate {
    pub d_w: f64,
    pub d_k: f64,
    pub m: usize,
    pub se_proxy: f64,
}

const BOOTSTRAP_RESAMPLES: u64 = 200;

/// Compute both distances and the bootstrap proxy (200 resamples on
/// dedicated streams derived from `seed`).
pub fn distance_estimate(samples: &[f64], seed: u64) -> Result<DistanceEstimate> {
    let d_w = wasserstein_gaussian(samples)?;
    let d_k = kolmogorov_gaussian(samples)?;
    let m = samples.len();
    let replicas = map_indexed(BOOTSTRAP_RESAMPLES, |b| {
        let mut rng = substream(seed, b, SUBSTREAM_BOOTSTRAP);
        let resample: Vec<f64> = (0..m).map(|_| samples[rng.random_range(0..m)]).collect();
        wasserstein_gaussian(&resample).expect("finite resample")
    });
    let s = summary(&replicas);
    Ok(DistanceEstimate {
        d_w,
        d_k,
        m,
        se_proxy: s.variance.sqrt(),
    })
}

/// Center and scale samples by a known mean and standard deviation.
pub fn standardize(samples: &[f64], mean: f64, sd: f64) -> Vec<f64> {
    samples.iter().map(|&x| (x - mean) / sd).collect()
}

/// Least-squares fit of `ln d` against `ln N`.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

/// Ordinary least squares of `ln d` on `ln N` over at least three points
/// with positive coordinates.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::NotEnoughPoints {
            need: 3,
            got: points.len(),
        });
    }
    if points.iter().any(|&(n, d)| !(n > 0.0) || !(d > 0.0)) {
        return Err(Error::NonPositiveDistance);
    }
    let m = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, d)| (n.ln(), d.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = logs
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let slope_se = (ssr / (m - 2.0) / sxx).sqrt();
    Ok(RateFit {
        points: points.to_vec(),
        slope,
        intercept,
        slope_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_grid(m: usize) -> Vec<f64> {
        (0..m)
            .map(|i| gaussian_quantile((i as f64 + 0.5) / m as f64).unwrap())
            .collect()
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(gaussian_quantile(0.5).unwrap(), 0.0);
        assert!((gaussian_quantile(0.975).unwrap() - 1.959964).abs() <= 1e-6);
        for &u in &[1e-6, 0.3, 1.0 - 1e-6] {
            let x = gaussian_quantile(u).unwrap();
            assert!((gaussian_cdf(x) - u).abs() <= 1e-9, "u={u}");
        }
        assert!(gaussian_quantile(0.0).is_err());
        assert!(gaussian_quantile(1.0).is_err());
        assert!(gaussian_quantile(f64::NAN).is_err());
    }

    #[test]
    fn wasserstein_fixed_point_is_zero() {
        let grid = gaussian_grid(1000);
        assert_eq!(wasserstein_gaussian(&grid).unwrap(), 0.0);
    }

    #[test]
    fn wasserstein_of_point_mass_at_zero() {
        // converges to E|Z| = sqrt(2/pi)
        let zeros = vec![0.0; 1_000_000];
        let d = wasserstein_gaussian(&zeros).unwrap();
        assert!((d - (2.0 / std::f64::consts::PI).sqrt()).abs() <= 1e-3, "{d}");
    }

    #[test]
    fn wasserstein_of_scaled_gaussian() {
        // d_W(aZ, Z) = |a-1| E|Z|
        let scaled: Vec<f64> = gaussian_grid(1_000_000).iter().map(|x| 2.0 * x).collect();
        let d = wasserstein_gaussian(&scaled).unwrap();
        assert!((d - 0.7979).abs() <= 2e-3, "{d}");
    }

    #[test]
    fn distances_are_permutation_invariant() {
        let mut samples = gaussian_grid(501);
        let d0 = wasserstein_gaussian(&samples).unwrap();
        let k0 = kolmogorov_gaussian(&samples).unwrap();
        samples.reverse();
        samples.swap(7, 401);
        assert_eq!(wasserstein_gaussian(&samples).unwrap(), d0);
        assert_eq!(kolmogorov_gaussian(&samples).unwrap(), k0);
    }

    #[test]
    fn translation_changes_wasserstein_by_at_most_the_shift() {
        let samples = gaussian_grid(2000);
        let d0 = wasserstein_gaussian(&samples).unwrap();
        for &c in &[-1.5, -0.2, 0.3, 2.0] {
            let shifted: Vec<f64> = samples.iter().map(|x| x + c).collect();
            let d = wasserstein_gaussian(&shifted).unwrap();
            assert!((d - d0).abs() <= c.abs() + 1e-12, "c={c}");
        }
    }

    #[test]
    fn kolmogorov_examples() {
        let zeros = vec![0.0; 1000];
        assert!((kolmogorov_gaussian(&zeros).unwrap() - 0.5).abs() <= 1e-12);
        let m = 4096;
        let grid = gaussian_grid(m);
        assert!(kolmogorov_gaussian(&grid).unwrap() <= 0.5 / m as f64 + 1e-12);
        assert!(kolmogorov_gaussian(&[40.0]).unwrap() >= 0.999);
    }

    #[test]
    fn empty_or_nonfinite_inputs_error() {
        assert!(wasserstein_gaussian(&[]).is_err());
        assert!(wasserstein_gaussian(&[1.0]).is_err());
        assert!(wasserstein_gaussian(&[1.0, f64::NAN]).is_err());
        assert!(kolmogorov_gaussian(&[]).is_err());
        assert!(kolmogorov_gaussian(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn estimator_is_consistent_for_gaussian_input() {
        let mut rng = substream(5150, 0, SUBSTREAM_BOOTSTRAP);
        let samples: Vec<f64> = (0..100_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        assert!(wasserstein_gaussian(&samples).unwrap() <= 0.01);
    }

    #[test]
    fn rate_fit_recovers_exact_power_laws() {
        let grid = [64.0f64, 128.0, 256.0, 512.0, 1024.0];
        for &(exp, c) in &[(-0.5, 3.0), (-0.25, 0.7)] {
            let pts: Vec<(f64, f64)> = grid.iter().map(|&n| (n, c * n.powf(exp))).collect();
            let fit = fit_rate(&pts).unwrap();
            assert!((fit.slope - exp).abs() <= 1e-12);
            assert!((fit.intercept - c.ln()).abs() <= 1e-12);
            assert!(fit.slope_se <= 1e-12);
        }
    }

    #[test]
    fn rate_fit_collinear_midpoint_keeps_zero_residual() {
        // geometric midpoint of two log-points sits on the same line
        let pts = [(10.0, 5.0), (1000.0, 0.5), (100.0, (5.0f64 * 0.5).sqrt())];
        let fit = fit_rate(&pts).unwrap();
        assert!((fit.slope + 0.5).abs() <= 1e-12);
        assert!(fit.slope_se <= 1e-9);
    }

    #[test]
    fn rate_fit_rejects_bad_inputs() {
        assert!(matches!(
            fit_rate(&[(1.0, 1.0), (2.0, 0.5)]),
            Err(Error::NotEnoughPoints { .. })
        ));
        assert!(matches!(
            fit_rate(&[(1.0, 1.0), (2.0, 0.5), (3.0, 0.0)]),
            Err(Error::NonPositiveDistance)
        ));
    }

    #[test]
    fn bootstrap_proxy_is_reproducible_and_tracks_spread() {
        let mut rng = substream(99, 0, SUBSTREAM_BOOTSTRAP);
        let m = 2000;
        // 100 independent batches: the spread of d_W across them should be
        // within a small factor of the average reported proxy
        let mut dws = Vec::new();
        let mut proxies = Vec::new();
        for b in 0..100u64 {
            let samples: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
            let est = distance_estimate(&samples, 1000 + b).unwrap();
            dws.push(est.d_w);
            proxies.push(est.se_proxy);
        }
        let s = summary(&dws);
        let spread = s.variance.sqrt();
        let proxy = proxies.iter().sum::<f64>() / proxies.len() as f64;
        assert!(
            spread >= 0.3 * proxy && spread <= 3.0 * proxy,
            "spread {spread} vs proxy {proxy}"
        );
        // reproducibility of the proxy itself
        let samples: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        let a = distance_estimate(&samples, 7).unwrap();
        let b = distance_estimate(&samples, 7).unwrap();
        assert_eq!(a.se_proxy, b.se_proxy);
    }

    #[test]
    fn summary_moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let s = summary(&xs);
        assert!((s.mean - 2.5).abs() <= 1e-15);
        assert!((s.variance - 5.0 / 3.0).abs() <= 1e-15);
    }
}
