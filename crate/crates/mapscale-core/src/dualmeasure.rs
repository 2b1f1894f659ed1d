//! Monte Carlo verification of the atomic dual-measure identities: the
//! conditional Laplace transform E[e^{-u mu'}|A] = e^{-D u^{1/alpha} A} and
//! the dual moment relation, realized through a one-sided stable sampler.
//!
//! Sampling is split into fixed batches with seeds derived from the run
//! seed, so results are bit-reproducible and independent of any parallel
//! scheduling of the batches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::special::gamma;

#[derive(Debug, Error)]
pub enum McError {
    #[error("stability index beta must lie in (0,1), got {0}")]
    BadBeta(f64),
    #[error("moment order q = {q} is not below 1/alpha = {limit}")]
    MomentTooHigh { q: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, McError>;

pub const BATCHES: usize = 20;

/// One draw of the standard positive beta-stable variable
/// (E e^{-u S} = e^{-u^beta}), by the two-uniform trigonometric method:
/// S = [sin(beta U)/(sin U)^{1/beta}] [sin((1-beta) U)/E]^{(1-beta)/beta},
/// U uniform on (0, pi), E standard exponential.
pub fn sample_stable<R: Rng>(beta: f64, rng: &mut R) -> f64 {
    debug_assert!(0.0 < beta && beta < 1.0);
    let u = std::f64::consts::PI * clamp_open01(rng.gen::<f64>());
    let e = -clamp_open01(rng.gen::<f64>()).ln();
    let s1 = (beta * u).sin() / u.sin().powf(1.0 / beta);
    let s2 = (((1.0 - beta) * u).sin() / e).powf((1.0 - beta) / beta);
    s1 * s2
}

fn clamp_open01(x: f64) -> f64 {
    x.clamp(1e-15, 1.0 - 1e-15)
}

/// Deterministic per-batch generator: SplitMix64 whitening of (seed, index).
pub fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut z = seed ^ batch.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// The conditional dual mass mu_{gamma'}(A) | mu_gamma(A) = area:
/// (D area)^alpha S_{1/alpha}, whose Laplace transform in u is
/// exp(-D u^{1/alpha} area) by stable scaling.
pub fn sample_dual_mass<R: Rng>(area: f64, d_scale: f64, alpha: f64, rng: &mut R) -> f64 {
    debug_assert!(area > 0.0 && d_scale > 0.0 && alpha > 1.0);
    (d_scale * area).powf(alpha) * sample_stable(1.0 / alpha, rng)
}

/// Draw n samples of the dual mass in BATCHES deterministic substreams.
pub fn dual_mass_samples(area: f64, d_scale: f64, alpha: f64, n: usize, seed: u64) -> Vec<f64> {
    let per_batch = n.div_ceil(BATCHES);
    let mut out = Vec::with_capacity(per_batch * BATCHES);
    for b in 0..BATCHES {
        let mut rng = batch_rng(seed, b as u64);
        for _ in 0..per_batch {
            out.push(sample_dual_mass(area, d_scale, alpha, &mut rng));
        }
    }
    out
}

/// Same stream as [`dual_mass_samples`], with the batches spread over up to
/// `threads` worker threads. Batch seeding makes the result identical for
/// every thread count.
pub fn dual_mass_samples_threaded(
    area: f64,
    d_scale: f64,
    alpha: f64,
    n: usize,
    seed: u64,
    threads: usize,
) -> Vec<f64> {
    let threads = threads.clamp(1, BATCHES);
    if threads == 1 {
        return dual_mass_samples(area, d_scale, alpha, n, seed);
    }
    let per_batch = n.div_ceil(BATCHES);
    let mut slots: Vec<Vec<f64>> = vec![Vec::new(); BATCHES];
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for w in 0..threads {
            handles.push(scope.spawn(move || {
                let mut local = Vec::new();
                let mut b = w;
                while b < BATCHES {
                    let mut rng = batch_rng(seed, b as u64);
                    let vals: Vec<f64> = (0..per_batch)
                        .map(|_| sample_dual_mass(area, d_scale, alpha, &mut rng))
                        .collect();
                    local.push((b, vals));
                    b += threads;
                }
                local
            }));
        }
        for h in handles {
            for (b, vals) in h.join().expect("sampler thread") {
                slots[b] = vals;
            }
        }
    });
    slots.into_iter().flatten().collect()
}

/// Mean and batch-means standard error of f over the sample stream.
pub fn batch_mean_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    let per_batch = n / BATCHES;
    let mut means = Vec::with_capacity(BATCHES);
    for b in 0..BATCHES {
        let chunk = &samples[b * per_batch..(b + 1) * per_batch];
        means.push(chunk.iter().sum::<f64>() / chunk.len() as f64);
    }
    let mean = means.iter().sum::<f64>() / BATCHES as f64;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>()
        / (BATCHES as f64 - 1.0);
    (mean, (var / BATCHES as f64).sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub q: f64,
    pub estimate: f64,
    pub target: f64,
    pub std_error: f64,
    pub z_score: f64,
}

/// Empirical E[mass^q] against the closed form
/// ((D area)^alpha)^q Gamma(1 - q alpha)/Gamma(1 - q), for q < 1/alpha.
pub fn verify_dual_moments(
    q: f64,
    area: f64,
    d_scale: f64,
    alpha: f64,
    n_samples: usize,
    seed: u64,
) -> Result<MomentReport> {
    if q >= 1.0 / alpha {
        return Err(McError::MomentTooHigh { q, limit: 1.0 / alpha });
    }
    let samples = dual_mass_samples(area, d_scale, alpha, n_samples, seed);
    let powered: Vec<f64> = samples.iter().map(|s| s.powf(q)).collect();
    let (estimate, std_error) = batch_mean_se(&powered);
    let target = (d_scale * area).powf(alpha * q) * gamma(1.0 - q * alpha) / gamma(1.0 - q);
    let z_score = (estimate - target) / std_error;
    Ok(MomentReport { q, estimate, target, std_error, z_score })
}

#[derive(Clone, Debug, Serialize)]
pub struct LaplaceReport {
    pub u: f64,
    pub estimate: f64,
    pub target: f64,
    pub std_error: f64,
    pub z_score: f64,
}

/// Empirical E[e^{-u mass}] against exp(-D u^{1/alpha} area) on a u-grid,
/// all from one sample stream.
pub fn verify_laplace(
    u_grid: &[f64],
    area: f64,
    d_scale: f64,
    alpha: f64,
    n_samples: usize,
    seed: u64,
) -> Vec<LaplaceReport> {
    let samples = dual_mass_samples(area, d_scale, alpha, n_samples, seed);
    u_grid
        .iter()
        .map(|&u| {
            let vals: Vec<f64> = samples.iter().map(|s| (-u * s).exp()).collect();
            let (estimate, std_error) = batch_mean_se(&vals);
            let target = (-d_scale * u.powf(1.0 / alpha) * area).exp();
            LaplaceReport { u, estimate, target, std_error, z_score: (estimate - target) / std_error }
        })
        .collect()
}

/// One-sample Kolmogorov-Smirnov statistic against a CDF given at the sorted
/// sample points.
pub fn ks_statistic_sorted(cdf_at_samples: &[f64]) -> f64 {
    let n = cdf_at_samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &c) in cdf_at_samples.iter().enumerate() {
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((c - lo).abs()).max((hi - c).abs());
    }
    d
}

/// Asymptotic Kolmogorov p-value with the Stephens small-sample correction.
pub fn ks_pvalue(n: usize, d: f64) -> f64 {
    let sn = (n as f64).sqrt();
    let t = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = 2.0 * (-1.0f64).powi(j + 1) * (-2.0 * jf * jf * t * t).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Two-sample KS statistic; inputs need not be sorted.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let x = xs[i];
        let y = ys[j];
        if x <= y {
            i += 1;
        }
        if y <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    (d, ks_pvalue(ne.round() as usize, d))
}

/// CDF of the wp density at each of the sorted sample points, by cumulative
/// panel quadrature between consecutive points.
pub fn wp_cdf_at_sorted(
    params: crate::scaling::ScalingParams,
    sorted: &[f64],
) -> std::result::Result<Vec<f64>, crate::scaling::ScalingError> {
    let density = |y: f64| crate::scaling::density_wp(params, y).unwrap_or(0.0);
    let mut out = Vec::with_capacity(sorted.len());
    let mut acc = if sorted.is_empty() {
        0.0
    } else {
        crate::quadrature::integrate(density, 1e-300, sorted[0], 1e-10, 1e-9)
            .map_err(crate::scaling::ScalingError::Quadrature)?
    };
    out.push(acc);
    for w in sorted.windows(2) {
        acc += crate::quadrature::integrate(density, w[0], w[1], 1e-11, 1e-9)
            .map_err(crate::scaling::ScalingError::Quadrature)?;
        out.push(acc.min(1.0));
    }
    Ok(out)
}
