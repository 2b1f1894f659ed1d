//! The scaling kernel S_{1/alpha}(x) = W_{-1/alpha,0}(-x) for alpha in (1,2),
//! evaluated three ways (alternating series, real integral representation,
//! Airy closed form at alpha = 3/2), and the universal limit densities tau,
//! sigma and wp built on it.

use std::f64::consts::PI;

use thiserror::Error;

use crate::quadrature::{self, QuadError};
use crate::special::{airy_ai_scaled, gamma, ln_gamma};

#[derive(Debug, Error)]
pub enum ScalingError {
    #[error("alpha must lie in (1, 2), got {0}")]
    AlphaOutOfRange(f64),
    #[error("series did not converge within {0} terms")]
    SeriesNonConvergence(usize),
    #[error("moment integral requires s > -2, got {0}")]
    MomentOutOfRange(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

pub type Result<T> = std::result::Result<T, ScalingError>;

/// Exponent and scale of a scaling family: 1 < alpha < 2, D > 0.
#[derive(Clone, Copy, Debug)]
pub struct ScalingParams {
    pub alpha: f64,
    pub d_scale: f64,
}

impl ScalingParams {
    pub fn new(alpha: f64, d_scale: f64) -> Result<Self> {
        if !(1.0 < alpha && alpha < 2.0) {
            return Err(ScalingError::AlphaOutOfRange(alpha));
        }
        assert!(d_scale > 0.0, "scale D must be positive");
        Ok(ScalingParams { alpha, d_scale })
    }
}

const MAX_SERIES_TERMS: usize = 200;

/// Alternating series sum_{m>=1} (-1)^{m-1} x^m Gamma(1+m/alpha)
/// sin(pi m/alpha) / (m! pi), with compensated summation.
///
/// The terms first grow, then decay; in f64 the cancellation is harmless for
/// x up to about 3 (alpha not too close to 1), which is where the dispatcher
/// uses it. Terms with sin(pi m/alpha) = 0 vanish identically, so
/// convergence is declared only after two consecutive negligible terms.
pub fn wright_s_series(alpha: f64, x: f64, tol: f64) -> Result<f64> {
    check_alpha(alpha)?;
    assert!(x >= 0.0);
    if x == 0.0 {
        return Ok(0.0);
    }
    let lnx = x.ln();
    let mut sum = 0.0f64;
    let mut comp = 0.0f64; // Kahan correction
    let mut prev_small = false;
    for m in 1..=MAX_SERIES_TERMS {
        let mf = m as f64;
        let ln_mag = mf * lnx + ln_gamma(1.0 + mf / alpha) - ln_gamma(mf + 1.0);
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * ln_mag.exp() * (PI * mf / alpha).sin() / PI;
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        let small = term.abs() <= tol.max(1e-17) * sum.abs().max(1e-300);
        if small && prev_small && m > 3 {
            return Ok(sum);
        }
        prev_small = small;
    }
    Err(ScalingError::SeriesNonConvergence(MAX_SERIES_TERMS))
}

/// Real integral representation
/// (1/pi) int_0^inf exp(-mu - mu^{1/alpha} x cos(pi/alpha))
///                sin(mu^{1/alpha} x sin(pi/alpha)) dmu.
///
/// cos(pi/alpha) < 0 on (1,2), so the integrand grows before the e^{-mu}
/// cutoff wins; the representation is usable in f64 while that growth stays
/// bounded (x up to about 5 at alpha = 3/2).
pub fn wright_s_integral(alpha: f64, x: f64, tol: f64) -> Result<f64> {
    check_alpha(alpha)?;
    assert!(x >= 0.0);
    if x == 0.0 {
        return Ok(0.0);
    }
    let c = (PI / alpha).cos();
    let s = (PI / alpha).sin();
    // cutoff where exp(-mu - mu^{1/alpha} x c) < tol * 1e-3
    let budget = (1e3 / tol.max(1e-300)).ln();
    let mut mu_max = budget.max(1.0);
    for _ in 0..64 {
        mu_max = budget - mu_max.powf(1.0 / alpha) * x * c; // c < 0: adds
    }
    let f = |mu: f64| {
        if mu <= 0.0 {
            return 0.0;
        }
        let p = mu.powf(1.0 / alpha) * x;
        (-mu - p * c).exp() * (p * s).sin() / PI
    };
    let v = quadrature::integrate_with_limit(f, 0.0, mu_max, tol * 1e-2, 1e-13, 20_000)?;
    Ok(v)
}

/// Closed form at alpha = 3/2:
/// S(x) = 2 (x/3^{2/3}) e^{-2x^3/27} [ (x/3^{2/3}) Ai(x^2/3^{4/3}) - Ai'(x^2/3^{4/3}) ].
///
/// Evaluated with the e^{zeta}-scaled Airy pair so that the two exponential
/// factors combine into exp(-4x^3/27) analytically; the naive product
/// underflows to 0*inf noise long before the value itself leaves f64 range.
pub fn wright_s_airy(x: f64) -> f64 {
    assert!(x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    let c = 3f64.powf(2.0 / 3.0);
    let z = x * x / (c * c);
    let (ai_s, aip_s, zeta) = airy_ai_scaled(z);
    // zeta = (2/3) z^{3/2} = 2x^3/27, so the total damping is exp(-4x^3/27)
    2.0 * (x / c) * (-2.0 * x.powi(3) / 27.0 - zeta).exp() * ((x / c) * ai_s - aip_s)
}

/// Largest x at which the alternating series is trusted in double precision.
pub fn series_domain_limit(alpha: f64) -> f64 {
    // the term peak grows like exp(const * x^{alpha/(alpha-1)}); keep the
    // cancellation under ~4 digits
    if alpha >= 1.3 {
        3.0
    } else {
        1.5
    }
}

/// Best-available evaluator: closed form at alpha = 3/2, otherwise series
/// for small x and the integral representation beyond.
pub fn wright_s(alpha: f64, x: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if x < 0.0 {
        panic!("wright_s on negative axis");
    }
    if (alpha - 1.5).abs() < 1e-12 {
        return Ok(wright_s_airy(x));
    }
    if x <= series_domain_limit(alpha) {
        wright_s_series(alpha, x, 1e-16)
    } else {
        wright_s_integral(alpha, x, 1e-12)
    }
}

/// Large-x equivalent
/// sqrt(x/(2 pi (alpha-1))) (x/alpha)^{1/(2(alpha-1))}
///   exp(-(alpha-1) (x/alpha)^{alpha/(alpha-1)}).
pub fn wright_s_asymptotic(alpha: f64, x: f64) -> f64 {
    let a1 = alpha - 1.0;
    (x / (2.0 * PI * a1)).sqrt()
        * (x / alpha).powf(1.0 / (2.0 * a1))
        * (-(a1) * (x / alpha).powf(alpha / a1)).exp()
}

/// Moment integral int_0^inf x^s S_{1/alpha}(x) dx = Gamma(s+1)/Gamma((s+1)/alpha),
/// valid for s > -2 (the s = -1 pole cancels in the ratio).
pub fn moment_s(alpha: f64, s: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if s <= -2.0 {
        return Err(ScalingError::MomentOutOfRange(s));
    }
    if (s + 1.0).abs() < 1e-12 {
        // lim_{e->0} Gamma(e)/Gamma(e/alpha) = 1/alpha
        return Ok(1.0 / alpha);
    }
    Ok(gamma(s + 1.0) / gamma((s + 1.0) / alpha))
}

/// Density of the rescaled root-block size for simply rooted maps:
/// tau(x) = alpha^3 Gamma(2-1/alpha)/Gamma(2-alpha) (Dx)^{-(1+alpha)} S(Dx).
/// Not normalizable: it diverges like eps^{1-alpha} near the origin.
pub fn density_tau(params: ScalingParams, x: f64) -> Result<f64> {
    assert!(x > 0.0);
    let a = params.alpha;
    let dx = params.d_scale * x;
    Ok(a.powi(3) * gamma(2.0 - 1.0 / a) / gamma(2.0 - a) / dx.powf(1.0 + a) * wright_s(a, dx)?)
}

/// Probability density of the rescaled root-block size for doubly rooted
/// maps: sigma(x) = alpha Gamma(1/alpha)/Gamma(2-alpha) D (Dx)^{-alpha} S(Dx).
pub fn density_sigma(params: ScalingParams, x: f64) -> Result<f64> {
    assert!(x > 0.0);
    let a = params.alpha;
    let dx = params.d_scale * x;
    Ok(a * gamma(1.0 / a) / gamma(2.0 - a) * params.d_scale / dx.powf(a) * wright_s(a, dx)?)
}

/// Probability density of the rescaled total size at fixed root block size:
/// wp(y) = S(D / y^{1/alpha}) / y, with Laplace transform exp(-D lambda^{1/alpha}).
pub fn density_wp(params: ScalingParams, y: f64) -> Result<f64> {
    assert!(y > 0.0);
    let a = params.alpha;
    Ok(wright_s(a, params.d_scale / y.powf(1.0 / a))? / y)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if 1.0 < alpha && alpha < 2.0 {
        Ok(())
    } else {
        Err(ScalingError::AlphaOutOfRange(alpha))
    }
}

/// int_0^inf wp(y) exp(-lambda y) dy by quadrature (tail mapped to [0,1]).
pub fn wp_laplace_quadrature(params: ScalingParams, lambda: f64, tol: f64) -> Result<f64> {
    let head = quadrature::integrate(
        |y| if y <= 0.0 { 0.0 } else { density_wp_unchecked(params, y) * (-lambda * y).exp() },
        0.0,
        1.0,
        tol * 0.5,
        1e-13,
    )?;
    // y in (1, inf): substitute y = 1/w
    let tail = quadrature::integrate(
        |w| {
            if w <= 0.0 {
                return 0.0;
            }
            let y = 1.0 / w;
            density_wp_unchecked(params, y) * (-lambda * y).exp() / (w * w)
        },
        0.0,
        1.0,
        tol * 0.5,
        1e-13,
    )?;
    Ok(head + tail)
}

fn density_wp_unchecked(params: ScalingParams, y: f64) -> f64 {
    density_wp(params, y).unwrap_or(f64::NAN)
}

/// int_0^inf x^p sigma(x) dx via the moment integral of S.
pub fn sigma_moment(params: ScalingParams, p: f64) -> Result<f64> {
    let a = params.alpha;
    let norm = a * gamma(1.0 / a) / gamma(2.0 - a);
    Ok(norm * params.d_scale.powf(-p) * moment_s(a, p - a)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    fn quad_params() -> ScalingParams {
        ScalingParams::new(1.5, 3.0 / 2f64.powf(2.0 / 3.0)).unwrap()
    }

    #[test]
    fn series_zero_and_small_slope() {
        assert_eq!(wright_s_series(1.5, 0.0, 1e-15).unwrap(), 0.0);
        // S(x)/x -> Gamma(1+1/alpha) sin(pi/alpha)/pi as x -> 0+
        for alpha in [1.2, 1.5, 1.8] {
            let x = 1e-8;
            let slope = wright_s_series(alpha, x, 1e-16).unwrap() / x;
            let expect = gamma(1.0 + 1.0 / alpha) * (PI / alpha).sin() / PI;
            assert!((slope / expect - 1.0).abs() < 1e-7, "alpha={alpha}");
        }
    }

    #[test]
    fn series_matches_airy_closed_form() {
        // the series loses ~3 digits to cancellation by x = 3; both
        // evaluations stay well inside the 1e-10 cross-validation budget
        for x in [0.25, 0.5, 1.0, 2.0, 3.0] {
            let s = wright_s_series(1.5, x, 1e-16).unwrap();
            let a = wright_s_airy(x);
            assert!((s - a).abs() < 1e-11, "x={x}: {s} vs {a}");
        }
    }

    #[test]
    fn integral_matches_series_on_grid() {
        // at alpha = 1.1 the representations are only simultaneously valid
        // for x <= ~1 in f64 (beyond, the value drops under the attainable
        // absolute accuracy)
        let grid: [(f64, &[f64]); 3] = [
            (1.1, &[0.1, 0.5, 1.0]),
            (1.5, &[0.1, 0.5, 1.0, 2.0]),
            (1.9, &[0.1, 0.5, 1.0, 2.0]),
        ];
        for (alpha, xs) in grid {
            for &x in xs {
                let a = wright_s_series(alpha, x, 1e-16).unwrap();
                let b = wright_s_integral(alpha, x, 1e-12).unwrap();
                assert!((a - b).abs() <= 1e-10, "alpha={alpha} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn integral_zero_at_origin() {
        assert_eq!(wright_s_integral(1.5, 0.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn airy_form_matches_asymptotic_at_large_x() {
        let ratio = wright_s_airy(10.0) / wright_s_asymptotic(1.5, 10.0);
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
        // and the agreement tightens with x
        let r12 = wright_s_airy(12.0) / wright_s_asymptotic(1.5, 12.0);
        assert!((r12 - 1.0).abs() < (ratio - 1.0).abs());
    }

    #[test]
    fn moment_identities() {
        let alpha = 1.5;
        // s = 0
        assert!((moment_s(alpha, 0.0).unwrap() - 1.0 / gamma(1.0 / alpha)).abs() < 1e-14);
        // s = -alpha: Gamma(2-alpha)/(alpha Gamma(1/alpha))
        let lhs = moment_s(alpha, -alpha).unwrap();
        let rhs = gamma(2.0 - alpha) / (alpha * gamma(1.0 / alpha));
        assert!((lhs - rhs).abs() < 1e-14);
        assert!(matches!(moment_s(alpha, -2.0), Err(ScalingError::MomentOutOfRange(_))));
    }

    #[test]
    fn moments_match_quadrature() {
        // int x^s S(x) dx vs closed form for s in {-3/2, 0, 1/2}
        for s in [-1.5, 0.0, 0.5] {
            let closed = moment_s(1.5, s).unwrap();
            let head = integrate(|x| if x <= 0.0 { 0.0 } else { x.powf(s) * wright_s_airy(x) }, 0.0, 1.0, 1e-11, 1e-12).unwrap();
            let tail = integrate(
                |x| x.powf(s) * wright_s_airy(x),
                1.0,
                9.0, // S(9) ~ 1e-47; nothing left beyond
                1e-11,
                1e-12,
            )
            .unwrap();
            let q = head + tail;
            assert!((q - closed).abs() < 1e-8, "s={s}: {q} vs {closed}");
        }
    }

    #[test]
    fn sigma_is_a_probability_density() {
        let p = quad_params();
        let head = integrate(|x| if x <= 0.0 { 0.0 } else { density_sigma(p, x).unwrap() }, 0.0, 1.0, 1e-10, 1e-12).unwrap();
        let tail = integrate(|x| density_sigma(p, x).unwrap(), 1.0, 9.0, 1e-10, 1e-12).unwrap();
        assert!((head + tail - 1.0).abs() < 1e-8, "{}", head + tail);
    }

    #[test]
    fn wp_is_a_probability_density() {
        let p = quad_params();
        let total = wp_laplace_quadrature(p, 0.0, 1e-9).unwrap();
        assert!((total - 1.0).abs() < 1e-8, "{total}");
    }

    #[test]
    fn wp_laplace_transform_closed_form() {
        let p = quad_params();
        for lambda in [0.5, 1.0, 2.0] {
            let q = wp_laplace_quadrature(p, lambda, 1e-9).unwrap();
            let closed = (-p.d_scale * lambda.powf(1.0 / p.alpha)).exp();
            assert!((q - closed).abs() < 1e-7, "lambda={lambda}: {q} vs {closed}");
        }
    }

    #[test]
    fn tau_small_x_log_slope() {
        let p = quad_params();
        let (x1, x2) = (1e-4, 1e-3);
        let slope = (density_tau(p, x2).unwrap().ln() - density_tau(p, x1).unwrap().ln())
            / (x2.ln() - x1.ln());
        assert!((slope + p.alpha).abs() < 0.01, "{slope}");
    }

    #[test]
    fn tau_integral_diverges_like_eps_to_one_minus_alpha() {
        let p = quad_params();
        // I(eps) = int_eps^inf tau ~ c eps^{1-alpha}; fit the exponent
        let mut vals = Vec::new();
        for eps in [1e-4, 1e-3] {
            let v = integrate(|x| density_tau(p, x).unwrap(), eps, 9.0, 1e-10, 1e-10).unwrap();
            vals.push(v);
        }
        let fitted = (vals[1].ln() - vals[0].ln()) / (1e-3f64.ln() - 1e-4f64.ln());
        assert!((fitted - (1.0 - p.alpha)).abs() < 0.05, "{fitted}");
    }

    #[test]
    fn sigma_small_and_large_x_behavior() {
        let p = quad_params();
        let (x1, x2) = (1e-5, 1e-4);
        let slope = (density_sigma(p, x2).unwrap().ln() - density_sigma(p, x1).unwrap().ln())
            / (x2.ln() - x1.ln());
        assert!((slope - (1.0 - p.alpha)).abs() < 0.01, "{slope}");
        // stretched-exponential tail: log sigma ~ -c x^3 at alpha = 3/2.
        // Fit at D = 1: with the quadrangulation D the density itself
        // underflows f64 past x ~ 9.
        let p = ScalingParams::new(1.5, 1.0).unwrap();
        let xs: Vec<f64> = (0..8).map(|i| 5.0 + i as f64).collect();
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .map(|&x| (x.ln(), (-(density_sigma(p, x).unwrap().ln())).ln()))
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let sy: f64 = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope: f64 = pts.iter().map(|p| (p.0 - sx) * (p.1 - sy)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - sx) * (p.0 - sx)).sum::<f64>();
        assert!((slope - 3.0).abs() < 0.05, "stretch exponent {slope}");
    }

    #[test]
    fn wp_large_y_log_slope() {
        let p = quad_params();
        let (y1, y2) = (1e5, 1e6);
        let slope = (density_wp(p, y2).unwrap().ln() - density_wp(p, y1).unwrap().ln())
            / (y2.ln() - y1.ln());
        assert!((slope + (1.0 + 1.0 / p.alpha)).abs() < 0.02, "{slope}");
    }

    #[test]
    fn block_moment_ratio_identity() {
        // E_block[r^s]/E_0[r^s] = sigma-moment of x^{s/d}; closed Gamma ratio
        // at d = 4, d~ = 6
        let p = quad_params();
        let (d, dt) = (4.0, 6.0);
        for s in [1.0, 2.0, 3.0] {
            let lhs = sigma_moment(p, s / d).unwrap();
            // at s = 2 both Gamma((s+d-dt)/d) and Gamma((s+d-dt)/dt) hit the
            // pole at 0; their ratio tends to dt/d
            let pole_pair = if (s + d - dt).abs() < 1e-12 {
                d / dt
            } else {
                gamma((s + d - dt) / d) / gamma((s + d - dt) / dt)
            };
            let rhs = pole_pair * gamma((d - dt) / dt) / gamma((d - dt) / d)
                / p.d_scale.powf(s / d);
            assert!((lhs / rhs - 1.0).abs() < 1e-10, "s={s}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn alpha_domain_is_enforced() {
        assert!(matches!(wright_s(1.0, 1.0), Err(ScalingError::AlphaOutOfRange(_))));
        assert!(matches!(wright_s(2.0, 1.0), Err(ScalingError::AlphaOutOfRange(_))));
        assert!(ScalingParams::new(2.5, 1.0).is_err());
    }

    #[test]
    fn series_flags_non_convergence() {
        // alpha = 1.05, x = 2: the alternating series needs far more than
        // 200 terms before it starts decaying
        assert!(matches!(
            wright_s_series(1.05, 2.0, 1e-16),
            Err(ScalingError::SeriesNonConvergence(_))
        ));
    }
}
