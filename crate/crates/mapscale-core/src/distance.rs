//! Distance profiles: rho_0 for maps made of a single simple block and
//! rho_block for block-weighted quadrangulations at the dual critical point,
//! plus the convolution identity
//!     rho_block(r) = int_0^inf sigma(x) x^{-1/4} rho_0(r / x^{1/4}) dx
//! verified numerically against the closed form.

use num_complex::Complex64;
use thiserror::Error;

use crate::quadrature::{self, QuadError};
use crate::scaling::{density_sigma, ScalingParams};
use crate::special::gamma;

#[derive(Debug, Error)]
pub enum DistanceError {
    #[error("r = {0} is below the supported range (pole region)")]
    RadiusTooSmall(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("scaling kernel failure: {0}")]
    Scaling(#[from] crate::scaling::ScalingError),
}

pub type Result<T> = std::result::Result<T, DistanceError>;

/// Geometry of the quadrangulation profiles: omega = 3^{1/4}/2^{1/2},
/// D = 3/2^{2/3}, Hausdorff dimensions d = 4 and d~ = alpha d = 6.
#[derive(Clone, Copy, Debug)]
pub struct ProfileParams {
    pub omega: f64,
    pub d_scale: f64,
    pub dim: f64,
    pub dim_block: f64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            omega: 3f64.powf(0.25) / 2f64.sqrt(),
            d_scale: 3.0 / 2f64.powf(2.0 / 3.0),
            dim: 4.0,
            dim_block: 6.0,
        }
    }
}

const OMEGA: f64 = 0.9306048591020996; // 3^{1/4}/2^{1/2}

/// F'(z) = -4 omega^3 cosh(omega z)/sinh^3(omega z); third-order pole at 0.
/// Near the pole the Laurent expansion
/// -4/z^3 (1 - (omega z)^4/15 + 4 (omega z)^6/189 + ...) avoids the 0/0
/// blowup of the quotient.
pub fn f_prime(z: Complex64) -> Complex64 {
    let w = z * OMEGA;
    if w.norm() < 1e-3 {
        let w4 = w.powu(4);
        let w6 = w.powu(6);
        let one = Complex64::new(1.0, 0.0);
        return -4.0 / (z * z * z) * (one - w4 / 15.0 + w6 * (4.0 / 189.0));
    }
    -4.0 * OMEGA.powi(3) * w.cosh() / w.sinh().powu(3)
}

/// 2 Re{ e^{i pi/4} F'(e^{i pi/4} a) } for real a > 0.
///
/// The two conjugate terms are each O(a^{-3}) while their sum is O(a^3)
/// (the leading Laurent orders sit at right angles to the real axis), so
/// the direct complex evaluation drowns in rounding noise for small a.
/// There the phase-folded Laurent series
///   8 omega^3 [ (4/189)(wa)^3 - (8/10395)(wa)^7 + ... ]
/// takes over.
pub fn rho0_bracket(a: f64) -> f64 {
    let wa = OMEGA * a;
    if wa < 0.12 {
        return 8.0 * OMEGA.powi(3) * ((4.0 / 189.0) * wa.powi(3) - (8.0 / 10395.0) * wa.powi(7));
    }
    let phase = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    let v = phase * f_prime(phase * a);
    2.0 * v.re
}

/// 2 Re{ F'(e^{i pi/6} b) } for real b > 0, with the matching small-argument
/// series 8 omega^3 (sqrt3/2) [ (wb)/15 - (wb)^5/225 + (8/10395)(wb)^7 ].
pub fn rho_block_bracket(b: f64) -> f64 {
    let wb = OMEGA * b;
    if wb < 0.12 {
        return 8.0 * OMEGA.powi(3) * (3f64.sqrt() / 2.0)
            * (wb / 15.0 - wb.powi(5) / 225.0 + (8.0 / 10395.0) * wb.powi(7));
    }
    let phase = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_6);
    2.0 * f_prime(phase * b).re
}

/// Distance profile of simple quadrangulations:
/// rho_0(r) = 2 sqrt(3/pi) int_0^inf e^{-mu^2} mu^{5/2}
///            { e^{i pi/4} F'(e^{i pi/4} mu^{1/2} r) + c.c. } dmu.
pub fn rho0(r: f64, tol: f64) -> Result<f64> {
    if r < 1e-4 {
        return Err(DistanceError::RadiusTooSmall(r));
    }
    let pref = 2.0 * (3.0 / std::f64::consts::PI).sqrt();
    let mu_max = (1e3_f64 / tol).ln().sqrt();
    let f = move |mu: f64| {
        if mu <= 0.0 {
            return 0.0;
        }
        pref * (-mu * mu).exp() * mu.powf(2.5) * rho0_bracket(mu.sqrt() * r)
    };
    Ok(quadrature::integrate(f, 0.0, mu_max, tol, 1e-12)?)
}

/// Block distance profile of block-weighted quadrangulations at u_cr:
/// rho_block(r) = 3/Gamma(4/3) int_0^inf e^{-mu^3} mu^{7/2} D^{1/4}
///                { F'(e^{i pi/6} mu^{1/2} D^{1/4} r) + c.c. } dmu.
pub fn rho_block_closed(r: f64, tol: f64) -> Result<f64> {
    if r < 1e-4 {
        return Err(DistanceError::RadiusTooSmall(r));
    }
    let params = ProfileParams::default();
    let d4 = params.d_scale.powf(0.25);
    let pref = 3.0 / gamma(4.0 / 3.0) * d4;
    let mu_max = (1e3_f64 / tol).ln().cbrt();
    let f = move |mu: f64| {
        if mu <= 0.0 {
            return 0.0;
        }
        pref * (-mu.powi(3)).exp() * mu.powf(3.5) * rho_block_bracket(mu.sqrt() * d4 * r)
    };
    Ok(quadrature::integrate(f, 0.0, mu_max, tol, 1e-12)?)
}

/// rho_0 sampled on a log grid with shape-preserving cubic interpolation;
/// below the grid the cubic small-r law rho_0 ~ c r^3 extends it, above it
/// the profile has decayed under any tolerance used here.
pub struct Rho0Cache {
    ln_r: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    r_min: f64,
    r_max: f64,
    cubic_prefactor: f64,
}

impl Rho0Cache {
    pub fn build(points: usize, tol: f64) -> Result<Rho0Cache> {
        let (r_min, r_max) = (1e-3f64, 20.0f64);
        let ln_min = r_min.ln();
        let ln_max = r_max.ln();
        let mut ln_r = Vec::with_capacity(points);
        let mut values = Vec::with_capacity(points);
        for i in 0..points {
            let lr = ln_min + (ln_max - ln_min) * i as f64 / (points - 1) as f64;
            ln_r.push(lr);
            values.push(rho0(lr.exp(), tol)?);
        }
        let slopes = pchip_slopes(&ln_r, &values);
        let cubic_prefactor = values[0] / r_min.powi(3);
        Ok(Rho0Cache { ln_r, values, slopes, r_min, r_max, cubic_prefactor })
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r < self.r_min {
            return self.cubic_prefactor * r.powi(3);
        }
        if r > self.r_max {
            return 0.0;
        }
        let x = r.ln();
        // binary search for the containing interval
        let mut lo = 0usize;
        let mut hi = self.ln_r.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.ln_r[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let h = self.ln_r[hi] - self.ln_r[lo];
        let s = (x - self.ln_r[lo]) / h;
        let (y0, y1) = (self.values[lo], self.values[hi]);
        let (d0, d1) = (self.slopes[lo] * h, self.slopes[hi] * h);
        // cubic Hermite basis
        let s2 = s * s;
        let s3 = s2 * s;
        y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
            + d0 * (s3 - 2.0 * s2 + s)
            + y1 * (-2.0 * s3 + 3.0 * s2)
            + d1 * (s3 - s2)
    }
}

/// Fritsch-Carlson monotone slopes: zero at local extrema, weighted harmonic
/// mean of adjacent secants elsewhere.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    // one-sided endpoint slopes, clamped to preserve shape
    d[0] = endpoint_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = endpoint_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn endpoint_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Convolution route with caller-supplied kernels, used both for the
/// standard identity and for the stuffed-map rescaling check.
pub fn conv_profile<S, R>(sigma: S, rho0_fn: R, r: f64, tol: f64) -> Result<f64>
where
    S: Fn(f64) -> f64,
    R: Fn(f64) -> f64,
{
    // the inner argument r/x^{1/4} exceeds the rho_0 support for
    // x < (r/20)^4; sigma's stretched tail dies by x ~ 10
    let x_lo = (r / 20.0).powi(4);
    let f = move |x: f64| {
        if x <= x_lo {
            return 0.0;
        }
        let scale = x.powf(0.25);
        sigma(x) / scale * rho0_fn(r / scale)
    };
    Ok(quadrature::integrate_with_limit(f, 0.0, 10.0, tol, 1e-12, 20_000)?)
}

/// rho_block via the convolution identity, with sigma at the
/// quadrangulation parameters and the cached rho_0.
pub fn rho_block_conv(cache: &Rho0Cache, r: f64, tol: f64) -> Result<f64> {
    let params = ScalingParams::new(1.5, ProfileParams::default().d_scale).unwrap();
    conv_profile(
        move |x| density_sigma(params, x).unwrap_or(0.0),
        |rr| cache.eval(rr),
        r,
        tol,
    )
}

/// E[r^s] under a profile, by quadrature.
pub fn profile_moment<F: Fn(f64) -> Result<f64>>(profile: F, s: f64, tol: f64) -> Result<f64> {
    let f = |r: f64| {
        if r <= 1e-4 {
            return 0.0;
        }
        r.powf(s) * profile(r).unwrap_or(0.0)
    };
    Ok(quadrature::integrate(f, 0.0, 14.0, tol, 1e-12)?)
}

/// The small-r prefactor of rho_block(r) ~ const * r at d = 4, alpha = 3/2:
/// const = alpha Gamma(1+1/alpha)/(Gamma(2-alpha) Gamma(1-1/alpha))
///         D^{2-alpha} d int_0^inf y^{-d(2-alpha)} rho_0(y) dy.
pub fn rho_block_small_r_prefactor(cache: &Rho0Cache, tol: f64) -> Result<f64> {
    let alpha = 1.5f64;
    let dim = 4.0f64;
    let d_scale = ProfileParams::default().d_scale;
    let integral = quadrature::integrate(
        |y| {
            if y <= 0.0 {
                return 0.0;
            }
            cache.eval(y) * y.powf(-dim * (2.0 - alpha))
        },
        0.0,
        20.0,
        tol,
        1e-12,
    )?;
    Ok(alpha * gamma(1.0 + 1.0 / alpha) / (gamma(2.0 - alpha) * gamma(1.0 - 1.0 / alpha))
        * d_scale.powf(2.0 - alpha)
        * dim
        * integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::fit_slope;
    use once_cell::sync::Lazy;

    static CACHE: Lazy<Rho0Cache> = Lazy::new(|| Rho0Cache::build(600, 1e-9).unwrap());

    #[test]
    fn f_prime_on_the_real_axis() {
        for z in [0.3, 1.0, 2.5, 7.0] {
            let v = f_prime(Complex64::new(z, 0.0));
            assert!(v.im.abs() < 1e-15);
            assert!(v.re < 0.0, "F'({z}) = {v}");
        }
        // conjugation symmetry
        let z = Complex64::new(0.8, 0.6);
        let a = f_prime(z.conj());
        let b = f_prime(z).conj();
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn f_prime_laurent_matches_direct() {
        // compare the pole expansion against the quotient just outside the
        // switch radius
        for &s in &[1.1e-3, 2e-3, 5e-3] {
            for &angle in &[0.0, 0.7, 2.1] {
                let z = Complex64::from_polar(s / OMEGA, angle);
                let direct = -4.0 * OMEGA.powi(3) * (z * OMEGA).cosh() / (z * OMEGA).sinh().powu(3);
                let w4 = (z * OMEGA).powu(4);
                let w6 = (z * OMEGA).powu(6);
                let laurent =
                    -4.0 / (z * z * z) * (Complex64::new(1.0, 0.0) - w4 / 15.0 + w6 * (4.0 / 189.0));
                assert!(
                    (direct - laurent).norm() < 1e-10 * direct.norm(),
                    "s={s} angle={angle}"
                );
            }
        }
    }

    #[test]
    fn f_prime_exponential_decay() {
        // F'(z) ~ -16 omega^3 e^{-2 omega z} for large real z; the next
        // correction is O(e^{-2 omega z}) relative, so test far out
        let pts: Vec<(f64, f64)> = (0..6)
            .map(|i| {
                let z = 6.0 + 2.0 * i as f64;
                (z, (-f_prime(Complex64::new(z, 0.0)).re).ln())
            })
            .collect();
        let slope = fit_slope(&pts);
        assert!((slope + 2.0 * OMEGA).abs() < 1e-4, "{slope}");
        let z = 14.0;
        let ratio = -f_prime(Complex64::new(z, 0.0)).re / (16.0 * OMEGA.powi(3) * (-2.0 * OMEGA * z).exp());
        assert!((ratio - 1.0).abs() < 1e-9, "{ratio}");
    }

    #[test]
    fn bracket_series_matches_direct_at_seam() {
        // compare the Laurent-folded series against the complex route on
        // both sides of the switch radius
        for a in [0.10, 0.125, 0.14, 0.2, 0.3] {
            let a = a / OMEGA;
            let phase = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
            let direct0 = 2.0 * (phase * f_prime(phase * a)).re;
            let wa = OMEGA * a;
            let series0 = 8.0 * OMEGA.powi(3)
                * ((4.0 / 189.0) * wa.powi(3) - (8.0 / 10395.0) * wa.powi(7));
            assert!((direct0 / series0 - 1.0).abs() < 2e-7, "a={a}: {direct0} vs {series0}");
            let phase6 = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_6);
            let directb = 2.0 * f_prime(phase6 * a).re;
            let seriesb = 8.0 * OMEGA.powi(3) * (3f64.sqrt() / 2.0)
                * (wa / 15.0 - wa.powi(5) / 225.0 + (8.0 / 10395.0) * wa.powi(7));
            assert!((directb / seriesb - 1.0).abs() < 2e-8, "a={a}: {directb} vs {seriesb}");
        }
    }

    #[test]
    fn rho0_rejects_pole_region() {
        assert!(matches!(rho0(1e-5, 1e-8), Err(DistanceError::RadiusTooSmall(_))));
    }

    #[test]
    fn profiles_normalize_to_one() {
        let i0 = quadrature::integrate(|r| CACHE.eval(r), 0.0, 14.0, 1e-9, 1e-10).unwrap();
        assert!((i0 - 1.0).abs() < 1e-6, "int rho0 = {i0}");
        let ib = profile_moment(|r| rho_block_closed(r, 1e-9), 0.0, 1e-8).unwrap();
        assert!((ib - 1.0).abs() < 1e-6, "int rho_block = {ib}");
    }

    #[test]
    fn small_r_power_laws() {
        let s0 = {
            let (r1, r2) = (0.02, 0.08);
            (rho0(r2, 1e-10).unwrap().ln() - rho0(r1, 1e-10).unwrap().ln()) / (r2 / r1).ln()
        };
        assert!((s0 - 3.0).abs() < 0.05, "rho0 slope {s0}");
        let sb = {
            let (r1, r2) = (0.02, 0.08);
            (rho_block_closed(r2, 1e-10).unwrap().ln() - rho_block_closed(r1, 1e-10).unwrap().ln())
                / (r2 / r1).ln()
        };
        assert!((sb - 1.0).abs() < 0.05, "rho_block slope {sb}");
    }

    #[test]
    fn fisher_stretched_tails() {
        // log rho ~ -c r^{delta} with delta = 4/3 for rho0 and 6/5 for
        // rho_block. The local log-log slope carries an O(ln r / r^{delta})
        // bias that decays too slowly for any plain window fit, so measure
        // it on two windows and extrapolate linearly in r^{-delta}.
        let local = |f: &dyn Fn(f64) -> f64, r1: f64, r2: f64| {
            ((-(f(r2).ln())).ln() - (-(f(r1).ln())).ln()) / (r2.ln() - r1.ln())
        };
        let extrapolated = |f: &dyn Fn(f64) -> f64, delta: f64| {
            let s1 = local(f, 8.0, 10.0);
            let s2 = local(f, 14.0, 17.0);
            let x1 = (80f64).sqrt().powf(-delta);
            let x2 = (14f64 * 17.0).sqrt().powf(-delta);
            s2 + (s2 - s1) * x2 / (x1 - x2)
        };
        let s0 = extrapolated(&|r| rho0(r, 1e-13).unwrap(), 4.0 / 3.0);
        assert!((s0 - 4.0 / 3.0).abs() < 0.1, "rho0 stretch {s0}");
        let sb = extrapolated(&|r| rho_block_closed(r, 1e-13).unwrap(), 6.0 / 5.0);
        assert!((sb - 6.0 / 5.0).abs() < 0.1, "rho_block stretch {sb}");
    }

    #[test]
    fn convolution_identity_spot_checks() {
        for r in [0.4, 1.0, 2.2] {
            let conv = rho_block_conv(&CACHE, r, 1e-7).unwrap();
            let closed = rho_block_closed(r, 1e-9).unwrap();
            assert!((conv - closed).abs() < 1e-4, "r={r}: {conv} vs {closed}");
        }
    }

    #[test]
    fn stuffed_map_rescaling_identity() {
        // sigma_bar(x) = (1/3) sigma(x/3), rho0_bar(r) = 3^{1/4} rho0(3^{1/4} r)
        // reproduce the same block profile
        let params = ScalingParams::new(1.5, ProfileParams::default().d_scale).unwrap();
        let c = 3f64.powf(0.25);
        for r in [0.5, 1.3] {
            let conv = conv_profile(
                move |x| density_sigma(params, x / 3.0).unwrap_or(0.0) / 3.0,
                |rr| c * CACHE.eval(c * rr),
                r,
                1e-7,
            )
            .unwrap();
            let closed = rho_block_closed(r, 1e-9).unwrap();
            assert!((conv - closed).abs() < 1e-4, "r={r}: {conv} vs {closed}");
        }
    }

    #[test]
    fn moment_identity_first_moment() {
        // E_block[r] = Gamma(-1/4)Gamma(-1/3)/(Gamma(-1/6)Gamma(-1/2)) D^{-1/4} E_0[r]
        let e0 = profile_moment(|r| rho0(r, 1e-9), 1.0, 1e-8).unwrap();
        let eb = profile_moment(|r| rho_block_closed(r, 1e-9), 1.0, 1e-8).unwrap();
        let d = ProfileParams::default().d_scale;
        let ratio = gamma(-0.25) * gamma(-1.0 / 3.0) / (gamma(-1.0 / 6.0) * gamma(-0.5))
            / d.powf(0.25);
        assert!((eb - ratio * e0).abs() < 1e-4, "{eb} vs {}", ratio * e0);
    }

    #[test]
    fn small_r_prefactor_two_routes() {
        let pref = rho_block_small_r_prefactor(&CACHE, 1e-9).unwrap();
        let r = 0.01;
        let direct = rho_block_closed(r, 1e-11).unwrap() / r;
        assert!((direct / pref - 1.0).abs() < 0.01, "{direct} vs {pref}");
    }

    #[test]
    fn profiles_nonnegative_and_unimodal() {
        for profile in [&rho0 as &dyn Fn(f64, f64) -> Result<f64>, &rho_block_closed] {
            let vals: Vec<f64> = (0..80)
                .map(|i| {
                    let r = 10f64.powf(-3.0 + 4.08 * i as f64 / 79.0); // up to ~12
                    profile(r.max(1.01e-3), 1e-9).unwrap()
                })
                .collect();
            assert!(vals.iter().all(|&v| v >= -1e-12));
            let mut sign_changes = 0;
            for w in vals.windows(2) {
                if w[1] < w[0] - 1e-12 && sign_changes == 0 {
                    sign_changes = 1;
                } else if w[1] > w[0] + 1e-12 && sign_changes == 1 {
                    sign_changes = 2;
                }
            }
            assert!(sign_changes <= 1, "profile not unimodal");
        }
    }
}
