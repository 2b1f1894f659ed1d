//! Multifractal spectra of the direct (gamma < 2) and dual (gamma' > 2)
//! random measures: L^q spectra, dimension spectra, their quantum-ball
//! counterparts, the KPZ exponent map, and a discrete Legendre-transform
//! oracle used to validate every closed form.

use serde::Serialize;

/// Q_gamma = 2/gamma + gamma/2; invariant under gamma -> 4/gamma.
pub fn q_coefficient(gamma: f64) -> f64 {
    2.0 / gamma + gamma / 2.0
}

/// a_gamma = 2/gamma - gamma/2; positive below 2, negative on the dual branch.
pub fn a_coefficient(gamma: f64) -> f64 {
    2.0 / gamma - gamma / 2.0
}

/// Moment scaling exponent xi_gamma(q) = (2 + gamma^2/2) q - (gamma^2/2) q^2,
/// for q < 4/gamma^2. The same quadratic serves both branches.
pub fn xi(gamma: f64, q: f64) -> Option<f64> {
    if q >= 4.0 / (gamma * gamma) {
        return None; // moments blow up
    }
    Some(xi_unchecked(gamma, q))
}

fn xi_unchecked(gamma: f64, q: f64) -> f64 {
    let g2 = gamma * gamma / 2.0;
    (2.0 + g2) * q - g2 * q * q
}

/// Expected L^q spectrum tau-bar = xi - 2.
pub fn tau_bar(gamma: f64, q: f64) -> f64 {
    xi_unchecked(gamma, q) - 2.0
}

/// Expected dimension spectrum f-bar(beta) = 2 - (2 + gamma^2/2 - beta)^2/(2 gamma^2).
pub fn f_bar(gamma: f64, beta: f64) -> f64 {
    let c = 2.0 + gamma * gamma / 2.0 - beta;
    2.0 - c * c / (2.0 * gamma * gamma)
}

/// Almost-sure dimension spectrum for gamma < 2: the parabola truncated at
/// zero, supported on [(2-gamma)^2/2, (2+gamma)^2/2].
pub fn f_as(gamma: f64, beta: f64) -> f64 {
    assert!((0.0..2.0).contains(&gamma));
    assert!(beta >= 0.0);
    let lo = (2.0 - gamma) * (2.0 - gamma) / 2.0;
    let hi = (2.0 + gamma) * (2.0 + gamma) / 2.0;
    if beta < lo || beta > hi {
        0.0
    } else {
        f_bar(gamma, beta)
    }
}

/// Almost-sure L^q spectrum for gamma < 2: linear with slope (2+gamma)^2/2
/// below q = -2/gamma, the quadratic in between, linear with slope
/// (2-gamma)^2/2 above q = 2/gamma.
pub fn tau_as(gamma: f64, q: f64) -> f64 {
    assert!((0.0..2.0).contains(&gamma));
    if q <= -2.0 / gamma {
        (2.0 + gamma) * (2.0 + gamma) / 2.0 * q
    } else if q >= 2.0 / gamma {
        (2.0 - gamma) * (2.0 - gamma) / 2.0 * q
    } else {
        tau_bar(gamma, q)
    }
}

/// Predicted almost-sure dimension spectrum on the dual branch gamma' > 2:
/// a linear piece f = 4 beta/gamma'^2 on [0, gamma'^2/2 - 2], the parabola
/// up to (2+gamma')^2/2, zero beyond.
pub fn f_as_dual(gamma_prime: f64, beta: f64) -> f64 {
    assert!(gamma_prime > 2.0);
    assert!(beta >= 0.0);
    let junction = gamma_prime * gamma_prime / 2.0 - 2.0;
    let hi = (2.0 + gamma_prime) * (2.0 + gamma_prime) / 2.0;
    if beta <= junction {
        4.0 * beta / (gamma_prime * gamma_prime)
    } else if beta <= hi {
        f_bar(gamma_prime, beta)
    } else {
        0.0
    }
}

/// Predicted almost-sure L^q spectrum on the dual branch: linear below
/// q = -2/gamma', quadratic in between, flat at 0 from q = 4/gamma'^2 on
/// (where the spectrum attains its maximum).
pub fn tau_as_dual(gamma_prime: f64, q: f64) -> f64 {
    assert!(gamma_prime > 2.0);
    if q <= -2.0 / gamma_prime {
        (2.0 + gamma_prime) * (2.0 + gamma_prime) / 2.0 * q
    } else if q >= 4.0 / (gamma_prime * gamma_prime) {
        0.0
    } else {
        tau_bar(gamma_prime, q)
    }
}

/// KPZ map: Delta(q) = (sqrt(2q + a^2) - a)/gamma with a = 2/gamma - gamma/2.
/// The same expression covers the dual branch, where a < 0. Requires
/// 2q >= -a^2.
pub fn kpz_delta(gamma: f64, q: f64) -> Option<f64> {
    let a = a_coefficient(gamma);
    let disc = 2.0 * q + a * a;
    if disc < 0.0 {
        return None;
    }
    Some((disc.sqrt() - a) / gamma)
}

/// Inverse KPZ map: q = (gamma^2/2) Delta^2 + (2 - gamma^2/2) Delta.
pub fn kpz_inverse(gamma: f64, delta: f64) -> f64 {
    let g2 = gamma * gamma / 2.0;
    g2 * delta * delta + (2.0 - g2) * delta
}

/// Expected quantum-ball L^q spectrum: Delta_gamma(q) - 1.
pub fn tilde_tau_bar(gamma: f64, q: f64) -> Option<f64> {
    Some(kpz_delta(gamma, q)? - 1.0)
}

/// Expected quantum-ball dimension spectrum
/// 1 + a/gamma - a^2 beta/2 - 1/(2 gamma^2 beta), beta > 0.
pub fn tilde_f_bar(gamma: f64, beta: f64) -> f64 {
    assert!(beta > 0.0);
    let a = a_coefficient(gamma);
    1.0 + a / gamma - a * a * beta / 2.0 - 1.0 / (2.0 * gamma * gamma * beta)
}

/// Almost-sure quantum-ball dimension spectrum: the expected one truncated
/// at zero, supported on [2/(2+gamma)^2, 2/(2-gamma)^2] (both branches).
pub fn tilde_f_as(gamma: f64, beta: f64) -> f64 {
    assert!(beta > 0.0);
    let lo = 2.0 / ((2.0 + gamma) * (2.0 + gamma));
    let hi = 2.0 / ((2.0 - gamma) * (2.0 - gamma));
    if beta < lo || beta > hi {
        0.0
    } else {
        tilde_f_bar(gamma, beta).max(0.0)
    }
}

/// Transition abscissae of the quantum-ball L^q spectrum:
/// q_{-+} = 2(2 -+ Q_gamma) = -+(2 -+ gamma)^2/gamma; shared by gamma and 4/gamma.
pub fn tilde_tau_knees(gamma: f64) -> (f64, f64) {
    let q_minus = -(2.0 - gamma) * (2.0 - gamma) / gamma;
    let q_plus = (2.0 + gamma) * (2.0 + gamma) / gamma;
    (q_minus, q_plus)
}

/// Almost-sure quantum-ball L^q spectrum: Delta - 1 between the knees,
/// linear with slopes 2/(2-gamma)^2 and 2/(2+gamma)^2 outside.
pub fn tilde_tau_as(gamma: f64, q: f64) -> f64 {
    let (q_minus, q_plus) = tilde_tau_knees(gamma);
    if q <= q_minus {
        2.0 / ((2.0 - gamma) * (2.0 - gamma)) * q
    } else if q >= q_plus {
        2.0 / ((2.0 + gamma) * (2.0 + gamma)) * q
    } else {
        kpz_delta(gamma, q).expect("inside the KPZ domain") - 1.0
    }
}

/// Beta where tilde_f_bar peaks: 1/(gamma |a_gamma|).
pub fn tilde_f_peak(gamma: f64) -> (f64, f64) {
    let a = a_coefficient(gamma);
    let beta = 1.0 / (gamma * a.abs());
    (beta, tilde_f_bar(gamma, beta))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SpectrumKind {
    LqExpected,
    LqAlmostSure,
    DimExpected,
    DimAlmostSure,
    QuantumBallLq,
    QuantumBallDim,
}

/// A sampled spectrum with its validity interval and piece boundaries.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumCurve {
    pub kind: SpectrumKind,
    pub gamma: f64,
    pub samples: Vec<(f64, f64)>,
    pub validity: (f64, f64),
    pub piece_boundaries: Vec<f64>,
}

/// Sample one of the almost-sure spectra on a uniform grid. `gamma` may be
/// on either side of 2; the dual formulas are selected automatically.
pub fn spectrum_curve(kind: SpectrumKind, gamma: f64, steps: usize) -> SpectrumCurve {
    let dual = gamma > 2.0;
    let (lo, hi, pieces): (f64, f64, Vec<f64>) = match kind {
        SpectrumKind::LqAlmostSure | SpectrumKind::LqExpected => {
            if dual {
                let b = vec![-2.0 / gamma, 4.0 / (gamma * gamma)];
                (-2.0, 2.0, b)
            } else {
                let b = vec![-2.0 / gamma, 2.0 / gamma];
                (-3.0, 3.0, b)
            }
        }
        SpectrumKind::DimAlmostSure | SpectrumKind::DimExpected => {
            let hi = (2.0 + gamma) * (2.0 + gamma) / 2.0;
            let pieces = if dual {
                vec![gamma * gamma / 2.0 - 2.0, hi]
            } else {
                vec![(2.0 - gamma) * (2.0 - gamma) / 2.0, hi]
            };
            (1e-6, hi * 1.2, pieces)
        }
        SpectrumKind::QuantumBallLq => {
            let (qm, qp) = tilde_tau_knees(gamma);
            (qm * 1.5 - 1.0, qp * 1.2, vec![qm, qp])
        }
        SpectrumKind::QuantumBallDim => {
            let lo = 2.0 / ((2.0 + gamma) * (2.0 + gamma));
            let hi = 2.0 / ((2.0 - gamma) * (2.0 - gamma));
            (lo * 0.5, hi * 1.2, vec![lo, hi])
        }
    };
    let f: Box<dyn Fn(f64) -> f64> = match (kind, dual) {
        (SpectrumKind::LqExpected, _) => Box::new(move |q| tau_bar(gamma, q)),
        (SpectrumKind::LqAlmostSure, false) => Box::new(move |q| tau_as(gamma, q)),
        (SpectrumKind::LqAlmostSure, true) => Box::new(move |q| tau_as_dual(gamma, q)),
        (SpectrumKind::DimExpected, _) => Box::new(move |b| f_bar(gamma, b)),
        (SpectrumKind::DimAlmostSure, false) => Box::new(move |b| f_as(gamma, b)),
        (SpectrumKind::DimAlmostSure, true) => Box::new(move |b| f_as_dual(gamma, b)),
        (SpectrumKind::QuantumBallLq, _) => Box::new(move |q| tilde_tau_as(gamma, q)),
        (SpectrumKind::QuantumBallDim, _) => Box::new(move |b| tilde_f_as(gamma, b)),
    };
    let samples = (0..=steps)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / steps as f64;
            (x, f(x))
        })
        .collect();
    SpectrumCurve { kind, gamma, samples, validity: (lo, hi), piece_boundaries: pieces }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LegendreDirection {
    /// f(beta) = inf_q { beta q - tau(q) }
    Forward,
    /// tau(q) = inf_beta { beta q - f(beta) }
    Inverse,
}

pub struct LegendreResult {
    pub samples: Vec<(f64, f64)>,
    /// set when the input failed the discrete concavity check
    pub non_concave_input: bool,
}

/// Discrete Legendre transform: for each output abscissa take the minimum of
/// x*y - v over the input samples. O(grid^2); used as an oracle only.
pub fn legendre_numeric(
    input: &[(f64, f64)],
    direction: LegendreDirection,
    output_grid: &[f64],
) -> LegendreResult {
    let non_concave_input = !is_concave(input);
    let samples = output_grid
        .iter()
        .map(|&y| {
            let inf = input
                .iter()
                .map(|&(x, v)| match direction {
                    LegendreDirection::Forward => y * x - v,
                    LegendreDirection::Inverse => x * y - v,
                })
                .fold(f64::INFINITY, f64::min);
            (y, inf)
        })
        .collect();
    LegendreResult { samples, non_concave_input }
}

fn is_concave(samples: &[(f64, f64)]) -> bool {
    samples.windows(3).all(|w| {
        let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
        let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
        s2 <= s1 + 1e-9
    })
}

pub fn uniform_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rat;
    use num_rational::BigRational;
    use num_traits::One;

    const SQRT_8_3: f64 = 1.632993161855452; // sqrt(8/3)
    const SQRT_6: f64 = 2.449489742783178;

    fn pseudo_random(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn xi_fixed_points() {
        for gamma in [1.0, SQRT_8_3, 1.9] {
            assert_eq!(xi(gamma, 0.0).unwrap(), 0.0);
            assert!((xi(gamma, 1.0).unwrap() - 2.0).abs() < 1e-15);
        }
        // domain boundary
        assert!(xi(SQRT_8_3, 1.5).is_none());
        assert!(xi(SQRT_8_3, 1.499).is_some());
    }

    #[test]
    fn xi_hand_evaluation() {
        // gamma = sqrt(8/3), q = 1/2: (2 + 4/3)/2 - (4/3)/4 = 5/3 - 1/3 = 4/3
        let v = xi(SQRT_8_3, 0.5).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-14, "{v}");
    }

    #[test]
    fn xi_duality() {
        // xi_{gamma'}(q) = xi_gamma(alpha q) with alpha = gamma'^2/4
        let mut seed = 42u64;
        for _ in 0..20 {
            let gamma = 1.2 + 0.7 * pseudo_random(&mut seed);
            let gp = 4.0 / gamma;
            let alpha = gp * gp / 4.0;
            let q = -2.0 + 2.9 * pseudo_random(&mut seed) / alpha;
            let lhs = xi_unchecked(gp, q);
            let rhs = xi_unchecked(gamma, alpha * q);
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn string_susceptibility_duality_exact() {
        // (1 - gamma_S)(1 - gamma'_S) = alpha * (1/alpha) = 1, exactly in Q
        let alpha = rat(3, 2);
        let gs = BigRational::one() - &alpha; // 1 - alpha
        let gsp = BigRational::one() - alpha.recip(); // 1 - 1/alpha
        let product = (BigRational::one() - gs) * (BigRational::one() - gsp);
        assert_eq!(product, BigRational::one());
    }

    #[test]
    fn f_as_support_and_maximum() {
        let gamma = SQRT_8_3;
        // maximum 2 at beta = 2 + gamma^2/2
        let beta_peak = 2.0 + gamma * gamma / 2.0;
        assert!((f_as(gamma, beta_peak) - 2.0).abs() < 1e-14);
        // zero at both parabola endpoints
        let lo = (2.0 - gamma) * (2.0 - gamma) / 2.0;
        let hi = (2.0 + gamma) * (2.0 + gamma) / 2.0;
        assert!(f_bar(gamma, lo).abs() < 1e-13);
        assert!(f_bar(gamma, hi).abs() < 1e-13);
        assert_eq!(f_as(gamma, lo * 0.9), 0.0);
        assert_eq!(f_as(gamma, hi * 1.1), 0.0);
    }

    #[test]
    fn f_as_is_truncated_f_bar() {
        for gamma in [1.1, SQRT_8_3] {
            for i in 0..400 {
                let beta = 0.01 + i as f64 * 0.02;
                assert!((f_as(gamma, beta) - f_bar(gamma, beta).max(0.0)).abs() < 1e-12);
            }
        }
        for gp in [SQRT_6, 3.0] {
            // on the dual branch the rule holds beyond the linear piece
            let junction = gp * gp / 2.0 - 2.0;
            for i in 0..300 {
                let beta = junction + i as f64 * 0.02;
                assert!((f_as_dual(gp, beta) - f_bar(gp, beta).max(0.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dual_dimension_spectrum_scaling() {
        // f-bar_{gamma'}(beta) = f-bar_gamma(beta/alpha) on the parabolic range
        let gamma = SQRT_8_3;
        let gp = 4.0 / gamma;
        let alpha = gp * gp / 4.0;
        for i in 0..200 {
            let beta = 0.7 + i as f64 * 0.05;
            let lhs = f_bar(gp, beta);
            let rhs = f_bar(gamma, beta / alpha);
            assert!((lhs - rhs).abs() < 1e-12, "beta={beta}");
        }
    }

    #[test]
    fn dual_junction_derivative_is_continuous() {
        let gp = SQRT_6;
        let junction = gp * gp / 2.0 - 2.0;
        let h = 1e-6;
        let left = (f_as_dual(gp, junction) - f_as_dual(gp, junction - h)) / h;
        let right = (f_as_dual(gp, junction + h) - f_as_dual(gp, junction)) / h;
        let expected = 4.0 / (gp * gp);
        assert!((left - expected).abs() < 1e-5, "{left}");
        assert!((right - expected).abs() < 1e-5, "{right}");
    }

    #[test]
    fn dual_tau_flat_piece_and_maximum() {
        let gp = SQRT_6;
        let q_star = 4.0 / (gp * gp);
        assert_eq!(tau_as_dual(gp, q_star), 0.0);
        assert!((tau_bar(gp, q_star)).abs() < 1e-13);
        // the flat value 0 is the maximum over the whole line
        for i in 0..600 {
            let q = -3.0 + i as f64 * 0.01;
            assert!(tau_as_dual(gp, q) <= 1e-13);
        }
    }

    #[test]
    fn kpz_round_trip() {
        let mut seed = 7u64;
        for &gamma in &[SQRT_8_3, SQRT_6, 1.2, 3.1] {
            for _ in 0..20 {
                let q = -0.2 + 4.0 * pseudo_random(&mut seed);
                if let Some(delta) = kpz_delta(gamma, q) {
                    let back = kpz_inverse(gamma, delta);
                    assert!((back - q).abs() < 1e-12, "gamma={gamma} q={q}");
                }
            }
        }
        // domain error below the branch point
        let a = a_coefficient(SQRT_8_3);
        assert!(kpz_delta(SQRT_8_3, -a * a / 2.0 - 0.01).is_none());
    }

    #[test]
    fn kpz_at_zero_distinguishes_branches() {
        // Delta(0) = 0 below 2 but 1 - 4/gamma'^2 above
        assert!(kpz_delta(SQRT_8_3, 0.0).unwrap().abs() < 1e-15);
        let gp = SQRT_6;
        let v = kpz_delta(gp, 0.0).unwrap();
        assert!((v - (1.0 - 4.0 / (gp * gp))).abs() < 1e-14);
    }

    #[test]
    fn kpz_against_direct_quadratic_solve() {
        // solve q = (g^2/2) d^2 + (2 - g^2/2) d for d numerically and compare
        let gamma = SQRT_8_3;
        let q = 1.0;
        let g2 = gamma * gamma / 2.0;
        let (a, b, c) = (g2, 2.0 - g2, -q);
        let d_direct = (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
        let d_kpz = kpz_delta(gamma, q).unwrap();
        assert!((d_direct - d_kpz).abs() < 1e-13);
    }

    #[test]
    fn quantum_ball_peak_values() {
        // max tilde-f = 1 for gamma < 2 and 4/gamma'^2 on the dual branch
        let (beta, peak) = tilde_f_peak(SQRT_8_3);
        assert!((peak - 1.0).abs() < 1e-12, "{peak} at {beta}");
        let gp = SQRT_6;
        let (_, peak) = tilde_f_peak(gp);
        assert!((peak - 4.0 / (gp * gp)).abs() < 1e-12, "{peak}");
        // consistency with -tilde_tau(0)
        assert!((peak + tilde_tau_as(gp, 0.0)).abs() < 1e-12);
    }

    #[test]
    fn quantum_ball_knees_shared_under_duality() {
        let gamma = SQRT_8_3;
        let gp = 4.0 / gamma;
        let (m1, p1) = tilde_tau_knees(gamma);
        let (m2, p2) = tilde_tau_knees(gp);
        assert!((m1 - m2).abs() < 1e-12);
        assert!((p1 - p2).abs() < 1e-12);
        // and they equal 2(2 -+ Q)
        let q = q_coefficient(gamma);
        assert!((m1 - 2.0 * (2.0 - q)).abs() < 1e-12);
        assert!((p1 - 2.0 * (2.0 + q)).abs() < 1e-12);
    }

    #[test]
    fn legendre_of_parabola_is_its_conjugate() {
        // tau(q) = -q^2/2 has conjugate f(beta) = inf_q(beta q + q^2/2) = -beta^2/2
        let grid = uniform_grid(-6.0, 6.0, 2001);
        let input: Vec<(f64, f64)> = grid.iter().map(|&q| (q, -q * q / 2.0)).collect();
        let out = legendre_numeric(&input, LegendreDirection::Forward, &uniform_grid(-2.0, 2.0, 101));
        assert!(!out.non_concave_input);
        for &(b, v) in &out.samples {
            assert!((v + b * b / 2.0).abs() < 1e-5, "beta={b}: {v}");
        }
    }

    #[test]
    fn legendre_biconjugation_is_idempotent() {
        let grid = uniform_grid(-5.0, 5.0, 2001);
        let input: Vec<(f64, f64)> = grid.iter().map(|&q| (q, -(q * q) / 3.0 - 0.2 * q)).collect();
        let once = legendre_numeric(&input, LegendreDirection::Forward, &uniform_grid(-3.0, 3.0, 1501));
        let twice = legendre_numeric(&once.samples, LegendreDirection::Inverse, &grid);
        for (orig, back) in input.iter().zip(twice.samples.iter()) {
            if orig.0.abs() < 2.0 {
                assert!((orig.1 - back.1).abs() < 1e-5, "q={}", orig.0);
            }
        }
    }

    #[test]
    fn legendre_warns_on_non_concave_input() {
        let input: Vec<(f64, f64)> = uniform_grid(-1.0, 1.0, 50)
            .iter()
            .map(|&q| (q, q * q))
            .collect();
        let out = legendre_numeric(&input, LegendreDirection::Forward, &[0.0]);
        assert!(out.non_concave_input);
    }

    #[test]
    fn forward_legendre_of_tau_bar_gives_f_bar() {
        let gamma = SQRT_8_3;
        let alpha = 4.0 / (gamma * gamma);
        // q-grid spanning 3x the admissible piece, avoiding the moment blow-up
        let q_hi = alpha - 1e-6;
        // the discrete infimum overshoots by (h/2)^2 |tau''|/2; 4001 points
        // keep that under the 1e-6 budget
        let grid = uniform_grid(-2.0 * alpha, q_hi, 4001);
        let input: Vec<(f64, f64)> = grid.iter().map(|&q| (q, tau_bar(gamma, q))).collect();
        let betas = uniform_grid(1.0, 5.5, 400);
        let out = legendre_numeric(&input, LegendreDirection::Forward, &betas);
        for &(b, v) in &out.samples {
            assert!((v - f_bar(gamma, b)).abs() < 1e-6, "beta={b}: {v} vs {}", f_bar(gamma, b));
        }
    }

    #[test]
    fn spectrum_curves_have_piece_boundaries() {
        let c = spectrum_curve(SpectrumKind::QuantumBallLq, SQRT_8_3, 100);
        assert_eq!(c.piece_boundaries.len(), 2);
        assert_eq!(c.samples.len(), 101);
        let c = spectrum_curve(SpectrumKind::DimAlmostSure, SQRT_6, 50);
        assert!((c.piece_boundaries[0] - (6.0 / 2.0 - 2.0)).abs() < 1e-12);
    }
}
