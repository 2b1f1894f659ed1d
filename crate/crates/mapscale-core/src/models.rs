//! The three block-weighted map models: quadrangulations cut into simple
//! blocks, quartic tree structures (rings-and-quartic-maps), and bicubic
//! maps cut into 3-connected blocks.
//!
//! Each model supplies its block counts b_k, its substitution relation
//! between the full-map series M_u(g) and the block series B(t), the exact
//! critical constants at the dual critical point u = u_cr, and a numeric
//! evaluator for M on [0, g_cr].

use std::sync::Mutex;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use once_cell::sync::Lazy;
use thiserror::Error;

use crate::field::{rat, rat_int, rational_sqrt, CoeffField, FieldElem, Radical};
use crate::series::{solve_algebraic_prefix, BivariatePoly, Series, SeriesError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("block index {0} out of range for this model")]
    BlockIndexOutOfRange(usize),
    #[error("g = {0} lies outside [0, g_cr]")]
    OutsideCriticalDisk(f64),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// How the block series argument t is built from (g, M).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubstitutionKind {
    /// t = g M^2, M - 1 = u (B(t) - 1)
    PowerTwo,
    /// t = g M^3, M - 1 = u (B(t) - 1)
    PowerThree,
    /// t = g / (1 - u M)^2, M = B(t) / (1 - u M)
    Ddsw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelName {
    QuadSimpleBlocks,
    DdswQuartic,
    BicubicThreeConnected,
}

impl ModelName {
    pub const ALL: [ModelName; 3] = [
        ModelName::QuadSimpleBlocks,
        ModelName::DdswQuartic,
        ModelName::BicubicThreeConnected,
    ];

    pub fn parse(s: &str) -> Option<ModelName> {
        match s.to_ascii_lowercase().as_str() {
            "quad" | "quadrangulations" | "quad-simple-blocks" => Some(ModelName::QuadSimpleBlocks),
            "ddsw" | "quartic" | "ddsw-quartic" => Some(ModelName::DdswQuartic),
            "bicubic" | "bicubic-3c" | "bicubic-three-connected" => Some(ModelName::BicubicThreeConnected),
            _ => None,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            ModelName::QuadSimpleBlocks => "quad",
            ModelName::DdswQuartic => "ddsw",
            ModelName::BicubicThreeConnected => "bicubic",
        }
    }

    pub fn field(&self) -> CoeffField {
        match self {
            ModelName::DdswQuartic => CoeffField::QuadraticExt(7),
            _ => CoeffField::Rational,
        }
    }

    pub fn substitution_kind(&self) -> SubstitutionKind {
        match self {
            ModelName::QuadSimpleBlocks => SubstitutionKind::PowerTwo,
            ModelName::DdswQuartic => SubstitutionKind::Ddsw,
            ModelName::BicubicThreeConnected => SubstitutionKind::PowerThree,
        }
    }

    /// Smallest admissible root block size.
    pub fn k_min(&self) -> usize {
        match self {
            ModelName::DdswQuartic => 0,
            _ => 1,
        }
    }

    /// Number of positions for the second mark in a size-k block, in t-units.
    pub fn slot_count(&self, k: usize) -> i64 {
        2 * k as i64 - 1
    }

    pub fn alpha(&self) -> BigRational {
        rat(3, 2)
    }

    /// Block count b_k as an exact rational (an integer for all three
    /// models; the bicubic counts come from the algebraic block series).
    pub fn block_count(&self, k: usize) -> Result<BigRational> {
        match self {
            ModelName::QuadSimpleBlocks => {
                // 2 (3k-3)! / ((2k-1)! k!)
                if k < 1 {
                    return Err(ModelError::BlockIndexOutOfRange(k));
                }
                let num = BigInt::from(2) * factorial(3 * k - 3);
                let den = factorial(2 * k - 1) * factorial(k);
                Ok(BigRational::new(num, den))
            }
            ModelName::DdswQuartic => {
                // 2 * 3^k / ((k+1)(k+2)) * C(2k, k)
                let num = BigInt::from(2) * BigInt::from(3).pow(k as u32) * binomial(2 * k, k);
                let den = BigInt::from(k + 1) * BigInt::from(k + 2);
                Ok(BigRational::new(num, den))
            }
            ModelName::BicubicThreeConnected => {
                let b = bicubic_block_series(k);
                Ok(b.coeff(k).rational_part().clone())
            }
        }
    }

    /// B(t) = 1 + sum_{k>=1} b_k t^k (the k = 0 term is 1 for every model).
    pub fn block_series_b(&self, order: usize) -> Result<Series> {
        match self {
            ModelName::BicubicThreeConnected => {
                let b = bicubic_block_series(order);
                Ok(b.truncate(order))
            }
            _ => {
                let field = self.field();
                let mut coeffs = Vec::with_capacity(order + 1);
                coeffs.push(FieldElem::one(field));
                for k in 1..=order {
                    coeffs.push(FieldElem::from_rational(self.block_count(k)?, field));
                }
                Ok(Series::from_coeffs(field, coeffs))
            }
        }
    }

    /// The critical attachment weight, as an exact rational.
    pub fn u_critical(&self) -> BigRational {
        self.critical_constants().u_cr
    }

    /// u_cr embedded in the model's coefficient field.
    pub fn u_critical_elem(&self) -> FieldElem {
        FieldElem::from_rational(self.u_critical(), self.field())
    }

    /// Denominator base of the map series at weight u: den(M_n) divides
    /// E * base^n. For the power-substitution models the coefficients are
    /// integer polynomials in u, so den(u) works; for the quartic trees at
    /// u_cr the Hensel division contributes the field norm 567 = 3^4 * 7.
    pub fn hensel_base(&self, u: &FieldElem) -> Option<i64> {
        use num_traits::ToPrimitive;
        match self {
            ModelName::DdswQuartic => {
                if *u == self.u_critical_elem() {
                    Some(567)
                } else {
                    None
                }
            }
            _ => u.as_rational().and_then(|q| q.denom().to_i64()),
        }
    }

    /// M_u(g) mod g^{order+1}, solving the model's substitution relation.
    ///
    /// Computed as the unique branch of the eliminated algebraic equation
    /// P(g, M) = 0 through the combinatorial constant term; the linear
    /// Hensel lift fixes one coefficient per step, mirroring the
    /// g-adic contraction of the substitution relation itself.
    pub fn map_series_m(&self, u: &FieldElem, order: usize) -> Result<Series> {
        let field = self.field();
        if u.is_zero() && *self != ModelName::DdswQuartic {
            return Ok(Series::one(field, order));
        }
        match self.hensel_base(u) {
            Some(base) => Ok(self.map_series_m_scaled(u, order, base)?.to_series()),
            None => {
                let poly = self.elimination_poly(u);
                let seed = self.m_at_zero(u);
                Ok(solve_algebraic_prefix(&poly, order, &seed)?)
            }
        }
    }

    /// The same branch in the scaled-integer representation (no rational
    /// reductions in the inner loops).
    pub fn map_series_m_scaled(
        &self,
        u: &FieldElem,
        order: usize,
        base: i64,
    ) -> Result<crate::scaled::ScaledSeries> {
        let poly = self.elimination_poly(u);
        let seed = self.m_at_zero(u);
        Ok(crate::scaled::solve_prefix_scaled(&poly, order, &seed, base)?)
    }

    /// Constant term M_u(0): 1 for the substitution kinds with t = g M^s,
    /// the ring-tree count (1 - sqrt(1-4u))/(2u) for the quartic trees.
    pub fn m_at_zero(&self, u: &FieldElem) -> FieldElem {
        match self.substitution_kind() {
            SubstitutionKind::PowerTwo | SubstitutionKind::PowerThree => FieldElem::one(self.field()),
            SubstitutionKind::Ddsw => {
                if u.is_zero() {
                    return FieldElem::one(self.field());
                }
                let uq = u.as_rational().expect("rational attachment weight").clone();
                let disc = BigRational::one() - rat_int(4) * &uq;
                let root = if let Some(r) = rational_sqrt(&disc) {
                    FieldElem::from_rational(r, self.field())
                } else if let Some(b) = rational_sqrt(&(&disc / rat_int(7))) {
                    // sqrt(disc) = b sqrt(7)
                    FieldElem::Quad { a: BigRational::zero(), b, d: 7 }
                } else {
                    panic!("sqrt(1-4u) lies in neither Q nor Q(sqrt 7)");
                };
                let one = FieldElem::one(self.field());
                let two_u = FieldElem::from_rational(rat_int(2) * uq, self.field());
                one.sub(&root).div(&two_u)
            }
        }
    }

    /// The substitution argument t(g) as a series at weight u.
    pub fn t_series(&self, u: &FieldElem, order: usize) -> Result<Series> {
        let m = self.map_series_m(u, order)?;
        self.t_series_from_m(u, &m)
    }

    pub fn t_series_from_m(&self, u: &FieldElem, m: &Series) -> Result<Series> {
        let g = Series::gen_var(self.field(), m.order());
        match self.substitution_kind() {
            SubstitutionKind::PowerTwo => Ok(g.mul(&m.mul(m)?)?),
            SubstitutionKind::PowerThree => Ok(g.mul(&m.pow(3))?),
            SubstitutionKind::Ddsw => {
                let r = self.attachment_factor(u, m)?;
                Ok(g.mul(&r.mul(&r)?)?)
            }
        }
    }

    /// 1/(1 - u M) for the quartic trees; 1 elsewhere. This is the factor
    /// dressing the root block beyond its pure t-power.
    pub fn attachment_factor(&self, u: &FieldElem, m: &Series) -> Result<Series> {
        match self.substitution_kind() {
            SubstitutionKind::Ddsw => {
                let um = m.scale(u);
                Ok(Series::one(self.field(), m.order()).sub(&um)?.inverse()?)
            }
            _ => Ok(Series::one(self.field(), m.order())),
        }
    }

    /// Generating series of maps whose root block has size exactly k:
    /// u b_k (g M^2)^k, u b_k (g M^3)^k, or b_k g^k/(1-uM)^{2k+1}.
    pub fn root_block_term(&self, u: &FieldElem, k: usize, order: usize) -> Result<Series> {
        if k < self.k_min() {
            return Err(ModelError::BlockIndexOutOfRange(k));
        }
        let m = self.map_series_m(u, order)?;
        let t = self.t_series_from_m(u, &m)?;
        let bk = FieldElem::from_rational(self.block_count(k)?, self.field());
        match self.substitution_kind() {
            SubstitutionKind::Ddsw => {
                let r = self.attachment_factor(u, &m)?;
                Ok(t.pow(k as u64).mul(&r)?.scale(&bk))
            }
            _ => Ok(t.pow(k as u64).scale(&bk.mul(u))),
        }
    }

    /// One application of the substitution relation, for fixed-point solving
    /// and cross-checks: the right-hand side evaluated on the given M.
    pub fn substitution_update(&self, u: &FieldElem, m: &Series) -> Result<Series> {
        let order = m.order();
        let b_coeffs = self.block_series_b(order)?;
        let t = self.t_series_from_m(u, m)?;
        let b_of_t = Series::compose_poly(b_coeffs.coeffs(), &t)?;
        match self.substitution_kind() {
            SubstitutionKind::PowerTwo | SubstitutionKind::PowerThree => {
                // M = 1 + u (B(t) - 1)
                let one = Series::one(self.field(), order);
                Ok(one.add(&b_of_t.sub(&Series::one(self.field(), order))?.scale(u))?)
            }
            SubstitutionKind::Ddsw => {
                // M = B(t) / (1 - u M)
                let r = self.attachment_factor(u, m)?;
                Ok(b_of_t.mul(&r)?)
            }
        }
    }

    /// P(g, M) with the block series eliminated through its own algebraic
    /// equation; the combinatorial M-branch is the root through m_at_zero.
    fn elimination_poly(&self, u: &FieldElem) -> BivariatePoly {
        let field = self.field();
        let uq = u.clone();
        match self {
            ModelName::QuadSimpleBlocks => {
                // 27 g^2 u^3 M^4 + (1 - 18 g u^2) M^3
                //   + ((2u-3) + g(18u^2 - 2u^3)) M^2 + (u-1)(u-3) M - (u-1)^2
                let one = FieldElem::one(field);
                let u2 = uq.mul(&uq);
                let u3 = u2.mul(&uq);
                let c0 = uq.sub(&one).pow(2).neg();
                let c1 = uq.sub(&one).mul(&uq.sub(&FieldElem::from_int(3, field)));
                let c2_0 = uq.mul(&FieldElem::from_int(2, field)).sub(&FieldElem::from_int(3, field));
                let c2_1 = u2.mul(&FieldElem::from_int(18, field)).sub(&u3.mul(&FieldElem::from_int(2, field)));
                let c3_1 = u2.mul(&FieldElem::from_int(-18, field));
                let c4_2 = u3.mul(&FieldElem::from_int(27, field));
                BivariatePoly::new(
                    field,
                    vec![
                        vec![c0],
                        vec![c1],
                        vec![c2_0, c2_1],
                        vec![one, c3_1],
                        vec![FieldElem::zero(field), FieldElem::zero(field), c4_2],
                    ],
                )
            }
            ModelName::DdswQuartic => {
                // M V^3 - V^2 - 18 g M V + 27 g^2 M^2 + 16 g = 0, V = 1 - uM
                let one = FieldElem::one(field);
                let u2 = uq.mul(&uq);
                let u3 = u2.mul(&uq);
                let c0 = vec![one.neg(), FieldElem::from_int(16, field)];
                let c1 = vec![
                    one.add(&uq.mul(&FieldElem::from_int(2, field))),
                    FieldElem::from_int(-18, field),
                ];
                let c2 = vec![
                    uq.mul(&FieldElem::from_int(3, field)).add(&u2).neg(),
                    uq.mul(&FieldElem::from_int(18, field)),
                    FieldElem::from_int(27, field),
                ];
                let c3 = vec![u2.mul(&FieldElem::from_int(3, field))];
                let c4 = vec![u3.neg()];
                BivariatePoly::new(field, vec![c0, c1, c2, c3, c4])
            }
            ModelName::BicubicThreeConnected => bicubic_elimination_poly(&uq),
        }
    }

    /// The full exact constant table at the dual critical point.
    pub fn critical_constants(&self) -> CriticalConstants {
        match self {
            ModelName::QuadSimpleBlocks => {
                let t_cr = rat(4, 27);
                let b = rat(4, 3);
                let bp = rat_int(3);
                let k_b = Radical::from_int(3);
                // u_cr = 1/(1 - B + 2 t B')
                let u_cr = (BigRational::one() - &b + rat_int(2) * &t_cr * &bp).recip();
                // g_cr = t_cr / (1 + u(B-1))^2
                let g_cr = &t_cr / (BigRational::one() + &u_cr * (&b - BigRational::one())).pow(2);
                CriticalConstants::derive(*self, t_cr, b, bp, k_b, u_cr, g_cr)
            }
            ModelName::DdswQuartic => {
                let t_cr = rat(1, 12);
                let b = rat(4, 3);
                let bp = rat_int(16);
                let k_b = Radical::from_int(64).mul(&Radical::from_int(3).pow(&rat(1, 2)));
                // u_cr = (B + 2 t B') / (4 (B + t B')^2)
                let u_cr = (&b + rat_int(2) * &t_cr * &bp)
                    / ((&b + &t_cr * &bp).pow(2) * rat_int(4));
                // g_cr = (1/72)(3 - 8u + sqrt(9 - 48u)); the discriminant is
                // a perfect square at u = 9/64
                let disc = rat_int(9) - rat_int(48) * &u_cr;
                let root = rational_sqrt(&disc).expect("perfect square at criticality");
                let g_cr = rat(1, 72) * (rat_int(3) - rat_int(8) * &u_cr + root);
                CriticalConstants::derive(*self, t_cr, b, bp, k_b, u_cr, g_cr)
            }
            ModelName::BicubicThreeConnected => {
                let t_cr = rat(125, 512);
                let b = rat(5, 4);
                let bp = rat(512, 425);
                // 2^{29/2} / (5^2 17^{5/2})
                let k_b = Radical::from_int(2)
                    .pow(&rat(29, 2))
                    .mul(&Radical::from_int(25).pow(&rat_int(-1)))
                    .mul(&Radical::from_int(17).pow(&rat(-5, 2)));
                // u_cr = 1/(1 - B + 3 t B')
                let u_cr = (BigRational::one() - &b + rat_int(3) * &t_cr * &bp).recip();
                // g_cr = t_cr / (1 + u(B-1))^3
                let g_cr = &t_cr / (BigRational::one() + &u_cr * (&b - BigRational::one())).pow(3);
                CriticalConstants::derive(*self, t_cr, b, bp, k_b, u_cr, g_cr)
            }
        }
    }

    /// Exponent s in t = g M^s, or the DDSW marker.
    fn m_power(&self) -> Option<i32> {
        match self.substitution_kind() {
            SubstitutionKind::PowerTwo => Some(2),
            SubstitutionKind::PowerThree => Some(3),
            SubstitutionKind::Ddsw => None,
        }
    }

    /// Numeric block series value on [0, t_cr], from the closed forms.
    pub fn block_series_value(&self, t: f64) -> f64 {
        match self {
            ModelName::QuadSimpleBlocks => {
                if t == 0.0 {
                    return 1.0;
                }
                let s = (3.0 * t).sqrt();
                let a = (1.5 * s).min(1.0).asin();
                1.0 + (9.0 * t - 2.0 * s * (a / 3.0).sin()) / (1.0 + 2.0 * (2.0 * a / 3.0).cos())
            }
            ModelName::DdswQuartic => {
                if t < 1e-3 {
                    // series to t^6; the closed form loses precision to
                    // cancellation of its O(1) terms
                    let b = [1.0, 2.0, 9.0, 54.0, 378.0, 2916.0, 24057.0];
                    return b.iter().rev().fold(0.0, |acc, &c| acc * t + c);
                }
                (18.0 * t - 1.0 + (1.0 - 12.0 * t).max(0.0).powf(1.5)) / (54.0 * t * t)
            }
            ModelName::BicubicThreeConnected => {
                // B(t) = M_1(g1) on the branch t = g1 M_1(g1)^3, g1 in [0, 1/8]
                let (mut lo, mut hi) = (0.0f64, 0.125f64);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if mid * bicubic_m1(mid).powi(3) < t {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                bicubic_m1(0.5 * (lo + hi))
            }
        }
    }

    /// g as a function of the substitution argument t on [0, t_cr], at
    /// u = u_cr. Strictly increasing, with g(t_cr) = g_cr and g'(t_cr) = 0.
    pub fn g_of_t(&self, t: f64) -> f64 {
        let cc = self.critical_constants();
        let u = rat_to_f64_pub(&cc.u_cr);
        let b = self.block_series_value(t);
        match self.m_power() {
            Some(s) => t / (1.0 + u * (b - 1.0)).powi(s),
            None => {
                // g = (t/2)(1 - 2uB + sqrt(1 - 4uB))
                let disc = (1.0 - 4.0 * u * b).max(0.0);
                0.5 * t * (1.0 - 2.0 * u * b + disc.sqrt())
            }
        }
    }

    /// Numeric (t, M) at the principal branch for g in [0, g_cr], by
    /// bisection on the monotone map t -> g(t).
    pub fn eval_state_numeric(&self, g: f64) -> Result<(f64, f64)> {
        let cc = self.critical_constants();
        let g_cr = rat_to_f64_pub(&cc.g_cr);
        let t_cr = rat_to_f64_pub(&cc.t_cr);
        let u = rat_to_f64_pub(&cc.u_cr);
        if !(0.0..=g_cr * (1.0 + 1e-12)).contains(&g) {
            return Err(ModelError::OutsideCriticalDisk(g));
        }
        if g >= g_cr * (1.0 - 1e-16) {
            return Ok((t_cr, rat_to_f64_pub(&cc.m_at_g_cr)));
        }
        if g == 0.0 {
            let m0 = self
                .m_at_zero(&self.u_critical_elem())
                .to_f64();
            return Ok((0.0, m0));
        }
        let (mut lo, mut hi) = (0.0f64, t_cr);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.g_of_t(mid) < g {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * t_cr {
                break;
            }
        }
        let t = 0.5 * (lo + hi);
        let b = self.block_series_value(t);
        let m = match self.m_power() {
            Some(_) => 1.0 + u * (b - 1.0),
            None => (1.0 - (g / t).sqrt()) / u,
        };
        Ok((t, m))
    }

    /// Numeric M_cr(g) on [0, g_cr]; absolute error well under 1e-12 away
    /// from the singular endpoint (bisection on a closed-form monotone map).
    pub fn eval_m_numeric(&self, g: f64) -> Result<f64> {
        Ok(self.eval_state_numeric(g)?.1)
    }
}

fn rat_to_f64_pub(q: &BigRational) -> f64 {
    crate::field::rat_to_f64(q)
}

/// M_1(g) for bicubic maps at u = 1, with a series fallback where the closed
/// form cancels catastrophically.
fn bicubic_m1(g: f64) -> f64 {
    if g < 0.02 {
        // m_0 = 1, m_1 = 1, m_n/m_{n-1} = 4(2n-1)/(n+2); the closed form
        // below cancels to O(g^3) and loses digits here
        let mut sum = 1.0;
        let mut mn = 1.0f64;
        let mut power = g;
        for n in 1..=40 {
            if n > 1 {
                mn *= 4.0 * (2.0 * n as f64 - 1.0) / (n as f64 + 2.0);
                power *= g;
            }
            let term = mn * power;
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        sum
    } else {
        1.0 + (-1.0 + 12.0 * g - 24.0 * g * g + (1.0 - 8.0 * g).max(0.0).powf(1.5)) / (32.0 * g * g)
    }
}

/// The degree-7 algebraic equation for the bicubic block series B(t).
pub fn bicubic_block_poly() -> BivariatePoly {
    // B^7 - B^6 - 12 t B^4 + 11 t B^3 + 16 t^2 B^2 - 8 t^2 B + t^2
    BivariatePoly::from_int_rows(
        CoeffField::Rational,
        &[
            &[0, 0, 1],
            &[0, 0, -8],
            &[0, 0, 16],
            &[0, 11],
            &[0, -12],
            &[0],
            &[-1],
            &[1],
        ],
    )
}

static BICUBIC_B_CACHE: Lazy<Mutex<Option<Series>>> = Lazy::new(|| Mutex::new(None));

/// Bicubic block series to at least the requested order, Newton-solved and
/// cached.
fn bicubic_block_series(order: usize) -> Series {
    let mut guard = BICUBIC_B_CACHE.lock().unwrap();
    let need_rebuild = match guard.as_ref() {
        Some(s) => s.order() < order,
        None => true,
    };
    if need_rebuild {
        // grow geometrically so k-by-k queries do not cascade into
        // one Newton solve per order
        let target = order.max(64).next_power_of_two();
        let s = crate::series::newton_algebraic(
            &bicubic_block_poly(),
            target,
            &FieldElem::one(CoeffField::Rational),
        )
        .expect("regular branch through B(0) = 1");
        *guard = Some(s);
    }
    guard.as_ref().unwrap().clone()
}

/// Eliminate B from the bicubic system: substitute B = (M - c)/u (c = 1 - u)
/// and t = g M^3 into the degree-7 block equation and clear u^7.
fn bicubic_elimination_poly(u: &FieldElem) -> BivariatePoly {
    let field = u.field();
    let c = FieldElem::one(field).sub(u);
    // polynomial accumulator: coeffs[j][l] for M^j g^l
    let deg_m = 8;
    let mut acc = vec![vec![FieldElem::zero(field); 3]; deg_m + 1];
    let mut add = |m_shift: usize, g_pow: usize, scale: &FieldElem, binom: &[FieldElem]| {
        for (i, v) in binom.iter().enumerate() {
            acc[i + m_shift][g_pow] = acc[i + m_shift][g_pow].add(&scale.mul(v));
        }
    };
    let binpow = |j: u32| -> Vec<FieldElem> {
        // coefficients of (M - c)^j in M
        let mut row = vec![FieldElem::zero(field); j as usize + 1];
        let neg_c = c.neg();
        for (i, item) in row.iter_mut().enumerate() {
            let bin = binomial(j as usize, i);
            *item = FieldElem::from_rational(BigRational::from_integer(bin), field)
                .mul(&neg_c.pow(j - i as u32));
        }
        row
    };
    let u2 = u.pow(2);
    let u3 = u2.mul(u);
    let u4 = u3.mul(u);
    let u5 = u4.mul(u);
    let u6 = u5.mul(u);
    let u7 = u6.mul(u);
    let one = FieldElem::one(field);
    add(0, 0, &one, &binpow(7)); // (M-c)^7
    add(0, 0, &u.neg(), &binpow(6)); // -u (M-c)^6
    add(3, 1, &u3.mul(&FieldElem::from_int(-12, field)), &binpow(4)); // -12 g u^3 M^3 (M-c)^4
    add(3, 1, &u4.mul(&FieldElem::from_int(11, field)), &binpow(3)); // +11 g u^4 M^3 (M-c)^3
    add(6, 2, &u5.mul(&FieldElem::from_int(16, field)), &binpow(2)); // +16 g^2 u^5 M^6 (M-c)^2
    add(6, 2, &u6.mul(&FieldElem::from_int(-8, field)), &binpow(1)); // -8 g^2 u^6 M^6 (M-c)
    add(6, 2, &u7, &[one.clone()]); // + g^2 u^7 M^6
    BivariatePoly::new(field, acc)
}

/// The exact critical tuple (alpha, t_cr, B, B', K_B, u_cr, g_cr, C, D).
#[derive(Clone, Debug)]
pub struct CriticalConstants {
    pub model: ModelName,
    pub alpha: BigRational,
    pub t_cr: BigRational,
    pub b_at_tcr: BigRational,
    pub bprime_at_tcr: BigRational,
    pub k_b: Radical,
    pub u_cr: BigRational,
    pub g_cr: BigRational,
    pub c_const: Radical,
    pub d_const: Radical,
    /// M_cr(g_cr), rational for all three models.
    pub m_at_g_cr: BigRational,
}

impl CriticalConstants {
    fn derive(
        model: ModelName,
        t_cr: BigRational,
        b_at_tcr: BigRational,
        bprime_at_tcr: BigRational,
        k_b: Radical,
        u_cr: BigRational,
        g_cr: BigRational,
    ) -> CriticalConstants {
        let alpha = rat(3, 2);
        // C = (t_cr B' / (g_cr K_B))^{1/alpha},  D = C g_cr^{1/alpha} / t_cr
        let inv_alpha = rat(2, 3);
        let base = Radical::from_rational(&(&t_cr * &bprime_at_tcr / &g_cr)).div(&k_b);
        let c_const = base.pow(&inv_alpha);
        let d_const = c_const
            .mul(&Radical::from_rational(&g_cr).pow(&inv_alpha))
            .div(&Radical::from_rational(&t_cr));
        let m_at_g_cr = match model.substitution_kind() {
            // M = 1 + u (B - 1)
            SubstitutionKind::PowerTwo | SubstitutionKind::PowerThree => {
                BigRational::one() + &u_cr * (&b_at_tcr - BigRational::one())
            }
            // u M^2 - M + B = 0 on the principal branch
            SubstitutionKind::Ddsw => {
                let disc = BigRational::one() - rat_int(4) * &u_cr * &b_at_tcr;
                let root = rational_sqrt(&disc).expect("perfect square at criticality");
                (BigRational::one() - root) / (rat_int(2) * &u_cr)
            }
        };
        CriticalConstants {
            model,
            alpha,
            t_cr,
            b_at_tcr,
            bprime_at_tcr,
            k_b,
            u_cr,
            g_cr,
            c_const,
            d_const,
            m_at_g_cr,
        }
    }

    pub fn alpha_f64(&self) -> f64 {
        1.5
    }

    pub fn d_f64(&self) -> f64 {
        self.d_const.to_f64()
    }

    pub fn scaling_params(&self) -> crate::scaling::ScalingParams {
        crate::scaling::ScalingParams::new(self.alpha_f64(), self.d_f64()).unwrap()
    }
}

fn factorial(n: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= BigInt::from(i);
    }
    acc
}

fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k.min(n - k) {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Least-squares slope of y against x.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum::<f64>() / n;
    let sy: f64 = points.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = points.iter().map(|p| (p.0 - sx) * (p.1 - sy)).sum();
    let den: f64 = points.iter().map(|p| (p.0 - sx) * (p.0 - sx)).sum();
    num / den
}
