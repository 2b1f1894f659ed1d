//! Exact finite-size laws at the dual critical point: the root-block-size
//! distributions at fixed total size (simply and doubly rooted), the
//! total-size distribution at fixed root block size, their Laplace
//! transforms, and the p-mark partition-function ratios.
//!
//! All probabilities are exact field elements; floats enter only through
//! the explicit rendering step.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_rational::BigRational;
use num_traits::One;
use once_cell::sync::Lazy;
use thiserror::Error;

use crate::field::{ln_rat, rat_to_f64, FieldElem};
use crate::models::{ModelError, ModelName, SubstitutionKind};
use crate::scaled::ScaledSeries;
use num_bigint::BigInt;
use crate::series::Series;
use crate::special::gamma;

#[derive(Debug, Error)]
pub enum LawError {
    #[error("size {n} exceeds the available truncation order {order}")]
    BeyondTruncation { n: usize, order: usize },
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("marks p must be >= 2, got {0}")]
    BadMarkCount(usize),
    #[error("lambda must be nonnegative, got {0}")]
    NegativeLambda(f64),
    #[error("Gamma pole at p - 1 - alpha = {0}")]
    GammaPole(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, LawError>;

/// Precomputed exact series for one model at one truncation order: the map
/// series, the substitution argument t(g), all powers t^k, and the
/// compositions B(t(g)) and C2(t(g)) accumulated from them. The quadratic
/// amount of data lives in the scaled-integer representation.
pub struct ModelData {
    pub model: ModelName,
    pub order: usize,
    pub u: FieldElem,
    pub m: Series,
    /// 1/(1 - u M) for the quartic trees, 1 otherwise.
    prefactor: ScaledSeries,
    /// t_powers[k] = t(g)^k, k = 0..=order.
    t_powers: Vec<ScaledSeries>,
    /// B(t(g)) = 1 + sum_k b_k t^k.
    b_of_t: ScaledSeries,
    /// C2(t(g)) = sum_{k>=1} (2k-1) b_k t^k = 1 + 2tB'(t) - B(t) composed.
    c2_of_t: ScaledSeries,
}

/// The per-model series without the quadratic-cost power table: enough for
/// single-k queries (fixed-root-block laws, Laplace transforms).
pub struct BaseData {
    pub model: ModelName,
    pub order: usize,
    pub u: FieldElem,
    pub m: Series,
    pub m_scaled: ScaledSeries,
    pub t_scaled: ScaledSeries,
    pub prefactor_scaled: ScaledSeries,
}

static BASE_DATA_CACHE: Lazy<Mutex<HashMap<(ModelName, usize), Arc<BaseData>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

static MODEL_DATA_CACHE: Lazy<Mutex<HashMap<(ModelName, usize), Arc<ModelData>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Map and substitution series for (model, order); built once and cached.
pub fn base_data(model: ModelName, order: usize) -> Arc<BaseData> {
    // the lock is held across the build so concurrent callers do not
    // duplicate a multi-second series computation
    let mut cache = BASE_DATA_CACHE.lock().unwrap();
    if let Some(d) = cache.get(&(model, order)) {
        return Arc::clone(d);
    }
    let u = model.u_critical_elem();
    let hensel_base = model.hensel_base(&u).expect("critical base");
    let m_scaled = model
        .map_series_m_scaled(&u, order, hensel_base)
        .expect("map series");
    let m = m_scaled.to_series();
    // t(g) and the attachment factor, all in the scaled domain. The true
    // t denominators carry no extra factor for any of the three models.
    let (t_scaled, prefactor_scaled) = match model.substitution_kind() {
        SubstitutionKind::PowerTwo => {
            let t = m_scaled.mul(&m_scaled).shift_up(1).truncate(order).renormalize_extra(1);
            (t, m_scaled.one_like(order).renormalize_extra(1))
        }
        SubstitutionKind::PowerThree => {
            let m2 = m_scaled.mul(&m_scaled);
            let t = m2.mul(&m_scaled).shift_up(1).truncate(order).renormalize_extra(1);
            (t, m_scaled.one_like(order).renormalize_extra(1))
        }
        SubstitutionKind::Ddsw => {
            // V = 1 - u M, R = 1/V, t = g R^2; R carries the extra factor 9
            let um = m_scaled.scale_rational(9, 64);
            let v = um.one_like(order).add(&um.neg());
            let r = v.inverse(9);
            let t = r.mul(&r).shift_up(1).truncate(order).renormalize_extra(1);
            (t, r)
        }
    };
    let built = Arc::new(BaseData { model, order, u, m, m_scaled, t_scaled, prefactor_scaled });
    cache.insert((model, order), Arc::clone(&built));
    built
}

/// Shared exact data for (model, order); built once and cached.
pub fn model_data(model: ModelName, order: usize) -> Arc<ModelData> {
    let mut cache = MODEL_DATA_CACHE.lock().unwrap();
    if let Some(d) = cache.get(&(model, order)) {
        return Arc::clone(d);
    }
    let built = Arc::new(ModelData::build(model, order));
    cache.insert((model, order), Arc::clone(&built));
    built
}

impl ModelData {
    fn build(model: ModelName, order: usize) -> ModelData {
        let base = base_data(model, order);
        let u = base.u.clone();
        let m = base.m.clone();
        let t = &base.t_scaled;
        let prefactor = base.prefactor_scaled.clone();
        let block_series = model.block_series_b(order).expect("block series");
        let mut t_powers = Vec::with_capacity(order + 1);
        t_powers.push(t.one_like(order).renormalize_extra(1));
        let mut b_of_t = t.one_like(order).renormalize_extra(1);
        let mut c2_of_t = t.zero_like(order).renormalize_extra(1);
        for k in 1..=order {
            let next = t_powers[k - 1].mul(t);
            let bk = block_series.coeff(k).rational_part().clone();
            assert!(bk.denom().is_one(), "block counts are integers");
            b_of_t = b_of_t.add(&next.scale_int(bk.numer()));
            let slot = bk.numer() * BigInt::from(model.slot_count(k));
            c2_of_t = c2_of_t.add(&next.scale_int(&slot));
            t_powers.push(next);
        }
        ModelData { model, order, u, m, prefactor, t_powers, b_of_t, c2_of_t }
    }

    /// [g^n] t(g)^k as a reduced field element.
    pub fn t_power_coeff(&self, k: usize, n: usize) -> FieldElem {
        self.t_powers[k].coeff(n)
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n > self.order {
            return Err(LawError::BeyondTruncation { n, order: self.order });
        }
        Ok(())
    }

    /// [g^n] of the weighted count of maps with root block size exactly k.
    fn root_numerator(&self, n: usize, k: usize) -> Result<FieldElem> {
        if k < self.model.k_min() || k > self.order {
            return Err(LawError::IndexOutOfRange(k));
        }
        let bk = FieldElem::from_rational(self.model.block_count(k)?, self.model.field());
        match self.model.substitution_kind() {
            SubstitutionKind::Ddsw => {
                // [g^n] (t^k R) by convolution in the scaled domain
                let c = self.t_powers[k].convolve_at(&self.prefactor, n);
                Ok(c.mul(&bk))
            }
            _ => Ok(self.t_powers[k].coeff(n).mul(&bk).mul(&self.u)),
        }
    }
}

/// Pr(X_n = k): root block size k in maps of total size n, drawn with
/// weight u_cr per block. Exact.
pub fn prob_x(data: &ModelData, n: usize, k: usize) -> Result<FieldElem> {
    assert!(n >= 1, "the root block law needs a non-empty map");
    data.check_n(n)?;
    if k > n {
        return Ok(FieldElem::zero(data.model.field()));
    }
    let num = data.root_numerator(n, k)?;
    let den = data.m.coeff(n);
    Ok(num.div(den))
}

/// Pr(X^(2)_n = k): same law for doubly rooted maps (both marks in the root
/// block), numerator weight (2k-1) b_k in t-units.
pub fn prob_x2(data: &ModelData, n: usize, k: usize) -> Result<FieldElem> {
    assert!(n >= 1);
    data.check_n(n)?;
    if k < 1 {
        return Err(LawError::IndexOutOfRange(k));
    }
    if k > n {
        return Ok(FieldElem::zero(data.model.field()));
    }
    let field = data.model.field();
    let bk = FieldElem::from_rational(data.model.block_count(k)?, field);
    let slot = FieldElem::from_int(data.model.slot_count(k), field);
    let num = data.t_powers[k].coeff(n).mul(&bk).mul(&slot);
    Ok(num.div(&data.c2_of_t.coeff(n)))
}

/// Pr(Y_k = n): total size n at fixed root block size k, in the ensemble
/// weighted by u_cr^{blocks} g_cr^{size}. Exact; equals
/// g_cr^n t_cr^{-k} [g^n] t(g)^k.
pub fn prob_y(data: &ModelData, k: usize, n: usize) -> Result<FieldElem> {
    if k < 1 || k > data.order {
        return Err(LawError::IndexOutOfRange(k));
    }
    data.check_n(n)?;
    let cc = data.model.critical_constants();
    let field = data.model.field();
    let scale = cc.g_cr.pow(n as i32) / cc.t_cr.pow(k as i32);
    Ok(data.t_powers[k].coeff(n).mul(&FieldElem::from_rational(scale, field)))
}

/// Limit law of the root block size: p_k = b_k k t_cr^{k-1} / B'(t_cr).
pub fn limit_pk(model: ModelName, k: usize) -> Result<f64> {
    let exact = limit_pk_exact(model, k)?;
    Ok(rat_to_f64(&exact))
}

pub fn limit_pk_exact(model: ModelName, k: usize) -> Result<BigRational> {
    if k < 1 {
        return Err(LawError::IndexOutOfRange(k));
    }
    let cc = model.critical_constants();
    let bk = model.block_count(k)?;
    Ok(bk * BigRational::from_integer(k.into()) * cc.t_cr.pow(k as i32 - 1) / cc.bprime_at_tcr)
}

/// E[e^{-lambda' Y_k}] with lambda' = lambda (unscaled) or lambda/k^alpha
/// (scaled): t_cr^{-k} t(g_cr e^{-lambda'})^k, evaluated numerically.
/// Depends on the root block only through its size k.
pub fn laplace_y(model: ModelName, k: usize, lambda: f64, scaled: bool) -> Result<f64> {
    if lambda < 0.0 {
        return Err(LawError::NegativeLambda(lambda));
    }
    let cc = model.critical_constants();
    let lambda_eff = if scaled { lambda / (k as f64).powf(1.5) } else { lambda };
    let g = rat_to_f64(&cc.g_cr) * (-lambda_eff).exp();
    let (t, _) = model.eval_state_numeric(g)?;
    Ok((t / rat_to_f64(&cc.t_cr)).powi(k as i32))
}

/// Fixed-size partition function of p-marked single-block maps:
/// Z^(p)_k = (2k-1)(2k-2)...(2k-p+1) b_k.
pub fn partition_zp(model: ModelName, p: usize, k: usize) -> Result<BigRational> {
    if p < 2 {
        return Err(LawError::BadMarkCount(p));
    }
    if k <= (p - 1) / 2 {
        return Err(LawError::IndexOutOfRange(k));
    }
    Ok(falling_factorial(k, p) * model.block_count(k)?)
}

fn falling_factorial(k: usize, p: usize) -> BigRational {
    let mut acc = BigRational::one();
    for i in 1..p {
        acc *= BigRational::from_integer((2 * k as i64 - i as i64).into());
    }
    acc
}

/// Z~^(p)_n = [g^n] C^(p)(t(g)): p-marked maps with all marks in the root
/// block, at fixed total size n.
pub fn partition_ztilde(data: &ModelData, p: usize, n: usize) -> Result<FieldElem> {
    if p < 2 {
        return Err(LawError::BadMarkCount(p));
    }
    data.check_n(n)?;
    let field = data.model.field();
    let mut acc = FieldElem::zero(field);
    for k in ((p - 1) / 2 + 1)..=n.min(data.order) {
        let c = data.t_powers[k].coeff(n);
        if c.is_zero() {
            continue;
        }
        let w = falling_factorial(k, p) * data.model.block_count(k)?;
        acc = acc.add(&c.mul(&FieldElem::from_rational(w, field)));
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatioMode {
    Formula,
    Coefficients,
}

/// The asymptotic partition ratio
/// R^(p)(n,k) = (k/n) (n^{1/alpha}/(D k))^{p-1-alpha}
///              Gamma(p-1-alpha)/Gamma((p-1-alpha)/alpha),
/// in closed form or from the exact coefficients
/// g_cr^n Z~^(p)_n / (t_cr^k Z^(p)_k).
pub fn ratio_rp(
    data: &ModelData,
    p: usize,
    n: usize,
    k: usize,
    mode: RatioMode,
) -> Result<f64> {
    if p < 2 {
        return Err(LawError::BadMarkCount(p));
    }
    let cc = data.model.critical_constants();
    match mode {
        RatioMode::Formula => {
            let alpha = 1.5;
            let e = p as f64 - 1.0 - alpha;
            if e <= 0.0 && (e - e.round()).abs() < 1e-12 {
                return Err(LawError::GammaPole(e));
            }
            let d = cc.d_f64();
            let (nf, kf) = (n as f64, k as f64);
            Ok((kf / nf) * (nf.powf(1.0 / alpha) / (d * kf)).powf(e) * gamma(e)
                / gamma(e / alpha))
        }
        RatioMode::Coefficients => {
            let zt = partition_ztilde(data, p, n)?;
            let zk = partition_zp(data.model, p, k)?;
            // g_cr^n Z~_n / (t_cr^k Z_k), combined in log space to dodge the
            // enormous intermediate magnitudes
            let ln_num = ln_field(&zt) + n as f64 * ln_rat(&cc.g_cr);
            let ln_den = ln_rat(&zk) + k as f64 * ln_rat(&cc.t_cr);
            Ok((ln_num - ln_den).exp())
        }
    }
}

/// The same ratio written as the continuum two-area expression
/// Gamma(p-1-alpha)/Gamma((p-1-alpha)/alpha) (A/A') (A'^{1/alpha}/(D A))^{p-1-alpha}
/// with (A, A') = (k, n); used as the algebraic twin of the formula mode.
pub fn ratio_rp_continuum(model: ModelName, p: usize, n: usize, k: usize) -> Result<f64> {
    if p < 2 {
        return Err(LawError::BadMarkCount(p));
    }
    let alpha = 1.5;
    let e = p as f64 - 1.0 - alpha;
    let d = model.critical_constants().d_f64();
    let (a, a_prime) = (k as f64, n as f64);
    Ok(gamma(e) / gamma(e / alpha) * (a / a_prime)
        * (a_prime.powf(1.0 / alpha) / (d * a)).powf(e))
}

fn ln_field(x: &FieldElem) -> f64 {
    match x {
        FieldElem::Rat(q) => ln_rat(q),
        FieldElem::Quad { .. } => {
            // positive quantities only; rendered magnitude is fine here
            // because the calling ratio is O(1)
            let v = x.to_f64();
            assert!(v > 0.0);
            v.ln()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conditioning {
    FixedN(usize),
    FixedK(usize),
}

/// One finite law: exact entries plus float renderings and scaling metadata.
pub struct DistributionTable {
    pub model: ModelName,
    pub conditioning: Conditioning,
    pub marks: u32,
    /// (index, exact probability, float rendering)
    pub entries: Vec<(usize, FieldElem, f64)>,
    pub alpha: f64,
    pub d_scale: f64,
    /// For FixedK tables: bound on the truncated tail mass.
    pub tail_bound: Option<f64>,
}

impl DistributionTable {
    pub fn float_sum(&self) -> f64 {
        self.entries.iter().map(|e| e.2).sum()
    }

    /// Exact sum of the entries (the FixedN laws sum to exactly 1).
    pub fn exact_sum(&self) -> FieldElem {
        let field = self.model.field();
        self.entries
            .iter()
            .fold(FieldElem::zero(field), |acc, e| acc.add(&e.1))
    }
}

/// Law of X_n over k = k_min..n.
pub fn law_x_table(data: &ModelData, n: usize) -> Result<DistributionTable> {
    let cc = data.model.critical_constants();
    let mut entries = Vec::new();
    for k in data.model.k_min()..=n {
        let p = prob_x(data, n, k)?;
        let f = p.to_f64();
        entries.push((k, p, f));
    }
    Ok(DistributionTable {
        model: data.model,
        conditioning: Conditioning::FixedN(n),
        marks: 1,
        entries,
        alpha: 1.5,
        d_scale: cc.d_f64(),
        tail_bound: None,
    })
}

/// Law of X^(2)_n over k = 1..n.
pub fn law_x2_table(data: &ModelData, n: usize) -> Result<DistributionTable> {
    let cc = data.model.critical_constants();
    let mut entries = Vec::new();
    for k in 1..=n {
        let p = prob_x2(data, n, k)?;
        let f = p.to_f64();
        entries.push((k, p, f));
    }
    Ok(DistributionTable {
        model: data.model,
        conditioning: Conditioning::FixedN(n),
        marks: 2,
        entries,
        alpha: 1.5,
        d_scale: cc.d_f64(),
        tail_bound: None,
    })
}

/// Law of Y_k without the full power table: t^k by binary exponentiation
/// on the cached base series. This is what makes the order-400 tables
/// affordable for single k values.
pub fn law_y_table_direct(model: ModelName, k: usize, n_max: usize) -> Result<DistributionTable> {
    let base = base_data(model, n_max);
    if k < 1 || k > base.order {
        return Err(LawError::IndexOutOfRange(k));
    }
    let cc = model.critical_constants();
    let tk = base.t_scaled.pow(k as u64);
    let field = model.field();
    let mut entries = Vec::new();
    for n in k..=n_max {
        let scale = cc.g_cr.pow(n as i32) / cc.t_cr.pow(k as i32);
        let p = tk.coeff(n).mul(&FieldElem::from_rational(scale, field));
        let f = p.to_f64();
        entries.push((n, p, f));
    }
    Ok(finish_y_table(model, k, n_max, entries))
}

/// Law of Y_k over n = k..n_max, with the truncated-tail bound
/// ~ alpha c_wp (n_max/k^alpha)^{-1/alpha} reported alongside.
pub fn law_y_table(data: &ModelData, k: usize, n_max: usize) -> Result<DistributionTable> {
    let n_max = n_max.min(data.order);
    let mut entries = Vec::new();
    for n in k..=n_max {
        let p = prob_y(data, k, n)?;
        let f = p.to_f64();
        entries.push((n, p, f));
    }
    Ok(finish_y_table(data.model, k, n_max, entries))
}

fn finish_y_table(
    model: ModelName,
    k: usize,
    n_max: usize,
    entries: Vec<(usize, FieldElem, f64)>,
) -> DistributionTable {
    // tail of k^alpha Pr(Y=n) ~ wp(y) ~ c y^{-1-1/alpha}:
    // sum_{n > n_max} ~ alpha c y_max^{-1/alpha}, c = D Gamma(1+1/a) sin(pi/a)/pi
    let alpha = 1.5f64;
    let d = model.critical_constants().d_f64();
    let c_wp = d * gamma(1.0 + 1.0 / alpha) * (std::f64::consts::PI / alpha).sin()
        / std::f64::consts::PI;
    let y_max = n_max as f64 / (k as f64).powf(alpha);
    let tail = alpha * c_wp * y_max.powf(-1.0 / alpha) * 1.5; // safety margin
    DistributionTable {
        model,
        conditioning: Conditioning::FixedK(k),
        marks: 1,
        entries,
        alpha,
        d_scale: d,
        tail_bound: Some(tail),
    }
}

/// [g^n] B(t(g)) g_cr^n n^{1+1/alpha} -> B' C g_cr^{1/alpha} / (alpha Gamma(1-1/alpha)).
/// Returns (finite-n value, limit).
pub fn b_of_t_coefficient_asymptote(data: &ModelData, n: usize) -> Result<(f64, f64)> {
    data.check_n(n)?;
    let cc = data.model.critical_constants();
    let alpha = 1.5f64;
    let coeff = data.b_of_t.coeff(n);
    let ln_val = ln_field(&coeff) + n as f64 * ln_rat(&cc.g_cr);
    let value = ln_val.exp() * (n as f64).powf(1.0 + 1.0 / alpha);
    let limit = rat_to_f64(&cc.bprime_at_tcr) * cc.c_const.to_f64()
        * rat_to_f64(&cc.g_cr).powf(1.0 / alpha)
        / (alpha * gamma(1.0 - 1.0 / alpha));
    Ok((value, limit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{rat, rat_int};
    use crate::models::fit_slope;
    use num_traits::{ToPrimitive, Zero};

    #[test]
    fn x_law_sums_to_one_exactly() {
        for model in ModelName::ALL {
            let data = model_data(model, 25);
            for n in [1usize, 10, 25] {
                let table = law_x_table(&data, n).unwrap();
                let sum = table.exact_sum();
                assert_eq!(sum, FieldElem::one(model.field()), "{model:?} n={n}");
            }
        }
    }

    #[test]
    fn x2_law_sums_to_one_exactly() {
        for model in ModelName::ALL {
            let data = model_data(model, 25);
            for n in [1usize, 10, 25] {
                let table = law_x2_table(&data, n).unwrap();
                assert_eq!(table.exact_sum(), FieldElem::one(model.field()), "{model:?} n={n}");
            }
        }
    }

    #[test]
    fn size_one_quadrangulation_forces_block_one() {
        let data = model_data(ModelName::QuadSimpleBlocks, 8);
        let p = prob_x(&data, 1, 1).unwrap();
        assert_eq!(p, FieldElem::one(data.model.field()));
    }

    #[test]
    fn y_law_minimal_term() {
        // Pr(Y_k = k) = (g_cr/t_cr)^k for quadrangulations (M(0) = 1)
        let data = model_data(ModelName::QuadSimpleBlocks, 12);
        for k in [1usize, 3, 7] {
            let p = prob_y(&data, k, k).unwrap();
            let expect = (rat(25, 432) / rat(4, 27)).pow(k as i32);
            assert_eq!(p.rational_part(), &expect);
        }
        // quartic trees: the minimal coefficient carries (1-u m_0)^{-2k}
        let data = model_data(ModelName::DdswQuartic, 8);
        let u = data.model.u_critical_elem();
        let m0 = data.model.m_at_zero(&u);
        let r0 = FieldElem::one(data.model.field()).sub(&u.mul(&m0)).inv().unwrap();
        let cc = data.model.critical_constants();
        for k in [1usize, 4] {
            let p = prob_y(&data, k, k).unwrap();
            let expect = r0
                .pow(2 * k as u32)
                .mul(&FieldElem::from_rational(
                    (&cc.g_cr / &cc.t_cr).pow(k as i32),
                    data.model.field(),
                ));
            assert_eq!(p, expect);
        }
    }

    #[test]
    fn y_law_partial_sums_approach_one() {
        let data = model_data(ModelName::QuadSimpleBlocks, 48);
        let table = law_y_table(&data, 3, 48).unwrap();
        let mut partial = 0.0;
        let mut prev = 0.0;
        for (_, _, f) in &table.entries {
            partial += f;
            assert!(partial <= 1.0 + 1e-12);
            assert!(partial >= prev);
            prev = partial;
        }
        assert!(partial > 0.8, "mass so far: {partial}");
        assert!(partial + table.tail_bound.unwrap() > 0.98);
    }

    #[test]
    fn laplace_at_zero_is_one() {
        for model in ModelName::ALL {
            for scaled in [false, true] {
                let v = laplace_y(model, 7, 0.0, scaled).unwrap();
                assert!((v - 1.0).abs() < 1e-13, "{model:?}");
            }
        }
        assert!(matches!(
            laplace_y(ModelName::QuadSimpleBlocks, 5, -0.1, true),
            Err(LawError::NegativeLambda(_))
        ));
    }

    #[test]
    fn laplace_is_monotone_in_lambda() {
        let mut prev = f64::INFINITY;
        for i in 0..10 {
            let v = laplace_y(ModelName::QuadSimpleBlocks, 9, 0.3 * i as f64, true).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn partition_functions() {
        // p = 2: falling factorial of length one
        let z = partition_zp(ModelName::QuadSimpleBlocks, 2, 4).unwrap();
        assert_eq!(z, rat_int(7) * ModelName::QuadSimpleBlocks.block_count(4).unwrap());
        // p = 3, k = 5: (2*5-1)(2*5-2) b_5 with b_5 = 2*12!/(9!5!)
        let z = partition_zp(ModelName::QuadSimpleBlocks, 3, 5).unwrap();
        assert_eq!(z, rat_int(9 * 8 * 22));
        assert!(partition_zp(ModelName::QuadSimpleBlocks, 1, 5).is_err());
        assert!(partition_zp(ModelName::QuadSimpleBlocks, 4, 1).is_err());
        // Z~^(2)_n is exactly the doubly-rooted denominator
        let data = model_data(ModelName::QuadSimpleBlocks, 16);
        for n in [3usize, 9, 16] {
            assert_eq!(partition_ztilde(&data, 2, n).unwrap(), data.c2_of_t.coeff(n));
        }
    }

    #[test]
    fn ratio_formula_equals_continuum_twin() {
        // same algebraic expression arranged two ways; 20 pseudo-random (n,k)
        let data = model_data(ModelName::QuadSimpleBlocks, 8);
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..20 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let n = 50 + (state >> 33) as usize % 1000;
            let k = 2 + (state >> 10) as usize % 60;
            for p in [2usize, 3, 4] {
                let a = ratio_rp(&data, p, n, k, RatioMode::Formula).unwrap();
                let b = ratio_rp_continuum(data.model, p, n, k).unwrap();
                assert!(
                    (a / b - 1.0).abs() < 1e-12,
                    "p={p} n={n} k={k}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn ratio_coefficients_mode_matches_small_case() {
        // independent evaluation straight from the definition at tiny n
        let data = model_data(ModelName::QuadSimpleBlocks, 10);
        let cc = data.model.critical_constants();
        let p = 2usize;
        let (n, k) = (6usize, 2usize);
        let direct = rat_to_f64(
            &(partition_ztilde(&data, p, n).unwrap().rational_part() * cc.g_cr.pow(n as i32)
                / (partition_zp(data.model, p, k).unwrap() * cc.t_cr.pow(k as i32))),
        );
        let via = ratio_rp(&data, p, n, k, RatioMode::Coefficients).unwrap();
        assert!((via / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn limit_pk_values() {
        // k = 1: b_1 t_cr^0 / B' = 2/3 for quadrangulations
        assert_eq!(limit_pk_exact(ModelName::QuadSimpleBlocks, 1).unwrap(), rat(2, 3));
        let v = limit_pk(ModelName::QuadSimpleBlocks, 1).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn limit_pk_sums_toward_one() {
        // sum_{k<=K} p_k = 1 - O(K^{-1/2}); the deficit must match the
        // tail estimate from b_k ~ c t_cr^{-k} k^{-5/2} and halve from
        // K = 125 to K = 500
        let c_tail = {
            // c = alpha(alpha-1) K_B t_cr^alpha / Gamma(2-alpha);
            // p_k ~ c k^{-3/2}/(t_cr B') => tail ~ 2c/(t_cr B') K^{-1/2}
            let cc = ModelName::QuadSimpleBlocks.critical_constants();
            let alpha = 1.5f64;
            let c = alpha * (alpha - 1.0) * cc.k_b.to_f64()
                * rat_to_f64(&cc.t_cr).powf(alpha)
                / gamma(2.0 - alpha);
            2.0 * c / (rat_to_f64(&cc.t_cr) * rat_to_f64(&cc.bprime_at_tcr))
        };
        let mut sum = BigRational::zero();
        let mut deficit_125 = 0.0;
        for k in 1..=500usize {
            sum += limit_pk_exact(ModelName::QuadSimpleBlocks, k).unwrap();
            if k == 125 {
                deficit_125 = 1.0 - rat_to_f64(&sum);
            }
        }
        let deficit = 1.0 - rat_to_f64(&sum);
        assert!(deficit > 0.0);
        let bound = c_tail / (500f64).sqrt();
        assert!(deficit < bound * 1.2, "deficit {deficit} vs bound {bound}");
        assert!(deficit > bound * 0.5);
        assert!((deficit_125 / deficit - 2.0).abs() < 0.15, "ratio {}", deficit_125 / deficit);
    }

    #[test]
    fn subcritical_exponent_differs_from_critical() {
        // away from u_cr the coefficient decay switches to n^{-(1+alpha)};
        // fit over n in [90, 120] at u = 1 (< 9/5), where
        // g_cr(1) = t_cr/(1+ (B-1))^2 = (4/27)(9/16) = 1/12
        let model = ModelName::QuadSimpleBlocks;
        let u = FieldElem::one(model.field());
        let m = model.map_series_m(&u, 120).unwrap();
        let g_cr_u = rat(1, 12);
        let pts: Vec<(f64, f64)> = (90..=120)
            .step_by(5)
            .map(|n| {
                let c = m.coeff(n).rational_part();
                ((n as f64).ln(), ln_rat(c) + n as f64 * ln_rat(&g_cr_u))
            })
            .collect();
        let slope = fit_slope(&pts);
        assert!((slope + 2.5).abs() < 0.1, "subcritical slope {slope}");
    }

    #[test]
    fn table_float_renderings_are_probabilities() {
        let data = model_data(ModelName::DdswQuartic, 20);
        let table = law_x_table(&data, 20).unwrap();
        for (_, _, f) in &table.entries {
            assert!(*f >= 0.0 && *f <= 1.0);
        }
        assert!((table.float_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bicubic_x_law_skips_empty_block_sizes() {
        // b_2 = b_3 = 0 for bicubic blocks, so those root sizes are
        // impossible
        let data = model_data(ModelName::BicubicThreeConnected, 12);
        let table = law_x_table(&data, 12).unwrap();
        let by_k: std::collections::HashMap<usize, f64> =
            table.entries.iter().map(|e| (e.0, e.2)).collect();
        assert_eq!(by_k[&2], 0.0);
        assert_eq!(by_k[&3], 0.0);
        assert!(by_k[&1] > 0.0 && by_k[&4] > 0.0);
    }

    #[test]
    fn direct_y_table_matches_power_table() {
        let data = model_data(ModelName::QuadSimpleBlocks, 30);
        let a = law_y_table(&data, 4, 30).unwrap();
        let b = law_y_table_direct(ModelName::QuadSimpleBlocks, 4, 30).unwrap();
        assert_eq!(a.entries.len(), b.entries.len());
        for (x, y) in a.entries.iter().zip(b.entries.iter()) {
            assert_eq!(x.0, y.0);
            assert_eq!(x.1, y.1);
        }
    }

    #[test]
    fn prob_x_respects_truncation() {
        let data = model_data(ModelName::QuadSimpleBlocks, 10);
        assert!(matches!(
            prob_x(&data, 11, 1),
            Err(LawError::BeyondTruncation { .. })
        ));
    }

    #[test]
    fn prob_x_approaches_limit_pk() {
        // |Pr(X_n = 1) - p_1| shrinks from n = 24 to n = 48
        let data = model_data(ModelName::QuadSimpleBlocks, 48);
        let p1 = limit_pk(ModelName::QuadSimpleBlocks, 1).unwrap();
        let d24 = (prob_x(&data, 24, 1).unwrap().to_f64() - p1).abs();
        let d48 = (prob_x(&data, 48, 1).unwrap().to_f64() - p1).abs();
        assert!(d48 < d24, "{d48} vs {d24}");
    }

    #[test]
    fn to_i64_sanity_on_block_counts() {
        // keep ToPrimitive in scope meaningfully: b_3 quad = 2
        let b3 = ModelName::QuadSimpleBlocks.block_count(3).unwrap();
        assert_eq!(b3.to_integer().to_i64().unwrap(), 2);
    }
}
