//! Scaled-integer series arithmetic.
//!
//! Every exact series appearing in these models has coefficients whose
//! denominators divide E * D^n for a model-fixed integer base D and a small
//! per-series constant E (D = 5 for the quadrangulation weight 9/5, 43 for
//! the bicubic weight 68/43, 3^4*7 = 567 for the quartic trees, where 567 is
//! the field norm showing up in the Hensel division). Storing the integers
//! c_n * E * D^n removes every gcd normalization from the hot convolutions:
//! a product coefficient has i + j = n exactly, so scales multiply without
//! any correction. This is a 10-100x win over reduced rationals once the
//! coefficients reach hundreds of digits.
//!
//! Exactness is never assumed silently: all divisions check a zero
//! remainder and conversions verify divisibility.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::field::{CoeffField, FieldElem};
use crate::series::{BivariatePoly, Series, SeriesError};

/// One coefficient: x + y sqrt(7) with y = 0 over the rationals.
type Pair = (BigInt, BigInt);

#[derive(Clone, Debug)]
pub struct ScaledSeries {
    field: CoeffField,
    base: BigInt,
    extra: BigInt,
    /// coefficient n equals (re[n] + im[n] sqrt(d)) / (extra * base^n)
    re: Vec<BigInt>,
    im: Vec<BigInt>,
}

fn exact_div(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_rem(b);
    assert!(r.is_zero(), "inexact division in scaled-series arithmetic");
    q
}

/// Numerator pair and denominator of a field element.
fn split(elem: &FieldElem) -> (BigInt, BigInt, BigInt) {
    match elem {
        FieldElem::Rat(q) => (q.numer().clone(), BigInt::zero(), q.denom().clone()),
        FieldElem::Quad { a, b, .. } => {
            let den = a.denom().lcm(b.denom());
            (
                a.numer() * (&den / a.denom()),
                b.numer() * (&den / b.denom()),
                den,
            )
        }
    }
}

impl ScaledSeries {
    pub fn field(&self) -> CoeffField {
        self.field
    }

    pub fn order(&self) -> usize {
        self.re.len() - 1
    }

    pub fn base(&self) -> &BigInt {
        &self.base
    }

    pub fn extra(&self) -> &BigInt {
        &self.extra
    }

    /// Convert from reduced-rational coefficients; the extra factor is the
    /// smallest constant making every c_n * E * base^n integral.
    pub fn from_series(s: &Series, base: i64) -> ScaledSeries {
        let base = BigInt::from(base);
        let mut extra = BigInt::one();
        let mut pow = BigInt::one();
        for c in s.coeffs() {
            let (_, _, den) = split(c);
            // needed extra at this index: den / gcd(den, base^n)
            let g = den.gcd(&pow);
            let need = &den / &g;
            extra = extra.lcm(&need);
            pow *= &base;
        }
        let mut re = Vec::with_capacity(s.order() + 1);
        let mut im = Vec::with_capacity(s.order() + 1);
        let mut pow = extra.clone();
        for c in s.coeffs() {
            let (x, y, den) = split(c);
            let scale = exact_div(&pow, &den);
            re.push(x * &scale);
            im.push(y * &scale);
            pow *= &base;
        }
        ScaledSeries { field: s.field(), base, extra, re, im }
    }

    pub fn to_series(&self) -> Series {
        let coeffs = (0..=self.order()).map(|n| self.coeff(n)).collect();
        Series::from_coeffs(self.field, coeffs)
    }

    /// Reduced field element at index n (one gcd here, none in the ring ops).
    pub fn coeff(&self, n: usize) -> FieldElem {
        let mut den = self.extra.clone();
        den *= self.base.pow(n as u32);
        match self.field {
            CoeffField::Rational => FieldElem::Rat(BigRational::new(self.re[n].clone(), den)),
            CoeffField::QuadraticExt(d) => FieldElem::Quad {
                a: BigRational::new(self.re[n].clone(), den.clone()),
                b: BigRational::new(self.im[n].clone(), den),
                d,
            },
        }
    }

    pub fn coeff_is_zero(&self, n: usize) -> bool {
        self.re[n].is_zero() && self.im[n].is_zero()
    }

    fn d_ext(&self) -> BigInt {
        match self.field {
            CoeffField::Rational => BigInt::zero(),
            CoeffField::QuadraticExt(d) => BigInt::from(d),
        }
    }

    fn mul_pair(&self, a: &Pair, b: &Pair) -> Pair {
        match self.field {
            CoeffField::Rational => (&a.0 * &b.0, BigInt::zero()),
            CoeffField::QuadraticExt(d) => (
                &a.0 * &b.0 + BigInt::from(d) * (&a.1 * &b.1),
                &a.0 * &b.1 + &a.1 * &b.0,
            ),
        }
    }

    /// Product truncated at the smaller order; scales multiply because every
    /// surviving convolution term has i + j = n.
    pub fn mul(&self, other: &ScaledSeries) -> ScaledSeries {
        assert_eq!(self.field, other.field);
        assert_eq!(self.base, other.base);
        let order = self.order().min(other.order());
        let mut re = vec![BigInt::zero(); order + 1];
        let mut im = vec![BigInt::zero(); order + 1];
        let d = self.d_ext();
        for i in 0..=order {
            if self.re[i].is_zero() && self.im[i].is_zero() {
                continue;
            }
            for j in 0..=order - i {
                if other.re[j].is_zero() && other.im[j].is_zero() {
                    continue;
                }
                re[i + j] += &self.re[i] * &other.re[j];
                if self.field != CoeffField::Rational {
                    re[i + j] += &d * (&self.im[i] * &other.im[j]);
                    im[i + j] += &self.re[i] * &other.im[j] + &self.im[i] * &other.re[j];
                }
            }
        }
        ScaledSeries {
            field: self.field,
            base: self.base.clone(),
            extra: &self.extra * &other.extra,
            re,
            im,
        }
    }

    /// Single coefficient of the product, without forming the whole series.
    pub fn convolve_at(&self, other: &ScaledSeries, n: usize) -> FieldElem {
        assert_eq!(self.base, other.base);
        let mut acc = (BigInt::zero(), BigInt::zero());
        for i in 0..=n.min(self.order()) {
            let j = n - i;
            if j > other.order() || self.coeff_is_zero(i) || other.coeff_is_zero(j) {
                continue;
            }
            let p = self.mul_pair(
                &(self.re[i].clone(), self.im[i].clone()),
                &(other.re[j].clone(), other.im[j].clone()),
            );
            acc.0 += p.0;
            acc.1 += p.1;
        }
        let den = &self.extra * &other.extra * self.base.pow(n as u32);
        match self.field {
            CoeffField::Rational => FieldElem::Rat(BigRational::new(acc.0, den)),
            CoeffField::QuadraticExt(d) => FieldElem::Quad {
                a: BigRational::new(acc.0, den.clone()),
                b: BigRational::new(acc.1, den),
                d,
            },
        }
    }

    /// Sum; both operands must carry identical scaling.
    pub fn add(&self, other: &ScaledSeries) -> ScaledSeries {
        assert_eq!(self.base, other.base);
        assert_eq!(self.extra, other.extra, "mismatched extra factors in add");
        let order = self.order().min(other.order());
        ScaledSeries {
            field: self.field,
            base: self.base.clone(),
            extra: self.extra.clone(),
            re: (0..=order).map(|i| &self.re[i] + &other.re[i]).collect(),
            im: (0..=order).map(|i| &self.im[i] + &other.im[i]).collect(),
        }
    }

    /// Integer-scalar multiple (block counts are integers for every model).
    pub fn scale_int(&self, c: &BigInt) -> ScaledSeries {
        ScaledSeries {
            field: self.field,
            base: self.base.clone(),
            extra: self.extra.clone(),
            re: self.re.iter().map(|x| x * c).collect(),
            im: self.im.iter().map(|x| x * c).collect(),
        }
    }

    pub fn zero_like(&self, order: usize) -> ScaledSeries {
        ScaledSeries {
            field: self.field,
            base: self.base.clone(),
            extra: self.extra.clone(),
            re: vec![BigInt::zero(); order + 1],
            im: vec![BigInt::zero(); order + 1],
        }
    }

    /// Multiply by g^k: indices shift up and each stored integer picks up
    /// base^k to stay on the D^n grid.
    pub fn shift_up(&self, k: usize) -> ScaledSeries {
        let order = self.order() + k;
        let factor = self.base.pow(k as u32);
        let mut re = vec![BigInt::zero(); order + 1];
        let mut im = vec![BigInt::zero(); order + 1];
        for i in 0..=self.order() {
            re[i + k] = &self.re[i] * &factor;
            im[i + k] = &self.im[i] * &factor;
        }
        ScaledSeries { field: self.field, base: self.base.clone(), extra: self.extra.clone(), re, im }
    }

    /// Re-express the series over a different extra factor; every stored
    /// integer must remain integral (checked), i.e. the true denominators
    /// already fit under target * base^n.
    pub fn renormalize_extra(&self, target: i64) -> ScaledSeries {
        let target = BigInt::from(target);
        if target == self.extra {
            return self.clone();
        }
        let re = self.re.iter().map(|v| exact_div(&(v * &target), &self.extra)).collect();
        let im = self.im.iter().map(|v| exact_div(&(v * &target), &self.extra)).collect();
        ScaledSeries { field: self.field, base: self.base.clone(), extra: target, re, im }
    }

    /// Multiply by the rational p/q: numerators pick up p, the extra picks
    /// up q.
    pub fn scale_rational(&self, num: i64, den: i64) -> ScaledSeries {
        let p = BigInt::from(num);
        ScaledSeries {
            field: self.field,
            base: self.base.clone(),
            extra: &self.extra * BigInt::from(den),
            re: self.re.iter().map(|x| x * &p).collect(),
            im: self.im.iter().map(|x| x * &p).collect(),
        }
    }

    /// The constant 1 on the same scaling grid.
    pub fn one_like(&self, order: usize) -> ScaledSeries {
        let mut s = self.zero_like(order);
        s.re[0] = s.extra.clone();
        s
    }

    pub fn neg(&self) -> ScaledSeries {
        ScaledSeries {
            field: self.field,
            base: self.base.clone(),
            extra: self.extra.clone(),
            re: self.re.iter().map(|x| -x).collect(),
            im: self.im.iter().map(|x| -x).collect(),
        }
    }

    /// k-th power by binary exponentiation.
    pub fn pow(&self, mut k: u64) -> ScaledSeries {
        let mut acc = self.one_like(self.order()).renormalize_extra(1);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn truncate(&self, order: usize) -> ScaledSeries {
        let order = order.min(self.order());
        ScaledSeries {
            field: self.field,
            base: self.base.clone(),
            extra: self.extra.clone(),
            re: self.re[..=order].to_vec(),
            im: self.im[..=order].to_vec(),
        }
    }

    /// Reciprocal via the standard recurrence, carried out in integers. The
    /// caller supplies `extra_hint`, a constant E such that the reciprocal's
    /// coefficient n has denominator dividing E * base^n; every division
    /// checks exactness, so a wrong hint fails loudly rather than silently.
    pub fn inverse(&self, extra_hint: i64) -> ScaledSeries {
        let order = self.order();
        let e_out = BigInt::from(extra_hint);
        // a_0 as an integer pair over extra (index 0 scale is just extra)
        let a0 = (self.re[0].clone(), self.im[0].clone());
        assert!(!(a0.0.is_zero() && a0.1.is_zero()), "zero constant term");
        // 1/a0 = extra * conj(a0-int) / norm(a0-int)
        let d = self.d_ext();
        let norm = &a0.0 * &a0.0 - &d * (&a0.1 * &a0.1);
        let mut re = vec![BigInt::zero(); order + 1];
        let mut im = vec![BigInt::zero(); order + 1];
        // b_0 * e_out = e_out * extra * conj / norm
        let s0 = &e_out * &self.extra;
        re[0] = exact_div(&(&s0 * &a0.0), &norm);
        im[0] = exact_div(&(-(&s0 * &a0.1)), &norm);
        for n in 1..=order {
            // S = sum_{k=1..n} a_k b_{n-k}, scale extra * e_out * base^n
            let mut s = (BigInt::zero(), BigInt::zero());
            for k in 1..=n {
                if self.coeff_is_zero(k) {
                    continue;
                }
                let p = self.mul_pair(
                    &(self.re[k].clone(), self.im[k].clone()),
                    &(re[n - k].clone(), im[n - k].clone()),
                );
                s.0 += p.0;
                s.1 += p.1;
            }
            // b_n = -S / a0: multiply by extra * conj(a0-int) / norm
            let num = self.mul_pair(&s, &(a0.0.clone(), -a0.1.clone()));
            re[n] = exact_div(&(-(&num.0 * &self.extra)), &(&norm * &self.extra));
            im[n] = exact_div(&(-(&num.1 * &self.extra)), &(&norm * &self.extra));
        }
        ScaledSeries { field: self.field, base: self.base.clone(), extra: e_out, re, im }
    }
}

/// The coefficient-by-coefficient algebraic solver in the scaled domain:
/// identical branch and recurrence as `series::solve_algebraic_prefix`, with
/// pure integer inner loops. `base` is the model's denominator base.
pub fn solve_prefix_scaled(
    poly: &BivariatePoly,
    order: usize,
    branch_seed: &FieldElem,
    base: i64,
) -> Result<ScaledSeries, SeriesError> {
    let field = branch_seed.field();
    if !poly.eval_at_origin(branch_seed).is_zero() {
        return Err(SeriesError::BadSeed);
    }
    let slope = poly.derivative_at_origin(branch_seed);
    if slope.is_zero() {
        return Err(SeriesError::SingularBranch);
    }
    let deg = poly.degree_b();
    let base_big = BigInt::from(base);
    let d_ext = match field {
        CoeffField::Rational => BigInt::zero(),
        CoeffField::QuadraticExt(d) => BigInt::from(d),
    };
    let mul_pair = |a: &Pair, b: &Pair| -> Pair {
        match field {
            CoeffField::Rational => (&a.0 * &b.0, BigInt::zero()),
            CoeffField::QuadraticExt(_) => (
                &a.0 * &b.0 + &d_ext * (&a.1 * &b.1),
                &a.0 * &b.1 + &a.1 * &b.0,
            ),
        }
    };

    // the seed's denominator is the per-series extra E
    let (s_re, s_im, e_m) = split(branch_seed);
    // polynomial coefficients over one common denominator q_p
    let mut q_p = BigInt::one();
    for row in poly.rows() {
        for c in row {
            let (_, _, den) = split(c);
            q_p = q_p.lcm(&den);
        }
    }
    let p_int: Vec<Vec<Pair>> = poly
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| {
                    let (x, y, den) = split(c);
                    let f = exact_div(&q_p, &den);
                    (x * &f, y * &f)
                })
                .collect()
        })
        .collect();
    // e_p = E^deg aligns the mixed W_j scales inside A
    let e_pow: Vec<BigInt> = (0..=deg).map(|j| e_m.pow(j as u32)).collect();
    let e_p = e_pow[deg].clone();

    // W_j = M^j stored at scale E^j * base^i; seed powers at index 0
    let mut m_re = vec![s_re.clone()];
    let mut m_im = vec![s_im.clone()];
    let mut w: Vec<(Vec<BigInt>, Vec<BigInt>)> = Vec::with_capacity(deg);
    {
        let mut cur = (s_re.clone(), s_im.clone());
        w.push((vec![cur.0.clone()], vec![cur.1.clone()]));
        for _ in 2..=deg {
            cur = mul_pair(&cur, &(s_re.clone(), s_im.clone()));
            w.push((vec![cur.0.clone()], vec![cur.1.clone()]));
        }
    }
    // L_j = j * m0^{j-1} at scale E^{j-1}
    let l: Vec<Pair> = (1..=deg)
        .map(|j| {
            let mut p = (BigInt::one(), BigInt::zero());
            for _ in 1..j {
                p = mul_pair(&p, &(s_re.clone(), s_im.clone()));
            }
            (p.0 * j, p.1 * j)
        })
        .collect();
    // divisor: m_n E D^n = -scaledA * E * q0 * conj(c0int) / (q_p * e_p * norm(c0int))
    let (c0_re, c0_im, c0_den) = split(&slope);
    let c0_norm = &c0_re * &c0_re - &d_ext * (&c0_im * &c0_im);
    let div_all = &q_p * &e_p * &c0_norm;
    let mul_const = (&e_m * &c0_den * &c0_re, -(&e_m * &c0_den * &c0_im));

    let mut base_pows = vec![BigInt::one()];
    for n in 1..=order {
        base_pows.push(&base_pows[n - 1] * &base_big);
    }

    for n in 1..=order {
        // K_j at scale E^j D^n
        let mut k_parts: Vec<Pair> = Vec::with_capacity(deg);
        for j in 1..=deg {
            let kj = if j == 1 {
                (BigInt::zero(), BigInt::zero())
            } else {
                let wjm1 = &w[j - 2];
                let mut acc = mul_pair(&k_parts[j - 2], &(s_re.clone(), s_im.clone()));
                for i in 1..n {
                    if wjm1.0[i].is_zero() && wjm1.1[i].is_zero() {
                        continue;
                    }
                    let p = mul_pair(
                        &(wjm1.0[i].clone(), wjm1.1[i].clone()),
                        &(m_re[n - i].clone(), m_im[n - i].clone()),
                    );
                    acc.0 += p.0;
                    acc.1 += p.1;
                }
                acc
            };
            k_parts.push(kj);
        }
        // scaledA = A * q_p * E^deg * D^n
        let mut a = (BigInt::zero(), BigInt::zero());
        for j in 0..=deg {
            for (el, c) in p_int[j].iter().enumerate() {
                if el > n || (c.0.is_zero() && c.1.is_zero()) {
                    continue;
                }
                let x: Pair = if j == 0 {
                    if n == el {
                        (BigInt::one(), BigInt::zero())
                    } else {
                        continue;
                    }
                } else if el == 0 {
                    k_parts[j - 1].clone()
                } else {
                    let wj = &w[j - 1];
                    (wj.0[n - el].clone(), wj.1[n - el].clone())
                };
                if x.0.is_zero() && x.1.is_zero() {
                    continue;
                }
                let weighted = mul_pair(c, &x);
                let lift = &e_pow[deg - j] * &base_pows[el];
                a.0 += weighted.0 * &lift;
                a.1 += weighted.1 * &lift;
            }
        }
        // m_n at scale E D^n
        let num = mul_pair(&a, &mul_const);
        let mn = (
            exact_div(&-num.0, &div_all),
            exact_div(&-num.1, &div_all),
        );
        // W_j[n] = K_j + L_j m_n at scale E^j D^n
        for j in 1..=deg {
            let inc = mul_pair(&l[j - 1], &mn);
            let kj = &k_parts[j - 1];
            w[j - 1].0.push(&kj.0 + inc.0);
            w[j - 1].1.push(&kj.1 + inc.1);
        }
        m_re.push(mn.0);
        m_im.push(mn.1);
    }
    Ok(ScaledSeries { field, base: base_big, extra: e_m, re: m_re, im: m_im })
}
