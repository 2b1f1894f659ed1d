//! Truncated formal power series with exact coefficients, and the equation
//! solvers used to build generating functions: a generic fixed-point iterator
//! for substitution relations, a series Newton iteration for algebraic
//! equations, and a coefficient-by-coefficient Hensel lift for the same
//! equations when the target order is large.
//!
//! Invariants:
//! - `coeffs.len() == order + 1` always.
//! - binary operations require equal coefficient fields and truncate to the
//!   smaller order.

use thiserror::Error;

use crate::field::{CoeffField, FieldElem};

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("coefficient field mismatch: {0} vs {1}")]
    FieldMismatch(CoeffField, CoeffField),
    #[error("series has zero constant term and no inverse")]
    ZeroConstantTerm,
    #[error("inner series of a composition must have zero constant term")]
    NonzeroInnerConstant,
    #[error("fixed-point iteration did not stabilize within {0} applications")]
    NonConvergence(usize),
    #[error("singular branch: dP/dB vanishes at the seed")]
    SingularBranch,
    #[error("seed is not a root of the constant-term equation")]
    BadSeed,
}

pub type Result<T> = std::result::Result<T, SeriesError>;

/// f(g) = sum_{n=0}^{order} coeffs[n] g^n + O(g^{order+1}), exact coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    field: CoeffField,
    coeffs: Vec<FieldElem>,
}

impl Series {
    pub fn from_coeffs(field: CoeffField, coeffs: Vec<FieldElem>) -> Self {
        assert!(!coeffs.is_empty(), "a series stores at least the constant term");
        debug_assert!(coeffs.iter().all(|c| c.field() == field));
        Series { field, coeffs }
    }

    pub fn zero(field: CoeffField, order: usize) -> Self {
        Series { field, coeffs: vec![FieldElem::zero(field); order + 1] }
    }

    pub fn one(field: CoeffField, order: usize) -> Self {
        let mut s = Self::zero(field, order);
        s.coeffs[0] = FieldElem::one(field);
        s
    }

    pub fn constant(c: FieldElem, order: usize) -> Self {
        let mut s = Self::zero(c.field(), order);
        s.coeffs[0] = c;
        s
    }

    /// The monomial c*g^k.
    pub fn monomial(c: FieldElem, k: usize, order: usize) -> Self {
        let mut s = Self::zero(c.field(), order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    /// The identity series g.
    pub fn gen_var(field: CoeffField, order: usize) -> Self {
        Self::monomial(FieldElem::one(field), 1, order)
    }

    pub fn field(&self) -> CoeffField {
        self.field
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &FieldElem {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[FieldElem] {
        &self.coeffs
    }

    pub fn truncate(&self, order: usize) -> Series {
        let mut coeffs = self.coeffs.clone();
        coeffs.truncate(order.min(self.order()) + 1);
        Series { field: self.field, coeffs }
    }

    /// Smallest n with a nonzero coefficient; `None` for the zero series.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    fn check_field(&self, other: &Series) -> Result<()> {
        if self.field != other.field {
            return Err(SeriesError::FieldMismatch(self.field, other.field));
        }
        Ok(())
    }

    pub fn add(&self, other: &Series) -> Result<Series> {
        self.check_field(other)?;
        let n = self.order().min(other.order());
        let coeffs = (0..=n).map(|i| self.coeffs[i].add(&other.coeffs[i])).collect();
        Ok(Series { field: self.field, coeffs })
    }

    pub fn sub(&self, other: &Series) -> Result<Series> {
        self.check_field(other)?;
        let n = self.order().min(other.order());
        let coeffs = (0..=n).map(|i| self.coeffs[i].sub(&other.coeffs[i])).collect();
        Ok(Series { field: self.field, coeffs })
    }

    pub fn neg(&self) -> Series {
        Series {
            field: self.field,
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn scale(&self, c: &FieldElem) -> Series {
        Series {
            field: self.field,
            coeffs: self.coeffs.iter().map(|x| x.mul(c)).collect(),
        }
    }

    pub fn mul(&self, other: &Series) -> Result<Series> {
        self.check_field(other)?;
        let n = self.order().min(other.order());
        let va = self.valuation().unwrap_or(n + 1);
        let vb = other.valuation().unwrap_or(n + 1);
        let mut coeffs = vec![FieldElem::zero(self.field); n + 1];
        for i in va..=n.min(self.order()) {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in vb..=(n - i).min(other.order()) {
                if other.coeffs[j].is_zero() {
                    continue;
                }
                coeffs[i + j] = coeffs[i + j].add(&self.coeffs[i].mul(&other.coeffs[j]));
            }
        }
        Ok(Series { field: self.field, coeffs })
    }

    /// a^k by binary exponentiation, truncated at a.order().
    pub fn pow(&self, mut k: u64) -> Series {
        let mut base = self.clone();
        let mut acc = Series::one(self.field, self.order());
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base).expect("same field");
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base).expect("same field");
            }
        }
        acc
    }

    /// b with a*b = 1 up to the truncation order, via the standard recurrence
    /// b_n = -(1/a_0) sum_{k=1..n} a_k b_{n-k}.
    pub fn inverse(&self) -> Result<Series> {
        let a0 = &self.coeffs[0];
        let inv_a0 = a0.inv().ok_or(SeriesError::ZeroConstantTerm)?;
        let n = self.order();
        let mut b = vec![FieldElem::zero(self.field); n + 1];
        b[0] = inv_a0.clone();
        for m in 1..=n {
            let mut acc = FieldElem::zero(self.field);
            for k in 1..=m {
                if self.coeffs[k].is_zero() || b[m - k].is_zero() {
                    continue;
                }
                acc = acc.add(&self.coeffs[k].mul(&b[m - k]));
            }
            b[m] = acc.mul(&inv_a0).neg();
        }
        Ok(Series { field: self.field, coeffs: b })
    }

    pub fn div(&self, other: &Series) -> Result<Series> {
        self.mul(&other.inverse()?)
    }

    /// sum_k outer[k] * inner^k, truncated at inner.order(). The inner series
    /// must have zero constant term so that only finitely many outer terms
    /// reach any given order; powers are accumulated incrementally.
    pub fn compose_poly(outer: &[FieldElem], inner: &Series) -> Result<Series> {
        if !inner.coeffs[0].is_zero() {
            return Err(SeriesError::NonzeroInnerConstant);
        }
        let order = inner.order();
        let mut acc = Series::zero(inner.field, order);
        if let Some(c0) = outer.first() {
            acc.coeffs[0] = c0.clone();
        }
        let mut power = Series::one(inner.field, order);
        for (k, ck) in outer.iter().enumerate().skip(1) {
            if k > order {
                break;
            }
            power = power.mul(inner)?;
            if ck.is_zero() {
                continue;
            }
            acc = acc.add(&power.scale(ck))?;
        }
        Ok(acc)
    }

    /// Debug dump: {"field": ..., "order": N, "coeffs": [...]}, rationals as
    /// "p/q" strings and quadratic elements as ["a","b"] pairs.
    pub fn to_json(&self) -> serde_json::Value {
        let coeffs: Vec<serde_json::Value> = self
            .coeffs
            .iter()
            .map(|c| match c {
                FieldElem::Rat(_) => serde_json::Value::String(c.to_exact_string()),
                FieldElem::Quad { a, b, .. } => serde_json::json!([
                    crate::field::FieldElem::Rat(a.clone()).to_exact_string(),
                    crate::field::FieldElem::Rat(b.clone()).to_exact_string(),
                ]),
            })
            .collect();
        serde_json::json!({
            "field": self.field.to_string(),
            "order": self.order(),
            "coeffs": coeffs,
        })
    }
}

/// Solve M = update(M) for maps that fix one further coefficient per
/// application (substitution relations whose inner argument has positive
/// valuation). Terminates as soon as two successive iterates agree; errors
/// after order+2 applications.
pub fn solve_fixed_point<F>(update: F, order: usize, seed: &Series) -> Result<Series>
where
    F: Fn(&Series) -> Result<Series>,
{
    let mut m = seed.truncate(order);
    if m.order() < order {
        let mut coeffs = m.coeffs.clone();
        coeffs.resize(order + 1, FieldElem::zero(m.field));
        m = Series { field: m.field, coeffs };
    }
    for _ in 0..=order + 1 {
        let next = update(&m)?.truncate(order);
        if next == m {
            return Ok(m);
        }
        m = next;
    }
    Err(SeriesError::NonConvergence(order + 2))
}

/// P(t, B) = sum_j c_j(t) B^j with polynomial coefficients in t.
#[derive(Clone, Debug)]
pub struct BivariatePoly {
    field: CoeffField,
    /// coeffs[j][l] is the coefficient of t^l B^j
    coeffs: Vec<Vec<FieldElem>>,
}

impl BivariatePoly {
    pub fn new(field: CoeffField, coeffs: Vec<Vec<FieldElem>>) -> Self {
        assert!(!coeffs.is_empty());
        BivariatePoly { field, coeffs }
    }

    /// Convenience constructor from i64 coefficient rows.
    pub fn from_int_rows(field: CoeffField, rows: &[&[i64]]) -> Self {
        let coeffs = rows
            .iter()
            .map(|row| row.iter().map(|&v| FieldElem::from_int(v, field)).collect())
            .collect();
        BivariatePoly { field, coeffs }
    }

    pub fn degree_b(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Raw coefficient rows: rows()[j][l] is the coefficient of t^l B^j.
    pub fn rows(&self) -> &Vec<Vec<FieldElem>> {
        &self.coeffs
    }

    /// Coefficient of B^j evaluated at t = 0.
    fn c_at_zero(&self, j: usize) -> FieldElem {
        self.coeffs[j].first().cloned().unwrap_or_else(|| FieldElem::zero(self.field))
    }

    /// P evaluated at a scalar pair (t=0, b).
    pub fn eval_at_origin(&self, b: &FieldElem) -> FieldElem {
        let mut acc = FieldElem::zero(self.field);
        let mut bp = FieldElem::one(self.field);
        for j in 0..self.coeffs.len() {
            acc = acc.add(&self.c_at_zero(j).mul(&bp));
            bp = bp.mul(b);
        }
        acc
    }

    /// dP/dB at (t=0, b).
    pub fn derivative_at_origin(&self, b: &FieldElem) -> FieldElem {
        let mut acc = FieldElem::zero(self.field);
        let mut bp = FieldElem::one(self.field);
        for j in 1..self.coeffs.len() {
            let jf = FieldElem::from_int(j as i64, self.field);
            acc = acc.add(&self.c_at_zero(j).mul(&jf).mul(&bp));
            bp = bp.mul(b);
        }
        acc
    }

    /// P(t, B(t)) as a series, Horner in B.
    pub fn eval_series(&self, b: &Series) -> Result<Series> {
        let order = b.order();
        let mut acc = self.coeff_series(self.degree_b(), order);
        for j in (0..self.degree_b()).rev() {
            acc = acc.mul(b)?.add(&self.coeff_series(j, order))?;
        }
        Ok(acc)
    }

    /// dP/dB as a bivariate polynomial.
    pub fn derivative_b(&self) -> BivariatePoly {
        let mut rows = Vec::with_capacity(self.coeffs.len().saturating_sub(1));
        for j in 1..self.coeffs.len() {
            let jf = FieldElem::from_int(j as i64, self.field);
            rows.push(self.coeffs[j].iter().map(|c| c.mul(&jf)).collect());
        }
        if rows.is_empty() {
            rows.push(vec![FieldElem::zero(self.field)]);
        }
        BivariatePoly { field: self.field, coeffs: rows }
    }

    fn coeff_series(&self, j: usize, order: usize) -> Series {
        let mut s = Series::zero(self.field, order);
        for (l, c) in self.coeffs[j].iter().enumerate() {
            if l > order {
                break;
            }
            s.coeffs[l] = c.clone();
        }
        s
    }
}

/// Solve P(t, B(t)) = 0 mod t^{order+1} by series Newton iteration with
/// order doubling; quadratic convergence from a simple root of the
/// constant-term equation.
pub fn newton_algebraic(poly: &BivariatePoly, order: usize, branch_seed: &FieldElem) -> Result<Series> {
    if !poly.eval_at_origin(branch_seed).is_zero() {
        return Err(SeriesError::BadSeed);
    }
    if poly.derivative_at_origin(branch_seed).is_zero() {
        return Err(SeriesError::SingularBranch);
    }
    let deriv = poly.derivative_b();
    let mut b = Series::constant(branch_seed.clone(), 0);
    let mut prec = 0usize;
    while prec < order {
        prec = (2 * prec + 1).min(order);
        // lift to the new precision, then one Newton step
        let mut coeffs = b.coeffs.clone();
        coeffs.resize(prec + 1, FieldElem::zero(poly.field));
        b = Series { field: poly.field, coeffs };
        let val = poly.eval_series(&b)?;
        let der = deriv.eval_series(&b)?;
        b = b.sub(&val.div(&der)?)?;
    }
    Ok(b)
}

/// Solve P(t, B(t)) = 0 mod t^{order+1} one coefficient at a time (linear
/// Hensel lift). Produces the same branch as [`newton_algebraic`]; cost is
/// O(deg * order^2) coefficient operations, which is what makes order-400
/// builds over big rationals practical.
pub fn solve_algebraic_prefix(poly: &BivariatePoly, order: usize, branch_seed: &FieldElem) -> Result<Series> {
    if !poly.eval_at_origin(branch_seed).is_zero() {
        return Err(SeriesError::BadSeed);
    }
    let slope = poly.derivative_at_origin(branch_seed);
    let slope_inv = slope.inv().ok_or(SeriesError::SingularBranch)?;
    let field = poly.field;
    let deg = poly.degree_b();
    let m0 = branch_seed.clone();

    // powers[j][i] = [t^i] B^j for the prefix found so far (j = 1..=deg)
    let mut m: Vec<FieldElem> = vec![m0.clone()];
    let mut powers: Vec<Vec<FieldElem>> = (1..=deg).map(|j| vec![m0.pow(j as u32)]).collect();
    // d/dm_n of [t^n] B^j is j*m0^{j-1}, independent of n
    let lin: Vec<FieldElem> = (1..=deg)
        .map(|j| FieldElem::from_int(j as i64, field).mul(&m0.pow(j as u32 - 1)))
        .collect();

    for n in 1..=order {
        // K[j] = [t^n] B^j with the unknown m_n set to 0
        let mut k_parts: Vec<FieldElem> = Vec::with_capacity(deg);
        for j in 1..=deg {
            let kj = if j == 1 {
                FieldElem::zero(field)
            } else {
                let w = &powers[j - 2]; // B^{j-1}
                let mut acc = k_parts[j - 2].mul(&m0);
                for i in 1..n {
                    if w[i].is_zero() || m[n - i].is_zero() {
                        continue;
                    }
                    acc = acc.add(&w[i].mul(&m[n - i]));
                }
                acc
            };
            k_parts.push(kj);
        }
        // known part of [t^n] P with m_n = 0
        let mut a = FieldElem::zero(field);
        for j in 0..=deg {
            for (l, c) in poly.coeffs[j].iter().enumerate() {
                if l > n {
                    break;
                }
                if c.is_zero() {
                    continue;
                }
                let w = if j == 0 {
                    if n == l {
                        FieldElem::one(field)
                    } else {
                        continue;
                    }
                } else if l == 0 {
                    k_parts[j - 1].clone()
                } else {
                    powers[j - 1][n - l].clone()
                };
                if w.is_zero() {
                    continue;
                }
                a = a.add(&c.mul(&w));
            }
        }
        let mn = a.mul(&slope_inv).neg();
        for j in 1..=deg {
            let wn = k_parts[j - 1].add(&lin[j - 1].mul(&mn));
            powers[j - 1].push(wn);
        }
        m.push(mn);
    }
    Ok(Series { field, coeffs: m })
}
