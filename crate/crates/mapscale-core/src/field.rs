//! Exact coefficient fields: arbitrary-precision rationals and the real
//! quadratic extension Q(sqrt(d)), plus symbolic radical constants.
//!
//! Everything here is exact; floats only appear in the explicit rendering
//! helpers (`to_f64`, `to_decimal`).

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
pub use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// The coefficient field a series is declared over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoeffField {
    /// Arbitrary-precision p/q.
    Rational,
    /// Pairs (a, b) of rationals representing a + b*sqrt(d), d a positive
    /// non-square integer.
    QuadraticExt(i64),
}

impl fmt::Display for CoeffField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffField::Rational => write!(f, "rational"),
            CoeffField::QuadraticExt(d) => write!(f, "quadratic_ext_{d}"),
        }
    }
}

/// An element of one of the supported coefficient fields.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FieldElem {
    Rat(BigRational),
    /// a + b*sqrt(d)
    Quad { a: BigRational, b: BigRational, d: i64 },
}

pub fn rat(n: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(den))
}

pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl FieldElem {
    pub fn zero(field: CoeffField) -> Self {
        match field {
            CoeffField::Rational => FieldElem::Rat(BigRational::zero()),
            CoeffField::QuadraticExt(d) => FieldElem::Quad {
                a: BigRational::zero(),
                b: BigRational::zero(),
                d,
            },
        }
    }

    pub fn one(field: CoeffField) -> Self {
        match field {
            CoeffField::Rational => FieldElem::Rat(BigRational::one()),
            CoeffField::QuadraticExt(d) => FieldElem::Quad {
                a: BigRational::one(),
                b: BigRational::zero(),
                d,
            },
        }
    }

    pub fn from_rational(q: BigRational, field: CoeffField) -> Self {
        match field {
            CoeffField::Rational => FieldElem::Rat(q),
            CoeffField::QuadraticExt(d) => FieldElem::Quad {
                a: q,
                b: BigRational::zero(),
                d,
            },
        }
    }

    pub fn from_int(n: i64, field: CoeffField) -> Self {
        Self::from_rational(rat_int(n), field)
    }

    pub fn field(&self) -> CoeffField {
        match self {
            FieldElem::Rat(_) => CoeffField::Rational,
            FieldElem::Quad { d, .. } => CoeffField::QuadraticExt(*d),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FieldElem::Rat(q) => q.is_zero(),
            FieldElem::Quad { a, b, .. } => a.is_zero() && b.is_zero(),
        }
    }

    /// The rational part; the full value when the sqrt-part is zero.
    pub fn rational_part(&self) -> &BigRational {
        match self {
            FieldElem::Rat(q) => q,
            FieldElem::Quad { a, .. } => a,
        }
    }

    /// Some(q) when the element lies in Q.
    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            FieldElem::Rat(q) => Some(q),
            FieldElem::Quad { a, b, .. } if b.is_zero() => Some(a),
            _ => None,
        }
    }

    fn promote(x: &FieldElem, y: &FieldElem) -> (FieldElem, FieldElem) {
        match (x, y) {
            (FieldElem::Rat(_), FieldElem::Quad { d, .. }) => {
                (FieldElem::from_rational(x.rational_part().clone(), CoeffField::QuadraticExt(*d)), y.clone())
            }
            (FieldElem::Quad { d, .. }, FieldElem::Rat(_)) => {
                (x.clone(), FieldElem::from_rational(y.rational_part().clone(), CoeffField::QuadraticExt(*d)))
            }
            _ => (x.clone(), y.clone()),
        }
    }

    pub fn add(&self, other: &FieldElem) -> FieldElem {
        match (self, other) {
            (FieldElem::Rat(x), FieldElem::Rat(y)) => FieldElem::Rat(x + y),
            (FieldElem::Quad { a, b, d }, FieldElem::Quad { a: a2, b: b2, d: d2 }) => {
                assert_eq!(d, d2, "mixed quadratic extensions");
                FieldElem::Quad { a: a + a2, b: b + b2, d: *d }
            }
            _ => {
                let (x, y) = FieldElem::promote(self, other);
                x.add(&y)
            }
        }
    }

    pub fn sub(&self, other: &FieldElem) -> FieldElem {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> FieldElem {
        match self {
            FieldElem::Rat(q) => FieldElem::Rat(-q),
            FieldElem::Quad { a, b, d } => FieldElem::Quad { a: -a, b: -b, d: *d },
        }
    }

    pub fn mul(&self, other: &FieldElem) -> FieldElem {
        match (self, other) {
            (FieldElem::Rat(x), FieldElem::Rat(y)) => FieldElem::Rat(x * y),
            (FieldElem::Quad { a, b, d }, FieldElem::Quad { a: a2, b: b2, d: d2 }) => {
                assert_eq!(d, d2, "mixed quadratic extensions");
                let dd = rat_int(*d);
                FieldElem::Quad {
                    a: a * a2 + &dd * (b * b2),
                    b: a * b2 + b * a2,
                    d: *d,
                }
            }
            _ => {
                let (x, y) = FieldElem::promote(self, other);
                x.mul(&y)
            }
        }
    }

    /// Multiplicative inverse. `None` for zero.
    pub fn inv(&self) -> Option<FieldElem> {
        if self.is_zero() {
            return None;
        }
        match self {
            FieldElem::Rat(q) => Some(FieldElem::Rat(q.recip())),
            FieldElem::Quad { a, b, d } => {
                // 1/(a + b sqrt d) = (a - b sqrt d)/(a^2 - d b^2)
                let norm = a * a - rat_int(*d) * (b * b);
                assert!(!norm.is_zero(), "zero norm in quadratic extension");
                Some(FieldElem::Quad {
                    a: a / &norm,
                    b: -(b / &norm),
                    d: *d,
                })
            }
        }
    }

    pub fn div(&self, other: &FieldElem) -> FieldElem {
        self.mul(&other.inv().expect("division by zero field element"))
    }

    pub fn pow(&self, mut k: u32) -> FieldElem {
        let mut base = self.clone();
        let mut acc = FieldElem::one(self.field());
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

    /// Double rendering. For quadratic elements the two parts can cancel by
    /// hundreds of digits (the conjugate branch grows faster than the value),
    /// so a + b*sqrt(d) is combined in integer arithmetic at 128 fractional
    /// bits before rounding.
    pub fn to_f64(&self) -> f64 {
        match self {
            FieldElem::Rat(q) => rat_to_f64(q),
            FieldElem::Quad { a, b, d } => {
                if b.is_zero() {
                    return rat_to_f64(a);
                }
                let p1 = a.numer() * b.denom();
                let p2 = b.numer() * a.denom();
                let den = a.denom() * b.denom();
                // sqrt(d * p2^2) at scale 2^128, floor root with sign
                let scaled_sq = BigInt::from(*d) * (&p2 * &p2) << 256u32;
                let mut root = scaled_sq.sqrt();
                if p2.sign() == Sign::Minus {
                    root = -root;
                }
                let numer = (p1 << 128u32) + root;
                rat_to_f64(&BigRational::new(numer, den << 128u32))
            }
        }
    }

    /// Render as "p/q" or "a+b*sqrt(d)".
    pub fn to_exact_string(&self) -> String {
        match self {
            FieldElem::Rat(q) => format_rational(q),
            FieldElem::Quad { a, b, d } => {
                if b.is_zero() {
                    format_rational(a)
                } else if b.is_negative() {
                    format!("{}-{}*sqrt({})", format_rational(a), format_rational(&-b), d)
                } else {
                    format!("{}+{}*sqrt({})", format_rational(a), format_rational(b), d)
                }
            }
        }
    }
}

fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        format!("{}", q.numer())
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Correctly-scaled f64 rendering of a big rational.
///
/// `numer.to_f64()/denom.to_f64()` overflows to inf/inf for the coefficient
/// sizes that show up here (hundreds of digits), so shift both to a 64-bit
/// quotient first.
pub fn rat_to_f64(q: &BigRational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    let numer = q.numer();
    let denom = q.denom();
    let shift: i64 = 64 + denom.bits() as i64 - numer.bits() as i64;
    let scaled: BigInt = if shift >= 0 {
        (numer << shift as u64) / denom
    } else {
        numer / (denom << (-shift) as u64)
    };
    let mantissa = scaled.to_f64().unwrap_or(f64::NAN);
    mantissa * 2f64.powi(-shift as i32)
}

/// Natural log of a positive big rational, via bit lengths.
pub fn ln_rat(q: &BigRational) -> f64 {
    assert!(q.is_positive(), "ln of non-positive rational");
    ln_big(q.numer()) - ln_big(q.denom())
}

fn ln_big(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 52 {
        return n.to_f64().unwrap().ln();
    }
    let shift = bits - 52;
    let top: BigInt = n >> shift;
    top.to_f64().unwrap().ln() + (shift as f64) * std::f64::consts::LN_2
}

/// Exact square root of a rational that is a perfect square. `None` otherwise.
pub fn rational_sqrt(q: &BigRational) -> Option<BigRational> {
    rational_nth_root(q, 2)
}

/// Exact n-th root of a rational when it exists in Q.
pub fn rational_nth_root(q: &BigRational, n: u32) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let rn = q.numer().nth_root(n);
    let rd = q.denom().nth_root(n);
    if &rn.pow(n) == q.numer() && &rd.pow(n) == q.denom() {
        Some(BigRational::new(rn, rd))
    } else {
        None
    }
}

/// A positive real of the form `prod_p p^{e_p}` with prime bases and exact
/// rational exponents, together with a sign. Closed under multiplication,
/// division and rational powers; equality is decidable.
///
/// This is how critical constants such as 2^4/5^(4/3) are carried around
/// without rounding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Radical {
    negative: bool,
    /// prime -> nonzero exponent
    factors: BTreeMap<u64, BigRational>,
}

impl Radical {
    pub fn one() -> Self {
        Radical { negative: false, factors: BTreeMap::new() }
    }

    /// Build from a nonzero rational by prime factorization.
    pub fn from_rational(q: &BigRational) -> Self {
        assert!(!q.is_zero(), "radical of zero");
        let mut r = Radical::one();
        r.negative = q.is_negative();
        let n = q.numer().abs().to_u128().expect("radical base too large to factor");
        let d = q.denom().to_u128().expect("radical base too large to factor");
        r.absorb(n, 1);
        r.absorb(d, -1);
        r
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(&rat_int(n))
    }

    fn absorb(&mut self, mut n: u128, sign: i64) {
        let mut p: u128 = 2;
        while p * p <= n {
            let mut e = 0i64;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            if e != 0 {
                self.push(p as u64, rat_int(e * sign));
            }
            p += 1;
        }
        if n > 1 {
            self.push(n as u64, rat_int(sign));
        }
    }

    fn push(&mut self, p: u64, e: BigRational) {
        let entry = self.factors.entry(p).or_insert_with(BigRational::zero);
        *entry += e;
        if entry.is_zero() {
            self.factors.remove(&p);
        }
    }

    pub fn mul(&self, other: &Radical) -> Radical {
        let mut r = self.clone();
        r.negative ^= other.negative;
        for (p, e) in &other.factors {
            r.push(*p, e.clone());
        }
        r
    }

    pub fn div(&self, other: &Radical) -> Radical {
        self.mul(&other.pow(&rat_int(-1)))
    }

    /// Raise to an exact rational power (principal positive branch).
    pub fn pow(&self, e: &BigRational) -> Radical {
        assert!(!self.negative || e.denom().is_one(), "fractional power of negative radical");
        let mut r = Radical::one();
        r.negative = self.negative && e.numer().is_odd();
        for (p, pe) in &self.factors {
            let ne = pe * e;
            if !ne.is_zero() {
                r.factors.insert(*p, ne);
            }
        }
        r
    }

    /// Some(q) when the value is rational.
    pub fn as_rational(&self) -> Option<BigRational> {
        let mut q = BigRational::one();
        for (p, e) in &self.factors {
            if !e.denom().is_one() {
                return None;
            }
            let k = e.numer().to_i64()?;
            let pb = BigRational::from_integer(BigInt::from(*p));
            let f = pb.pow(k.unsigned_abs() as i32);
            q *= if k >= 0 { f } else { f.recip() };
        }
        if self.negative {
            q = -q;
        }
        Some(q)
    }

    pub fn to_f64(&self) -> f64 {
        let sign = if self.negative { -1.0 } else { 1.0 };
        let mut v = 0.0f64;
        for (p, e) in &self.factors {
            v += rat_to_f64(e) * (*p as f64).ln();
        }
        sign * v.exp()
    }

    /// Decimal rendering with `digits` significant digits, computed in exact
    /// integer arithmetic (no float round-off).
    pub fn to_decimal(&self, digits: usize) -> String {
        if self.factors.is_empty() {
            return if self.negative { "-1".into() } else { "1".into() };
        }
        // L-th power of the value is rational for L = lcm of exponent denoms.
        let mut l = BigInt::one();
        for e in self.factors.values() {
            l = l.lcm(e.denom());
        }
        let l_u = l.to_u32().expect("radical exponent lcm too large");
        let vl = self.pow(&BigRational::from_integer(l.clone())).as_rational().unwrap().abs();
        // decimal exponent of the value
        let log10 = ln_rat(&vl) / std::f64::consts::LN_10 / l_u as f64;
        let exp10 = log10.floor() as i64;
        // mantissa scale: value * 10^(digits-1-exp10), then integer L-th root
        let k = digits as i64 - 1 - exp10;
        let ten = BigInt::from(10);
        let scale_num;
        let scale_den;
        if k * l_u as i64 >= 0 {
            scale_num = ten.pow((k * l_u as i64) as u32);
            scale_den = BigInt::one();
        } else {
            scale_num = BigInt::one();
            scale_den = ten.pow((-(k * l_u as i64)) as u32);
        }
        let scaled = (vl.numer() * scale_num) / (vl.denom() * scale_den);
        let mant = scaled.nth_root(l_u);
        let ms = mant.to_string();
        let sign = if self.negative { "-" } else { "" };
        let head = &ms[..1];
        let tail = &ms[1..];
        if tail.is_empty() {
            format!("{sign}{head}e{exp10}")
        } else {
            format!("{sign}{head}.{tail}e{exp10}")
        }
    }

    /// Render symbolically, e.g. "3/2^(2/3)" or "2^(4/3)/3^(5/3)".
    pub fn to_symbolic_string(&self) -> String {
        let mut num_int = BigRational::one();
        let mut num_parts: Vec<String> = Vec::new();
        let mut den_parts: Vec<String> = Vec::new();
        for (p, e) in &self.factors {
            if e.denom().is_one() {
                let k = e.numer().to_i64().unwrap();
                let pb = BigRational::from_integer(BigInt::from(*p));
                let f = pb.pow(k.unsigned_abs() as i32);
                num_int *= if k >= 0 { f } else { f.recip() };
            } else if e.is_positive() {
                num_parts.push(format!("{}^({})", p, format_rational(e)));
            } else {
                den_parts.push(format!("{}^({})", p, format_rational(&-e)));
            }
        }
        let mut num = String::new();
        if self.negative {
            num.push('-');
        }
        let int_str = format_rational(&num_int);
        // fold the rational prefactor's own numerator/denominator in
        let (int_num, int_den) = match int_str.split_once('/') {
            Some((a, b)) => (a.to_string(), Some(b.to_string())),
            None => (int_str, None),
        };
        let mut top: Vec<String> = Vec::new();
        if int_num != "1" || num_parts.is_empty() {
            top.push(int_num);
        }
        top.extend(num_parts);
        num.push_str(&top.join("*"));
        let mut bot: Vec<String> = Vec::new();
        if let Some(d) = int_den {
            bot.push(d);
        }
        bot.extend(den_parts);
        if bot.is_empty() {
            num
        } else if bot.len() == 1 {
            format!("{}/{}", num, bot[0])
        } else {
            format!("{}/({})", num, bot.join("*"))
        }
    }
}
