//! Closed-form valencies of the relations on `N_m` as exact polynomials.
//!
//! Everything is expressed in `x` with `x^2 = q`, so the half-integer
//! powers of `q` that occur for hermitian forms are ordinary integer powers
//! of `x`. A valency is available in two independent shapes: expanded
//! ([`HalfExpLaurent`]) and factored into `(x^r - 1)` terms
//! ([`FactoredValency`]); the distinctness check compares both.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::polar::FormKind;

/// Integer Laurent polynomial in `x`; only nonzero coefficients are stored.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct HalfExpLaurent {
    terms: BTreeMap<i64, i128>,
}

impl fmt::Debug for HalfExpLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(e, c)| format!("{c}x^{e}"))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl HalfExpLaurent {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: i128) -> Self {
        Self::monomial(c, 0)
    }

    pub fn monomial(c: i128, exp: i64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0 {
            terms.insert(exp, c);
        }
        HalfExpLaurent { terms }
    }

    /// `x^r - 1`
    pub fn x_minus_one(r: i64) -> Self {
        Self::monomial(1, r) - Self::constant(1)
    }

    /// `x^r + 1`
    pub fn x_plus_one(r: i64) -> Self {
        Self::monomial(1, r) + Self::constant(1)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `(exponent, coefficient)` pairs in increasing exponent order.
    pub fn terms(&self) -> Vec<(i64, i128)> {
        self.terms.iter().map(|(&e, &c)| (e, c)).collect()
    }

    /// True when every exponent is even, i.e. the value is a Laurent
    /// polynomial in `q`.
    pub fn is_even(&self) -> bool {
        self.terms.keys().all(|e| e % 2 == 0)
    }

    fn add_term(&mut self, exp: i64, c: i128) {
        if c == 0 {
            return;
        }
        let entry = self.terms.entry(exp).or_insert(0);
        *entry += c;
        if *entry == 0 {
            self.terms.remove(&exp);
        }
    }

    /// Evaluates at `x` exactly, `None` if the value is not an integer or
    /// overflows.
    pub fn eval_x(&self, x: i128) -> Option<i128> {
        let Some((&lo, _)) = self.terms.iter().next() else {
            return Some(0);
        };
        let shift = (-lo).max(0);
        let mut acc: i128 = 0;
        for (&e, &c) in &self.terms {
            let p = x.checked_pow(u32::try_from(e + shift).ok()?)?;
            acc = acc.checked_add(c.checked_mul(p)?)?;
        }
        let den = x.checked_pow(u32::try_from(shift).ok()?)?;
        (den != 0 && acc % den == 0).then(|| acc / den)
    }

    /// Evaluates at `x = sqrt(q)`. Odd exponents need `q` to be a square.
    pub fn eval(&self, q: i128) -> Option<i128> {
        if self.is_even() {
            let halved = HalfExpLaurent {
                terms: self.terms.iter().map(|(&e, &c)| (e / 2, c)).collect(),
            };
            return halved.eval_x(q);
        }
        let r = (q as f64).sqrt().round() as i128;
        (r * r == q).then_some(())?;
        self.eval_x(r)
    }

    /// Exact division; a nonzero remainder is an error.
    pub fn div_exact(&self, divisor: &HalfExpLaurent) -> Result<HalfExpLaurent> {
        if divisor.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(HalfExpLaurent::zero());
        }
        let (alo, ahi) = (*self.terms.keys().next().unwrap(), *self.terms.keys().last().unwrap());
        let (blo, bhi) = (
            *divisor.terms.keys().next().unwrap(),
            *divisor.terms.keys().last().unwrap(),
        );
        let mut rem: Vec<i128> = vec![0; (ahi - alo + 1) as usize];
        for (&e, &c) in &self.terms {
            rem[(e - alo) as usize] = c;
        }
        let den: Vec<i128> = (blo..=bhi)
            .map(|e| divisor.terms.get(&e).copied().unwrap_or(0))
            .collect();
        let db = den.len() - 1;
        if rem.len() <= db {
            return Err(Error::NonExactDivision);
        }
        let lead = den[db];
        let mut quot = vec![0i128; rem.len() - db];
        for k in (0..quot.len()).rev() {
            let top = rem[k + db];
            if top == 0 {
                continue;
            }
            if top % lead != 0 {
                return Err(Error::NonExactDivision);
            }
            let c = top / lead;
            quot[k] = c;
            for (t, &dv) in den.iter().enumerate() {
                rem[k + t] -= c * dv;
            }
        }
        if rem.iter().any(|&c| c != 0) {
            return Err(Error::NonExactDivision);
        }
        let mut out = HalfExpLaurent::zero();
        for (k, c) in quot.into_iter().enumerate() {
            out.add_term(alo - blo + k as i64, c);
        }
        Ok(out)
    }

    pub fn product<I: IntoIterator<Item = HalfExpLaurent>>(factors: I) -> HalfExpLaurent {
        factors
            .into_iter()
            .fold(HalfExpLaurent::constant(1), |acc, f| &acc * &f)
    }
}

impl Add for &HalfExpLaurent {
    type Output = HalfExpLaurent;
    fn add(self, rhs: &HalfExpLaurent) -> HalfExpLaurent {
        let mut out = self.clone();
        for (&e, &c) in &rhs.terms {
            out.add_term(e, c);
        }
        out
    }
}

impl Add for HalfExpLaurent {
    type Output = HalfExpLaurent;
    fn add(self, rhs: HalfExpLaurent) -> HalfExpLaurent {
        &self + &rhs
    }
}

impl Neg for &HalfExpLaurent {
    type Output = HalfExpLaurent;
    fn neg(self) -> HalfExpLaurent {
        HalfExpLaurent {
            terms: self.terms.iter().map(|(&e, &c)| (e, -c)).collect(),
        }
    }
}

impl Sub for &HalfExpLaurent {
    type Output = HalfExpLaurent;
    fn sub(self, rhs: &HalfExpLaurent) -> HalfExpLaurent {
        self + &(-rhs)
    }
}

impl Sub for HalfExpLaurent {
    type Output = HalfExpLaurent;
    fn sub(self, rhs: HalfExpLaurent) -> HalfExpLaurent {
        &self - &rhs
    }
}

impl Mul for &HalfExpLaurent {
    type Output = HalfExpLaurent;
    fn mul(self, rhs: &HalfExpLaurent) -> HalfExpLaurent {
        let mut out = HalfExpLaurent::zero();
        for (&e1, &c1) in &self.terms {
            for (&e2, &c2) in &rhs.terms {
                out.add_term(e1 + e2, c1 * c2);
            }
        }
        out
    }
}

impl Mul for HalfExpLaurent {
    type Output = HalfExpLaurent;
    fn mul(self, rhs: HalfExpLaurent) -> HalfExpLaurent {
        &self * &rhs
    }
}

/// Gaussian binomial `[m, j]_q` as a polynomial in `x = sqrt(q)`; zero when `j > m`.
pub fn gaussian_binomial(m: usize, j: usize) -> HalfExpLaurent {
    if j > m {
        return HalfExpLaurent::zero();
    }
    let mut acc = HalfExpLaurent::constant(1);
    for s in 1..=j {
        let num = HalfExpLaurent::x_minus_one(2 * (m - j + s) as i64);
        let den = HalfExpLaurent::x_minus_one(2 * s as i64);
        acc = (&acc * &num)
            .div_exact(&den)
            .expect("partial Gaussian products are polynomials");
    }
    acc
}

fn check_label(m: usize, d: usize, i: usize, j: usize) -> Result<()> {
    if i > j || j > m || m > d {
        return Err(Error::BadParameters(format!(
            "need 0 <= i <= j <= m <= d, got i={i} j={j} m={m} d={d}"
        )));
    }
    Ok(())
}

fn check_space(kind: FormKind, n_amb: usize, d: usize) -> Result<()> {
    if !kind.ambient_dims(d).contains(&n_amb) {
        return Err(Error::BadParameters(format!(
            "{kind} with Witt index {d} has no ambient dimension {n_amb}"
        )));
    }
    Ok(())
}

/// Stanton's valency `n_{i,j}` of the relation on `N_m`.
pub fn stanton_valency(
    kind: FormKind,
    n_amb: usize,
    d: usize,
    m: usize,
    i: usize,
    j: usize,
) -> Result<HalfExpLaurent> {
    check_space(kind, n_amb, d)?;
    check_label(m, d, i, j)?;
    let (mu2, nu2) = kind.mu_nu_doubled(n_amb, d);
    let (n, m, i, j) = (n_amb as i64, m as i64, i as i64, j as i64);
    let exp2 = 2 * j * j + i * (2 * n - 4 * m - 4 * j + 3 * i + 1 - mu2 - nu2);
    let mut num = &HalfExpLaurent::monomial(1, exp2)
        * &(&gaussian_binomial(m as usize, j as usize) * &gaussian_binomial(j as usize, i as usize));
    let mut den = HalfExpLaurent::constant(1);
    for s in 0..(j - i) {
        num = &num * &HalfExpLaurent::x_minus_one(n - 2 * m - mu2 - 2 * s);
        num = &num * &HalfExpLaurent::x_plus_one(n - 2 * m - nu2 - 2 * s);
        den = &den * &HalfExpLaurent::x_minus_one(2 * s + 2);
    }
    num.div_exact(&den)
}

/// `|N_m|` as a polynomial in `x`.
pub fn level_size(kind: FormKind, n_amb: usize, d: usize, m: usize) -> HalfExpLaurent {
    if m > d {
        return HalfExpLaurent::zero();
    }
    let (mu2, nu2) = kind.mu_nu_doubled(n_amb, d);
    let mut acc = gaussian_binomial(d, m);
    for i in (d - m + 1)..=d {
        acc = &acc * &HalfExpLaurent::x_plus_one(2 * i as i64 + mu2 - nu2);
    }
    acc
}

/// `x^r - 1` or `x^r + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Sign {
    Minus,
    Plus,
}

/// Product of `(x^r -/+ 1)^k` with signed multiplicities `k` (negative
/// multiplicities are denominator factors).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct FactorMultiset {
    factors: BTreeMap<(Sign, u32), i64>,
}

impl FactorMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sign: Sign, r: u32, mult: i64) {
        assert!(r >= 1, "factor exponent must be positive");
        let e = self.factors.entry((sign, r)).or_insert(0);
        *e += mult;
        if *e == 0 {
            self.factors.remove(&(sign, r));
        }
    }

    pub fn with(mut self, sign: Sign, r: u32, mult: i64) -> Self {
        self.push(sign, r, mult);
        self
    }

    pub fn factors(&self) -> Vec<(Sign, u32, i64)> {
        self.factors.iter().map(|(&(s, r), &k)| (s, r, k)).collect()
    }

    pub fn has_plus(&self) -> bool {
        self.factors.keys().any(|(s, _)| *s == Sign::Plus)
    }

    /// Rewrites `x^r + 1 = (x^{2r} - 1) / (x^r - 1)` and cancels, leaving
    /// only `(x^r - 1)` factors.
    pub fn normalize(&self) -> FactorMultiset {
        let mut out = FactorMultiset::new();
        for (&(sign, r), &k) in &self.factors {
            match sign {
                Sign::Minus => out.push(Sign::Minus, r, k),
                Sign::Plus => {
                    out.push(Sign::Minus, 2 * r, k);
                    out.push(Sign::Minus, r, -k);
                }
            }
        }
        out
    }

    /// The represented rational function, which must be a polynomial.
    pub fn expand(&self) -> Result<HalfExpLaurent> {
        let mut num = HalfExpLaurent::constant(1);
        let mut den = HalfExpLaurent::constant(1);
        for (&(sign, r), &k) in &self.factors {
            let base = match sign {
                Sign::Minus => HalfExpLaurent::x_minus_one(r as i64),
                Sign::Plus => HalfExpLaurent::x_plus_one(r as i64),
            };
            let target = if k > 0 { &mut num } else { &mut den };
            for _ in 0..k.unsigned_abs() {
                *target = &*target * &base;
            }
        }
        num.div_exact(&den)
    }
}

/// `coeff * x^x_exp * factors`, the factored shape of a nonzero valency.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct FactoredValency {
    pub coeff: i128,
    pub x_exp: i64,
    pub factors: FactorMultiset,
}

impl FactoredValency {
    pub fn normalized(&self) -> FactoredValency {
        FactoredValency {
            coeff: self.coeff,
            x_exp: self.x_exp,
            factors: self.factors.normalize(),
        }
    }

    pub fn expand(&self) -> Result<HalfExpLaurent> {
        Ok(&HalfExpLaurent::monomial(self.coeff, self.x_exp) * &self.factors.expand()?)
    }
}

/// The valency in factored form; `None` when it is identically zero.
pub fn stanton_factored(
    kind: FormKind,
    n_amb: usize,
    d: usize,
    m: usize,
    i: usize,
    j: usize,
) -> Result<Option<FactoredValency>> {
    check_space(kind, n_amb, d)?;
    check_label(m, d, i, j)?;
    let (mu2, nu2) = kind.mu_nu_doubled(n_amb, d);
    let (n, mi, ii, ji) = (n_amb as i64, m as i64, i as i64, j as i64);
    let mut coeff: i128 = 1;
    let mut x_exp = 2 * ji * ji + ii * (2 * n - 4 * mi - 4 * ji + 3 * ii + 1 - mu2 - nu2);
    let mut fm = FactorMultiset::new();
    let binomial = |top: usize, bot: usize, fm: &mut FactorMultiset| {
        for s in 1..=bot {
            fm.push(Sign::Minus, 2 * (top - bot + s) as u32, 1);
            fm.push(Sign::Minus, 2 * s as u32, -1);
        }
    };
    binomial(m, j, &mut fm);
    binomial(j, i, &mut fm);
    for s in 0..(ji - ii) {
        let r1 = n - 2 * mi - mu2 - 2 * s;
        match r1.cmp(&0) {
            std::cmp::Ordering::Equal => return Ok(None),
            std::cmp::Ordering::Greater => fm.push(Sign::Minus, r1 as u32, 1),
            std::cmp::Ordering::Less => {
                coeff = -coeff;
                x_exp += r1;
                fm.push(Sign::Minus, (-r1) as u32, 1);
            }
        }
        let r2 = n - 2 * mi - nu2 - 2 * s;
        match r2.cmp(&0) {
            std::cmp::Ordering::Equal => coeff *= 2,
            std::cmp::Ordering::Greater => fm.push(Sign::Plus, r2 as u32, 1),
            std::cmp::Ordering::Less => {
                x_exp += r2;
                fm.push(Sign::Plus, (-r2) as u32, 1);
            }
        }
        fm.push(Sign::Minus, (2 * s + 2) as u32, -1);
    }
    Ok(Some(FactoredValency {
        coeff,
        x_exp,
        factors: fm,
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct ValencyEntry {
    pub i: usize,
    pub j: usize,
    /// `(exponent of x, coefficient)` pairs.
    pub poly: Vec<(i64, i128)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistinctnessReport {
    pub kind: FormKind,
    pub n_amb: usize,
    pub d: usize,
    pub m: usize,
    pub valencies: Vec<ValencyEntry>,
    pub zero_labels: Vec<(usize, usize)>,
    pub collisions: Vec<((usize, usize), (usize, usize))>,
    /// Whether comparing normalized factorizations gives the same verdict
    /// on every pair of nonzero labels.
    pub factor_route_agrees: bool,
}

impl DistinctnessReport {
    pub fn passed(&self) -> bool {
        self.collisions.is_empty() && self.factor_route_agrees
    }
}

/// Computes every `n_{i,j}` on `N_m` and checks the nonzero ones are
/// pairwise distinct.
pub fn distinctness_check(
    kind: FormKind,
    n_amb: usize,
    d: usize,
    m: usize,
) -> Result<DistinctnessReport> {
    check_space(kind, n_amb, d)?;
    if m > d {
        return Err(Error::DimensionOutOfRange { dim: m, max: d });
    }
    let mut valencies = Vec::new();
    let mut zero_labels = Vec::new();
    let mut nonzero: Vec<((usize, usize), HalfExpLaurent, FactoredValency)> = Vec::new();
    for j in 0..=m {
        for i in 0..=j {
            let poly = stanton_valency(kind, n_amb, d, m, i, j)?;
            let factored = stanton_factored(kind, n_amb, d, m, i, j)?;
            valencies.push(ValencyEntry {
                i,
                j,
                poly: poly.terms(),
            });
            match factored {
                None if poly.is_zero() => zero_labels.push((i, j)),
                Some(fv) if !poly.is_zero() => nonzero.push(((i, j), poly, fv.normalized())),
                _ => {
                    return Err(Error::Inconsistent(format!(
                        "expanded and factored valency disagree on zeroness at ({i},{j})"
                    )))
                }
            }
        }
    }
    let mut collisions = Vec::new();
    let mut agrees = true;
    for a in 0..nonzero.len() {
        for b in a + 1..nonzero.len() {
            let poly_eq = nonzero[a].1 == nonzero[b].1;
            let factor_eq = nonzero[a].2 == nonzero[b].2;
            agrees &= poly_eq == factor_eq;
            if poly_eq {
                collisions.push((nonzero[a].0, nonzero[b].0));
            }
        }
    }
    Ok(DistinctnessReport {
        kind,
        n_amb,
        d,
        m,
        valencies,
        zero_labels,
        collisions,
        factor_route_agrees: agrees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn x(c: i128, e: i64) -> HalfExpLaurent {
        HalfExpLaurent::monomial(c, e)
    }

    #[test]
    fn gaussian_binomial_examples() {
        // q + 1 = x^2 + 1
        assert_eq!(gaussian_binomial(2, 1), x(1, 2) + x(1, 0));
        assert_eq!(gaussian_binomial(5, 0), HalfExpLaurent::constant(1));
        assert_eq!(gaussian_binomial(3, 1).eval(2), Some(7));
        assert!(gaussian_binomial(2, 3).is_zero());
    }

    #[test]
    fn gaussian_binomial_matches_subspace_counts() {
        use crate::gf::Field;
        use crate::linalg::{enumerate_subspaces, Subspace};
        for q in [2u32, 3] {
            let f = Field::with_order(q).unwrap();
            for n in 0..=4 {
                for k in 0..=n {
                    let count = enumerate_subspaces(&f, &Subspace::full(n), k).unwrap().len();
                    assert_eq!(gaussian_binomial(n, k).eval(q as i128), Some(count as i128));
                }
            }
        }
    }

    #[test]
    fn symplectic_rank_three_line_valencies() {
        let k = FormKind::Symplectic;
        let at = |i, j| stanton_valency(k, 6, 3, 2, i, j).unwrap();
        assert_eq!(at(0, 0), HalfExpLaurent::constant(1));
        assert_eq!(at(0, 1).eval(2), Some(18));
        assert_eq!(at(1, 1).eval(2), Some(24));
        assert_eq!(at(1, 2).eval(2), Some(144));
        assert_eq!(at(2, 2).eval(2), Some(128));
        assert!(at(0, 2).is_zero());
    }

    #[test]
    fn hermitian_points_have_half_integer_powers() {
        // 12 collinear and 32 non-collinear points per point of H(3,4).
        let n01 = stanton_valency(FormKind::Hermitian, 4, 2, 1, 0, 1).unwrap();
        let n11 = stanton_valency(FormKind::Hermitian, 4, 2, 1, 1, 1).unwrap();
        assert_eq!(n01, x(1, 3) + x(1, 2));
        assert_eq!(n11, x(1, 5));
        assert_eq!(n01.eval(4), Some(12));
        assert_eq!(n11.eval(4), Some(32));
        assert_eq!(n11.eval(2), None);
    }

    #[test]
    fn parameter_errors() {
        assert!(stanton_valency(FormKind::Symplectic, 6, 3, 2, 2, 1).is_err());
        assert!(stanton_valency(FormKind::Symplectic, 6, 3, 4, 0, 0).is_err());
        assert!(stanton_valency(FormKind::Symplectic, 7, 3, 2, 0, 0).is_err());
        assert!(distinctness_check(FormKind::Symplectic, 6, 3, 4).is_err());
    }

    #[test]
    fn division_rejects_remainders() {
        let a = x(1, 3) + x(1, 0);
        let b = x(1, 1) - x(1, 0);
        assert_eq!(a.div_exact(&b), Err(Error::NonExactDivision));
        let c = x(1, 3) - x(1, 0);
        assert_eq!(c.div_exact(&b).unwrap(), x(1, 2) + x(1, 1) + x(1, 0));
        assert_eq!(a.div_exact(&HalfExpLaurent::zero()), Err(Error::DivisionByZero));
        // Laurent shifts
        assert_eq!(x(3, -2).div_exact(&x(1, -5)).unwrap(), x(3, 3));
    }

    #[test]
    fn eval_handles_negative_exponents() {
        assert_eq!((x(1, 2) + x(4, -2)).eval(4), Some(5));
        assert_eq!(x(1, -2).eval(4), None);
    }

    #[test]
    fn exponents_are_even_outside_the_hermitian_case() {
        for kind in [
            FormKind::Symplectic,
            FormKind::OrthogonalPlus,
            FormKind::OrthogonalMinus,
            FormKind::OrthogonalOdd,
        ] {
            for d in 2..=5 {
                for n in kind.ambient_dims(d) {
                    for m in 1..=d {
                        for j in 0..=m {
                            for i in 0..=j {
                                let v = stanton_valency(kind, n, d, m, i, j).unwrap();
                                assert!(v.is_even(), "{kind} n={n} d={d} m={m} ({i},{j})");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn hermitian_valencies_are_integers_at_square_q() {
        for d in 2..=4 {
            for n in FormKind::Hermitian.ambient_dims(d) {
                for m in 1..=d {
                    for j in 0..=m {
                        for i in 0..=j {
                            let v = stanton_valency(FormKind::Hermitian, n, d, m, i, j).unwrap();
                            for q in [4, 9, 16] {
                                assert!(v.eval(q).is_some());
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn valencies_partition_the_level() {
        for kind in FormKind::ALL {
            for d in 2..=5 {
                for n in kind.ambient_dims(d) {
                    for m in 1..=d {
                        let mut total = HalfExpLaurent::constant(1);
                        for j in 0..=m {
                            for i in 0..=j {
                                if (i, j) != (0, 0) {
                                    total = total + stanton_valency(kind, n, d, m, i, j).unwrap();
                                }
                            }
                        }
                        assert_eq!(total, level_size(kind, n, d, m), "{kind} n={n} d={d} m={m}");
                    }
                }
            }
        }
    }

    #[test]
    fn factored_form_expands_to_the_polynomial() {
        for kind in FormKind::ALL {
            for d in 2..=4 {
                for n in kind.ambient_dims(d) {
                    for m in 1..=d {
                        for j in 0..=m {
                            for i in 0..=j {
                                let poly = stanton_valency(kind, n, d, m, i, j).unwrap();
                                match stanton_factored(kind, n, d, m, i, j).unwrap() {
                                    None => assert!(poly.is_zero()),
                                    Some(fv) => {
                                        assert_eq!(fv.expand().unwrap(), poly);
                                        assert_eq!(fv.normalized().expand().unwrap(), poly);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn distinctness_for_the_symplectic_line_level() {
        let r = distinctness_check(FormKind::Symplectic, 6, 3, 2).unwrap();
        assert!(r.passed());
        assert_eq!(r.zero_labels, vec![(0, 2)]);
        assert_eq!(r.valencies.len(), 6);
    }

    #[test]
    fn dual_polar_level_has_zero_off_diagonal_labels() {
        let r = distinctness_check(FormKind::OrthogonalPlus, 6, 3, 3).unwrap();
        assert!(r.passed());
        assert!(r.zero_labels.iter().all(|&(i, j)| i < j));
        assert_eq!(r.zero_labels.len(), 6);
    }

    #[test]
    fn normalize_examples() {
        let a = FactorMultiset::new().with(Sign::Plus, 2, 1);
        assert_eq!(
            a.normalize(),
            FactorMultiset::new().with(Sign::Minus, 4, 1).with(Sign::Minus, 2, -1)
        );

        let lhs = FactorMultiset::new().with(Sign::Plus, 3, 1).with(Sign::Minus, 1, 1);
        let rhs = FactorMultiset::new()
            .with(Sign::Minus, 6, 1)
            .with(Sign::Minus, 3, -1)
            .with(Sign::Minus, 1, 1);
        assert_eq!(lhs.expand().unwrap(), rhs.expand().unwrap());
        assert_eq!(lhs.normalize(), rhs.normalize());

        let odd = FactorMultiset::new()
            .with(Sign::Plus, 1, 1)
            .with(Sign::Plus, 3, 1)
            .with(Sign::Minus, 4, 2);
        let norm = odd.normalize();
        assert!(!norm.has_plus());
        let fs = norm.factors();
        assert!(fs.contains(&(Sign::Minus, 2, 1)));
        assert!(fs.contains(&(Sign::Minus, 6, 1)));
    }

    fn arb_multiset() -> impl Strategy<Value = FactorMultiset> {
        prop::collection::vec((any::<bool>(), 1u32..=12, 1i64..=2), 0..5).prop_map(|v| {
            let mut fm = FactorMultiset::new();
            for (plus, r, k) in v {
                fm.push(if plus { Sign::Plus } else { Sign::Minus }, r, k);
            }
            fm
        })
    }

    proptest! {
        #[test]
        fn normalize_is_sound(fm in arb_multiset()) {
            prop_assert_eq!(fm.expand().unwrap(), fm.normalize().expand().unwrap());
            prop_assert!(!fm.normalize().has_plus());
        }

        #[test]
        fn normal_forms_decide_equality(a in arb_multiset(), b in arb_multiset()) {
            let poly_eq = a.expand().unwrap() == b.expand().unwrap();
            prop_assert_eq!(poly_eq, a.normalize() == b.normalize());
        }
    }
}
