//! Arithmetic in the small finite fields GF(p^e), q = p^e <= 16.
//!
//! An element is stored as its integer encoding: the coefficient vector
//! `(c_0, .., c_{e-1})` of the residue polynomial `c_0 + c_1 a + ..` maps to
//! `c_0 + c_1 p + .. + c_{e-1} p^{e-1}`. Integer order on encodings is the
//! coefficient-lexicographic order read from the highest-degree coefficient
//! down, so 0 and 1 come first.
//!
//! All operations go through precomputed q x q tables held by [`Field`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported field order.
pub const MAX_ORDER: u32 = 16;

/// One canonical monic irreducible modulus per (p, e), lowest coefficient first.
const MODULI: &[(u8, u8, &[u8])] = &[
    (2, 2, &[1, 1, 1]),    // x^2 + x + 1
    (2, 3, &[1, 1, 0, 1]), // x^3 + x + 1
    (2, 4, &[1, 1, 0, 0, 1]), // x^4 + x + 1
    (3, 2, &[1, 0, 1]),    // x^2 + 1
];

/// A field element, identified by its integer encoding in `[0, q)`.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Fe(pub u8);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Operation selector for [`Field::arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Mul,
    Inv,
    Neg,
    Conj,
}

/// The field GF(p^e) with its operation tables.
#[derive(Clone)]
pub struct Field {
    p: u8,
    e: u8,
    q: u8,
    modulus: Vec<u8>,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
    conj: Option<Vec<u8>>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.e == other.e
    }
}

impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({}^{})", self.p, self.e)
    }
}

fn is_prime(n: u32) -> bool {
    n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

impl Field {
    pub fn new(p: u32, e: u32) -> Result<Field> {
        if !is_prime(p) || e == 0 {
            return Err(Error::UnsupportedField { p, e });
        }
        let q = p.checked_pow(e).filter(|&q| q <= MAX_ORDER);
        let Some(q) = q else {
            return Err(Error::UnsupportedField { p, e });
        };
        let (p, e, q) = (p as u8, e as u8, q as u8);
        let modulus = if e == 1 {
            vec![0, 1]
        } else {
            MODULI
                .iter()
                .find(|(mp, me, _)| *mp == p && *me == e)
                .map(|(_, _, m)| m.to_vec())
                .ok_or(Error::UnsupportedField {
                    p: p as u32,
                    e: e as u32,
                })?
        };

        let qs = q as usize;
        let mut field = Field {
            p,
            e,
            q,
            modulus,
            add: vec![0; qs * qs],
            mul: vec![0; qs * qs],
            neg: vec![0; qs],
            inv: vec![0; qs],
            conj: None,
        };
        for a in 0..q {
            let ca = field.coeffs(Fe(a));
            let negc: Vec<u8> = ca.iter().map(|&c| (p - c) % p).collect();
            field.neg[a as usize] = field.encode(&negc);
            for b in 0..q {
                let cb = field.coeffs(Fe(b));
                let sum: Vec<u8> = ca.iter().zip(&cb).map(|(&x, &y)| (x + y) % p).collect();
                field.add[a as usize * qs + b as usize] = field.encode(&sum);
                field.mul[a as usize * qs + b as usize] = field.encode(&field.poly_mulmod(&ca, &cb));
            }
        }
        for a in 1..q {
            let inv = (1..q)
                .find(|&b| field.mul[a as usize * qs + b as usize] == 1)
                .expect("modulus table entry is not irreducible");
            field.inv[a as usize] = inv;
        }
        if e % 2 == 0 {
            let exponent = (p as u32).pow(e as u32 / 2);
            let table = (0..q).map(|a| field.pow(Fe(a), exponent).0).collect();
            field.conj = Some(table);
        }
        Ok(field)
    }

    /// Field of prime-power order `q`.
    pub fn with_order(q: u32) -> Result<Field> {
        for p in 2..=q {
            if q.is_multiple_of(p) {
                let mut e = 0;
                let mut r = q;
                while r.is_multiple_of(p) {
                    r /= p;
                    e += 1;
                }
                if r != 1 {
                    break;
                }
                return Field::new(p, e);
            }
        }
        Err(Error::UnsupportedField { p: q, e: 1 })
    }

    fn poly_mulmod(&self, a: &[u8], b: &[u8]) -> Vec<u8> {
        let p = self.p as u32;
        let e = self.e as usize;
        let mut prod = vec![0u32; 2 * e];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as u32 * y as u32) % p;
            }
        }
        // Reduce by the monic modulus from the top degree down.
        for deg in (e..2 * e).rev() {
            let c = prod[deg];
            if c == 0 {
                continue;
            }
            for k in 0..=e {
                let sub = c * self.modulus[k] as u32 % p;
                let idx = deg - e + k;
                prod[idx] = (prod[idx] + p - sub) % p;
            }
        }
        prod[..e].iter().map(|&c| c as u8).collect()
    }

    fn encode(&self, coeffs: &[u8]) -> u8 {
        coeffs
            .iter()
            .rev()
            .fold(0u32, |acc, &c| acc * self.p as u32 + c as u32) as u8
    }

    pub fn p(&self) -> u32 {
        self.p as u32
    }

    pub fn e(&self) -> u32 {
        self.e as u32
    }

    pub fn q(&self) -> u32 {
        self.q as u32
    }

    /// Modulus coefficients, lowest degree first.
    pub fn modulus(&self) -> &[u8] {
        &self.modulus
    }

    pub fn has_involution(&self) -> bool {
        self.conj.is_some()
    }

    /// Coefficient vector of `a`, lowest degree first.
    pub fn coeffs(&self, a: Fe) -> Vec<u8> {
        let mut v = a.0;
        (0..self.e)
            .map(|_| {
                let c = v % self.p;
                v /= self.p;
                c
            })
            .collect()
    }

    pub fn from_coeffs(&self, coeffs: &[u8]) -> Result<Fe> {
        if coeffs.len() != self.e as usize || coeffs.iter().any(|&c| c >= self.p) {
            return Err(Error::BadParameters(format!(
                "coefficient vector {coeffs:?} is not an element of {self:?}"
            )));
        }
        Ok(Fe(self.encode(coeffs)))
    }

    /// Element with integer encoding `v`.
    pub fn elem(&self, v: u32) -> Result<Fe> {
        if v < self.q as u32 {
            Ok(Fe(v as u8))
        } else {
            Err(Error::BadParameters(format!("{v} is not an element of {self:?}")))
        }
    }

    /// All q elements in encoding order.
    pub fn elements(&self) -> Vec<Fe> {
        (0..self.q).map(Fe).collect()
    }

    pub fn nonzero(&self) -> impl Iterator<Item = Fe> {
        (1..self.q).map(Fe)
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        Fe(self.add[a.index() * self.q as usize + b.index()])
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        Fe(self.mul[a.index() * self.q as usize + b.index()])
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        Fe(self.neg[a.index()])
    }

    pub fn inv(&self, a: Fe) -> Result<Fe> {
        if a.is_zero() {
            Err(Error::DivisionByZero)
        } else {
            Ok(Fe(self.inv[a.index()]))
        }
    }

    /// Inverse of a value known to be nonzero.
    #[inline]
    pub(crate) fn inv_nz(&self, a: Fe) -> Fe {
        debug_assert!(!a.is_zero());
        Fe(self.inv[a.index()])
    }

    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// The involution x -> x^sqrt(q).
    pub fn conj(&self, a: Fe) -> Result<Fe> {
        match &self.conj {
            Some(t) => Ok(Fe(t[a.index()])),
            None => Err(Error::NoInvolution),
        }
    }

    /// The involution when present, the identity otherwise.
    #[inline]
    pub(crate) fn conj_or_id(&self, a: Fe) -> Fe {
        match &self.conj {
            Some(t) => Fe(t[a.index()]),
            None => a,
        }
    }

    pub fn pow(&self, a: Fe, mut k: u32) -> Fe {
        let mut base = a;
        let mut acc = Fe::ONE;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        acc
    }

    /// Combined entry point; `b` is ignored for unary operations.
    pub fn arith(&self, op: ArithOp, a: Fe, b: Fe) -> Result<Fe> {
        let check = |x: Fe| {
            if x.0 < self.q {
                Ok(x)
            } else {
                Err(Error::BadParameters(format!("{x} is not an element of {self:?}")))
            }
        };
        let (a, b) = (check(a)?, check(b)?);
        match op {
            ArithOp::Add => Ok(self.add(a, b)),
            ArithOp::Mul => Ok(self.mul(a, b)),
            ArithOp::Inv => self.inv(a),
            ArithOp::Neg => Ok(self.neg(a)),
            ArithOp::Conj => self.conj(a),
        }
    }

    /// Smallest generator of the multiplicative group.
    pub fn primitive_element(&self) -> Fe {
        let order = self.q as u32 - 1;
        self.nonzero()
            .find(|&g| {
                (1..order)
                    .filter(|d| order.is_multiple_of(*d))
                    .all(|d| self.pow(g, d) != Fe::ONE)
            })
            .expect("multiplicative group of a finite field is cyclic")
    }

    /// Elements fixed by the involution (the subfield of order sqrt(q)),
    /// or every element when there is no involution.
    pub fn fixed_field(&self) -> Vec<Fe> {
        self.elements()
            .into_iter()
            .filter(|&a| self.conj_or_id(a) == a)
            .collect()
    }
}
