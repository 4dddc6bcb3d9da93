//! Dense matrices and subspaces over GF(q).
//!
//! A [`Subspace`] always holds its reduced row echelon basis, so two values
//! compare equal exactly when they span the same subspace. Enumeration
//! order everywhere is lexicographic on the flattened basis encoding.

use std::cmp::Ordering;
use std::fmt;

use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::error::{Error, Result};
use crate::gf::{Fe, Field};

/// Row-major dense matrix; the owning field is passed to each operation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Fe>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix{:?}", self.to_rows())
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![Fe::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Fe::ONE);
        }
        m
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<Fe>) -> Matrix {
        assert_eq!(data.len(), rows * cols, "matrix data has wrong length");
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from integer-encoded rows of equal width `cols`.
    pub fn from_rows(cols: usize, rows: &[Vec<u8>]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix rows");
            data.extend(r.iter().map(|&v| Fe(v)));
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Fe {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Fe) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Fe] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[Fe] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(|x| x.0).collect())
            .collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// Entrywise application of the field involution (identity when absent).
    pub fn conj(&self, f: &Field) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f.conj_or_id(x)).collect(),
        }
    }

    pub fn mul(&self, f: &Field, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matrix shapes do not compose");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let v = f.add(out.get(r, c), f.mul(a, other.get(k, c)));
                    out.set(r, c, v);
                }
            }
        }
        out
    }

    /// Row vector times matrix.
    pub fn apply(&self, f: &Field, v: &[Fe]) -> Vec<Fe> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![Fe::ZERO; self.cols];
        for (k, &a) in v.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (c, o) in out.iter_mut().enumerate() {
                *o = f.add(*o, f.mul(a, self.get(k, c)));
            }
        }
        out
    }

    pub fn rank(&self, f: &Field) -> usize {
        let mut data = self.data.clone();
        rref_in_place(f, &mut data, self.rows, self.cols).len()
    }

    pub fn is_invertible(&self, f: &Field) -> bool {
        self.rows == self.cols && self.rank(f) == self.rows
    }

    /// `{ y : self * y^T = 0 }`.
    pub fn kernel(&self, f: &Field) -> Subspace {
        let n = self.cols;
        let mut data = self.data.clone();
        let pivots = rref_in_place(f, &mut data, self.rows, n);
        let mut basis = Vec::new();
        let free = (0..n).filter(|c| !pivots.contains(c));
        for fc in free {
            let mut v = vec![Fe::ZERO; n];
            v[fc] = Fe::ONE;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = f.neg(data[r * n + fc]);
            }
            basis.extend(v);
        }
        let rows = basis.len() / n.max(1);
        Subspace::span(f, &Matrix::from_flat(rows, n, basis))
    }
}

/// Reduces `data` (rows x cols) to reduced row echelon form in place and
/// returns the pivot columns; nonzero rows end up first.
pub(crate) fn rref_in_place(f: &Field, data: &mut [Fe], rows: usize, cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| !data[i * cols + c].is_zero()) else {
            continue;
        };
        if pr != r {
            for k in 0..cols {
                data.swap(pr * cols + k, r * cols + k);
            }
        }
        let inv = f.inv_nz(data[r * cols + c]);
        if inv != Fe::ONE {
            for k in c..cols {
                data[r * cols + k] = f.mul(data[r * cols + k], inv);
            }
        }
        for i in 0..rows {
            if i == r {
                continue;
            }
            let factor = data[i * cols + c];
            if factor.is_zero() {
                continue;
            }
            let nf = f.neg(factor);
            for k in c..cols {
                let v = f.add(data[i * cols + k], f.mul(nf, data[r * cols + k]));
                data[i * cols + k] = v;
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Rank of a small row-major buffer, destroying it.
#[inline]
pub(crate) fn rank_in_place(f: &Field, data: &mut [Fe], rows: usize, cols: usize) -> usize {
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pr) = (rank..rows).find(|&i| !data[i * cols + c].is_zero()) else {
            continue;
        };
        if pr != rank {
            for k in c..cols {
                data.swap(pr * cols + k, rank * cols + k);
            }
        }
        let inv = f.inv_nz(data[rank * cols + c]);
        for i in rank + 1..rows {
            let factor = data[i * cols + c];
            if factor.is_zero() {
                continue;
            }
            let nf = f.neg(f.mul(factor, inv));
            for k in c..cols {
                let v = f.add(data[i * cols + k], f.mul(nf, data[rank * cols + k]));
                data[i * cols + k] = v;
            }
        }
        rank += 1;
    }
    rank
}

/// Bit-packed helpers for GF(2), vectors of length at most 64.
pub(crate) mod gf2 {
    use crate::gf::Fe;

    #[inline]
    pub fn pack(v: &[Fe]) -> u64 {
        v.iter()
            .enumerate()
            .fold(0u64, |acc, (i, x)| acc | ((x.0 as u64 & 1) << i))
    }

    #[inline]
    pub fn rank(rows: &[u64]) -> usize {
        let mut basis = [0u64; 64];
        let mut rank = 0;
        for &r in rows {
            let mut v = r;
            while v != 0 {
                let h = 63 - v.leading_zeros() as usize;
                if basis[h] == 0 {
                    basis[h] = v;
                    rank += 1;
                    break;
                }
                v ^= basis[h];
            }
        }
        rank
    }
}

/// A linear subspace of GF(q)^n held by its canonical basis.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    n: usize,
    dim: usize,
    basis: Vec<Fe>,
}

impl Ord for Subspace {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.n, self.dim, &self.basis).cmp(&(other.n, other.dim, &other.basis))
    }
}

impl PartialOrd for Subspace {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subspace(n={}, {:?})", self.n, self.to_rows())
    }
}

impl Serialize for Subspace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.dim))?;
        for r in self.rows() {
            let row: Vec<u8> = r.iter().map(|x| x.0).collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

impl Subspace {
    pub fn zero(n: usize) -> Subspace {
        Subspace {
            n,
            dim: 0,
            basis: Vec::new(),
        }
    }

    pub fn full(n: usize) -> Subspace {
        Subspace {
            n,
            dim: n,
            basis: Matrix::identity(n).data,
        }
    }

    /// Row span of `rows`, in canonical form.
    pub fn span(f: &Field, rows: &Matrix) -> Subspace {
        let n = rows.cols;
        let mut data = rows.data.clone();
        let dim = rref_in_place(f, &mut data, rows.rows, n).len();
        data.truncate(dim * n);
        Subspace { n, dim, basis: data }
    }

    /// Span of the given vectors (each of length `n`).
    pub fn span_of(f: &Field, n: usize, vectors: &[Vec<Fe>]) -> Subspace {
        let mut data = Vec::with_capacity(vectors.len() * n);
        for v in vectors {
            assert_eq!(v.len(), n, "vector length differs from ambient dimension");
            data.extend_from_slice(v);
        }
        Subspace::span(f, &Matrix::from_flat(vectors.len(), n, data))
    }

    /// Parses integer-encoded basis rows.
    pub fn from_rows(f: &Field, n: usize, rows: &[Vec<u8>]) -> Result<Subspace> {
        for r in rows {
            if r.len() != n {
                return Err(Error::AmbientMismatch(r.len(), n));
            }
            for &v in r {
                f.elem(v as u32)?;
            }
        }
        Ok(Subspace::span(f, &Matrix::from_rows(n, rows)))
    }

    pub fn ambient(&self) -> usize {
        self.n
    }

    /// Linear dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[Fe] {
        &self.basis[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Fe]> + '_ {
        (0..self.dim).map(move |i| self.row(i))
    }

    pub fn basis(&self) -> Matrix {
        Matrix::from_flat(self.dim, self.n, self.basis.clone())
    }

    pub fn flat(&self) -> &[Fe] {
        &self.basis
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.rows().map(|r| r.iter().map(|x| x.0).collect()).collect()
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.rows()
            .map(|r| r.iter().position(|x| !x.is_zero()).expect("zero basis row"))
            .collect()
    }

    /// Reduces `v` modulo the subspace using the echelon basis.
    pub fn reduce(&self, f: &Field, v: &[Fe]) -> Vec<Fe> {
        let mut out = v.to_vec();
        for (r, pc) in self.pivots().into_iter().enumerate() {
            let c = out[pc];
            if c.is_zero() {
                continue;
            }
            let nc = f.neg(c);
            for (o, &b) in out.iter_mut().zip(self.row(r)) {
                *o = f.add(*o, f.mul(nc, b));
            }
        }
        out
    }

    pub fn contains_vector(&self, f: &Field, v: &[Fe]) -> bool {
        self.reduce(f, v).iter().all(|x| x.is_zero())
    }

    pub fn contains(&self, f: &Field, other: &Subspace) -> bool {
        self.n == other.n
            && other.dim <= self.dim
            && other.rows().all(|r| self.contains_vector(f, r))
    }

    /// Adds one vector to the span.
    pub fn extend(&self, f: &Field, v: &[Fe]) -> Subspace {
        let mut data = self.basis.clone();
        data.extend_from_slice(v);
        Subspace::span(f, &Matrix::from_flat(self.dim + 1, self.n, data))
    }

    /// Image under `v -> v * a`.
    pub fn image(&self, f: &Field, a: &Matrix) -> Subspace {
        Subspace::span(f, &self.basis().mul(f, a))
    }

    /// All `q^dim` vectors of the subspace, in coefficient order.
    pub fn vectors(&self, f: &Field) -> Vec<Vec<Fe>> {
        let q = f.q() as usize;
        let total = q.pow(self.dim as u32);
        let mut out = Vec::with_capacity(total);
        let mut coeffs = vec![0usize; self.dim];
        for _ in 0..total {
            let mut v = vec![Fe::ZERO; self.n];
            for (r, &c) in coeffs.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for (o, &b) in v.iter_mut().zip(self.row(r)) {
                    *o = f.add(*o, f.mul(Fe(c as u8), b));
                }
            }
            out.push(v);
            for c in coeffs.iter_mut().rev() {
                *c += 1;
                if *c < q {
                    break;
                }
                *c = 0;
            }
        }
        out
    }

    /// Intersection and sum, computed from one stacked reduction.
    pub fn meet_join(f: &Field, a: &Subspace, b: &Subspace) -> Result<(Subspace, Subspace)> {
        if a.n != b.n {
            return Err(Error::AmbientMismatch(a.n, b.n));
        }
        let n = a.n;
        let w = 2 * n;
        let rows = a.dim + b.dim;
        let mut data = vec![Fe::ZERO; rows * w];
        for (i, r) in a.rows().enumerate() {
            data[i * w..i * w + n].copy_from_slice(r);
            data[i * w + n..(i + 1) * w].copy_from_slice(r);
        }
        for (i, r) in b.rows().enumerate() {
            let i = i + a.dim;
            data[i * w..i * w + n].copy_from_slice(r);
        }
        let pivots = rref_in_place(f, &mut data, rows, w);
        let sum_dim = pivots.iter().filter(|&&c| c < n).count();
        let mut sum = Vec::with_capacity(sum_dim * n);
        for i in 0..sum_dim {
            sum.extend_from_slice(&data[i * w..i * w + n]);
        }
        let mut meet = Vec::new();
        for i in sum_dim..pivots.len() {
            meet.extend_from_slice(&data[i * w + n..(i + 1) * w]);
        }
        let meet_rows = pivots.len() - sum_dim;
        Ok((
            Subspace::span(f, &Matrix::from_flat(meet_rows, n, meet)),
            Subspace {
                n,
                dim: sum_dim,
                basis: sum,
            },
        ))
    }

    pub fn intersection(f: &Field, a: &Subspace, b: &Subspace) -> Result<Subspace> {
        Ok(Subspace::meet_join(f, a, b)?.0)
    }

    pub fn sum(f: &Field, a: &Subspace, b: &Subspace) -> Result<Subspace> {
        if a.n != b.n {
            return Err(Error::AmbientMismatch(a.n, b.n));
        }
        let mut data = a.basis.clone();
        data.extend_from_slice(&b.basis);
        Ok(Subspace::span(f, &Matrix::from_flat(a.dim + b.dim, a.n, data)))
    }

    /// Expresses `v` (which must lie in the subspace) in the echelon basis.
    pub fn coordinates(&self, v: &[Fe]) -> Vec<Fe> {
        self.pivots().into_iter().map(|pc| v[pc]).collect()
    }

    /// Linear combination of the basis rows.
    pub fn combine(&self, f: &Field, coeffs: &[Fe]) -> Vec<Fe> {
        let mut v = vec![Fe::ZERO; self.n];
        for (r, &c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (o, &b) in v.iter_mut().zip(self.row(r)) {
                *o = f.add(*o, f.mul(c, b));
            }
        }
        v
    }
}

/// All `m`-dimensional subspaces of `ambient`, sorted, without duplicates.
pub fn enumerate_subspaces(f: &Field, ambient: &Subspace, m: usize) -> Result<Vec<Subspace>> {
    let k = ambient.dim();
    if m > k {
        return Err(Error::DimensionOutOfRange { dim: m, max: k });
    }
    let q = f.q() as usize;
    let amb = ambient.basis();
    let mut out = Vec::new();
    let mut pivots: Vec<usize> = (0..m).collect();
    loop {
        // Free positions of an echelon m x k matrix with these pivots.
        let free: Vec<(usize, usize)> = (0..m)
            .flat_map(|r| {
                let pv = &pivots;
                ((pv[r] + 1)..k)
                    .filter(move |c| !pv.contains(c))
                    .map(move |c| (r, c))
            })
            .collect();
        let mut digits = vec![0usize; free.len()];
        loop {
            let mut coeff = Matrix::zeros(m, k);
            for (r, &pc) in pivots.iter().enumerate() {
                coeff.set(r, pc, Fe::ONE);
            }
            for (&(r, c), &d) in free.iter().zip(&digits) {
                coeff.set(r, c, Fe(d as u8));
            }
            out.push(Subspace::span(f, &coeff.mul(f, &amb)));
            let mut carry = true;
            for d in digits.iter_mut().rev() {
                *d += 1;
                if *d < q {
                    carry = false;
                    break;
                }
                *d = 0;
            }
            if carry {
                break;
            }
        }
        // Next pivot combination in lexicographic order.
        let mut i = m;
        loop {
            if i == 0 {
                out.sort();
                out.dedup();
                return Ok(out);
            }
            i -= 1;
            if pivots[i] < k - m + i {
                pivots[i] += 1;
                for j in i + 1..m {
                    pivots[j] = pivots[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Normalized representatives (first nonzero entry 1) of the projective
/// points of `ambient`.
pub fn projective_points(f: &Field, ambient: &Subspace) -> Vec<Vec<Fe>> {
    ambient
        .vectors(f)
        .into_iter()
        .filter(|v| v.iter().find(|x| !x.is_zero()) == Some(&Fe::ONE))
        .collect()
}
