//! Classical polar spaces over GF(q).
//!
//! A [`PolarSpace`] carries a (sesqui)linear form given by its Gram matrix
//! and, for the orthogonal kinds, a quadratic form given by an upper
//! triangular coefficient table `Q(x) = sum_{k<=l} c_{kl} x_k x_l` whose
//! polar form is the Gram matrix. Singular subspaces are the subspaces on
//! which both vanish.
//!
//! Standard models use hyperbolic pairs `(e_i, f_i)` in coordinates
//! `(2i, 2i+1)` followed by an anisotropic tail:
//!
//! | kind               | n_amb    | tail                           |
//! |--------------------|----------|--------------------------------|
//! | `symplectic`       | 2d       | none                           |
//! | `hermitian`        | 2d, 2d+1 | `x conj(y)` on the last coord  |
//! | `orthogonal_plus`  | 2d       | none                           |
//! | `orthogonal_odd`   | 2d+1     | `x^2` (q odd only)             |
//! | `orthogonal_minus` | 2d+2     | `x^2 + xy + c y^2` irreducible |

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{Fe, Field};
use crate::linalg::{projective_points, Matrix, Subspace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    Symplectic,
    Hermitian,
    OrthogonalPlus,
    OrthogonalMinus,
    OrthogonalOdd,
}

impl FormKind {
    pub const ALL: [FormKind; 5] = [
        FormKind::Symplectic,
        FormKind::Hermitian,
        FormKind::OrthogonalPlus,
        FormKind::OrthogonalMinus,
        FormKind::OrthogonalOdd,
    ];

    pub fn is_orthogonal(self) -> bool {
        matches!(
            self,
            FormKind::OrthogonalPlus | FormKind::OrthogonalMinus | FormKind::OrthogonalOdd
        )
    }

    /// `2(mu + nu)`: 0, 1 and 2 for symplectic, hermitian and orthogonal forms.
    pub fn mu_plus_nu_doubled(self) -> i64 {
        match self {
            FormKind::Symplectic => 0,
            FormKind::Hermitian => 1,
            _ => 2,
        }
    }

    /// Ambient dimensions admissible for Witt index `d`.
    pub fn ambient_dims(self, d: usize) -> Vec<usize> {
        match self {
            FormKind::Symplectic | FormKind::OrthogonalPlus => vec![2 * d],
            FormKind::Hermitian => vec![2 * d, 2 * d + 1],
            FormKind::OrthogonalOdd => vec![2 * d + 1],
            FormKind::OrthogonalMinus => vec![2 * d + 2],
        }
    }

    /// Doubled parameters `(2 mu, 2 nu)` with `mu = n_amb/2 - d`.
    pub fn mu_nu_doubled(self, n_amb: usize, d: usize) -> (i64, i64) {
        let mu2 = n_amb as i64 - 2 * d as i64;
        (mu2, self.mu_plus_nu_doubled() - mu2)
    }

    pub fn name(self) -> &'static str {
        match self {
            FormKind::Symplectic => "symplectic",
            FormKind::Hermitian => "hermitian",
            FormKind::OrthogonalPlus => "orthogonal_plus",
            FormKind::OrthogonalMinus => "orthogonal_minus",
            FormKind::OrthogonalOdd => "orthogonal_odd",
        }
    }
}

impl fmt::Display for FormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FormKind::ALL
            .into_iter()
            .find(|k| k.name() == s || k.name().replace('_', "-") == s)
            .ok_or_else(|| Error::BadParameters(format!("unknown form kind {s:?}")))
    }
}

/// JSON descriptor of a space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    pub kind: FormKind,
    pub p: u32,
    pub e: u32,
    pub d: usize,
    pub n_amb: usize,
    pub gram: Vec<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub quad: Option<Vec<Vec<u8>>>,
}

#[derive(Clone, Debug)]
pub struct PolarSpace {
    kind: FormKind,
    field: Field,
    n_amb: usize,
    d: usize,
    gram: Matrix,
    quad: Option<Matrix>,
}

impl PolarSpace {
    /// The standard model of the given kind and Witt index.
    pub fn standard(kind: FormKind, field: Field, d: usize, n_amb: usize) -> Result<PolarSpace> {
        if kind == FormKind::Hermitian && !field.has_involution() {
            return Err(Error::NoInvolution);
        }
        if kind == FormKind::OrthogonalOdd && field.p() == 2 {
            return Err(Error::UnsupportedDegenerate);
        }
        if d < 2 || 2 * d > n_amb || !kind.ambient_dims(d).contains(&n_amb) {
            return Err(Error::BadParameters(format!(
                "{kind} space with d={d} needs n_amb in {:?}, got {n_amb}",
                kind.ambient_dims(d)
            )));
        }
        let n = n_amb;
        let mut gram = Matrix::zeros(n, n);
        let mut quad = kind.is_orthogonal().then(|| Matrix::zeros(n, n));
        for i in 0..d {
            let (e, f) = (2 * i, 2 * i + 1);
            match kind {
                FormKind::Symplectic => {
                    gram.set(e, f, Fe::ONE);
                    gram.set(f, e, field.neg(Fe::ONE));
                }
                FormKind::Hermitian => {
                    gram.set(e, f, Fe::ONE);
                    gram.set(f, e, Fe::ONE);
                }
                _ => quad.as_mut().unwrap().set(e, f, Fe::ONE),
            }
        }
        match kind {
            FormKind::Hermitian if n == 2 * d + 1 => gram.set(n - 1, n - 1, Fe::ONE),
            FormKind::OrthogonalOdd => quad.as_mut().unwrap().set(n - 1, n - 1, Fe::ONE),
            FormKind::OrthogonalMinus => {
                // x^2 + xy + c y^2 with t^2 + t + c irreducible.
                let c = field
                    .elements()
                    .into_iter()
                    .find(|&c| {
                        field
                            .elements()
                            .into_iter()
                            .all(|t| !field.add(field.add(field.mul(t, t), t), c).is_zero())
                    })
                    .expect("an irreducible quadratic exists over every finite field");
                let qm = quad.as_mut().unwrap();
                qm.set(n - 2, n - 2, Fe::ONE);
                qm.set(n - 2, n - 1, Fe::ONE);
                qm.set(n - 1, n - 1, c);
            }
            _ => {}
        }
        if let Some(qm) = &quad {
            gram = polar_of(&field, qm);
        }
        let space = PolarSpace {
            kind,
            field,
            n_amb,
            d,
            gram,
            quad,
        };
        space.validate(Some(d))?;
        Ok(space)
    }

    /// A space from explicit form data. The Witt index is found by search.
    /// For orthogonal kinds `gram` is ignored and recomputed from `quad`.
    pub fn from_forms(
        kind: FormKind,
        field: Field,
        gram: Matrix,
        quad: Option<Matrix>,
    ) -> Result<PolarSpace> {
        let space = PolarSpace::from_forms_unchecked(kind, field, gram, quad)?;
        space.validate(None)?;
        Ok(space)
    }

    /// Like [`PolarSpace::from_forms`] without the nondegeneracy check.
    /// Used for deliberately degenerate fixtures.
    pub fn from_forms_unchecked(
        kind: FormKind,
        field: Field,
        gram: Matrix,
        quad: Option<Matrix>,
    ) -> Result<PolarSpace> {
        let n = gram.rows();
        if gram.cols() != n {
            return Err(Error::BadParameters("Gram matrix is not square".into()));
        }
        if kind == FormKind::Hermitian && !field.has_involution() {
            return Err(Error::NoInvolution);
        }
        if kind.is_orthogonal() != quad.is_some() {
            return Err(Error::BadParameters(
                "quadratic form data is required exactly for orthogonal kinds".into(),
            ));
        }
        let gram = match &quad {
            Some(qm) if qm.rows() == n && qm.cols() == n => polar_of(&field, qm),
            Some(_) => return Err(Error::BadParameters("quadratic table shape".into())),
            None => gram,
        };
        let mut space = PolarSpace {
            kind,
            field,
            n_amb: n,
            d: 0,
            gram,
            quad,
        };
        space.d = space.maximal_containing(&Subspace::zero(n))?.dim();
        Ok(space)
    }

    pub fn from_descriptor(desc: &SpaceDescriptor) -> Result<PolarSpace> {
        let field = Field::new(desc.p, desc.e)?;
        let n = desc.n_amb;
        let check = |rows: &Vec<Vec<u8>>| -> Result<Matrix> {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::BadParameters("form table shape".into()));
            }
            for &v in rows.iter().flatten() {
                field.elem(v as u32)?;
            }
            Ok(Matrix::from_rows(n, rows))
        };
        let gram = check(&desc.gram)?;
        let quad = desc.quad.as_ref().map(check).transpose()?;
        let space = PolarSpace::from_forms(desc.kind, field, gram, quad)?;
        if space.d != desc.d {
            return Err(Error::BadParameters(format!(
                "declared Witt index {} but the form has Witt index {}",
                desc.d, space.d
            )));
        }
        Ok(space)
    }

    pub fn descriptor(&self) -> SpaceDescriptor {
        SpaceDescriptor {
            kind: self.kind,
            p: self.field.p(),
            e: self.field.e(),
            d: self.d,
            n_amb: self.n_amb,
            gram: self.gram.to_rows(),
            quad: self.quad.as_ref().map(|q| q.to_rows()),
        }
    }

    fn validate(&self, expected_d: Option<usize>) -> Result<()> {
        if self.kind == FormKind::Hermitian {
            // G^T = conj(G)
            let n = self.n_amb;
            for k in 0..n {
                for l in 0..n {
                    if self.gram.get(l, k) != self.field.conj_or_id(self.gram.get(k, l)) {
                        return Err(Error::BadParameters("Gram matrix is not hermitian".into()));
                    }
                }
            }
        }
        if self.radical().dim() != 0 {
            return Err(Error::BadParameters("form is degenerate".into()));
        }
        if let Some(d) = expected_d {
            if self.d != d {
                return Err(Error::BadParameters(format!(
                    "declared Witt index {d} but the form has Witt index {}",
                    self.d
                )));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn n_amb(&self) -> usize {
        self.n_amb
    }

    /// Witt index, the rank of the polar space.
    pub fn rank(&self) -> usize {
        self.d
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn quad(&self) -> Option<&Matrix> {
        self.quad.as_ref()
    }

    /// Doubled `(mu, nu)`.
    pub fn mu_nu_doubled(&self) -> (i64, i64) {
        self.kind.mu_nu_doubled(self.n_amb, self.d)
    }

    /// `form(x, y) = x G sigma(y)^T`, sigma the involution for hermitian forms.
    #[inline]
    pub fn form(&self, x: &[Fe], y: &[Fe]) -> Fe {
        let f = &self.field;
        let mut acc = Fe::ZERO;
        for (k, &xk) in x.iter().enumerate() {
            if xk.is_zero() {
                continue;
            }
            let row = self.gram.row(k);
            let mut inner = Fe::ZERO;
            for (l, &yl) in y.iter().enumerate() {
                if !yl.is_zero() && !row[l].is_zero() {
                    inner = f.add(inner, f.mul(row[l], self.sigma(yl)));
                }
            }
            acc = f.add(acc, f.mul(xk, inner));
        }
        acc
    }

    #[inline]
    fn sigma(&self, a: Fe) -> Fe {
        if self.kind == FormKind::Hermitian {
            self.field.conj_or_id(a)
        } else {
            a
        }
    }

    pub fn quad_value(&self, x: &[Fe]) -> Option<Fe> {
        let qm = self.quad.as_ref()?;
        let f = &self.field;
        let mut acc = Fe::ZERO;
        for k in 0..self.n_amb {
            if x[k].is_zero() {
                continue;
            }
            for l in k..self.n_amb {
                let c = qm.get(k, l);
                if !c.is_zero() && !x[l].is_zero() {
                    acc = f.add(acc, f.mul(c, f.mul(x[k], x[l])));
                }
            }
        }
        Some(acc)
    }

    pub fn is_singular_vector(&self, v: &[Fe]) -> bool {
        match self.quad_value(v) {
            Some(q) => q.is_zero(),
            None => self.form(v, v).is_zero(),
        }
    }

    /// True iff the form (and the quadratic form, if any) vanishes on `s`.
    pub fn is_singular(&self, s: &Subspace) -> bool {
        let rows: Vec<&[Fe]> = s.rows().collect();
        rows.iter().all(|r| self.is_singular_vector(r))
            && rows
                .iter()
                .enumerate()
                .all(|(i, a)| rows[i + 1..].iter().all(|b| self.form(a, b).is_zero()))
    }

    /// Rows `r_i` with `r_i . y = form(y, b_i)` for the basis `b_i` of `s`.
    pub fn perp_equations(&self, s: &Subspace) -> Matrix {
        let n = self.n_amb;
        let f = &self.field;
        let mut out = Matrix::zeros(s.dim(), n);
        for (i, b) in s.rows().enumerate() {
            for k in 0..n {
                let row = self.gram.row(k);
                let v = b.iter().zip(row).fold(Fe::ZERO, |acc, (&bl, &g)| {
                    f.add(acc, f.mul(g, self.sigma(bl)))
                });
                out.set(i, k, v);
            }
        }
        out
    }

    pub fn perp(&self, s: &Subspace) -> Subspace {
        self.perp_equations(s).kernel(&self.field)
    }

    pub fn radical(&self) -> Subspace {
        self.perp(&Subspace::full(self.n_amb))
    }

    /// Normalized representatives of the singular projective points.
    pub fn singular_points(&self) -> Vec<Vec<Fe>> {
        projective_points(&self.field, &Subspace::full(self.n_amb))
            .into_iter()
            .filter(|v| self.is_singular_vector(v))
            .collect()
    }

    /// A maximal singular subspace containing the singular `s`, found by
    /// greedy extension with the first admissible vector of `perp(s)`.
    pub fn maximal_containing(&self, s: &Subspace) -> Result<Subspace> {
        if !self.is_singular(s) {
            return Err(Error::NotSingular);
        }
        let f = &self.field;
        let mut cur = s.clone();
        loop {
            let perp = self.perp(&cur);
            let next = projective_points(f, &perp)
                .into_iter()
                .find(|v| !cur.contains_vector(f, v) && self.is_singular_vector(v));
            match next {
                Some(v) => cur = cur.extend(f, &v),
                None => return Ok(cur),
            }
        }
    }

    /// `A G sigma(A)^T = G`, and `Q(xA) = Q(x)` for orthogonal kinds.
    pub fn is_isometry(&self, a: &Matrix) -> bool {
        let f = &self.field;
        let n = self.n_amb;
        if a.rows() != n || a.cols() != n || !a.is_invertible(f) {
            return false;
        }
        let sig = if self.kind == FormKind::Hermitian {
            a.conj(f)
        } else {
            a.clone()
        };
        if a.mul(f, &self.gram).mul(f, &sig.transpose()) != self.gram {
            return false;
        }
        (0..n).all(|i| self.quad_value(a.row(i)) == self.quad_value(Matrix::identity(n).row(i)))
    }

    /// `N_m`: all totally singular subspaces of dimension `m`.
    pub fn enumerate_level(&self, m: usize) -> IsotropicLevel {
        let n = self.n_amb;
        if m == 0 {
            return IsotropicLevel::new(0, vec![Subspace::zero(n)]);
        }
        let f = &self.field;
        let points = self.singular_points();
        if m == 1 {
            let els = points.iter().map(|p| Subspace::span_of(f, n, std::slice::from_ref(p))).collect();
            return IsotropicLevel::new(1, els);
        }
        if m > self.d {
            return IsotropicLevel::new(m, Vec::new());
        }
        let mut level: Vec<Subspace> = points
            .iter()
            .map(|p| Subspace::span_of(f, n, std::slice::from_ref(p)))
            .collect();
        for dim in 2..=m {
            // Each child keeps exactly one parent: the span of the first
            // dim-1 rows of its echelon basis.
            let mut next: Vec<Subspace> = level
                .par_iter()
                .flat_map_iter(|parent| {
                    let eqs = self.perp_equations(parent);
                    let mut children = Vec::new();
                    for p in &points {
                        let in_perp = (0..eqs.rows()).all(|r| {
                            eqs.row(r)
                                .iter()
                                .zip(p)
                                .fold(Fe::ZERO, |acc, (&a, &b)| f.add(acc, f.mul(a, b)))
                                .is_zero()
                        });
                        if !in_perp || parent.contains_vector(f, p) {
                            continue;
                        }
                        let child = parent.extend(f, p);
                        if child.flat()[..(dim - 1) * n] == *parent.flat() {
                            children.push(child);
                        }
                    }
                    children
                })
                .collect();
            next.par_sort_unstable();
            next.dedup();
            level = next;
        }
        IsotropicLevel::new(m, level)
    }

    /// The residue polar space at the singular subspace `base`.
    pub fn residue(&self, base: &Subspace) -> Result<Residue> {
        Residue::new(self, base)
    }

    /// Checks the polar space axioms and the standard facts on all levels.
    pub fn verify_axioms_and_facts(&self) -> AxiomReport {
        verify_axioms_and_facts(self)
    }
}

/// Polar form `B(x,y) = Q(x+y) - Q(x) - Q(y)` of an upper triangular table.
fn polar_of(f: &Field, qm: &Matrix) -> Matrix {
    let n = qm.rows();
    let mut g = Matrix::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            let v = if k == l {
                f.add(qm.get(k, k), qm.get(k, k))
            } else if k < l {
                qm.get(k, l)
            } else {
                qm.get(l, k)
            };
            g.set(k, l, v);
        }
    }
    g
}

/// The set `N_m` with an index from subspace to position.
#[derive(Clone, Debug)]
pub struct IsotropicLevel {
    m: usize,
    elements: Vec<Subspace>,
    index: HashMap<Subspace, usize>,
}

impl IsotropicLevel {
    pub fn new(m: usize, mut elements: Vec<Subspace>) -> IsotropicLevel {
        elements.sort();
        elements.dedup();
        let index = elements
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        IsotropicLevel { m, elements, index }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Subspace] {
        &self.elements
    }

    pub fn get(&self, i: usize) -> &Subspace {
        &self.elements[i]
    }

    pub fn index_of(&self, s: &Subspace) -> Option<usize> {
        self.index.get(s).copied()
    }
}

/// The polar space induced on `perp(N)/N` for a singular `N`.
///
/// Its points are the singular subspaces of dimension `dim N + 1` through
/// `N`; its lines are those of dimension `dim N + 2`.
#[derive(Clone, Debug)]
pub struct Residue {
    base: Subspace,
    /// Echelon basis of a complement of `base` in `perp(base)`, with zeros in
    /// the pivot columns of `base`.
    complement: Subspace,
    space: PolarSpace,
}

impl Residue {
    fn new(parent: &PolarSpace, base: &Subspace) -> Result<Residue> {
        if !parent.is_singular(base) {
            return Err(Error::NotSingular);
        }
        let c = base.dim();
        if c == 0 || c >= parent.rank() {
            return Err(Error::DimensionOutOfRange {
                dim: c,
                max: parent.rank() - 1,
            });
        }
        let f = parent.field();
        let perp = parent.perp(base);
        let reduced: Vec<Vec<Fe>> = perp.rows().map(|r| base.reduce(f, r)).collect();
        let complement = Subspace::span_of(f, parent.n_amb(), &reduced);
        let k = complement.dim();
        let w: Vec<&[Fe]> = complement.rows().collect();
        let mut gram = Matrix::zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                gram.set(a, b, parent.form(w[a], w[b]));
            }
        }
        let quad = parent.quad().map(|_| {
            let mut qm = Matrix::zeros(k, k);
            for a in 0..k {
                qm.set(a, a, parent.quad_value(w[a]).unwrap());
                for b in a + 1..k {
                    qm.set(a, b, parent.form(w[a], w[b]));
                }
            }
            qm
        });
        let space = PolarSpace::from_forms(parent.kind(), f.clone(), gram, quad)?;
        debug_assert_eq!(space.rank(), parent.rank() - c);
        Ok(Residue {
            base: base.clone(),
            complement,
            space,
        })
    }

    pub fn base(&self) -> &Subspace {
        &self.base
    }

    /// The quotient polar space.
    pub fn space(&self) -> &PolarSpace {
        &self.space
    }

    pub fn rank(&self) -> usize {
        self.space.rank()
    }

    /// Image in the quotient of a subspace `base ⊆ a ⊆ perp(base)`.
    pub fn project(&self, a: &Subspace) -> Result<Subspace> {
        let f = self.space.field();
        if !a.contains(f, &self.base) {
            return Err(Error::PreconditionFailed(
                "subspace does not contain the residue base".into(),
            ));
        }
        let mut coords = Vec::with_capacity(a.dim());
        for r in a.rows() {
            let v = self.base.reduce(f, r);
            if !self.complement.contains_vector(f, &v) {
                return Err(Error::PreconditionFailed(
                    "subspace is not inside the perp of the residue base".into(),
                ));
            }
            coords.push(self.complement.coordinates(&v));
        }
        Ok(Subspace::span_of(f, self.complement.dim(), &coords))
    }

    /// Preimage of a quotient subspace: `base + lift(b)`.
    pub fn lift(&self, b: &Subspace) -> Subspace {
        let f = self.space.field();
        let mut vectors: Vec<Vec<Fe>> = self.base.rows().map(|r| r.to_vec()).collect();
        vectors.extend(b.rows().map(|r| self.complement.combine(f, r)));
        Subspace::span_of(f, self.base.ambient(), &vectors)
    }

    /// The points of the residue, as subspaces of the parent space.
    pub fn points(&self) -> Vec<Subspace> {
        let mut pts: Vec<Subspace> = self
            .space
            .enumerate_level(1)
            .elements()
            .iter()
            .map(|p| self.lift(p))
            .collect();
        pts.sort();
        pts
    }

    /// Collinearity of two points of the residue given as parent subspaces.
    pub fn collinear(&self, a: &Subspace, b: &Subspace) -> Result<bool> {
        let pa = self.project(a)?;
        let pb = self.project(b)?;
        if pa.dim() != 1 || pb.dim() != 1 {
            return Err(Error::PreconditionFailed("not points of the residue".into()));
        }
        Ok(self.space.form(pa.row(0), pb.row(0)).is_zero())
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AxiomReport {
    pub points: usize,
    pub lines: usize,
    pub points_per_line: Vec<usize>,
    pub fact2_pairs: usize,
    pub fact3_subspaces: usize,
    pub failures: Vec<String>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn verify_axioms_and_facts(space: &PolarSpace) -> AxiomReport {
    let f = space.field();
    let mut report = AxiomReport::default();
    let levels: Vec<IsotropicLevel> = (0..=space.rank()).map(|m| space.enumerate_level(m)).collect();
    let points = &levels[1];
    let lines = if space.rank() >= 2 { levels[2].elements() } else { &[] };
    report.points = points.len();
    report.lines = lines.len();
    let pts: Vec<&[Fe]> = points.elements().iter().map(|p| p.row(0)).collect();

    // P1
    let mut per_line = Vec::new();
    for l in lines {
        let count = pts.iter().filter(|p| l.contains_vector(f, p)).count();
        if count < 3 {
            report
                .failures
                .push(format!("P1: line {:?} has {count} points", l.to_rows()));
        }
        per_line.push(count);
    }
    per_line.sort();
    per_line.dedup();
    report.points_per_line = per_line;

    // P2
    for (i, p) in pts.iter().enumerate() {
        if pts.iter().all(|x| space.form(p, x).is_zero()) {
            report
                .failures
                .push(format!("P2: point {i} {:?} is collinear to all points", p));
        }
    }

    // P3
    for l in lines {
        let on_line: Vec<&[Fe]> = pts.iter().copied().filter(|p| l.contains_vector(f, p)).collect();
        for (i, p) in pts.iter().enumerate() {
            let c = on_line.iter().filter(|x| space.form(p, x).is_zero()).count();
            if c != 1 && c != on_line.len() {
                report.failures.push(format!(
                    "P3: point {i} is collinear to {c} of {} points of line {:?}",
                    on_line.len(),
                    l.to_rows()
                ));
            }
        }
    }

    // Fact 2
    let d = space.rank();
    let maximals = levels[d].elements();
    for mx in maximals {
        for (i, p) in pts.iter().enumerate() {
            if mx.contains_vector(f, p) {
                continue;
            }
            report.fact2_pairs += 1;
            let pp = space.perp(&Subspace::span_of(f, space.n_amb(), &[p.to_vec()]));
            let dim = Subspace::intersection(f, &pp, mx).unwrap().dim();
            if dim + 1 != d {
                report.failures.push(format!(
                    "Fact 2: point {i} meets the perp of maximal {:?} in dimension {dim}",
                    mx.to_rows()
                ));
            }
        }
    }

    // Fact 3
    for level in &levels[..d] {
        for s in level.elements() {
            report.fact3_subspaces += 1;
            let over: Vec<&Subspace> = maximals.iter().filter(|mx| mx.contains(f, s)).collect();
            let found = over.iter().enumerate().any(|(a, x)| {
                over[a + 1..]
                    .iter()
                    .any(|y| Subspace::intersection(f, x, y).unwrap() == *s)
            });
            if !found {
                report.failures.push(format!(
                    "Fact 3: no pair of maximals meets exactly in {:?}",
                    s.to_rows()
                ));
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::enumerate_subspaces;

    fn std_space(kind: FormKind, q: u32, d: usize, n: usize) -> PolarSpace {
        PolarSpace::standard(kind, Field::with_order(q).unwrap(), d, n).unwrap()
    }

    fn vecs(rows: &[&[u8]]) -> Vec<Vec<Fe>> {
        rows.iter().map(|r| r.iter().map(|&x| Fe(x)).collect()).collect()
    }

    #[test]
    fn standard_point_counts() {
        assert_eq!(std_space(FormKind::Symplectic, 2, 3, 6).singular_points().len(), 63);
        assert_eq!(std_space(FormKind::OrthogonalPlus, 2, 3, 6).singular_points().len(), 35);
        assert_eq!(std_space(FormKind::Hermitian, 4, 2, 4).singular_points().len(), 45);
    }

    #[test]
    fn hermitian_identity_gram_has_45_points() {
        let f = Field::with_order(4).unwrap();
        let s = PolarSpace::from_forms(FormKind::Hermitian, f, Matrix::identity(4), None).unwrap();
        assert_eq!(s.rank(), 2);
        assert_eq!(s.singular_points().len(), 45);
    }

    #[test]
    fn standard_errors() {
        let f2 = Field::with_order(2).unwrap();
        assert_eq!(
            PolarSpace::standard(FormKind::Hermitian, f2.clone(), 2, 4).unwrap_err(),
            Error::NoInvolution
        );
        assert_eq!(
            PolarSpace::standard(FormKind::OrthogonalOdd, f2.clone(), 2, 5).unwrap_err(),
            Error::UnsupportedDegenerate
        );
        assert!(matches!(
            PolarSpace::standard(FormKind::Symplectic, f2.clone(), 3, 7),
            Err(Error::BadParameters(_))
        ));
        assert!(matches!(
            PolarSpace::standard(FormKind::Symplectic, f2, 1, 2),
            Err(Error::BadParameters(_))
        ));
    }

    #[test]
    fn every_kind_has_its_declared_witt_index() {
        for (kind, q) in [
            (FormKind::Symplectic, 3),
            (FormKind::Hermitian, 4),
            (FormKind::OrthogonalPlus, 3),
            (FormKind::OrthogonalMinus, 2),
            (FormKind::OrthogonalMinus, 3),
            (FormKind::OrthogonalOdd, 3),
        ] {
            for n in kind.ambient_dims(2) {
                let s = std_space(kind, q, 2, n);
                assert_eq!(s.rank(), 2, "{kind} q={q} n={n}");
                assert_eq!(s.radical().dim(), 0);
            }
        }
    }

    #[test]
    fn perp_examples() {
        let s = std_space(FormKind::Symplectic, 2, 3, 6);
        let f = s.field();
        let p = Subspace::span_of(f, 6, &vecs(&[&[1, 0, 0, 0, 0, 0]]));
        assert_eq!(s.perp(&p).dim(), 5);
        let mx = Subspace::span_of(f, 6, &vecs(&[&[1, 0, 0, 0, 0, 0], &[0, 0, 1, 0, 0, 0], &[0, 0, 0, 0, 1, 0]]));
        assert_eq!(s.perp(&mx), mx);
    }

    #[test]
    fn perp_is_an_involution_on_random_subspaces() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for (kind, q, d, n) in [
            (FormKind::Symplectic, 2, 3, 6),
            (FormKind::Hermitian, 4, 2, 5),
            (FormKind::OrthogonalOdd, 3, 2, 5),
            (FormKind::OrthogonalMinus, 2, 2, 6),
        ] {
            let s = std_space(kind, q, d, n);
            let f = s.field();
            for _ in 0..50 {
                let k = rng.gen_range(0..=n);
                let rows: Vec<Vec<Fe>> = (0..k)
                    .map(|_| (0..n).map(|_| Fe(rng.gen_range(0..q) as u8)).collect())
                    .collect();
                let sub = Subspace::span_of(f, n, &rows);
                let pp = s.perp(&sub);
                assert_eq!(pp.dim(), n - sub.dim());
                assert_eq!(s.perp(&pp), sub);
                if s.is_singular(&sub) {
                    assert!(pp.contains(f, &sub));
                }
            }
        }
    }

    #[test]
    fn singularity_examples() {
        let s = std_space(FormKind::Symplectic, 2, 3, 6);
        let f = s.field();
        assert!(s.is_singular(&Subspace::zero(6)));
        let hyp = Subspace::span_of(f, 6, &vecs(&[&[1, 0, 0, 0, 0, 0], &[0, 1, 0, 0, 0, 0]]));
        assert!(!s.is_singular(&hyp));

        // Q(v) = 1 while B(v, v) = 0 in characteristic 2.
        let o = std_space(FormKind::OrthogonalPlus, 2, 3, 6);
        let v = vecs(&[&[1, 1, 0, 0, 0, 0]]);
        assert_eq!(o.form(&v[0], &v[0]), Fe::ZERO);
        assert_eq!(o.quad_value(&v[0]), Some(Fe::ONE));
        assert!(!o.is_singular(&Subspace::span_of(o.field(), 6, &v)));
    }

    #[test]
    fn level_sizes() {
        let s = std_space(FormKind::Symplectic, 2, 3, 6);
        assert_eq!(s.enumerate_level(1).len(), 63);
        assert_eq!(s.enumerate_level(2).len(), 315);
        assert_eq!(s.enumerate_level(3).len(), 135);
        assert!(s.enumerate_level(4).is_empty());
        assert_eq!(s.enumerate_level(0).len(), 1);
        let o = std_space(FormKind::OrthogonalPlus, 2, 3, 6);
        assert_eq!(o.enumerate_level(1).len(), 35);
    }

    #[test]
    fn level_two_by_filtering_all_planes() {
        let s = std_space(FormKind::Symplectic, 2, 3, 6);
        let filtered: Vec<Subspace> = enumerate_subspaces(s.field(), &Subspace::full(6), 2)
            .unwrap()
            .into_iter()
            .filter(|x| s.is_singular(x))
            .collect();
        assert_eq!(filtered, s.enumerate_level(2).elements());
    }

    #[test]
    fn level_sizes_match_counting_formula() {
        use crate::valency::level_size;
        for kind in FormKind::ALL {
            for q in [2u32, 3, 4] {
                let Ok(field) = Field::with_order(q) else { continue };
                for d in [2usize, 3] {
                    for n in kind.ambient_dims(d) {
                        if n > 7 {
                            continue;
                        }
                        let Ok(s) = PolarSpace::standard(kind, field.clone(), d, n) else {
                            continue;
                        };
                        for m in 1..=d {
                            let got = s.enumerate_level(m).len() as i128;
                            let want = level_size(kind, n, d, m).eval(q as i128).unwrap();
                            assert_eq!(got, want, "{kind} q={q} d={d} n={n} m={m}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn adding_a_perpendicular_point_stays_singular() {
        let s = std_space(FormKind::OrthogonalPlus, 2, 3, 6);
        let f = s.field();
        let pts = s.enumerate_level(1);
        for x in s.enumerate_level(2).elements() {
            let pp = s.perp(x);
            for p in pts.elements() {
                if pp.contains(f, p) && !x.contains(f, p) {
                    assert!(s.is_singular(&Subspace::sum(f, x, p).unwrap()));
                }
            }
        }
    }

    #[test]
    fn residue_of_a_point() {
        let s = std_space(FormKind::Symplectic, 2, 3, 6);
        let f = s.field();
        let p = s.enumerate_level(1).get(0).clone();
        let res = s.residue(&p).unwrap();
        assert_eq!(res.rank(), 2);
        let pts = res.points();
        assert_eq!(pts.len(), 15);
        let through: Vec<Subspace> = s
            .enumerate_level(2)
            .elements()
            .iter()
            .filter(|l| l.contains(f, &p))
            .cloned()
            .collect();
        assert_eq!(pts, through);
        for a in &pts {
            assert_eq!(res.project(a).unwrap().dim(), 1);
            assert_eq!(&res.lift(&res.project(a).unwrap()), a);
        }
    }

    #[test]
    fn residue_collinearity_matches_singular_join() {
        let s = std_space(FormKind::Symplectic, 2, 3, 6);
        let f = s.field();
        let p = s.enumerate_level(1).get(5).clone();
        let res = s.residue(&p).unwrap();
        let pts = res.points();
        for a in &pts {
            for b in &pts {
                if a == b {
                    continue;
                }
                let joined = s.is_singular(&Subspace::sum(f, a, b).unwrap());
                assert_eq!(res.collinear(a, b).unwrap(), joined);
            }
        }
    }

    #[test]
    fn residue_of_a_corank_one_subspace_has_rank_one() {
        let s = std_space(FormKind::Symplectic, 2, 3, 6);
        let line = s.enumerate_level(2).get(0).clone();
        let res = s.residue(&line).unwrap();
        assert_eq!(res.rank(), 1);
        let pts = res.points();
        assert_eq!(pts.len(), 3);
        for a in &pts {
            for b in &pts {
                if a != b {
                    assert!(!res.collinear(a, b).unwrap());
                }
            }
        }
    }

    #[test]
    fn residue_errors() {
        let s = std_space(FormKind::Symplectic, 2, 3, 6);
        let f = s.field();
        let hyp = Subspace::span_of(f, 6, &vecs(&[&[1, 0, 0, 0, 0, 0], &[0, 1, 0, 0, 0, 0]]));
        assert_eq!(s.residue(&hyp).unwrap_err(), Error::NotSingular);
    }

    #[test]
    fn residue_composition() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for kind in [FormKind::Symplectic, FormKind::OrthogonalPlus] {
            let s = std_space(kind, 2, 3, 6);
            let f = s.field();
            let pts = s.enumerate_level(1);
            for _ in 0..10 {
                let p = pts.get(rng.gen_range(0..pts.len())).clone();
                let r1 = s.residue(&p).unwrap();
                let inner_pts = r1.space().enumerate_level(1);
                let q1 = inner_pts.get(rng.gen_range(0..inner_pts.len())).clone();
                let r2 = r1.space().residue(&q1).unwrap();
                let join = r1.lift(&q1);
                let direct = s.residue(&join).unwrap();
                let mut via: Vec<Subspace> = r2
                    .points()
                    .iter()
                    .map(|x| r1.lift(x))
                    .collect();
                via.sort();
                assert_eq!(via, direct.points());
                assert!(join.contains(f, &p));
            }
        }
    }

    #[test]
    fn axioms_hold_for_desk_spaces() {
        for kind in [FormKind::Symplectic, FormKind::OrthogonalPlus] {
            let s = std_space(kind, 2, 3, 6);
            let r = s.verify_axioms_and_facts();
            assert!(r.passed(), "{kind}: {:?}", r.failures);
            assert_eq!(r.points_per_line, vec![3]);
        }
        let h = std_space(FormKind::Hermitian, 4, 2, 4);
        assert!(h.verify_axioms_and_facts().passed());
    }

    #[test]
    fn degenerate_gram_fails_p2() {
        // Symplectic form on the first four coordinates; e_5 spans the radical.
        let f = Field::with_order(2).unwrap();
        let mut g = Matrix::zeros(5, 5);
        for i in 0..2 {
            g.set(2 * i, 2 * i + 1, Fe::ONE);
            g.set(2 * i + 1, 2 * i, Fe::ONE);
        }
        assert!(PolarSpace::from_forms(FormKind::Symplectic, f.clone(), g.clone(), None).is_err());
        let s = PolarSpace::from_forms_unchecked(FormKind::Symplectic, f, g, None).unwrap();
        let r = s.verify_axioms_and_facts();
        assert!(!r.passed());
        assert!(r.failures.iter().any(|m| m.starts_with("P2") && m.contains("[Fe(0), Fe(0), Fe(0), Fe(0), Fe(1)]")));
    }

    #[test]
    fn descriptor_round_trip() {
        let s = std_space(FormKind::OrthogonalMinus, 3, 2, 6);
        let desc = s.descriptor();
        let back = PolarSpace::from_descriptor(&desc).unwrap();
        assert_eq!(back.descriptor(), desc);
        let mut wrong = desc.clone();
        wrong.d = 3;
        assert!(PolarSpace::from_descriptor(&wrong).is_err());
    }
}
