//! Automorphism groups of the relation graphs and the isometries that
//! induce them.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gf::Fe;
use crate::graph::Graph;
use crate::linalg::{Matrix, Subspace};
use crate::polar::{FormKind, IsotropicLevel, PolarSpace, SpaceDescriptor};
use crate::relations::{RelationLabel, RelationTable};

/// A permutation of `0..n`; `p[x]` is the image of `x`.
pub type Perm = Vec<u32>;

/// `a` followed by `b`.
pub fn compose(a: &[u32], b: &[u32]) -> Perm {
    a.iter().map(|&x| b[x as usize]).collect()
}

pub fn invert(a: &[u32]) -> Perm {
    let mut out = vec![0; a.len()];
    for (x, &y) in a.iter().enumerate() {
        out[y as usize] = x as u32;
    }
    out
}

pub fn identity(n: usize) -> Perm {
    (0..n as u32).collect()
}

fn is_identity(a: &[u32]) -> bool {
    a.iter().enumerate().all(|(x, &y)| x as u32 == y)
}

#[derive(Clone, Debug)]
struct ChainLevel {
    base: usize,
    gens: Vec<Perm>,
    orbit: Vec<usize>,
    /// `transversal[b]` maps the base point to `b`.
    transversal: Vec<Option<Perm>>,
}

impl ChainLevel {
    fn new(degree: usize, base: usize) -> ChainLevel {
        let mut level = ChainLevel {
            base,
            gens: Vec::new(),
            orbit: Vec::new(),
            transversal: Vec::new(),
        };
        level.rebuild(degree);
        level
    }

    fn rebuild(&mut self, degree: usize) {
        self.transversal = vec![None; degree];
        self.transversal[self.base] = Some(identity(degree));
        self.orbit = vec![self.base];
        let mut k = 0;
        while k < self.orbit.len() {
            let b = self.orbit[k];
            for s in &self.gens {
                let c = s[b] as usize;
                if self.transversal[c].is_none() {
                    let u = compose(self.transversal[b].as_ref().unwrap(), s);
                    self.transversal[c] = Some(u);
                    self.orbit.push(c);
                }
            }
            k += 1;
        }
    }
}

/// Permutation group with a base and strong generating set built by the
/// Schreier–Sims algorithm.
#[derive(Clone, Debug)]
pub struct PermGroup {
    degree: usize,
    generators: Vec<Perm>,
    chain: Vec<ChainLevel>,
}

fn strip(chain: &[ChainLevel], mut g: Perm, from: usize) -> (Perm, usize) {
    for (l, level) in chain.iter().enumerate().skip(from) {
        let b = g[level.base] as usize;
        match &level.transversal[b] {
            None => return (g, l),
            Some(u) => g = compose(&g, &invert(u)),
        }
    }
    (g, chain.len())
}

impl PermGroup {
    pub fn from_generators(degree: usize, generators: Vec<Perm>) -> PermGroup {
        let mut gens: Vec<Perm> = generators.into_iter().filter(|g| !is_identity(g)).collect();
        gens.sort();
        gens.dedup();
        let mut chain: Vec<ChainLevel> = Vec::new();
        for g in &gens {
            if chain.iter().all(|l| g[l.base] as usize == l.base) {
                let moved = (0..degree).find(|&x| g[x] as usize != x).unwrap();
                chain.push(ChainLevel::new(degree, moved));
            }
        }
        for i in 0..chain.len() {
            let fixed: Vec<usize> = chain[..i].iter().map(|l| l.base).collect();
            chain[i].gens = gens
                .iter()
                .filter(|g| fixed.iter().all(|&b| g[b] as usize == b))
                .cloned()
                .collect();
            chain[i].rebuild(degree);
        }

        let mut i = chain.len() as isize - 1;
        while i >= 0 {
            let lvl = i as usize;
            let mut added_at = None;
            'scan: for k in 0..chain[lvl].orbit.len() {
                let b = chain[lvl].orbit[k];
                for s in 0..chain[lvl].gens.len() {
                    let level = &chain[lvl];
                    let s_perm = &level.gens[s];
                    let ub = level.transversal[b].as_ref().unwrap();
                    let usb = level.transversal[s_perm[b] as usize].as_ref().unwrap();
                    let h = compose(&compose(ub, s_perm), &invert(usb));
                    let (r, j) = strip(&chain, h, lvl + 1);
                    if is_identity(&r) {
                        continue;
                    }
                    if j == chain.len() {
                        let moved = (0..degree).find(|&x| r[x] as usize != x).unwrap();
                        chain.push(ChainLevel::new(degree, moved));
                    }
                    for level in &mut chain[lvl + 1..=j] {
                        level.gens.push(r.clone());
                        level.rebuild(degree);
                    }
                    added_at = Some(j);
                    break 'scan;
                }
            }
            match added_at {
                Some(j) => i = j as isize,
                None => i -= 1,
            }
        }
        PermGroup {
            degree,
            generators: gens,
            chain,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn generators(&self) -> &[Perm] {
        &self.generators
    }

    pub fn base(&self) -> Vec<usize> {
        self.chain.iter().map(|l| l.base).collect()
    }

    pub fn orbit_sizes(&self) -> Vec<usize> {
        self.chain.iter().map(|l| l.orbit.len()).collect()
    }

    pub fn order(&self) -> u128 {
        self.chain.iter().map(|l| l.orbit.len() as u128).product()
    }

    pub fn contains(&self, g: &[u32]) -> bool {
        g.len() == self.degree && is_identity(&strip(&self.chain, g.to_vec(), 0).0)
    }
}

/// Whether `order` divides `n!`, checked prime by prime with Legendre's formula.
pub fn divides_factorial(order: u128, n: usize) -> bool {
    if order == 0 {
        return false;
    }
    let mut rest = order;
    for p in 2..=n as u128 {
        if rest == 1 {
            break;
        }
        if (2..p).take_while(|k| k * k <= p).any(|k| p % k == 0) {
            continue;
        }
        let mut e = 0u32;
        while rest.is_multiple_of(p) {
            rest /= p;
            e += 1;
        }
        let mut legendre = 0u128;
        let mut pk = p;
        while pk <= n as u128 {
            legendre += n as u128 / pk;
            pk *= p;
        }
        if e as u128 > legendre {
            return false;
        }
    }
    rest == 1
}

struct Search<'a> {
    g: &'a Graph,
    nodes: usize,
}

impl Search<'_> {
    /// Refines `colors` to the coarsest equitable partition below it and
    /// renumbers cells canonically. Returns a hash of the refinement trace.
    fn refine(&mut self, colors: &mut Vec<u32>) -> u64 {
        self.nodes += 1;
        let n = colors.len();
        let mut hasher = DefaultHasher::new();
        let mut cells = usize::MAX;
        loop {
            let sigs: Vec<(u32, Vec<(u32, u32)>)> = (0..n)
                .map(|v| {
                    let mut cs: Vec<u32> = self.g.neighbors(v).iter().map(|&u| colors[u as usize]).collect();
                    cs.sort_unstable();
                    let mut runs: Vec<(u32, u32)> = Vec::new();
                    for c in cs {
                        match runs.last_mut() {
                            Some((last, k)) if *last == c => *k += 1,
                            _ => runs.push((c, 1)),
                        }
                    }
                    (colors[v], runs)
                })
                .collect();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| sigs[a].cmp(&sigs[b]));
            let mut next = vec![0u32; n];
            let mut c = 0u32;
            for k in 0..n {
                if k > 0 && sigs[order[k]] != sigs[order[k - 1]] {
                    c += 1;
                    sigs[order[k]].hash(&mut hasher);
                }
                next[order[k]] = c;
            }
            (n, c).hash(&mut hasher);
            let count = if n == 0 { 0 } else { c as usize + 1 };
            *colors = next;
            if count == cells {
                return hasher.finish();
            }
            cells = count;
        }
    }

    fn target_cell(colors: &[u32]) -> Option<Vec<usize>> {
        let mut sizes: BTreeMap<u32, usize> = BTreeMap::new();
        for &c in colors {
            *sizes.entry(c).or_insert(0) += 1;
        }
        let (&best, &size) = sizes.iter().max_by_key(|(&c, &s)| (s, std::cmp::Reverse(c)))?;
        (size > 1).then(|| (0..colors.len()).filter(|&v| colors[v] == best).collect())
    }

    fn individualize(colors: &[u32], v: usize) -> Vec<u32> {
        let mut out: Vec<u32> = colors.iter().map(|&c| 2 * c + 1).collect();
        out[v] -= 1;
        out
    }
}

struct RefPath {
    colors: Vec<Vec<u32>>,
    traces: Vec<u64>,
    cells: Vec<Vec<usize>>,
    leaf: Vec<usize>,
}

fn leaf_order(colors: &[u32]) -> Vec<usize> {
    let mut lambda = vec![0; colors.len()];
    for (v, &c) in colors.iter().enumerate() {
        lambda[c as usize] = v;
    }
    lambda
}

fn dfs(search: &mut Search, path: &RefPath, depth: usize, colors: Vec<u32>) -> Option<Perm> {
    match Search::target_cell(&colors) {
        None => {
            if depth != path.leaf_depth() {
                return None;
            }
            let lambda = leaf_order(&colors);
            let mut gamma = vec![0u32; colors.len()];
            for (c, &v) in path.leaf.iter().enumerate() {
                gamma[v] = lambda[c] as u32;
            }
            search.g.is_automorphism(&gamma).then_some(gamma)
        }
        Some(cell) => {
            if depth >= path.cells.len() || cell.len() != path.cells[depth].len() {
                return None;
            }
            for u in cell {
                let mut next = Search::individualize(&colors, u);
                let trace = search.refine(&mut next);
                if trace == path.traces[depth + 1] {
                    if let Some(g) = dfs(search, path, depth + 1, next) {
                        return Some(g);
                    }
                }
            }
            None
        }
    }
}

impl RefPath {
    fn leaf_depth(&self) -> usize {
        self.cells.len()
    }
}

fn orbit_of(point: usize, gens: &[Perm]) -> Vec<usize> {
    let mut seen = vec![point];
    let mut k = 0;
    while k < seen.len() {
        for g in gens {
            let c = g[seen[k]] as usize;
            if !seen.contains(&c) {
                seen.push(c);
            }
        }
        k += 1;
    }
    seen
}

/// Result of the refinement search together with the independently
/// computed stabilizer chain.
#[derive(Clone, Debug)]
pub struct AutGroup {
    pub group: PermGroup,
    /// Product of orbit lengths along the search's first path.
    pub search_order: u128,
    pub nodes: usize,
}

/// The full automorphism group of `g`, refused above `budget` vertices.
pub fn graph_aut_group(g: &Graph, budget: usize) -> Result<AutGroup> {
    let n = g.order();
    if n > budget {
        return Err(Error::Refused { vertices: n, budget });
    }
    let mut search = Search { g, nodes: 0 };
    let mut colors = vec![0u32; n];
    let mut path = RefPath {
        traces: vec![search.refine(&mut colors)],
        colors: vec![colors.clone()],
        cells: Vec::new(),
        leaf: Vec::new(),
    };
    while let Some(cell) = Search::target_cell(&colors) {
        colors = Search::individualize(&colors, cell[0]);
        path.traces.push(search.refine(&mut colors));
        path.colors.push(colors.clone());
        path.cells.push(cell);
    }
    path.leaf = leaf_order(&colors);

    let mut gens: Vec<Perm> = Vec::new();
    let mut search_order: u128 = 1;
    for k in (0..path.cells.len()).rev() {
        let cell = path.cells[k].clone();
        let v = cell[0];
        let mut orbit = orbit_of(v, &gens);
        for &w in &cell[1..] {
            if orbit.contains(&w) {
                continue;
            }
            let mut start = Search::individualize(&path.colors[k], w);
            let trace = search.refine(&mut start);
            if trace != path.traces[k + 1] {
                continue;
            }
            if let Some(gamma) = dfs(&mut search, &path, k + 1, start) {
                gens.push(gamma);
                orbit = orbit_of(v, &gens);
            }
        }
        search_order *= orbit.len() as u128;
    }
    let group = PermGroup::from_generators(n, gens);
    if group.order() != search_order {
        return Err(Error::Inconsistent(format!(
            "search found order {search_order}, stabilizer chain gives {}",
            group.order()
        )));
    }
    Ok(AutGroup {
        group,
        search_order,
        nodes: search.nodes,
    })
}

/// Permutation of the level induced by the isometry `a` (acting on rows).
pub fn induced_permutation(space: &PolarSpace, level: &IsotropicLevel, a: &Matrix) -> Result<Perm> {
    if !space.is_isometry(a) {
        return Err(Error::NotAnIsometry);
    }
    let f = space.field();
    level
        .elements()
        .par_iter()
        .map(|x| {
            let image = x.image(f, a);
            level
                .index_of(&image)
                .map(|i| i as u32)
                .ok_or_else(|| Error::Inconsistent("image of a level element left the level".into()))
        })
        .collect()
}

/// Vectors of weight one or two whose first nonzero entry is 1.
fn low_weight_vectors(space: &PolarSpace) -> Vec<Vec<Fe>> {
    let n = space.n_amb();
    let f = space.field();
    let mut out = Vec::new();
    for a in 0..n {
        let mut v = vec![Fe::ZERO; n];
        v[a] = Fe::ONE;
        out.push(v.clone());
        for b in a + 1..n {
            for c in f.nonzero() {
                let mut w = v.clone();
                w[b] = c;
                out.push(w);
            }
        }
    }
    out
}

/// `x -> x + c * form(x, v) * v` as a matrix on row vectors.
fn rank_one_update(space: &PolarSpace, v: &[Fe], c: Fe) -> Matrix {
    let n = space.n_amb();
    let f = space.field();
    let id = Matrix::identity(n);
    let mut a = Matrix::identity(n);
    for k in 0..n {
        let w = f.mul(c, space.form(id.row(k), v));
        for (l, &vl) in v.iter().enumerate() {
            a.set(k, l, f.add(a.get(k, l), f.mul(w, vl)));
        }
    }
    a
}

/// Transvections, reflections and quasi-reflections built from low-weight
/// vectors, each checked to be an isometry.
pub fn isometry_generators(space: &PolarSpace) -> Vec<Matrix> {
    let f = space.field();
    let mut pool = Vec::new();
    for v in low_weight_vectors(space) {
        let hvv = space.form(&v, &v);
        match space.kind() {
            FormKind::Symplectic => {
                pool.extend(f.nonzero().map(|a| rank_one_update(space, &v, a)));
            }
            FormKind::Hermitian => {
                if hvv.is_zero() {
                    for a in f.nonzero() {
                        if f.add(a, f.conj(a).unwrap()).is_zero() {
                            pool.push(rank_one_update(space, &v, a));
                        }
                    }
                } else {
                    let inv = f.inv(hvv).unwrap();
                    for b in f.nonzero() {
                        if b != Fe::ONE && f.mul(b, f.conj(b).unwrap()) == Fe::ONE {
                            pool.push(rank_one_update(space, &v, f.mul(f.sub(b, Fe::ONE), inv)));
                        }
                    }
                }
            }
            _ => {
                let qv = space.quad_value(&v).unwrap();
                if !qv.is_zero() {
                    pool.push(rank_one_update(space, &v, f.neg(f.inv(qv).unwrap())));
                }
            }
        }
    }
    pool.retain(|a| space.is_isometry(a));
    pool
}

/// `count` random products of the generator pool, reproducible from `seed`.
pub fn sample_isometries(space: &PolarSpace, count: usize, seed: u64) -> Vec<Matrix> {
    let pool = isometry_generators(space);
    let f = space.field();
    let n = space.n_amb();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut a = Matrix::identity(n);
            for _ in 0..24 {
                a = a.mul(f, pool.choose(&mut rng).expect("generator pool is never empty"));
            }
            a
        })
        .collect()
}

fn collinear_points(space: &PolarSpace, a: &[Fe], b: &[Fe]) -> bool {
    space.form(a, b).is_zero()
}

/// A point non-collinear to `p`, `q` and `t`, given that `p`, `q` are
/// non-collinear and `t` is collinear to at least one of them.
pub fn noncollinear_witness(space: &PolarSpace, p: &[Fe], q: &[Fe], t: &[Fe]) -> Result<Vec<Fe>> {
    for v in [p, q, t] {
        if v.iter().all(|c| c.is_zero()) || !space.is_singular_vector(v) {
            return Err(Error::PreconditionFailed("arguments must be singular points".into()));
        }
    }
    if collinear_points(space, p, q) {
        return Err(Error::PreconditionFailed("p and q are collinear".into()));
    }
    if !collinear_points(space, t, p) && !collinear_points(space, t, q) {
        return Err(Error::PreconditionFailed("t is collinear to neither p nor q".into()));
    }
    space
        .singular_points()
        .into_iter()
        .find(|z| [p, q, t].iter().all(|x| !collinear_points(space, z, x)))
        .ok_or_else(|| Error::TheoremViolation("no point is non-collinear to p, q and t".into()))
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessSweep {
    pub points: usize,
    pub admissible_triples: usize,
    pub failures: Vec<(usize, usize, usize)>,
}

/// Runs the witness search over every admissible triple of points.
pub fn noncollinear_witness_sweep(space: &PolarSpace) -> WitnessSweep {
    let pts = space.singular_points();
    let n = pts.len();
    let col: Vec<Vec<bool>> = pts
        .iter()
        .map(|a| pts.iter().map(|b| collinear_points(space, a, b)).collect())
        .collect();
    // Admissible triple count and failures, per first point.
    type PerPoint = (usize, Vec<(usize, usize, usize)>);
    let per_p: Vec<PerPoint> = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut count = 0;
            let mut bad = Vec::new();
            for q in p + 1..n {
                if col[p][q] {
                    continue;
                }
                for t in 0..n {
                    if !col[t][p] && !col[t][q] {
                        continue;
                    }
                    count += 1;
                    if !(0..n).any(|z| !col[z][p] && !col[z][q] && !col[z][t]) {
                        bad.push((p, q, t));
                    }
                }
            }
            (count, bad)
        })
        .collect();
    WitnessSweep {
        points: n,
        admissible_triples: per_p.iter().map(|x| x.0).sum(),
        failures: per_p.into_iter().flat_map(|x| x.1).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplementCase {
    /// `T` is spanned by its meets with `S` and `U`.
    Diagonal,
    /// `T` has a part outside both meets.
    Staircase,
}

#[derive(Clone, Debug, Serialize)]
pub struct CommonComplement {
    pub q: Subspace,
    pub case: ComplementCase,
    /// Dimension of `S ∩ U ∩ T` factored out through a residue first.
    pub reduced_by: usize,
    /// Whether `S` and `U` were exchanged because `T` was adjacent to `S`.
    pub swapped: bool,
}

/// Greedily extends `base` by rows of `pool` until it reaches `target` dimension.
fn extend_from(f: &crate::gf::Field, base: &Subspace, pool: &Subspace, target: usize) -> Vec<Vec<Fe>> {
    let mut cur = base.clone();
    let mut added = Vec::new();
    for r in pool.rows() {
        if cur.dim() == target {
            break;
        }
        if !cur.contains_vector(f, r) {
            cur = cur.extend(f, r);
            added.push(r.to_vec());
        }
    }
    added
}

fn add_vec(f: &crate::gf::Field, a: &[Fe], b: &[Fe]) -> Vec<Fe> {
    a.iter().zip(b).map(|(&x, &y)| f.add(x, y)).collect()
}

/// Solves `v = sum c_k rows_k` for a basis given as rows; `v` must lie in their span.
fn solve_in_basis(f: &crate::gf::Field, rows: &[Vec<Fe>], v: &[Fe]) -> Vec<Fe> {
    let k = rows.len();
    let n = v.len();
    // Columns of the augmented system are the basis vectors.
    let mut data = vec![Fe::ZERO; n * (k + 1)];
    for r in 0..n {
        for (c, row) in rows.iter().enumerate() {
            data[r * (k + 1) + c] = row[r];
        }
        data[r * (k + 1) + k] = v[r];
    }
    let pivots = crate::linalg::rref_in_place(f, &mut data, n, k + 1);
    let mut coeffs = vec![Fe::ZERO; k];
    for (r, &p) in pivots.iter().enumerate() {
        assert!(p < k, "vector outside the span");
        coeffs[p] = data[r * (k + 1) + k];
    }
    coeffs
}

/// Builds `Q` adjacent to `S`, `U` and `T` inside the maximal singular
/// `M = S + U`, following the reduction, diagonal and staircase cases.
pub fn construct_common_complement(
    space: &PolarSpace,
    s: &Subspace,
    u: &Subspace,
    t_sub: &Subspace,
) -> Result<CommonComplement> {
    let f = space.field();
    let d = space.rank();
    let m = s.dim();
    let t = d.saturating_sub(m);
    let pre = |msg: &str| Err(Error::PreconditionFailed(msg.into()));
    if t < 2 || d < 2 * t {
        return pre("need d >= 2t >= 4 with m = d - t");
    }
    if u.dim() != m || t_sub.dim() != m {
        return pre("S, U and T must have the same dimension");
    }
    if !space.is_singular(s) || !space.is_singular(u) {
        return pre("S and U must be singular");
    }
    let big_m = Subspace::sum(f, s, u)?;
    if big_m.dim() != d {
        return pre("S and U are not adjacent");
    }
    if !big_m.contains(f, t_sub) {
        return pre("T is not inside S + U");
    }
    let adjacent = |x: &Subspace| Subspace::sum(f, x, t_sub).map(|y| y.dim() == d);
    let (adj_s, adj_u) = (adjacent(s)?, adjacent(u)?);
    if adj_s && adj_u {
        return pre("T is adjacent to both S and U");
    }
    let (s, u, swapped) = if adj_s { (u, s, true) } else { (s, u, false) };

    let n_meet = Subspace::intersection(f, s, u)?;
    let w = Subspace::intersection(f, &n_meet, t_sub)?;
    let result = if w.dim() > 0 {
        let residue = space.residue(&w)?;
        let inner = construct_common_complement(
            residue.space(),
            &residue.project(s)?,
            &residue.project(u)?,
            &residue.project(t_sub)?,
        )?;
        CommonComplement {
            q: residue.lift(&inner.q),
            case: inner.case,
            reduced_by: w.dim() + inner.reduced_by,
            swapped,
        }
    } else {
        let (q, case) = disjoint_case(space, s, u, t_sub, &n_meet, t)?;
        CommonComplement {
            q,
            case,
            reduced_by: 0,
            swapped,
        }
    };

    let ok = result.q.dim() == m
        && space.is_singular(&result.q)
        && [s, u, t_sub]
            .iter()
            .all(|x| Subspace::sum(f, x, &result.q).map(|y| y == big_m).unwrap_or(false));
    if !ok {
        return Err(Error::TheoremViolation(
            "constructed Q is not adjacent to S, U and T".into(),
        ));
    }
    Ok(result)
}

/// The construction when `N = S ∩ U` meets `T` trivially and `T` is not
/// adjacent to `S`.
fn disjoint_case(
    space: &PolarSpace,
    s: &Subspace,
    u: &Subspace,
    t_sub: &Subspace,
    n_meet: &Subspace,
    t: usize,
) -> Result<(Subspace, ComplementCase)> {
    let f = space.field();
    let n_amb = space.n_amb();
    let n0 = n_meet.dim();
    let a = Subspace::intersection(f, s, t_sub)?;
    let b = Subspace::intersection(f, u, t_sub)?;
    let (i, j) = (a.dim(), b.dim());
    let n_rows: Vec<Vec<Fe>> = n_meet.rows().map(<[Fe]>::to_vec).collect();
    let span = |extra: &[Vec<Fe>]| {
        let mut all = n_rows.clone();
        all.extend(extra.iter().cloned());
        Subspace::span_of(f, n_amb, &all)
    };
    let a_rows: Vec<Vec<Fe>> = a.rows().map(<[Fe]>::to_vec).collect();
    let b_rows: Vec<Vec<Fe>> = b.rows().map(<[Fe]>::to_vec).collect();

    if i + j == t_sub.dim() {
        // x_1..x_i span S ∩ T, y_{t-j+1}..y_t span U ∩ T.
        let mut x = a_rows.clone();
        x.extend(extend_from(f, &span(&a_rows), s, n0 + t));
        let mut y = extend_from(f, &span(&b_rows), u, n0 + t);
        y.extend(b_rows);
        let sums: Vec<Vec<Fe>> = x.iter().zip(&y).map(|(p, q)| add_vec(f, p, q)).collect();
        return Ok((span(&sums), ComplementCase::Diagonal));
    }

    let l = t_sub.dim() - (i + j);
    let ab = Subspace::sum(f, &a, &b)?;
    let c_rows = extend_from(f, &ab, t_sub, t_sub.dim());
    debug_assert_eq!(c_rows.len(), l);

    // Split each c = n + x + y along N ⊕ X ⊕ Y with X, Y complements of N.
    let x_comp = extend_from(f, n_meet, s, n0 + t);
    let y_comp = extend_from(f, n_meet, u, n0 + t);
    let mut basis = n_rows.clone();
    basis.extend(x_comp.iter().cloned());
    basis.extend(y_comp.iter().cloned());
    let mut xp = Vec::with_capacity(l);
    let mut yp = Vec::with_capacity(l);
    for c in &c_rows {
        let coeffs = solve_in_basis(f, &basis, c);
        let mut sx = vec![Fe::ZERO; n_amb];
        let mut sy = vec![Fe::ZERO; n_amb];
        for (k, row) in basis.iter().enumerate() {
            let target = if k < n0 + t { &mut sx } else { &mut sy };
            for (z, &r) in target.iter_mut().zip(row) {
                *z = f.add(*z, f.mul(coeffs[k], r));
            }
        }
        xp.push(sx);
        yp.push(sy);
    }

    // x_1..x_i span S ∩ T; x_{i+1}..x_{i+j-n0} complete S together with x'.
    let mut x = a_rows.clone();
    let mut known = a_rows.clone();
    known.extend(xp.iter().cloned());
    x.extend(extend_from(f, &span(&known), s, n0 + t));
    // y_1..y_{i-n0} complete U; y_{i-n0+1}..y_{i+j-n0} span U ∩ T.
    let mut known = b_rows.clone();
    known.extend(yp.iter().cloned());
    let mut y = extend_from(f, &span(&known), u, n0 + t);
    y.extend(b_rows);
    let h = i + j - n0;
    if x.len() != h || y.len() != h {
        return Err(Error::Inconsistent("staircase basis has the wrong length".into()));
    }

    let mut gens = vec![add_vec(f, &x[0], &yp[0])];
    for k in 0..l - 1 {
        gens.push(add_vec(f, &xp[k], &yp[k + 1]));
    }
    gens.push(add_vec(f, &xp[l - 1], &y[0]));
    for k in 1..h {
        gens.push(add_vec(f, &x[k], &y[k]));
    }
    Ok((span(&gens), ComplementCase::Staircase))
}

#[derive(Clone, Debug)]
pub struct ComplementTriple {
    pub s: Subspace,
    pub u: Subspace,
    pub t: Subspace,
}

fn random_subspace_in(
    f: &crate::gf::Field,
    rng: &mut ChaCha8Rng,
    pools: &[&Subspace],
    dim: usize,
) -> Subspace {
    let n = pools[0].ambient();
    let mut cur = Subspace::zero(n);
    while cur.dim() < dim {
        let pool = pools[rng.gen_range(0..pools.len())];
        let coeffs: Vec<Fe> = (0..pool.dim()).map(|_| Fe(rng.gen_range(0..f.q()) as u8)).collect();
        let v = pool.combine(f, &coeffs);
        if !cur.contains_vector(f, &v) {
            cur = cur.extend(f, &v);
        }
    }
    cur
}

/// Random admissible triples `(S, U, T)` for the common-complement lemma
/// on `N_{d-t}`, reproducible from `seed`.
pub fn sample_complement_triples(space: &PolarSpace, t: usize, count: usize, seed: u64) -> Vec<ComplementTriple> {
    let f = space.field();
    let d = space.rank();
    let m = d - t;
    let m0 = space
        .maximal_containing(&Subspace::zero(space.n_amb()))
        .expect("zero subspace is singular");
    let isos = sample_isometries(space, 32, seed ^ 0x9e37_79b9);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let big_m = m0.image(f, isos.choose(&mut rng).unwrap());
        let s = random_subspace_in(f, &mut rng, &[&big_m], m);
        let u = random_subspace_in(f, &mut rng, &[&big_m], m);
        if Subspace::sum(f, &s, &u).unwrap().dim() != d {
            continue;
        }
        let t_sub = random_subspace_in(f, &mut rng, &[&s, &u, &big_m], m);
        let adj = |x: &Subspace| Subspace::sum(f, x, &t_sub).unwrap().dim() == d;
        if adj(&s) && adj(&u) {
            continue;
        }
        out.push(ComplementTriple { s, u, t: t_sub });
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ComplementSweep {
    pub d: usize,
    pub t: usize,
    pub triples: usize,
    pub seed: u64,
    pub diagonal: usize,
    pub staircase: usize,
    pub reduced: usize,
    pub swapped: usize,
    pub failures: Vec<String>,
}

impl ComplementSweep {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn common_complement_sweep(space: &PolarSpace, t: usize, count: usize, seed: u64) -> ComplementSweep {
    let triples = sample_complement_triples(space, t, count, seed);
    let results: Vec<Result<CommonComplement>> = triples
        .par_iter()
        .map(|tr| construct_common_complement(space, &tr.s, &tr.u, &tr.t))
        .collect();
    let mut sweep = ComplementSweep {
        d: space.rank(),
        t,
        triples: triples.len(),
        seed,
        diagonal: 0,
        staircase: 0,
        reduced: 0,
        swapped: 0,
        failures: Vec::new(),
    };
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(c) => {
                match c.case {
                    ComplementCase::Diagonal => sweep.diagonal += 1,
                    ComplementCase::Staircase => sweep.staircase += 1,
                }
                sweep.reduced += usize::from(c.reduced_by > 0);
                sweep.swapped += usize::from(c.swapped);
            }
            Err(e) => sweep.failures.push(format!("triple {k}: {e}")),
        }
    }
    sweep
}

fn pow(q: u128, k: u32) -> u128 {
    q.pow(k)
}

/// Order of the isometry group of the form: `Sp`, `O`, or `GU`.
pub fn isometry_group_order(kind: FormKind, n_amb: usize, d: usize, q: u128) -> u128 {
    let d32 = d as u32;
    let prod = |k: u32| (1..=k).map(|i| pow(q, 2 * i) - 1).product::<u128>();
    match kind {
        FormKind::Symplectic => pow(q, d32 * d32) * prod(d32),
        FormKind::OrthogonalPlus => 2 * pow(q, d32 * (d32 - 1)) * (pow(q, d32) - 1) * prod(d32 - 1),
        FormKind::OrthogonalMinus => 2 * pow(q, d32 * (d32 + 1)) * (pow(q, d32 + 1) + 1) * prod(d32),
        FormKind::OrthogonalOdd => 2 * pow(q, d32 * d32) * prod(d32),
        FormKind::Hermitian => {
            let r = (q as f64).sqrt().round() as u128;
            let n = n_amb as u32;
            let mut acc = pow(r, n * (n - 1) / 2);
            for i in 1..=n {
                acc *= if i % 2 == 0 { pow(r, i) - 1 } else { pow(r, i) + 1 };
            }
            acc
        }
    }
}

/// Order of the group of collineations of the polar space: semilinear
/// similitudes modulo scalars.
pub fn collineation_group_order(space: &PolarSpace) -> u128 {
    let f = space.field();
    let q = f.q() as u128;
    let e = f.e() as u128;
    let iso = isometry_group_order(space.kind(), space.n_amb(), space.rank(), q);
    match space.kind() {
        FormKind::OrthogonalOdd => iso * e / 2,
        FormKind::Hermitian => iso * e / ((q as f64).sqrt().round() as u128 + 1),
        _ => iso * e,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremGraph {
    /// Label `(1,1)` on `N_m`.
    GammaPrime,
    /// Label `(0,t)` on `N_{d-t}`.
    GammaDoublePrime,
}

#[derive(Clone, Debug)]
pub struct TheoremOptions {
    pub samples: usize,
    pub seed: u64,
    pub max_aut_vertices: usize,
}

impl Default for TheoremOptions {
    fn default() -> Self {
        TheoremOptions {
            samples: 200,
            seed: crate::DEFAULT_SEED,
            max_aut_vertices: 1000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Matches,
    Mismatch,
    SoundnessOnly,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    pub space: SpaceDescriptor,
    pub m: usize,
    pub graph: TheoremGraph,
    pub label: RelationLabel,
    pub vertices: usize,
    pub edges: usize,
    pub aut_order: Option<u128>,
    pub induced_order: u128,
    pub verdict: Verdict,
    pub samples: usize,
    pub soundness_failures: usize,
    /// Sampled induced permutations found in the computed group.
    pub members_of_aut: Option<usize>,
    pub runtime_ms: Option<u64>,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.soundness_failures == 0
            && !matches!(self.verdict, Verdict::Mismatch)
            && self.members_of_aut.is_none_or(|k| k == self.samples)
    }
}

/// Compares the automorphism group of the graph with the collineation group
/// of the space: every sampled isometry must induce a graph automorphism,
/// and within the budget the group orders must agree.
pub fn theorem_check(space: &PolarSpace, m: usize, which: TheoremGraph, opts: &TheoremOptions) -> Result<TheoremReport> {
    let d = space.rank();
    let label = match which {
        TheoremGraph::GammaPrime => {
            if m == 0 || m >= d {
                return Err(Error::PreconditionFailed(format!("need 1 <= m <= d - 1, got m={m}")));
            }
            RelationLabel::new(1, 1)
        }
        TheoremGraph::GammaDoublePrime => {
            let t = d.saturating_sub(m);
            if t < 2 || d < 2 * t {
                return Err(Error::PreconditionFailed(format!("need d >= 2t >= 4, got m={m} d={d}")));
            }
            RelationLabel::new(0, t)
        }
    };
    let level = space.enumerate_level(m);
    let table = RelationTable::build(space, &level)?;
    let g = table.build_graph(&[label]);

    let isos = sample_isometries(space, opts.samples, opts.seed);
    let perms: Vec<Perm> = isos
        .iter()
        .map(|a| induced_permutation(space, &level, a))
        .collect::<Result<_>>()?;
    let soundness_failures = perms.iter().filter(|p| !g.is_automorphism(p)).count();

    let induced_order = collineation_group_order(space);
    let (aut_order, members, verdict) = if level.len() <= opts.max_aut_vertices {
        let aut = graph_aut_group(&g, opts.max_aut_vertices)?;
        let order = aut.group.order();
        let members = perms.iter().filter(|p| aut.group.contains(p)).count();
        let verdict = if order == induced_order {
            Verdict::Matches
        } else {
            Verdict::Mismatch
        };
        (Some(order), Some(members), verdict)
    } else {
        (None, None, Verdict::SoundnessOnly)
    };
    Ok(TheoremReport {
        space: space.descriptor(),
        m,
        graph: which,
        label,
        vertices: level.len(),
        edges: g.edge_count(),
        aut_order,
        induced_order,
        verdict,
        samples: perms.len(),
        soundness_failures,
        members_of_aut: members,
        runtime_ms: None,
    })
}
