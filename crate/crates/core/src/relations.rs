//! Pair classification on `N_m`, relation tables and derived graphs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gf::{Fe, Field};
use crate::graph::Graph;
use crate::linalg::{gf2, rank_in_place, Subspace};
use crate::polar::{IsotropicLevel, PolarSpace, SpaceDescriptor};

/// `i = m - dim(perp(X) ∩ Y)`, `j = m - dim(X ∩ Y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct RelationLabel {
    pub i: usize,
    pub j: usize,
}

impl RelationLabel {
    pub const IDENTITY: RelationLabel = RelationLabel { i: 0, j: 0 };

    pub fn new(i: usize, j: usize) -> RelationLabel {
        RelationLabel { i, j }
    }

    fn code(self) -> u8 {
        (self.i << 4 | self.j) as u8
    }

    fn from_code(c: u8) -> RelationLabel {
        RelationLabel {
            i: (c >> 4) as usize,
            j: (c & 15) as usize,
        }
    }

    /// Whether the label can occur on `N_m` of a rank `d` space.
    pub fn feasible(self, m: usize, d: usize) -> bool {
        self.i <= self.j && self.j <= m && m + self.j - self.i <= d
    }

    /// All labels with `i <= j <= m`, in `(j, i)` order.
    pub fn all(m: usize) -> Vec<RelationLabel> {
        (0..=m)
            .flat_map(|j| (0..=j).map(move |i| RelationLabel { i, j }))
            .collect()
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

/// Classifies a pair via perps and meets of subspaces.
pub fn classify(space: &PolarSpace, x: &Subspace, y: &Subspace) -> Result<RelationLabel> {
    if x.dim() != y.dim() {
        return Err(Error::LevelMismatch(x.dim(), y.dim()));
    }
    let f = space.field();
    let m = x.dim();
    let pm = Subspace::intersection(f, &space.perp(x), y)?.dim();
    let xm = Subspace::intersection(f, x, y)?.dim();
    Ok(RelationLabel { i: m - pm, j: m - xm })
}

/// Precomputed per-vertex data for the rank-based classifier.
enum Prepared {
    /// Basis rows and perp equation rows packed as bit vectors.
    Binary { basis: Vec<u64>, eqs: Vec<u64> },
    Generic { basis: Vec<Fe>, eqs: Vec<Fe> },
}

struct Classifier<'a> {
    field: &'a Field,
    n: usize,
    m: usize,
    prepared: Vec<Prepared>,
}

impl<'a> Classifier<'a> {
    fn new(space: &'a PolarSpace, level: &IsotropicLevel) -> Classifier<'a> {
        let f = space.field();
        let binary = f.q() == 2 && space.n_amb() <= 64;
        let prepared = level
            .elements()
            .par_iter()
            .map(|x| {
                let eqs = space.perp_equations(x);
                if binary {
                    Prepared::Binary {
                        basis: x.rows().map(gf2::pack).collect(),
                        eqs: (0..eqs.rows()).map(|r| gf2::pack(eqs.row(r))).collect(),
                    }
                } else {
                    Prepared::Generic {
                        basis: x.flat().to_vec(),
                        eqs: eqs.data().to_vec(),
                    }
                }
            })
            .collect();
        Classifier {
            field: f,
            n: space.n_amb(),
            m: level.m(),
            prepared,
        }
    }

    fn label(&self, u: usize, v: usize) -> RelationLabel {
        let (m, n, f) = (self.m, self.n, self.field);
        match (&self.prepared[u], &self.prepared[v]) {
            (Prepared::Binary { eqs, basis: bu }, Prepared::Binary { basis: bv, .. }) => {
                let pairing: Vec<u64> = eqs
                    .iter()
                    .map(|r| {
                        bv.iter()
                            .enumerate()
                            .fold(0u64, |acc, (b, y)| acc | (((r & y).count_ones() & 1) as u64) << b)
                    })
                    .collect();
                let stacked: Vec<u64> = bu.iter().chain(bv).copied().collect();
                RelationLabel {
                    i: gf2::rank(&pairing),
                    j: gf2::rank(&stacked) - m,
                }
            }
            (Prepared::Generic { eqs, basis: bu }, Prepared::Generic { basis: bv, .. }) => {
                let mut pairing = vec![Fe::ZERO; m * m];
                for a in 0..m {
                    let r = &eqs[a * n..(a + 1) * n];
                    for b in 0..m {
                        let y = &bv[b * n..(b + 1) * n];
                        pairing[a * m + b] = r
                            .iter()
                            .zip(y)
                            .fold(Fe::ZERO, |acc, (&s, &t)| f.add(acc, f.mul(s, t)));
                    }
                }
                let mut stacked = bu.clone();
                stacked.extend_from_slice(bv);
                RelationLabel {
                    i: rank_in_place(f, &mut pairing, m, m),
                    j: rank_in_place(f, &mut stacked, 2 * m, n) - m,
                }
            }
            _ => unreachable!("mixed preparation"),
        }
    }
}

fn tri(u: usize, v: usize) -> usize {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    b * (b - 1) / 2 + a
}

/// Labels of all unordered pairs of `N_m` and the valency of each label.
#[derive(Clone, Debug)]
pub struct RelationTable {
    m: usize,
    vertices: usize,
    labels: Vec<u8>,
    valencies: BTreeMap<RelationLabel, usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValencyCount {
    pub i: usize,
    pub j: usize,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableExport {
    pub space: SpaceDescriptor,
    pub m: usize,
    pub valencies: Vec<ValencyCount>,
    pub vertices: usize,
}

impl RelationTable {
    /// Classifies every unordered pair and checks that each label has the
    /// same count from every base vertex.
    pub fn build(space: &PolarSpace, level: &IsotropicLevel) -> Result<RelationTable> {
        let v = level.len();
        let m = level.m();
        let cls = Classifier::new(space, level);
        let rows: Vec<Vec<u8>> = (0..v)
            .into_par_iter()
            .map(|b| (0..b).map(|a| cls.label(a, b).code()).collect())
            .collect();
        let labels: Vec<u8> = rows.into_iter().flatten().collect();

        let codes = 256;
        let mut counts = vec![0usize; v * codes];
        for b in 0..v {
            for a in 0..b {
                let c = labels[tri(a, b)] as usize;
                counts[a * codes + c] += 1;
                counts[b * codes + c] += 1;
            }
        }
        let mut valencies = BTreeMap::new();
        valencies.insert(RelationLabel::IDENTITY, 1);
        if v > 0 {
            for c in 0..codes {
                let n0 = counts[c];
                if let Some(bad) = (1..v).find(|&x| counts[x * codes + c] != n0) {
                    return Err(Error::Inconsistent(format!(
                        "label {} has {} members around vertex 0 but {} around vertex {bad}",
                        RelationLabel::from_code(c as u8),
                        n0,
                        counts[bad * codes + c]
                    )));
                }
                if n0 > 0 {
                    let l = RelationLabel::from_code(c as u8);
                    if l == RelationLabel::IDENTITY {
                        return Err(Error::Inconsistent("distinct vertices labelled (0,0)".into()));
                    }
                    valencies.insert(l, n0);
                }
            }
        }
        Ok(RelationTable {
            m,
            vertices: v,
            labels,
            valencies,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn label(&self, u: usize, v: usize) -> RelationLabel {
        if u == v {
            RelationLabel::IDENTITY
        } else {
            RelationLabel::from_code(self.labels[tri(u, v)])
        }
    }

    /// Valency of every occurring label, including `(0,0) -> 1`.
    pub fn valencies(&self) -> &BTreeMap<RelationLabel, usize> {
        &self.valencies
    }

    pub fn valency(&self, l: RelationLabel) -> usize {
        self.valencies.get(&l).copied().unwrap_or(0)
    }

    pub fn classes(&self) -> Vec<RelationLabel> {
        self.valencies.keys().copied().collect()
    }

    /// Graph on the level whose edges are the pairs with a label in `labels`.
    pub fn build_graph(&self, labels: &[RelationLabel]) -> Graph {
        let wanted: BTreeSet<u8> = labels.iter().map(|l| l.code()).collect();
        let v = self.vertices;
        let edges: Vec<(usize, usize)> = (0..v)
            .into_par_iter()
            .flat_map_iter(|b| {
                let wanted = &wanted;
                (0..b)
                    .filter(move |&a| wanted.contains(&self.labels[tri(a, b)]))
                    .map(move |a| (a, b))
            })
            .collect();
        Graph::new(v, edges)
    }

    pub fn export(&self, space: &PolarSpace) -> TableExport {
        TableExport {
            space: space.descriptor(),
            m: self.m,
            valencies: self
                .valencies
                .iter()
                .map(|(l, &count)| ValencyCount { i: l.i, j: l.j, count })
                .collect(),
            vertices: self.vertices,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntersectionNumbers {
    /// `p^L_{L1,L2}`: number of `z` with `label(x,z) = L1` and
    /// `label(z,y) = L2` for any pair `(x, y)` in `L`.
    pub label: RelationLabel,
    pub numbers: Vec<(RelationLabel, RelationLabel, usize)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SchemeAudit {
    pub classes: Vec<RelationLabel>,
    pub identity_ok: bool,
    pub intersection_numbers: Vec<IntersectionNumbers>,
    /// A pair `(x, y)` whose intersection numbers differ from an earlier
    /// pair with the same label.
    pub witness: Option<(usize, usize)>,
}

impl SchemeAudit {
    pub fn passed(&self) -> bool {
        self.identity_ok && self.witness.is_none()
    }
}

/// Checks that the labels form a symmetric association scheme by counting
/// every triangle.
pub fn scheme_audit(table: &RelationTable) -> SchemeAudit {
    let classes = table.classes();
    let k = classes.len();
    let idx: BTreeMap<RelationLabel, usize> =
        classes.iter().enumerate().map(|(a, &l)| (l, a)).collect();
    let v = table.vertices();
    let cls = |a: usize, b: usize| idx[&table.label(a, b)];
    let identity_ok = (0..v).all(|x| cls(x, x) == idx[&RelationLabel::IDENTITY]);

    type Found = (Vec<Option<Vec<usize>>>, Option<(usize, usize)>);
    let per_x: Vec<Found> = (0..v)
        .into_par_iter()
        .map(|x| {
            let row: Vec<usize> = (0..v).map(|z| cls(x, z)).collect();
            let mut seen: Vec<Option<Vec<usize>>> = vec![None; k];
            for y in 0..v {
                let mut counts = vec![0usize; k * k];
                for z in 0..v {
                    counts[row[z] * k + cls(z, y)] += 1;
                }
                match &seen[row[y]] {
                    None => seen[row[y]] = Some(counts),
                    Some(prev) if *prev != counts => return (seen, Some((x, y))),
                    Some(_) => {}
                }
            }
            (seen, None)
        })
        .collect();

    let mut global: Vec<Option<Vec<usize>>> = vec![None; k];
    let mut witness = None;
    'outer: for (x, (seen, bad)) in per_x.into_iter().enumerate() {
        if bad.is_some() {
            witness = bad;
            break;
        }
        for (l, counts) in seen.into_iter().enumerate() {
            let Some(counts) = counts else { continue };
            match &global[l] {
                None => global[l] = Some(counts),
                Some(prev) if *prev != counts => {
                    let y = (0..v).find(|&y| cls(x, y) == l).unwrap();
                    witness = Some((x, y));
                    break 'outer;
                }
                Some(_) => {}
            }
        }
    }

    let intersection_numbers = classes
        .iter()
        .enumerate()
        .filter_map(|(l, &label)| {
            let counts = global[l].as_ref()?;
            let mut numbers = Vec::new();
            for a in 0..k {
                for b in 0..k {
                    if counts[a * k + b] > 0 {
                        numbers.push((classes[a], classes[b], counts[a * k + b]));
                    }
                }
            }
            Some(IntersectionNumbers { label, numbers })
        })
        .collect();
    SchemeAudit {
        classes,
        identity_ok,
        intersection_numbers,
        witness,
    }
}

/// Serializes a label-keyed map as a list of `[label, value]` pairs.
pub(crate) fn label_entries<S: serde::Serializer, V: Serialize>(
    map: &BTreeMap<RelationLabel, V>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(map.iter())
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceReport {
    pub m: usize,
    pub d: usize,
    pub sources: usize,
    /// Distances in the `(0,1)` graph observed for each label.
    #[serde(serialize_with = "label_entries")]
    pub distance_by_label: BTreeMap<RelationLabel, BTreeSet<u32>>,
    /// Labels of the pairs at distance 2.
    pub distance_two: Vec<RelationLabel>,
    /// `(1,1)` when `m = d - 1`, `(1,1)` and `(0,2)` otherwise.
    pub claimed_distance_two: Vec<RelationLabel>,
    pub claim_holds: bool,
}

impl DistanceReport {
    /// Distance is a function of the label and adjacency is exactly `(0,1)`.
    pub fn consistent(&self) -> bool {
        self.distance_by_label.values().all(|s| s.len() == 1)
            && self.distance_by_label.iter().all(|(l, s)| {
                (*l == RelationLabel::new(0, 1)) == s.contains(&1)
            })
    }
}

/// Distances in the `(0,1)` graph, tabulated by label. `sources` limits how
/// many base vertices are searched, spread evenly over the level.
pub fn graph_distance_check(table: &RelationTable, d: usize, sources: Option<usize>) -> DistanceReport {
    let m = table.m();
    let g = table.build_graph(&[RelationLabel::new(0, 1)]);
    let mut claimed = vec![RelationLabel::new(1, 1)];
    if m + 1 < d && m >= 2 {
        claimed.push(RelationLabel::new(0, 2));
    }
    let v = table.vertices();
    let count = sources.unwrap_or(v).min(v);
    let srcs: Vec<usize> = (0..count).map(|s| s * v / count).collect();
    let per: Vec<BTreeMap<RelationLabel, BTreeSet<u32>>> = srcs
        .par_iter()
        .map(|&s| {
            let mut out: BTreeMap<RelationLabel, BTreeSet<u32>> = BTreeMap::new();
            for (y, dy) in g.distances_from(s).into_iter().enumerate() {
                out.entry(table.label(s, y)).or_default().insert(dy);
            }
            out
        })
        .collect();
    let mut distance_by_label: BTreeMap<RelationLabel, BTreeSet<u32>> = BTreeMap::new();
    for map in per {
        for (l, ds) in map {
            distance_by_label.entry(l).or_default().extend(ds);
        }
    }
    let distance_two: Vec<RelationLabel> = distance_by_label
        .iter()
        .filter(|(_, ds)| ds.contains(&2))
        .map(|(&l, _)| l)
        .collect();
    let mut sorted_claim = claimed.clone();
    sorted_claim.sort();
    DistanceReport {
        m,
        d,
        sources: srcs.len(),
        claim_holds: distance_two == sorted_claim,
        distance_by_label,
        distance_two,
        claimed_distance_two: claimed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar::FormKind;

    fn sp(q: u32, d: usize) -> PolarSpace {
        PolarSpace::standard(FormKind::Symplectic, Field::with_order(q).unwrap(), d, 2 * d).unwrap()
    }

    fn sub(s: &PolarSpace, rows: &[Vec<u8>]) -> Subspace {
        Subspace::from_rows(s.field(), s.n_amb(), rows).unwrap()
    }

    #[test]
    fn classify_examples() {
        let s = sp(2, 3);
        // e0, e2, e4 span a maximal singular plane in the standard model.
        let x = sub(&s, &[vec![1, 0, 0, 0, 0, 0], vec![0, 0, 1, 0, 0, 0]]);
        let y = sub(&s, &[vec![1, 0, 0, 0, 0, 0], vec![0, 0, 0, 0, 1, 0]]);
        assert_eq!(classify(&s, &x, &x).unwrap(), RelationLabel::IDENTITY);
        assert_eq!(classify(&s, &x, &y).unwrap(), RelationLabel::new(0, 1));
        let z = sub(&s, &[vec![0, 1, 0, 0, 0, 0], vec![0, 0, 0, 1, 0, 0]]);
        assert_eq!(classify(&s, &x, &z).unwrap(), RelationLabel::new(2, 2));
        let p = sub(&s, &[vec![1, 0, 0, 0, 0, 0]]);
        assert_eq!(classify(&s, &x, &p), Err(Error::LevelMismatch(2, 1)));
    }

    #[test]
    fn symplectic_line_table() {
        let s = sp(2, 3);
        let level = s.enumerate_level(2);
        let t = RelationTable::build(&s, &level).unwrap();
        assert_eq!(t.vertices(), 315);
        let expect: BTreeMap<_, _> = [((0, 0), 1), ((0, 1), 18), ((1, 1), 24), ((1, 2), 144), ((2, 2), 128)]
            .into_iter()
            .map(|((i, j), c)| (RelationLabel::new(i, j), c))
            .collect();
        assert_eq!(t.valencies(), &expect);
        assert_eq!(t.valencies().values().sum::<usize>(), 315);
        assert_eq!(t.build_graph(&[RelationLabel::new(0, 1)]).regular_degree(), Some(18));
        assert_eq!(t.build_graph(&[RelationLabel::new(1, 1)]).regular_degree(), Some(24));
        assert_eq!(t.build_graph(&[]).edge_count(), 0);
    }

    #[test]
    fn table_agrees_with_subspace_classifier() {
        for (kind, q, d, n) in [
            (FormKind::Symplectic, 2, 2, 4),
            (FormKind::Hermitian, 4, 2, 4),
            (FormKind::OrthogonalOdd, 3, 2, 5),
            (FormKind::OrthogonalMinus, 2, 2, 6),
        ] {
            let s = PolarSpace::standard(kind, Field::with_order(q).unwrap(), d, n).unwrap();
            for m in 1..=d {
                let level = s.enumerate_level(m);
                let t = RelationTable::build(&s, &level).unwrap();
                for a in 0..level.len() {
                    for b in 0..level.len() {
                        let direct = classify(&s, level.get(a), level.get(b)).unwrap();
                        assert_eq!(t.label(a, b), direct, "{kind} m={m} ({a},{b})");
                    }
                }
            }
        }
    }

    #[test]
    fn perp_dimension_is_symmetric() {
        let s = sp(2, 3);
        let level = s.enumerate_level(2);
        for a in (0..level.len()).step_by(7) {
            let pa = s.perp(level.get(a));
            for b in 0..level.len() {
                let pb = s.perp(level.get(b));
                let f = s.field();
                let ab = Subspace::intersection(f, &pa, level.get(b)).unwrap().dim();
                let ba = Subspace::intersection(f, &pb, level.get(a)).unwrap().dim();
                assert_eq!(ab, ba);
            }
        }
    }

    #[test]
    fn occurring_labels_are_exactly_the_feasible_ones() {
        for kind in [FormKind::Symplectic, FormKind::OrthogonalPlus] {
            let s = PolarSpace::standard(kind, Field::with_order(2).unwrap(), 3, 6).unwrap();
            for m in 1..=3 {
                let t = RelationTable::build(&s, &s.enumerate_level(m)).unwrap();
                let occurring: BTreeSet<_> = t.classes().into_iter().collect();
                let feasible: BTreeSet<_> = RelationLabel::all(m)
                    .into_iter()
                    .filter(|l| l.feasible(m, 3))
                    .collect();
                assert_eq!(occurring, feasible, "{kind} m={m}");
            }
        }
    }

    #[test]
    fn dual_polar_level_has_diagonal_labels_only() {
        let s = sp(2, 3);
        let t = RelationTable::build(&s, &s.enumerate_level(3)).unwrap();
        assert!(t.classes().iter().all(|l| l.i == l.j));
        assert_eq!(t.classes().len(), 4);
    }

    #[test]
    fn point_level_is_collinearity() {
        let s = sp(3, 2);
        let level = s.enumerate_level(1);
        let t = RelationTable::build(&s, &level).unwrap();
        assert_eq!(
            t.classes(),
            vec![RelationLabel::new(0, 0), RelationLabel::new(0, 1), RelationLabel::new(1, 1)]
        );
        for a in 0..level.len() {
            for b in 0..level.len() {
                if a == b {
                    continue;
                }
                let orth = s.form(level.get(a).row(0), level.get(b).row(0)).is_zero();
                assert_eq!(t.label(a, b) == RelationLabel::new(0, 1), orth);
            }
        }
    }

    #[test]
    fn scheme_audit_small_cases() {
        let s = sp(2, 3);
        let t = RelationTable::build(&s, &s.enumerate_level(3)).unwrap();
        let audit = scheme_audit(&t);
        assert!(audit.passed());
        assert_eq!(audit.classes.len(), 4);
        // p^{(0,0)}_{L,L} is the valency of L.
        let ident = &audit.intersection_numbers[0];
        for &(a, b, c) in &ident.numbers {
            assert_eq!(a, b);
            assert_eq!(c, t.valency(a));
        }

        let single = IsotropicLevel::new(0, vec![Subspace::zero(6)]);
        let t0 = RelationTable::build(&s, &single).unwrap();
        let audit0 = scheme_audit(&t0);
        assert!(audit0.passed());
        assert_eq!(audit0.classes, vec![RelationLabel::IDENTITY]);
    }

    #[test]
    fn scheme_audit_detects_a_broken_partition() {
        let s = sp(2, 2);
        let level = s.enumerate_level(1);
        let mut t = RelationTable::build(&s, &level).unwrap();
        // Swap the label of one pair of each class; regularity is lost.
        let a = (1..level.len()).find(|&b| t.label(0, b) == RelationLabel::new(0, 1)).unwrap();
        let b = (1..level.len()).find(|&b| t.label(0, b) == RelationLabel::new(1, 1)).unwrap();
        t.labels[tri(0, a)] = RelationLabel::new(1, 1).code();
        t.labels[tri(0, b)] = RelationLabel::new(0, 1).code();
        t.labels[tri(1, 2)] = RelationLabel::new(1, 1).code();
        assert!(!scheme_audit(&t).passed());
    }

    #[test]
    fn distances_in_the_line_graph() {
        // For X, Y in (1,2), x in X ∩ perp(Y) and p in Y ∩ perp(X) span a
        // common neighbour, so (1,2) sits at distance 2 alongside (1,1).
        let s = sp(2, 3);
        let t = RelationTable::build(&s, &s.enumerate_level(2)).unwrap();
        let r = graph_distance_check(&t, 3, None);
        assert!(r.consistent(), "{r:?}");
        let dist = |i, j| *r.distance_by_label[&RelationLabel::new(i, j)].iter().next().unwrap();
        assert_eq!(dist(0, 0), 0);
        assert_eq!(dist(0, 1), 1);
        assert_eq!(dist(1, 1), 2);
        assert_eq!(dist(1, 2), 2);
        assert_eq!(dist(2, 2), 3);
        assert_eq!(r.distance_two, vec![RelationLabel::new(1, 1), RelationLabel::new(1, 2)]);
        assert!(!r.claim_holds);
    }

    #[test]
    fn distances_on_points() {
        let s = sp(2, 3);
        let t = RelationTable::build(&s, &s.enumerate_level(1)).unwrap();
        let r = graph_distance_check(&t, 3, Some(9));
        assert_eq!(r.sources, 9);
        assert!(r.consistent());
        assert!(r.claim_holds);
    }

    #[test]
    fn export_lists_every_label() {
        let s = sp(2, 2);
        let t = RelationTable::build(&s, &s.enumerate_level(1)).unwrap();
        let e = t.export(&s);
        assert_eq!(e.vertices, 15);
        assert_eq!(e.valencies.iter().map(|v| v.count).sum::<usize>(), 15);
    }
}
