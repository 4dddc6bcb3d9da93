//! Maximal cliques of the relation graphs and their stars, tops and big stars.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::Subspace;
use crate::polar::{IsotropicLevel, PolarSpace};
use crate::relations::{RelationLabel, RelationTable};

type Bits = Vec<u64>;

fn bits_and(a: &[u64], b: &[u64]) -> Bits {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn bits_iter(a: &[u64]) -> impl Iterator<Item = usize> + '_ {
    a.iter().enumerate().flat_map(|(w, &word)| {
        let mut rest = word;
        std::iter::from_fn(move || {
            (rest != 0).then(|| {
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                w * 64 + b
            })
        })
    })
}

fn bits_count(a: &[u64]) -> u32 {
    a.iter().map(|w| w.count_ones()).sum()
}

fn bron_kerbosch(g: &Graph, r: &mut Vec<usize>, mut p: Bits, mut x: Bits, out: &mut Vec<Vec<usize>>) {
    if p.iter().all(|&w| w == 0) {
        if x.iter().all(|&w| w == 0) {
            let mut c = r.clone();
            c.sort_unstable();
            out.push(c);
        }
        return;
    }
    let pivot = bits_iter(&p)
        .chain(bits_iter(&x))
        .max_by_key(|&u| (bits_count(&bits_and(&p, g.row_bits(u))), std::cmp::Reverse(u)))
        .unwrap();
    let candidates: Vec<usize> = bits_iter(&p)
        .filter(|&v| !g.has_edge(pivot, v))
        .collect();
    for v in candidates {
        r.push(v);
        let nv = g.row_bits(v);
        bron_kerbosch(g, r, bits_and(&p, nv), bits_and(&x, nv), out);
        r.pop();
        p[v / 64] &= !(1 << (v % 64));
        x[v / 64] |= 1 << (v % 64);
    }
}

/// All maximal cliques, each sorted, in lexicographic order.
pub fn maximal_cliques(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.order();
    let words = n.div_ceil(64);
    // Each clique is found once, from its smallest vertex.
    let mut all: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .flat_map_iter(|v| {
            let mut p = vec![0u64; words];
            let mut x = vec![0u64; words];
            for &u in g.neighbors(v) {
                let u = u as usize;
                if u > v {
                    p[u / 64] |= 1 << (u % 64);
                } else {
                    x[u / 64] |= 1 << (u % 64);
                }
            }
            let mut out = Vec::new();
            bron_kerbosch(g, &mut vec![v], p, x, &mut out);
            out
        })
        .collect();
    all.sort();
    all
}

/// Maximal cliques of `g` that contain the edge `{s, u}`.
pub fn cliques_through_edge(g: &Graph, s: usize, u: usize) -> Result<Vec<Vec<usize>>> {
    if s == u || !g.has_edge(s, u) {
        return Err(Error::NotAnEdge(s, u));
    }
    let common: Vec<usize> = g
        .neighbors(s)
        .iter()
        .map(|&w| w as usize)
        .filter(|&w| g.has_edge(u, w))
        .collect();
    let pos: BTreeMap<usize, usize> = common.iter().enumerate().map(|(i, &w)| (w, i)).collect();
    let sub = Graph::new(
        common.len(),
        common.iter().flat_map(|&a| {
            g.neighbors(a)
                .iter()
                .filter_map(|&b| pos.get(&(b as usize)).map(|&j| (pos[&a], j)))
                .collect::<Vec<_>>()
        }),
    );
    let mut out: Vec<Vec<usize>> = if common.is_empty() {
        vec![Vec::new()]
    } else {
        maximal_cliques(&sub)
    }
    .into_iter()
    .map(|c| {
        let mut full: Vec<usize> = c.into_iter().map(|i| common[i]).collect();
        full.push(s);
        full.push(u);
        full.sort_unstable();
        full
    })
    .collect();
    out.sort();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum CliqueFamilyTag {
    /// Every member contains `n`, of dimension `m - 1`.
    BigStar { n: Subspace },
    /// Every member contains `n` and lies in the maximal singular `M`.
    Star { n: Subspace, big_m: Subspace },
    /// Every member lies in the singular `M` of dimension `m + 1`.
    Top { big_m: Subspace },
    Other,
}

impl CliqueFamilyTag {
    pub fn name(&self) -> &'static str {
        match self {
            CliqueFamilyTag::BigStar { .. } => "big_star",
            CliqueFamilyTag::Star { .. } => "star",
            CliqueFamilyTag::Top { .. } => "top",
            CliqueFamilyTag::Other => "other",
        }
    }
}

fn meet_and_span(space: &PolarSpace, level: &IsotropicLevel, vertices: &[usize]) -> (Subspace, Subspace) {
    let f = space.field();
    let mut meet = level.get(vertices[0]).clone();
    let mut span = meet.clone();
    for &v in &vertices[1..] {
        meet = Subspace::intersection(f, &meet, level.get(v)).unwrap();
        span = Subspace::sum(f, &span, level.get(v)).unwrap();
    }
    (meet, span)
}

/// The smallest family among top, star and big star that contains the
/// given members of `N_m`.
pub fn classify_clique(space: &PolarSpace, level: &IsotropicLevel, vertices: &[usize]) -> CliqueFamilyTag {
    let m = level.m();
    if vertices.len() < 2 || m == 0 {
        return CliqueFamilyTag::Other;
    }
    let (meet, span) = meet_and_span(space, level, vertices);
    let singular = space.is_singular(&span);
    if singular && span.dim() == m + 1 {
        return CliqueFamilyTag::Top { big_m: span };
    }
    if meet.dim() + 1 == m {
        if singular {
            let big_m = space.maximal_containing(&span).expect("span is singular");
            return CliqueFamilyTag::Star { n: meet, big_m };
        }
        return CliqueFamilyTag::BigStar { n: meet };
    }
    CliqueFamilyTag::Other
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaPrimeReport {
    pub m: usize,
    pub vertices: usize,
    pub edges: usize,
    pub maximal_cliques: usize,
    pub clique_sizes: BTreeMap<usize, usize>,
    pub tags: BTreeMap<String, usize>,
    /// Maximal cliques whose members share no `(m-1)`-space.
    pub big_star_failures: Vec<Vec<usize>>,
    pub big_stars_checked: usize,
    pub residue_pairs_checked: usize,
    /// Pairs inside a big star where adjacency and residue non-collinearity differ.
    pub residue_mismatches: Vec<(usize, usize)>,
    pub tops_checked: usize,
    /// Tops containing a pair of adjacent members.
    pub tops_with_edges: usize,
}

impl GammaPrimeReport {
    pub fn passed(&self) -> bool {
        self.big_star_failures.is_empty() && self.residue_mismatches.is_empty() && self.tops_with_edges == 0
    }
}

/// Checks that maximal cliques of the `(1,1)` graph on `N_m` lie in big
/// stars, that inside a big star adjacency is non-collinearity in the
/// residue, and that tops carry no edges.
pub fn verify_gamma_prime_cliques(space: &PolarSpace, m: usize) -> Result<GammaPrimeReport> {
    let d = space.rank();
    if m == 0 || m + 1 > d {
        return Err(Error::PreconditionFailed(format!("need 1 <= m <= d - 1, got m={m} d={d}")));
    }
    let f = space.field();
    let level = space.enumerate_level(m);
    let table = RelationTable::build(space, &level)?;
    let g = table.build_graph(&[RelationLabel::new(1, 1)]);

    let cliques = maximal_cliques(&g);
    let mut clique_sizes = BTreeMap::new();
    let tagged: Vec<(CliqueFamilyTag, bool)> = cliques
        .par_iter()
        .map(|c| {
            let (meet, _) = meet_and_span(space, &level, c);
            (classify_clique(space, &level, c), meet.dim() + 1 >= m)
        })
        .collect();
    let mut tags = BTreeMap::new();
    let mut big_star_failures = Vec::new();
    for (c, (tag, in_big_star)) in cliques.iter().zip(&tagged) {
        *clique_sizes.entry(c.len()).or_insert(0) += 1;
        *tags.entry(tag.name().to_string()).or_insert(0) += 1;
        if !in_big_star {
            big_star_failures.push(c.clone());
        }
    }

    let bases = space.enumerate_level(m - 1);
    let per_base: Vec<(usize, Vec<(usize, usize)>)> = bases
        .elements()
        .par_iter()
        .map(|base| {
            let members: Vec<usize> = (0..level.len())
                .filter(|&v| level.get(v).contains(f, base))
                .collect();
            let residue = (m >= 2).then(|| space.residue(base).expect("singular base"));
            let mut checked = 0;
            let mut bad = Vec::new();
            for (a, &x) in members.iter().enumerate() {
                for &y in &members[a + 1..] {
                    let collinear = match &residue {
                        Some(r) => r.collinear(level.get(x), level.get(y)).expect("residue points"),
                        None => space.form(level.get(x).row(0), level.get(y).row(0)).is_zero(),
                    };
                    checked += 1;
                    if g.has_edge(x, y) == collinear {
                        bad.push((x, y));
                    }
                }
            }
            (checked, bad)
        })
        .collect();
    let residue_pairs_checked = per_base.iter().map(|p| p.0).sum();
    let residue_mismatches = per_base.into_iter().flat_map(|p| p.1).collect();

    let tops = space.enumerate_level(m + 1);
    let tops_with_edges = tops
        .elements()
        .par_iter()
        .filter(|top| {
            let members: Vec<usize> = (0..level.len())
                .filter(|&v| top.contains(f, level.get(v)))
                .collect();
            members
                .iter()
                .enumerate()
                .any(|(a, &x)| members[a + 1..].iter().any(|&y| g.has_edge(x, y)))
        })
        .count();

    Ok(GammaPrimeReport {
        m,
        vertices: level.len(),
        edges: g.edge_count(),
        maximal_cliques: cliques.len(),
        clique_sizes,
        tags,
        big_star_failures,
        big_stars_checked: bases.len(),
        residue_pairs_checked,
        residue_mismatches,
        tops_checked: tops.len(),
        tops_with_edges,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaDoublePrimeReport {
    pub d: usize,
    pub t: usize,
    pub m: usize,
    pub vertices: usize,
    pub edges: usize,
    pub sampled_edges: usize,
    pub seed: u64,
    pub cliques_checked: usize,
    pub max_clique_size: usize,
    /// Sampled edges whose span is not a maximal singular subspace.
    pub span_failures: Vec<(usize, usize)>,
    /// `(edge, clique)` where the clique leaves the top over the edge's span.
    pub containment_failures: Vec<((usize, usize), Vec<usize>)>,
}

impl GammaDoublePrimeReport {
    pub fn passed(&self) -> bool {
        self.span_failures.is_empty() && self.containment_failures.is_empty()
    }
}

/// For sampled edges `(S, U)` of the `(0,t)` graph on `N_{d-t}`, checks that
/// `S + U` is maximal singular and that every maximal clique through the
/// edge lies inside it.
pub fn verify_gamma_dprime_cliques(
    space: &PolarSpace,
    t: usize,
    samples: usize,
    seed: u64,
) -> Result<GammaDoublePrimeReport> {
    let d = space.rank();
    if t < 2 || d < 2 * t {
        return Err(Error::PreconditionFailed(format!("need d >= 2t >= 4, got d={d} t={t}")));
    }
    let m = d - t;
    let level = space.enumerate_level(m);
    let table = RelationTable::build(space, &level)?;
    let g = table.build_graph(&[RelationLabel::new(0, t)]);
    let edges = g.edges();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample: Vec<(usize, usize)> = edges
        .choose_multiple(&mut rng, samples.min(edges.len()))
        .copied()
        .collect();
    sample.sort_unstable();
    verify_dprime_edges(space, &level, &g, &sample, d, t, seed)
}

fn verify_dprime_edges(
    space: &PolarSpace,
    level: &IsotropicLevel,
    g: &Graph,
    sample: &[(usize, usize)],
    d: usize,
    t: usize,
    seed: u64,
) -> Result<GammaDoublePrimeReport> {
    let f = space.field();
    type EdgeResult = (bool, Vec<Vec<usize>>, usize, usize);
    let per_edge: Vec<EdgeResult> = sample
        .par_iter()
        .map(|&(s, u)| {
            let span = Subspace::sum(f, level.get(s), level.get(u)).unwrap();
            let span_ok = span.dim() == d && space.is_singular(&span);
            let cliques = cliques_through_edge(g, s, u).expect("sampled pairs are edges");
            let max = cliques.iter().map(Vec::len).max().unwrap_or(0);
            let bad: Vec<Vec<usize>> = cliques
                .iter()
                .filter(|c| !c.iter().all(|&w| span.contains(f, level.get(w))))
                .cloned()
                .collect();
            (span_ok, bad, cliques.len(), max)
        })
        .collect();
    let mut span_failures = Vec::new();
    let mut containment_failures = Vec::new();
    let mut cliques_checked = 0;
    let mut max_clique_size = 0;
    for (&edge, (span_ok, bad, n, max)) in sample.iter().zip(per_edge) {
        if !span_ok {
            span_failures.push(edge);
        }
        containment_failures.extend(bad.into_iter().map(|c| (edge, c)));
        cliques_checked += n;
        max_clique_size = max_clique_size.max(max);
    }
    Ok(GammaDoublePrimeReport {
        d,
        t,
        m: d - t,
        vertices: level.len(),
        edges: g.edge_count(),
        sampled_edges: sample.len(),
        seed,
        cliques_checked,
        max_clique_size,
        span_failures,
        containment_failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Field;
    use crate::polar::FormKind;

    fn space(kind: FormKind, d: usize) -> PolarSpace {
        PolarSpace::standard(kind, Field::with_order(2).unwrap(), d, 2 * d).unwrap()
    }

    /// Exhaustive maximal-clique search over all vertex subsets.
    fn brute_cliques(g: &Graph) -> Vec<Vec<usize>> {
        let n = g.order();
        let is_clique = |mask: u32| {
            (0..n).all(|a| {
                mask >> a & 1 == 0 || (a + 1..n).all(|b| mask >> b & 1 == 0 || g.has_edge(a, b))
            })
        };
        let mut out = Vec::new();
        for mask in 1u32..(1 << n) {
            if !is_clique(mask) {
                continue;
            }
            let maximal = (0..n).all(|v| mask >> v & 1 == 1 || !is_clique(mask | 1 << v));
            if maximal {
                out.push((0..n).filter(|&v| mask >> v & 1 == 1).collect());
            }
        }
        out.sort();
        out
    }

    #[test]
    fn small_graphs() {
        assert_eq!(maximal_cliques(&Graph::complete(3)), vec![vec![0, 1, 2]]);
        let c5 = maximal_cliques(&Graph::cycle(5));
        assert_eq!(c5.len(), 5);
        assert!(c5.iter().all(|c| c.len() == 2));
        assert_eq!(maximal_cliques(&Graph::empty(2)), vec![vec![0], vec![1]]);
    }

    #[test]
    fn matches_exhaustive_search_on_random_graphs() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [5, 8, 11, 13] {
            for _ in 0..10 {
                let p: f64 = rng.gen_range(0.2..0.8);
                let edges: Vec<(usize, usize)> = (0..n)
                    .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
                    .filter(|_| rng.gen_bool(p))
                    .collect();
                let g = Graph::new(n, edges);
                assert_eq!(maximal_cliques(&g), brute_cliques(&g));
            }
        }
    }

    #[test]
    fn edge_restricted_search() {
        let g = Graph::new(5, [(0, 1), (0, 2), (1, 2), (1, 3), (0, 3), (3, 4)]);
        assert_eq!(cliques_through_edge(&g, 0, 1).unwrap(), vec![vec![0, 1, 2], vec![0, 1, 3]]);
        assert_eq!(cliques_through_edge(&g, 3, 4).unwrap(), vec![vec![3, 4]]);
        assert_eq!(cliques_through_edge(&g, 0, 4), Err(Error::NotAnEdge(0, 4)));
    }

    #[test]
    fn tags_by_construction() {
        let s = space(FormKind::Symplectic, 3);
        let f = s.field();
        let level = s.enumerate_level(2);
        let p = Subspace::from_rows(f, 6, &[vec![1, 0, 0, 0, 0, 0]]).unwrap();
        let through_p: Vec<usize> = (0..level.len()).filter(|&v| level.get(v).contains(f, &p)).collect();
        assert_eq!(through_p.len(), 15);
        assert_eq!(classify_clique(&s, &level, &through_p), CliqueFamilyTag::BigStar { n: p.clone() });

        let plane = Subspace::from_rows(
            f,
            6,
            &[vec![1, 0, 0, 0, 0, 0], vec![0, 0, 1, 0, 0, 0], vec![0, 0, 0, 0, 1, 0]],
        )
        .unwrap();
        let in_plane: Vec<usize> = (0..level.len()).filter(|&v| plane.contains(f, level.get(v))).collect();
        assert_eq!(in_plane.len(), 7);
        assert_eq!(classify_clique(&s, &level, &in_plane), CliqueFamilyTag::Top { big_m: plane.clone() });

        let star: Vec<usize> = in_plane.iter().copied().filter(|&v| level.get(v).contains(f, &p)).collect();
        assert_eq!(star.len(), 3);
        // Three concurrent lines in a plane span only that plane: a top.
        assert!(matches!(classify_clique(&s, &level, &star), CliqueFamilyTag::Top { .. }));

        let a = through_p[0];
        let b = (0..level.len())
            .find(|&v| Subspace::intersection(f, level.get(a), level.get(v)).unwrap().dim() == 0)
            .unwrap();
        assert_eq!(classify_clique(&s, &level, &[a, b]), CliqueFamilyTag::Other);
    }

    #[test]
    fn star_in_rank_four() {
        let s = space(FormKind::Symplectic, 4);
        let f = s.field();
        let level = s.enumerate_level(2);
        let p = Subspace::from_rows(f, 8, &[vec![1, 0, 0, 0, 0, 0, 0, 0]]).unwrap();
        let big_m = Subspace::from_rows(
            f,
            8,
            &[
                vec![1, 0, 0, 0, 0, 0, 0, 0],
                vec![0, 0, 1, 0, 0, 0, 0, 0],
                vec![0, 0, 0, 0, 1, 0, 0, 0],
                vec![0, 0, 0, 0, 0, 0, 1, 0],
            ],
        )
        .unwrap();
        let star: Vec<usize> = (0..level.len())
            .filter(|&v| level.get(v).contains(f, &p) && big_m.contains(f, level.get(v)))
            .collect();
        assert_eq!(star.len(), 7);
        assert_eq!(classify_clique(&s, &level, &star), CliqueFamilyTag::Star { n: p, big_m });
    }

    #[test]
    fn gamma_prime_cliques_rank_three() {
        for kind in [FormKind::Symplectic, FormKind::OrthogonalPlus] {
            let r = verify_gamma_prime_cliques(&space(kind, 3), 2).unwrap();
            assert!(r.passed(), "{kind}: {r:?}");
            assert!(r.maximal_cliques > 0);
            assert!(r.tops_checked > 0);
        }
    }

    #[test]
    fn gamma_prime_on_points_is_non_collinearity() {
        let r = verify_gamma_prime_cliques(&space(FormKind::Symplectic, 2), 1).unwrap();
        assert!(r.passed());
        assert_eq!(r.big_stars_checked, 1);
        assert_eq!(r.residue_pairs_checked, 15 * 14 / 2);
    }

    #[test]
    fn gamma_prime_preconditions() {
        let s = space(FormKind::Symplectic, 3);
        assert!(verify_gamma_prime_cliques(&s, 3).is_err());
        assert!(verify_gamma_prime_cliques(&s, 0).is_err());
        assert!(verify_gamma_dprime_cliques(&s, 2, 10, 1).is_err());
    }

    #[test]
    fn gamma_dprime_small_sample() {
        let s = space(FormKind::Symplectic, 4);
        let r = verify_gamma_dprime_cliques(&s, 2, 40, 3).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.sampled_edges, 40);
        assert_eq!(r.vertices, 5355);
    }
}
