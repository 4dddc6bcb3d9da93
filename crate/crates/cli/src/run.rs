use std::error::Error as StdError;
use std::fmt::Write as _;
use std::time::Instant;

use polargrass::autgrp::{
    common_complement_sweep, noncollinear_witness_sweep, theorem_check, TheoremGraph, TheoremOptions, TheoremReport,
};
use polargrass::cliques::{
    classify_clique, maximal_cliques, verify_gamma_dprime_cliques, verify_gamma_prime_cliques, CliqueFamilyTag,
    GammaPrimeReport,
};
use polargrass::relations::{graph_distance_check, scheme_audit};
use polargrass::valency::{distinctness_check, level_size, stanton_valency};
use polargrass::{Error, IsotropicLevel, PolarSpace, RelationLabel, RelationTable};
use serde::Serialize;

use crate::artifacts::Artifacts;
use crate::Config;

type Res<T> = std::result::Result<T, Box<dyn StdError>>;

/// Levels up to this size get a full intersection-number audit.
const AUDIT_LIMIT: usize = 700;
/// Levels up to this size get exhaustive distance tables; larger ones are sampled.
const DISTANCE_SOURCES: usize = 64;
/// Spaces with at most this many points get the exhaustive witness sweep.
const WITNESS_LIMIT: usize = 400;
/// Clique reports list at most this many cliques.
const CLIQUE_LIST_LIMIT: usize = 5000;

pub fn dispatch(name: &str, cfg: &Config) -> Res<bool> {
    let mut art = Artifacts::create(&cfg.out)?;
    match name {
        "build" => build(cfg, &mut art)?,
        "relations" => {
            let space = cfg.space()?;
            relations(&space, cfg, required_m(cfg)?, &mut art)?;
        }
        "valency" => valency(cfg, &mut art)?,
        "cliques" => cliques(cfg, &mut art)?,
        "autgrp" => autgrp(cfg, &mut art)?,
        "verify-all" => verify_all(cfg, &mut art)?,
        _ => unreachable!("clap only yields known subcommands"),
    }
    Ok(art.finish()?)
}

fn required_m(cfg: &Config) -> Res<usize> {
    match cfg.m {
        Some(m) if m <= cfg.d => Ok(m),
        Some(m) => Err(Error::DimensionOutOfRange { dim: m, max: cfg.d }.into()),
        None => Err("this subcommand needs --m".into()),
    }
}

/// Number of elements of `N_m`, from the closed form.
fn predicted_level_size(space: &PolarSpace, m: usize) -> Option<usize> {
    let q = space.field().q() as i128;
    level_size(space.kind(), space.n_amb(), space.rank(), m)
        .eval(q)
        .and_then(|v| usize::try_from(v).ok())
}

fn build(cfg: &Config, art: &mut Artifacts) -> Res<()> {
    let space = cfg.space()?;
    art.json("space.json", &space.descriptor())?;
    let axioms = space.verify_axioms_and_facts();
    art.check("axioms and facts", "axioms.json", &axioms, axioms.passed())?;
    if let Some(m) = cfg.m {
        let m = required_m(&Config { m: Some(m), ..cfg.clone() })?;
        let level = space.enumerate_level(m);
        art.json(&format!("level_m{m}.json"), &level.elements())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ValencyRow {
    i: usize,
    j: usize,
    formula_value_at_q: Option<i128>,
    brute_force_value: usize,
    matches: bool,
}

fn valency_rows(space: &PolarSpace, table: &RelationTable) -> Res<Vec<ValencyRow>> {
    let q = space.field().q() as i128;
    let m = table.m();
    let mut rows = Vec::new();
    for j in 0..=m {
        for i in 0..=j {
            let formula = stanton_valency(space.kind(), space.n_amb(), space.rank(), m, i, j)?.eval(q);
            let brute = table.valency(RelationLabel::new(i, j));
            rows.push(ValencyRow {
                i,
                j,
                formula_value_at_q: formula,
                brute_force_value: brute,
                matches: formula == Some(brute as i128),
            });
        }
    }
    Ok(rows)
}

fn csv(rows: &[ValencyRow]) -> String {
    let mut s = String::from("i,j,formula_value_at_q,brute_force_value,match\n");
    for r in rows {
        let f = r.formula_value_at_q.map_or_else(|| "NA".to_string(), |v| v.to_string());
        writeln!(s, "{},{},{},{},{}", r.i, r.j, f, r.brute_force_value, r.matches).unwrap();
    }
    s
}

/// Builds the table on `N_m`, compares it with the closed form and exports
/// the table, the comparison and the `(1,1)` graph.
fn relations(space: &PolarSpace, cfg: &Config, m: usize, art: &mut Artifacts) -> Res<(IsotropicLevel, RelationTable)> {
    let size = predicted_level_size(space, m).unwrap_or(usize::MAX);
    if size > cfg.max_table_vertices {
        return Err(Error::Refused {
            vertices: size,
            budget: cfg.max_table_vertices,
        }
        .into());
    }
    let level = space.enumerate_level(m);
    let table = RelationTable::build(space, &level)?;
    art.json(&format!("table_m{m}.json"), &table.export(space))?;
    let rows = valency_rows(space, &table)?;
    let name = format!("valencies_m{m}.csv");
    art.text(&name, &csv(&rows))?;
    let ok = rows.iter().all(|r| r.matches) && level.len() == size;
    art.check(&format!("valency formula vs table, m={m}"), &format!("valencies_m{m}.json"), &rows, ok)?;
    if m >= 1 {
        let g = table.build_graph(&[RelationLabel::new(1, 1)]);
        art.text(&format!("gamma_prime_m{m}.edges"), &g.to_edge_list())?;
    }
    Ok((level, table))
}

fn valency(cfg: &Config, art: &mut Artifacts) -> Res<()> {
    let ms: Vec<usize> = match cfg.m {
        Some(_) => vec![required_m(cfg)?],
        None => (0..=cfg.d).collect(),
    };
    let space = if cfg.symbolic { None } else { Some(cfg.space()?) };
    for m in ms {
        let report = distinctness_check(cfg.kind, cfg.n_amb(), cfg.d, m)?;
        art.check(&format!("valencies distinct, m={m}"), &format!("valency_m{m}.json"), &report, report.passed())?;
        if let Some(space) = &space {
            relations(space, cfg, m, art)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CliqueEntry {
    vertices: Vec<usize>,
    #[serde(flatten)]
    tag: CliqueFamilyTag,
}

#[derive(Serialize)]
struct CliqueExport {
    report: GammaPrimeReport,
    listed: usize,
    cliques: Vec<CliqueEntry>,
}

fn gamma_prime_cliques(space: &PolarSpace, m: usize, art: &mut Artifacts) -> Res<()> {
    let report = verify_gamma_prime_cliques(space, m)?;
    let level = space.enumerate_level(m);
    let table = RelationTable::build(space, &level)?;
    let g = table.build_graph(&[RelationLabel::new(1, 1)]);
    let cliques: Vec<CliqueEntry> = maximal_cliques(&g)
        .into_iter()
        .take(CLIQUE_LIST_LIMIT)
        .map(|c| CliqueEntry {
            tag: classify_clique(space, &level, &c),
            vertices: c,
        })
        .collect();
    let passed = report.passed();
    let export = CliqueExport {
        report,
        listed: cliques.len(),
        cliques,
    };
    art.check(&format!("cliques of the (1,1) graph, m={m}"), &format!("cliques_m{m}.json"), &export, passed)?;
    Ok(())
}

fn gamma_dprime_cliques(space: &PolarSpace, cfg: &Config, t: usize, art: &mut Artifacts) -> Res<()> {
    let report = verify_gamma_dprime_cliques(space, t, cfg.samples, cfg.seed)?;
    let passed = report.passed();
    art.check(&format!("cliques of the (0,{t}) graph"), &format!("cliques_t{t}.json"), &report, passed)?;
    Ok(())
}

fn cliques(cfg: &Config, art: &mut Artifacts) -> Res<()> {
    let space = cfg.space()?;
    match cfg.t {
        Some(t) => gamma_dprime_cliques(&space, cfg, t, art),
        None => gamma_prime_cliques(&space, required_m(cfg)?, art),
    }
}

fn theorem(space: &PolarSpace, cfg: &Config, m: usize, which: TheoremGraph, art: &mut Artifacts) -> Res<()> {
    let opts = TheoremOptions {
        samples: cfg.samples,
        seed: cfg.seed,
        max_aut_vertices: cfg.max_aut_vertices,
    };
    let start = Instant::now();
    let mut report: TheoremReport = theorem_check(space, m, which, &opts)?;
    if cfg.timings {
        report.runtime_ms = Some(start.elapsed().as_millis() as u64);
    }
    let (check, name) = match which {
        TheoremGraph::GammaPrime => (format!("automorphisms of the (1,1) graph, m={m}"), format!("theorem_m{m}.json")),
        TheoremGraph::GammaDoublePrime => {
            let t = space.rank() - m;
            (format!("automorphisms of the (0,{t}) graph"), format!("theorem_t{t}.json"))
        }
    };
    let passed = report.passed();
    art.check(&check, &name, &report, passed)?;
    Ok(())
}

fn complements(space: &PolarSpace, cfg: &Config, t: usize, art: &mut Artifacts) -> Res<()> {
    let sweep = common_complement_sweep(space, t, cfg.samples, cfg.seed);
    let passed = sweep.passed();
    art.check(&format!("common complements, t={t}"), &format!("complement_t{t}.json"), &sweep, passed)?;
    Ok(())
}

fn witnesses(space: &PolarSpace, art: &mut Artifacts) -> Res<()> {
    let sweep = noncollinear_witness_sweep(space);
    let passed = sweep.failures.is_empty();
    art.check("non-collinear witnesses", "witness.json", &sweep, passed)?;
    Ok(())
}

fn autgrp(cfg: &Config, art: &mut Artifacts) -> Res<()> {
    let space = cfg.space()?;
    match cfg.t {
        Some(t) => {
            let m = cfg.d.checked_sub(t).ok_or("--t exceeds --d")?;
            theorem(&space, cfg, m, TheoremGraph::GammaDoublePrime, art)?;
            complements(&space, cfg, t, art)
        }
        None => {
            theorem(&space, cfg, required_m(cfg)?, TheoremGraph::GammaPrime, art)?;
            witnesses(&space, art)
        }
    }
}

fn verify_all(cfg: &Config, art: &mut Artifacts) -> Res<()> {
    let space = cfg.space()?;
    let d = space.rank();
    art.json("space.json", &space.descriptor())?;
    let axioms = space.verify_axioms_and_facts();
    art.check("axioms and facts", "axioms.json", &axioms, axioms.passed())?;

    for m in 0..=d {
        let report = distinctness_check(space.kind(), space.n_amb(), d, m)?;
        art.check(&format!("valencies distinct, m={m}"), &format!("valency_m{m}.json"), &report, report.passed())?;
        let size = predicted_level_size(&space, m).unwrap_or(usize::MAX);
        if m == 0 || size > cfg.max_table_vertices {
            continue;
        }
        let (_, table) = relations(&space, cfg, m, art)?;
        if size <= AUDIT_LIMIT {
            let audit = scheme_audit(&table);
            art.check(&format!("association scheme, m={m}"), &format!("scheme_m{m}.json"), &audit, audit.passed())?;
        }
        let sources = (size > AUDIT_LIMIT).then_some(DISTANCE_SOURCES);
        let dist = graph_distance_check(&table, d, sources);
        let ok = dist.consistent();
        art.check(&format!("distances determined by label, m={m}"), &format!("distance_m{m}.json"), &dist, ok)?;
        if m < d {
            // At m = 1 every clique lies in the star of the zero subspace.
            if m >= 2 && size <= cfg.max_aut_vertices {
                gamma_prime_cliques(&space, m, art)?;
            }
            theorem(&space, cfg, m, TheoremGraph::GammaPrime, art)?;
        }
    }

    if space.singular_points().len() <= WITNESS_LIMIT {
        witnesses(&space, art)?;
    }
    for t in 2..=d / 2 {
        let size = predicted_level_size(&space, d - t).unwrap_or(usize::MAX);
        if size > cfg.max_table_vertices {
            continue;
        }
        gamma_dprime_cliques(&space, cfg, t, art)?;
        theorem(&space, cfg, d - t, TheoremGraph::GammaDoublePrime, art)?;
        complements(&space, cfg, t, art)?;
    }
    Ok(())
}
