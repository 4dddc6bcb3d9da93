//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use polargrass::autgrp::{
    common_complement_sweep, noncollinear_witness_sweep, theorem_check, TheoremGraph, TheoremOptions, Verdict,
};
use polargrass::cliques::{verify_gamma_dprime_cliques, verify_gamma_prime_cliques};
use polargrass::relations::scheme_audit;
use polargrass::valency::{distinctness_check, stanton_valency};
use polargrass::{Field, FormKind, PolarSpace, RelationLabel, RelationTable, DEFAULT_SEED};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn space(kind: FormKind, q: u32, d: usize, n: usize) -> PolarSpace {
    PolarSpace::standard(kind, Field::with_order(q).unwrap(), d, n).unwrap()
}

/// The enumerable cells: kind, q, d, n_amb and the levels checked.
fn cells() -> Vec<(FormKind, u32, usize, usize, Vec<usize>)> {
    vec![
        (FormKind::Symplectic, 2, 3, 6, vec![1, 2, 3]),
        (FormKind::OrthogonalPlus, 2, 3, 6, vec![1, 2, 3]),
        (FormKind::OrthogonalOdd, 3, 2, 5, vec![1, 2]),
        (FormKind::Hermitian, 4, 2, 4, vec![1, 2]),
    ]
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn valency_vs_brute_force() -> Outcome {
    let mut compared = 0;
    for (kind, q, d, n, ms) in cells() {
        let s = space(kind, q, d, n);
        for m in ms {
            let level = s.enumerate_level(m);
            let table = RelationTable::build(&s, &level).map_err(|e| e.to_string())?;
            for j in 0..=m {
                for i in 0..=j {
                    let formula = stanton_valency(kind, n, d, m, i, j)
                        .map_err(|e| e.to_string())?
                        .eval(q as i128);
                    let brute = table.valency(RelationLabel::new(i, j)) as i128;
                    ensure(
                        formula == Some(brute),
                        format!("{kind} q={q} d={d} m={m} ({i},{j}): formula {formula:?}, count {brute}"),
                    )?;
                    compared += 1;
                }
            }
            if kind == FormKind::Symplectic && m == 2 {
                let expect: BTreeMap<RelationLabel, usize> = [((0, 1), 18), ((1, 1), 24), ((1, 2), 144), ((2, 2), 128)]
                    .into_iter()
                    .map(|((i, j), c)| (RelationLabel::new(i, j), c))
                    .collect();
                for (l, c) in &expect {
                    ensure(table.valency(*l) == *c, format!("anchor {l}: {}", table.valency(*l)))?;
                }
                ensure(1 + expect.values().sum::<usize>() == 315 && level.len() == 315, "anchor total")?;
            }
        }
    }
    Ok(format!("{compared} labels equal exactly; symplectic d=3 m=2 is 18/24/144/128 on 315"))
}

fn distinctness() -> Outcome {
    let mut reports = 0;
    let mut zero_labels = 0;
    for kind in FormKind::ALL {
        for d in 2..=5 {
            for n in kind.ambient_dims(d) {
                for m in 0..=d {
                    let r = distinctness_check(kind, n, d, m).map_err(|e| e.to_string())?;
                    ensure(r.passed(), format!("{kind} n={n} d={d} m={m}: {:?}", r.collisions))?;
                    reports += 1;
                }
            }
        }
    }
    for (kind, q, d, n, ms) in cells() {
        let s = space(kind, q, d, n);
        for m in ms {
            let r = distinctness_check(kind, n, d, m).map_err(|e| e.to_string())?;
            let table = RelationTable::build(&s, &s.enumerate_level(m)).map_err(|e| e.to_string())?;
            for &(i, j) in &r.zero_labels {
                let l = RelationLabel::new(i, j);
                ensure(
                    table.valency(l) == 0 && !l.feasible(m, d),
                    format!("{kind} m={m}: zero label {l} occurs"),
                )?;
                zero_labels += 1;
            }
        }
    }
    Ok(format!(
        "{reports} symbolic cells distinct; {zero_labels} zero labels absent from the enumerated tables"
    ))
}

fn scheme() -> Outcome {
    let s = space(FormKind::Symplectic, 2, 3, 6);
    let mut classes = Vec::new();
    for m in [2, 3] {
        let table = RelationTable::build(&s, &s.enumerate_level(m)).map_err(|e| e.to_string())?;
        let audit = scheme_audit(&table);
        ensure(audit.passed(), format!("m={m}: witness {:?}", audit.witness))?;
        classes.push(audit.classes.len());
    }
    Ok(format!("intersection numbers constant at m=2 and m=3 ({classes:?} classes)"))
}

fn cliques() -> Outcome {
    let mut gp = Vec::new();
    for kind in [FormKind::Symplectic, FormKind::OrthogonalPlus] {
        let r = verify_gamma_prime_cliques(&space(kind, 2, 3, 6), 2).map_err(|e| e.to_string())?;
        ensure(r.passed(), format!("{kind}: {r:?}"))?;
        gp.push(r.maximal_cliques);
    }
    let r = verify_gamma_dprime_cliques(&space(FormKind::Symplectic, 2, 4, 8), 2, 500, DEFAULT_SEED)
        .map_err(|e| e.to_string())?;
    ensure(r.passed() && r.sampled_edges >= 500, format!("{r:?}"))?;
    Ok(format!(
        "(1,1) cliques in big stars ({} and {} maximal cliques); {} sampled (0,2) edges, {} cliques inside the span",
        gp[0], gp[1], r.sampled_edges, r.cliques_checked
    ))
}

fn theorem_one() -> Outcome {
    let expected: u128 = 512 * 3 * 15 * 63;
    let s = space(FormKind::Symplectic, 2, 3, 6);
    let mut orders = Vec::new();
    for m in [2, 1] {
        let r = theorem_check(&s, m, TheoremGraph::GammaPrime, &TheoremOptions::default()).map_err(|e| e.to_string())?;
        ensure(
            r.aut_order == Some(expected) && r.induced_order == expected && r.passed(),
            format!("m={m}: {r:?}"),
        )?;
        orders.push((r.vertices, r.aut_order.unwrap()));
    }
    Ok(format!("|Aut| = {} on {} lines and {} on {} points", orders[0].1, orders[0].0, orders[1].1, orders[1].0))
}

fn lemmas() -> Outcome {
    let mut triples = 0;
    for kind in [FormKind::Symplectic, FormKind::OrthogonalPlus] {
        let w = noncollinear_witness_sweep(&space(kind, 2, 3, 6));
        ensure(w.failures.is_empty(), format!("{kind}: {:?}", w.failures))?;
        triples += w.admissible_triples;
    }
    let c4 = common_complement_sweep(&space(FormKind::Symplectic, 2, 4, 8), 2, 1000, DEFAULT_SEED);
    ensure(c4.passed(), format!("d=4: {:?}", c4.failures))?;
    ensure(c4.diagonal > 0 && c4.staircase > 0, format!("d=4 coverage {c4:?}"))?;
    // S and U span a 4-space at d = 4, t = 2, so S ∩ U = 0 and the reduction
    // step cannot occur; it is exercised at d = 5 instead.
    ensure(c4.reduced == 0, "reduction fired with S ∩ U = 0")?;
    let c5 = common_complement_sweep(&space(FormKind::Symplectic, 2, 5, 10), 2, 1000, DEFAULT_SEED);
    ensure(c5.passed() && c5.reduced > 0, format!("d=5: {c5:?}"))?;
    Ok(format!(
        "{triples} witness triples; d=4: {} triples, diagonal {} staircase {}; d=5: {} triples, reduction {}",
        c4.triples, c4.diagonal, c4.staircase, c5.triples, c5.reduced
    ))
}

fn theorem_two_soundness() -> Outcome {
    let s = space(FormKind::Symplectic, 2, 4, 8);
    let opts = TheoremOptions {
        samples: 200,
        ..TheoremOptions::default()
    };
    let r = theorem_check(&s, 2, TheoremGraph::GammaDoublePrime, &opts).map_err(|e| e.to_string())?;
    ensure(
        r.samples >= 200 && r.soundness_failures == 0 && matches!(r.verdict, Verdict::SoundnessOnly),
        format!("{r:?}"),
    )?;
    Ok(format!("{} induced permutations preserve adjacency on {} vertices", r.samples, r.vertices))
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for (run, workers) in [("a", "1"), ("b", "2")] {
        let out = tmp.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_polargrass"))
            .args(["verify-all", "--kind", "orthogonal_plus", "--q", "2", "--d", "3", "--workers", workers, "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), format!("run {run} exited with {}", status.status))?;
        trees.push(read_tree(&out));
    }
    ensure(!trees[0].is_empty(), "no artifacts written")?;
    ensure(trees[0] == trees[1], "artifacts differ between runs")?;
    let bytes: usize = trees[0].values().map(Vec::len).sum();
    Ok(format!("{} artifacts, {bytes} bytes, identical across runs", trees[0].len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("valency formula equals brute-force counts", valency_vs_brute_force),
        ("nonzero valencies pairwise distinct", distinctness),
        ("symmetric association scheme", scheme),
        ("clique structure", cliques),
        ("automorphisms of the (1,1) graphs are induced", theorem_one),
        ("constructive lemmas", lemmas),
        ("(0,2) graph soundness", theorem_two_soundness),
        ("verify-all is deterministic", determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail} [{secs:.1}s]", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {why} [{secs:.1}s]", k + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
