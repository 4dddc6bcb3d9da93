//! `polargrass`: reproducible verification runs on finite polar spaces.

mod artifacts;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polargrass::{Field, FormKind, PolarSpace, DEFAULT_SEED};

#[derive(Parser, Debug)]
#[command(name = "polargrass", version, about = "Relations, valencies, cliques and automorphisms of finite polar spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the space, check the axioms and export a level.
    Build(Config),
    /// Relation table on a level, valency comparison and the (1,1) graph.
    Relations(Config),
    /// Closed-form valencies and their distinctness.
    Valency(Config),
    /// Clique structure of the (1,1) graph, or of the (0,t) graph with --t.
    Cliques(Config),
    /// Automorphism groups against collineation groups, and the constructive lemmas.
    Autgrp(Config),
    /// Every check that fits in the configured budgets.
    VerifyAll(Config),
}

#[derive(Args, Debug, Clone)]
pub struct Config {
    /// symplectic, hermitian, orthogonal_plus, orthogonal_minus or orthogonal_odd.
    #[arg(long, default_value = "symplectic")]
    pub kind: FormKind,
    /// Field order; alternative to --p/--e.
    #[arg(long, conflicts_with = "p")]
    pub q: Option<u32>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long, default_value_t = 1, requires = "p")]
    pub e: u32,
    /// Witt index.
    #[arg(long)]
    pub d: usize,
    /// Ambient dimension; defaults to the smallest one admissible for the kind.
    #[arg(long)]
    pub n_amb: Option<usize>,
    /// Level (dimension of the singular subspaces).
    #[arg(long)]
    pub m: Option<usize>,
    /// Use the (0,t) graph on level d - t.
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Largest graph handed to the full automorphism search.
    #[arg(long, default_value_t = 1000)]
    pub max_aut_vertices: usize,
    /// Largest level for which the relation table is built.
    #[arg(long, default_value_t = 6000)]
    pub max_table_vertices: usize,
    /// Sampled isometries, edges and triples.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Only evaluate the formulas, without enumerating the space.
    #[arg(long)]
    pub symbolic: bool,
    /// Record wall-clock times in theorem reports.
    #[arg(long)]
    pub timings: bool,
}

impl Config {
    pub fn field(&self) -> polargrass::Result<Field> {
        match (self.q, self.p) {
            (Some(q), _) => Field::with_order(q),
            (None, Some(p)) => Field::new(p, self.e),
            (None, None) => Field::with_order(2),
        }
    }

    pub fn n_amb(&self) -> usize {
        self.n_amb
            .unwrap_or_else(|| self.kind.ambient_dims(self.d).first().copied().unwrap_or(2 * self.d))
    }

    pub fn space(&self) -> polargrass::Result<PolarSpace> {
        PolarSpace::standard(self.kind, self.field()?, self.d, self.n_amb())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, config) = match &cli.command {
        Command::Build(c) => ("build", c),
        Command::Relations(c) => ("relations", c),
        Command::Valency(c) => ("valency", c),
        Command::Cliques(c) => ("cliques", c),
        Command::Autgrp(c) => ("autgrp", c),
        Command::VerifyAll(c) => ("verify-all", c),
    };
    if let Some(w) = config.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run::dispatch(name, config) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
