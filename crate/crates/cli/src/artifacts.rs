use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// One named check and the artifact holding its report.
#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub check: String,
    pub passed: bool,
    pub artifact: String,
}

/// Writes artifacts under one directory and collects check outcomes.
pub struct Artifacts {
    dir: PathBuf,
    outcomes: Vec<Outcome>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> io::Result<Artifacts> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            outcomes: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn text(&self, name: &str, body: &str) -> io::Result<()> {
        fs::write(self.path(name), body)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> io::Result<()> {
        let mut body = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        body.push('\n');
        self.text(name, &body)
    }

    /// Writes the report and records whether it passed.
    pub fn check<T: Serialize>(&mut self, check: &str, name: &str, report: &T, passed: bool) -> io::Result<()> {
        self.json(name, report)?;
        self.outcomes.push(Outcome {
            check: check.to_string(),
            passed,
            artifact: name.to_string(),
        });
        Ok(())
    }

    /// Writes `summary.json`, prints one line per check and returns whether
    /// everything passed.
    pub fn finish(&self) -> io::Result<bool> {
        self.json("summary.json", &self.outcomes)?;
        for o in &self.outcomes {
            let path = self.path(&o.artifact);
            if o.passed {
                println!("PASS {} ({})", o.check, path.display());
            } else {
                eprintln!("FAIL {} ({})", o.check, path.display());
            }
        }
        Ok(self.outcomes.iter().all(|o| o.passed))
    }
}
