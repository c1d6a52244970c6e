//! Seeded synthetic fault-localization benchmarks.
//!
//! A program is a list of methods, each a run of statements whose first one
//! is the entry. A test picks methods at random and, inside every picked
//! method, runs the entry plus each other statement with a fixed
//! probability. Faults are planted statements; a test covering one fails
//! only when a trigger coin fires, which models coincidental correctness.

use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Coverage, Dataset, Outcome};
use crate::error::{Error, Result};
use crate::io::write_atomic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub methods: usize,
    pub min_statements: usize,
    pub max_statements: usize,
    pub tests: usize,
    /// Probability that a test enters a given method.
    pub method_prob: f64,
    /// Probability that a non-entry statement runs once its method is entered.
    pub statement_prob: f64,
    pub faults: usize,
    pub trigger_prob: f64,
    pub seed: u64,
    pub max_retries: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            methods: 20,
            min_statements: 3,
            max_statements: 8,
            tests: 100,
            method_prob: 0.2,
            statement_prob: 0.6,
            faults: 1,
            trigger_prob: 0.8,
            seed: 0,
            max_retries: 100,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("methods", self.methods),
            ("min_statements", self.min_statements),
            ("tests", self.tests),
            ("faults", self.faults),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.max_statements < self.min_statements {
            return Err(Error::Config("max_statements below min_statements".into()));
        }
        if self.faults > self.methods * self.min_statements {
            return Err(Error::Config(
                "more faults than guaranteed statements".into(),
            ));
        }
        for (name, p) in [
            ("method_prob", self.method_prob),
            ("statement_prob", self.statement_prob),
            ("trigger_prob", self.trigger_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

fn attempt(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<Option<Dataset>> {
    let sizes: Vec<usize> = (0..spec.methods)
        .map(|_| rng.gen_range(spec.min_statements..=spec.max_statements))
        .collect();
    let mut elements = Vec::new();
    let mut starts = Vec::with_capacity(sizes.len());
    for (m, &s) in sizes.iter().enumerate() {
        starts.push(elements.len());
        for k in 0..s {
            elements.push((format!("m{m}"), format!("m{m}.s{k}")));
        }
    }
    let n = elements.len();
    let mut faults: Vec<usize> = sample(rng, n, spec.faults).into_vec();
    faults.sort_unstable();

    let mut tests = Vec::with_capacity(spec.tests);
    let mut first_failing = None;
    for t in 0..spec.tests {
        let mut cov = Coverage::zeros(n);
        for (m, &s) in sizes.iter().enumerate() {
            if !rng.gen_bool(spec.method_prob) {
                continue;
            }
            cov.set(starts[m], true);
            for e in starts[m] + 1..starts[m] + s {
                if rng.gen_bool(spec.statement_prob) {
                    cov.set(e, true);
                }
            }
        }
        let covers_fault = faults.iter().any(|&f| cov.get(f));
        let fires = rng.gen_bool(spec.trigger_prob);
        let outcome = if covers_fault && fires {
            first_failing.get_or_insert(t);
            Outcome::Fail
        } else {
            Outcome::Pass
        };
        tests.push((format!("t{t}"), cov, outcome));
    }
    match first_failing {
        None => Ok(None),
        Some(f) => Dataset::new(elements, tests, faults, vec![f]).map(Some),
    }
}

/// Program `index` of the family described by `spec`.
pub fn generate_program(spec: &SyntheticSpec, index: usize) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    for _ in 0..=spec.max_retries {
        if let Some(d) = attempt(spec, &mut rng)? {
            return Ok(d);
        }
    }
    Err(Error::RetriesExhausted(spec.max_retries))
}

pub fn generate_benchmark(spec: &SyntheticSpec, count: usize) -> Result<Vec<Dataset>> {
    spec.validate()?;
    (0..count)
        .into_par_iter()
        .map(|i| generate_program(spec, i))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub index: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: SyntheticSpec,
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn program_file_name(index: usize) -> String {
    format!("fault_{index:03}.json")
}

/// Writes one dataset document per program plus a manifest into `dir`.
pub fn write_benchmark(dir: &Path, spec: &SyntheticSpec, datasets: &[Dataset]) -> Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(datasets.len());
    for (i, d) in datasets.iter().enumerate() {
        let file = program_file_name(i);
        write_atomic(&dir.join(&file), d.to_canonical_string().as_bytes())?;
        files.push(ManifestEntry {
            file,
            index: i,
            seed: spec.seed,
        });
    }
    let manifest = Manifest {
        spec: spec.clone(),
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())?;
    Ok(manifest)
}
