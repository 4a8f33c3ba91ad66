//! Job scheduling and the run artifacts (`records.csv`, `manifest.json`).

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::recipes::{points, run_point, to_records, Point};
use crate::records::{write_records, Record};
use crate::LabError;

pub const SCHEMA: &str = "parity-lab/1";

/// First 16 hex digits of the SHA-256 of the point's JSON form.
pub fn params_hash(point: &Point) -> String {
    let json = serde_json::to_string(point).expect("points serialize");
    let digest = Sha256::digest(json.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Stream seed of one job, `H(seed, recipe, params_hash)`.
pub fn job_seed(seed: u64, recipe: &str, params_hash: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(recipe.as_bytes());
    h.update([0u8]);
    h.update(params_hash.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Serialize)]
struct PointEntry<'a> {
    params_hash: String,
    params: &'a Point,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    schema: &'static str,
    code_version: &'static str,
    started_at: String,
    wall_time_seconds: f64,
    config: &'a RunConfig,
    points: Vec<PointEntry<'a>>,
    jobs: usize,
    records: usize,
}

pub struct RunSummary {
    pub jobs: usize,
    pub records: usize,
}

/// Run every (point, seed) job of `cfg` and return the rows in job order:
/// points in expansion order, seeds in config order within each point.
pub fn execute(cfg: &RunConfig) -> Result<Vec<Record>, LabError> {
    let recipe = cfg.recipe.name();
    let pts = points(&cfg.recipe);
    let jobs: Vec<(&Point, String, u64)> = pts
        .iter()
        .flat_map(|p| {
            let h = params_hash(p);
            cfg.seeds.iter().map(move |&s| (p, h.clone(), s))
        })
        .collect();
    let results: Vec<anyhow::Result<Vec<Record>>> = jobs
        .par_iter()
        .map(|(p, h, seed)| {
            let out = run_point(p, job_seed(*seed, recipe, h)).with_context(|| format!("job {h} seed {seed}"))?;
            Ok(to_records(recipe, h, *seed, out))
        })
        .collect();
    let mut records = Vec::new();
    for r in results {
        records.extend(r?);
    }
    Ok(records)
}

/// Execute `cfg` and write `records.csv` and `manifest.json` into its
/// output directory.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, LabError> {
    let started_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let clock = Instant::now();
    let dir: &Path = &cfg.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let records = execute(cfg)?;

    let csv_path = dir.join("records.csv");
    let file = fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    write_records(std::io::BufWriter::new(file), &records).with_context(|| format!("writing {}", csv_path.display()))?;

    let pts = points(&cfg.recipe);
    let manifest = Manifest {
        schema: SCHEMA,
        code_version: env!("CARGO_PKG_VERSION"),
        started_at,
        wall_time_seconds: clock.elapsed().as_secs_f64(),
        config: cfg,
        points: pts.iter().map(|p| PointEntry { params_hash: params_hash(p), params: p }).collect(),
        jobs: pts.len() * cfg.seeds.len(),
        records: records.len(),
    };
    let text = serde_json::to_string_pretty(&manifest).context("serializing the manifest")?;
    fs::write(dir.join("manifest.json"), text + "\n").context("writing manifest.json")?;
    Ok(RunSummary { jobs: manifest.jobs, records: records.len() })
}
