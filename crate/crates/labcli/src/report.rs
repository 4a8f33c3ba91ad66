//! Summary tables over a run directory: per recipe, per parameter point and
//! metric, the mean across seeds of each seed's last-step value with a
//! normal-approximation 95% interval.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::records::{read_records, Record};
use crate::LabError;

pub const UNDEFINED: &str = "undefined";

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub params_hash: String,
    pub metric: String,
    pub step: u64,
    pub n: usize,
    pub mean: f64,
    /// Half-width `1.96 s/√n`; `None` for a single seed.
    pub ci95: Option<f64>,
}

/// Mean and 95% half-width with the `n − 1` sample deviation.
pub fn mean_ci(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some(1.96 * (var / n).sqrt()))
}

/// Sections keyed by recipe, rows in `(params_hash, metric)` order.
pub fn summarize(records: &[Record]) -> BTreeMap<String, Vec<Row>> {
    // (recipe, hash, metric) -> seed -> (step, value) at the largest step
    let mut last: BTreeMap<(&str, &str, &str), BTreeMap<u64, (u64, f64)>> = BTreeMap::new();
    for r in records {
        let per_seed = last.entry((&r.recipe, &r.params_hash, &r.metric)).or_default();
        let e = per_seed.entry(r.seed).or_insert((r.step, r.value));
        if r.step >= e.0 {
            *e = (r.step, r.value);
        }
    }
    let mut out: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    for ((recipe, hash, metric), per_seed) in last {
        let values: Vec<f64> = per_seed.values().map(|&(_, v)| v).collect();
        let step = per_seed.values().map(|&(s, _)| s).max().unwrap_or(0);
        let (mean, ci95) = mean_ci(&values);
        out.entry(recipe.to_string()).or_default().push(Row {
            params_hash: hash.to_string(),
            metric: metric.to_string(),
            step,
            n: values.len(),
            mean,
            ci95,
        });
    }
    out
}

/// Position and short description of each point from the manifest, when
/// one is present.
fn labels(dir: &Path) -> BTreeMap<String, (usize, String)> {
    let mut out = BTreeMap::new();
    let Ok(text) = fs::read_to_string(dir.join("manifest.json")) else { return out };
    let Ok(v) = serde_json::from_str::<serde_json::Value>(&text) else { return out };
    for (i, p) in v["points"].as_array().into_iter().flatten().enumerate() {
        if let (Some(h), Some(obj)) = (p["params_hash"].as_str(), p["params"].as_object()) {
            let label = obj
                .iter()
                .filter(|(k, _)| matches!(k.as_str(), "d" | "init" | "loss" | "parity_degree" | "act" | "width" | "mu" | "a" | "sigma_b" | "junk_steps" | "budget"))
                .filter(|(_, v)| !v.is_null())
                .map(|(k, v)| match (k.as_str(), v) {
                    ("budget", b) => format!("n={}", b.get("n_samples").or(b.get("train_samples")).unwrap_or(&serde_json::Value::Null)),
                    (_, serde_json::Value::String(s)) => format!("{k}={s}"),
                    _ => format!("{k}={v}"),
                })
                .collect::<Vec<_>>()
                .join(" ");
            out.insert(h.to_string(), (i, label));
        }
    }
    out
}

/// Text tables; rows follow the manifest's point order when labels are given.
pub fn render(sections: &BTreeMap<String, Vec<Row>>, labels: &BTreeMap<String, (usize, String)>) -> String {
    let mut s = String::new();
    for (recipe, rows) in sections {
        let mut rows: Vec<&Row> = rows.iter().collect();
        rows.sort_by_key(|r| labels.get(&r.params_hash).map(|l| l.0).unwrap_or(usize::MAX));
        let _ = writeln!(s, "== {recipe} ==");
        let _ = writeln!(s, "{:<16}  {:<22}  {:>10}  {:>3}  {:>14}  {:>12}  params", "params_hash", "metric", "step", "n", "mean", "ci95");
        for r in rows {
            let ci = r.ci95.map(|c| format!("{c:.6e}")).unwrap_or_else(|| UNDEFINED.to_string());
            let label = labels.get(&r.params_hash).map(|l| l.1.as_str()).unwrap_or("");
            let _ = writeln!(s, "{:<16}  {:<22}  {:>10}  {:>3}  {:>14.6e}  {:>12}  {label}", r.params_hash, r.metric, r.step, r.n, r.mean, ci);
        }
        s.push('\n');
    }
    s
}

/// The report for `dir`; missing or unparsable records are config errors.
pub fn report(dir: &Path) -> Result<String, LabError> {
    let path = dir.join("records.csv");
    let file = fs::File::open(&path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
    let records = read_records(file).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
    if records.is_empty() {
        return Err(LabError::Config(format!("{}: no records", path.display())));
    }
    Ok(render(&summarize(&records), &labels(dir)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(recipe: &str, hash: &str, seed: u64, step: u64, value: f64) -> Record {
        Record { recipe: recipe.into(), params_hash: hash.into(), seed, step, metric: "test_accuracy".into(), value }
    }

    #[test]
    fn interval_matches_hand_computation() {
        let (m, ci) = mean_ci(&[0.9, 1.0, 0.8]);
        assert!((m - 0.9).abs() < 1e-15);
        // s = 0.1, 1.96 * 0.1 / √3
        assert!((ci.unwrap() - 0.113_160_652_761_166_7).abs() < 1e-12);
        assert_eq!(mean_ci(&[0.5]), (0.5, None));
    }

    #[test]
    fn last_step_per_seed_is_used() {
        let recs = vec![rec("a", "h", 1, 0, 0.5), rec("a", "h", 1, 64, 0.75), rec("a", "h", 2, 64, 0.25), rec("a", "h", 2, 0, 0.9)];
        let s = summarize(&recs);
        let row = &s["a"][0];
        assert_eq!((row.n, row.step), (2, 64));
        assert!((row.mean - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_seed_prints_undefined_and_sections_group() {
        let recs = vec![rec("b", "h2", 1, 1, 0.5), rec("a", "h1", 1, 1, 0.5), rec("a", "h1", 2, 1, 0.7)];
        let s = summarize(&recs);
        assert_eq!(s.keys().collect::<Vec<_>>(), vec!["a", "b"]);
        let text = render(&s, &BTreeMap::new());
        let b_section = text.split("== b ==").nth(1).unwrap();
        assert!(b_section.contains(UNDEFINED));
        assert!(!text.split("== b ==").next().unwrap().contains(UNDEFINED));
    }
}
