//! The `records.csv` schema: `recipe,params_hash,seed,step,metric,value`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub const HEADER: [&str; 6] = ["recipe", "params_hash", "seed", "step", "metric", "value"];

/// Registered metric names. `step` is the x-axis of the metric: samples
/// seen for training curves, the input dimension for alignment scans and
/// the hidden width for width sweeps.
pub const METRICS: &[(&str, &str)] = &[
    ("test_accuracy", "held-out accuracy during training; step = samples seen"),
    ("train_loss", "mean batch loss since the previous evaluation; step = samples seen"),
    ("final_test_accuracy", "accuracy after offline training; step = training-set size"),
    ("train_steps", "SGD steps taken before the offline stopping rule; step = training-set size"),
    ("gal", "Monte-Carlo gradient alignment; step = d"),
    ("gal_se", "jackknife standard error of gal; step = d"),
    ("gal_exact", "exact Gaussian-init alignment, summed over parameters; step = d"),
    ("gal_exact_ln", "natural log of gal_exact; step = d"),
    ("gal_perturbed_hidden", "exact perturbed-init alignment, hidden layer; step = d"),
    ("gal_perturbed_output", "exact perturbed-init alignment, output layer; step = d"),
    ("accuracy", "accuracy on all 2^d inputs; step = hidden width"),
    ("zero_outputs", "inputs with output exactly 0; step = hidden width"),
];

pub fn is_registered(metric: &str) -> bool {
    METRICS.iter().any(|(m, _)| *m == metric)
}

/// One CSV row. A `value` of NaN is written as `NaN` and read back as NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub recipe: String,
    pub params_hash: String,
    pub seed: u64,
    pub step: u64,
    pub metric: String,
    pub value: f64,
}

pub fn write_records<W: Write>(out: W, records: &[Record]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Parse records, insisting on the exact header.
pub fn read_records<R: Read>(input: R) -> Result<Vec<Record>, String> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(format!("unexpected header {:?}, expected {}", header.iter().collect::<Vec<_>>(), HEADER.join(",")));
    }
    let mut out = Vec::new();
    for (i, row) in rd.deserialize::<Record>().enumerate() {
        // header is line 1
        out.push(row.map_err(|e| format!("row {}: {e}", i + 2))?);
    }
    Ok(out)
}
