//! Dataset ingestion: CSV files with a declared schema, or the bundled
//! synthetic generators.
//!
//! CSV handling follows the usual preprocessing pipeline: a seeded
//! subsample without replacement is drawn first (shared by every run of a
//! grid), then numeric feature columns are min-max scaled to `[0, 1]` over
//! the kept rows and non-numeric feature columns are one-hot encoded.
//! Sensitive columns are parsed into the group structure only — they never
//! enter the feature space.

use std::collections::BTreeSet;
use std::path::Path;

use minirel::model::{Dataset, GroupStructure};
use minirel::synth::{six_point_line, skewed_blobs, theorem_gap_instance, BlobConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{DatasetConfig, SchemaConfig};
use crate::CliError;

/// A named, fully preprocessed dataset.
pub struct LoadedDataset {
    pub name: String,
    pub dataset: Dataset,
    pub groups: GroupStructure,
}

/// Loads the dataset described by the config (CSV or builtin).
pub fn load(
    config: &DatasetConfig,
    schema: Option<&SchemaConfig>,
) -> Result<LoadedDataset, CliError> {
    match config.source.as_str() {
        "csv" => {
            let path = config
                .path
                .as_ref()
                .ok_or_else(|| CliError::Config("csv dataset needs `path`".into()))?;
            let schema = schema
                .ok_or_else(|| CliError::Config("csv dataset needs a [schema]".into()))?;
            let name = config.name.clone().unwrap_or_else(|| {
                path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            });
            let (dataset, groups) = load_csv(
                path,
                schema,
                config.subsample,
                config.subsample_seed.unwrap_or(0),
            )?;
            Ok(LoadedDataset { name, dataset, groups })
        }
        "blobs" => {
            let blob_config = BlobConfig {
                blobs: config.blobs.unwrap_or(3),
                per_blob: config.per_blob.unwrap_or(60),
                dim: config.dim.unwrap_or(2),
                n_groups: config.n_groups.unwrap_or(2),
                skew: config.skew.unwrap_or(0.85),
                separation: config.separation.unwrap_or(10.0),
                spread: config.spread.unwrap_or(1.0),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(config.synth_seed.unwrap_or(7));
            let (dataset, groups) = skewed_blobs(&blob_config, &mut rng)
                .map_err(|e| CliError::Config(format!("blob generator: {e}")))?;
            Ok(LoadedDataset {
                name: config.name.clone().unwrap_or_else(|| "blobs".into()),
                dataset,
                groups,
            })
        }
        "six-line" => {
            let (problem, _) = six_point_line();
            Ok(LoadedDataset {
                name: config.name.clone().unwrap_or_else(|| "six-line".into()),
                dataset: problem.dataset,
                groups: problem.groups,
            })
        }
        "theorem-gap" => {
            let (problem, _) = theorem_gap_instance(10.0, 1.0);
            Ok(LoadedDataset {
                name: config.name.clone().unwrap_or_else(|| "theorem-gap".into()),
                dataset: problem.dataset,
                groups: problem.groups,
            })
        }
        other => Err(CliError::Config(format!("unknown dataset source `{other}`"))),
    }
}

/// Reads a CSV with header, applies the schema, subsamples, and scales.
pub fn load_csv(
    path: &Path,
    schema: &SchemaConfig,
    subsample: Option<usize>,
    subsample_seed: u64,
) -> Result<(Dataset, GroupStructure), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    let headers: Vec<String> =
        reader.headers().map_err(|e| parse_error(path, 1, &e.to_string()))?.iter()
            .map(|h| h.trim().to_string())
            .collect();

    let column_of = |name: &str| -> Result<usize, CliError> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Config(format!("column `{name}` missing from {}", path.display()))
        })
    };
    let feature_cols: Vec<usize> =
        schema.features.iter().map(|f| column_of(f)).collect::<Result<_, _>>()?;
    let sensitive_cols: Vec<usize> =
        schema.sensitive.iter().map(|s| column_of(s)).collect::<Result<_, _>>()?;
    for d in &schema.drop {
        column_of(d)?; // fail fast on a typo even though the column is unused
    }

    // Raw string table of the needed columns, with source line numbers.
    let mut rows: Vec<(u64, Vec<String>, Vec<String>)> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_error(path, idx as u64 + 2, &e.to_string()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(idx as u64 + 2);
        let fetch = |cols: &[usize]| -> Result<Vec<String>, CliError> {
            cols.iter()
                .map(|&c| {
                    record
                        .get(c)
                        .map(|v| v.trim().to_string())
                        .ok_or_else(|| parse_error(path, line, "row is short a column"))
                })
                .collect()
        };
        rows.push((line, fetch(&feature_cols)?, fetch(&sensitive_cols)?));
    }
    if rows.is_empty() {
        return Err(CliError::Config(format!("{} has no data rows", path.display())));
    }

    // Seeded subsample without replacement, kept in file order so every
    // strategy of a grid sees the same rows.
    if let Some(m) = subsample {
        if m == 0 {
            return Err(CliError::Config("subsample must be ≥ 1".into()));
        }
        if m < rows.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(subsample_seed);
            let mut keep: Vec<usize> =
                rand::seq::index::sample(&mut rng, rows.len(), m).into_iter().collect();
            keep.sort_unstable();
            rows = keep.into_iter().map(|i| rows[i].clone()).collect();
        }
    }

    // Column typing: numeric iff every value parses as a float.
    let n = rows.len();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (j, feature_name) in schema.features.iter().enumerate() {
        let raw: Vec<&str> = rows.iter().map(|(_, f, _)| f[j].as_str()).collect();
        let parsed: Option<Vec<f64>> = raw.iter().map(|v| v.parse::<f64>().ok()).collect();
        match parsed {
            Some(mut values) => {
                if values.iter().any(|v| !v.is_finite()) {
                    let (line, _, _) = rows[values.iter().position(|v| !v.is_finite()).unwrap()];
                    return Err(parse_error(
                        path,
                        line,
                        &format!("column `{feature_name}` has a non-finite value"),
                    ));
                }
                min_max_scale(&mut values);
                columns.push(values);
            }
            None => {
                // Mixed numeric/text columns are rejected rather than
                // silently one-hot encoded: a stray value in a numeric
                // column is almost always a data bug.
                let numeric_count = raw.iter().filter(|v| v.parse::<f64>().is_ok()).count();
                if numeric_count > 0 {
                    let bad = raw.iter().position(|v| v.parse::<f64>().is_err()).unwrap();
                    return Err(parse_error(
                        path,
                        rows[bad].0,
                        &format!(
                            "column `{feature_name}`: cannot parse `{}` as a number",
                            raw[bad]
                        ),
                    ));
                }
                // Fully categorical: one-hot over the sorted label set.
                let labels: BTreeSet<&str> = raw.iter().copied().collect();
                for label in labels {
                    columns
                        .push(raw.iter().map(|v| if *v == label { 1.0 } else { 0.0 }).collect());
                }
            }
        }
    }

    let points: Vec<Vec<f64>> =
        (0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
    let dataset =
        Dataset::new(points).map_err(|e| CliError::Config(format!("dataset: {e}")))?;

    let features: Vec<(String, Vec<String>)> = schema
        .sensitive
        .iter()
        .enumerate()
        .map(|(j, name)| {
            (name.clone(), rows.iter().map(|(_, _, s)| s[j].clone()).collect())
        })
        .collect();
    let groups = GroupStructure::from_labels(features)
        .map_err(|e| CliError::Config(format!("sensitive columns: {e}")))?;
    Ok((dataset, groups))
}

/// In-place min-max scaling to `[0, 1]`; constant columns collapse to 0.
fn min_max_scale(values: &mut [f64]) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        for v in values.iter_mut() {
            *v = (*v - lo) / (hi - lo);
        }
    } else {
        values.fill(0.0);
    }
}

fn parse_error(path: &Path, line: u64, detail: &str) -> CliError {
    CliError::Config(format!("{}:{line}: {detail}", path.display()))
}
