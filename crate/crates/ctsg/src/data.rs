//! Dataset container, CSV/JSON formats, normalization, and splits.
//!
//! On-disk layout (all shapes validated on load, every malformed cell
//! reported with its row and column):
//!
//! * series CSV — wide, one series per row: `id,v1,...,v{T*d_r}`,
//!   time-major and channel-minor, values written with 17 significant
//!   digits so a save/load round trip is bit-exact;
//! * conditions CSV — `id,<slot names per schema>`; numeric cells use the
//!   same 17-digit format, categorical cells hold the raw token;
//! * schema JSON — `{"channels": d_r, "slots": [{"name", "kind",
//!   "vocabulary"?, "ordinal"?}]}`.

use std::fs;
use std::path::Path;

use ctsg_core::{ConditionSchema, ConditionValue, ConditionVector, Slot, SlotKind, TimeSeries};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, json_err, CtsgError, Result};

/// Series, their condition vectors, and the shared schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    series: Vec<TimeSeries>,
    conditions: Vec<ConditionVector>,
    schema: ConditionSchema,
}

impl Dataset {
    pub fn new(
        series: Vec<TimeSeries>,
        conditions: Vec<ConditionVector>,
        schema: ConditionSchema,
    ) -> Result<Self> {
        if series.is_empty() {
            return Err(CtsgError::invalid("dataset has no series"));
        }
        if series.len() != conditions.len() {
            return Err(CtsgError::invalid(format!(
                "{} series but {} condition rows",
                series.len(),
                conditions.len()
            )));
        }
        let (len, channels) = (series[0].len(), series[0].channels());
        for (i, s) in series.iter().enumerate() {
            if s.len() != len || s.channels() != channels {
                return Err(CtsgError::invalid(format!(
                    "series {i} has shape {}x{}, expected {len}x{channels}",
                    s.len(),
                    s.channels()
                )));
            }
        }
        schema.validate_all(&conditions).map_err(CtsgError::Core)?;
        Ok(Dataset {
            series,
            conditions,
            schema,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.series.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    #[inline]
    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    #[inline]
    pub fn conditions(&self) -> &[ConditionVector] {
        &self.conditions
    }

    #[inline]
    pub fn schema(&self) -> &ConditionSchema {
        &self.schema
    }

    #[inline]
    pub fn series_len(&self) -> usize {
        self.series[0].len()
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.series[0].channels()
    }

    /// Rows selected by index, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let series = indices.iter().map(|&i| self.series[i].clone()).collect();
        let conditions = indices.iter().map(|&i| self.conditions[i].clone()).collect();
        Dataset::new(series, conditions, self.schema.clone())
    }

    /// Concatenate datasets with identical schemas and series shapes.
    pub fn concat(parts: &[Dataset]) -> Result<Dataset> {
        let first = parts
            .first()
            .ok_or_else(|| CtsgError::invalid("concat of zero datasets"))?;
        let mut series = Vec::new();
        let mut conditions = Vec::new();
        for part in parts {
            if part.schema != first.schema {
                return Err(CtsgError::invalid("concat requires identical schemas"));
            }
            series.extend(part.series.iter().cloned());
            conditions.extend(part.conditions.iter().cloned());
        }
        Dataset::new(series, conditions, first.schema.clone())
    }
}

// ---------------------------------------------------------------------------
// Schema JSON
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlotDoc {
    pub name: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordinal: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaFileDoc {
    #[serde(default = "default_channels")]
    pub channels: usize,
    pub slots: Vec<SlotDoc>,
}

fn default_channels() -> usize {
    1
}

pub fn slot_to_doc(slot: &Slot) -> SlotDoc {
    match &slot.kind {
        SlotKind::Numeric => SlotDoc {
            name: slot.name.clone(),
            kind: "numeric".to_string(),
            vocabulary: None,
            ordinal: None,
        },
        SlotKind::Categorical {
            vocabulary,
            ordinal,
        } => SlotDoc {
            name: slot.name.clone(),
            kind: "categorical".to_string(),
            vocabulary: Some(vocabulary.clone()),
            ordinal: Some(*ordinal),
        },
    }
}

pub fn slot_from_doc(doc: &SlotDoc) -> Result<Slot> {
    match doc.kind.as_str() {
        "numeric" => Ok(Slot {
            name: doc.name.clone(),
            kind: SlotKind::Numeric,
        }),
        "categorical" => {
            let vocabulary = doc.vocabulary.clone().ok_or_else(|| {
                CtsgError::invalid(format!(
                    "categorical slot {:?} is missing its vocabulary",
                    doc.name
                ))
            })?;
            Ok(Slot {
                name: doc.name.clone(),
                kind: SlotKind::Categorical {
                    vocabulary,
                    ordinal: doc.ordinal.unwrap_or(false),
                },
            })
        }
        other => Err(CtsgError::invalid(format!(
            "slot {:?} has unknown kind {other:?}",
            doc.name
        ))),
    }
}

pub fn schema_to_docs(schema: &ConditionSchema) -> Vec<SlotDoc> {
    schema.slots().iter().map(slot_to_doc).collect()
}

pub fn schema_from_docs(docs: &[SlotDoc]) -> Result<ConditionSchema> {
    let slots: Result<Vec<Slot>> = docs.iter().map(slot_from_doc).collect();
    ConditionSchema::new(slots?).map_err(CtsgError::Core)
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// 17 significant digits: enough for a bit-exact f64 round trip.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_cell(path: &Path, row: usize, column: usize, cell: &str) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .map_err(|_| CtsgError::Malformed {
            path: path.display().to_string(),
            row,
            column,
            message: format!("expected a number, got {cell:?}"),
        })
        .and_then(|v| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(CtsgError::Malformed {
                    path: path.display().to_string(),
                    row,
                    column,
                    message: format!("non-finite value {cell:?}"),
                })
            }
        })
}

fn read_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|c| c.trim().to_string()).collect())
        .collect())
}

/// Load a dataset from the three files, keeping only rows the filter
/// accepts. The filter sees the 0-based row index and the parsed condition
/// vector; `|_, _| true` loads everything.
pub fn load_csv_filtered<F>(
    series_path: &Path,
    conditions_path: &Path,
    schema_path: &Path,
    mut filter: F,
) -> Result<Dataset>
where
    F: FnMut(usize, &ConditionVector) -> bool,
{
    let schema_text = fs::read_to_string(schema_path).map_err(|e| io_err(schema_path, e))?;
    let schema_doc: SchemaFileDoc =
        serde_json::from_str(&schema_text).map_err(|e| json_err("schema file", e))?;
    if schema_doc.channels == 0 {
        return Err(CtsgError::invalid("schema channels must be positive"));
    }
    let schema = schema_from_docs(&schema_doc.slots)?;
    let channels = schema_doc.channels;

    let series_rows = read_rows(series_path)?;
    let cond_rows = read_rows(conditions_path)?;
    if series_rows.len() < 2 || cond_rows.len() < 2 {
        return Err(CtsgError::invalid(
            "series and conditions files need a header plus at least one row",
        ));
    }
    let (series_header, series_rows) = series_rows.split_first().unwrap();
    let (cond_header, cond_rows) = cond_rows.split_first().unwrap();
    if series_header.first().map(String::as_str) != Some("id") {
        return Err(CtsgError::Malformed {
            path: series_path.display().to_string(),
            row: 0,
            column: 1,
            message: "header must start with 'id'".to_string(),
        });
    }
    let expected_cond_header: Vec<&str> = std::iter::once("id")
        .chain(schema.slots().iter().map(|s| s.name.as_str()))
        .collect();
    let got_cond_header: Vec<&str> = cond_header.iter().map(String::as_str).collect();
    if got_cond_header != expected_cond_header {
        return Err(CtsgError::invalid(format!(
            "conditions header {got_cond_header:?} does not match schema {expected_cond_header:?}"
        )));
    }
    if series_rows.len() != cond_rows.len() {
        return Err(CtsgError::invalid(format!(
            "{} series rows but {} condition rows",
            series_rows.len(),
            cond_rows.len()
        )));
    }

    let width = series_header.len() - 1;
    if width == 0 {
        return Err(CtsgError::invalid("series file has no value columns"));
    }
    if width % channels != 0 {
        return Err(CtsgError::invalid(format!(
            "series width {width} is not divisible by {channels} channels"
        )));
    }
    let series_len = width / channels;

    let mut series = Vec::new();
    let mut conditions = Vec::new();
    for (i, (srow, crow)) in series_rows.iter().zip(cond_rows.iter()).enumerate() {
        let row_no = i + 1;
        if srow.len() != width + 1 {
            return Err(CtsgError::Malformed {
                path: series_path.display().to_string(),
                row: row_no,
                column: srow.len(),
                message: format!("expected {} cells, got {}", width + 1, srow.len()),
            });
        }
        if srow[0] != crow[0] {
            return Err(CtsgError::invalid(format!(
                "row {row_no}: series id {:?} does not match conditions id {:?}",
                srow[0], crow[0]
            )));
        }
        if crow.len() != schema.len() + 1 {
            return Err(CtsgError::Malformed {
                path: conditions_path.display().to_string(),
                row: row_no,
                column: crow.len(),
                message: format!("expected {} cells, got {}", schema.len() + 1, crow.len()),
            });
        }
        let mut values = Vec::with_capacity(width);
        for (j, cell) in srow[1..].iter().enumerate() {
            values.push(parse_cell(series_path, row_no, j + 2, cell)?);
        }
        let mut slots = Vec::with_capacity(schema.len());
        for (j, cell) in crow[1..].iter().enumerate() {
            let value = match schema.slot(j).kind {
                SlotKind::Numeric => {
                    ConditionValue::Numeric(parse_cell(conditions_path, row_no, j + 2, cell)?)
                }
                SlotKind::Categorical { .. } => ConditionValue::Category(cell.clone()),
            };
            slots.push(value);
        }
        let condition = ConditionVector::new(slots);
        schema.validate(&condition).map_err(|e| CtsgError::Malformed {
            path: conditions_path.display().to_string(),
            row: row_no,
            column: 0,
            message: e.to_string(),
        })?;
        if !filter(i, &condition) {
            continue;
        }
        series.push(
            TimeSeries::new(values, series_len, channels).map_err(|e| CtsgError::Malformed {
                path: series_path.display().to_string(),
                row: row_no,
                column: 0,
                message: e.to_string(),
            })?,
        );
        conditions.push(condition);
    }
    Dataset::new(series, conditions, schema)
}

pub fn load_csv(series_path: &Path, conditions_path: &Path, schema_path: &Path) -> Result<Dataset> {
    load_csv_filtered(series_path, conditions_path, schema_path, |_, _| true)
}

/// Write the three files into `dir` as `series.csv`, `conditions.csv`, and
/// `schema.json`.
pub fn save_csv(dataset: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let width = dataset.series_len() * dataset.channels();

    let mut series_text = String::from("id");
    for j in 1..=width {
        series_text.push_str(&format!(",v{j}"));
    }
    series_text.push('\n');
    for (i, s) in dataset.series().iter().enumerate() {
        series_text.push_str(&i.to_string());
        for v in s.values() {
            series_text.push(',');
            series_text.push_str(&format_value(*v));
        }
        series_text.push('\n');
    }
    let series_path = dir.join("series.csv");
    fs::write(&series_path, series_text).map_err(|e| io_err(&series_path, e))?;

    let mut cond_text = String::from("id");
    for slot in dataset.schema().slots() {
        if slot.name.contains(',') || slot.name.contains('\n') {
            return Err(CtsgError::invalid(format!(
                "slot name {:?} cannot be written to csv",
                slot.name
            )));
        }
        cond_text.push(',');
        cond_text.push_str(&slot.name);
    }
    cond_text.push('\n');
    for (i, c) in dataset.conditions().iter().enumerate() {
        cond_text.push_str(&i.to_string());
        for value in c.values() {
            cond_text.push(',');
            match value {
                ConditionValue::Numeric(v) => cond_text.push_str(&format_value(*v)),
                ConditionValue::Category(tok) => {
                    if tok.contains(',') || tok.contains('\n') {
                        return Err(CtsgError::invalid(format!(
                            "category token {tok:?} cannot be written to csv"
                        )));
                    }
                    cond_text.push_str(tok);
                }
            }
        }
        cond_text.push('\n');
    }
    let cond_path = dir.join("conditions.csv");
    fs::write(&cond_path, cond_text).map_err(|e| io_err(&cond_path, e))?;

    let schema_doc = SchemaFileDoc {
        channels: dataset.channels(),
        slots: schema_to_docs(dataset.schema()),
    };
    let schema_path = dir.join("schema.json");
    let schema_text =
        serde_json::to_string_pretty(&schema_doc).map_err(|e| json_err("schema file", e))?;
    fs::write(&schema_path, schema_text).map_err(|e| io_err(&schema_path, e))?;
    Ok(())
}

/// Load a dataset from a directory produced by [`save_csv`].
pub fn load_dir(dir: &Path) -> Result<Dataset> {
    load_csv(
        &dir.join("series.csv"),
        &dir.join("conditions.csv"),
        &dir.join("schema.json"),
    )
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// Per-channel and per-numeric-slot min-max ranges; the inverse map for
/// generated output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationMeta {
    /// `(min, max)` per series channel.
    pub channel_ranges: Vec<(f64, f64)>,
    /// `(min, max)` per condition slot; `None` for categorical slots.
    pub slot_ranges: Vec<Option<(f64, f64)>>,
}

fn scale_to_unit(v: f64, (min, max): (f64, f64)) -> f64 {
    if max > min {
        (v - min) / (max - min)
    } else {
        // Constant channel maps to zero.
        0.0
    }
}

fn scale_from_unit(v: f64, (min, max): (f64, f64)) -> f64 {
    if max > min {
        v * (max - min) + min
    } else {
        min
    }
}

/// Min-max normalize every channel and numeric condition slot to `[0, 1]`
/// over the dataset (values outside the observed range map linearly beyond
/// the unit interval, which is what condition extrapolation relies on).
pub fn normalize(dataset: &Dataset) -> (Dataset, NormalizationMeta) {
    let channels = dataset.channels();
    let mut channel_ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); channels];
    for s in dataset.series() {
        for (i, &v) in s.values().iter().enumerate() {
            let range = &mut channel_ranges[i % channels];
            range.0 = range.0.min(v);
            range.1 = range.1.max(v);
        }
    }
    let mut slot_ranges = vec![None; dataset.schema().len()];
    for (j, slot) in dataset.schema().slots().iter().enumerate() {
        if slot.is_numeric() {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for c in dataset.conditions() {
                let v = c.value(j).as_numeric().unwrap();
                lo = lo.min(v);
                hi = hi.max(v);
            }
            slot_ranges[j] = Some((lo, hi));
        }
    }
    let meta = NormalizationMeta {
        channel_ranges,
        slot_ranges,
    };
    let series = dataset
        .series()
        .iter()
        .map(|s| normalize_series(s, &meta).expect("shape checked by dataset"))
        .collect();
    let conditions = dataset
        .conditions()
        .iter()
        .map(|c| normalize_condition(c, &meta))
        .collect();
    let normalized = Dataset::new(series, conditions, dataset.schema().clone())
        .expect("normalization preserves shapes");
    (normalized, meta)
}

pub fn normalize_series(x: &TimeSeries, meta: &NormalizationMeta) -> Result<TimeSeries> {
    if x.channels() != meta.channel_ranges.len() {
        return Err(CtsgError::invalid(format!(
            "series has {} channels, normalization metadata has {}",
            x.channels(),
            meta.channel_ranges.len()
        )));
    }
    let channels = x.channels();
    let values: Vec<f64> = x
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| scale_to_unit(v, meta.channel_ranges[i % channels]))
        .collect();
    TimeSeries::new(values, x.len(), channels).map_err(CtsgError::Core)
}

pub fn denormalize_series(x: &TimeSeries, meta: &NormalizationMeta) -> Result<TimeSeries> {
    if x.channels() != meta.channel_ranges.len() {
        return Err(CtsgError::invalid(format!(
            "series has {} channels, normalization metadata has {}",
            x.channels(),
            meta.channel_ranges.len()
        )));
    }
    let channels = x.channels();
    let values: Vec<f64> = x
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| scale_from_unit(v, meta.channel_ranges[i % channels]))
        .collect();
    TimeSeries::new(values, x.len(), channels).map_err(CtsgError::Core)
}

pub fn normalize_condition(c: &ConditionVector, meta: &NormalizationMeta) -> ConditionVector {
    let values = c
        .values()
        .iter()
        .enumerate()
        .map(|(j, value)| match (value, meta.slot_ranges.get(j)) {
            (ConditionValue::Numeric(v), Some(Some(range))) => {
                ConditionValue::Numeric(scale_to_unit(*v, *range))
            }
            _ => value.clone(),
        })
        .collect();
    ConditionVector::new(values)
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

/// Seeded shuffle split into three parts; sizes are the rounded fractions
/// (within one element), the last part takes the remainder.
pub fn split(
    dataset: &Dataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    let (f1, f2, f3) = fractions;
    if f1 < 0.0 || f2 < 0.0 || f3 < 0.0 || (f1 + f2 + f3 - 1.0).abs() > 1e-9 {
        return Err(CtsgError::invalid(format!(
            "split fractions must be nonnegative and sum to 1, got {fractions:?}"
        )));
    }
    let n = dataset.len();
    let mut indices: Vec<usize> = (0..n).collect();
    ctsg_core::rng::SeedRng::new(seed).shuffle(&mut indices);
    let n1 = ((f1 * n as f64).round() as usize).min(n);
    let n2 = ((f2 * n as f64).round() as usize).min(n - n1);
    let (a, rest) = indices.split_at(n1);
    let (b, c) = rest.split_at(n2);
    if a.is_empty() || b.is_empty() || c.is_empty() {
        return Err(CtsgError::invalid(format!(
            "split {fractions:?} of {n} rows leaves an empty part"
        )));
    }
    Ok((dataset.subset(a)?, dataset.subset(b)?, dataset.subset(c)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ctsg_core::rng::SeedRng;
    use tempfile::TempDir;

    fn small_dataset() -> Dataset {
        let schema = ConditionSchema::new(vec![
            Slot::numeric("level"),
            Slot::categorical("state", &["on", "off"]),
        ])
        .unwrap();
        let mut rng = SeedRng::new(1);
        let series: Vec<TimeSeries> = (0..6)
            .map(|_| {
                TimeSeries::new(
                    (0..8).map(|_| rng.uniform_in(-2.0, 5.0)).collect(),
                    4,
                    2,
                )
                .unwrap()
            })
            .collect();
        let conditions: Vec<ConditionVector> = (0..6)
            .map(|i| {
                ConditionVector::new(vec![
                    ConditionValue::Numeric(i as f64 * 1.5 - 2.0),
                    ConditionValue::Category(
                        if i % 2 == 0 { "on" } else { "off" }.to_string(),
                    ),
                ])
            })
            .collect();
        Dataset::new(series, conditions, schema).unwrap()
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dataset = small_dataset();
        let dir = TempDir::new().unwrap();
        save_csv(&dataset, dir.path()).unwrap();
        let loaded = load_dir(dir.path()).unwrap();
        assert_eq!(dataset, loaded);
    }

    #[test]
    fn tiny_literal_load() {
        let dir = TempDir::new().unwrap();
        std::fs::write(
            dir.path().join("series.csv"),
            "id,v1,v2,v3\n0,1.0,2.0,3.0\n1,4.0,5.0,6.0\n",
        )
        .unwrap();
        std::fs::write(dir.path().join("conditions.csv"), "id,a\n0,0.5\n1,0.7\n").unwrap();
        std::fs::write(
            dir.path().join("schema.json"),
            r#"{"channels":1,"slots":[{"name":"a","kind":"numeric"}]}"#,
        )
        .unwrap();
        let dataset = load_dir(dir.path()).unwrap();
        assert_eq!(dataset.len(), 2);
        assert_eq!(dataset.series_len(), 3);
        assert_eq!(dataset.channels(), 1);
        assert_eq!(dataset.series()[1].values(), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn mismatched_row_counts_report_both() {
        let dir = TempDir::new().unwrap();
        std::fs::write(dir.path().join("series.csv"), "id,v1\n0,1.0\n1,2.0\n").unwrap();
        std::fs::write(dir.path().join("conditions.csv"), "id,a\n0,0.5\n").unwrap();
        std::fs::write(
            dir.path().join("schema.json"),
            r#"{"channels":1,"slots":[{"name":"a","kind":"numeric"}]}"#,
        )
        .unwrap();
        let err = load_dir(dir.path()).unwrap_err().to_string();
        assert!(err.contains('2') && err.contains('1'), "{err}");
    }

    #[test]
    fn ragged_row_names_row_and_column() {
        let dir = TempDir::new().unwrap();
        std::fs::write(dir.path().join("series.csv"), "id,v1,v2\n0,1.0\n").unwrap();
        std::fs::write(dir.path().join("conditions.csv"), "id,a\n0,0.5\n").unwrap();
        std::fs::write(
            dir.path().join("schema.json"),
            r#"{"channels":1,"slots":[{"name":"a","kind":"numeric"}]}"#,
        )
        .unwrap();
        match load_dir(dir.path()).unwrap_err() {
            CtsgError::Malformed { row, .. } => assert_eq!(row, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_names_position() {
        let dir = TempDir::new().unwrap();
        std::fs::write(dir.path().join("series.csv"), "id,v1\n0,1.0\n").unwrap();
        std::fs::write(dir.path().join("conditions.csv"), "id,a\n0,banana\n").unwrap();
        std::fs::write(
            dir.path().join("schema.json"),
            r#"{"channels":1,"slots":[{"name":"a","kind":"numeric"}]}"#,
        )
        .unwrap();
        match load_dir(dir.path()).unwrap_err() {
            CtsgError::Malformed { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, 2);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn row_filter_drops_rows() {
        let dataset = small_dataset();
        let dir = TempDir::new().unwrap();
        save_csv(&dataset, dir.path()).unwrap();
        let loaded = load_csv_filtered(
            &dir.path().join("series.csv"),
            &dir.path().join("conditions.csv"),
            &dir.path().join("schema.json"),
            |_, c| c.value(1).as_category() == Some("on"),
        )
        .unwrap();
        assert_eq!(loaded.len(), 3);
    }

    #[test]
    fn normalization_round_trip() {
        let dataset = small_dataset();
        let (normalized, meta) = normalize(&dataset);
        for (orig, norm) in dataset.series().iter().zip(normalized.series().iter()) {
            let back = denormalize_series(norm, &meta).unwrap();
            for (a, b) in orig.values().iter().zip(back.values().iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normalization_maps_extremes_to_unit_interval() {
        let dataset = small_dataset();
        let (normalized, _) = normalize(&dataset);
        for c in 0..dataset.channels() {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for s in normalized.series() {
                for t in 0..s.len() {
                    lo = lo.min(s.value(t, c));
                    hi = hi.max(s.value(t, c));
                }
            }
            assert!((lo - 0.0).abs() < 1e-12);
            assert!((hi - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_channel_normalizes_to_zero() {
        let schema = ConditionSchema::new(vec![Slot::numeric("a")]).unwrap();
        let series = vec![
            TimeSeries::univariate(&[4.0, 4.0, 4.0]).unwrap(),
            TimeSeries::univariate(&[4.0, 4.0, 4.0]).unwrap(),
        ];
        let conditions = vec![
            ConditionVector::numeric(&[1.0]),
            ConditionVector::numeric(&[2.0]),
        ];
        let dataset = Dataset::new(series, conditions, schema).unwrap();
        let (normalized, meta) = normalize(&dataset);
        assert!(normalized.series()[0].values().iter().all(|&v| v == 0.0));
        let back = denormalize_series(&normalized.series()[0], &meta).unwrap();
        assert!(back.values().iter().all(|&v| v == 4.0));
    }

    #[test]
    fn split_covers_disjointly_and_deterministically() {
        let dataset = small_dataset();
        let (a, b, c) = split(&dataset, (0.5, 0.25, 0.25), 9).unwrap();
        assert_eq!(a.len() + b.len() + c.len(), dataset.len());
        let (a2, b2, c2) = split(&dataset, (0.5, 0.25, 0.25), 9).unwrap();
        assert_eq!(a, a2);
        assert_eq!(b, b2);
        assert_eq!(c, c2);
        // Disjoint cover: every original series appears exactly once.
        let mut seen = Vec::new();
        for part in [&a, &b, &c] {
            for s in part.series() {
                seen.push(s.clone());
            }
        }
        for s in dataset.series() {
            assert_eq!(seen.iter().filter(|x| *x == s).count(), 1);
        }
    }

    #[test]
    fn split_sizes_track_fractions() {
        let dataset = small_dataset();
        let (a, b, c) = split(&dataset, (0.6, 0.2, 0.2), 3).unwrap();
        // 6 rows: expect about 3.6 / 1.2 / 1.2, within one element.
        assert!((a.len() as f64 - 3.6).abs() <= 1.0);
        assert!((b.len() as f64 - 1.2).abs() <= 1.0);
        assert!((c.len() as f64 - 1.2).abs() <= 1.0);
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let dataset = small_dataset();
        assert!(split(&dataset, (0.5, 0.2, 0.2), 0).is_err());
    }
}
