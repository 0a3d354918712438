//! Dataset ingestion: CSV and sparse LibSVM readers, class grouping and
//! per-class subsampling.
//!
//! CSV is RFC-4180-style with `.` decimal separator, UTF-8; lines starting
//! with `#` are skipped. LibSVM lines are `label idx:val idx:val ...` with
//! 1-based strictly increasing indices; the dense width is the maximum
//! index observed in the file.

use crate::rng::{derive_seed, stream};
use crate::{Error, Result, Sample};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

#[derive(Debug, Clone)]
pub struct LabeledDataset {
    points: Sample,
    labels: Vec<String>,
    class_index: BTreeMap<String, Vec<usize>>,
    feature_names: Option<Vec<String>>,
}

impl LabeledDataset {
    pub fn new(points: Sample, labels: Vec<String>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch(points.len(), labels.len()));
        }
        let mut class_index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, label) in labels.iter().enumerate() {
            class_index.entry(label.clone()).or_default().push(i);
        }
        Ok(LabeledDataset {
            points,
            labels,
            class_index,
            feature_names: None,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn points(&self) -> &Sample {
        &self.points
    }

    pub fn class_index(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.class_index
    }

    pub fn class_labels(&self) -> Vec<String> {
        self.class_index.keys().cloned().collect()
    }

    /// Rows of one class as a sample.
    pub fn class_sample(&self, label: &str) -> Result<Sample> {
        let idx = self
            .class_index
            .get(label)
            .ok_or_else(|| Error::InvalidPlan(format!("no class `{label}`")))?;
        Ok(self.points.select(idx))
    }

    /// (label, sample) pairs in label order, ready for a comparison plan.
    pub fn groups(&self) -> Vec<(String, Sample)> {
        self.class_index
            .iter()
            .map(|(label, idx)| (label.clone(), self.points.select(idx)))
            .collect()
    }

    /// Per-feature standardization to zero mean and unit variance.
    /// Never applied implicitly; kernel geometry changes under scaling.
    pub fn standardized(&self) -> LabeledDataset {
        let n = self.n_rows();
        let d = self.dim();
        let mut means = vec![0.0f64; d];
        for i in 0..n {
            for (m, v) in means.iter_mut().zip(self.points.point(i)) {
                *m += v;
            }
        }
        for m in means.iter_mut() {
            *m /= n as f64;
        }
        let mut vars = vec![0.0f64; d];
        for i in 0..n {
            for j in 0..d {
                let c = self.points.point(i)[j] - means[j];
                vars[j] += c * c;
            }
        }
        let sds: Vec<f64> = vars
            .iter()
            .map(|v| {
                let sd = (v / n as f64).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        let mut data = Vec::with_capacity(n * d);
        for i in 0..n {
            for j in 0..d {
                data.push((self.points.point(i)[j] - means[j]) / sds[j]);
            }
        }
        LabeledDataset {
            points: Sample::new(data, d).expect("finite by construction"),
            labels: self.labels.clone(),
            class_index: self.class_index.clone(),
            feature_names: self.feature_names.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut lines = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        lines.push(line);
    }
    Ok(lines)
}

/// Read a labeled dataset from CSV. Every non-label cell must parse as a
/// number; failures are reported with their (1-based) data row and the
/// column name or index.
pub fn read_csv(path: &Path, label_column: &LabelColumn, has_header: bool) -> Result<LabeledDataset> {
    let lines = read_lines(path)?;
    if lines.is_empty() {
        return Err(Error::EmptyFile(path.display().to_string()));
    }
    let joined = lines.join("\n");
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(joined.as_bytes());

    let mut records = rdr.records();
    let header: Option<Vec<String>> = if has_header {
        match records.next() {
            Some(rec) => {
                let rec = rec.map_err(|e| Error::CsvCell {
                    row: 0,
                    column: "<header>".into(),
                    message: e.to_string(),
                })?;
                Some(rec.iter().map(|s| s.trim().to_string()).collect())
            }
            None => return Err(Error::EmptyFile(path.display().to_string())),
        }
    } else {
        None
    };

    let label_idx = |width: usize| -> Result<usize> {
        match label_column {
            LabelColumn::Index(i) => {
                if *i >= width {
                    Err(Error::MissingLabelColumn(i.to_string()))
                } else {
                    Ok(*i)
                }
            }
            LabelColumn::Name(name) => header
                .as_ref()
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| Error::MissingLabelColumn(name.clone())),
        }
    };

    let column_name = |header: &Option<Vec<String>>, j: usize| -> String {
        header
            .as_ref()
            .and_then(|h| h.get(j).cloned())
            .unwrap_or_else(|| (j + 1).to_string())
    };

    let mut width: Option<usize> = None;
    let mut label_pos: Option<usize> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();

    for (data_row, rec) in records.enumerate() {
        let row_no = data_row + 1;
        let rec = rec.map_err(|e| Error::CsvCell {
            row: row_no,
            column: "<record>".into(),
            message: e.to_string(),
        })?;
        let w = rec.len();
        let expected = *width.get_or_insert(w);
        if w != expected {
            return Err(Error::RaggedRow {
                row: row_no,
                expected,
                got: w,
            });
        }
        let li = *match label_pos {
            Some(ref i) => i,
            None => label_pos.insert(label_idx(w)?),
        };
        let mut features = Vec::with_capacity(w - 1);
        for (j, cell) in rec.iter().enumerate() {
            if j == li {
                labels.push(cell.trim().to_string());
                continue;
            }
            let v: f64 = cell.trim().parse().map_err(|_| Error::CsvCell {
                row: row_no,
                column: column_name(&header, j),
                message: format!("`{}` is not numeric", cell.trim()),
            })?;
            features.push(v);
        }
        rows.push(features);
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile(path.display().to_string()));
    }
    let mut ds = LabeledDataset::new(Sample::from_rows(&rows)?, labels)?;
    ds.feature_names = header.map(|h| {
        let li = label_pos.expect("label position fixed");
        h.into_iter()
            .enumerate()
            .filter_map(|(j, name)| (j != li).then_some(name))
            .collect()
    });
    Ok(ds)
}

/// Read unlabeled points from CSV (one row per point). Used by the CLI for
/// raw test inputs.
pub fn read_points_csv(path: &Path) -> Result<Sample> {
    let lines = read_lines(path)?;
    if lines.is_empty() {
        return Err(Error::EmptyFile(path.display().to_string()));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let mut row = Vec::new();
        for (j, cell) in line.split(',').enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::CsvCell {
                row: i + 1,
                column: (j + 1).to_string(),
                message: format!("`{}` is not numeric", cell.trim()),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Sample::from_rows(&rows)
}

/// Write points as CSV, one row per point, full round-trip precision.
pub fn write_points_csv(sample: &Sample, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for i in 0..sample.len() {
        let row: Vec<String> = sample.point(i).iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Write a labeled dataset as CSV with the label in the last column.
pub fn write_csv(ds: &LabeledDataset, path: &Path, label_name: &str) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let names: Vec<String> = match &ds.feature_names {
        Some(n) => n.clone(),
        None => (1..=ds.dim()).map(|i| format!("f{i}")).collect(),
    };
    writeln!(out, "{},{}", names.join(","), label_name)?;
    for i in 0..ds.n_rows() {
        let row: Vec<String> = ds.points.point(i).iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{},{}", row.join(","), ds.labels[i])?;
    }
    Ok(())
}

/// Read a sparse LibSVM-format file into a dense dataset.
pub fn read_libsvm(path: &Path) -> Result<LabeledDataset> {
    let lines = read_lines(path)?;
    if lines.is_empty() {
        return Err(Error::EmptyFile(path.display().to_string()));
    }
    let mut labels = Vec::with_capacity(lines.len());
    let mut sparse_rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(lines.len());
    let mut max_index = 0usize;
    for (i, line) in lines.iter().enumerate() {
        let line_no = i + 1;
        let mut tokens = line.split_whitespace();
        let label = tokens
            .next()
            .ok_or_else(|| Error::Libsvm {
                line: line_no,
                message: "missing label".into(),
            })?
            .to_string();
        let mut row = Vec::new();
        let mut prev_index = 0usize;
        for tok in tokens {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Libsvm {
                line: line_no,
                message: format!("malformed token `{tok}` (expected idx:val)"),
            })?;
            let idx: usize = idx_s.parse().map_err(|_| Error::Libsvm {
                line: line_no,
                message: format!("bad feature index `{idx_s}`"),
            })?;
            if idx == 0 {
                return Err(Error::Libsvm {
                    line: line_no,
                    message: "feature indices are 1-based".into(),
                });
            }
            if idx <= prev_index {
                return Err(Error::Libsvm {
                    line: line_no,
                    message: format!("non-increasing feature index {idx} after {prev_index}"),
                });
            }
            let val: f64 = val_s.parse().map_err(|_| Error::Libsvm {
                line: line_no,
                message: format!("bad feature value `{val_s}`"),
            })?;
            prev_index = idx;
            max_index = max_index.max(idx);
            row.push((idx, val));
        }
        labels.push(label);
        sparse_rows.push(row);
    }
    // an all-empty file of bare labels still needs width >= 1 to be a dataset
    let width = max_index.max(1);
    let mut data = vec![0.0f64; sparse_rows.len() * width];
    for (i, row) in sparse_rows.iter().enumerate() {
        for &(idx, val) in row {
            data[i * width + idx - 1] = val;
        }
    }
    LabeledDataset::new(Sample::new(data, width)?, labels)
}

#[derive(Debug, Clone)]
pub struct SubsampleResult {
    pub dataset: LabeledDataset,
    /// Classes smaller than the requested size, taken whole.
    pub short_classes: Vec<String>,
}

/// Seeded per-class subsampling without replacement. Classes with fewer
/// than `per_class` rows are kept whole and flagged.
pub fn subsample_classes(
    ds: &LabeledDataset,
    per_class: usize,
    seed: u64,
) -> Result<SubsampleResult> {
    if per_class == 0 {
        return Err(Error::InvalidPlan("per_class must be positive".into()));
    }
    let mut keep: Vec<usize> = Vec::new();
    let mut short = Vec::new();
    for (ci, (label, idx)) in ds.class_index.iter().enumerate() {
        if idx.len() <= per_class {
            if idx.len() < per_class {
                short.push(label.clone());
            }
            keep.extend_from_slice(idx);
        } else {
            let positions = Sample::new(idx.iter().map(|&v| v as f64).collect(), 1)
                .expect("indices are finite")
                .subsample(per_class, derive_seed(seed, stream::SUBSAMPLE, ci as u64))?;
            keep.extend(positions.as_slice().iter().map(|&v| v as usize));
        }
    }
    keep.sort_unstable();
    let labels: Vec<String> = keep.iter().map(|&i| ds.labels[i].clone()).collect();
    let points = ds.points.select(&keep);
    Ok(SubsampleResult {
        dataset: LabeledDataset::new(points, labels)?,
        short_classes: short,
    })
}
