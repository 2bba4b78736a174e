//! Correspondence and label file readers.
//!
//! Correspondence files hold one `x,y,x2,y2[,label]` row per point, separated
//! by commas, tabs or whitespace. Lines starting with `#` are comments and a
//! non-numeric first row is taken as a header. Label 0 marks an outlier,
//! labels from 1 up name clusters.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gdm_core::{Partition, PointCorrespondence};

#[derive(Debug)]
pub struct Dataset {
    pub points: Vec<PointCorrespondence>,
    /// Ground truth from the optional label column.
    pub truth: Option<Partition>,
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

fn parse_label(field: &str, line_no: usize) -> Result<usize> {
    field.parse::<usize>().with_context(|| format!("line {line_no}: label {field:?} is not a nonnegative integer"))
}

/// Converts 1-based labels with 0 for outliers into a partition.
pub fn labels_to_partition(labels: &[usize]) -> Result<Partition> {
    let k = labels.iter().copied().max().unwrap_or(0).max(1);
    let outliers = labels.iter().enumerate().filter(|(_, &l)| l == 0).map(|(i, _)| i);
    let zero_based = labels.iter().map(|&l| l.saturating_sub(1)).collect();
    Ok(Partition::new(zero_based, k)?.with_outliers(outliers))
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = split_fields(line);
        let coords: Vec<Option<f64>> = fields.iter().take(4).map(|f| f.parse::<f64>().ok()).collect();
        if points.is_empty() && width.is_none() && coords.iter().any(Option::is_none) {
            width = Some(0);
            continue;
        }
        if fields.len() != 4 && fields.len() != 5 {
            bail!("line {line_no}: expected 4 or 5 fields, found {}", fields.len());
        }
        match width {
            Some(w) if w != 0 && w != fields.len() => {
                bail!("line {line_no}: expected {w} fields like the previous rows, found {}", fields.len())
            }
            _ => width = Some(fields.len()),
        }
        let mut c = [0.0; 4];
        for (i, v) in coords.iter().enumerate() {
            match v {
                Some(v) if v.is_finite() => c[i] = *v,
                _ => bail!("line {line_no}: field {} ({:?}) is not a finite number", i + 1, fields[i]),
            }
        }
        points.push(PointCorrespondence::new(c[0], c[1], c[2], c[3]));
        if fields.len() == 5 {
            labels.push(parse_label(fields[4], line_no)?);
        }
    }
    if points.is_empty() {
        bail!("no correspondences found");
    }
    let truth = if labels.is_empty() { None } else { Some(labels_to_partition(&labels)?) };
    Ok(Dataset { points, truth })
}

/// One label per line; blank lines and `#` comments are skipped.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim().starts_with('#'))
        .map(|(i, l)| parse_label(l.trim(), i + 1))
        .collect()
}
