//! CSV persistence for weights, kernels, detectors and result matrices.
//! Numbers are written in Rust's shortest round-trip form, so a write
//! followed by a read reproduces every `f64` exactly.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::nn::{DetectionSpec, FcSpec};

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_rows(body: &str) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    reader
        .records()
        .map(|r| {
            r.map(|rec| rec.iter().map(str::to_owned).collect())
                .map_err(|e| Error::Format(e.to_string()))
        })
        .collect()
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Format(format!("not a number: {s:?}")))
}

fn numeric_matrix(rows: &[Vec<String>]) -> Result<Array2<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut flat = Vec::with_capacity(rows.len() * cols);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(Error::Format(format!(
                "row {i} has {} fields, expected {cols}",
                r.len()
            )));
        }
        for s in r {
            flat.push(parse_f64(s)?);
        }
    }
    Array2::from_shape_vec((rows.len(), cols), flat).map_err(|e| Error::Format(e.to_string()))
}

/// Header fields after a `# <tag>` first line.
fn header<'a>(text: &'a str, tag: &str) -> Result<Vec<&'a str>> {
    let first = text.lines().next().unwrap_or("");
    let mut parts = first.split_whitespace();
    if parts.next() != Some("#") || parts.next() != Some(tag) {
        return Err(Error::Format(format!("expected a '# {tag}' header line")));
    }
    Ok(parts.collect())
}

fn header_usize(fields: &[&str], i: usize) -> Result<usize> {
    fields
        .get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("malformed header".into()))
}

/// `# fcspec C D` followed by one row of D weights per class.
pub fn fcspec_to_csv(spec: &FcSpec) -> String {
    let mut out = format!("# fcspec {} {}\n", spec.n_classes(), spec.n_inputs());
    for row in spec.weights.rows() {
        out.push_str(&join(row.iter().copied()));
        out.push('\n');
    }
    out
}

pub fn fcspec_from_csv(text: &str) -> Result<FcSpec> {
    let h = header(text, "fcspec")?;
    let (c, d) = (header_usize(&h, 0)?, header_usize(&h, 1)?);
    let w = numeric_matrix(&parse_rows(text)?)?;
    if w.dim() != (c, d) {
        return Err(Error::Format(format!(
            "header says {c}x{d}, body is {:?}",
            w.dim()
        )));
    }
    FcSpec::new(w, None)
}

/// Reads a detector CSV written by [`detector_to_csv`].
pub fn read_detector(path: impl AsRef<Path>) -> Result<DetectionSpec> {
    let bytes = super::read_input(path.as_ref())?;
    detector_from_csv(&String::from_utf8_lossy(&bytes))
}

pub fn write_fcspec(spec: &FcSpec, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, fcspec_to_csv(spec))?;
    Ok(())
}

pub fn read_fcspec(path: impl AsRef<Path>) -> Result<FcSpec> {
    let bytes = super::read_input(path.as_ref())?;
    fcspec_from_csv(&String::from_utf8_lossy(&bytes))
}

/// Plain K x K matrix.
pub fn kernel_to_csv(kernel: &Array2<f64>) -> String {
    kernel
        .rows()
        .into_iter()
        .map(|r| join(r.iter().copied()) + "\n")
        .collect()
}

pub fn kernel_from_csv(text: &str) -> Result<Array2<f64>> {
    let k = numeric_matrix(&parse_rows(text)?)?;
    if k.nrows() == 0 || k.nrows() != k.ncols() {
        return Err(Error::Format(format!(
            "kernel must be square, got {:?}",
            k.dim()
        )));
    }
    Ok(k)
}

/// `# detector C W S`, then per class: label, threshold, W*W template taps.
pub fn detector_to_csv(spec: &DetectionSpec) -> String {
    let mut out = format!(
        "# detector {} {} {}\n",
        spec.classifiers.len(),
        spec.window,
        spec.stride
    );
    for ((label, t), thr) in spec.classifiers.iter().zip(&spec.thresholds) {
        out.push_str(&format!("{label},{thr},{}\n", join(t.iter().copied())));
    }
    out
}

pub fn detector_from_csv(text: &str) -> Result<DetectionSpec> {
    let h = header(text, "detector")?;
    let (c, w, s) = (
        header_usize(&h, 0)?,
        header_usize(&h, 1)?,
        header_usize(&h, 2)?,
    );
    let rows = parse_rows(text)?;
    if rows.len() != c {
        return Err(Error::Format(format!(
            "header says {c} classes, found {}",
            rows.len()
        )));
    }
    let mut classifiers = Vec::with_capacity(c);
    let mut thresholds = Vec::with_capacity(c);
    for r in rows {
        if r.len() != 2 + w * w {
            return Err(Error::Format(format!(
                "detector row has {} fields, expected {}",
                r.len(),
                2 + w * w
            )));
        }
        thresholds.push(parse_f64(&r[1])?);
        let taps = r[2..]
            .iter()
            .map(|s| parse_f64(s))
            .collect::<Result<Vec<_>>>()?;
        classifiers.push((
            r[0].clone(),
            Array2::from_shape_vec((w, w), taps).expect("w*w taps"),
        ));
    }
    DetectionSpec::new(w, s, classifiers, thresholds)
}

/// Rows are true labels, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Array2<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            counts: Array2::zeros((n_classes, n_classes)),
        }
    }

    pub fn from_pairs(
        n_classes: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut m = Self::new(n_classes);
        for (t, p) in pairs {
            m.record(t, p)?;
        }
        Ok(m)
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<()> {
        let c = self.counts.nrows();
        if truth >= c || predicted >= c {
            return Err(Error::dim(format!(
                "label pair ({truth}, {predicted}) outside {c} classes"
            )));
        }
        self.counts[[truth, predicted]] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.sum()
    }

    pub fn correct(&self) -> u64 {
        self.counts.diag().sum()
    }

    /// Zero for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.correct() as f64 / t as f64,
        }
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.rows().into_iter().map(|r| r.sum()).collect()
    }

    pub fn to_csv(&self) -> String {
        let c = self.counts.nrows();
        let mut out = String::from("true\\predicted");
        for j in 0..c {
            out.push_str(&format!(",{j}"));
        }
        out.push('\n');
        for (i, row) in self.counts.rows().into_iter().enumerate() {
            out.push_str(&i.to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Decision matrix with a 1-based `patch` column and one column per label.
pub fn decisions_to_csv(decisions: &Array2<f64>, labels: &[String]) -> String {
    let mut out = String::from("patch");
    for l in labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (p, row) in decisions.rows().into_iter().enumerate() {
        out.push_str(&format!("{},{}\n", p + 1, join(row.iter().copied())));
    }
    out
}

/// Generic numeric matrix without header.
pub fn matrix_to_csv(m: &Array2<f64>) -> String {
    kernel_to_csv(m)
}
