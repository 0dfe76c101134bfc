//! Dataset files.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! ```text
//! "RSRD" | version u32 = 1 | D u32 | N u32 | flags u32
//! D·N f64 points, column-major (point after point)
//! N u8 labels (0 = outlier, 1 = inlier)      if flags & 1
//! f64 noise epsilon                          if flags & 2
//! ```
//!
//! Ground truth travels in a JSON sidecar holding the basis rows, labels and
//! noise level.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, GroundTruth, Label};
use crate::error::{Result, RsrError};
use crate::format::{fmt_g17, serde_inf};
use crate::spectral::SubspaceBasis;

pub const MAGIC: &[u8; 4] = b"RSRD";
pub const VERSION: u32 = 1;
const FLAG_LABELS: u32 = 1;
const FLAG_EPSILON: u32 = 2;

fn u32_of(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| RsrError::Format(format!("{what} = {v} does not fit in u32")))
}

pub fn write_dataset<W: Write>(mut w: W, data: &Dataset, epsilon: Option<f64>) -> Result<()> {
    let mut flags = 0;
    if data.labels().is_some() {
        flags |= FLAG_LABELS;
    }
    if epsilon.is_some() {
        flags |= FLAG_EPSILON;
    }
    w.write_all(MAGIC)?;
    for v in [VERSION, u32_of(data.ambient_dim(), "D")?, u32_of(data.len(), "N")?, flags] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in data.points().iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    if let Some(labels) = data.labels() {
        let bytes: Vec<u8> = labels.iter().map(|l| u8::from(*l == Label::Inlier)).collect();
        w.write_all(&bytes)?;
    }
    if let Some(e) = epsilon {
        w.write_all(&e.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| RsrError::Format(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

/// Reads a dataset and its optional noise level.
pub fn read_dataset<R: Read>(mut r: R) -> Result<(Dataset, Option<f64>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| RsrError::Format(format!("truncated header: {e}")))?;
    if &magic != MAGIC {
        return Err(RsrError::Format("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(RsrError::Format(format!("unsupported version {version}")));
    }
    let big_d = read_u32(&mut r)? as usize;
    let n = read_u32(&mut r)? as usize;
    let flags = read_u32(&mut r)?;
    if flags & !(FLAG_LABELS | FLAG_EPSILON) != 0 {
        return Err(RsrError::Format(format!("unknown flags {flags:#x}")));
    }
    let count = big_d.checked_mul(n).ok_or_else(|| RsrError::Format("point block size overflows".into()))?;
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf).map_err(|e| RsrError::Format(format!("truncated point block: {e}")))?;
    let vals: Vec<f64> = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    let labels = if flags & FLAG_LABELS != 0 {
        let mut lb = vec![0u8; n];
        r.read_exact(&mut lb).map_err(|e| RsrError::Format(format!("truncated label block: {e}")))?;
        Some(
            lb.iter()
                .map(|&b| match b {
                    0 => Ok(Label::Outlier),
                    1 => Ok(Label::Inlier),
                    other => Err(RsrError::Format(format!("bad label byte {other}"))),
                })
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let epsilon = if flags & FLAG_EPSILON != 0 {
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(|e| RsrError::Format(format!("truncated epsilon: {e}")))?;
        Some(f64::from_le_bytes(b))
    } else {
        None
    };
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(RsrError::Format("trailing bytes after dataset".into()));
    }
    let data = Dataset::new(DMatrix::from_column_slice(big_d, n, &vals), labels)?;
    Ok((data, epsilon))
}

pub fn save_dataset(path: &Path, data: &Dataset, epsilon: Option<f64>) -> Result<()> {
    write_dataset(BufWriter::new(File::create(path)?), data, epsilon)
}

pub fn load_dataset(path: &Path) -> Result<(Dataset, Option<f64>)> {
    read_dataset(BufReader::new(File::open(path)?))
}

/// One point per row (`x0 … x{D−1}`), then `label` (1 inlier, 0 outlier) if labelled.
pub fn write_csv<W: Write>(w: W, data: &Dataset) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (0..data.ambient_dim()).map(|i| format!("x{i}")).collect();
    if data.labels().is_some() {
        header.push("label".into());
    }
    wr.write_record(&header).map_err(|e| RsrError::Io(e.to_string()))?;
    for (j, col) in data.points().column_iter().enumerate() {
        let mut rec: Vec<String> = col.iter().map(|&v| fmt_g17(v)).collect();
        if let Some(l) = data.labels() {
            rec.push(if l[j] == Label::Inlier { "1".into() } else { "0".into() });
        }
        wr.write_record(&rec).map_err(|e| RsrError::Io(e.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

/// JSON form of a [`GroundTruth`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    /// `D` rows of `d` entries.
    pub basis: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    #[serde(default, with = "serde_inf::option", skip_serializing_if = "Option::is_none")]
    pub noise_epsilon: Option<f64>,
}

impl From<&GroundTruth> for TruthFile {
    fn from(t: &GroundTruth) -> Self {
        let b = t.basis.columns();
        TruthFile {
            basis: b.row_iter().map(|r| r.iter().copied().collect()).collect(),
            labels: t.labels.clone(),
            noise_epsilon: t.noise_epsilon,
        }
    }
}

impl TryFrom<TruthFile> for GroundTruth {
    type Error = RsrError;
    fn try_from(t: TruthFile) -> Result<Self> {
        let rows = t.basis.len();
        let d = t.basis.first().map_or(0, |r| r.len());
        if t.basis.iter().any(|r| r.len() != d) {
            return Err(RsrError::Format("ragged basis rows".into()));
        }
        let flat: Vec<f64> = t.basis.into_iter().flatten().collect();
        let basis = SubspaceBasis::new(DMatrix::from_row_slice(rows, d, &flat))?;
        GroundTruth::new(basis, t.labels, t.noise_epsilon)
    }
}

pub fn save_truth(path: &Path, truth: &GroundTruth) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(f, &TruthFile::from(truth)).map_err(|e| RsrError::Io(e.to_string()))
}

pub fn load_truth(path: &Path) -> Result<GroundTruth> {
    let f = BufReader::new(File::open(path)?);
    let t: TruthFile = serde_json::from_reader(f).map_err(|e| RsrError::Format(e.to_string()))?;
    t.try_into()
}
