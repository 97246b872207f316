//! Labeled feature matrices and their on-disk formats.
//!
//! CSV: header `f0..f{d-1},label,group`, one row per sample.
//! Binary: little-endian container `CFMX | version | N | d | feature
//! names | row-major f64 block | label table | group table`.

use crate::error::{Error, Result};
use crate::matrix::Mat;
use std::io::{Read, Write};

const MAGIC: &[u8; 4] = b"CFMX";
const BIN_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub x: Mat,
    pub labels: Vec<String>,
    pub groups: Vec<String>,
    pub feature_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(x: Mat, labels: Vec<String>, groups: Vec<String>) -> Result<Self> {
        if labels.len() != x.n_rows() || groups.len() != x.n_rows() {
            return Err(Error::Data(format!(
                "labels ({}) and groups ({}) must match row count ({})",
                labels.len(),
                groups.len(),
                x.n_rows()
            )));
        }
        let feature_names = (0..x.n_cols()).map(|i| format!("f{i}")).collect();
        Ok(FeatureMatrix { x, labels, groups, feature_names })
    }

    pub fn n_rows(&self) -> usize {
        self.x.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.n_cols()
    }

    /// 0/1 vector: 1 where the label equals `positive`.
    pub fn binary_labels(&self, positive: &str) -> Vec<usize> {
        self.labels.iter().map(|l| usize::from(l == positive)).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            x: self.x.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
            groups: idx.iter().map(|&i| self.groups[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    pub fn to_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header: Vec<String> = self.feature_names.clone();
        header.push("label".into());
        header.push("group".into());
        writeln!(w, "{}", header.join(","))?;
        for r in 0..self.n_rows() {
            let mut fields: Vec<String> = self.x.row(r).iter().map(|v| format!("{v}")).collect();
            fields.push(self.labels[r].clone());
            fields.push(self.groups[r].clone());
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn from_csv<R: Read>(r: R) -> Result<FeatureMatrix> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let headers = rdr.headers().map_err(|e| Error::Data(format!("feature CSV header: {e}")))?;
        let cols = headers.len();
        if cols < 3 {
            return Err(Error::Data("feature CSV needs f0.., label, group columns".into()));
        }
        let d = cols - 2;
        for (i, h) in headers.iter().take(d).enumerate() {
            if h != format!("f{i}") {
                return Err(Error::Data(format!("expected feature column f{i}, got '{h}'")));
            }
        }
        if &headers[d] != "label" || &headers[d + 1] != "group" {
            return Err(Error::Data("feature CSV must end with label,group columns".into()));
        }
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut groups = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Data(format!("feature CSV row {}: {e}", i + 2)))?;
            if rec.len() != cols {
                return Err(Error::Data(format!(
                    "feature CSV row {}: expected {cols} fields, got {}",
                    i + 2,
                    rec.len()
                )));
            }
            let mut row = Vec::with_capacity(d);
            for j in 0..d {
                row.push(rec[j].parse::<f64>().map_err(|e| {
                    Error::Data(format!("feature CSV row {} col {j}: {e}", i + 2))
                })?);
            }
            rows.push(row);
            labels.push(rec[d].to_string());
            groups.push(rec[d + 1].to_string());
        }
        FeatureMatrix::new(Mat::from_rows(&rows), labels, groups)
    }

    pub fn to_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&BIN_VERSION.to_le_bytes())?;
        w.write_all(&(self.n_rows() as u64).to_le_bytes())?;
        w.write_all(&(self.n_features() as u64).to_le_bytes())?;
        write_string_table(&mut w, &self.feature_names)?;
        for v in self.x.data() {
            w.write_all(&v.to_le_bytes())?;
        }
        write_string_table(&mut w, &self.labels)?;
        write_string_table(&mut w, &self.groups)?;
        Ok(())
    }

    pub fn from_binary<R: Read>(mut r: R) -> Result<FeatureMatrix> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Data("bad feature container magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != BIN_VERSION {
            return Err(Error::Data(format!("unsupported feature container version {version}")));
        }
        let n = read_u64(&mut r)? as usize;
        let d = read_u64(&mut r)? as usize;
        let feature_names = read_string_table(&mut r, d)?;
        let mut data = vec![0.0f64; n * d];
        let mut buf = [0u8; 8];
        for v in data.iter_mut() {
            r.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        let labels = read_string_table(&mut r, n)?;
        let groups = read_string_table(&mut r, n)?;
        Ok(FeatureMatrix { x: Mat::from_vec(n, d, data), labels, groups, feature_names })
    }
}

fn write_string_table<W: Write>(w: &mut W, strings: &[String]) -> Result<()> {
    w.write_all(&(strings.len() as u32).to_le_bytes())?;
    for s in strings {
        let b = s.as_bytes();
        w.write_all(&(b.len() as u32).to_le_bytes())?;
        w.write_all(b)?;
    }
    Ok(())
}

fn read_string_table<R: Read>(r: &mut R, expected: usize) -> Result<Vec<String>> {
    let count = read_u32(r)? as usize;
    if count != expected {
        return Err(Error::Data(format!("string table holds {count} entries, expected {expected}")));
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let len = read_u32(r)? as usize;
        if len > 1 << 20 {
            return Err(Error::Data("string table entry too long".into()));
        }
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        out.push(String::from_utf8(buf).map_err(|e| Error::Data(format!("bad utf8: {e}")))?);
    }
    Ok(out)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
