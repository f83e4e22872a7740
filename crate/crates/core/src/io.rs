//! File formats: instance and solution JSON, sample and matrix CSV.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PronyError, Result};
use crate::linalg::CMat;
use crate::mindex::MultiIndex;
use crate::recover::sparse::SparsePolyModel;
use crate::recover::{Diagnostics, PronySolution};
use crate::sampler::{ExpSumModel, InstanceKind, SampleGrid};

pub const FORMAT: &str = "mprony-v1";

fn io_err(e: impl std::fmt::Display) -> PronyError {
    PronyError::InvalidArgument(format!("i/o: {e}"))
}

fn check_format(found: &str) -> Result<()> {
    if found == FORMAT {
        Ok(())
    } else {
        Err(PronyError::InvalidArgument(format!(
            "unsupported format '{found}', expected '{FORMAT}'"
        )))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub format: String,
    pub s: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<InstanceKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub freqs: Vec<Vec<Complex64>>,
    pub coeffs: Vec<Complex64>,
}

impl InstanceFile {
    pub fn new(model: &ExpSumModel, kind: Option<InstanceKind>, seed: Option<u64>) -> Self {
        InstanceFile {
            format: FORMAT.into(),
            s: model.s(),
            kind,
            seed,
            freqs: model.freqs().to_vec(),
            coeffs: model.coeffs().to_vec(),
        }
    }

    pub fn model(&self) -> Result<ExpSumModel> {
        check_format(&self.format)?;
        ExpSumModel::new(self.s, self.freqs.clone(), self.coeffs.clone())
    }
}

pub fn write_instance(w: impl Write, file: &InstanceFile) -> Result<()> {
    serde_json::to_writer_pretty(w, file).map_err(io_err)
}

pub fn read_instance(r: impl Read) -> Result<InstanceFile> {
    let file: InstanceFile = serde_json::from_reader(r).map_err(io_err)?;
    check_format(&file.format)?;
    Ok(file)
}

/// `# format: mprony-v1`, then `g1,…,gs,re,im`, one row per lattice point.
pub fn write_samples(w: impl Write, grid: &SampleGrid) -> Result<()> {
    let mut w = w;
    writeln!(w, "# format: {FORMAT}").map_err(io_err)?;
    let mut csv = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (1..=grid.s()).map(|i| format!("g{i}")).collect();
    header.push("re".into());
    header.push("im".into());
    csv.write_record(&header).map_err(io_err)?;
    for (alpha, v) in grid.iter() {
        let mut row: Vec<String> = alpha.entries().iter().map(|e| e.to_string()).collect();
        row.push(format!("{:e}", v.re));
        row.push(format!("{:e}", v.im));
        csv.write_record(&row).map_err(io_err)?;
    }
    csv.flush().map_err(io_err)
}

pub fn read_samples(r: impl Read) -> Result<SampleGrid> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let header = rdr.headers().map_err(io_err)?.clone();
    let cols = header.len();
    let s = cols
        .checked_sub(2)
        .filter(|&s| s > 0)
        .ok_or_else(|| PronyError::InvalidArgument("sample header needs g1..gs,re,im".into()))?;
    let expected: Vec<String> = (1..=s).map(|i| format!("g{i}")).chain(["re".into(), "im".into()]).collect();
    if header.iter().zip(&expected).any(|(a, b)| a != b) {
        return Err(PronyError::InvalidArgument(format!(
            "sample header must be {}",
            expected.join(",")
        )));
    }
    let mut points = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(io_err)?;
        let bad = || PronyError::InvalidArgument(format!("malformed sample row {}", line + 1));
        if rec.len() != cols {
            return Err(bad());
        }
        let entries = (0..s)
            .map(|i| rec[i].parse::<u32>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let re: f64 = rec[s].parse().map_err(|_| bad())?;
        let im: f64 = rec[s + 1].parse().map_err(|_| bad())?;
        points.push((MultiIndex::new(entries)?, Complex64::new(re, im)));
    }
    if points.is_empty() {
        return Err(PronyError::InvalidArgument("sample file has no rows".into()));
    }
    SampleGrid::from_points(s, points)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub format: String,
    pub s: usize,
    pub freqs: Vec<Vec<Complex64>>,
    pub coeffs: Vec<Complex64>,
    #[serde(rename = "degN")]
    pub deg_n: usize,
    pub hilbert: Vec<usize>,
    pub residual: f64,
    pub diagnostics: Diagnostics,
}

impl SolutionFile {
    pub fn new(sol: &PronySolution) -> Self {
        SolutionFile {
            format: FORMAT.into(),
            s: sol.model.s(),
            freqs: sol.model.freqs().to_vec(),
            coeffs: sol.model.coeffs().to_vec(),
            deg_n: sol.diagnostics.deg_n,
            hilbert: sol.diagnostics.hilbert.values.clone(),
            residual: sol.diagnostics.residual,
            diagnostics: sol.diagnostics.clone(),
        }
    }

    pub fn model(&self) -> Result<ExpSumModel> {
        check_format(&self.format)?;
        ExpSumModel::new(self.s, self.freqs.clone(), self.coeffs.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseFile {
    pub format: String,
    pub s: usize,
    pub exponents: Vec<Vec<u32>>,
    pub coeffs: Vec<Complex64>,
    pub x: Vec<Vec<Complex64>>,
    pub displacement: f64,
    pub residual: f64,
    pub diagnostics: Diagnostics,
}

impl SparseFile {
    pub fn new(m: &SparsePolyModel) -> Self {
        SparseFile {
            format: FORMAT.into(),
            s: m.s,
            exponents: m.exponents.iter().map(|a| a.entries().to_vec()).collect(),
            coeffs: m.coeffs.clone(),
            x: m.x.row_iter().map(|r| r.iter().copied().collect()).collect(),
            displacement: m.displacement,
            residual: m.residual,
            diagnostics: m.diagnostics.clone(),
        }
    }
}

/// Long-format dump `matrix,row,col,re,im` of named matrices.
pub fn write_matrices(w: impl Write, mats: &[(String, &CMat)]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["matrix", "row", "col", "re", "im"]).map_err(io_err)?;
    for (name, m) in mats {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                csv.write_record([
                    name.clone(),
                    r.to_string(),
                    c.to_string(),
                    format!("{:e}", v.re),
                    format!("{:e}", v.im),
                ])
                .map_err(io_err)?;
            }
        }
    }
    csv.flush().map_err(io_err)
}
