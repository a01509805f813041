use std::io::{BufRead, Write};

use crate::kernel::Matrix;
use crate::{Error, Result};

/// Per-sample vectors with their ids, as written to a TSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    pub sample_ids: Vec<String>,
    pub values: Matrix,
}

impl Embeddings {
    pub fn new(sample_ids: Vec<String>, values: Matrix) -> Result<Self> {
        if sample_ids.len() != values.rows() {
            return Err(Error::shape("embedding rows", sample_ids.len(), values.rows()));
        }
        Ok(Self { sample_ids, values })
    }
}

/// Header `sample_id  z0 … z{d-1}`; values in scientific notation with 17
/// significant digits so they read back bit-exact.
pub fn write_embeddings<W: Write>(e: &Embeddings, mut out: W) -> Result<()> {
    let io = |err| Error::io("<embeddings>", err);
    let mut header = String::from("sample_id");
    for k in 0..e.values.cols() {
        header.push_str(&format!("\tz{k}"));
    }
    writeln!(out, "{header}").map_err(io)?;
    for (i, id) in e.sample_ids.iter().enumerate() {
        let mut line = id.clone();
        for v in e.values.row(i) {
            line.push_str(&format!("\t{v:.16e}"));
        }
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_embeddings<R: BufRead>(input: R) -> Result<Embeddings> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let header = header.map_err(|e| Error::io("<embeddings>", e))?;
    let cols: Vec<&str> = header.trim_end().split('\t').collect();
    if cols.first() != Some(&"sample_id") {
        return Err(Error::Parse {
            line: 1,
            message: "header must start with sample_id".into(),
        });
    }
    for (k, c) in cols[1..].iter().enumerate() {
        if *c != format!("z{k}") {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected column z{k}, found {c:?}"),
            });
        }
    }
    let d = cols.len() - 1;
    let (mut ids, mut data) = (Vec::new(), Vec::new());
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io("<embeddings>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split('\t').collect();
        if fields.len() != d + 1 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected {} fields, found {}", d + 1, fields.len()),
            });
        }
        ids.push(fields[0].to_string());
        for f in &fields[1..] {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("bad number {f:?}"),
            })?;
            data.push(v);
        }
    }
    let rows = ids.len();
    Embeddings::new(ids, Matrix::checked(rows, d, data)?)
}
