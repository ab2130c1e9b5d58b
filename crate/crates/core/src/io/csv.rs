//! Point clouds as delimited text: one row per point, one column per
//! coordinate, optionally one weight column.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{MppcError, Result};
use crate::model::{normalize, PointCloud};

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub has_header: bool,
    /// Header name, or zero-based column index, of the weight column.
    pub weight_column: Option<String>,
    /// Rescale weights to total mass 1.
    pub normalize: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            has_header: true,
            weight_column: None,
            normalize: true,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<PointCloud> {
    let file = std::fs::File::open(path)?;
    read_csv(file, options)
}

pub fn read_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<PointCloud> {
    let mut rdr = ::csv::ReaderBuilder::new()
        .has_headers(options.has_header)
        .flexible(true)
        .trim(::csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = if options.has_header {
        rdr.headers().map_err(csv_error)?.iter().map(str::to_owned).collect()
    } else {
        Vec::new()
    };
    let weight_col = match &options.weight_column {
        None => None,
        Some(name) => Some(match headers.iter().position(|h| h == name) {
            Some(i) => i,
            None => name
                .parse::<usize>()
                .map_err(|_| MppcError::InvalidOption(format!("no weight column `{name}`")))?,
        }),
    };
    let first_row = if options.has_header { 2 } else { 1 };
    let mut arity = if options.has_header { Some(headers.len()) } else { None };
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let row = first_row + r;
        let record = record.map_err(csv_error)?;
        let expected = *arity.get_or_insert(record.len());
        if record.len() != expected {
            return Err(MppcError::ArityMismatch {
                row,
                expected,
                found: record.len(),
            });
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|e: std::num::ParseFloatError| MppcError::Parse {
                row,
                column: c + 1,
                message: format!("`{field}`: {e}"),
            })?;
            if Some(c) == weight_col {
                weights.push(v);
            } else {
                coords.push(v);
            }
        }
    }
    let columns = arity.unwrap_or(0);
    if let Some(w) = weight_col {
        if w >= columns {
            return Err(MppcError::InvalidOption(format!("weight column {w} out of range")));
        }
    }
    let dim = columns - usize::from(weight_col.is_some());
    if dim == 0 || coords.is_empty() {
        return Err(MppcError::EmptyCloud);
    }
    let cloud = if weight_col.is_some() {
        PointCloud::new(dim, coords, weights)?
    } else {
        PointCloud::uniform(dim, coords)?
    };
    if options.normalize {
        normalize(&cloud)
    } else {
        Ok(cloud)
    }
}

fn csv_error(e: ::csv::Error) -> MppcError {
    match e.into_kind() {
        ::csv::ErrorKind::Io(io) => MppcError::Io(io),
        other => MppcError::Parse {
            row: 0,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

/// Writes `x1..xd` columns, plus `w` when `with_weights` is set.
pub fn write_csv<W: Write>(cloud: &PointCloud, writer: W, with_weights: bool) -> Result<()> {
    let mut wtr = ::csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=cloud.dim()).map(|k| format!("x{k}")).collect();
    if with_weights {
        header.push("w".into());
    }
    wtr.write_record(&header).map_err(csv_error)?;
    for i in 0..cloud.len() {
        let mut row: Vec<String> = cloud.point(i).iter().map(|v| v.to_string()).collect();
        if with_weights {
            row.push(cloud.weight(i).to_string());
        }
        wtr.write_record(&row).map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}
