use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::format_number;
use crate::error::{Error, Result};
use crate::pca::ProxyPanel;
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Response,
    Panel,
}

/// A cell position: data row (1-based, header excluded) and CSV column
/// (1-based, `year` is column 1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRef {
    pub row: usize,
    pub column: usize,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseReport {
    pub file: String,
    pub rows_read: usize,
    pub columns: Vec<String>,
    /// Cells read as missing (`NA` or empty).
    pub missing: Vec<CellRef>,
    pub missing_per_column: Vec<usize>,
    /// Years absent from a panel file, inserted as all-missing rows.
    pub filled_years: Vec<i64>,
    pub first_year: i64,
    pub last_year: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Fragment {
    Response { series: TimeSeries, name: String, report: ParseReport },
    Panel { panel: ProxyPanel, report: ParseReport },
}

impl Fragment {
    pub fn report(&self) -> &ParseReport {
        match self {
            Fragment::Response { report, .. } | Fragment::Panel { report, .. } => report,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, role: Role) -> Result<Fragment> {
    match role {
        Role::Response => {
            let (series, name, report) = load_response(path, None)?;
            Ok(Fragment::Response { series, name, report })
        }
        Role::Panel => {
            let (panel, report) = load_panel(path)?;
            Ok(Fragment::Panel { panel, report })
        }
    }
}

struct RawTable {
    names: Vec<String>,
    years: Vec<i64>,
    /// row-major, one Vec per data row
    rows: Vec<Vec<f64>>,
    missing: Vec<CellRef>,
}

fn parse_error(file: &str, row: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_string(),
        row,
        column,
        message: message.into(),
    }
}

fn read_table<R: Read>(reader: R, file: &str) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| parse_error(file, 0, 1, format!("unreadable header: {e}")))?
        .clone();
    let first = header.get(0).map(|h| h.trim_start_matches('\u{feff}'));
    if first.map(str::to_ascii_lowercase).as_deref() != Some("year") {
        return Err(parse_error(file, 0, 1, "first header column must be 'year'"));
    }
    if header.len() < 2 {
        return Err(parse_error(file, 0, 2, "header has no value columns"));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    for (j, name) in names.iter().enumerate() {
        if name.is_empty() {
            return Err(parse_error(file, 0, j + 2, "empty column name"));
        }
        if names[..j].contains(name) {
            return Err(parse_error(file, 0, j + 2, format!("duplicate column '{name}'")));
        }
    }

    let mut years = Vec::new();
    let mut rows = Vec::new();
    let mut missing = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| parse_error(file, row, 0, e.to_string()))?;
        if record.len() != header.len() {
            return Err(parse_error(
                file,
                row,
                record.len().min(header.len()) + 1,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let year: i64 = record[0]
            .parse()
            .map_err(|_| parse_error(file, row, 1, format!("year '{}' is not an integer", &record[0])))?;
        if let Some(&prev) = years.last() {
            if year <= prev {
                return Err(parse_error(
                    file,
                    row,
                    1,
                    format!("year {year} does not increase after {prev}"),
                ));
            }
        }
        years.push(year);
        let mut values = Vec::with_capacity(names.len());
        for (j, cell) in record.iter().skip(1).enumerate() {
            if cell.is_empty() || cell == "NA" {
                missing.push(CellRef {
                    row,
                    column: j + 2,
                    name: names[j].clone(),
                });
                values.push(f64::NAN);
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(parse_error(
                        file,
                        row,
                        j + 2,
                        format!("'{cell}' is not a finite number"),
                    ))
                }
            }
        }
        rows.push(values);
    }
    if years.is_empty() {
        return Err(parse_error(file, 1, 1, "no data rows"));
    }
    Ok(RawTable {
        names,
        years,
        rows,
        missing,
    })
}

fn report(file: &str, t: &RawTable, filled_years: Vec<i64>) -> ParseReport {
    let mut per_column = vec![0; t.names.len()];
    for m in &t.missing {
        per_column[m.column - 2] += 1;
    }
    ParseReport {
        file: file.to_string(),
        rows_read: t.years.len(),
        columns: t.names.clone(),
        missing: t.missing.clone(),
        missing_per_column: per_column,
        filled_years,
        first_year: t.years[0],
        last_year: *t.years.last().unwrap(),
    }
}

/// Read a response series; `column` picks a value column by name (default: the first).
pub fn load_response(path: impl AsRef<Path>, column: Option<&str>) -> Result<(TimeSeries, String, ParseReport)> {
    let path = path.as_ref();
    let file = path.display().to_string();
    load_response_from_reader(File::open(path)?, &file, column)
}

pub fn load_response_from_reader<R: Read>(
    reader: R,
    file: &str,
    column: Option<&str>,
) -> Result<(TimeSeries, String, ParseReport)> {
    let t = read_table(reader, file)?;
    for (i, w) in t.years.windows(2).enumerate() {
        if w[1] != w[0] + 1 {
            return Err(parse_error(
                file,
                i + 2,
                1,
                format!("year gap: {} follows {}", w[1], w[0]),
            ));
        }
    }
    let j = match column {
        None => 0,
        Some(name) => t
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| parse_error(file, 0, 0, format!("no column named '{name}'")))?,
    };
    let values: Vec<f64> = t.rows.iter().map(|r| r[j]).collect();
    let series = TimeSeries::new(t.years[0], values)?;
    let rep = report(file, &t, Vec::new());
    Ok((series, t.names[j].clone(), rep))
}

/// Read a proxy panel; missing years become all-missing rows.
pub fn load_panel(path: impl AsRef<Path>) -> Result<(ProxyPanel, ParseReport)> {
    let path = path.as_ref();
    let file = path.display().to_string();
    load_panel_from_reader(File::open(path)?, &file)
}

pub fn load_panel_from_reader<R: Read>(reader: R, file: &str) -> Result<(ProxyPanel, ParseReport)> {
    let t = read_table(reader, file)?;
    let first = t.years[0];
    let n = (t.years.last().unwrap() - first + 1) as usize;
    let m = t.names.len();
    let mut values = DMatrix::from_element(n, m, f64::NAN);
    let mut present = vec![false; n];
    for (year, row) in t.years.iter().zip(&t.rows) {
        let i = (year - first) as usize;
        present[i] = true;
        for (j, v) in row.iter().enumerate() {
            values[(i, j)] = *v;
        }
    }
    let filled: Vec<i64> = (0..n)
        .filter(|&i| !present[i])
        .map(|i| first + i as i64)
        .collect();
    if n < 2 {
        return Err(parse_error(file, 1, 1, "a panel needs at least two years"));
    }
    let panel = ProxyPanel::new(first, t.names.clone(), values)?;
    Ok((panel, report(file, &t, filled)))
}

/// Write `year,<names>` rows from `start_time`, numbers at 15 significant digits.
pub fn write_csv<W: Write>(writer: W, start_time: i64, names: &[&str], columns: &[&[f64]]) -> Result<()> {
    if names.len() != columns.len() {
        return Err(Error::invalid("column names and columns differ in count"));
    }
    let n = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::invalid("columns differ in length"));
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["year"];
    header.extend_from_slice(names);
    w.write_record(&header)?;
    for i in 0..n {
        let mut rec = vec![(start_time + i as i64).to_string()];
        rec.extend(columns.iter().map(|c| format_number(c[i])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(path: impl AsRef<Path>, start_time: i64, names: &[&str], columns: &[&[f64]]) -> Result<()> {
    write_csv(File::create(path)?, start_time, names, columns)
}
