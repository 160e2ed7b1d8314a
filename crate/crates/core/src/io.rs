//! Plain-text CSV tables for density matrices, Wigner grids and sweeps.
//!
//! Numbers are written as `{:.8e}` (nine significant digits), missing values
//! as `nan`. Files may start with one `# key=value key=value` metadata line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::analysis::{ProbeKind, SweepAxis, SweepResult};
use crate::open_system::DensityMatrix;
use crate::wigner::{GridMeta, WignerGrid};
use crate::{Error, Result};

pub type Metadata = BTreeMap<String, f64>;

pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.8e}")
    }
}

fn parse_number(field: &str, line: usize) -> Result<f64> {
    let field = field.trim();
    if field.eq_ignore_ascii_case("nan") || field.is_empty() {
        return Ok(f64::NAN);
    }
    field.parse().map_err(|_| Error::Parse(format!("line {line}: bad number '{field}'")))
}

pub fn metadata_line(meta: &Metadata) -> String {
    let fields: Vec<String> = meta.iter().map(|(k, v)| format!("{k}={}", format_number(*v))).collect();
    format!("# {}\n", fields.join(" "))
}

fn parse_metadata(line: &str) -> Result<Metadata> {
    let mut meta = Metadata::new();
    for pair in line.trim_start_matches('#').split_whitespace() {
        let (k, v) = pair.split_once('=').ok_or_else(|| Error::Parse(format!("bad metadata field '{pair}'")))?;
        meta.insert(k.to_string(), parse_number(v, 1)?);
    }
    Ok(meta)
}

/// Splits off the metadata line and returns the remaining data rows with
/// their 1-based line numbers.
fn split_table(text: &str) -> Result<(Metadata, Vec<(usize, Vec<&str>)>)> {
    let mut meta = Metadata::new();
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with('#') {
            meta.extend(parse_metadata(line)?);
            continue;
        }
        rows.push((idx + 1, line.split(',').collect()));
    }
    Ok((meta, rows))
}

fn matrix_csv(meta: &Metadata, m: &DMatrix<f64>) -> String {
    let mut out = metadata_line(meta);
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn parse_matrix(text: &str) -> Result<(Metadata, DMatrix<f64>)> {
    let (meta, rows) = split_table(text)?;
    let n_cols = rows.first().map(|r| r.1.len()).unwrap_or(0);
    let mut values = Vec::with_capacity(rows.len() * n_cols);
    for (line, cells) in &rows {
        if cells.len() != n_cols {
            return Err(Error::Parse(format!("line {line}: expected {n_cols} columns, found {}", cells.len())));
        }
        for c in cells {
            values.push(parse_number(c, *line)?);
        }
    }
    Ok((meta, DMatrix::from_row_slice(rows.len(), n_cols, &values)))
}

/// `<stem>_re.csv` and `<stem>_im.csv` next to each other.
pub fn density_paths(stem: &Path) -> (PathBuf, PathBuf) {
    let name = stem.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    (stem.with_file_name(format!("{name}_re.csv")), stem.with_file_name(format!("{name}_im.csv")))
}

pub fn write_density(stem: &Path, rho: &DensityMatrix, meta: &Metadata) -> Result<(PathBuf, PathBuf)> {
    let (re_path, im_path) = density_paths(stem);
    let m = rho.matrix();
    fs::write(&re_path, matrix_csv(meta, &m.map(|c| c.re)))?;
    fs::write(&im_path, matrix_csv(meta, &m.map(|c| c.im)))?;
    Ok((re_path, im_path))
}

pub fn read_density(re_path: &Path, im_path: &Path) -> Result<(DensityMatrix, Metadata)> {
    let (meta, re) = parse_matrix(&fs::read_to_string(re_path)?)?;
    let (_, im) = parse_matrix(&fs::read_to_string(im_path)?)?;
    if re.shape() != im.shape() || re.nrows() != re.ncols() {
        return Err(Error::Parse(format!("density parts have shapes {:?} and {:?}", re.shape(), im.shape())));
    }
    let m = DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| Complex64::new(re[(i, j)], im[(i, j)]));
    Ok((DensityMatrix::from_matrix(m)?, meta))
}

pub fn grid_metadata(meta: &GridMeta) -> Metadata {
    Metadata::from([
        ("time".to_string(), meta.time),
        ("delta".to_string(), meta.delta),
        ("T".to_string(), meta.temperature),
    ])
}

/// First row: empty cell then the momentum axis; each further row: `x`
/// then `W(x, p_j)`.
pub fn wigner_csv(w: &WignerGrid) -> String {
    let mut out = metadata_line(&grid_metadata(&w.meta));
    // leading empty cell above the x column
    for p in &w.p_axis {
        out.push(',');
        out.push_str(&format_number(*p));
    }
    out.push('\n');
    for (i, x) in w.x_axis.iter().enumerate() {
        out.push_str(&format_number(*x));
        for j in 0..w.p_axis.len() {
            out.push(',');
            out.push_str(&format_number(w.values[(i, j)]));
        }
        out.push('\n');
    }
    out
}

pub fn write_wigner(path: &Path, w: &WignerGrid) -> Result<()> {
    fs::write(path, wigner_csv(w))?;
    Ok(())
}

pub fn read_wigner(path: &Path) -> Result<WignerGrid> {
    let text = fs::read_to_string(path)?;
    let (meta, rows) = split_table(&text)?;
    let ((_, header), body) = rows.split_first().ok_or_else(|| Error::Parse("empty Wigner file".into()))?;
    let p_axis = header[1..].iter().map(|c| parse_number(c, 2)).collect::<Result<Vec<_>>>()?;
    let mut x_axis = Vec::with_capacity(body.len());
    let mut values = DMatrix::zeros(body.len(), p_axis.len());
    for (i, (line, cells)) in body.iter().enumerate() {
        if cells.len() != p_axis.len() + 1 {
            return Err(Error::Parse(format!("line {line}: expected {} columns", p_axis.len() + 1)));
        }
        x_axis.push(parse_number(cells[0], *line)?);
        for (j, c) in cells[1..].iter().enumerate() {
            values[(i, j)] = parse_number(c, *line)?;
        }
    }
    if x_axis.len() < 2 || p_axis.len() < 2 {
        return Err(Error::Parse("Wigner grid needs at least 2x2 points".into()));
    }
    let get = |k: &str| meta.get(k).copied().unwrap_or(f64::NAN);
    Ok(WignerGrid {
        x_axis,
        p_axis,
        values,
        meta: GridMeta { time: get("time"), delta: get("delta"), temperature: get("T") },
        imag_residual: f64::NAN,
        half_width: f64::NAN,
    })
}

/// Probe columns written for each sweep axis.
pub fn sweep_columns(axis: SweepAxis) -> &'static [ProbeKind] {
    match axis {
        SweepAxis::Delta => &ProbeKind::ALL,
        SweepAxis::Temperature => &[ProbeKind::Central],
    }
}

/// `delta,left,right,central` or `T,central`, signed amplitudes.
pub fn sweep_csv(result: &SweepResult) -> String {
    let columns = sweep_columns(result.axis);
    let mut out = String::from(result.axis.name());
    for c in columns {
        out.push(',');
        out.push_str(c.name());
    }
    out.push('\n');
    let series: Vec<Vec<Option<f64>>> = columns.iter().map(|&c| result.series(c)).collect();
    for (i, point) in result.points.iter().enumerate() {
        out.push_str(&format_number(point.value));
        for s in &series {
            let _ = write!(out, ",{}", format_number(s[i].unwrap_or(f64::NAN)));
        }
        out.push('\n');
    }
    out
}

pub fn write_sweep(path: &Path, result: &SweepResult) -> Result<()> {
    fs::write(path, sweep_csv(result))?;
    Ok(())
}

/// A sweep table read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub axis_values: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// `(axis, |value|)` pairs with missing values dropped.
    pub fn magnitudes(&self, name: &str) -> Option<(Vec<f64>, Vec<f64>)> {
        let col = self.column(name)?;
        Some(
            self.axis_values
                .iter()
                .zip(col)
                .filter(|(_, v)| v.is_finite())
                .map(|(x, v)| (*x, v.abs()))
                .unzip(),
        )
    }
}

pub fn parse_sweep(text: &str) -> Result<SweepTable> {
    let (_, rows) = split_table(text)?;
    let ((_, header), body) = rows.split_first().ok_or_else(|| Error::Parse("empty sweep file".into()))?;
    let axis = match header[0].trim() {
        "delta" => SweepAxis::Delta,
        "T" => SweepAxis::Temperature,
        other => return Err(Error::Parse(format!("line 1: unknown sweep axis '{other}'"))),
    };
    let names: Vec<String> = header[1..].iter().map(|s| s.trim().to_string()).collect();
    let mut axis_values = Vec::new();
    let mut cols = vec![Vec::new(); names.len()];
    for (line, cells) in body {
        if cells.len() != names.len() + 1 {
            return Err(Error::Parse(format!("line {line}: expected {} columns, found {}", names.len() + 1, cells.len())));
        }
        axis_values.push(parse_number(cells[0], *line)?);
        for (k, c) in cells[1..].iter().enumerate() {
            cols[k].push(parse_number(c, *line)?);
        }
    }
    Ok(SweepTable { axis, axis_values, columns: names.into_iter().zip(cols).collect() })
}

pub fn read_sweep(path: &Path) -> Result<SweepTable> {
    parse_sweep(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_is_nine_digits() {
        assert_eq!(format_number(0.1), "1.00000000e-1");
        assert_eq!(format_number(-48938.28633752319), "-4.89382863e4");
        assert_eq!(format_number(f64::NAN), "nan");
        assert!(parse_number("nan", 1).unwrap().is_nan());
        assert!(parse_number("x", 3).is_err());
    }

    #[test]
    fn density_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(0.75, 0.0),
            Complex64::new(0.1, 0.2),
            Complex64::new(0.1, -0.2),
            Complex64::new(0.25, 0.0),
        ]);
        let rho = DensityMatrix::from_matrix(m.clone()).unwrap();
        let meta = Metadata::from([("time".to_string(), 12.5), ("trace_residual".to_string(), 0.0)]);
        let (re, im) = write_density(&dir.path().join("rho"), &rho, &meta).unwrap();
        assert!(re.ends_with("rho_re.csv") && im.ends_with("rho_im.csv"));
        let text = fs::read_to_string(&re).unwrap();
        assert!(text.starts_with("# time=1.25000000e1 trace_residual=0.00000000e0\n"));
        let (back, meta_back) = read_density(&re, &im).unwrap();
        assert_eq!(back.matrix(), &m);
        assert_eq!(meta_back, meta);
    }

    #[test]
    fn wigner_round_trip() {
        let w = WignerGrid {
            x_axis: vec![0.0, 0.5, 1.0],
            p_axis: vec![-1.0, 1.0],
            values: DMatrix::from_row_slice(3, 2, &[0.1, -0.2, 0.3, 0.4, 0.5, -0.6]),
            meta: GridMeta { time: 1.0, delta: 2.0, temperature: 3.0 },
            imag_residual: 0.0,
            half_width: 1.0,
        };
        let text = wigner_csv(&w);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# T=3.00000000e0 delta=2.00000000e0 time=1.00000000e0"));
        assert_eq!(lines.next(), Some(",-1.00000000e0,1.00000000e0"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        write_wigner(&path, &w).unwrap();
        let back = read_wigner(&path).unwrap();
        assert_eq!((back.x_axis, back.p_axis, back.values, back.meta), (w.x_axis, w.p_axis, w.values, w.meta));
    }

    #[test]
    fn sweep_table_parsing() {
        let table = parse_sweep("delta,left,right,central\n0,1,2,-3\n1e3,nan,1.5,-2\n").unwrap();
        assert_eq!(table.axis, SweepAxis::Delta);
        assert_eq!(table.column("right"), Some(&[2.0, 1.5][..]));
        let (x, y) = table.magnitudes("left").unwrap();
        assert_eq!((x, y), (vec![0.0], vec![1.0]));
        assert!(matches!(parse_sweep("delta,central\n0,1,2\n"), Err(Error::Parse(msg)) if msg.contains("line 2")));
        assert!(parse_sweep("omega,central\n").is_err());
    }
}
