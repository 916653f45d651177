//! Plain-text raster files.
//!
//! ```text
//! ncols 4
//! nrows 2
//! nodata NA
//! 1.5 2 NA 4
//! 0 0.25 1 NA
//! ```
//!
//! Row `y` of the body holds nodes `(0, y) .. (ncols − 1, y)`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::discretize::ClassField;
use crate::error::{Error, Result};
use crate::grid::{GridField, Lattice, ValidationMask};

pub const NODATA: &str = "NA";

fn header_value(line: Option<(usize, &str)>, key: &str, at: usize) -> Result<(usize, String)> {
    let (no, text) = line.ok_or_else(|| Error::parse(at, format!("missing `{key}` header")))?;
    let mut parts = text.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(v), None) if k.eq_ignore_ascii_case(key) => Ok((no, v.to_string())),
        _ => Err(Error::parse(
            no,
            format!("expected `{key} <value>`, found `{}`", text.trim()),
        )),
    }
}

fn parse_size(line: Option<(usize, &str)>, key: &str, at: usize) -> Result<usize> {
    let (no, v) = header_value(line, key, at)?;
    match v.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(Error::parse(
            no,
            format!("`{key}` must be a positive integer, found `{v}`"),
        )),
    }
}

/// Parses a raster from text; `nodata` tokens become missing nodes.
pub fn read_grid(text: &str) -> Result<GridField> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let lx = parse_size(lines.next(), "ncols", 1)?;
    let ly = parse_size(lines.next(), "nrows", 2)?;
    let (_, nodata) = header_value(lines.next(), "nodata", 3)?;

    let mut values = Vec::with_capacity(lx * ly);
    let mut rows = 0;
    let mut last_line = 3;
    for (no, line) in lines {
        last_line = no;
        if rows == ly {
            return Err(Error::parse(no, format!("more than {ly} data rows")));
        }
        let before = values.len();
        for token in line.split_whitespace() {
            if token == nodata {
                values.push(None);
                continue;
            }
            match token.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(Some(v)),
                _ => return Err(Error::parse(no, format!("invalid value `{token}`"))),
            }
        }
        let found = values.len() - before;
        if found != lx {
            return Err(Error::parse(
                no,
                format!("expected {lx} values (ncols), found {found}"),
            ));
        }
        rows += 1;
    }
    if rows != ly {
        return Err(Error::parse(
            last_line,
            format!("expected {ly} data rows (nrows), found {rows}"),
        ));
    }
    GridField::new(lx, ly, values)
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<GridField> {
    read_grid(&fs::read_to_string(path)?)
}

fn header(lattice: Lattice) -> String {
    format!(
        "ncols {}\nnrows {}\nnodata {NODATA}\n",
        lattice.lx(),
        lattice.ly()
    )
}

fn render<T>(lattice: Lattice, cells: impl Fn(usize) -> Option<T>, fmt: impl Fn(&mut String, T)) -> String {
    let mut out = header(lattice);
    for y in 0..lattice.ly() {
        for x in 0..lattice.lx() {
            if x > 0 {
                out.push(' ');
            }
            match cells(lattice.index(x, y)) {
                Some(v) => fmt(&mut out, v),
                None => out.push_str(NODATA),
            }
        }
        out.push('\n');
    }
    out
}

/// Shortest text that parses back to the same values.
pub fn write_grid(grid: &GridField) -> String {
    render(
        grid.lattice(),
        |i| grid.value(i),
        |s, v| {
            let _ = write!(s, "{v}");
        },
    )
}

pub fn save_grid(grid: &GridField, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, write_grid(grid))?)
}

/// Class field with integer values; unassigned nodes are written as `NA`.
pub fn write_classes(classes: &ClassField) -> String {
    render(
        classes.lattice(),
        |i| classes.get(i),
        |s, c| {
            let _ = write!(s, "{}", c.get());
        },
    )
}

pub fn save_classes(classes: &ClassField, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, write_classes(classes))?)
}

/// Reads integer classes `>= 1`. Nothing is frozen in the result.
pub fn read_classes(text: &str) -> Result<ClassField> {
    let grid = read_grid(text)?;
    let mut indices = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        indices.push(match grid.value(i) {
            None => 0,
            Some(v) if v >= 1.0 && v <= u16::MAX as f64 && v.fract() == 0.0 => v as u16,
            Some(v) => {
                return Err(Error::InvalidArgument(format!(
                    "node {i}: class must be a positive integer, found {v}"
                )))
            }
        });
    }
    ClassField::from_indices(grid.lattice(), &indices)
}

pub fn load_classes(path: impl AsRef<Path>) -> Result<ClassField> {
    read_classes(&fs::read_to_string(path)?)
}

/// Mask as a 0/1 raster, 1 marking validation nodes.
pub fn write_mask(mask: &ValidationMask) -> String {
    let flags = mask.flags();
    render(
        mask.lattice(),
        |i| Some(flags[i]),
        |s, f| s.push(if f { '1' } else { '0' }),
    )
}

pub fn save_mask(mask: &ValidationMask, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, write_mask(mask))?)
}

pub fn read_mask(text: &str) -> Result<ValidationMask> {
    let grid = read_grid(text)?;
    let mut flags = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        flags.push(match grid.value(i) {
            Some(0.0) => false,
            Some(1.0) => true,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "node {i}: mask entries must be 0 or 1, found {other:?}"
                )))
            }
        });
    }
    ValidationMask::from_flags(grid.lattice(), flags)
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<ValidationMask> {
    read_mask(&fs::read_to_string(path)?)
}

/// Real-valued map, e.g. per-node spread; non-finite entries become `NA`.
pub fn save_values(lattice: Lattice, values: &[f64], path: impl AsRef<Path>) -> Result<()> {
    if values.len() != lattice.len() {
        return Err(Error::InvalidArgument(format!(
            "{} values for a lattice of {} nodes",
            values.len(),
            lattice.len()
        )));
    }
    let text = render(
        lattice,
        |i| Some(values[i]).filter(|v| v.is_finite()),
        |s, v| {
            let _ = write!(s, "{v}");
        },
    );
    Ok(fs::write(path, text)?)
}
