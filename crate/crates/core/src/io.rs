//! Delimited-text observation tables and axis preprocessing.
//!
//! Tables have a header row naming `theta_v`, `theta_x`, `theta_y` and
//! optionally `w` (0/1 group indicator); extra columns are ignored. Tab and
//! comma delimiters are detected from the header. An angle written as an
//! exact `0` is a censored observation. Angles are radians unless the
//! caller asks for degrees. Values are written in shortest round-trip form,
//! so writing and reading back is lossless.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::angle::Angle;
use crate::error::{Error, Result};
use crate::model::Observation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AngleUnit {
    #[default]
    Radians,
    Degrees,
}

impl AngleUnit {
    pub fn to_angle(self, value: f64) -> Result<Angle> {
        match self {
            AngleUnit::Radians => Angle::new(value),
            AngleUnit::Degrees => Angle::from_degrees(value),
        }
    }

    pub fn from_angle(self, a: Angle) -> f64 {
        match self {
            AngleUnit::Radians => a.radians(),
            AngleUnit::Degrees => a.degrees(),
        }
    }
}

fn sniff_delimiter(header: &str) -> u8 {
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

/// Reads the whole input and returns it with its detected delimiter.
fn slurp<R: Read>(mut input: R) -> Result<(String, u8)> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let header = text.lines().next().ok_or(Error::EmptyData)?;
    let delim = sniff_delimiter(header);
    Ok((text, delim))
}

fn csv_line(e: &csv::Error) -> u64 {
    e.position().map_or(0, |p| p.line())
}

pub fn read_observations<R: Read>(input: R, unit: AngleUnit) -> Result<Vec<Observation>> {
    let (text, delim) = slurp(input)?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delim)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let missing = |name: &str| Error::Data {
        line: 1,
        message: format!("missing column '{name}'"),
    };
    let iv = col("theta_v").ok_or_else(|| missing("theta_v"))?;
    let ix = col("theta_x").ok_or_else(|| missing("theta_x"))?;
    let iy = col("theta_y").ok_or_else(|| missing("theta_y"))?;
    let iw = col("w");

    let mut data = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Data {
            line: csv_line(&e),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| -> Result<f64> {
            let raw = rec.get(i).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| Error::Data {
                line,
                message: format!("cannot parse {name} value '{raw}'"),
            })?;
            if !v.is_finite() {
                return Err(Error::Data {
                    line,
                    message: format!("non-finite {name} value '{raw}'"),
                });
            }
            Ok(v)
        };
        let angle = |i: usize, name: &str| -> Result<Angle> { unit.to_angle(field(i, name)?) };
        let group = match iw {
            None => None,
            Some(i) => match rec.get(i).unwrap_or("") {
                "0" => Some(false),
                "1" => Some(true),
                other => {
                    return Err(Error::Data {
                        line,
                        message: format!("group indicator must be 0 or 1, got '{other}'"),
                    })
                }
            },
        };
        data.push(Observation {
            theta_v: angle(iv, "theta_v")?,
            theta_x: angle(ix, "theta_x")?,
            theta_y: angle(iy, "theta_y")?,
            group,
        });
    }
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(data)
}

pub fn read_observations_path(path: &Path, unit: AngleUnit) -> Result<Vec<Observation>> {
    read_observations(File::open(path)?, unit)
}

/// Writes a tab-separated table; the `w` column appears when any record
/// carries a group indicator.
pub fn write_observations<W: Write>(data: &[Observation], out: W, unit: AngleUnit) -> Result<()> {
    let with_group = data.iter().any(|o| o.group.is_some());
    let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
    let mut header = vec!["theta_v", "theta_x", "theta_y"];
    if with_group {
        header.push("w");
    }
    wtr.write_record(&header)?;
    for o in data {
        let mut row = vec![
            unit.from_angle(o.theta_v).to_string(),
            unit.from_angle(o.theta_x).to_string(),
            unit.from_angle(o.theta_y).to_string(),
        ];
        if with_group {
            row.push(if o.w() { "1" } else { "0" }.to_string());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Maps an axis in degrees on `[0, 180)` to `(4·axis) mod 360`, returned as
/// an angle in `[-π, π)`. Axes 90° apart land on the same direction (0° and
/// 90° both map to 0); axes 45° apart land on opposite directions.
pub fn preprocess_axis(axis_degrees: f64) -> Result<Angle> {
    Angle::from_degrees(transformed_degrees(axis_degrees)?)
}

fn transformed_degrees(axis_degrees: f64) -> Result<f64> {
    if !(0.0..180.0).contains(&axis_degrees) {
        return Err(Error::invalid(format!("axis {axis_degrees} outside [0, 180) degrees")));
    }
    let d = (4.0 * axis_degrees).rem_euclid(360.0);
    Ok(if d >= 180.0 { d - 360.0 } else { d })
}

/// Applies [`preprocess_axis`] to the named columns of a delimited table,
/// writing the table back with the same delimiter and angles in `unit`.
/// Transformed values strictly inside `(-censor_degrees, censor_degrees)`
/// are written as an exact `0`; pass `0.0` to keep every value.
pub fn preprocess_table<R: Read, W: Write>(
    input: R,
    out: W,
    columns: &[String],
    unit: AngleUnit,
    censor_degrees: f64,
) -> Result<usize> {
    if !(0.0..180.0).contains(&censor_degrees) {
        return Err(Error::invalid(format!("censoring window {censor_degrees} outside [0, 180) degrees")));
    }
    let (text, delim) = slurp(input)?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delim)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let idx = columns
        .iter()
        .map(|c| {
            headers.iter().position(|h| h == c).ok_or_else(|| Error::Data {
                line: 1,
                message: format!("missing column '{c}'"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut wtr = csv::WriterBuilder::new().delimiter(delim).from_writer(out);
    wtr.write_record(&headers)?;
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Data {
            line: csv_line(&e),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut fields: Vec<String> = rec.iter().map(str::to_string).collect();
        for &i in &idx {
            let raw = &fields[i];
            let v: f64 = raw.parse().map_err(|_| Error::Data {
                line,
                message: format!("cannot parse axis value '{raw}'"),
            })?;
            let d = transformed_degrees(v).map_err(|e| Error::Data {
                line,
                message: e.to_string(),
            })?;
            fields[i] = if d.abs() < censor_degrees {
                "0".to_string()
            } else {
                match unit {
                    AngleUnit::Degrees => d.to_string(),
                    AngleUnit::Radians => preprocess_axis(v)?.radians().to_string(),
                }
            };
        }
        wtr.write_record(&fields)?;
        rows += 1;
    }
    wtr.flush()?;
    Ok(rows)
}

/// Reads the first numeric column of a one-angle-per-line file (header
/// optional), e.g. predictive draws.
pub fn read_angle_column<R: Read>(input: R, unit: AngleUnit) -> Result<Vec<Angle>> {
    let mut out = Vec::new();
    for (k, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let first = line.split(['\t', ',']).next().unwrap_or("").trim();
        if first.is_empty() {
            continue;
        }
        match first.parse::<f64>() {
            Ok(v) => out.push(unit.to_angle(v).map_err(|e| Error::Data {
                line: k as u64 + 1,
                message: e.to_string(),
            })?),
            Err(_) if k == 0 => continue,
            Err(_) => {
                return Err(Error::Data {
                    line: k as u64 + 1,
                    message: format!("cannot parse '{first}'"),
                })
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(out)
}
