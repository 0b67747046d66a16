use std::io::{Read, Write};

use super::{AnalysisError, CountMatrix, CountTable, FringeCurve};
use crate::angle::Angle;
use crate::format::sig6;
use crate::network::Basis;

const FRINGE_HEADER: [&str; 2] = ["theta_b_deg", "count"];
const TABLE_HEADER: [&str; 6] = ["theta_a_deg", "theta_b_deg", "n_pp", "n_pm", "n_mp", "n_mm"];

pub fn write_fringe<W: Write>(curve: &FringeCurve, out: W) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FRINGE_HEADER)?;
    for (theta, count) in &curve.points {
        w.write_record([sig6(theta.degrees()), count.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_fringe<R: Read>(basis: Basis, input: R) -> Result<FringeCurve, AnalysisError> {
    let mut r = csv::Reader::from_reader(input);
    check_header(r.headers()?, &FRINGE_HEADER)?;
    let mut points = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        points.push((parse_angle(&rec, 0, row)?, parse_count(&rec, 1, row)?));
    }
    Ok(FringeCurve { basis, points })
}

pub fn write_count_table<W: Write>(table: &CountTable, out: W) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for ((a, b), c) in table.iter() {
        w.write_record([
            sig6(a.degrees()),
            sig6(b.degrees()),
            c.n[0][0].to_string(),
            c.n[0][1].to_string(),
            c.n[1][0].to_string(),
            c.n[1][1].to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_count_table<R: Read>(input: R) -> Result<CountTable, AnalysisError> {
    let mut r = csv::Reader::from_reader(input);
    check_header(r.headers()?, &TABLE_HEADER)?;
    let mut table = CountTable::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let a = parse_angle(&rec, 0, row)?;
        let b = parse_angle(&rec, 1, row)?;
        let counts = CountMatrix::new(
            parse_count(&rec, 2, row)?,
            parse_count(&rec, 3, row)?,
            parse_count(&rec, 4, row)?,
            parse_count(&rec, 5, row)?,
        );
        table.insert(a, b, counts);
    }
    Ok(table)
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<(), AnalysisError> {
    if found.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(AnalysisError::CsvField {
            row: 1,
            msg: format!("expected header {}", expected.join(",")),
        });
    }
    Ok(())
}

fn field<'r>(rec: &'r csv::StringRecord, idx: usize, row: usize) -> Result<&'r str, AnalysisError> {
    rec.get(idx).map(str::trim).ok_or(AnalysisError::CsvField {
        row,
        msg: format!("missing column {}", idx + 1),
    })
}

fn parse_angle(rec: &csv::StringRecord, idx: usize, row: usize) -> Result<Angle, AnalysisError> {
    let s = field(rec, idx, row)?;
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(Angle::from_degrees)
        .ok_or(AnalysisError::CsvField {
            row,
            msg: format!("bad angle {s:?}"),
        })
}

fn parse_count(rec: &csv::StringRecord, idx: usize, row: usize) -> Result<u64, AnalysisError> {
    let s = field(rec, idx, row)?;
    s.parse().map_err(|_| AnalysisError::CsvField {
        row,
        msg: format!("bad count {s:?}"),
    })
}
