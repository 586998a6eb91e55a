//! CSV conventions: `#` comments, header row, LF endings and floats printed
//! with nine significant digits.

use std::io::{self, Read, Write};

use crate::diagnostic::MeasurementRecord;

/// Formats like C's `%.9g`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (8 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_row<W: Write + ?Sized>(out: &mut W, values: &[f64]) -> io::Result<()> {
    let line: Vec<String> = values.iter().map(|&v| format_float(v)).collect();
    writeln!(out, "{}", line.join(","))
}

#[derive(Debug)]
pub enum ReadError {
    Io(io::Error),
    /// Malformed content with its 1-based line number.
    Parse { line: u64, message: String },
}

pub struct MeasurementTable {
    pub has_noise: bool,
    pub records: Vec<MeasurementRecord>,
}

const REQUIRED: [&str; 3] = ["detuning_mhz", "gain_probe", "gain_conjugate"];

pub fn read_measurements<R: Read>(input: R) -> Result<MeasurementTable, ReadError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(input);

    let header = reader.headers().map_err(|e| convert(e, 1))?.clone();
    let names: Vec<&str> = header.iter().collect();
    let has_noise = match names.as_slice() {
        [a, b, c] if [*a, *b, *c] == REQUIRED => false,
        [a, b, c, "nf_db"] if [*a, *b, *c] == REQUIRED => true,
        _ => {
            let line = header.position().map(|p| p.line()).unwrap_or(1);
            return Err(ReadError::Parse {
                line,
                message: format!(
                    "expected header `detuning_mhz,gain_probe,gain_conjugate[,nf_db]`, got `{}`",
                    names.join(",")
                ),
            });
        }
    };

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| convert(e, 0))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| -> Result<f64, ReadError> {
            let raw = row.get(i).unwrap_or("");
            raw.parse::<f64>().map_err(|_| ReadError::Parse {
                line,
                message: format!("column `{}`: cannot parse `{raw}` as a number", header.get(i).unwrap_or("?")),
            })
        };
        let nf_db = if has_noise {
            match row.get(3) {
                Some("") | None => None,
                Some(_) => Some(field(3)?),
            }
        } else {
            None
        };
        records.push(MeasurementRecord {
            detuning_mhz: field(0)?,
            gain_probe: field(1)?,
            gain_conjugate: field(2)?,
            nf_db,
        });
    }
    Ok(MeasurementTable { has_noise, records })
}

fn convert(e: csv::Error, fallback_line: u64) -> ReadError {
    let line = e.position().map(|p| p.line()).unwrap_or(fallback_line);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => ReadError::Io(io),
        kind => ReadError::Parse { line, message: format!("{kind:?}") },
    }
}
