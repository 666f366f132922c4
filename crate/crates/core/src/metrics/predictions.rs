use std::path::Path;

use super::Prediction;
use crate::error::{Error, Result};

const HEADER: [&str; 3] = ["id", "confidence", "correct"];

pub(crate) fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize);
    let message = match e.kind() {
        csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".to_string(),
        _ => e.to_string(),
    };
    Error::Validation { line, message }
}

/// Serializes predictions as `id,confidence,correct` with six decimals and
/// `0`/`1` labels, in input order.
pub fn predictions_to_csv(preds: &[Prediction]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    w.write_record(HEADER).map_err(csv_error)?;
    for p in preds {
        let conf = format!("{:.6}", p.confidence);
        w.write_record([p.id.as_str(), conf.as_str(), if p.correct { "1" } else { "0" }])
            .map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output of UTF-8 input"))
}

pub fn parse_predictions(text: &str) -> Result<Vec<Prediction>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = r.headers().map_err(csv_error)?.clone();
    if headers.iter().ne(HEADER) {
        return Err(Error::at_line(1, format!("expected header {}", HEADER.join(","))));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != 3 {
            return Err(Error::at_line(line, format!("expected 3 fields, found {}", rec.len())));
        }
        let confidence: f64 = rec[1]
            .parse()
            .map_err(|_| Error::at_line(line, format!("invalid confidence {:?}", &rec[1])))?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::at_line(line, format!("confidence {confidence} outside [0, 1]")));
        }
        let correct = match &rec[2] {
            "1" => true,
            "0" => false,
            other => return Err(Error::at_line(line, format!("correct must be 0 or 1, got {other:?}"))),
        };
        out.push(Prediction::new(&rec[0], confidence, correct));
    }
    Ok(out)
}

pub fn write_predictions(path: &Path, preds: &[Prediction]) -> Result<()> {
    let text = predictions_to_csv(preds)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_quoting() {
        let preds = vec![
            Prediction::new("q1:0", 0.25, true),
            Prediction::new("odd,\"id\"", 1.0, false),
        ];
        let text = predictions_to_csv(&preds).unwrap();
        assert!(text.starts_with("id,confidence,correct\nq1:0,0.250000,1\n"));
        assert_eq!(parse_predictions(&text).unwrap(), preds);
    }

    #[test]
    fn rejects_bad_rows() {
        let err = parse_predictions("id,confidence,correct\na,0.5,1\nb,1.5,0\n").unwrap_err();
        assert!(err.to_string().starts_with("line 3:"), "{err}");
        assert!(parse_predictions("id,conf,correct\n").is_err());
        assert!(parse_predictions("id,confidence,correct\na,x,1\n").is_err());
        assert!(parse_predictions("id,confidence,correct\na,0.5,yes\n").is_err());
        assert!(parse_predictions("id,confidence,correct\na,0.5\n").is_err());
    }
}
