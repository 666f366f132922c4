use std::fmt::Write as _;
use std::path::Path;

use super::predictions::csv_error;
use super::{
    acc_at_coverage, bin_totals, brier, check, cov_at_accuracy, ece_from_totals, prefix_correct,
    Prediction, NUM_BINS,
};
use crate::error::{Error, Result};

const COMMENT: &str =
    "# calibration report; acc@q uses the top ceil(q*N/100) predictions ranked by confidence desc, id asc";
const BIN_HEADER: [&str; 5] = ["bin_low", "bin_high", "count", "accuracy", "mean_confidence"];
const CURVE_HEADER: [&str; 2] = ["coverage", "prefix_accuracy"];
const METRIC_HEADER: [&str; 2] = ["metric", "value"];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BinStats {
    pub count: usize,
    /// Zero for empty bins.
    pub accuracy: f64,
    /// Zero for empty bins.
    pub mean_confidence: f64,
}

/// Binned calibration statistics, summary metrics and the selective
/// prediction curve for one prediction set.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub bins: Vec<BinStats>,
    pub ece: f64,
    pub brier: f64,
    /// `(k/N, accuracy of the top k)` for every `k = 1..=N`.
    pub selective_points: Vec<(f64, f64)>,
    /// Named extras such as `acc@50` or `cov@0.8`, in insertion order.
    pub selective_metrics: Vec<(String, f64)>,
}

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

impl CalibrationReport {
    pub fn from_predictions(preds: &[Prediction]) -> Result<Self> {
        check(preds)?;
        let n = preds.len();
        let totals = bin_totals(preds);
        let bins = totals
            .iter()
            .map(|&(count, correct, conf_sum)| {
                if count == 0 {
                    BinStats::default()
                } else {
                    BinStats {
                        count,
                        accuracy: correct as f64 / count as f64,
                        mean_confidence: conf_sum / count as f64,
                    }
                }
            })
            .collect();
        let selective_points = prefix_correct(preds)
            .iter()
            .enumerate()
            .map(|(i, &c)| ((i + 1) as f64 / n as f64, c as f64 / (i + 1) as f64))
            .collect();
        Ok(Self {
            bins,
            ece: ece_from_totals(&totals, n),
            brier: brier(preds)?,
            selective_points,
            selective_metrics: Vec::new(),
        })
    }

    /// Adds `acc@q` and `cov@p` rows for the given thresholds; repeated
    /// thresholds are reported once.
    pub fn with_selective(mut self, preds: &[Prediction], qs: &[f64], ps: &[f64]) -> Result<Self> {
        for &q in qs {
            let value = acc_at_coverage(preds, q)?;
            self.push_metric(format!("acc@{q}"), value);
        }
        for &p in ps {
            let value = cov_at_accuracy(preds, p)?;
            self.push_metric(format!("cov@{p}"), value);
        }
        Ok(self)
    }

    fn push_metric(&mut self, name: String, value: f64) {
        if self.metric(&name).is_none() {
            self.selective_metrics.push((name, value));
        }
    }

    pub fn total_count(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "ece" => Some(self.ece),
            "brier" => Some(self.brier),
            _ => self
                .selective_metrics
                .iter()
                .find(|(k, _)| k == name)
                .map(|&(_, v)| v),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .flexible(true)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(vec![]);
        let mut rows: Vec<Vec<String>> = Vec::new();
        rows.push(BIN_HEADER.iter().map(|s| s.to_string()).collect());
        for (i, b) in self.bins.iter().enumerate() {
            rows.push(vec![
                fmt6(i as f64 / NUM_BINS as f64),
                fmt6((i + 1) as f64 / NUM_BINS as f64),
                b.count.to_string(),
                fmt6(b.accuracy),
                fmt6(b.mean_confidence),
            ]);
        }
        rows.push(CURVE_HEADER.iter().map(|s| s.to_string()).collect());
        for &(c, a) in &self.selective_points {
            rows.push(vec![fmt6(c), fmt6(a)]);
        }
        rows.push(METRIC_HEADER.iter().map(|s| s.to_string()).collect());
        rows.push(vec!["ece".into(), fmt6(self.ece)]);
        rows.push(vec!["brier".into(), fmt6(self.brier)]);
        for (k, v) in &self.selective_metrics {
            rows.push(vec![k.clone(), fmt6(*v)]);
        }
        for r in rows {
            w.write_record(&r).expect("writing to memory");
        }
        let body = String::from_utf8(w.into_inner().expect("flush to memory")).expect("ascii");
        format!("{COMMENT}\n{body}")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut records = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            records.push((line, rec));
        }
        let mut it = records.into_iter().peekable();
        let last_line = text.lines().count();

        let expect_header = |it: &mut std::iter::Peekable<_>, header: &[&str]| -> Result<()> {
            match Iterator::next(it) {
                Some((line, rec)) => {
                    let rec: csv::StringRecord = rec;
                    if rec.iter().ne(header.iter().copied()) {
                        return Err(Error::at_line(line, format!("expected header {}", header.join(","))));
                    }
                    Ok(())
                }
                None => Err(Error::at_line(last_line, format!("missing section {}", header.join(",")))),
            }
        };
        let real = |line: usize, field: &str| -> Result<f64> {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::at_line(line, format!("invalid number {field:?}")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::at_line(line, format!("value {v} outside [0, 1]")));
            }
            Ok(v)
        };

        expect_header(&mut it, &BIN_HEADER)?;
        let mut bins = Vec::with_capacity(NUM_BINS);
        for i in 0..NUM_BINS {
            let Some((line, rec)) = it.next() else {
                return Err(Error::at_line(last_line, format!("expected {NUM_BINS} bins, found {i}")));
            };
            if rec.len() != 5 {
                return Err(Error::at_line(line, "bin rows have 5 fields"));
            }
            if rec[0] != fmt6(i as f64 / NUM_BINS as f64) || rec[1] != fmt6((i + 1) as f64 / NUM_BINS as f64) {
                return Err(Error::at_line(line, format!("bin {i} has wrong edges")));
            }
            let count: usize = rec[2]
                .parse()
                .map_err(|_| Error::at_line(line, format!("invalid count {:?}", &rec[2])))?;
            bins.push(BinStats {
                count,
                accuracy: real(line, &rec[3])?,
                mean_confidence: real(line, &rec[4])?,
            });
        }

        expect_header(&mut it, &CURVE_HEADER)?;
        let mut selective_points = Vec::new();
        while let Some((line, rec)) = it.next_if(|(_, r)| r.iter().ne(METRIC_HEADER)) {
            if rec.len() != 2 {
                return Err(Error::at_line(line, "curve rows have 2 fields"));
            }
            let point = (real(line, &rec[0])?, real(line, &rec[1])?);
            if selective_points.last().is_some_and(|&(c, _)| point.0 <= c) {
                return Err(Error::at_line(line, "coverage must be strictly increasing"));
            }
            selective_points.push(point);
        }

        expect_header(&mut it, &METRIC_HEADER)?;
        let mut metrics = Vec::new();
        for (line, rec) in it {
            if rec.len() != 2 {
                return Err(Error::at_line(line, "metric rows have 2 fields"));
            }
            let name = rec[0].to_string();
            if metrics.iter().any(|(k, _)| *k == name) {
                return Err(Error::at_line(line, format!("duplicate metric {name}")));
            }
            metrics.push((name, real(line, &rec[1])?));
        }
        let mut take = |name: &str| -> Result<f64> {
            match metrics.iter().position(|(k, _)| k == name) {
                Some(i) => Ok(metrics.remove(i).1),
                None => Err(Error::invalid(format!("report is missing the {name} row"))),
            }
        };
        let ece = take("ece")?;
        let brier = take("brier")?;
        let report = Self {
            bins,
            ece,
            brier,
            selective_points,
            selective_metrics: metrics,
        };
        if report.total_count() != report.selective_points.len() {
            return Err(Error::invalid(format!(
                "bin counts sum to {} but the curve has {} points",
                report.total_count(),
                report.selective_points.len()
            )));
        }
        Ok(report)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }

    /// Self-contained reliability diagram: per-bin accuracy bars against the
    /// diagonal, with bin mean confidence marked.
    pub fn to_svg(&self) -> String {
        const SIZE: f64 = 400.0;
        const PAD: f64 = 40.0;
        let plot = SIZE - 2.0 * PAD;
        let x = |v: f64| PAD + v * plot;
        let y = |v: f64| SIZE - PAD - v * plot;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
        let w = plot / NUM_BINS as f64;
        for (i, b) in self.bins.iter().enumerate() {
            if b.count == 0 {
                continue;
            }
            let left = x(i as f64 / NUM_BINS as f64);
            let top = y(b.accuracy);
            let _ = writeln!(
                s,
                r##"<rect x="{left:.2}" y="{top:.2}" width="{w:.2}" height="{:.2}" fill="#4878a8" stroke="white"><title>count {} acc {:.3} conf {:.3}</title></rect>"##,
                y(0.0) - top,
                b.count,
                b.accuracy,
                b.mean_confidence
            );
            let _ = writeln!(
                s,
                r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#d1495b"/>"##,
                x(b.mean_confidence),
                y(b.accuracy)
            );
        }
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555" stroke-dasharray="4 3"/>"##,
            x(0.0),
            y(0.0),
            x(1.0),
            y(1.0)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{PAD}" y="{PAD}" width="{plot}" height="{plot}" fill="none" stroke="black"/>"#
        );
        for i in 0..=5 {
            let v = i as f64 / 5.0;
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{v:.1}</text>"#, x(v), SIZE - PAD + 15.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.1}</text>"#, PAD - 5.0, y(v) + 4.0);
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">confidence</text>"#, SIZE / 2.0, SIZE - 8.0);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">ECE {:.4}  Brier {:.4}  N {}</text>"#,
            SIZE / 2.0,
            PAD - 15.0,
            self.ece,
            self.brier,
            self.total_count()
        );
        s.push_str("</svg>\n");
        s
    }
}
