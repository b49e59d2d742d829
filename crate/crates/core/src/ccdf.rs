//! Empirical CCDF tables on a 0.1 dB grid, their CSV form and merging.
//!
//! Grid points are kept as integer tenths of a dB so tables from different
//! runs line up exactly. A table spans `floor(10 min)` to `ceil(10 max)`
//! over all its samples; below that range every column is 1, above it 0.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CcdfColumn {
    pub name: String,
    /// `Pr{PAPR > gamma}` at each grid point.
    pub probabilities: Vec<f64>,
    /// Trial count behind the column, when known.
    pub trials: Option<usize>,
    /// Sorted PAPR samples in dB, when known.
    pub samples: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcdfTable {
    /// First grid point in tenths of a dB.
    pub start: i64,
    pub len: usize,
    pub columns: Vec<CcdfColumn>,
}

impl CcdfTable {
    /// Build from raw PAPR samples (dB), one entry per column.
    pub fn from_samples(columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (name, s) in &columns {
            if s.is_empty() {
                return Err(Error::invalid(format!("column '{name}' has no samples")));
            }
            for &v in s {
                if !v.is_finite() {
                    return Err(Error::Numeric(format!("non-finite PAPR in column '{name}'")));
                }
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        check_unique(columns.iter().map(|(n, _)| n.as_str()))?;
        let (start, len) = if columns.is_empty() {
            (0, 0)
        } else {
            let start = (lo * 10.0).floor() as i64;
            let end = (hi * 10.0).ceil() as i64;
            (start, (end - start + 1) as usize)
        };
        let columns = columns
            .into_iter()
            .map(|(name, mut s)| {
                s.sort_by(f64::total_cmp);
                let n = s.len() as f64;
                let probabilities = (0..len)
                    .map(|i| {
                        let gamma = grid_value(start + i as i64);
                        let at_or_below = s.partition_point(|&v| v <= gamma);
                        (s.len() - at_or_below) as f64 / n
                    })
                    .collect();
                CcdfColumn {
                    name,
                    probabilities,
                    trials: Some(s.len()),
                    samples: Some(s),
                }
            })
            .collect();
        Ok(CcdfTable { start, len, columns })
    }

    pub fn gamma_db(&self) -> Vec<f64> {
        (0..self.len).map(|i| grid_value(self.start + i as i64)).collect()
    }

    pub fn column(&self, name: &str) -> Option<&CcdfColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Probability of column `c` at grid index `g`, extended with 1 below and 0 above.
    pub fn probability_at(&self, c: usize, g: i64) -> f64 {
        if g < self.start {
            1.0
        } else if g >= self.start + self.len as i64 {
            0.0
        } else {
            self.columns[c].probabilities[(g - self.start) as usize]
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let io = |e: csv::Error| Error::Numeric(format!("CSV write failed: {e}"));
        let mut header = vec!["gamma_db".to_string()];
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        w.write_record(&header).map_err(io)?;
        for (i, gamma) in self.gamma_db().into_iter().enumerate() {
            let mut row = vec![format_sig6(gamma)];
            row.extend(self.columns.iter().map(|c| format_sig6(c.probabilities[i])));
            w.write_record(&row).map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::Numeric(format!("CSV write failed: {e}")))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let bad = |msg: String| Error::Config(format!("malformed CCDF CSV: {msg}"));
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
        if header.get(0) != Some("gamma_db") {
            return Err(bad("first column must be gamma_db".into()));
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        check_unique(names.iter().map(String::as_str))?;
        let mut start = None;
        let mut probs: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        let mut len = 0usize;
        for rec in r.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("not a number: '{s}'")));
            let g = (parse(&rec[0])? * 10.0).round() as i64;
            let s0 = *start.get_or_insert(g);
            if g != s0 + len as i64 {
                return Err(bad(format!("grid is not a contiguous 0.1 dB sequence at {}", &rec[0])));
            }
            for (c, col) in probs.iter_mut().enumerate() {
                let p = parse(rec.get(c + 1).ok_or_else(|| bad("short row".into()))?)?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(bad(format!("probability {p} outside [0, 1]")));
                }
                col.push(p);
            }
            len += 1;
        }
        Ok(CcdfTable {
            start: start.unwrap_or(0),
            len,
            columns: names
                .into_iter()
                .zip(probs)
                .map(|(name, probabilities)| CcdfColumn {
                    name,
                    probabilities,
                    trials: None,
                    samples: None,
                })
                .collect(),
        })
    }

    /// Per-column PAPR (dB) at exceedance probability `level`.
    pub fn summarize(&self, level: f64) -> Vec<(String, Option<f64>)> {
        self.columns
            .iter()
            .map(|c| (c.name.clone(), summarize_column(self, c, level)))
            .collect()
    }

    pub fn summarize_one(&self, name: &str, level: f64) -> Option<f64> {
        self.column(name).and_then(|c| summarize_column(self, c, level))
    }
}

fn check_unique<'a>(names: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(Error::Config(format!("duplicate column '{n}'")));
        }
    }
    Ok(())
}

fn grid_value(g: i64) -> f64 {
    g as f64 / 10.0
}

/// Sample quantile at fractional position `n (1 - level)` when samples are
/// kept; otherwise linear interpolation along the grid.
fn summarize_column(table: &CcdfTable, col: &CcdfColumn, level: f64) -> Option<f64> {
    if !(level > 0.0 && level < 1.0) {
        return None;
    }
    if let Some(s) = &col.samples {
        let n = s.len();
        let pos = n as f64 * (1.0 - level);
        if pos > (n - 1) as f64 {
            return None;
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        let next = s[(i + 1).min(n - 1)];
        return Some(s[i] + frac * (next - s[i]));
    }
    let p = &col.probabilities;
    let x = table.gamma_db();
    let first = p.iter().position(|&v| v <= level)?;
    if first == 0 {
        return (p[0] == level).then_some(x[0]);
    }
    let (p0, p1) = (p[first - 1], p[first]);
    let t = if p0 == p1 { 0.0 } else { (p0 - level) / (p0 - p1) };
    Some(x[first - 1] + t * (x[first] - x[first - 1]))
}

/// Format with six significant digits, trailing zeros trimmed.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let a = x.abs();
    if !(1e-4..1e15).contains(&a) {
        return format!("{x:.5e}");
    }
    let exp = a.log10().floor() as i32;
    let mut decimals = (5 - exp).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    // Rounding up can add a digit (9.999996 -> 10.00000).
    if s.trim_start_matches('-')
        .split('.')
        .next()
        .map_or(0, |d| d.trim_start_matches('0').len()) as i32
        > exp + 1
        && decimals > 0
    {
        decimals -= 1;
        s = format!("{x:.decimals$}");
    }
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    s
}

pub fn emit_csv(table: &CcdfTable, path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = std::io::BufWriter::new(file);
    table.write_csv(&mut w)?;
    w.flush().map_err(io)
}

pub fn parse_csv(path: &Path) -> Result<CcdfTable> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    CcdfTable::read_csv(std::io::BufReader::new(file))
}

/// Join tables column-wise on the union grid. Column names must be unique.
pub fn merge(tables: &[CcdfTable]) -> Result<CcdfTable> {
    check_unique(tables.iter().flat_map(|t| t.columns.iter().map(|c| c.name.as_str())))?;
    let ranges: Vec<(i64, i64)> = tables
        .iter()
        .filter(|t| t.len > 0)
        .map(|t| (t.start, t.start + t.len as i64))
        .collect();
    let (start, end) = match (ranges.iter().map(|r| r.0).min(), ranges.iter().map(|r| r.1).max()) {
        (Some(s), Some(e)) => (s, e),
        _ => (0, 0),
    };
    let len = (end - start) as usize;
    let mut columns = Vec::new();
    for t in tables {
        for (c, col) in t.columns.iter().enumerate() {
            columns.push(CcdfColumn {
                name: col.name.clone(),
                probabilities: (0..len).map(|i| t.probability_at(c, start + i as i64)).collect(),
                trials: col.trials,
                samples: col.samples.clone(),
            });
        }
    }
    Ok(CcdfTable { start, len, columns })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> CcdfTable {
        CcdfTable::from_samples(vec![
            ("a".into(), vec![6.04, 7.55, 8.0, 9.123456]),
            ("b".into(), vec![5.5]),
        ])
        .unwrap()
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(1.0), "1");
        assert_eq!(format_sig6(0.25), "0.25");
        assert_eq!(format_sig6(7.3), "7.3");
        assert_eq!(format_sig6(1.0 / 3.0), "0.333333");
        assert_eq!(format_sig6(123.4567), "123.457");
        assert_eq!(format_sig6(9.9999996), "10");
        assert_eq!(format_sig6(-0.5), "-0.5");
        assert_eq!(format_sig6(2e-5), "2.00000e-5");
    }

    #[test]
    fn grid_and_probabilities() {
        let t = table();
        assert_eq!(t.start, 55);
        assert_eq!(t.len, 38);
        let a = &t.columns[0];
        assert_eq!(a.probabilities[0], 1.0);
        assert_eq!(*a.probabilities.last().unwrap(), 0.0);
        for c in &t.columns {
            for w in c.probabilities.windows(2) {
                assert!(w[1] <= w[0]);
            }
        }
        // b is a step at 5.5: 1 below, 0 from 5.5 on.
        assert_eq!(t.columns[1].probabilities[0], 0.0);
        assert_eq!(t.probability_at(1, 54), 1.0);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = table();
        let text = t.to_csv_string();
        assert!(text.starts_with("gamma_db,a,b\n"));
        assert!(!text.contains('\r'));
        let back = CcdfTable::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.start, t.start);
        assert_eq!(back.to_csv_string(), text);
    }

    #[test]
    fn empty_method_set_is_header_only() {
        let t = CcdfTable::from_samples(vec![]).unwrap();
        assert_eq!(t.to_csv_string(), "gamma_db\n");
    }

    #[test]
    fn summarize_examples() {
        let t = table();
        assert_eq!(t.summarize_one("b", 0.5), None);
        let single = CcdfTable::from_samples(vec![("x".into(), vec![7.0; 10])]).unwrap();
        for level in [0.1, 0.5, 0.9] {
            assert_eq!(single.summarize_one("x", level), Some(7.0));
        }
        assert_eq!(single.summarize_one("x", 0.05), None);
        let hi = t.summarize_one("a", 0.25).unwrap();
        let mid = t.summarize_one("a", 0.5).unwrap();
        assert!(mid <= hi);
        assert!((hi - 9.123456).abs() < 1e-12);
    }

    #[test]
    fn grid_summary_without_samples() {
        let t = CcdfTable::read_csv(table().to_csv_string().as_bytes()).unwrap();
        let v = t.summarize_one("a", 0.5).unwrap();
        assert!((7.5..=8.0).contains(&v));
    }

    #[test]
    fn merge_extends_with_ones_and_zeros() {
        let x = CcdfTable::from_samples(vec![("x".into(), vec![5.0, 6.0])]).unwrap();
        let y = CcdfTable::from_samples(vec![("y".into(), vec![8.0])]).unwrap();
        let m = merge(&[x.clone(), y]).unwrap();
        assert_eq!(m.start, 50);
        assert_eq!(m.len, 31);
        assert_eq!(m.columns[1].probabilities[0], 1.0);
        assert_eq!(*m.columns[0].probabilities.last().unwrap(), 0.0);
        assert!(merge(&[x.clone(), x]).is_err());
    }

    #[test]
    fn malformed_csv_rejected() {
        assert!(CcdfTable::read_csv("gamma,a\n1,0.5\n".as_bytes()).is_err());
        assert!(CcdfTable::read_csv("gamma_db,a\n1,0.5\n1.2,0.4\n".as_bytes()).is_err());
        assert!(CcdfTable::read_csv("gamma_db,a\n1,1.5\n".as_bytes()).is_err());
        assert!(CcdfTable::read_csv("gamma_db,a,a\n1,1,1\n".as_bytes()).is_err());
    }
}
