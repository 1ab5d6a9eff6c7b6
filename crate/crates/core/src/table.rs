//! Tab-separated tables exchanged with the command-line tool.
//!
//! Every table has a header row. Real numbers are written with six
//! significant digits; whole numbers (populations, integer activities) are
//! written exactly.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::experiment::SweepCell;
use crate::ingest::{ActivityHistogram, DailySnapshot, DayKey};

pub const SNAPSHOT_HEADER: &str = "day\tP\tF\tf_max";
pub const HISTOGRAM_HEADER: &str = "day\tf\tn";
pub const SWEEP_HEADER: &str = "C\tbeta\tinv_beta\tgamma_fit\tgamma_theory\tr2\tstatus";

/// Six significant digits, fixed notation for magnitudes in `[1e-4, 1e6)`.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NA".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0.00000".into();
    }
    // exponent after rounding to 6 significant digits
    let sci = format!("{x:.5e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

/// Exact for whole numbers below 2^53, six significant digits otherwise.
pub fn format_value(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 9.007_199_254_740_992e15 {
        format!("{}", x as i64)
    } else {
        format_sig(x)
    }
}

pub fn write_snapshots<W: Write>(days: &[DailySnapshot], mut w: W) -> Result<()> {
    writeln!(w, "{SNAPSHOT_HEADER}")?;
    for d in days {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            d.day,
            d.population,
            format_value(d.total_activity),
            format_value(d.f_max)
        )?;
    }
    Ok(())
}

/// One row of a snapshot table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotRow {
    pub day: DayKey,
    pub population: u64,
    pub total_activity: f64,
    pub f_max: f64,
}

fn rows<R: Read>(r: R, header: &str) -> Result<Vec<(u64, Vec<String>)>> {
    let mut out = Vec::new();
    let mut lines = BufReader::new(r).lines().enumerate();
    match lines.next() {
        None => return Err(Error::parse(1, "empty table")),
        Some((_, line)) => {
            let line = line.map_err(|e| Error::parse(1, e.to_string()))?;
            if line.trim_end() != header {
                return Err(Error::parse(1, format!("expected header {header:?}, found {:?}", line.trim_end())));
            }
        }
    }
    let width = header.split('\t').count();
    for (i, line) in lines {
        let lineno = i as u64 + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.trim_end_matches(['\r', '\n']).split('\t').map(str::to_string).collect();
        if fields.len() != width {
            return Err(Error::parse(lineno, format!("expected {width} fields, found {}", fields.len())));
        }
        out.push((lineno, fields));
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(line: u64, name: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("{name}: cannot parse {s:?}")))
}

pub fn read_snapshots<R: Read>(r: R) -> Result<Vec<SnapshotRow>> {
    rows(r, SNAPSHOT_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            Ok(SnapshotRow {
                day: f[0].parse().map_err(|e| Error::parse(line, e))?,
                population: num(line, "P", &f[1])?,
                total_activity: num(line, "F", &f[2])?,
                f_max: num(line, "f_max", &f[3])?,
            })
        })
        .collect()
}

pub fn write_histograms<W: Write>(days: &[DailySnapshot], mut w: W) -> Result<()> {
    writeln!(w, "{HISTOGRAM_HEADER}")?;
    for d in days {
        for &(f, n) in d.histogram.bins() {
            writeln!(w, "{}\t{}\t{}", d.day, format_value(f), n)?;
        }
    }
    Ok(())
}

/// Rebuilds snapshots from a histogram table, one per distinct day.
pub fn read_histograms<R: Read>(r: R) -> Result<Vec<DailySnapshot>> {
    let mut by_day: std::collections::BTreeMap<DayKey, Vec<(f64, u64)>> = Default::default();
    for (line, f) in rows(r, HISTOGRAM_HEADER)? {
        let day: DayKey = f[0].parse().map_err(|e| Error::parse(line, e))?;
        let level: f64 = num(line, "f", &f[1])?;
        let n: u64 = num(line, "n", &f[2])?;
        if !(level > 0.0 && level.is_finite()) || n == 0 {
            return Err(Error::parse(line, "activity level must be > 0 and user count >= 1"));
        }
        by_day.entry(day).or_default().push((level, n));
    }
    by_day
        .into_iter()
        .map(|(day, pairs)| DailySnapshot::from_histogram(day, ActivityHistogram::from_counts(pairs)?))
        .collect()
}

pub fn write_sweep<W: Write>(cells: &[SweepCell], mut w: W) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for c in cells {
        let (gamma, r2, status) = match &c.result {
            Ok(fit) => (format_sig(fit.gamma_fit), format_sig(fit.fit_quality), "ok".to_string()),
            Err(msg) => ("NA".into(), "NA".into(), format!("failed: {}", msg.replace(['\t', '\n'], " "))),
        };
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            format_value(c.c),
            format_sig(c.beta),
            format_sig(c.inverse_beta),
            gamma,
            format_sig(c.gamma_theory),
            r2,
            status
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig(1.265_822_78), "1.26582");
        assert_eq!(format_sig(0.18), "0.180000");
        assert_eq!(format_sig(171.0), "171.000");
        assert_eq!(format_sig(-2.5), "-2.50000");
        assert_eq!(format_sig(9.999_999), "10.0000");
        assert_eq!(format_sig(1.98e6), "1.98000e6");
        assert_eq!(format_sig(3.2e-7), "3.20000e-7");
        assert_eq!(format_sig(0.0), "0.00000");
        assert_eq!(format_sig(f64::NAN), "NA");
        assert_eq!(format_value(12345678.0), "12345678");
        assert_eq!(format_value(2.5), "2.50000");
    }

    #[test]
    fn snapshot_and_histogram_tables_round_trip() {
        let days = vec![
            DailySnapshot::from_activities(DayKey::Index(0), [1.0, 1.0, 4.0]).unwrap(),
            DailySnapshot::from_activities(DayKey::Index(3), [2.0, 9.0]).unwrap(),
        ];
        let mut buf = Vec::new();
        write_snapshots(&days, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "day\tP\tF\tf_max\n0\t3\t6\t4\n3\t2\t11\t9\n");
        let rows = read_snapshots(&buf[..]).unwrap();
        assert_eq!(rows[1].population, 2);
        assert_eq!(rows[1].total_activity, 11.0);

        let mut buf = Vec::new();
        write_histograms(&days, &mut buf).unwrap();
        assert_eq!(read_histograms(&buf[..]).unwrap(), days);
    }

    #[test]
    fn table_errors() {
        assert!(matches!(read_snapshots("day\tP\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            read_snapshots("day\tP\tF\tf_max\n0\t3\tx\t1\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(read_histograms("day\tf\tn\n0\t2\t0\n".as_bytes()).is_err());
    }
}
