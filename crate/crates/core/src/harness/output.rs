//! CSV serialization of sweep rows.

use std::io::Write;
use std::path::Path;

use crate::harness::sweep::{RowEngine, SimColumns, SweepRow};
use crate::harness::HarnessError;

pub const BASE_COLUMNS: [&str; 11] = [
    "n", "k", "delta", "t_d", "t_bs", "engine", "eta", "t_eta", "p_idle", "t_dw", "gain",
];
pub const SIM_COLUMNS: [&str; 4] = ["t_dw_stderr", "busy_frac", "busy_frac_stderr", "rel_diff"];

/// Nine significant digits in the style of C's `%.9g`: fixed notation for
/// decimal exponents in [-4, 9), scientific otherwise, trailing zeros
/// dropped.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!(
            "{}e{sign}{:02}",
            trim_zeros(mantissa.to_string()),
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn record(row: &SweepRow, with_sim: bool) -> Vec<String> {
    let mut out = vec![
        row.n.to_string(),
        row.k.to_string(),
        fmt_sig(row.delta),
        fmt_sig(row.t_d),
        fmt_sig(row.t_bs),
        row.engine.as_str().to_string(),
        fmt_sig(row.eta),
        fmt_sig(row.t_eta),
        fmt_sig(row.p_idle),
        fmt_sig(row.t_dw),
        fmt_sig(row.gain),
    ];
    if with_sim {
        let opt = |v: Option<f64>| v.map(fmt_sig).unwrap_or_default();
        out.push(opt(row.sim.map(|s| s.t_dw_stderr)));
        out.push(opt(row.sim.map(|s| s.busy_frac)));
        out.push(opt(row.sim.map(|s| s.busy_frac_stderr)));
        out.push(opt(row.rel_diff));
    }
    out
}

/// Writes the header and rows. The simulation columns appear only when at
/// least one row was simulated.
pub fn write_csv<W: Write>(rows: &[SweepRow], writer: W) -> csv::Result<()> {
    let with_sim = rows.iter().any(|r| r.sim.is_some());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let mut header: Vec<&str> = BASE_COLUMNS.to_vec();
    if with_sim {
        header.extend(SIM_COLUMNS);
    }
    w.write_record(&header)?;
    for row in rows {
        w.write_record(record(row, with_sim))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<(), HarnessError> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).map_err(|source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    std::fs::write(path, buf).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses a file written by [`emit_csv`]. Values carry the nine digits
/// they were written with.
pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>, HarnessError> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new().from_path(path).map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = Vec::with_capacity(BASE_COLUMNS.len());
    for name in BASE_COLUMNS {
        idx.push(column(name).ok_or_else(|| {
            HarnessError::Input(format!("{}: missing column `{name}`", path.display()))
        })?);
    }
    let sim_idx: Vec<Option<usize>> = SIM_COLUMNS.iter().map(|c| column(c)).collect();

    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let bad = |col: &str, v: &str| {
            HarnessError::Input(format!(
                "{}: line {}: bad `{col}` value `{v}`",
                path.display(),
                line + 2
            ))
        };
        let field = |i: usize| rec.get(idx[i]).unwrap_or("");
        let num = |i: usize| {
            field(i)
                .parse::<f64>()
                .map_err(|_| bad(BASE_COLUMNS[i], field(i)))
        };
        let int = |i: usize| {
            field(i)
                .parse::<usize>()
                .map_err(|_| bad(BASE_COLUMNS[i], field(i)))
        };
        let opt = |j: usize| -> Result<Option<f64>, HarnessError> {
            match sim_idx[j].and_then(|c| rec.get(c)).unwrap_or("") {
                "" => Ok(None),
                v => v.parse().map(Some).map_err(|_| bad(SIM_COLUMNS[j], v)),
            }
        };
        let engine = match field(5) {
            "analytic" => RowEngine::Analytic,
            "simulate" => RowEngine::Simulate,
            v => return Err(bad("engine", v)),
        };
        let sim = match (opt(0)?, opt(1)?, opt(2)?) {
            (Some(t_dw_stderr), Some(busy_frac), Some(busy_frac_stderr)) => Some(SimColumns {
                t_dw_stderr,
                busy_frac,
                busy_frac_stderr,
            }),
            _ => None,
        };
        rows.push(SweepRow {
            n: int(0)?,
            k: int(1)?,
            delta: num(2)?,
            t_d: num(3)?,
            t_bs: num(4)?,
            engine,
            eta: num(6)?,
            t_eta: num(7)?,
            p_idle: num(8)?,
            t_dw: num(9)?,
            gain: num(10)?,
            sim,
            rel_diff: opt(3)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(100.0), "100");
        assert_eq!(fmt_sig(0.01), "0.01");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig(2.0 / 3.0 * 1e-3), "0.000666666667");
        assert_eq!(fmt_sig(123456789.4), "123456789");
        assert_eq!(fmt_sig(1.23456789012e12), "1.23456789e+12");
        assert_eq!(fmt_sig(-2.5e-7), "-2.5e-07");
        assert_eq!(fmt_sig(0.0001), "0.0001");
        assert_eq!(fmt_sig(0.00001), "1e-05");
        assert_eq!(fmt_sig(9.999999999), "10");
    }

    fn sample(engine: RowEngine, sim: bool) -> SweepRow {
        SweepRow {
            n: 4,
            k: 2,
            delta: 0.1,
            t_d: 0.05,
            t_bs: 0.5,
            engine,
            eta: 1.2,
            t_eta: 0.07,
            p_idle: 0.9,
            t_dw: 0.95,
            gain: 1.0 / 0.95,
            sim: sim.then_some(SimColumns {
                t_dw_stderr: 0.001,
                busy_frac: 0.1,
                busy_frac_stderr: 0.002,
            }),
            rel_diff: sim.then_some(0.01),
        }
    }

    #[test]
    fn header_and_line_endings() {
        let mut buf = Vec::new();
        write_csv(&[sample(RowEngine::Analytic, false)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "n,k,delta,t_d,t_bs,engine,eta,t_eta,p_idle,t_dw,gain\n4,2,0.1,0.05,0.5,analytic,1.2,0.07,0.9,0.95,1.05263158\n"
        );
    }

    #[test]
    fn round_trip_with_sim_columns() {
        let rows = vec![
            sample(RowEngine::Analytic, false),
            sample(RowEngine::Simulate, true),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        emit_csv(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("n,k,delta,t_d,t_bs,engine,eta,t_eta,p_idle,t_dw,gain,t_dw_stderr,busy_frac,busy_frac_stderr,rel_diff\n"));
        assert!(!text.contains('\r'));
        let back = read_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].sim, None);
        assert_eq!(back[1].sim, rows[1].sim);
        assert_eq!(back[1].rel_diff, Some(0.01));
        assert!((back[0].gain - rows[0].gain).abs() < 1e-8);
    }

    #[test]
    fn io_errors_surface() {
        let err = emit_csv(&[], Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
