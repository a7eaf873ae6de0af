//! `metrics.csv`, the manifest and snapshot dumps.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use trunckern_core::{Extension, GridFunction, GridSpec, SpaceTimeField};

use crate::experiment::{MetricRow, RunRecord};

pub const CSV_HEADER: &str = "experiment,rho,s,R,alpha,seminorm,harnack_c,osc_k,alpha_hat,harnack_c_avg,sup_error";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn csv_line(r: &MetricRow) -> String {
    let osc: Vec<String> = r.osc.iter().map(|v| v.to_string()).collect();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.experiment,
        r.rho,
        r.s,
        r.radius,
        r.alpha,
        r.seminorm,
        opt(r.harnack_c),
        osc.join(";"),
        opt(r.alpha_hat),
        opt(r.harnack_c_avg),
        opt(r.sup_error),
    )
}

pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&csv_line(r));
        out.push('\n');
    }
    out
}

pub fn manifest(record: &RunRecord, files: &[PathBuf]) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: &dyn std::fmt::Display| {
        let _ = writeln!(out, "{k} = {v}");
    };
    put("name", &record.config.name);
    put("digest", &record.digest);
    put("input_hash", &record.input_hash);
    put("wall_seconds", &record.wall_seconds);
    put("problem", &record.config.problem.kind.name());
    put("runs", &record.runs.len());
    put("rows", &record.rows.len());
    for (i, run) in record.runs.iter().enumerate() {
        put(&format!("run[{i}].rho"), &run.rho);
        put(&format!("run[{i}].dt"), &run.field.dt);
        put(&format!("run[{i}].snapshots"), &run.field.snapshots.len());
    }
    for f in files {
        put("file", &f.display());
    }
    out.push_str("# config\n");
    for line in record.config.canonical().lines() {
        out.push_str("config.");
        out.push_str(line);
        out.push('\n');
    }
    out
}

fn snapshot_name(record: &RunRecord, i: usize) -> String {
    if record.runs.len() == 1 {
        format!("{}.snapshots.txt", record.config.name)
    } else {
        format!("{}.run{i}.snapshots.txt", record.config.name)
    }
}

/// Writes `metrics.csv`, `manifest.txt` and one snapshot file per run.
pub fn emit_report(record: &RunRecord, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = vec![PathBuf::from("metrics.csv")];
    fs::write(dir.join("metrics.csv"), metrics_csv(&record.rows))?;
    for (i, run) in record.runs.iter().enumerate() {
        let name = snapshot_name(record, i);
        let params = format!(
            "name={} s={} rho={} lambda={} Lambda={} op={:?}",
            record.config.name,
            record.config.kernel.s,
            run.rho,
            record.config.kernel.lambda,
            record.config.kernel.lambda_upper,
            record.config.op.kind,
        );
        let mut w = BufWriter::new(fs::File::create(dir.join(&name))?);
        write_snapshots(&mut w, &run.field, &params)?;
        w.flush()?;
        files.push(PathBuf::from(name));
    }
    files.push(PathBuf::from("manifest.txt"));
    fs::write(dir.join("manifest.txt"), manifest(record, &files))?;
    Ok(files)
}

/// Plain-text dump: `#` header lines, then `t x_1 .. x_d u` per node and snapshot.
pub fn write_snapshots<W: Write>(w: &mut W, field: &SpaceTimeField, params: &str) -> io::Result<()> {
    let g = &field.grid;
    let ext = match &g.extension {
        Extension::Constant(c) => format!("constant {c:.16e}"),
        Extension::Periodic => "periodic".to_string(),
        Extension::Given(_) => "given".to_string(),
    };
    writeln!(w, "# trunckern snapshots")?;
    writeln!(
        w,
        "# grid d={} L={:.16e} n={} extension={}",
        g.dim, g.half_width, g.n, ext
    )?;
    writeln!(w, "# params {params}")?;
    writeln!(w, "# dt={:.16e} snapshots={}", field.dt, field.snapshots.len())?;
    writeln!(
        w,
        "# columns t {} u",
        (1..=g.dim).map(|k| format!("x_{k}")).collect::<Vec<_>>().join(" ")
    )?;
    for (t, u) in &field.snapshots {
        for (i, v) in u.values().iter().enumerate() {
            let x = g.node(i);
            write!(w, "{t:.16e}")?;
            for c in &x[..g.dim] {
                write!(w, " {c:.16e}")?;
            }
            writeln!(w, " {v:.16e}")?;
        }
    }
    Ok(())
}

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

fn header_value<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.split_whitespace()
        .find_map(|tok| tok.strip_prefix(key)?.strip_prefix('='))
}

fn num(t: Option<&str>, what: &str) -> io::Result<f64> {
    t.and_then(|v| v.parse().ok()).ok_or_else(|| bad(format!("bad {what}")))
}

/// Reads a dump written by [`write_snapshots`].
pub fn read_snapshots<R: BufRead>(r: R) -> io::Result<SpaceTimeField> {
    let mut grid: Option<GridSpec> = None;
    let mut dt = None;
    let mut snapshots: Vec<(f64, GridFunction)> = Vec::new();
    let mut current: Option<(f64, Vec<f64>)> = None;
    let flush = |cur: (f64, Vec<f64>), g: &GridSpec, out: &mut Vec<(f64, GridFunction)>| -> io::Result<()> {
        let u = GridFunction::new(g.clone(), cur.1).map_err(|e| bad(e.to_string()))?;
        out.push((cur.0, u));
        Ok(())
    };
    for line in r.lines() {
        let line = line?;
        if let Some(h) = line.strip_prefix('#') {
            if h.trim_start().starts_with("grid ") {
                let d = num(header_value(h, "d"), "d")? as usize;
                let l = num(header_value(h, "L"), "L")?;
                let n = num(header_value(h, "n"), "n")? as usize;
                let ext = h.split_once("extension=").map(|p| p.1.trim()).unwrap_or("");
                let ext = if ext == "periodic" {
                    Extension::Periodic
                } else if let Some(c) = ext.strip_prefix("constant ") {
                    Extension::Constant(num(Some(c.trim()), "extension value")?)
                } else {
                    return Err(bad(format!("unsupported extension `{ext}`")));
                };
                grid = Some(GridSpec::new(d, l, n, ext).map_err(|e| bad(e.to_string()))?);
            } else if let Some(v) = header_value(h, "dt") {
                dt = Some(num(Some(v), "dt")?);
            }
            continue;
        }
        let g = grid.as_ref().ok_or_else(|| bad("data before the grid header"))?;
        let cols: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(format!("bad number `{t}`"))))
            .collect::<io::Result<_>>()?;
        if cols.len() != g.dim + 2 {
            return Err(bad(format!("expected {} columns", g.dim + 2)));
        }
        let t = cols[0];
        match &mut current {
            Some((ct, vals)) if *ct == t && vals.len() < g.len() => vals.push(cols[g.dim + 1]),
            _ => {
                if let Some(cur) = current.take() {
                    flush(cur, g, &mut snapshots)?;
                }
                current = Some((t, vec![cols[g.dim + 1]]));
            }
        }
    }
    let g = grid.ok_or_else(|| bad("missing grid header"))?;
    if let Some(cur) = current.take() {
        flush(cur, &g, &mut snapshots)?;
    }
    let dt = dt.ok_or_else(|| bad("missing dt header"))?;
    SpaceTimeField::new(g, dt, snapshots).map_err(|e| bad(e.to_string()))
}
