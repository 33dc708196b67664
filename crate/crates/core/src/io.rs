//! On-disk formats.
//!
//! * `energy.csv`: one [`EnergyRecord`] per row, shortest round-trip floats.
//! * `phi_t<t>.csv`: `ny` lines of `nx` values, line `j` holding `φ[·, j]`,
//!   17 significant digits.
//! * `phi_t<t>.pgm`: binary 8-bit greyscale of `clamp(φ, 0, 1)`.
//! * `bench.csv`: one row per step policy.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{Field2D, Grid2D};
use crate::sim::{BenchRow, BenchTable, EnergyRecord};

pub const ENERGY_HEADER: &str =
    "t,dt,U,U_per_volume,l2_norm,mean_phi,min_phi,max_phi,cg_iters,newton_iters,fallback";

/// File stem for a snapshot at time `t`, e.g. `phi_t0.100000`.
pub fn snapshot_stem(t: f64) -> String {
    format!("phi_t{t:.6}")
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_energy_csv(log: &[EnergyRecord], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "{ENERGY_HEADER}")?;
        for r in log {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.t,
                r.dt,
                r.u,
                r.u_per_volume,
                r.l2_norm,
                r.mean_phi,
                r.min_phi,
                r.max_phi,
                r.cg_iters,
                r.newton_iters,
                u8::from(r.fallback)
            )?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        msg: format!("line {line}: {msg}"),
    }
}

pub fn read_energy_csv(path: &Path) -> Result<Vec<EnergyRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(ENERGY_HEADER) {
        return Err(parse_err(path, 1, "unexpected header"));
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let lineno = n + 2;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 11 {
            return Err(parse_err(path, lineno, format!("expected 11 columns, got {}", cols.len())));
        }
        let f = |k: usize| {
            cols[k]
                .parse::<f64>()
                .map_err(|e| parse_err(path, lineno, format!("column {}: {e}", k + 1)))
        };
        let u = |k: usize| {
            cols[k]
                .parse::<usize>()
                .map_err(|e| parse_err(path, lineno, format!("column {}: {e}", k + 1)))
        };
        out.push(EnergyRecord {
            t: f(0)?,
            dt: f(1)?,
            u: f(2)?,
            u_per_volume: f(3)?,
            l2_norm: f(4)?,
            mean_phi: f(5)?,
            min_phi: f(6)?,
            max_phi: f(7)?,
            cg_iters: u(8)?,
            newton_iters: u(9)?,
            fallback: u(10)? != 0,
        });
    }
    Ok(out)
}

pub fn write_field_csv(f: &Field2D, path: &Path) -> Result<()> {
    let g = f.grid();
    let mut w = create(path)?;
    let res = (|| -> std::io::Result<()> {
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                if i > 0 {
                    w.write_all(b",")?;
                }
                write!(w, "{:.16e}", f.get(i, j))?;
            }
            w.write_all(b"\n")?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// Reads a snapshot CSV onto `grid`, checking its shape.
pub fn read_field_csv(path: &Path, grid: Grid2D) -> Result<Field2D> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::with_capacity(grid.len());
    let mut rows = 0;
    for (n, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        rows += 1;
        let before = values.len();
        for tok in line.split(',') {
            values.push(
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(path, n + 1, e))?,
            );
        }
        if values.len() - before != grid.nx() {
            return Err(parse_err(
                path,
                n + 1,
                format!("expected {} values, got {}", grid.nx(), values.len() - before),
            ));
        }
    }
    if rows != grid.ny() {
        return Err(parse_err(path, rows, format!("expected {} rows, got {rows}", grid.ny())));
    }
    Field2D::new(grid, values)
}

/// Grey level `round(255 · clamp(φ, 0, 1))`, exact halves rounded down.
pub fn grey_level(phi: f64) -> u8 {
    (255.0 * phi.clamp(0.0, 1.0) - 0.5).ceil() as u8
}

pub fn write_field_pgm(f: &Field2D, path: &Path) -> Result<()> {
    let g = f.grid();
    let mut w = create(path)?;
    let res = (|| -> std::io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", g.nx(), g.ny())?;
        let bytes: Vec<u8> = f.values().iter().map(|&v| grey_level(v)).collect();
        w.write_all(&bytes)?;
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// Writes `phi_t<t>.csv` and `phi_t<t>.pgm` into `dir`; returns both paths.
pub fn write_snapshot(f: &Field2D, t: f64, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let stem = snapshot_stem(t);
    let csv = dir.join(format!("{stem}.csv"));
    let pgm = dir.join(format!("{stem}.pgm"));
    write_field_csv(f, &csv)?;
    write_field_pgm(f, &pgm)?;
    Ok((csv, pgm))
}

pub fn bench_header(times: &[f64]) -> String {
    let mut h = String::from("policy,steps,wall_seconds");
    for t in times {
        h.push_str(&format!(",re_t{t}"));
    }
    h
}

fn bench_line(row: &BenchRow) -> String {
    let mut s = format!(
        "{},{},{}",
        row.policy,
        row.steps.map(|n| n.to_string()).unwrap_or_default(),
        row.wall_seconds
    );
    for e in &row.errors {
        s.push(',');
        if let Some(e) = e {
            s.push_str(&e.to_string());
        }
    }
    s
}

/// Candidate rows only; the reference is implied.
pub fn write_bench_csv(table: &BenchTable, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "{}", bench_header(&table.times))?;
        for row in &table.rows {
            writeln!(w, "{}", bench_line(row))?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}
