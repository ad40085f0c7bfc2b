//! CSV writers. Floats carry 17 significant digits so values round-trip.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use fdeorbit::fourier::uniform_grid;
use fdeorbit::PeriodicFn;

use crate::Failure;

pub const PROFILE_SAMPLES: usize = 512;

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Table {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl Table {
    /// Opens `dir/name`, writing `# key=value` comment lines before the header.
    pub fn create(dir: &Path, name: &str, comments: &[(&str, String)], header: &[String]) -> Result<Self, Failure> {
        let path = dir.join(name);
        let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", path.display()));
        let mut file = File::create(&path).map_err(io)?;
        for (k, v) in comments {
            writeln!(file, "# {k}={v}").map_err(io)?;
        }
        let mut writer = csv::Writer::from_writer(file);
        writer
            .write_record(header)
            .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        Ok(Self { path, writer })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), Failure> {
        self.writer
            .write_record(fields)
            .map_err(|e| Failure::Io(format!("{}: {e}", self.path.display())))
    }

    pub fn finish(mut self) -> Result<PathBuf, Failure> {
        self.writer
            .flush()
            .map_err(|e| Failure::Io(format!("{}: {e}", self.path.display())))?;
        Ok(self.path)
    }
}

pub fn state_header(first: &str, dim: usize) -> Vec<String> {
    std::iter::once(first.to_string())
        .chain((1..=dim).map(|i| format!("x_{i}")))
        .collect()
}

/// Profile `(t, x_1..x_n)` on 512 uniform phases in `[-π, π)` plus its
/// coefficients `(k, x_1..x_n)` for `k = -M..M`.
pub fn write_orbit(dir: &Path, stem: &str, x: &PeriodicFn, comments: &[(&str, String)]) -> Result<(), Failure> {
    let n = x.dim();
    let mut t = Table::create(dir, &format!("{stem}.csv"), comments, &state_header("t", n))?;
    for s in uniform_grid(PROFILE_SAMPLES, -std::f64::consts::PI) {
        let v = x.eval(s);
        t.row(&std::iter::once(num(s)).chain(v.into_iter().map(num)).collect::<Vec<_>>())?;
    }
    t.finish()?;
    let mut c = Table::create(dir, &format!("{stem}_coeffs.csv"), comments, &state_header("k", n))?;
    let m = x.modes() as isize;
    for k in -m..=m {
        let row: Vec<String> = std::iter::once(k.to_string())
            .chain((0..n).map(|i| num(x.coeff(i, k))))
            .collect();
        c.row(&row)?;
    }
    c.finish()?;
    Ok(())
}
