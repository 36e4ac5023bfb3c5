//! CSV tables and atomic (temp + rename) file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::bohmian::Trajectory;
use crate::grid_field::WaveField;
use crate::stochastic::CoherenceMatrix;
use crate::Result;

/// Numeric table with a header row; values print with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Coordinates, real and imaginary parts per component, and total density.
pub fn field_table(field: &WaveField) -> Table {
    let grid = field.grid();
    let mut header: Vec<String> = ["x", "y"][..grid.dims()].iter().map(|s| s.to_string()).collect();
    for c in 0..field.spin_dim() {
        header.push(format!("re{c}"));
        header.push(format!("im{c}"));
    }
    header.push("density".into());
    let mut table = Table::new(header);
    let rho = field.density();
    for (i, r) in rho.iter().enumerate() {
        let p = grid.point(i);
        let mut row = p[..grid.dims()].to_vec();
        for c in 0..field.spin_dim() {
            let z = field.component(c)[i];
            row.extend([z.re, z.im]);
        }
        row.push(*r);
        table.push(row);
    }
    table
}

/// `(x, value)` rows over the grid nodes of `field`.
pub fn profile_table(field: &WaveField, columns: &[(&str, &[f64])]) -> Table {
    let grid = field.grid();
    let mut header: Vec<String> = ["x", "y"][..grid.dims()].iter().map(|s| s.to_string()).collect();
    header.extend(columns.iter().map(|(name, _)| name.to_string()));
    let mut table = Table::new(header);
    for i in 0..grid.len() {
        let p = grid.point(i);
        let mut row = p[..grid.dims()].to_vec();
        row.extend(columns.iter().map(|(_, v)| v[i]));
        table.push(row);
    }
    table
}

/// One row per recorded sample: trajectory index, flag, time, position.
pub fn trajectory_table(trajectories: &[Trajectory], dims: usize) -> Table {
    let mut header = vec!["index".to_string(), "flagged".into(), "t".into(), "x".into()];
    if dims == 2 {
        header.push("y".into());
    }
    let mut table = Table::new(header);
    for (i, tr) in trajectories.iter().enumerate() {
        for (t, p) in tr.times.iter().zip(&tr.positions) {
            let mut row = vec![i as f64, f64::from(u8::from(tr.flagged)), *t, p[0]];
            if dims == 2 {
                row.push(p[1]);
            }
            table.push(row);
        }
    }
    table
}

/// `(k, k', re, im, abs)` rows.
pub fn coherence_table(m: &CoherenceMatrix) -> Table {
    let mut table = Table::new(["k", "kp", "re", "im", "abs"]);
    for (k, row) in m.entries.iter().enumerate() {
        for (kp, v) in row.iter().enumerate() {
            table.push(vec![k as f64, kp as f64, v.re, v.im, v.norm()]);
        }
    }
    table
}

/// Files staged in memory and committed together: every temp file is
/// written and synced before any is renamed into place.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, contents: impl Into<Vec<u8>>) {
        self.files.push((name.into(), contents.into()));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn files(&self) -> impl Iterator<Item = (&str, &[u8])> {
        self.files.iter().map(|(n, b)| (n.as_str(), b.as_slice()))
    }

    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let target = dir.join(name);
            let tmp = dir.join(format!(".{name}.tmp"));
            let written = (|| -> std::io::Result<()> {
                let mut f = fs::File::create(&tmp)?;
                f.write_all(bytes)?;
                f.sync_all()
            })();
            if let Err(e) = written {
                let _ = fs::remove_file(&tmp);
                staged.iter().for_each(|(t, _): &(PathBuf, PathBuf)| {
                    let _ = fs::remove_file(t);
                });
                return Err(e.into());
            }
            staged.push((tmp, target));
        }
        let mut out = Vec::with_capacity(staged.len());
        for (tmp, target) in staged {
            fs::rename(&tmp, &target)?;
            out.push(target);
        }
        Ok(out)
    }
}

/// Single-file atomic write.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("output");
    let mut set = OutputSet::new();
    set.add(name, contents);
    set.commit(dir).map(|_| ())
}
