//! CSV and JSON writers for the output contract.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::analysis::ExitSolution;
use crate::error::Result;
use crate::integrator::Trajectory;

pub const TRAJECTORY_SIS_HEADER: &str = "t,S,I,jumped";
pub const TRAJECTORY_SIRS_HEADER: &str = "t,S,I,R,jumped";
pub const VERDICTS_HEADER: &str = "panel,beta,threshold,holds";
pub const EXIT_PROFILE_HEADER: &str = "x,u";

/// Writes `t,S,I[,R],jumped` with `t` in fixed notation, six decimals.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let dim = traj.states.first().map_or(2, |s| s.dim());
    writeln!(w, "{}", if dim == 3 { TRAJECTORY_SIRS_HEADER } else { TRAJECTORY_SIS_HEADER })?;
    for ((t, x), jumped) in traj.times.iter().zip(&traj.states).zip(&traj.jumped) {
        write!(w, "{t:.6}")?;
        for c in x.coords() {
            write!(w, ",{c}")?;
        }
        writeln!(w, ",{}", u8::from(*jumped))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictRow {
    pub panel: String,
    pub beta: f64,
    pub threshold: f64,
    pub holds: bool,
}

pub fn write_verdicts_csv(path: &Path, rows: &[VerdictRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{VERDICTS_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.panel, r.beta, r.threshold, r.holds)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_exit_profile_csv(path: &Path, sol: &ExitSolution) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{EXIT_PROFILE_HEADER}")?;
    for (x, u) in sol.grid.iter().zip(&sol.u) {
        writeln!(w, "{x},{u}")?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(std::io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
