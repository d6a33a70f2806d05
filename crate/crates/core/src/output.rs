//! Writers for trajectories, reports and plot data.
//!
//! Trajectory CSV columns, in order:
//! `t, node, v_d, v_q, v_rms, z_d, z_q, sigma_d, sigma_q, e_norm, b, dP, dQ`.
//! One row per recorded time and node; nodes are numbered from 1 and `z_d` is
//! the absolute nominal d-voltage.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::netmodel::NetworkModel;
use crate::sim::{SimReport, Trajectory};

pub const CSV_HEADER: &str = "t,node,v_d,v_q,v_rms,z_d,z_q,sigma_d,sigma_q,e_norm,b,dP,dQ";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes the trajectory as CSV.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, rated: &[f64], out: &mut W) -> std::io::Result<()> {
    let n = rated.len();
    writeln!(out, "{CSV_HEADER}")?;
    for (k, &t) in traj.times.iter().enumerate() {
        let s = &traj.states[k];
        let v = &traj.v[k];
        let d = &traj.disturbances[k];
        for i in 0..n {
            let e_norm = s.e[i].hypot(s.e[n + i]);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                t,
                i + 1,
                v[i],
                v[n + i],
                v[i].hypot(v[n + i]),
                s.z_tilde[i] + rated[i],
                s.z_tilde[n + i],
                s.sigma_d[i],
                s.sigma_q[i],
                e_norm,
                traj.b[k][i],
                d.p[i],
                d.q[i]
            )?;
        }
    }
    Ok(())
}

/// Serialises `value` as pretty JSON into `path`.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn write_series(path: &Path, points: impl Iterator<Item = (f64, f64)>) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for (x, y) in points {
        writeln!(w, "{x} {y}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes one two-column text file per plotted series into `dir/plots`:
/// RMS true and nominal voltages with the constraint band, d-integrators,
/// load deviations and barrier values, per node.
pub fn write_plot_data(traj: &Trajectory, model: &NetworkModel, dir: &Path) -> Result<Vec<PathBuf>> {
    let plots = dir.join("plots");
    fs::create_dir_all(&plots).map_err(io_err(&plots))?;
    let n = model.node_count;
    let t = &traj.times;
    let (t0, t1) = (t.first().copied().unwrap_or(0.0), t.last().copied().unwrap_or(0.0));
    let mut written = Vec::new();
    for i in 0..n {
        let node = i + 1;
        let lo = model.constraint_center[i] - model.v_max[i];
        let hi = model.constraint_center[i] + model.v_max[i];
        let series: Vec<(String, Vec<(f64, f64)>)> = vec![
            (
                format!("voltage_v{node}.dat"),
                t.iter().zip(&traj.v).map(|(&t, v)| (t, v[i].hypot(v[n + i]))).collect(),
            ),
            (
                format!("voltage_z{node}.dat"),
                t.iter()
                    .zip(&traj.states)
                    .map(|(&t, s)| (t, (s.z_tilde[i] + model.rated_voltage[i]).hypot(s.z_tilde[n + i])))
                    .collect(),
            ),
            (format!("voltage_min{node}.dat"), vec![(t0, lo), (t1, lo)]),
            (format!("voltage_max{node}.dat"), vec![(t0, hi), (t1, hi)]),
            (
                format!("sigma_d{node}.dat"),
                t.iter().zip(&traj.states).map(|(&t, s)| (t, s.sigma_d[i])).collect(),
            ),
            (
                format!("dP{node}.dat"),
                t.iter().zip(&traj.disturbances).map(|(&t, d)| (t, d.p[i])).collect(),
            ),
            (
                format!("dQ{node}.dat"),
                t.iter().zip(&traj.disturbances).map(|(&t, d)| (t, d.q[i])).collect(),
            ),
            (
                format!("barrier{node}.dat"),
                t.iter().zip(&traj.b).map(|(&t, b)| (t, b[i])).collect(),
            ),
        ];
        for (name, points) in series {
            let path = plots.join(name);
            write_series(&path, points.into_iter())?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Writes `trajectory.csv`, `report.json` and the plot data into `dir`.
pub fn emit_outputs(traj: &Trajectory, report: &SimReport, model: &NetworkModel, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv = dir.join("trajectory.csv");
    let file = File::create(&csv).map_err(io_err(&csv))?;
    let mut w = BufWriter::new(file);
    write_trajectory_csv(traj, &model.rated_voltage, &mut w)
        .and_then(|_| w.flush())
        .map_err(io_err(&csv))?;
    let json = dir.join("report.json");
    write_json(&json, report)?;
    let mut written = vec![csv, json];
    written.extend(write_plot_data(traj, model, dir)?);
    Ok(written)
}
