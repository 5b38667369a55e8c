//! CSV export and reload of trajectories, per-node map results and
//! convergence logs. Floats are written in shortest round-trip form.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::ks::LogRow;
use crate::maps::{L2Map, Section};
use crate::spaces::{MetricSpace, Space, SpacePoint};
use crate::tangent::{Direction, Germ};

fn csv_err(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
        _ => Error::Parse(e.to_string()),
    }
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn parse(field: &str, column: &str, row: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| {
        Error::Parse(format!(
            "row {row}, column `{column}`: `{field}` is not a number"
        ))
    })
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[String]) -> Result<()> {
    let got: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_owned)
        .collect();
    if got != expected {
        return Err(Error::Parse(format!(
            "header {:?}, expected {:?}",
            got.join(","),
            expected.join(",")
        )));
    }
    Ok(())
}

fn records<R: Read>(input: R, header: &[String]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    check_header(&mut rdr, header)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != header.len() {
            return Err(Error::Parse(format!(
                "row {}: {} fields, expected {}",
                i + 1,
                rec.len(),
                header.len()
            )));
        }
        out.push(
            rec.iter()
                .zip(header)
                .map(|(f, c)| parse(f, c, i + 1))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    Ok(out)
}

/// The first `counts` columns hold non-negative integers and are written
/// without a fractional part.
fn write_rows<W: Write>(
    out: W,
    header: &[String],
    counts: usize,
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        let cells = row.into_iter().enumerate().map(|(i, v)| {
            if i < counts {
                (v as u64).to_string()
            } else {
                fmt(v)
            }
        });
        w.write_record(cells).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// `t,point...,energy,speed,slope`.
pub fn trajectory_header(space: &Space) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(space.coord_names(""));
    h.extend(["energy", "speed", "slope"].map(String::from));
    h
}

/// Reloaded trajectory columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub times: Vec<f64>,
    pub points: Vec<SpacePoint>,
    pub energies: Vec<f64>,
    pub speeds: Vec<f64>,
    pub slopes: Vec<f64>,
}

pub fn write_trajectory<W: Write>(
    out: W,
    space: &Space,
    traj: &Trajectory<SpacePoint>,
    slopes: &[f64],
) -> Result<()> {
    if slopes.len() != traj.len() {
        return Err(Error::Io(format!(
            "{} slopes for {} trajectory points",
            slopes.len(),
            traj.len()
        )));
    }
    let speeds = traj.speeds(space);
    let rows = (0..traj.len()).map(|i| {
        let mut r = vec![traj.times[i]];
        r.extend(space.point_coords(&traj.points[i]));
        r.extend([traj.energies[i], speeds[i], slopes[i]]);
        r
    });
    write_rows(out, &trajectory_header(space), 0, rows)
}

pub fn read_trajectory<R: Read>(input: R, space: &Space) -> Result<TrajectoryTable> {
    let k = space.coord_len();
    let mut t = TrajectoryTable {
        times: vec![],
        points: vec![],
        energies: vec![],
        speeds: vec![],
        slopes: vec![],
    };
    for row in records(input, &trajectory_header(space))? {
        t.times.push(row[0]);
        t.points.push(space.point_from_coords(&row[1..1 + k])?);
        t.energies.push(row[1 + k]);
        t.speeds.push(row[2 + k]);
        t.slopes.push(row[3 + k]);
    }
    Ok(t)
}

/// `node,point...,e_density,lap_norm,lap_dir...`. The `lap_dir` columns
/// hold the chart coordinates of the germ target; together with `lap_norm`
/// they determine the direction exactly.
pub fn map_header(target: &Space) -> Vec<String> {
    let mut h = vec!["node".to_string()];
    h.extend(target.coord_names(""));
    h.extend(["e_density", "lap_norm"].map(String::from));
    h.extend(target.coord_names("lap_dir_"));
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapTable {
    pub map: L2Map,
    pub density: Vec<f64>,
    pub lap_norm: Vec<f64>,
    pub lap: Vec<Direction<SpacePoint>>,
}

pub fn write_map<W: Write>(
    out: W,
    target: &Space,
    u: &L2Map,
    density: &[f64],
    lap: Option<&Section>,
) -> Result<()> {
    let n = u.0.len();
    if density.len() != n || lap.is_some_and(|s| s.dirs.len() != n) {
        return Err(Error::Io("per-node columns disagree in length".into()));
    }
    let rows = (0..n).map(|x| {
        let p = &u.0[x];
        let (norm, dir_target) = match lap.map(|s| &s.dirs[x].germ) {
            Some(Germ::Toward { target: q, alpha }) => (alpha * target.distance(p, q), q.clone()),
            _ => (0.0, p.clone()),
        };
        let mut r = vec![x as f64];
        r.extend(target.point_coords(p));
        r.extend([density[x], norm]);
        r.extend(target.point_coords(&dir_target));
        r
    });
    write_rows(out, &map_header(target), 1, rows)
}

pub fn read_map<R: Read>(input: R, target: &Space) -> Result<MapTable> {
    let k = target.coord_len();
    let mut t = MapTable {
        map: L2Map(vec![]),
        density: vec![],
        lap_norm: vec![],
        lap: vec![],
    };
    for (i, row) in records(input, &map_header(target))?.into_iter().enumerate() {
        if row[0] != i as f64 {
            return Err(Error::Parse(format!(
                "row {}: node {} out of order",
                i + 1,
                row[0]
            )));
        }
        let p = target.point_from_coords(&row[1..1 + k])?;
        let (density, norm) = (row[1 + k], row[2 + k]);
        if !(norm >= 0.0 && norm.is_finite()) {
            return Err(Error::Parse(format!(
                "row {}: lap_norm {norm} must be finite and >= 0",
                i + 1
            )));
        }
        let q = target.point_from_coords(&row[3 + k..3 + 2 * k])?;
        let d = target.distance(&p, &q);
        let dir = if norm == 0.0 || d == 0.0 {
            Direction::zero(p.clone())
        } else {
            Direction::toward(p.clone(), q, norm / d)?
        };
        t.map.0.push(p);
        t.density.push(density);
        t.lap_norm.push(norm);
        t.lap.push(dir);
    }
    Ok(t)
}

pub fn log_header() -> Vec<String> {
    ["iter", "energy", "slope_est"].map(String::from).to_vec()
}

pub fn write_log<W: Write>(out: W, rows: &[LogRow]) -> Result<()> {
    write_rows(
        out,
        &log_header(),
        1,
        rows.iter()
            .map(|r| vec![r.iter as f64, r.energy, r.slope_est]),
    )
}

pub fn read_log<R: Read>(input: R) -> Result<Vec<LogRow>> {
    records(input, &log_header())?
        .into_iter()
        .map(|r| {
            if !(r[0] >= 0.0 && r[0].fract() == 0.0 && r[0] < u32::MAX as f64) {
                return Err(Error::Parse(format!("iteration {} is not a count", r[0])));
            }
            Ok(LogRow {
                iter: r[0] as usize,
                energy: r[1],
                slope_est: r[2],
            })
        })
        .collect()
}
