//! CSV files written and read by the command-line driver.
//!
//! Every file starts with a header row and floats carry 17 significant digits,
//! so a written trace reads back bit for bit.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::diagnostics::PeRow;
use crate::estimator::{RefinementRow, Snapshot, StepRecord, StepState};
use crate::fem1d::{BoundaryKind, HermiteField, Mesh1D};
use crate::gains::{ErrorNorms, ScoreRow, ScoreStatus};

pub const TRACE_COLUMNS: [&str; 23] = [
    "step",
    "t",
    "e_q",
    "r_x",
    "r_vtil",
    "r_vxtil",
    "p_x",
    "p_vhat",
    "p_vxhat",
    "d_x",
    "d_vtil",
    "dtil_x",
    "ra_x",
    "ra_vtil",
    "ra_vxtil",
    "lyapunov",
    "mu",
    "nu",
    "gamma",
    "cond_d_rhs",
    "cond_d_violated",
    "z_norm",
    "noise_norm",
];

pub const SNAPSHOT_COLUMNS: [&str; 6] = ["t", "x", "q_hat", "u_hat", "q_star", "u_star"];
pub const OBSERVED_COLUMNS: [&str; 5] = ["t", "z_norm", "noise_norm", "d_vtil", "tstar_flag"];
pub const STATE_COLUMNS: [&str; 6] = ["step", "t", "dof", "q_hat", "u_hat", "y"];
pub const PE_COLUMNS: [&str; 4] = ["t_a", "direction", "t_b", "value"];
pub const REFINEMENT_COLUMNS: [&str; 5] = ["h_t", "max_error", "error_order", "self_diff", "self_order"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(header).map_err(csv_err)?;
    Ok(w)
}

fn parse<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, what: &str) -> Result<T> {
    let s = rec.get(i).ok_or_else(|| Error::Io(format!("missing column `{what}`")))?;
    s.trim()
        .parse()
        .map_err(|_| Error::Io(format!("column `{what}`: cannot parse {s:?}")))
}

fn checked_reader<R: Read>(r: R, expect: &[&str]) -> Result<csv::Reader<R>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers().map_err(csv_err)?.clone();
    for (i, name) in expect.iter().enumerate() {
        if header.get(i) != Some(*name) {
            return Err(Error::Io(format!("expected column `{name}` at position {i}")));
        }
    }
    Ok(rd)
}

pub fn write_trace<W: Write>(w: W, records: &[StepRecord]) -> Result<()> {
    let mut w = writer(w, &TRACE_COLUMNS)?;
    for r in records {
        let n = &r.norms;
        let mut row = vec![r.step.to_string()];
        row.extend(
            [
                r.t,
                n.e_q,
                n.r_x,
                n.r_vtil,
                n.r_vxtil,
                n.p_x,
                n.p_vhat,
                n.p_vxhat,
                n.d_x,
                n.d_vtil,
                n.dtil_x,
                n.ra_x,
                n.ra_vtil,
                n.ra_vxtil,
                r.lyapunov(),
                r.mu,
                r.nu,
                r.gamma,
                r.cond_d_rhs,
            ]
            .map(fmt_f64),
        );
        row.push(u8::from(r.cond_d_violated).to_string());
        row.push(fmt_f64(r.z_norm));
        row.push(fmt_f64(r.noise_norm));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

pub fn read_trace<R: Read>(r: R) -> Result<Vec<StepRecord>> {
    let mut rd = checked_reader(r, &TRACE_COLUMNS)?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let f = |i: usize| parse::<f64>(&rec, i, TRACE_COLUMNS[i]);
        out.push(StepRecord {
            step: parse(&rec, 0, "step")?,
            t: f(1)?,
            norms: ErrorNorms {
                e_q: f(2)?,
                r_x: f(3)?,
                r_vtil: f(4)?,
                r_vxtil: f(5)?,
                p_x: f(6)?,
                p_vhat: f(7)?,
                p_vxhat: f(8)?,
                d_x: f(9)?,
                d_vtil: f(10)?,
                dtil_x: f(11)?,
                ra_x: f(12)?,
                ra_vtil: f(13)?,
                ra_vxtil: f(14)?,
            },
            mu: f(16)?,
            nu: f(17)?,
            gamma: f(18)?,
            cond_d_rhs: f(19)?,
            cond_d_violated: parse::<u8>(&rec, 20, "cond_d_violated")? != 0,
            z_norm: f(21)?,
            noise_norm: f(22)?,
        });
    }
    Ok(out)
}

/// Fields of every snapshot on `n_points` uniform points of `[0, 1]`.
pub fn write_snapshots<W: Write>(w: W, snapshots: &[Snapshot], n_points: usize) -> Result<()> {
    let mut w = writer(w, &SNAPSHOT_COLUMNS)?;
    for s in snapshots {
        let q = s.q_hat.sample_uniform(n_points);
        let u = s.u_hat.sample_uniform(n_points);
        let qs = s.q_star.sample_uniform(n_points);
        let us = s.u_star.sample_uniform(n_points);
        for k in 0..n_points {
            w.write_record([s.t, q[k].0, q[k].1, u[k].1, qs[k].1, us[k].1].map(fmt_f64))
                .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// Ground truth only: `t, x, q_star, u_star`.
pub fn write_truth_snapshots<W: Write>(w: W, snaps: &[(f64, HermiteField)], q_star: &HermiteField, n_points: usize) -> Result<()> {
    let mut w = writer(w, &["t", "x", "q_star", "u_star"])?;
    let qs = q_star.sample_uniform(n_points);
    for (t, u) in snaps {
        let us = u.sample_uniform(n_points);
        for k in 0..n_points {
            w.write_record([*t, us[k].0, qs[k].1, us[k].1].map(fmt_f64)).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

pub fn write_observed<W: Write>(w: W, records: &[StepRecord], tstar_step: Option<usize>) -> Result<()> {
    let mut w = writer(w, &OBSERVED_COLUMNS)?;
    for (k, r) in records.iter().enumerate() {
        let flag = u8::from(tstar_step == Some(k));
        let mut row: Vec<String> = [r.t, r.z_norm, r.noise_norm, r.norms.d_vtil].map(fmt_f64).to_vec();
        row.push(flag.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// Dofs of `q_hat`, `u_hat` and the lifted data, one row per step and dof.
pub fn write_states<W: Write>(w: W, states: &[StepState]) -> Result<()> {
    let mut w = writer(w, &STATE_COLUMNS)?;
    for s in states {
        let (q, u, y) = (s.q_hat.dofs(), s.u_hat.dofs(), s.y.dofs());
        for i in 0..q.len() {
            let mut row = vec![s.step.to_string(), fmt_f64(s.t), i.to_string()];
            row.extend([q[i], u[i], y[i]].map(fmt_f64));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// Tuner scores, flushed after every batch of rows.
pub struct ScoreWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> ScoreWriter<W> {
    /// `params` names the coordinates of a grid point.
    pub fn new(w: W, params: &[&str]) -> Result<Self> {
        let mut header = vec!["index"];
        header.extend_from_slice(params);
        header.extend(["score", "status", "message"]);
        let mut inner = writer(w, &header)?;
        inner.flush().map_err(|e| Error::Io(e.to_string()))?;
        Ok(Self { inner })
    }

    pub fn write_rows(&mut self, rows: &[ScoreRow<Vec<f64>>]) -> Result<()> {
        for r in rows {
            let mut rec = vec![r.index.to_string()];
            rec.extend(r.point.iter().map(|v| fmt_f64(*v)));
            rec.push(fmt_f64(r.score));
            rec.push(match r.status {
                ScoreStatus::Ok => "ok".into(),
                ScoreStatus::Failed => "failed".into(),
            });
            rec.push(r.message.clone().unwrap_or_default());
            self.inner.write_record(&rec).map_err(csv_err)?;
        }
        self.inner.flush().map_err(|e| Error::Io(e.to_string()))
    }
}

pub fn write_pe<W: Write>(w: W, rows: &[PeRow]) -> Result<()> {
    let mut w = writer(w, &PE_COLUMNS)?;
    for r in rows {
        w.write_record([fmt_f64(r.t_a), r.direction.to_string(), fmt_f64(r.t_b), fmt_f64(r.value)])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// Undefined orders are written as empty cells.
pub fn write_refinement<W: Write>(w: W, rows: &[RefinementRow]) -> Result<()> {
    let mut w = writer(w, &REFINEMENT_COLUMNS)?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for r in rows {
        w.write_record([
            fmt_f64(r.h_t),
            fmt_f64(r.max_error),
            opt(r.error_order),
            opt(r.self_diff),
            opt(r.self_order),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// Inverse of [`write_states`] on the given mesh.
pub fn read_states<R: Read>(r: R, mesh: &Arc<Mesh1D>) -> Result<Vec<StepState>> {
    let nd = mesh.n_dofs();
    let mut rd = checked_reader(r, &STATE_COLUMNS)?;
    let mut rows: Vec<(usize, f64, [Vec<f64>; 3])> = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let step: usize = parse(&rec, 0, "step")?;
        let t: f64 = parse(&rec, 1, "t")?;
        let dof: usize = parse(&rec, 2, "dof")?;
        if rows.last().is_none_or(|r| r.0 != step) {
            rows.push((step, t, [Vec::with_capacity(nd), Vec::with_capacity(nd), Vec::with_capacity(nd)]));
        }
        let cur = rows.last_mut().expect("pushed above");
        if dof != cur.2[0].len() {
            return Err(Error::Io(format!("step {step}: dof {dof} out of order")));
        }
        for (k, name) in ["q_hat", "u_hat", "y"].iter().enumerate() {
            cur.2[k].push(parse(&rec, 3 + k, name)?);
        }
    }
    rows.into_iter()
        .map(|(step, t, [q, u, y])| {
            if q.len() != nd {
                return Err(Error::Io(format!("step {step}: {} dofs, mesh has {nd}", q.len())));
            }
            Ok(StepState {
                step,
                t,
                q_hat: HermiteField::from_dofs(mesh.clone(), q, BoundaryKind::Free)?,
                u_hat: HermiteField::from_dofs(mesh.clone(), u, BoundaryKind::DirichletZero)?,
                y: HermiteField::from_dofs(mesh.clone(), y, BoundaryKind::Free)?,
            })
        })
        .collect()
}
