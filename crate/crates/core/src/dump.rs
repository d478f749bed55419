//! Compact binary dumps of trajectories and phase programs.
//!
//! Layout, all fields little-endian:
//!
//! | offset | size | field                                          |
//! |-------:|-----:|------------------------------------------------|
//! | 0      | 8    | magic `b"CPHDUMP1"`                            |
//! | 8      | 4    | kind, `u32`: 1 = trajectory, 2 = phase program |
//! | 12     | 4    | column count `n_cols`, `u32`                   |
//! | 16     | 8    | row count `n_steps`, `u64`                     |
//! | 24     | 8    | grid step `dt` in seconds, `f64`               |
//! | 32     | 8    | noise seed, `u64` (0 for phase programs)       |
//! | 40     | ...  | `n_steps × n_cols` `f64` values, row-major     |
//!
//! Trajectory columns: `t, V_dt, phi, x, y, z, dW`. Phase-program column:
//! `phi`.

use std::io::{Read, Write};

use crate::controller::PhaseProgram;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::noise::NoisePath;
use crate::state::{BlochVector, DensityMatrix};
use crate::trajectory::TrajectoryRecord;

pub const MAGIC: &[u8; 8] = b"CPHDUMP1";
pub const KIND_TRAJECTORY: u32 = 1;
pub const KIND_PHASE_PROGRAM: u32 = 2;
pub const TRAJECTORY_COLUMNS: u32 = 7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumpHeader {
    pub kind: u32,
    pub n_cols: u32,
    pub n_steps: u64,
    pub dt: f64,
    pub seed: u64,
}

fn write_header<W: Write>(w: &mut W, h: &DumpHeader) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&h.kind.to_le_bytes())?;
    w.write_all(&h.n_cols.to_le_bytes())?;
    w.write_all(&h.n_steps.to_le_bytes())?;
    w.write_all(&h.dt.to_le_bytes())?;
    w.write_all(&h.seed.to_le_bytes())?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn read_header<R: Read>(r: &mut R) -> Result<DumpHeader> {
    let magic: [u8; 8] = read_array(r)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    Ok(DumpHeader {
        kind: u32::from_le_bytes(read_array(r)?),
        n_cols: u32::from_le_bytes(read_array(r)?),
        n_steps: u64::from_le_bytes(read_array(r)?),
        dt: f64::from_le_bytes(read_array(r)?),
        seed: u64::from_le_bytes(read_array(r)?),
    })
}

fn read_values<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub fn write_trajectory<W: Write>(mut w: W, rec: &TrajectoryRecord<f64>) -> Result<()> {
    let n = rec.len();
    write_header(
        &mut w,
        &DumpHeader {
            kind: KIND_TRAJECTORY,
            n_cols: TRAJECTORY_COLUMNS,
            n_steps: n as u64,
            dt: rec.grid.dt(),
            seed: rec.dw_used.seed,
        },
    )?;
    let mut buf = Vec::with_capacity(n * TRAJECTORY_COLUMNS as usize * 8);
    for k in 0..n {
        let b = rec.bloch[k];
        for v in [rec.grid.time(k), rec.v_dt[k], rec.phi[k], b.x, b.y, b.z, rec.dw_used.dw[k]] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads back a trajectory dump. The final state is not stored; it is
/// reconstructed from the last recorded Bloch vector.
pub fn read_trajectory<R: Read>(mut r: R) -> Result<TrajectoryRecord<f64>> {
    let h = read_header(&mut r)?;
    if h.kind != KIND_TRAJECTORY || h.n_cols != TRAJECTORY_COLUMNS {
        return Err(Error::Format(format!("not a trajectory dump (kind {}, {} cols)", h.kind, h.n_cols)));
    }
    let n = h.n_steps as usize;
    let vals = read_values(&mut r, n * TRAJECTORY_COLUMNS as usize)?;
    let mut rec = TrajectoryRecord {
        grid: TimeGrid::with_steps(h.dt, n.max(1))?,
        v_dt: Vec::with_capacity(n),
        phi: Vec::with_capacity(n),
        bloch: Vec::with_capacity(n),
        dw_used: NoisePath { seed: h.seed, dt: h.dt, dw: Vec::with_capacity(n) },
        final_state: DensityMatrix::maximally_mixed(),
    };
    for row in vals.chunks_exact(TRAJECTORY_COLUMNS as usize) {
        rec.v_dt.push(row[1]);
        rec.phi.push(row[2]);
        rec.bloch.push(BlochVector::new(row[3], row[4], row[5]));
        rec.dw_used.dw.push(row[6]);
    }
    if let Some(b) = rec.bloch.last() {
        rec.final_state = crate::state::rho_from_bloch(b);
    }
    Ok(rec)
}

pub fn write_phase_program<W: Write>(mut w: W, prog: &PhaseProgram<f64>) -> Result<()> {
    write_header(
        &mut w,
        &DumpHeader {
            kind: KIND_PHASE_PROGRAM,
            n_cols: 1,
            n_steps: prog.phi.len() as u64,
            dt: prog.dt,
            seed: 0,
        },
    )?;
    let mut buf = Vec::with_capacity(prog.phi.len() * 8);
    for v in &prog.phi {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_phase_program<R: Read>(mut r: R) -> Result<PhaseProgram<f64>> {
    let h = read_header(&mut r)?;
    if h.kind != KIND_PHASE_PROGRAM || h.n_cols != 1 {
        return Err(Error::Format(format!("not a phase program (kind {}, {} cols)", h.kind, h.n_cols)));
    }
    let phi = read_values(&mut r, h.n_steps as usize)?;
    Ok(PhaseProgram { dt: h.dt, phi })
}
