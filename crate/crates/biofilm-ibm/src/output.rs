//! Snapshot and report output: node tables, field dumps (CSV and flat
//! binary), solver statistics, and the run manifest.

use crate::error::Result;
use crate::projection::{Simulation, StepStats};
use std::io::Write;
use std::path::Path;

/// Magic bytes of the binary field format.
pub const FIELD_MAGIC: &[u8; 4] = b"BIBM";

/// Node table rows: step, time, node id, position (microns), alive spring
/// count.
pub fn write_node_snapshot(path: &Path, sim: &Simulation) -> Result<()> {
    let Some(biofilm) = &sim.biofilm else {
        return Ok(());
    };
    let l_um = sim.scenario.scaling.length_m * 1e6;
    let mut out = String::new();
    if sim.grid.dim == 2 {
        out.push_str("step,time,node,x_um,y_um,alive_springs\n");
    } else {
        out.push_str("step,time,node,x_um,y_um,z_um,alive_springs\n");
    }
    let counts = biofilm.alive_count_per_node();
    for (s, pos) in biofilm.nodes.iter().enumerate() {
        let mut row = format!("{},{:.6},{}", sim.step, sim.t, s);
        for a in 0..sim.grid.dim {
            row.push_str(&format!(",{:.4}", pos[a] * l_um));
        }
        row.push_str(&format!(",{}\n", counts[s]));
        out.push_str(&row);
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Field snapshot as CSV: indices, velocity components, pressure, density,
/// viscosity.
pub fn write_field_csv(path: &Path, sim: &Simulation) -> Result<()> {
    let g = &sim.grid;
    let mut out = String::new();
    if g.dim == 2 {
        out.push_str("i,j,u1,u2,p,rho,mu\n");
    } else {
        out.push_str("i,j,k,u1,u2,u3,p,rho,mu\n");
    }
    for i in 0..g.n[0] {
        for j in 0..g.n[1] {
            for k in 0..g.n[2] {
                let idx = g.idx(i, j, k);
                let mut row = if g.dim == 2 {
                    format!("{i},{j}")
                } else {
                    format!("{i},{j},{k}")
                };
                for c in &sim.u.comps {
                    row.push_str(&format!(",{:.9e}", c[idx]));
                }
                row.push_str(&format!(
                    ",{:.9e},{:.9e},{:.9e}\n",
                    sim.p.data[idx], sim.rho.data[idx], sim.mu.data[idx]
                ));
                out.push_str(&row);
            }
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Flat binary field snapshot: magic, u32 dim, three u32 point counts,
/// f64 mesh width, u32 field count, then each field as little-endian f64
/// in storage order (velocity components, pressure, density, viscosity).
pub fn write_field_binary(path: &Path, sim: &Simulation) -> Result<()> {
    let g = &sim.grid;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(FIELD_MAGIC)?;
    f.write_all(&(g.dim as u32).to_le_bytes())?;
    for a in 0..3 {
        f.write_all(&(g.n[a] as u32).to_le_bytes())?;
    }
    f.write_all(&g.h.to_le_bytes())?;
    let nfields = g.dim + 3;
    f.write_all(&(nfields as u32).to_le_bytes())?;
    let mut dump = |data: &[f64]| -> Result<()> {
        for v in data {
            f.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    };
    for c in &sim.u.comps {
        dump(c)?;
    }
    dump(&sim.p.data)?;
    dump(&sim.rho.data)?;
    dump(&sim.mu.data)?;
    Ok(())
}

/// Reads back a binary field snapshot; returns (dim, counts, h, fields).
pub fn read_field_binary(path: &Path) -> Result<(usize, [usize; 3], f64, Vec<Vec<f64>>)> {
    let bytes = std::fs::read(path)?;
    let err = |msg: &str| crate::error::SimError::Field(format!("binary snapshot: {msg}"));
    if bytes.len() < 28 || &bytes[0..4] != FIELD_MAGIC {
        return Err(err("bad header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let dim = u32_at(4);
    let n = [u32_at(8), u32_at(12), u32_at(16)];
    let h = f64::from_le_bytes(bytes[20..28].try_into().unwrap());
    let nfields = u32_at(28);
    let len = n[0] * n[1] * n[2];
    let mut offset = 32;
    let mut fields = Vec::with_capacity(nfields);
    for _ in 0..nfields {
        if bytes.len() < offset + 8 * len {
            return Err(err("truncated payload"));
        }
        let mut data = Vec::with_capacity(len);
        for i in 0..len {
            let o = offset + 8 * i;
            data.push(f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()));
        }
        offset += 8 * len;
        fields.push(data);
    }
    Ok((dim, n, h, fields))
}

/// Per-step solver statistics CSV.
pub fn write_stats_csv(path: &Path, history: &[StepStats]) -> Result<()> {
    let mut out = String::from(
        "step,time,momentum_cycles,momentum_work,pressure_cycles,pressure_work,div_inf,springs_broken,kinetic_energy,unstable\n",
    );
    for s in history {
        out.push_str(&format!(
            "{},{:.6},{},{:.3},{},{:.3},{:.6e},{},{:.8e},{}\n",
            s.step,
            s.t,
            s.momentum_cycles,
            s.momentum_work,
            s.pressure_outer,
            s.pressure_work,
            s.div_inf,
            s.springs_broken,
            s.kinetic_energy,
            s.unstable as u8
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Run manifest: scenario fingerprint, seed, grid, and solver totals.
pub fn write_manifest(path: &Path, sim: &Simulation) -> Result<()> {
    let sc = &sim.scenario;
    let total_mom_work: f64 = sim.history.iter().map(|s| s.momentum_work).sum();
    let total_p_work: f64 = sim.history.iter().map(|s| s.pressure_work).sum();
    let broken: usize = sim.history.iter().map(|s| s.springs_broken).sum();
    let mut out = String::new();
    out.push_str(&format!("config_hash = {:016x}\n", sc.config_hash));
    out.push_str(&format!("seed = {}\n", sc.seed));
    out.push_str(&format!("dim = {}\n", sc.dim));
    out.push_str(&format!("h = {}\n", sc.h));
    out.push_str(&format!("dt = {}\n", sc.dt));
    out.push_str(&format!("steps = {}\n", sim.step));
    out.push_str(&format!("t = {}\n", sim.t));
    out.push_str(&format!("sigma = {}\n", sc.sigma));
    out.push_str(&format!("epsilon = {}\n", sc.epsilon));
    out.push_str(&format!("reynolds = {}\n", sc.reynolds));
    out.push_str(&format!("omega = {}\n", sc.omega));
    out.push_str(&format!(
        "eta = {}\n",
        sim.biofilm.as_ref().map(|b| b.eta()).unwrap_or(0)
    ));
    out.push_str(&format!(
        "alive_springs = {}\n",
        sim.biofilm.as_ref().map(|b| b.alive_springs()).unwrap_or(0)
    ));
    out.push_str(&format!("springs_broken = {broken}\n"));
    out.push_str(&format!("momentum_work_units = {total_mom_work:.3}\n"));
    out.push_str(&format!("pressure_work_units = {total_p_work:.3}\n"));
    out.push_str(&format!("unstable = {}\n", sim.unstable));
    for w in &sc.warnings {
        out.push_str(&format!("warning = {w}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes the scheduled outputs for the current step into `dir`.
pub fn write_snapshot(dir: &Path, sim: &Simulation) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let tag = format!("{:06}", sim.step);
    write_node_snapshot(&dir.join(format!("nodes_{tag}.csv")), sim)?;
    if sim.scenario.schedule.binary_fields {
        write_field_binary(&dir.join(format!("fields_{tag}.bin")), sim)?;
    } else {
        write_field_csv(&dir.join(format!("fields_{tag}.csv")), sim)?;
    }
    Ok(())
}
