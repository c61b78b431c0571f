//! CSV and legacy-VTK writers for solution snapshots and diagnostics.
//!
//! CSV numbers carry 17 significant digits. 2D fields go out as legacy ASCII
//! structured-points grids holding one cell value per control volume; the
//! implied uniform spacing approximates the in-SV subdivision (the values
//! themselves are the exact CV averages).

use ofsv_core::basis::{Discretization1, Discretization2};
use ofsv_core::physics::ConservationLaw;
use ofsv_core::solver::StepDiag;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Full-precision scientific notation (17 significant digits).
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// 1D snapshot: CV centers with CV-average fields. Euler rows carry derived
/// velocity and pressure next to the density.
pub fn write_snapshot_1d(
    path: &Path,
    disc: &Discretization1,
    law: &ConservationLaw,
    data: &[f64],
) -> std::io::Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let m = disc.n_comp;
    let ncv = disc.n_cv();
    if law.is_euler() {
        writeln!(w, "x,density,velocity,pressure")?;
    } else {
        writeln!(w, "x,u")?;
    }
    for i in 0..disc.mesh.n {
        for j in 0..ncv {
            let x = disc.cv_center(i, j);
            let cv = &data[(i * ncv + j) * m..(i * ncv + j + 1) * m];
            if law.is_euler() {
                let vel = cv[1] / cv[0];
                let p = law.pressure(cv).unwrap_or(f64::NAN);
                writeln!(w, "{},{},{},{}", fmt(x), fmt(cv[0]), fmt(vel), fmt(p))?;
            } else {
                writeln!(w, "{},{}", fmt(x), fmt(cv[0]))?;
            }
        }
    }
    Ok(())
}

/// 2D snapshot in legacy ASCII structured-points layout, one cell per CV.
pub fn write_snapshot_2d(
    path: &Path,
    disc: &Discretization2,
    law: &ConservationLaw,
    data: &[f64],
    title: &str,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let m = disc.n_comp;
    let n = disc.layout.n_cv();
    let (nx, ny) = (disc.mesh.x.n, disc.mesh.y.n);
    let ncx = nx * n;
    let ncy = ny * n;
    let dx = (disc.mesh.x.b - disc.mesh.x.a) / ncx as f64;
    let dy = (disc.mesh.y.b - disc.mesh.y.a) / ncy as f64;

    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} 1", ncx + 1, ncy + 1)?;
    writeln!(w, "ORIGIN {} {} 0.0", fmt(disc.mesh.x.a), fmt(disc.mesh.y.a))?;
    writeln!(w, "SPACING {} {} 1.0", fmt(dx), fmt(dy))?;
    writeln!(w, "CELL_DATA {}", ncx * ncy)?;

    let field_names: Vec<&str> = if law.is_euler() {
        vec!["density", "velocity_x", "velocity_y", "pressure"]
    } else {
        vec!["u"]
    };
    for (fi, name) in field_names.iter().enumerate() {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for iy in 0..ny {
            for jy in 0..n {
                for ix in 0..nx {
                    let sv = disc.sv_index(ix, iy);
                    for jx in 0..n {
                        let cv = &data[(sv * n * n + jy * n + jx) * m
                            ..(sv * n * n + jy * n + jx + 1) * m];
                        let value = if law.is_euler() {
                            match fi {
                                0 => cv[0],
                                1 => cv[1] / cv[0],
                                2 => cv[2] / cv[0],
                                _ => law.pressure(cv).unwrap_or(f64::NAN),
                            }
                        } else {
                            cv[0]
                        };
                        writeln!(w, "{}", fmt(value))?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Per-step diagnostics CSV: time, step size, damping budget, mass per
/// component, and the extrema tracked by the run loop.
pub fn write_diagnostics(
    path: &Path,
    law: &ConservationLaw,
    diagnostics: &[StepDiag],
) -> std::io::Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let m = law.n_comp();
    let mass_cols: Vec<String> = (0..m).map(|s| format!("mass_{s}")).collect();
    if law.is_euler() {
        writeln!(w, "t,dt,a0,{},min_density,min_pressure", mass_cols.join(","))?;
    } else {
        writeln!(w, "t,dt,a0,{},min_u,max_u", mass_cols.join(","))?;
    }
    for d in diagnostics {
        let mass: Vec<String> = d.mass.iter().map(|&v| fmt(v)).collect();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt(d.t),
            fmt(d.dt),
            fmt(d.a0),
            mass.join(","),
            fmt(d.min_density),
            fmt(d.min_pressure)
        )?;
    }
    Ok(())
}

/// One convergence-table row.
pub struct ConvergenceRow {
    pub mesh: usize,
    pub e0: f64,
    pub e0_order: Option<f64>,
    pub ec: f64,
    pub ec_order: Option<f64>,
    pub en: f64,
    pub en_order: Option<f64>,
}

pub fn write_convergence_csv<W: Write>(mut w: W, rows: &[ConvergenceRow]) -> std::io::Result<()> {
    writeln!(w, "mesh,e0,e0_order,ec,ec_order,en,en_order")?;
    let opt = |v: &Option<f64>| v.map(fmt).unwrap_or_default();
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.mesh,
            fmt(r.e0),
            opt(&r.e0_order),
            fmt(r.ec),
            opt(&r.ec_order),
            fmt(r.en),
            opt(&r.en_order)
        )?;
    }
    Ok(())
}
