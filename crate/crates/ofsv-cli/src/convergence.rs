//! The `convergence` subcommand: run a smooth accuracy preset over a mesh
//! sequence and tabulate `e0`, `e_c`, `e_n` with their orders.

use crate::output::{write_convergence_csv, ConvergenceRow};
use crate::CliError;
use ofsv_core::analysis;
use ofsv_core::config::RunConfig;
use ofsv_core::solver::{run, System};
use std::path::Path;

pub fn command(
    config_path: &Path,
    meshes: &[usize],
    no_damping: bool,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let mut config = RunConfig::from_path(config_path)?;
    if no_damping {
        config.discretization.damping = false;
    }
    if meshes.is_empty() {
        return Err(CliError::Config("at least one mesh resolution required".into()));
    }
    let rows = study(&config, meshes)?;
    let mut stdout = std::io::stdout().lock();
    write_convergence_csv(&mut stdout, &rows)?;
    if let Some(path) = output {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        write_convergence_csv(std::fs::File::create(path)?, &rows)?;
    }
    Ok(())
}

/// Runs the study and returns the table rows; errors are measured on the
/// first component (density for Euler).
pub fn study(config: &RunConfig, meshes: &[usize]) -> Result<Vec<ConvergenceRow>, CliError> {
    let t_final = config.time.t_final;
    let exact = config.exact_solution(t_final).ok_or_else(|| {
        CliError::Config(
            "convergence studies need an initial condition with a closed-form solution \
             (sine1d or density_wave2d)"
                .into(),
        )
    })?;

    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in meshes {
        let setup = config.with_resolution(n).build()?;
        let quad = (config.discretization.degree + 2).max(6);
        let out = run(setup)?;
        let (e0, ec, en) = match config.with_resolution(n).build()?.system {
            System::One(sys) => {
                let d = &sys.disc;
                let f = |x: f64, out: &mut [f64]| exact(x, 0.0, out);
                (
                    analysis::l2_error_1d(d, &out.state.data, f, quad)[0],
                    analysis::cell_average_error_1d(d, &out.state.data, f, quad)[0],
                    analysis::downwind_point_error_1d(d, &out.state.data, f)[0],
                )
            }
            System::Two(sys) => {
                let d = &sys.disc;
                let f = |x: f64, y: f64, out: &mut [f64]| exact(x, y, out);
                (
                    analysis::l2_error_2d(d, &out.state.data, f, quad)[0],
                    analysis::cell_average_error_2d(d, &out.state.data, f, quad)[0],
                    analysis::downwind_point_error_2d(d, &out.state.data, f)[0],
                )
            }
        };
        let previous = rows.last();
        let order = |prev: Option<f64>, now: f64| {
            prev.and_then(|p| analysis::convergence_order(p, now).ok())
        };
        rows.push(ConvergenceRow {
            mesh: n,
            e0_order: order(previous.map(|r| r.e0), e0),
            ec_order: order(previous.map(|r| r.ec), ec),
            en_order: order(previous.map(|r| r.en), en),
            e0,
            ec,
            en,
        });
    }
    Ok(rows)
}
