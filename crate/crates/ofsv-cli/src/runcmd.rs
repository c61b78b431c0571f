//! The `run` subcommand: advance a configuration to its final time, writing
//! solution snapshots and a per-step diagnostics CSV. On numerical failure
//! the partial outputs are written before exiting nonzero.

use crate::output;
use crate::CliError;
use ofsv_core::basis::SolutionState;
use ofsv_core::config::RunConfig;
use ofsv_core::solver::{run_with_partial, RunOutput, System};
use std::path::{Path, PathBuf};

pub fn command(
    config_path: &Path,
    snapshots: Option<Vec<f64>>,
    out_dir: Option<&Path>,
) -> Result<(), CliError> {
    let config = RunConfig::from_path(config_path)?;
    let mut setup = config.build()?;
    if let Some(times) = snapshots {
        setup.snapshot_times = times;
    }
    if setup.snapshot_times.is_empty() {
        setup.snapshot_times = vec![config.time.t_final];
    }

    let dir: PathBuf = out_dir
        .map(Path::to_path_buf)
        .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)?;
    let prefix = config
        .output
        .prefix
        .clone()
        .or_else(|| {
            config_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
        })
        .unwrap_or_else(|| config.initial.id.clone());

    // Keep the discretization for the writers; the run consumes the setup.
    let law = *setup.system.law();
    let disc_handle = match &setup.system {
        System::One(s) => DiscHandle::One(s.disc.clone()),
        System::Two(s) => DiscHandle::Two(s.disc.clone()),
    };

    let (out, err) = run_with_partial(setup);
    write_outputs(&dir, &prefix, &law, &disc_handle, &out)?;
    if let Some(e) = err {
        return Err(CliError::Numerical(format!(
            "{e} (partial outputs kept in {})",
            dir.display()
        )));
    }
    println!(
        "{}: reached t = {:.6} in {} steps; outputs in {}",
        prefix,
        out.state.t,
        out.steps,
        dir.display()
    );
    Ok(())
}

enum DiscHandle {
    One(ofsv_core::basis::Discretization1),
    Two(ofsv_core::basis::Discretization2),
}

fn write_outputs(
    dir: &Path,
    prefix: &str,
    law: &ofsv_core::physics::ConservationLaw,
    disc: &DiscHandle,
    out: &RunOutput,
) -> Result<(), CliError> {
    output::write_diagnostics(&dir.join(format!("{prefix}_diagnostics.csv")), law, &out.diagnostics)?;
    let write_state = |state: &SolutionState| -> Result<(), CliError> {
        match disc {
            DiscHandle::One(d) => {
                let path = dir.join(format!("{prefix}_t{:.6}.csv", state.t));
                output::write_snapshot_1d(&path, d, law, &state.data)?;
            }
            DiscHandle::Two(d) => {
                let path = dir.join(format!("{prefix}_t{:.6}.vtk", state.t));
                output::write_snapshot_2d(&path, d, law, &state.data, prefix)?;
            }
        }
        Ok(())
    };
    for snap in &out.snapshots {
        write_state(snap)?;
    }
    // Always keep the last reached state (it is the failure state on error).
    if out
        .snapshots
        .last()
        .map(|s| (s.t - out.state.t).abs() > 1e-12)
        .unwrap_or(true)
    {
        write_state(&out.state)?;
    }
    Ok(())
}
