use ofsv_core::config::RunConfig;
use ofsv_core::solver::run_with_partial;
use std::time::Instant;

fn probe(name: &str, json: &str, nx: usize) {
    let config = RunConfig::from_json(json).unwrap().with_resolution(nx);
    let setup = config.build().unwrap();
    let start = Instant::now();
    let (out, err) = run_with_partial(setup);
    let elapsed = start.elapsed().as_secs_f64();
    let min_rho = out.diagnostics.iter().map(|d| d.min_density).fold(f64::INFINITY, f64::min);
    let min_p = out.diagnostics.iter().map(|d| d.min_pressure).fold(f64::INFINITY, f64::min);
    let max_a0 = out.diagnostics.iter().map(|d| d.a0).fold(0.0f64, f64::max);
    println!(
        "{name}: t = {:.4}, steps = {}, elapsed = {elapsed:.1}s, min_rho = {min_rho:.4e}, min_p = {min_p:.4e}, max_a0 = {max_a0:.3e}, err = {err:?}",
        out.state.t, out.steps
    );
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    if which == "dm" || which.is_empty() {
        let dm = std::fs::read_to_string("presets/double-mach.json").unwrap();
        probe("double-mach 400x100", &dm, 400);
    }
    if which == "r2a" || which.is_empty() {
        let r2a = std::fs::read_to_string("presets/riemann2d-a.json").unwrap();
        probe("riemann2d-a 200^2", &r2a, 200);
    }
    if which == "sv" || which.is_empty() {
        let sv = std::fs::read_to_string("presets/shock-vortex.json").unwrap();
        probe("shock-vortex 100x50", &sv, 100);
    }
    if which == "shu" || which.is_empty() {
        let shu = std::fs::read_to_string("presets/shu-osher.json").unwrap();
        probe("shu-osher 1600", &shu, 1600);
    }
}
