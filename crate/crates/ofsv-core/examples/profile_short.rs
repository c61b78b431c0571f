use ofsv_core::config::RunConfig;
use ofsv_core::solver::run_with_partial;

fn main() {
    let json = std::fs::read_to_string("presets/shock-vortex.json").unwrap();
    let mut config = RunConfig::from_json(&json).unwrap().with_resolution(100);
    config.time.t_final = 0.02;
    let setup = config.build().unwrap();
    let (out, err) = run_with_partial(setup);
    println!("steps = {}, err = {err:?}", out.steps);
}
