use ofsv_core::basis::Discretization1;
use ofsv_core::geometry::{CvFamily, CvLayout, Mesh1D};
use ofsv_core::numflux::FluxKind;
use ofsv_core::physics::ConservationLaw;
use ofsv_core::solver::{BcSide, System1};
use ofsv_core::timeint::{rk4_step, StageBuffers, StepControl};
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

fn norm(sys: &System1, data: &[f64]) -> f64 {
    let k = sys.disc.layout.degree;
    let field = sys.disc.reconstruct(data);
    let mut acc = 0.0;
    for i in 0..sys.disc.mesh.n {
        let h = sys.disc.mesh.h(i);
        for m in 0..=k {
            let c = field.coeffs(i)[m];
            acc += c * c * (h / 2.0) * (2.0 / (2.0 * m as f64 + 1.0));
        }
    }
    acc.sqrt()
}

fn worst_growth(cfl: f64, seed: u64) -> f64 {
    let n = 32;
    let k = 2;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let disc = Discretization1::new(
        Mesh1D::uniform(0.0, 2.0, n).unwrap(),
        CvLayout::new(k, CvFamily::GaussLegendre).unwrap(),
        1,
    );
    let mut sys = System1::new(
        disc,
        ConservationLaw::Advection1,
        FluxKind::Upwind,
        true,
        (BcSide::Periodic, BcSide::Periodic),
    )
    .unwrap();
    // random piecewise-constant + smooth mix (discontinuous)
    let n_jumps = 4 + (seed % 3) as usize;
    let plateaus: Vec<f64> = (0..n_jumps + 1).map(|_| rng.gen_range(-1.0..1.5)).collect();
    let edges: Vec<f64> = {
        let mut e: Vec<f64> = (0..n_jumps).map(|_| rng.gen_range(0.1..1.9)).collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    };
    let amp = rng.gen_range(0.0..0.5);
    let state = sys.disc.average_initial(
        |x, out| {
            let mut idx = 0;
            while idx < edges.len() && x > edges[idx] {
                idx += 1;
            }
            out[0] = plateaus[idx] + amp * (2.0 * PI * x).sin();
        },
        8,
    );
    let mut data = state.data.clone();
    let mut k1 = vec![0.0; data.len()];
    let mut bufs = StageBuffers::new(data.len());
    let ctrl = StepControl::new(cfl, 1.0);
    let mut t = 0.0;
    let mut prev = norm(&sys, &data);
    let mut worst: f64 = 0.0;
    while t < 1.0 - 1e-12 {
        let stats = sys.residual(&data, t, &mut k1).unwrap();
        let dt = ctrl.compute_dt_1d(stats.alpha_x, stats.a0, sys.disc.mesh.min_h(), t, 1.0);
        rk4_step(&mut data, t, dt, &k1, |u, ts, out| sys.residual(u, ts, out).map(|_| ()), &mut bufs)
            .unwrap();
        t += dt;
        let next = norm(&sys, &data);
        worst = worst.max(next / prev - 1.0);
        prev = next;
    }
    worst
}

fn main() {
    for &cfl in &[0.4, 0.3, 0.2, 0.15, 0.1, 0.05] {
        let mut worst: f64 = 0.0;
        for seed in 0..20u64 {
            worst = worst.max(worst_growth(cfl, seed));
        }
        println!("CFL {cfl}: worst relative norm growth per step = {worst:.3e}");
    }
}
