use ofsv_core::basis::Discretization2;
use ofsv_core::geometry::{CvFamily, CvLayout, Mesh2D, QuadratureRule};
use ofsv_core::numflux::FluxKind;
use ofsv_core::physics::{ConservationLaw, EulerPrim};
use ofsv_core::solver::{BcSide, System2};
use ofsv_core::timeint::{rk4_step, StageBuffers, StepControl};
use std::f64::consts::PI;

const GAMMA: f64 = 1.4;

fn density_wave_cons(x: f64, y: f64, t: f64) -> [f64; 4] {
    let rho = 1.0 + 0.2 * (PI * (x + y - 2.0 * t)).sin();
    EulerPrim::new_2d(rho, 1.0, 1.0, 1.0).to_cons_2d(GAMMA)
}

fn run_case(n: usize, k: usize, damping: bool, t_final: f64) -> f64 {
    let disc = Discretization2::new(
        Mesh2D::uniform((0.0, 2.0), (0.0, 2.0), n, n).unwrap(),
        CvLayout::new(k, CvFamily::GaussLegendre).unwrap(),
        4,
    );
    let mut sys = System2::new(
        disc.clone(),
        ConservationLaw::euler_2d(),
        FluxKind::Hllc,
        damping,
        (
            BcSide::Periodic,
            BcSide::Periodic,
            BcSide::Periodic,
            BcSide::Periodic,
        ),
    )
    .unwrap();
    let state = sys
        .disc
        .interpolate_initial(|x, y, out| out.copy_from_slice(&density_wave_cons(x, y, 0.0)));
    let mut data = state.data.clone();
    let mut k1 = vec![0.0; data.len()];
    let mut bufs = StageBuffers::new(data.len());
    let ctrl = StepControl::new(0.15, t_final);
    let mut t = 0.0;
    while t < t_final - 1e-12 {
        let stats = sys.residual(&data, t, &mut k1).unwrap();
        let dt = ctrl.compute_dt_2d(
            stats.alpha_x,
            stats.alpha_y,
            sys.disc.mesh.x.min_h(),
            sys.disc.mesh.y.min_h(),
            stats.a0,
            t,
            t_final,
        );
        rk4_step(&mut data, t, dt, &k1, |u, ts, out| {
            sys.residual(u, ts, out).map(|_| ())
        }, &mut bufs)
        .unwrap();
        t += dt;
    }
    // L2 error of density via reconstruction against the exact field.
    let field = disc.reconstruct(&data);
    let rule = QuadratureRule::gauss(5).unwrap();
    let ncv = k + 1;
    let _ = ncv;
    let mut err2 = 0.0;
    for iy in 0..n {
        for ix in 0..n {
            let sv = iy * n + ix;
            let hx = disc.mesh.x.h(ix);
            let hy = disc.mesh.y.h(iy);
            let coeffs = field.coeffs(sv);
            let mut point = [0.0f64; 4];
            for (&yq, &wy) in rule.nodes.iter().zip(&rule.weights) {
                let y = disc.mesh.y.to_physical(iy, yq);
                for (&xq, &wx) in rule.nodes.iter().zip(&rule.weights) {
                    let x = disc.mesh.x.to_physical(ix, xq);
                    ofsv_core::basis::eval_poly_2d(coeffs, k, 4, xq, yq, &mut point);
                    let exact = density_wave_cons(x, y, t_final);
                    let d = point[0] - exact[0];
                    err2 += 0.25 * wx * wy * d * d * hx * hy;
                }
            }
        }
    }
    err2.sqrt()
}

#[test]
fn euler_density_wave_table() {
    for damping in [true, false] {
        println!("damping = {damping}");
        let mut prev = f64::NAN;
        for n in [8usize, 16, 32] {
            let e = run_case(n, 2, damping, 2.0);
            let order = if prev.is_finite() {
                (prev / e).log2()
            } else {
                f64::NAN
            };
            println!("  n = {n:3}  e0 = {e:.4e}   order = {order:.3}");
            prev = e;
        }
    }
}
