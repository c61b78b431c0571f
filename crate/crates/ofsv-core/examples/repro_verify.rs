use ofsv_core::basis::Discretization1;
use ofsv_core::geometry::{CvFamily, CvLayout, Mesh1D};
use ofsv_core::numflux::FluxKind;
use ofsv_core::physics::ConservationLaw;
use ofsv_core::solver::{BcSide, System1};
use ofsv_core::timeint::{rk4_step, StageBuffers, StepControl};

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

fn main() {
    for cfl in [0.4, 0.2, 0.1] {
        let disc = Discretization1::new(
            Mesh1D::uniform(0.0, 2.0, 24).unwrap(),
            CvLayout::new(2, CvFamily::GaussLegendre).unwrap(),
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
        let state = sys
            .disc
            .average_initial(|x, out| out[0] = if x < 1.0 { 1.0 } else { -0.5 }, 6);
        let mut data = state.data.clone();
        let mut k1 = vec![0.0; data.len()];
        let mut bufs = StageBuffers::new(data.len());
        let ctrl = StepControl::new(cfl, 1.0);
        let mut t = 0.0;
        print!("CFL {cfl}: norms ");
        for _ in 0..6 {
            let stats = sys.residual(&data, t, &mut k1).unwrap();
            let dt = ctrl.compute_dt_1d(stats.alpha_x, stats.a0, sys.disc.mesh.min_h(), t, 1.0);
            rk4_step(&mut data, t, dt, &k1, |u, ts, out| sys.residual(u, ts, out).map(|_| ()), &mut bufs)
                .unwrap();
            t += dt;
            print!("{:.4} (a0={:.2}) ", norm(&sys, &data), stats.a0);
        }
        println!();
    }
}
