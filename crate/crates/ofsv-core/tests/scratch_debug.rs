use ofsv_core::basis::Discretization2;
use ofsv_core::geometry::{CvFamily, CvLayout, Mesh2D};
use ofsv_core::numflux::FluxKind;
use ofsv_core::physics::ConservationLaw;
use ofsv_core::solver::{BcSide, System2};

fn system(k: usize) -> System2 {
    let disc = Discretization2::new(
        Mesh2D::uniform((0.0, 2.0), (0.0, 2.0), 6, 5).unwrap(),
        CvLayout::new(k, CvFamily::GaussLegendre).unwrap(),
        1,
    );
    System2::new(
        disc,
        ConservationLaw::Advection2,
        FluxKind::Upwind,
        false,
        (
            BcSide::Transmissive,
            BcSide::Transmissive,
            BcSide::Transmissive,
            BcSide::Transmissive,
        ),
    )
    .unwrap()
}

#[test]
fn x_only_polynomial() {
    let k = 2;
    let mut sys = system(k);
    let f = |x: f64, _y: f64| 0.3 * x * x - 0.7 * x + 1.0;
    let state = sys.disc.interpolate_initial(|x, y, out| out[0] = f(x, y));
    let mut rate = vec![0.0; sys.disc.n_dof()];
    sys.residual(&state.data, 0.0, &mut rate).unwrap();
    let n = k + 1;
    let mut worst: f64 = 0.0;
    for iy in 1..4 {
        for ix in 1..5 {
            let sv = iy * 6 + ix;
            for jy in 0..n {
                for jx in 0..n {
                    let xa = sys.disc.mesh.x.to_physical(ix, sys.disc.layout.bounds[jx]);
                    let xb = sys.disc.mesh.x.to_physical(ix, sys.disc.layout.bounds[jx + 1]);
                    let expect = -(f(xb, 0.0) - f(xa, 0.0)) / (xb - xa);
                    let got = rate[sv * n * n + jy * n + jx];
                    worst = worst.max((got - expect).abs());
                }
            }
        }
    }
    println!("x-only worst deviation: {worst:e}");
    assert!(worst < 1e-10, "worst {worst}");
}

#[test]
fn y_only_polynomial() {
    let k = 2;
    let mut sys = system(k);
    let f = |_x: f64, y: f64| -0.2 * y * y + 0.5 * y + 2.0;
    let state = sys.disc.interpolate_initial(|x, y, out| out[0] = f(x, y));
    let mut rate = vec![0.0; sys.disc.n_dof()];
    sys.residual(&state.data, 0.0, &mut rate).unwrap();
    let n = k + 1;
    let mut worst: f64 = 0.0;
    for iy in 1..4 {
        for ix in 1..5 {
            let sv = iy * 6 + ix;
            for jy in 0..n {
                for jx in 0..n {
                    let ya = sys.disc.mesh.y.to_physical(iy, sys.disc.layout.bounds[jy]);
                    let yb = sys.disc.mesh.y.to_physical(iy, sys.disc.layout.bounds[jy + 1]);
                    let expect = -(f(0.0, yb) - f(0.0, ya)) / (yb - ya);
                    let got = rate[sv * n * n + jy * n + jx];
                    worst = worst.max((got - expect).abs());
                }
            }
        }
    }
    println!("y-only worst deviation: {worst:e}");
    assert!(worst < 1e-10, "worst {worst}");
}

#[test]
fn mixed_tensor_polynomial() {
    let k = 2;
    let mut sys = system(k);
    let f = |x: f64, y: f64| (1.0 + 0.5 * x * x) * (2.0 - 0.3 * y);
    let fx = |x: f64, y: f64| x * (2.0 - 0.3 * y);
    let fy = |x: f64, _y: f64| (1.0 + 0.5 * x * x) * (-0.3);
    let state = sys.disc.interpolate_initial(|x, y, out| out[0] = f(x, y));
    let mut rate = vec![0.0; sys.disc.n_dof()];
    sys.residual(&state.data, 0.0, &mut rate).unwrap();
    let n = k + 1;
    let rule = ofsv_core::geometry::QuadratureRule::gauss(6).unwrap();
    let mut worst: f64 = 0.0;
    for iy in 1..4 {
        for ix in 1..5 {
            let sv = iy * 6 + ix;
            for jy in 0..n {
                for jx in 0..n {
                    let xa = sys.disc.mesh.x.to_physical(ix, sys.disc.layout.bounds[jx]);
                    let xb = sys.disc.mesh.x.to_physical(ix, sys.disc.layout.bounds[jx + 1]);
                    let ya = sys.disc.mesh.y.to_physical(iy, sys.disc.layout.bounds[jy]);
                    let yb = sys.disc.mesh.y.to_physical(iy, sys.disc.layout.bounds[jy + 1]);
                    // average of -(f_x + f_y) over the CV by quadrature
                    let mut acc = 0.0;
                    for (&yq, &wy) in rule.nodes.iter().zip(&rule.weights) {
                        let y = 0.5 * (ya + yb) + 0.5 * (yb - ya) * yq;
                        for (&xq, &wx) in rule.nodes.iter().zip(&rule.weights) {
                            let x = 0.5 * (xa + xb) + 0.5 * (xb - xa) * xq;
                            acc += 0.25 * wx * wy * (fx(x, y) + fy(x, y));
                        }
                    }
                    let expect = -acc;
                    let got = rate[sv * n * n + jy * n + jx];
                    worst = worst.max((got - expect).abs());
                }
            }
        }
    }
    println!("mixed worst deviation: {worst:e}");
    assert!(worst < 1e-10, "worst {worst}");
}
