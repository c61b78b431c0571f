//! The `verify` subcommand: fast self-contained property checks across the
//! solver stack, printed one PASS/FAIL line per check.

use crate::CliError;
use ofsv_core::analysis::{dg_equivalence_check, ExactRiemann};
use ofsv_core::basis::{reconstruct_sv_1d, Discretization1, ReconstructionOperator};
use ofsv_core::damping::{compute_sigma_1d, cumulative_weights, damping_rates_sv_1d, DampingField, JumpTables};
use ofsv_core::geometry::{gauss_interior_points, right_radau_interior_points, CvFamily, CvLayout, Mesh1D, QuadratureRule};
use ofsv_core::numflux::{hllc, lax_friedrichs};
use ofsv_core::physics::{to_characteristic, ConservationLaw, EulerPrim};
use ofsv_core::solver::{run, BcSide, RunSetup, System, System1};
use ofsv_core::timeint::StepControl;
use ofsv_core::FluxKind;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

type Check = (&'static str, fn() -> Result<(), String>);

pub fn command() -> Result<(), CliError> {
    let checks: Vec<Check> = vec![
        ("quadrature-exactness", quadrature_exactness),
        ("cv-layouts", cv_layouts),
        ("reconstruction-round-trip", reconstruction_round_trip),
        ("eigenstructure", eigenstructure),
        ("flux-consistency", flux_consistency),
        ("exact-riemann", exact_riemann),
        ("dg-equivalence", dg_equivalence),
        ("conservation", conservation),
        ("l2-stability", l2_stability),
        ("damping-dissipativity", damping_dissipativity),
        ("sigma-smooth-scaling", sigma_smooth_scaling),
    ];

    let mut failed = 0;
    for (name, check) in &checks {
        match check() {
            Ok(()) => println!("PASS {name}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    println!("verify: {} passed, {} failed", checks.len() - failed, failed);
    if failed > 0 {
        Err(CliError::Numerical(format!("{failed} verification checks failed")))
    } else {
        Ok(())
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn quadrature_exactness() -> Result<(), String> {
    for n in 1..=16usize {
        let rule = QuadratureRule::gauss(n).map_err(|e| e.to_string())?;
        for d in 0..=(2 * n - 1) {
            let exact = if d % 2 == 0 { 2.0 / (d as f64 + 1.0) } else { 0.0 };
            let got = rule.integrate(-1.0, 1.0, |x| x.powi(d as i32));
            ensure(
                (got - exact).abs() <= 1e-13,
                format!("gauss n={n} degree {d}: {got} vs {exact}"),
            )?;
        }
    }
    for n in 2..=7usize {
        let rule = QuadratureRule::right_radau(n).map_err(|e| e.to_string())?;
        for d in 0..=(2 * n - 2) {
            let exact = if d % 2 == 0 { 2.0 / (d as f64 + 1.0) } else { 0.0 };
            let got = rule.integrate(-1.0, 1.0, |x| x.powi(d as i32));
            ensure(
                (got - exact).abs() <= 1e-12,
                format!("radau n={n} degree {d}: {got} vs {exact}"),
            )?;
        }
    }
    Ok(())
}

fn cv_layouts() -> Result<(), String> {
    for family in [CvFamily::GaussLegendre, CvFamily::RightRadau] {
        for k in 0..=6 {
            let layout = CvLayout::new(k, family).map_err(|e| e.to_string())?;
            ensure(
                layout.bounds.windows(2).all(|w| w[1] > w[0]),
                format!("{family:?} k={k}: bounds not monotone"),
            )?;
            let total: f64 = layout.widths.iter().sum();
            ensure(
                (total - 2.0).abs() <= 1e-13,
                format!("{family:?} k={k}: widths sum {total}"),
            )?;
        }
    }
    for k in 1..=6 {
        for &x in &right_radau_interior_points(k).map_err(|e| e.to_string())? {
            let resid = ofsv_core::legendre::eval(k + 1, x) - ofsv_core::legendre::eval(k, x);
            ensure(resid.abs() <= 1e-14, format!("radau residual {resid} at k={k}"))?;
        }
        for &x in &gauss_interior_points(k).map_err(|e| e.to_string())? {
            let resid = ofsv_core::legendre::eval(k, x);
            ensure(resid.abs() <= 1e-14, format!("gauss residual {resid} at k={k}"))?;
        }
    }
    Ok(())
}

fn reconstruction_round_trip() -> Result<(), String> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(401);
    for family in [CvFamily::GaussLegendre, CvFamily::RightRadau] {
        for k in 0..=5 {
            let layout = CvLayout::new(k, family).map_err(|e| e.to_string())?;
            let op = ReconstructionOperator::new(&layout);
            let n = k + 1;
            let coeffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let averages: Vec<f64> = (0..n)
                .map(|j| {
                    (0..n)
                        .map(|m| coeffs[m] * op.cv_integrals[m * n + j])
                        .sum::<f64>()
                        / layout.widths[j]
                })
                .collect();
            let mut modal = vec![0.0; n];
            reconstruct_sv_1d(&op, 1, &averages, &mut modal);
            for m in 0..n {
                ensure(
                    (modal[m] - coeffs[m]).abs() <= 1e-13,
                    format!("{family:?} k={k}: round trip off by {}", modal[m] - coeffs[m]),
                )?;
            }
        }
    }
    Ok(())
}

fn eigenstructure() -> Result<(), String> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(402);
    for dim in [1usize, 2] {
        let law = if dim == 1 {
            ConservationLaw::euler_1d()
        } else {
            ConservationLaw::euler_2d()
        };
        let m = law.n_comp();
        for trial in 0..50 {
            let state = if dim == 1 {
                EulerPrim::new_1d(
                    rng.gen_range(0.1..5.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(0.1..5.0),
                )
                .to_cons_1d(1.4)
                .to_vec()
            } else {
                EulerPrim::new_2d(
                    rng.gen_range(0.1..5.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(0.1..5.0),
                )
                .to_cons_2d(1.4)
                .to_vec()
            };
            let normal = if dim == 1 {
                [1.0, 0.0]
            } else if trial % 2 == 0 {
                [1.0, 0.0]
            } else {
                [0.0, 1.0]
            };
            let mut r = vec![0.0; m * m];
            let mut rinv = vec![0.0; m * m];
            law.eig_matrices(&state, normal, &mut r, &mut rinv)
                .map_err(|e| e.to_string())?;
            for a in 0..m {
                for b in 0..m {
                    let mut acc = 0.0;
                    for c in 0..m {
                        acc += r[a * m + c] * rinv[c * m + b];
                    }
                    let expect = if a == b { 1.0 } else { 0.0 };
                    ensure(
                        (acc - expect).abs() <= 1e-11,
                        format!("R R^-1 deviates by {} at ({a},{b})", acc - expect),
                    )?;
                }
            }
            // A R = R Lambda via finite-difference Jacobian.
            let p = law.pressure(&state).map_err(|e| e.to_string())?;
            let c = (1.4 * p / state[0]).sqrt();
            let qn = if dim == 1 {
                state[1] / state[0]
            } else {
                (state[1] * normal[0] + state[2] * normal[1]) / state[0]
            };
            let lambda: Vec<f64> = if dim == 1 {
                vec![qn - c, qn, qn + c]
            } else {
                vec![qn - c, qn, qn, qn + c]
            };
            let eps = 1e-7;
            for col in 0..m {
                for row in 0..m {
                    let mut ar = 0.0;
                    for c2 in 0..m {
                        let mut up = state.clone();
                        let mut dn = state.clone();
                        up[c2] += eps;
                        dn[c2] -= eps;
                        let mut fp = vec![0.0; m];
                        let mut fm = vec![0.0; m];
                        let mut gp = vec![0.0; m];
                        let mut gm = vec![0.0; m];
                        law.flux(&up, 0, &mut fp).map_err(|e| e.to_string())?;
                        law.flux(&dn, 0, &mut fm).map_err(|e| e.to_string())?;
                        let mut jac = normal[0] * (fp[row] - fm[row]) / (2.0 * eps);
                        if dim == 2 {
                            law.flux(&up, 1, &mut gp).map_err(|e| e.to_string())?;
                            law.flux(&dn, 1, &mut gm).map_err(|e| e.to_string())?;
                            jac += normal[1] * (gp[row] - gm[row]) / (2.0 * eps);
                        }
                        ar += jac * r[c2 * m + col];
                    }
                    let rl = r[row * m + col] * lambda[col];
                    ensure(
                        (ar - rl).abs() <= 1e-5 * (1.0 + rl.abs()),
                        format!("A R mismatch {} vs {}", ar, rl),
                    )?;
                }
            }
        }
    }
    Ok(())
}

fn flux_consistency() -> Result<(), String> {
    let law = ConservationLaw::euler_1d();
    let u = EulerPrim::new_1d(1.3, -0.4, 2.1).to_cons_1d(1.4);
    let mut exact = [0.0; 3];
    law.flux(&u, 0, &mut exact).map_err(|e| e.to_string())?;
    let mut f = [0.0; 3];
    lax_friedrichs(&law, &u, &u, 0, &mut f).map_err(|e| e.to_string())?;
    for s in 0..3 {
        ensure((f[s] - exact[s]).abs() <= 1e-13, "LF consistency")?;
    }
    hllc(&law, &u, &u, 0, &mut f).map_err(|e| e.to_string())?;
    for s in 0..3 {
        ensure((f[s] - exact[s]).abs() <= 1e-13, "HLLC consistency")?;
    }
    // Characteristic round trip.
    let mut r = [0.0; 9];
    let mut rinv = [0.0; 9];
    law.eig_matrices(&u, [1.0, 0.0], &mut r, &mut rinv)
        .map_err(|e| e.to_string())?;
    let vals = [0.7, -0.2, 1.1];
    let mut w = [0.0; 3];
    let mut back = [0.0; 3];
    to_characteristic(&rinv, &vals, &mut w);
    to_characteristic(&r, &w, &mut back);
    for s in 0..3 {
        ensure((back[s] - vals[s]).abs() <= 1e-12, "characteristic round trip")?;
    }
    Ok(())
}

fn exact_riemann() -> Result<(), String> {
    let sol = ExactRiemann::solve(
        EulerPrim::new_1d(1.0, 0.0, 1.0),
        EulerPrim::new_1d(0.125, 0.0, 0.1),
        1.4,
    )
    .map_err(|e| e.to_string())?;
    ensure(
        (sol.p_star - 0.30313).abs() <= 5e-6,
        format!("Sod p* = {}", sol.p_star),
    )?;
    ensure(
        (sol.u_star - 0.92745).abs() <= 5e-6,
        format!("Sod u* = {}", sol.u_star),
    )?;
    Ok(())
}

fn dg_equivalence() -> Result<(), String> {
    let u0 = |x: f64| 1.0 + 0.2 * (PI * x).sin();
    for k in 1..=3 {
        let dev = dg_equivalence_check(k, 8, 0.5, CvFamily::RightRadau, false, u0)
            .map_err(|e| e.to_string())?;
        ensure(dev <= 1e-11, format!("k={k}: deviation {dev}"))?;
    }
    let gauss = dg_equivalence_check(2, 8, 0.5, CvFamily::GaussLegendre, false, u0)
        .map_err(|e| e.to_string())?;
    ensure(gauss > 1e-9, format!("Gauss family unexpectedly equivalent: {gauss}"))?;
    Ok(())
}

fn advection_system(n: usize, k: usize) -> Result<System1, String> {
    let disc = Discretization1::new(
        Mesh1D::uniform(0.0, 2.0, n).map_err(|e| e.to_string())?,
        CvLayout::new(k, CvFamily::GaussLegendre).map_err(|e| e.to_string())?,
        1,
    );
    System1::new(
        disc,
        ConservationLaw::Advection1,
        FluxKind::Upwind,
        true,
        (BcSide::Periodic, BcSide::Periodic),
    )
    .map_err(|e| e.to_string())
}

fn conservation() -> Result<(), String> {
    let sys = advection_system(16, 2)?;
    // Smooth background plus a mesh-aligned plateau bump: discontinuous data.
    let state = sys.disc.average_initial(
        |x, out| {
            out[0] = 1.0
                + 0.4 * (PI * x).sin()
                + if (0.75..1.25).contains(&x) { 0.15 } else { 0.0 }
        },
        6,
    );
    let mass0 = sys.disc.total_mass(&state.data, 0);
    let disc = sys.disc.clone();
    let out = run(RunSetup::new(
        System::One(Box::new(sys)),
        state,
        StepControl::new(0.4, 1.0),
    ))
    .map_err(|e| e.to_string())?;
    let drift = (disc.total_mass(&out.state.data, 0) - mass0).abs() / mass0.abs();
    ensure(drift <= 1e-12, format!("mass drift {drift}"))
}

fn l2_stability() -> Result<(), String> {
    let mut sys = advection_system(24, 2)?;
    let state = sys
        .disc
        .average_initial(|x, out| out[0] = if x < 1.0 { 1.0 } else { -0.5 }, 6);
    let norm = |sys: &System1, data: &[f64]| {
        let field = sys.disc.reconstruct(data);
        let mut acc = 0.0;
        for i in 0..sys.disc.mesh.n {
            let h = sys.disc.mesh.h(i);
            for m in 0..=2 {
                let c = field.coeffs(i)[m];
                acc += c * c * (h / 2.0) * (2.0 / (2.0 * m as f64 + 1.0));
            }
        }
        acc.sqrt()
    };
    let mut data = state.data.clone();
    let mut k1 = vec![0.0; data.len()];
    let mut bufs = ofsv_core::timeint::StageBuffers::new(data.len());
    // CFL 0.2: the step-one damping stiffness at a fresh jump exceeds what
    // the start-of-step a0 anticipates at larger CFL.
    let ctrl = StepControl::new(0.2, 1.0);
    let mut prev = norm(&sys, &data);
    let mut t = 0.0;
    while t < 1.0 - 1e-12 {
        let stats = sys.residual(&data, t, &mut k1).map_err(|e| e.to_string())?;
        let dt = ctrl.compute_dt_1d(stats.alpha_x, stats.a0, sys.disc.mesh.min_h(), t, 1.0);
        ofsv_core::timeint::rk4_step(&mut data, t, dt, &k1, |u, ts, out| {
            sys.residual(u, ts, out).map(|_| ())
        }, &mut bufs)
        .map_err(|e| e.to_string())?;
        t += dt;
        let next = norm(&sys, &data);
        ensure(
            next <= prev * (1.0 + 1e-10),
            format!("norm grew from {prev} to {next} at t = {t}"),
        )?;
        prev = next;
    }
    Ok(())
}

fn damping_dissipativity() -> Result<(), String> {
    let k = 2;
    let disc = Discretization1::new(
        Mesh1D::uniform(0.0, 2.0, 8).map_err(|e| e.to_string())?,
        CvLayout::new(k, CvFamily::GaussLegendre).map_err(|e| e.to_string())?,
        1,
    );
    let tables = JumpTables::new(k);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(406);
    for _ in 0..100 {
        let values: Vec<f64> = (0..disc.n_dof()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let field = disc.reconstruct(&values);
        let mut damping = DampingField::zeros(k, 8);
        compute_sigma_1d(
            &field,
            &disc.mesh,
            &ConservationLaw::Advection1,
            true,
            &tables,
            &mut damping,
        )
        .map_err(|e| e.to_string())?;
        let mut weights = vec![0.0; k + 1];
        let mut rates = vec![0.0; k + 1];
        let mut rate_avgs = vec![0.0; k + 1];
        let mut rate_modal = vec![0.0; k + 1];
        let mut ddt = 0.0;
        for i in 0..8 {
            cumulative_weights(damping.sv(i), &mut weights);
            damping_rates_sv_1d(field.coeffs(i), k, 1, &weights, &disc.op, &mut rates);
            let mut total = 0.0;
            for j in 0..=k {
                total += rates[j];
                rate_avgs[j] = rates[j] / disc.cv_width(i, j);
            }
            ensure(total.abs() <= 1e-13, format!("SV rate sum {total}"))?;
            reconstruct_sv_1d(&disc.op, 1, &rate_avgs, &mut rate_modal);
            let h = disc.mesh.h(i);
            for m in 0..=k {
                ddt += 2.0 * field.coeffs(i)[m] * rate_modal[m] * (h / 2.0)
                    * (2.0 / (2.0 * m as f64 + 1.0));
            }
        }
        ensure(ddt <= 1e-12, format!("d/dt ||u||^2 = {ddt}"))?;
    }
    Ok(())
}

fn sigma_smooth_scaling() -> Result<(), String> {
    let k = 2;
    let tables = JumpTables::new(k);
    let mut a0s = Vec::new();
    for n in [16usize, 32, 64] {
        let disc = Discretization1::new(
            Mesh1D::uniform(0.0, 2.0, n).map_err(|e| e.to_string())?,
            CvLayout::new(k, CvFamily::GaussLegendre).map_err(|e| e.to_string())?,
            1,
        );
        let state = disc.interpolate_initial(|x, out| out[0] = 1.0 + 0.2 * (PI * x).sin());
        let field = disc.reconstruct(&state.data);
        let mut damping = DampingField::zeros(k, n);
        compute_sigma_1d(
            &field,
            &disc.mesh,
            &ConservationLaw::Advection1,
            true,
            &tables,
            &mut damping,
        )
        .map_err(|e| e.to_string())?;
        a0s.push(damping.a0);
    }
    for w in a0s.windows(2) {
        let rate = (w[0] / w[1]).log2();
        ensure(rate >= k as f64 + 0.5, format!("scaling rate {rate}"))?;
    }
    Ok(())
}
