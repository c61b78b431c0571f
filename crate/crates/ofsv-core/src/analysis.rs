//! Verification tooling: error norms and convergence orders, the exact Euler
//! Riemann solution, an independently coded upwind DG oracle for the
//! right-Radau equivalence check, and oscillation metrics.

use crate::basis::{eval_poly_1d, eval_poly_2d, Discretization1, Discretization2};
use crate::damping::JumpTables;
use crate::geometry::{CvFamily, CvLayout, Mesh1D, QuadratureRule};
use crate::numflux::FluxKind;
use crate::physics::{ConservationLaw, EulerPrim};
use crate::solver::{BcSide, SolverError, System1};
use crate::timeint::StageBuffers;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("vacuum generated between the given states")]
    Vacuum,
    #[error("star-pressure iteration did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("degenerate error value (zero) has no convergence order")]
    DegenerateError,
}

/// L2 error `||u_h - u||_0` per component, by per-CV Gauss quadrature of the
/// reconstructed solution.
pub fn l2_error_1d<F: Fn(f64, &mut [f64])>(
    disc: &Discretization1,
    data: &[f64],
    exact: F,
    quad_points: usize,
) -> Vec<f64> {
    let m = disc.n_comp;
    let k = disc.layout.degree;
    let rule = QuadratureRule::gauss(quad_points).expect("supported quadrature count");
    let field = disc.reconstruct(data);
    let mut acc = vec![0.0; m];
    let mut uh = vec![0.0; m];
    let mut ue = vec![0.0; m];
    for i in 0..disc.mesh.n {
        let h = disc.mesh.h(i);
        let coeffs = field.coeffs(i);
        for (&xq, &wq) in rule.nodes.iter().zip(&rule.weights) {
            eval_poly_1d(coeffs, k, m, xq, &mut uh);
            exact(disc.mesh.to_physical(i, xq), &mut ue);
            for s in 0..m {
                let d = uh[s] - ue[s];
                acc[s] += 0.5 * h * wq * d * d;
            }
        }
    }
    acc.iter().map(|v| v.sqrt()).collect()
}

/// Cell-average error `e_c`: RMS over SVs of the SV-mean error.
pub fn cell_average_error_1d<F: Fn(f64, &mut [f64])>(
    disc: &Discretization1,
    data: &[f64],
    exact: F,
    quad_points: usize,
) -> Vec<f64> {
    let m = disc.n_comp;
    let rule = QuadratureRule::gauss(quad_points).expect("supported quadrature count");
    let mut acc = vec![0.0; m];
    let mut ue = vec![0.0; m];
    for i in 0..disc.mesh.n {
        let mut exact_mean = vec![0.0; m];
        for (&xq, &wq) in rule.nodes.iter().zip(&rule.weights) {
            exact(disc.mesh.to_physical(i, xq), &mut ue);
            for s in 0..m {
                exact_mean[s] += 0.5 * wq * ue[s];
            }
        }
        for s in 0..m {
            let d = exact_mean[s] - disc.sv_mean(data, i, s);
            acc[s] += d * d;
        }
    }
    acc.iter().map(|v| (v / disc.mesh.n as f64).sqrt()).collect()
}

/// Downwind-point error `e_n`: RMS of the left-limit traces at the downwind
/// SV faces (positive flow direction assumed, as in every test problem).
pub fn downwind_point_error_1d<F: Fn(f64, &mut [f64])>(
    disc: &Discretization1,
    data: &[f64],
    exact: F,
) -> Vec<f64> {
    let m = disc.n_comp;
    let k = disc.layout.degree;
    let field = disc.reconstruct(data);
    let mut acc = vec![0.0; m];
    let mut uh = vec![0.0; m];
    let mut ue = vec![0.0; m];
    for i in 0..disc.mesh.n {
        eval_poly_1d(field.coeffs(i), k, m, 1.0, &mut uh);
        exact(disc.mesh.edges[i + 1], &mut ue);
        for s in 0..m {
            let d = uh[s] - ue[s];
            acc[s] += d * d;
        }
    }
    acc.iter().map(|v| (v / disc.mesh.n as f64).sqrt()).collect()
}

pub fn l2_error_2d<F: Fn(f64, f64, &mut [f64])>(
    disc: &Discretization2,
    data: &[f64],
    exact: F,
    quad_points: usize,
) -> Vec<f64> {
    let m = disc.n_comp;
    let k = disc.layout.degree;
    let rule = QuadratureRule::gauss(quad_points).expect("supported quadrature count");
    let field = disc.reconstruct(data);
    let mut acc = vec![0.0; m];
    let mut uh = vec![0.0; m];
    let mut ue = vec![0.0; m];
    for iy in 0..disc.mesh.y.n {
        for ix in 0..disc.mesh.x.n {
            let sv = disc.sv_index(ix, iy);
            let coeffs = field.coeffs(sv);
            let hx = disc.mesh.x.h(ix);
            let hy = disc.mesh.y.h(iy);
            for (&yq, &wy) in rule.nodes.iter().zip(&rule.weights) {
                for (&xq, &wx) in rule.nodes.iter().zip(&rule.weights) {
                    eval_poly_2d(coeffs, k, m, xq, yq, &mut uh);
                    exact(
                        disc.mesh.x.to_physical(ix, xq),
                        disc.mesh.y.to_physical(iy, yq),
                        &mut ue,
                    );
                    for s in 0..m {
                        let d = uh[s] - ue[s];
                        acc[s] += 0.25 * hx * hy * wx * wy * d * d;
                    }
                }
            }
        }
    }
    acc.iter().map(|v| v.sqrt()).collect()
}

pub fn cell_average_error_2d<F: Fn(f64, f64, &mut [f64])>(
    disc: &Discretization2,
    data: &[f64],
    exact: F,
    quad_points: usize,
) -> Vec<f64> {
    let m = disc.n_comp;
    let rule = QuadratureRule::gauss(quad_points).expect("supported quadrature count");
    let n_sv = disc.mesh.n_sv();
    let mut acc = vec![0.0; m];
    let mut ue = vec![0.0; m];
    for iy in 0..disc.mesh.y.n {
        for ix in 0..disc.mesh.x.n {
            let sv = disc.sv_index(ix, iy);
            let mut exact_mean = vec![0.0; m];
            for (&yq, &wy) in rule.nodes.iter().zip(&rule.weights) {
                for (&xq, &wx) in rule.nodes.iter().zip(&rule.weights) {
                    exact(
                        disc.mesh.x.to_physical(ix, xq),
                        disc.mesh.y.to_physical(iy, yq),
                        &mut ue,
                    );
                    for s in 0..m {
                        exact_mean[s] += 0.25 * wx * wy * ue[s];
                    }
                }
            }
            for s in 0..m {
                let d = exact_mean[s] - disc.sv_mean(data, sv, s);
                acc[s] += d * d;
            }
        }
    }
    acc.iter().map(|v| (v / n_sv as f64).sqrt()).collect()
}

/// Downwind corner error for diagonal `(1, 1)` transport: traces at
/// `(x_{i+1/2}^-, y_{j+1/2}^-)`.
pub fn downwind_point_error_2d<F: Fn(f64, f64, &mut [f64])>(
    disc: &Discretization2,
    data: &[f64],
    exact: F,
) -> Vec<f64> {
    let m = disc.n_comp;
    let k = disc.layout.degree;
    let field = disc.reconstruct(data);
    let n_sv = disc.mesh.n_sv();
    let mut acc = vec![0.0; m];
    let mut uh = vec![0.0; m];
    let mut ue = vec![0.0; m];
    for iy in 0..disc.mesh.y.n {
        for ix in 0..disc.mesh.x.n {
            let sv = disc.sv_index(ix, iy);
            eval_poly_2d(field.coeffs(sv), k, m, 1.0, 1.0, &mut uh);
            exact(disc.mesh.x.edges[ix + 1], disc.mesh.y.edges[iy + 1], &mut ue);
            for s in 0..m {
                let d = uh[s] - ue[s];
                acc[s] += d * d;
            }
        }
    }
    acc.iter().map(|v| (v / n_sv as f64).sqrt()).collect()
}

/// `log2(e_coarse / e_fine)` between meshes `N` and `2N`.
pub fn convergence_order(e_coarse: f64, e_fine: f64) -> Result<f64, AnalysisError> {
    if e_coarse <= 0.0 || e_fine <= 0.0 {
        return Err(AnalysisError::DegenerateError);
    }
    Ok((e_coarse / e_fine).log2())
}

/// L1 error of one component against an exact profile.
pub fn l1_error_1d<F: Fn(f64) -> f64>(
    disc: &Discretization1,
    data: &[f64],
    comp: usize,
    exact: F,
    quad_points: usize,
) -> f64 {
    let m = disc.n_comp;
    let k = disc.layout.degree;
    let rule = QuadratureRule::gauss(quad_points).expect("supported quadrature count");
    let field = disc.reconstruct(data);
    let mut acc = 0.0;
    let mut uh = vec![0.0; m];
    for i in 0..disc.mesh.n {
        let h = disc.mesh.h(i);
        for (&xq, &wq) in rule.nodes.iter().zip(&rule.weights) {
            eval_poly_1d(field.coeffs(i), k, m, xq, &mut uh);
            acc += 0.5 * h * wq * (uh[comp] - exact(disc.mesh.to_physical(i, xq))).abs();
        }
    }
    acc
}

/// L1 distance between the SV means of a coarse run and a conforming finer
/// run of the same problem (`fine N` must be a multiple of `coarse N`).
pub fn l1_distance_cell_means(
    coarse: &Discretization1,
    coarse_data: &[f64],
    fine: &Discretization1,
    fine_data: &[f64],
    comp: usize,
) -> f64 {
    assert_eq!(fine.mesh.n % coarse.mesh.n, 0, "meshes must nest");
    let ratio = fine.mesh.n / coarse.mesh.n;
    let mut acc = 0.0;
    for i in 0..coarse.mesh.n {
        let mut fine_mean = 0.0;
        for r in 0..ratio {
            fine_mean += fine.sv_mean(fine_data, i * ratio + r, comp);
        }
        fine_mean /= ratio as f64;
        acc += (coarse.sv_mean(coarse_data, i, comp) - fine_mean).abs() * coarse.mesh.h(i);
    }
    acc
}

/// Max overshoot and undershoot of the reconstructed traces at all CV bounds
/// relative to a reference profile sampled at the same points, per component:
/// `(max(u_h) - max(ref), min(ref) - min(u_h))`.
pub fn overshoot_metric_1d<F: Fn(f64, &mut [f64])>(
    disc: &Discretization1,
    data: &[f64],
    reference: F,
) -> Vec<(f64, f64)> {
    let m = disc.n_comp;
    let k = disc.layout.degree;
    let field = disc.reconstruct(data);
    let mut hi = vec![f64::NEG_INFINITY; m];
    let mut lo = vec![f64::INFINITY; m];
    let mut rhi = vec![f64::NEG_INFINITY; m];
    let mut rlo = vec![f64::INFINITY; m];
    let mut uh = vec![0.0; m];
    let mut ue = vec![0.0; m];
    for i in 0..disc.mesh.n {
        for &xi in disc.layout.bounds.iter() {
            eval_poly_1d(field.coeffs(i), k, m, xi, &mut uh);
            reference(disc.mesh.to_physical(i, xi), &mut ue);
            for s in 0..m {
                hi[s] = hi[s].max(uh[s]);
                lo[s] = lo[s].min(uh[s]);
                rhi[s] = rhi[s].max(ue[s]);
                rlo[s] = rlo[s].min(ue[s]);
            }
        }
    }
    (0..m).map(|s| (hi[s] - rhi[s], rlo[s] - lo[s])).collect()
}

/// Exact self-similar solution of the 1D Euler Riemann problem (two states
/// separated by up to three waves), following Toro's star-region iteration.
#[derive(Debug, Clone)]
pub struct ExactRiemann {
    pub left: EulerPrim,
    pub right: EulerPrim,
    pub gamma: f64,
    pub p_star: f64,
    pub u_star: f64,
}

impl ExactRiemann {
    pub fn solve(left: EulerPrim, right: EulerPrim, gamma: f64) -> Result<Self, AnalysisError> {
        let cl = left.sound_speed(gamma);
        let cr = right.sound_speed(gamma);
        if 2.0 * (cl + cr) / (gamma - 1.0) <= right.u - left.u {
            return Err(AnalysisError::Vacuum);
        }

        let f_side = |p: f64, side: &EulerPrim, c: f64| -> (f64, f64) {
            if p > side.p {
                // shock branch
                let a = 2.0 / ((gamma + 1.0) * side.rho);
                let b = (gamma - 1.0) / (gamma + 1.0) * side.p;
                let root = (a / (p + b)).sqrt();
                (
                    (p - side.p) * root,
                    root * (1.0 - 0.5 * (p - side.p) / (b + p)),
                )
            } else {
                // rarefaction branch
                let pr = p / side.p;
                (
                    2.0 * c / (gamma - 1.0) * (pr.powf((gamma - 1.0) / (2.0 * gamma)) - 1.0),
                    (pr.powf(-(gamma + 1.0) / (2.0 * gamma))) / (side.rho * c),
                )
            }
        };

        // Primitive-variable (PVRS) starting guess, floored away from zero.
        let mut p = (0.5 * (left.p + right.p)
            - 0.125 * (right.u - left.u) * (left.rho + right.rho) * (cl + cr))
            .max(1e-8 * left.p.min(right.p));
        let max_iter = 100;
        let mut converged = false;
        for _ in 0..max_iter {
            let (fl, dfl) = f_side(p, &left, cl);
            let (fr, dfr) = f_side(p, &right, cr);
            let g = fl + fr + right.u - left.u;
            let dp = g / (dfl + dfr);
            let mut next = p - dp;
            if next <= 0.0 {
                next = 0.5 * p;
            }
            let change = (next - p).abs() / (0.5 * (next + p));
            p = next;
            if change < 1e-12 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(AnalysisError::NoConvergence(max_iter));
        }
        let (fl, _) = f_side(p, &left, cl);
        let (fr, _) = f_side(p, &right, cr);
        let u_star = 0.5 * (left.u + right.u) + 0.5 * (fr - fl);
        Ok(Self {
            left,
            right,
            gamma,
            p_star: p,
            u_star,
        })
    }

    /// Samples the solution at similarity coordinate `xi = x / t`.
    pub fn sample(&self, xi: f64) -> EulerPrim {
        let g = self.gamma;
        let gm = g - 1.0;
        let gp = g + 1.0;
        if xi <= self.u_star {
            let s = &self.left;
            let c = s.sound_speed(g);
            if self.p_star > s.p {
                // left shock
                let speed = s.u - c * (gp / (2.0 * g) * self.p_star / s.p + gm / (2.0 * g)).sqrt();
                if xi < speed {
                    *s
                } else {
                    let ratio = (self.p_star / s.p + gm / gp) / (gm / gp * self.p_star / s.p + 1.0);
                    EulerPrim::new_1d(s.rho * ratio, self.u_star, self.p_star)
                }
            } else {
                // left rarefaction
                let head = s.u - c;
                let c_star = c * (self.p_star / s.p).powf(gm / (2.0 * g));
                let tail = self.u_star - c_star;
                if xi < head {
                    *s
                } else if xi > tail {
                    EulerPrim::new_1d(
                        s.rho * (self.p_star / s.p).powf(1.0 / g),
                        self.u_star,
                        self.p_star,
                    )
                } else {
                    let u = 2.0 / gp * (c + 0.5 * gm * s.u + xi);
                    let cf = 2.0 / gp * (c + 0.5 * gm * (s.u - xi));
                    EulerPrim::new_1d(
                        s.rho * (cf / c).powf(2.0 / gm),
                        u,
                        s.p * (cf / c).powf(2.0 * g / gm),
                    )
                }
            }
        } else {
            let s = &self.right;
            let c = s.sound_speed(g);
            if self.p_star > s.p {
                // right shock
                let speed = s.u + c * (gp / (2.0 * g) * self.p_star / s.p + gm / (2.0 * g)).sqrt();
                if xi > speed {
                    *s
                } else {
                    let ratio = (self.p_star / s.p + gm / gp) / (gm / gp * self.p_star / s.p + 1.0);
                    EulerPrim::new_1d(s.rho * ratio, self.u_star, self.p_star)
                }
            } else {
                // right rarefaction
                let head = s.u + c;
                let c_star = c * (self.p_star / s.p).powf(gm / (2.0 * g));
                let tail = self.u_star + c_star;
                if xi > head {
                    *s
                } else if xi < tail {
                    EulerPrim::new_1d(
                        s.rho * (self.p_star / s.p).powf(1.0 / g),
                        self.u_star,
                        self.p_star,
                    )
                } else {
                    let u = 2.0 / gp * (-c + 0.5 * gm * s.u + xi);
                    let cf = 2.0 / gp * (c - 0.5 * gm * (s.u - xi));
                    EulerPrim::new_1d(
                        s.rho * (cf / c).powf(2.0 / gm),
                        u,
                        s.p * (cf / c).powf(2.0 * g / gm),
                    )
                }
            }
        }
    }

    /// Density profile at `(x, t)` for a jump initially at `x0`.
    pub fn sample_at(&self, x: f64, x0: f64, t: f64) -> EulerPrim {
        if t <= 0.0 {
            return if x < x0 { self.left } else { self.right };
        }
        self.sample((x - x0) / t)
    }
}

/// Independently coded modal upwind DG solver for `u_t + u_x = 0` with
/// periodic boundaries, used as the equivalence oracle for the right-Radau
/// scheme. Optionally applies the same jump-driven modal damping.
struct UpwindDg {
    k: usize,
    n: usize,
    h: f64,
    damping: bool,
    tables: JumpTables,
}

impl UpwindDg {
    fn new(k: usize, n: usize, h: f64, damping: bool) -> Self {
        Self {
            k,
            n,
            h,
            damping,
            tables: JumpTables::new(k),
        }
    }

    /// `dc_m/dt = (2m+1)/h (2 sum_{n<m, m+n odd} c_n - u^-_{i+1/2}
    ///            + (-1)^m u^-_{i-1/2})`, plus modal damping when enabled.
    fn residual(&self, c: &[f64], out: &mut [f64]) {
        let k = self.k;
        let nm = k + 1;
        for i in 0..self.n {
            let prev = if i == 0 { self.n - 1 } else { i - 1 };
            let trace_out: f64 = c[i * nm..(i + 1) * nm].iter().sum();
            let trace_in: f64 = c[prev * nm..(prev + 1) * nm].iter().sum();
            for m in 0..nm {
                let mut vol = 0.0;
                for q in 0..m {
                    if (m + q) % 2 == 1 {
                        vol += 2.0 * c[i * nm + q];
                    }
                }
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                out[i * nm + m] =
                    (2.0 * m as f64 + 1.0) / self.h * (vol - trace_out + sign * trace_in);
            }
        }
        if self.damping {
            self.apply_damping(c, out);
        }
    }

    /// Same damping construction as the SV scheme, expressed in modal form:
    /// `dc_m/dt -= (sum_{l<=m} sigma^l) / h * c_m` for `m >= 1`.
    fn apply_damping(&self, c: &[f64], out: &mut [f64]) {
        let k = self.k;
        let nm = k + 1;
        let prefac = |l: usize| 2.0 * (2.0 * l as f64 + 1.0) / (2.0 * k as f64 - 1.0);
        let factorial = |l: usize| (1..=l).map(|v| v as f64).product::<f64>().max(1.0);
        // Jumps of every derivative order at each interface.
        let mut jumps = vec![0.0; (self.n + 1) * nm];
        for iface in 0..self.n {
            let li = if iface == 0 { self.n - 1 } else { iface - 1 };
            let ri = iface;
            for l in 0..=k {
                let rp = &self.tables.plus[l * nm..(l + 1) * nm];
                let rm = &self.tables.minus[l * nm..(l + 1) * nm];
                let scale = (2.0 / self.h).powi(l as i32);
                let mut dl = 0.0;
                let mut dr = 0.0;
                for m in 0..nm {
                    dl += c[li * nm + m] * rp[m];
                    dr += c[ri * nm + m] * rm[m];
                }
                jumps[iface * nm + l] = (dr - dl) * scale;
            }
        }
        jumps.copy_within(0..nm, self.n * nm);
        // Level l deletes the projection onto degree l-1, i.e. damps modes
        // m >= max(l, 1); per mode that folds into the cumulative weight
        // sum_{l <= m} sigma^l.
        for i in 0..self.n {
            let jl = &jumps[i * nm..(i + 1) * nm];
            let jr = &jumps[(i + 1) * nm..(i + 2) * nm];
            let mut w = 0.0;
            for l in 0..=k {
                let rms = (0.5 * (jl[l] * jl[l] + jr[l] * jr[l])).sqrt();
                w += prefac(l) * self.h.powi(l as i32) / factorial(l) * rms;
                if l >= 1 {
                    out[i * nm + l] -= w / self.h * c[i * nm + l];
                }
            }
        }
    }
}

/// Runs the SV scheme and the independent upwind DG oracle from identical
/// initial polynomials with identical fixed time steps, and returns the
/// maximum L2 distance between the two solutions over all steps.
pub fn dg_equivalence_check<F: Fn(f64) -> f64>(
    k: usize,
    n_sv: usize,
    t_final: f64,
    family: CvFamily,
    damping: bool,
    u0: F,
) -> Result<f64, SolverError> {
    let mesh = Mesh1D::uniform(0.0, 2.0, n_sv).map_err(|e| SolverError::Config(e.to_string()))?;
    let h = mesh.h(0);
    let layout = CvLayout::new(k, family).map_err(|e| SolverError::Config(e.to_string()))?;
    let disc = Discretization1::new(mesh, layout, 1);
    let mut sys = System1::new(
        disc,
        ConservationLaw::Advection1,
        FluxKind::Upwind,
        damping,
        (BcSide::Periodic, BcSide::Periodic),
    )?;

    let state = sys.disc.interpolate_initial(|x, out| out[0] = u0(x));
    let mut sv_data = state.data.clone();
    let mut dg_coeffs = sys.disc.reconstruct(&sv_data).data;

    let dg = UpwindDg::new(k, n_sv, h, damping);
    let nm = k + 1;

    let dt_target = 0.2 * h / (2.0 * k as f64 + 1.0);
    let steps = (t_final / dt_target).ceil() as usize;
    let dt = t_final / steps as f64;

    let mut sv_k1 = vec![0.0; sv_data.len()];
    let mut sv_buf = StageBuffers::new(sv_data.len());
    let mut dg_k1 = vec![0.0; dg_coeffs.len()];
    let mut dg_buf = StageBuffers::new(dg_coeffs.len());

    let mut max_dev: f64 = 0.0;
    let mut t = 0.0;
    for _ in 0..steps {
        sys.residual(&sv_data, t, &mut sv_k1)?;
        crate::timeint::rk4_step(
            &mut sv_data,
            t,
            dt,
            &sv_k1,
            |u, ts, out| sys.residual(u, ts, out).map(|_| ()),
            &mut sv_buf,
        )?;
        dg.residual(&dg_coeffs, &mut dg_k1);
        crate::timeint::rk4_step(
            &mut dg_coeffs,
            t,
            dt,
            &dg_k1,
            |u, _ts, out| {
                dg.residual(u, out);
                Ok::<(), SolverError>(())
            },
            &mut dg_buf,
        )?;
        t += dt;

        let sv_modal = sys.disc.reconstruct(&sv_data);
        let mut dist2 = 0.0;
        for i in 0..n_sv {
            for m in 0..nm {
                let d = sv_modal.coeffs(i)[m] - dg_coeffs[i * nm + m];
                dist2 += d * d * (h / 2.0) * (2.0 / (2.0 * m as f64 + 1.0));
            }
        }
        max_dev = max_dev.max(dist2.sqrt());
    }
    Ok(max_dev)
}
