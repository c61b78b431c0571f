//! Per-SV damping coefficients and the damping contribution to CV rates.
//!
//! For degree `k >= 1` the coefficient of damping level `l` is
//!
//! ```text
//! sigma^l = 2(2l+1)/(2k-1) * h^l / l! *
//!           max_s sum_{|alpha|=l} ( 1/N_e * sum_{v} [[d^alpha V_s]]_v^2 )^{1/2}
//! ```
//!
//! where the jumps of the characteristic variables `V = R^{-1} U` are taken
//! at the SV vertices (`N_e = 2` in 1D, `4` for rectangles; in 2D each vertex
//! contributes one squared jump across its x-face and one across its y-face).
//! `h` is the SV diameter. Missing neighbors at non-periodic boundaries
//! contribute zero jumps.
//!
//! The damping acts on the rate of each CV integral as
//! `-sum_l sigma^l / h * integral_cv (U_h - P^{l-1} U_h)`; it never changes
//! the SV total, so conservation is untouched.

use crate::basis::{damping_moment_1d, ModalField1, ModalField2, ModalPoly1, ReconstructionOperator};
use crate::geometry::{Mesh1D, Mesh2D};
use crate::legendre;
use crate::physics::{ConservationLaw, PhysicsError};
use rayon::prelude::*;

/// Per-SV damping coefficients and the global `a0` entering the CFL bound.
#[derive(Debug, Clone)]
pub struct DampingField {
    pub degree: usize,
    /// `sigma[sv * (k+1) + l]`, velocity-scaled.
    pub sigma: Vec<f64>,
    /// `max over SVs of sum_l sigma^l`.
    pub a0: f64,
}

impl DampingField {
    pub fn zeros(degree: usize, n_sv: usize) -> Self {
        Self {
            degree,
            sigma: vec![0.0; n_sv * (degree + 1)],
            a0: 0.0,
        }
    }

    pub fn sv(&self, sv: usize) -> &[f64] {
        &self.sigma[sv * (self.degree + 1)..(sv + 1) * (self.degree + 1)]
    }
}

/// `2(2l+1)/(2k-1)`.
#[inline]
pub fn prefactor(l: usize, k: usize) -> f64 {
    2.0 * (2.0 * l as f64 + 1.0) / (2.0 * k as f64 - 1.0)
}

const FACTORIALS: [f64; 8] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0];

/// Derivative tables of the Legendre basis at the two reference endpoints,
/// shared by every jump evaluation.
#[derive(Debug, Clone)]
pub struct JumpTables {
    pub degree: usize,
    /// `plus[l * (k+1) + m] = d^l L_m (+1)`.
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

impl JumpTables {
    pub fn new(degree: usize) -> Self {
        Self {
            degree,
            plus: legendre::derivative_table(1.0, degree, degree),
            minus: legendre::derivative_table(-1.0, degree, degree),
        }
    }

    #[inline]
    fn row(&self, at_plus: bool, l: usize) -> &[f64] {
        let n = self.degree + 1;
        if at_plus {
            &self.plus[l * n..(l + 1) * n]
        } else {
            &self.minus[l * n..(l + 1) * n]
        }
    }
}

/// Jumps of `d^l V_s` across one 1D interface for every order `l = 0..=k`,
/// written into `out[l * n_comp + s]`.
///
/// The characteristic transform `R^{-1}` is frozen at the Roe average of the
/// two traces, so it commutes with the jump.
pub fn interface_jumps_1d(
    law: &ConservationLaw,
    tables: &JumpTables,
    left_coeffs: &[f64],
    h_left: f64,
    right_coeffs: &[f64],
    h_right: f64,
    out: &mut [f64],
) -> Result<(), PhysicsError> {
    let k = tables.degree;
    let m = law.n_comp();

    let mut trace_l = [0.0f64; 4];
    let mut trace_r = [0.0f64; 4];
    let plus0 = tables.row(true, 0);
    let minus0 = tables.row(false, 0);
    for s in 0..m {
        let mut al = 0.0;
        let mut ar = 0.0;
        for mode in 0..=k {
            al += left_coeffs[mode * m + s] * plus0[mode];
            ar += right_coeffs[mode * m + s] * minus0[mode];
        }
        trace_l[s] = al;
        trace_r[s] = ar;
    }

    let mut mean = [0.0f64; 4];
    let mut r = [0.0f64; 16];
    let mut rinv = [0.0f64; 16];
    law.roe_average(&trace_l[..m], &trace_r[..m], &mut mean[..m])?;
    law.eig_matrices(&mean[..m], [1.0, 0.0], &mut r[..m * m], &mut rinv[..m * m])?;

    let mut cons_jump = [0.0f64; 4];
    for l in 0..=k {
        let rp = tables.row(true, l);
        let rm = tables.row(false, l);
        let scale_l = (2.0 / h_left).powi(l as i32);
        let scale_r = (2.0 / h_right).powi(l as i32);
        for s in 0..m {
            let mut dl = 0.0;
            let mut dr = 0.0;
            for mode in 0..=k {
                dl += left_coeffs[mode * m + s] * rp[mode];
                dr += right_coeffs[mode * m + s] * rm[mode];
            }
            cons_jump[s] = dr * scale_r - dl * scale_l;
        }
        crate::physics::to_characteristic(&rinv[..m * m], &cons_jump[..m], &mut out[l * m..(l + 1) * m]);
    }
    Ok(())
}

/// Damping coefficients for a 1D field. Boundary interfaces contribute zero
/// jumps unless `periodic`.
pub fn compute_sigma_1d(
    field: &ModalField1,
    mesh: &Mesh1D,
    law: &ConservationLaw,
    periodic: bool,
    tables: &JumpTables,
    out: &mut DampingField,
) -> Result<(), PhysicsError> {
    let k = field.degree;
    assert!(k >= 1, "damping requires degree >= 1");
    let m = field.n_comp;
    let n = mesh.n;
    let block = (k + 1) * m;

    // Jumps per interface 0..=N; boundary interfaces stay zero when not
    // periodic.
    let mut jumps = vec![0.0; (n + 1) * block];
    for iface in 0..=n {
        let (li, ri) = if iface == 0 || iface == n {
            if !periodic {
                continue;
            }
            (n - 1, 0)
        } else {
            (iface - 1, iface)
        };
        interface_jumps_1d(
            law,
            tables,
            field.coeffs(li),
            mesh.h(li),
            field.coeffs(ri),
            mesh.h(ri),
            &mut jumps[iface * block..(iface + 1) * block],
        )?;
    }
    if periodic {
        let (head, tail) = jumps.split_at_mut(n * block);
        tail[..block].copy_from_slice(&head[..block]);
    }

    let mut a0 = 0.0f64;
    for i in 0..n {
        let h = mesh.h(i);
        let jl = &jumps[i * block..(i + 1) * block];
        let jr = &jumps[(i + 1) * block..(i + 2) * block];
        let mut total = 0.0;
        for l in 0..=k {
            let mut max_s = 0.0f64;
            for s in 0..m {
                let a = jl[l * m + s];
                let b = jr[l * m + s];
                max_s = max_s.max((0.5 * (a * a + b * b)).sqrt());
            }
            let sigma = prefactor(l, k) * h.powi(l as i32) / FACTORIALS[l] * max_s;
            out.sigma[i * (k + 1) + l] = sigma;
            total += sigma;
        }
        a0 = a0.max(total);
    }
    out.a0 = a0;
    Ok(())
}

/// Number of multi-indices with `|alpha| <= k` in 2D.
#[inline]
pub fn n_alpha(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Flat index of the multi-index `(l - ay, ay)` with `|alpha| = l`.
#[inline]
fn alpha_index(l: usize, ay: usize) -> usize {
    l * (l + 1) / 2 + ay
}

/// Jump buffers for the 2D sigma computation, sized once per system.
#[derive(Debug, Clone)]
pub struct Sigma2Buffers {
    /// x-face jumps: `[(iy * (nx+1) + ixe) * 2 + vertex][alpha][comp]`.
    jx: Vec<f64>,
    /// y-face jumps: `[(iye * nx + ix) * 2 + vertex][alpha][comp]`.
    jy: Vec<f64>,
}

impl Sigma2Buffers {
    pub fn new(k: usize, n_comp: usize, nx: usize, ny: usize) -> Self {
        let na = n_alpha(k);
        Self {
            jx: vec![0.0; (nx + 1) * ny * 2 * na * n_comp],
            jy: vec![0.0; (ny + 1) * nx * 2 * na * n_comp],
        }
    }
}

/// Characteristic context of one shared face: `R^{-1}` from the Roe average
/// of the two traces at the face midpoint, using the face normal.
fn face_characteristic_context(
    law: &ConservationLaw,
    tables: &JumpTables,
    left_coeffs: &[f64],
    left_plus: bool,
    right_coeffs: &[f64],
    axis: usize,
    rinv: &mut [f64],
) -> Result<(), PhysicsError> {
    let k = tables.degree;
    let nmode = k + 1;
    let m = law.n_comp();
    // Trace at the face midpoint: normal coordinate at +-1, transverse at 0.
    let mid = legendre::derivative_table(0.0, k, 0);
    let midpoint_value = |coeffs: &[f64], plus: bool, trace: &mut [f64]| {
        let rn = tables.row(plus, 0);
        for s in 0..m {
            let mut acc = 0.0;
            for a in 0..nmode {
                let mut inner = 0.0;
                for b in 0..nmode {
                    let c = if axis == 0 {
                        coeffs[(a * nmode + b) * m + s]
                    } else {
                        coeffs[(b * nmode + a) * m + s]
                    };
                    inner += c * rn[b];
                }
                acc += inner * mid[a];
            }
            trace[s] = acc;
        }
    };
    let mut trace_l = [0.0f64; 4];
    let mut trace_r = [0.0f64; 4];
    midpoint_value(left_coeffs, left_plus, &mut trace_l[..m]);
    midpoint_value(right_coeffs, !left_plus, &mut trace_r[..m]);
    let normal = if axis == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
    let mut mean = [0.0f64; 4];
    let mut r = [0.0f64; 16];
    law.roe_average(&trace_l[..m], &trace_r[..m], &mut mean[..m])?;
    law.eig_matrices(&mean[..m], normal, &mut r[..m * m], rinv)?;
    Ok(())
}

/// Jumps of `d^alpha V_s` for all multi-indices at one 2D vertex shared by
/// the SV pair across a face; the characteristic transform `rinv` is the
/// face's shared context.
///
/// `*_corner` locates the vertex in each SV's reference coordinates
/// (`true` = +1 side per axis). The x-mode contraction is hoisted out of the
/// multi-index loop: `t[ax][ny][s]` holds the order-`ax` x-derivative values
/// of the y-mode lines at the vertex.
#[allow(clippy::too_many_arguments)]
fn vertex_jumps_2d(
    law: &ConservationLaw,
    tables: &JumpTables,
    left_coeffs: &[f64],
    left_extent: (f64, f64),
    left_corner: (bool, bool),
    right_coeffs: &[f64],
    right_extent: (f64, f64),
    right_corner: (bool, bool),
    rinv: &[f64],
    out: &mut [f64],
) {
    let k = tables.degree;
    let nmode = k + 1;
    let m = law.n_comp();

    // Physical derivative scale factors per order, replacing powi calls.
    let mut sxl = [0.0f64; 8];
    let mut syl = [0.0f64; 8];
    let mut sxr = [0.0f64; 8];
    let mut syr = [0.0f64; 8];
    sxl[0] = 1.0;
    syl[0] = 1.0;
    sxr[0] = 1.0;
    syr[0] = 1.0;
    for l in 1..=k {
        sxl[l] = sxl[l - 1] * 2.0 / left_extent.0;
        syl[l] = syl[l - 1] * 2.0 / left_extent.1;
        sxr[l] = sxr[l - 1] * 2.0 / right_extent.0;
        syr[l] = syr[l - 1] * 2.0 / right_extent.1;
    }

    // t[(ax * nmode + ny) * m + s] = sum_mx c[ny][mx] d^ax L_mx (corner_x).
    let mut tl = [0.0f64; 7 * 7 * 4];
    let mut tr = [0.0f64; 7 * 7 * 4];
    for ax in 0..=k {
        let lrx = tables.row(left_corner.0, ax);
        let rrx = tables.row(right_corner.0, ax);
        for ny in 0..nmode {
            for s in 0..m {
                let mut il = 0.0;
                let mut ir = 0.0;
                for mx in 0..nmode {
                    il += left_coeffs[(ny * nmode + mx) * m + s] * lrx[mx];
                    ir += right_coeffs[(ny * nmode + mx) * m + s] * rrx[mx];
                }
                tl[(ax * nmode + ny) * m + s] = il;
                tr[(ax * nmode + ny) * m + s] = ir;
            }
        }
    }

    let mut cons_jump = [0.0f64; 4];
    for l in 0..=k {
        for ay in 0..=l {
            let ax = l - ay;
            let a_idx = alpha_index(l, ay);
            let lry = tables.row(left_corner.1, ay);
            let rry = tables.row(right_corner.1, ay);
            let scale_l = sxl[ax] * syl[ay];
            let scale_r = sxr[ax] * syr[ay];
            for s in 0..m {
                let mut dl = 0.0;
                let mut dr = 0.0;
                for ny in 0..nmode {
                    dl += tl[(ax * nmode + ny) * m + s] * lry[ny];
                    dr += tr[(ax * nmode + ny) * m + s] * rry[ny];
                }
                cons_jump[s] = dr * scale_r - dl * scale_l;
            }
            crate::physics::to_characteristic(
                &rinv[..m * m],
                &cons_jump[..m],
                &mut out[a_idx * m..(a_idx + 1) * m],
            );
        }
    }
}

/// Damping coefficients for a 2D field on a rectangular mesh.
///
/// Each SV vertex contributes one squared jump across its x-face and one
/// across its y-face (8 terms per SV), normalized by `N_e = 4`.
pub fn compute_sigma_2d(
    field: &ModalField2,
    mesh: &Mesh2D,
    law: &ConservationLaw,
    (periodic_x, periodic_y): (bool, bool),
    tables: &JumpTables,
    bufs: &mut Sigma2Buffers,
    out: &mut DampingField,
) -> Result<(), PhysicsError> {
    let k = field.degree;
    assert!(k >= 1, "damping requires degree >= 1");
    let m = field.n_comp;
    let (nx, ny) = (mesh.x.n, mesh.y.n);
    let na = n_alpha(k);
    let vblock = na * m;

    // x-face jumps, both endpoints of each face segment.
    let x_ok = bufs
        .jx
        .par_chunks_mut(2 * vblock)
        .with_min_len(32)
        .enumerate()
        .map(|(idx, chunk)| {
            let iy = idx / (nx + 1);
            let ixe = idx % (nx + 1);
            let (li, ri) = if ixe == 0 || ixe == nx {
                if !periodic_x {
                    chunk.fill(0.0);
                    return Ok(());
                }
                (nx - 1, 0)
            } else {
                (ixe - 1, ixe)
            };
            let left = field.coeffs(iy * nx + li);
            let right = field.coeffs(iy * nx + ri);
            let ext_l = (mesh.x.h(li), mesh.y.h(iy));
            let ext_r = (mesh.x.h(ri), mesh.y.h(iy));
            let mut rinv = [0.0f64; 16];
            face_characteristic_context(law, tables, left, true, right, 0, &mut rinv[..m * m])?;
            // vertex 0: bottom corner, vertex 1: top corner of the face.
            for (v, eta_plus) in [(0usize, false), (1usize, true)] {
                vertex_jumps_2d(
                    law,
                    tables,
                    left,
                    ext_l,
                    (true, eta_plus),
                    right,
                    ext_r,
                    (false, eta_plus),
                    &rinv[..m * m],
                    &mut chunk[v * vblock..(v + 1) * vblock],
                );
            }
            Ok(())
        })
        .collect::<Result<Vec<()>, PhysicsError>>();
    x_ok?;

    let y_ok = bufs
        .jy
        .par_chunks_mut(2 * vblock)
        .with_min_len(32)
        .enumerate()
        .map(|(idx, chunk)| {
            let iye = idx / nx;
            let ix = idx % nx;
            let (li, ri) = if iye == 0 || iye == ny {
                if !periodic_y {
                    chunk.fill(0.0);
                    return Ok(());
                }
                (ny - 1, 0)
            } else {
                (iye - 1, iye)
            };
            let bottom = field.coeffs(li * nx + ix);
            let top = field.coeffs(ri * nx + ix);
            let ext_b = (mesh.x.h(ix), mesh.y.h(li));
            let ext_t = (mesh.x.h(ix), mesh.y.h(ri));
            let mut rinv = [0.0f64; 16];
            face_characteristic_context(law, tables, bottom, true, top, 1, &mut rinv[..m * m])?;
            for (v, xi_plus) in [(0usize, false), (1usize, true)] {
                vertex_jumps_2d(
                    law,
                    tables,
                    bottom,
                    ext_b,
                    (xi_plus, true),
                    top,
                    ext_t,
                    (xi_plus, false),
                    &rinv[..m * m],
                    &mut chunk[v * vblock..(v + 1) * vblock],
                );
            }
            Ok(())
        })
        .collect::<Result<Vec<()>, PhysicsError>>();
    y_ok?;

    let jx = &bufs.jx;
    let jy = &bufs.jy;
    let a0 = out
        .sigma
        .par_chunks_mut(k + 1)
        .with_min_len(32)
        .enumerate()
        .map(|(sv, sigma)| {
            let iy = sv / nx;
            let ix = sv % nx;
            let h_tau = mesh.x.h(ix).hypot(mesh.y.h(iy));
            let xl = (iy * (nx + 1) + ix) * 2 * vblock;
            let xr = (iy * (nx + 1) + ix + 1) * 2 * vblock;
            let yb = (iy * nx + ix) * 2 * vblock;
            let yt = ((iy + 1) * nx + ix) * 2 * vblock;
            let mut total = 0.0;
            for l in 0..=k {
                let mut max_s = 0.0f64;
                for s in 0..m {
                    let mut sum_alpha = 0.0;
                    for ay in 0..=l {
                        let off = alpha_index(l, ay) * m + s;
                        let mut sq = 0.0;
                        // Two vertices per face, x-faces then y-faces.
                        for base in [xl, xr] {
                            let a = jx[base + off];
                            let b = jx[base + vblock + off];
                            sq += a * a + b * b;
                        }
                        for base in [yb, yt] {
                            let a = jy[base + off];
                            let b = jy[base + vblock + off];
                            sq += a * a + b * b;
                        }
                        sum_alpha += (0.25 * sq).sqrt();
                    }
                    max_s = max_s.max(sum_alpha);
                }
                let val = prefactor(l, k) * h_tau.powi(l as i32) / FACTORIALS[l] * max_s;
                sigma[l] = val;
                total += val;
            }
            total
        })
        .reduce(|| 0.0f64, f64::max);
    out.a0 = a0;
    Ok(())
}

/// Cumulative weights `W_q = sum_{l <= q} sigma^l` for `q = 0..=k`
/// (`W_0` is never applied: constants are not damped).
pub fn cumulative_weights(sigma: &[f64], out: &mut [f64]) {
    let mut acc = 0.0;
    for (q, &s) in sigma.iter().enumerate() {
        acc += s;
        out[q] = acc;
    }
}

/// Damping contribution to `d/dt` of each CV integral of one 1D SV:
/// `out[j*m+s] = -0.5 sum_{q>=1} W_q c_q I_q(cv j)` (the `1/h` and the
/// physical `h/2` scaling cancel).
pub fn damping_rates_sv_1d(
    coeffs: &[f64],
    k: usize,
    n_comp: usize,
    cum_weights: &[f64],
    op: &ReconstructionOperator,
    out: &mut [f64],
) {
    let n = k + 1;
    for j in 0..n {
        for s in 0..n_comp {
            let mut acc = 0.0;
            for q in 1..n {
                acc += cum_weights[q] * coeffs[q * n_comp + s] * op.cv_integrals[q * n + j];
            }
            out[j * n_comp + s] = -0.5 * acc;
        }
    }
}

/// 2D analogue over the tensor CV grid; `h_tau` is the SV diameter.
///
/// Folds the cumulative weights into the coefficients once, then applies the
/// separable CV-integral contractions.
#[allow(clippy::too_many_arguments)]
pub fn damping_rates_sv_2d(
    coeffs: &[f64],
    k: usize,
    n_comp: usize,
    cum_weights: &[f64],
    op: &ReconstructionOperator,
    (hx, hy): (f64, f64),
    h_tau: f64,
    out: &mut [f64],
) {
    let n = k + 1;
    let scale = -0.25 * hx * hy / h_tau;
    // d_mn = W_{max(m, n)} c_mn, with the constant mode never damped.
    let mut weighted = [0.0f64; 7 * 7 * 4];
    for nyy in 0..n {
        for mx in 0..n {
            let q = mx.max(nyy);
            let w = if q >= 1 { cum_weights[q] } else { 0.0 };
            for s in 0..n_comp {
                weighted[(nyy * n + mx) * n_comp + s] = w * coeffs[(nyy * n + mx) * n_comp + s];
            }
        }
    }
    // Contract over x-modes, then y-modes.
    let mut partial = [0.0f64; 7 * 7 * 4]; // [(nyy * n + jx) * n_comp + s]
    for nyy in 0..n {
        for jx in 0..n {
            for s in 0..n_comp {
                let mut acc = 0.0;
                for mx in 0..n {
                    acc += weighted[(nyy * n + mx) * n_comp + s] * op.cv_integrals[mx * n + jx];
                }
                partial[(nyy * n + jx) * n_comp + s] = acc;
            }
        }
    }
    for jy in 0..n {
        for jx in 0..n {
            for s in 0..n_comp {
                let mut acc = 0.0;
                for nyy in 0..n {
                    acc += partial[(nyy * n + jx) * n_comp + s] * op.cv_integrals[nyy * n + jy];
                }
                out[(jy * n + jx) * n_comp + s] = scale * acc;
            }
        }
    }
}

/// Reference implementation of the per-CV damping rate straight from the
/// definition `-sum_l sigma^l / h * integral_cv (p - P^{l-1} p)`.
pub fn damping_rate(
    poly: &ModalPoly1,
    op: &ReconstructionOperator,
    sigma: &[f64],
    h_tau: f64,
    j: usize,
) -> Vec<f64> {
    let m = poly.n_comp;
    let mut out = vec![0.0; m];
    let mut moment = vec![0.0; m];
    for (l, &s_l) in sigma.iter().enumerate() {
        damping_moment_1d(poly, op, l, j, &mut moment);
        for s in 0..m {
            out[s] -= s_l / h_tau * moment[s];
        }
    }
    out
}
