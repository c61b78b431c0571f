//! Semidiscrete residual assembly and time marching.
//!
//! Per control volume the rate of the CV integral is
//! `-(sum of outward face-flux integrals) + damping contribution`; dividing
//! by the CV measure gives the rate of the CV average that the Runge-Kutta
//! steppers evolve. CV faces interior to an SV see the smooth flux of the
//! single-valued reconstruction, SV faces the configured Riemann flux with
//! one shared evaluation per face, so conservation telescopes exactly.
//!
//! Damping coefficients are recomputed at every Runge-Kutta stage from that
//! stage's state.

use crate::basis::{
    eval_poly_1d, reconstruct_sv_2d, Discretization1, Discretization2,
    ModalField1, ModalField2, SolutionState,
};
use crate::damping::{
    compute_sigma_1d, compute_sigma_2d, cumulative_weights, damping_rates_sv_1d,
    damping_rates_sv_2d, DampingField, JumpTables, Sigma2Buffers,
};
use crate::geometry::QuadratureRule;
use crate::legendre;
use crate::numflux::{riemann_flux_with_speed, FluxError, FluxKind};
use crate::physics::{ConservationLaw, EulerPrim, PhysicsError};
use crate::timeint::{rk4_step, ssprk3_step, Integrator, StageBuffers, StepControl};
use rayon::prelude::*;
use thiserror::Error;

const MAX_COMP: usize = 4;
const MAX_NCV: usize = 7; // k <= 6

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid state in SV {sv} at t = {t}: {source}")]
    InvalidState {
        sv: usize,
        t: f64,
        #[source]
        source: PhysicsError,
    },
    #[error("flux evaluation failed near SV {sv} at t = {t}: {source}")]
    Flux {
        sv: usize,
        t: f64,
        #[source]
        source: FluxError,
    },
    #[error("solution blew up (non-finite values) at t = {t}")]
    Blowup { t: f64 },
    #[error("positivity failure in SV {sv} at t = {t}: {what}")]
    PositivityFailure { sv: usize, t: f64, what: String },
    #[error("boundary condition misuse: {0}")]
    OutOfDomain(String),
    #[error("configuration error: {0}")]
    Config(String),
}

/// Boundary treatment of one domain side.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcSide {
    Periodic,
    Transmissive,
    ReflectingWall,
    /// Prescribed exterior conservative state.
    DirichletInflow(Vec<f64>),
    /// Post-shock state ahead of the wall foot, reflecting wall after it.
    DoubleMachBottom,
    /// Exact trace of the moving Mach 10 oblique shock.
    DoubleMachTop,
}

/// Mach 10 oblique-shock states of the double Mach reflection setup.
pub fn double_mach_post_shock(gamma: f64) -> [f64; 4] {
    EulerPrim::new_2d(8.0, 4.125 * 3.0f64.sqrt(), -4.125, 116.5).to_cons_2d(gamma)
}

pub fn double_mach_pre_shock(gamma: f64) -> [f64; 4] {
    EulerPrim::new_2d(1.4, 0.0, 0.0, 1.0).to_cons_2d(gamma)
}

/// Position where the oblique shock meets the top boundary at time `t`.
pub fn double_mach_top_shock_x(t: f64) -> f64 {
    1.0 / 6.0 + (1.0 + 20.0 * t) / 3.0f64.sqrt()
}

/// Exterior trace for a boundary face with the given outward normal.
pub fn ghost_state(
    bc: &BcSide,
    law: &ConservationLaw,
    interior: &[f64],
    outward: [f64; 2],
    position: (f64, f64),
    t: f64,
    out: &mut [f64],
) -> Result<(), SolverError> {
    let m = law.n_comp();
    match bc {
        BcSide::Periodic => Err(SolverError::OutOfDomain(
            "periodic sides wrap; they have no ghost states".into(),
        )),
        BcSide::Transmissive => {
            out[..m].copy_from_slice(&interior[..m]);
            Ok(())
        }
        BcSide::ReflectingWall => {
            out[..m].copy_from_slice(&interior[..m]);
            if law.is_euler() {
                match law.dim() {
                    1 => out[1] = -interior[1],
                    _ => {
                        let mn = interior[1] * outward[0] + interior[2] * outward[1];
                        out[1] = interior[1] - 2.0 * mn * outward[0];
                        out[2] = interior[2] - 2.0 * mn * outward[1];
                    }
                }
            }
            Ok(())
        }
        BcSide::DirichletInflow(state) => {
            if state.len() != m {
                return Err(SolverError::Config(format!(
                    "inflow state has {} components, law needs {m}",
                    state.len()
                )));
            }
            out[..m].copy_from_slice(state);
            Ok(())
        }
        BcSide::DoubleMachBottom => {
            if position.0 < 1.0 / 6.0 {
                out[..4].copy_from_slice(&double_mach_post_shock(law.gamma()));
            } else {
                out[..m].copy_from_slice(&interior[..m]);
                let mn = interior[1] * outward[0] + interior[2] * outward[1];
                out[1] = interior[1] - 2.0 * mn * outward[0];
                out[2] = interior[2] - 2.0 * mn * outward[1];
            }
            Ok(())
        }
        BcSide::DoubleMachTop => {
            if position.0 < double_mach_top_shock_x(t) {
                out[..4].copy_from_slice(&double_mach_post_shock(law.gamma()));
            } else {
                out[..4].copy_from_slice(&double_mach_pre_shock(law.gamma()));
            }
            Ok(())
        }
    }
}

/// Wave-speed and damping magnitudes gathered during a residual evaluation,
/// used by the CFL step control.
#[derive(Debug, Clone, Copy, Default)]
pub struct ResidualStats {
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub a0: f64,
}

/// 1D OFSV system with preallocated scratch.
pub struct System1 {
    pub disc: Discretization1,
    pub law: ConservationLaw,
    pub flux: FluxKind,
    pub damping_on: bool,
    pub bc: (BcSide, BcSide),
    tables: JumpTables,
    modal: ModalField1,
    iface_flux: Vec<f64>,
    pub damping: DampingField,
}

impl System1 {
    pub fn new(
        disc: Discretization1,
        law: ConservationLaw,
        flux: FluxKind,
        damping_on: bool,
        bc: (BcSide, BcSide),
    ) -> Result<Self, SolverError> {
        if damping_on && disc.layout.degree == 0 {
            return Err(SolverError::Config("damping requires degree >= 1".into()));
        }
        if matches!(bc.0, BcSide::Periodic) != matches!(bc.1, BcSide::Periodic) {
            return Err(SolverError::Config(
                "periodic sides must come in matched pairs".into(),
            ));
        }
        let k = disc.layout.degree;
        let n = disc.mesh.n;
        let m = law.n_comp();
        Ok(Self {
            tables: JumpTables::new(k),
            modal: ModalField1::zeros(k, m, n),
            iface_flux: vec![0.0; (n + 1) * m],
            damping: DampingField::zeros(k, n),
            disc,
            law,
            flux,
            damping_on,
            bc,
        })
    }

    pub fn periodic(&self) -> bool {
        matches!(self.bc.0, BcSide::Periodic)
    }

    /// Rate of change of CV averages; also records interface wave speeds and
    /// the damping budget.
    pub fn residual(
        &mut self,
        u: &[f64],
        t: f64,
        out: &mut [f64],
    ) -> Result<ResidualStats, SolverError> {
        let k = self.disc.layout.degree;
        let n = self.disc.mesh.n;
        let m = self.law.n_comp();
        let ncv = k + 1;
        let periodic = self.periodic();

        self.disc.reconstruct_into(u, &mut self.modal);

        // SV-interface traces and Riemann fluxes, one evaluation per face.
        let mut alpha = 0.0f64;
        let mut trace_l = [0.0f64; MAX_COMP];
        let mut trace_r = [0.0f64; MAX_COMP];
        for iface in 0..=n {
            let sv_ctx = iface.min(n - 1);
            if periodic && iface == n {
                let (head, tail) = self.iface_flux.split_at_mut(n * m);
                tail[..m].copy_from_slice(&head[..m]);
                continue;
            }
            let left = if iface > 0 {
                Some(iface - 1)
            } else if periodic {
                Some(n - 1)
            } else {
                None
            };
            let right = if iface < n { Some(iface) } else { None };
            match (left, right) {
                (Some(li), Some(ri)) => {
                    eval_poly_1d(self.modal.coeffs(li), k, m, 1.0, &mut trace_l[..m]);
                    eval_poly_1d(self.modal.coeffs(ri), k, m, -1.0, &mut trace_r[..m]);
                }
                (None, Some(ri)) => {
                    eval_poly_1d(self.modal.coeffs(ri), k, m, -1.0, &mut trace_r[..m]);
                    let x = self.disc.mesh.a;
                    let interior = trace_r;
                    ghost_state(
                        &self.bc.0,
                        &self.law,
                        &interior[..m],
                        [-1.0, 0.0],
                        (x, 0.0),
                        t,
                        &mut trace_l[..m],
                    )?;
                }
                (Some(li), None) => {
                    eval_poly_1d(self.modal.coeffs(li), k, m, 1.0, &mut trace_l[..m]);
                    let x = self.disc.mesh.b;
                    let interior = trace_l;
                    ghost_state(
                        &self.bc.1,
                        &self.law,
                        &interior[..m],
                        [1.0, 0.0],
                        (x, 0.0),
                        t,
                        &mut trace_r[..m],
                    )?;
                }
                (None, None) => unreachable!(),
            }
            let speed = riemann_flux_with_speed(
                self.flux,
                &self.law,
                &trace_l[..m],
                &trace_r[..m],
                0,
                &mut self.iface_flux[iface * m..(iface + 1) * m],
            )
            .map_err(|source| SolverError::Flux {
                sv: sv_ctx,
                t,
                source,
            })?;
            alpha = alpha.max(speed);
        }

        let mut a0 = 0.0;
        if self.damping_on {
            compute_sigma_1d(
                &self.modal,
                &self.disc.mesh,
                &self.law,
                periodic,
                &self.tables,
                &mut self.damping,
            )
            .map_err(|source| SolverError::InvalidState { sv: 0, t, source })?;
            a0 = self.damping.a0;
        }

        // Per-SV assembly: interior smooth fluxes, then CV rate integrals.
        let mut face_flux = [0.0f64; (MAX_NCV + 1) * MAX_COMP];
        let mut point = [0.0f64; MAX_COMP];
        let mut weights = [0.0f64; MAX_NCV];
        let mut damp_rates = [0.0f64; MAX_NCV * MAX_COMP];
        for i in 0..n {
            let coeffs = self.modal.coeffs(i);
            face_flux[..m].copy_from_slice(&self.iface_flux[i * m..(i + 1) * m]);
            face_flux[ncv * m..ncv * m + m]
                .copy_from_slice(&self.iface_flux[(i + 1) * m..(i + 2) * m]);
            for p in 1..=k {
                eval_poly_1d(coeffs, k, m, self.disc.layout.bounds[p], &mut point[..m]);
                self.law
                    .flux(&point[..m], 0, &mut face_flux[p * m..(p + 1) * m])
                    .map_err(|source| SolverError::InvalidState { sv: i, t, source })?;
            }
            if self.damping_on {
                cumulative_weights(self.damping.sv(i), &mut weights[..ncv]);
                damping_rates_sv_1d(
                    coeffs,
                    k,
                    m,
                    &weights[..ncv],
                    &self.disc.op,
                    &mut damp_rates[..ncv * m],
                );
            } else {
                damp_rates[..ncv * m].fill(0.0);
            }
            for j in 0..ncv {
                let width = self.disc.cv_width(i, j);
                for s in 0..m {
                    let net = face_flux[(j + 1) * m + s] - face_flux[j * m + s];
                    out[(i * ncv + j) * m + s] = (-net + damp_rates[j * m + s]) / width;
                }
            }
        }

        Ok(ResidualStats {
            alpha_x: alpha,
            alpha_y: 0.0,
            a0,
        })
    }
}

/// 2D OFSV system on a rectangular mesh with preallocated scratch.
pub struct System2 {
    pub disc: Discretization2,
    pub law: ConservationLaw,
    pub flux: FluxKind,
    pub damping_on: bool,
    /// Sides: (x_min, x_max, y_min, y_max).
    pub bc: (BcSide, BcSide, BcSide, BcSide),
    tables: JumpTables,
    face_rule: QuadratureRule,
    /// `L_m` at every CV bound: `basis_bounds[p * (k+1) + m]`.
    basis_bounds: Vec<f64>,
    /// Reference coordinate of face node `q` inside CV `j`.
    face_node_ref: Vec<f64>,
    /// `L_n` at face node `(j, q)`: `basis_face[(j * (k+1) + q) * (k+1) + n]`.
    basis_face: Vec<f64>,
    modal: ModalField2,
    flux_x: Vec<f64>,
    flux_y: Vec<f64>,
    pub damping: DampingField,
    sigma_bufs: Sigma2Buffers,
}

impl System2 {
    pub fn new(
        disc: Discretization2,
        law: ConservationLaw,
        flux: FluxKind,
        damping_on: bool,
        bc: (BcSide, BcSide, BcSide, BcSide),
    ) -> Result<Self, SolverError> {
        if damping_on && disc.layout.degree == 0 {
            return Err(SolverError::Config("damping requires degree >= 1".into()));
        }
        let px = (
            matches!(bc.0, BcSide::Periodic),
            matches!(bc.1, BcSide::Periodic),
        );
        let py = (
            matches!(bc.2, BcSide::Periodic),
            matches!(bc.3, BcSide::Periodic),
        );
        if px.0 != px.1 || py.0 != py.1 {
            return Err(SolverError::Config(
                "periodic sides must come in matched pairs".into(),
            ));
        }
        let k = disc.layout.degree;
        let ncv = k + 1;
        let (nx, ny) = (disc.mesh.x.n, disc.mesh.y.n);
        let m = law.n_comp();
        let face_rule = QuadratureRule::gauss(ncv)
            .map_err(|e| SolverError::Config(format!("face rule: {e}")))?;

        let mut basis_bounds = vec![0.0; (k + 2) * ncv];
        for (p, &x) in disc.layout.bounds.iter().enumerate() {
            legendre::eval_all(x, &mut basis_bounds[p * ncv..(p + 1) * ncv]);
        }
        let mut face_node_ref = vec![0.0; ncv * ncv];
        let mut basis_face = vec![0.0; ncv * ncv * ncv];
        for j in 0..ncv {
            let mid = 0.5 * (disc.layout.bounds[j] + disc.layout.bounds[j + 1]);
            let half = 0.5 * disc.layout.widths[j];
            for (q, &xq) in face_rule.nodes.iter().enumerate() {
                let xi = mid + half * xq;
                face_node_ref[j * ncv + q] = xi;
                legendre::eval_all(
                    xi,
                    &mut basis_face[(j * ncv + q) * ncv..(j * ncv + q + 1) * ncv],
                );
            }
        }

        Ok(Self {
            tables: JumpTables::new(k),
            face_rule,
            basis_bounds,
            face_node_ref,
            basis_face,
            modal: ModalField2::zeros(k, m, nx * ny),
            flux_x: vec![0.0; (nx + 1) * ny * ncv * ncv * m],
            flux_y: vec![0.0; (ny + 1) * nx * ncv * ncv * m],
            damping: DampingField::zeros(k, nx * ny),
            sigma_bufs: Sigma2Buffers::new(k, m, nx, ny),
            disc,
            law,
            flux,
            damping_on,
            bc,
        })
    }

    pub fn periodic_x(&self) -> bool {
        matches!(self.bc.0, BcSide::Periodic)
    }

    pub fn periodic_y(&self) -> bool {
        matches!(self.bc.2, BcSide::Periodic)
    }

    pub fn residual(
        &mut self,
        u: &[f64],
        t: f64,
        out: &mut [f64],
    ) -> Result<ResidualStats, SolverError> {
        let k = self.disc.layout.degree;
        let ncv = k + 1;
        let (nx, _ny) = (self.disc.mesh.x.n, self.disc.mesh.y.n);
        let m = self.law.n_comp();
        let block = ncv * ncv * m;

        // Phase 1: reconstruct all SVs.
        {
            let op = &self.disc.op;
            self.modal
                .data
                .par_chunks_mut(block)
                .with_min_len(32)
                .zip(u.par_chunks(block).with_min_len(32))
                .for_each(|(modal, avg)| reconstruct_sv_2d(op, m, avg, modal));
        }

        // Phase 2: SV-interface fluxes (computed once, shared by both sides).
        let alpha_x = self.interface_pass(0, t)?;
        let alpha_y = self.interface_pass(1, t)?;

        // Phase 3: damping coefficients from the stage state.
        let mut a0 = 0.0;
        if self.damping_on {
            let periodic = (self.periodic_x(), self.periodic_y());
            compute_sigma_2d(
                &self.modal,
                &self.disc.mesh,
                &self.law,
                periodic,
                &self.tables,
                &mut self.sigma_bufs,
                &mut self.damping,
            )
            .map_err(|source| SolverError::InvalidState { sv: 0, t, source })?;
            a0 = self.damping.a0;
        }

        // Phase 4: per-SV assembly.
        let modal = &self.modal;
        let disc = &self.disc;
        let law = &self.law;
        let flux_x = &self.flux_x;
        let flux_y = &self.flux_y;
        let rule = &self.face_rule;
        let basis_bounds = &self.basis_bounds;
        let basis_face = &self.basis_face;
        let damping = &self.damping;
        let damping_on = self.damping_on;
        out.par_chunks_mut(block)
            .with_min_len(16)
            .enumerate()
            .map(|(sv, rates)| {
                let iy = sv / nx;
                let ix = sv % nx;
                let hx = disc.mesh.x.h(ix);
                let hy = disc.mesh.y.h(iy);
                let coeffs = modal.coeffs(sv);

                // Contract x-modes on every interior vertical line (and the
                // y-modes on horizontal lines) once per SV.
                let mut gx = [0.0f64; MAX_NCV * MAX_NCV * MAX_COMP];
                let mut gy = [0.0f64; MAX_NCV * MAX_NCV * MAX_COMP];
                for p in 1..=k {
                    let bx = &basis_bounds[p * ncv..(p + 1) * ncv];
                    for nmode in 0..ncv {
                        for s in 0..m {
                            let mut accx = 0.0;
                            let mut accy = 0.0;
                            for mmode in 0..ncv {
                                accx += coeffs[(nmode * ncv + mmode) * m + s] * bx[mmode];
                                accy += coeffs[(mmode * ncv + nmode) * m + s] * bx[mmode];
                            }
                            gx[((p - 1) * ncv + nmode) * m + s] = accx;
                            gy[((p - 1) * ncv + nmode) * m + s] = accy;
                        }
                    }
                }

                // Face-flux integrals: ix_f in 0..=ncv columns x (rows jy).
                let mut fx_int = [0.0f64; (MAX_NCV + 1) * MAX_NCV * MAX_COMP];
                let mut fy_int = [0.0f64; (MAX_NCV + 1) * MAX_NCV * MAX_COMP];
                let mut point = [0.0f64; MAX_COMP];
                let mut fpoint = [0.0f64; MAX_COMP];
                for jf in 0..=ncv {
                    for jt in 0..ncv {
                        let dst_x = &mut fx_int[(jf * ncv + jt) * m..(jf * ncv + jt + 1) * m];
                        if jf == 0 || jf == ncv {
                            let iface = iy * (nx + 1) + ix + jf / ncv;
                            let src = &flux_x[(iface * ncv * ncv + jt * ncv) * m
                                ..(iface * ncv * ncv + (jt + 1) * ncv) * m];
                            integrate_face(src, rule, 0.25 * disc.layout.widths[jt] * hy, m, dst_x);
                        } else {
                            let g = &gx[((jf - 1) * ncv) * m..jf * ncv * m];
                            smooth_face_integral(
                                g,
                                basis_face,
                                rule,
                                law,
                                0,
                                jt,
                                ncv,
                                m,
                                0.25 * disc.layout.widths[jt] * hy,
                                &mut point,
                                &mut fpoint,
                                dst_x,
                            )
                            .map_err(|source| SolverError::InvalidState { sv, t, source })?;
                        }
                        let dst_y = &mut fy_int[(jf * ncv + jt) * m..(jf * ncv + jt + 1) * m];
                        if jf == 0 || jf == ncv {
                            let iface = (iy + jf / ncv) * nx + ix;
                            let src = &flux_y[(iface * ncv * ncv + jt * ncv) * m
                                ..(iface * ncv * ncv + (jt + 1) * ncv) * m];
                            integrate_face(src, rule, 0.25 * disc.layout.widths[jt] * hx, m, dst_y);
                        } else {
                            let g = &gy[((jf - 1) * ncv) * m..jf * ncv * m];
                            smooth_face_integral(
                                g,
                                basis_face,
                                rule,
                                law,
                                1,
                                jt,
                                ncv,
                                m,
                                0.25 * disc.layout.widths[jt] * hx,
                                &mut point,
                                &mut fpoint,
                                dst_y,
                            )
                            .map_err(|source| SolverError::InvalidState { sv, t, source })?;
                        }
                    }
                }

                let mut damp = [0.0f64; MAX_NCV * MAX_NCV * MAX_COMP];
                if damping_on {
                    let mut weights = [0.0f64; MAX_NCV];
                    cumulative_weights(damping.sv(sv), &mut weights[..ncv]);
                    damping_rates_sv_2d(
                        coeffs,
                        k,
                        m,
                        &weights[..ncv],
                        &disc.op,
                        (hx, hy),
                        hx.hypot(hy),
                        &mut damp[..ncv * ncv * m],
                    );
                }

                for jy in 0..ncv {
                    for jx in 0..ncv {
                        let area = 0.25 * disc.layout.widths[jx] * disc.layout.widths[jy] * hx * hy;
                        for s in 0..m {
                            let net = fx_int[((jx + 1) * ncv + jy) * m + s]
                                - fx_int[(jx * ncv + jy) * m + s]
                                + fy_int[((jy + 1) * ncv + jx) * m + s]
                                - fy_int[(jy * ncv + jx) * m + s];
                            rates[(jy * ncv + jx) * m + s] =
                                (-net + damp[(jy * ncv + jx) * m + s]) / area;
                        }
                    }
                }
                Ok(())
            })
            .collect::<Result<Vec<()>, SolverError>>()?;

        Ok(ResidualStats { alpha_x, alpha_y, a0 })
    }

    /// Computes all SV-interface fluxes normal to `axis` and returns the
    /// largest trace wavespeed seen.
    fn interface_pass(&mut self, axis: usize, t: f64) -> Result<f64, SolverError> {
        let k = self.disc.layout.degree;
        let ncv = k + 1;
        let nx = self.disc.mesh.x.n;
        let ny = self.disc.mesh.y.n;
        let m = self.law.n_comp();
        let seg = ncv * ncv * m;
        let (n_lines, periodic, bc_lo, bc_hi) = if axis == 0 {
            (nx + 1, self.periodic_x(), &self.bc.0, &self.bc.1)
        } else {
            (ny + 1, self.periodic_y(), &self.bc.2, &self.bc.3)
        };
        let modal = &self.modal;
        let disc = &self.disc;
        let law = &self.law;
        let flux_kind = self.flux;
        let face_node_ref = &self.face_node_ref;
        let basis_face = &self.basis_face;
        let flux_buf = if axis == 0 {
            &mut self.flux_x
        } else {
            &mut self.flux_y
        };
        flux_buf
            .par_chunks_mut(seg)
            .with_min_len(16)
            .enumerate()
            .map(|(idx, chunk)| {
                // Decode the interface segment: along x, idx = iy*(nx+1)+ixe;
                // along y, idx = iye*nx + ix.
                let (edge, transverse) = if axis == 0 {
                    (idx % (nx + 1), idx / (nx + 1))
                } else {
                    (idx / nx, idx % nx)
                };
                let sv_of = |cell: usize| {
                    if axis == 0 {
                        transverse * nx + cell
                    } else {
                        cell * nx + transverse
                    }
                };
                let (lo, hi) = if edge == 0 || edge == n_lines - 1 {
                    if periodic {
                        if edge == n_lines - 1 {
                            // Filled by the wrap copy below via edge 0; compute
                            // anyway to keep chunks independent (identical data).
                            (Some(n_lines - 2), Some(0))
                        } else {
                            (Some(n_lines - 2), Some(0))
                        }
                    } else if edge == 0 {
                        (None, Some(0))
                    } else {
                        (Some(n_lines - 2), None)
                    }
                } else {
                    (Some(edge - 1), Some(edge))
                };

                // Mode contraction of each side's trace along the interface.
                let mut g_lo = [0.0f64; MAX_NCV * MAX_COMP];
                let mut g_hi = [0.0f64; MAX_NCV * MAX_COMP];
                let contract = |cell: usize, at_plus: bool, g: &mut [f64]| {
                    let coeffs = modal.coeffs(sv_of(cell));
                    for nmode in 0..ncv {
                        for s in 0..m {
                            let mut acc = 0.0;
                            for mmode in 0..ncv {
                                let c = if axis == 0 {
                                    coeffs[(nmode * ncv + mmode) * m + s]
                                } else {
                                    coeffs[(mmode * ncv + nmode) * m + s]
                                };
                                let sign = if at_plus {
                                    1.0
                                } else if mmode % 2 == 0 {
                                    1.0
                                } else {
                                    -1.0
                                };
                                acc += c * sign;
                            }
                            g[nmode * m + s] = acc;
                        }
                    }
                };
                if let Some(cell) = lo {
                    contract(cell, true, &mut g_lo);
                }
                if let Some(cell) = hi {
                    contract(cell, false, &mut g_hi);
                }

                let sv_ctx = sv_of(lo.or(hi).unwrap());
                let mut alpha = 0.0f64;
                let mut trace_lo = [0.0f64; MAX_COMP];
                let mut trace_hi = [0.0f64; MAX_COMP];
                for jt in 0..ncv {
                    for q in 0..ncv {
                        let basis = &basis_face[(jt * ncv + q) * ncv..(jt * ncv + q + 1) * ncv];
                        let eval = |g: &[f64], outv: &mut [f64]| {
                            for s in 0..m {
                                let mut acc = 0.0;
                                for nmode in 0..ncv {
                                    acc += g[nmode * m + s] * basis[nmode];
                                }
                                outv[s] = acc;
                            }
                        };
                        // Physical position of this face node, for BC ghosts.
                        let tr_ref = face_node_ref[jt * ncv + q];
                        let position = if axis == 0 {
                            let x = disc.mesh.x.edges[edge];
                            let y = disc.mesh.y.to_physical(transverse, tr_ref);
                            (x, y)
                        } else {
                            let x = disc.mesh.x.to_physical(transverse, tr_ref);
                            let y = disc.mesh.y.edges[edge];
                            (x, y)
                        };
                        match (lo, hi) {
                            (Some(_), Some(_)) => {
                                eval(&g_lo, &mut trace_lo[..m]);
                                eval(&g_hi, &mut trace_hi[..m]);
                            }
                            (None, Some(_)) => {
                                eval(&g_hi, &mut trace_hi[..m]);
                                let interior = trace_hi;
                                let outward = if axis == 0 { [-1.0, 0.0] } else { [0.0, -1.0] };
                                ghost_state(
                                    bc_lo,
                                    law,
                                    &interior[..m],
                                    outward,
                                    position,
                                    t,
                                    &mut trace_lo[..m],
                                )?;
                            }
                            (Some(_), None) => {
                                eval(&g_lo, &mut trace_lo[..m]);
                                let interior = trace_lo;
                                let outward = if axis == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
                                ghost_state(
                                    bc_hi,
                                    law,
                                    &interior[..m],
                                    outward,
                                    position,
                                    t,
                                    &mut trace_hi[..m],
                                )?;
                            }
                            (None, None) => unreachable!(),
                        }
                        let sp = riemann_flux_with_speed(
                            flux_kind,
                            law,
                            &trace_lo[..m],
                            &trace_hi[..m],
                            axis,
                            &mut chunk[(jt * ncv + q) * m..(jt * ncv + q + 1) * m],
                        )
                        .map_err(|source| SolverError::Flux { sv: sv_ctx, t, source })?;
                        alpha = alpha.max(sp);
                    }
                }
                Ok(alpha)
            })
            .try_reduce(|| 0.0f64, |a, b| Ok(a.max(b)))
    }
}

/// Integrates precomputed per-node fluxes over one face segment.
#[inline]
fn integrate_face(node_fluxes: &[f64], rule: &QuadratureRule, half_len: f64, m: usize, out: &mut [f64]) {
    for s in 0..m {
        out[s] = 0.0;
    }
    for (q, &w) in rule.weights.iter().enumerate() {
        for s in 0..m {
            out[s] += w * node_fluxes[q * m + s];
        }
    }
    for s in 0..m {
        out[s] *= half_len;
    }
}

/// Integrates the smooth flux along one interior face segment from the
/// pre-contracted mode values `g`.
#[allow(clippy::too_many_arguments)]
#[inline]
fn smooth_face_integral(
    g: &[f64],
    basis_face: &[f64],
    rule: &QuadratureRule,
    law: &ConservationLaw,
    axis: usize,
    jt: usize,
    ncv: usize,
    m: usize,
    half_len: f64,
    point: &mut [f64],
    fpoint: &mut [f64],
    out: &mut [f64],
) -> Result<(), PhysicsError> {
    for s in 0..m {
        out[s] = 0.0;
    }
    for (q, &w) in rule.weights.iter().enumerate() {
        let basis = &basis_face[(jt * ncv + q) * ncv..(jt * ncv + q + 1) * ncv];
        for s in 0..m {
            let mut acc = 0.0;
            for nmode in 0..ncv {
                acc += g[nmode * m + s] * basis[nmode];
            }
            point[s] = acc;
        }
        law.flux(&point[..m], axis, &mut fpoint[..m])?;
        for s in 0..m {
            out[s] += w * fpoint[s];
        }
    }
    for s in 0..m {
        out[s] *= half_len;
    }
    Ok(())
}

/// Either spatial dimension behind one interface.
pub enum System {
    One(Box<System1>),
    Two(Box<System2>),
}

impl System {
    pub fn residual(
        &mut self,
        u: &[f64],
        t: f64,
        out: &mut [f64],
    ) -> Result<ResidualStats, SolverError> {
        match self {
            System::One(s) => s.residual(u, t, out),
            System::Two(s) => s.residual(u, t, out),
        }
    }

    pub fn law(&self) -> &ConservationLaw {
        match self {
            System::One(s) => &s.law,
            System::Two(s) => &s.law,
        }
    }

    pub fn n_dof(&self) -> usize {
        match self {
            System::One(s) => s.disc.n_dof(),
            System::Two(s) => s.disc.n_dof(),
        }
    }

    pub fn compute_dt(&self, stats: &ResidualStats, ctrl: &StepControl, t: f64, t_stop: f64) -> f64 {
        match self {
            System::One(s) => {
                ctrl.compute_dt_1d(stats.alpha_x, stats.a0, s.disc.mesh.min_h(), t, t_stop)
            }
            System::Two(s) => ctrl.compute_dt_2d(
                stats.alpha_x,
                stats.alpha_y,
                s.disc.mesh.x.min_h(),
                s.disc.mesh.y.min_h(),
                stats.a0,
                t,
                t_stop,
            ),
        }
    }

    pub fn total_mass(&self, data: &[f64], comp: usize) -> f64 {
        match self {
            System::One(s) => s.disc.total_mass(data, comp),
            System::Two(s) => s.disc.total_mass(data, comp),
        }
    }

    pub fn n_sv(&self) -> usize {
        match self {
            System::One(s) => s.disc.mesh.n,
            System::Two(s) => s.disc.mesh.n_sv(),
        }
    }

    pub fn sv_mean_state(&self, data: &[f64], sv: usize, out: &mut [f64]) {
        match self {
            System::One(s) => s.disc.sv_mean_state(data, sv, out),
            System::Two(s) => s.disc.sv_mean_state(data, sv, out),
        }
    }
}

/// Per-step diagnostics. For Euler the extrema are the minimum SV-mean
/// density and pressure; for scalar laws the min and max of the solution's
/// CV averages.
#[derive(Debug, Clone)]
pub struct StepDiag {
    pub t: f64,
    pub dt: f64,
    pub a0: f64,
    pub mass: Vec<f64>,
    pub min_density: f64,
    pub min_pressure: f64,
}

#[derive(Debug)]
pub struct RunOutput {
    pub state: SolutionState,
    pub diagnostics: Vec<StepDiag>,
    pub snapshots: Vec<SolutionState>,
    pub floor_events: u64,
    pub steps: usize,
}

/// Everything `run` needs: a built system, the initial CV averages, and the
/// stepping parameters.
pub struct RunSetup {
    pub system: System,
    pub initial: SolutionState,
    pub ctrl: StepControl,
    pub integrator: Integrator,
    pub snapshot_times: Vec<f64>,
    /// Optional density/pressure floor (off by default; the bare scheme has
    /// no limiter).
    pub positivity_floor: Option<f64>,
    pub max_steps: usize,
}

impl RunSetup {
    pub fn new(system: System, initial: SolutionState, ctrl: StepControl) -> Self {
        Self {
            system,
            initial,
            ctrl,
            integrator: Integrator::Rk4,
            snapshot_times: Vec::new(),
            positivity_floor: None,
            max_steps: 50_000_000,
        }
    }
}

/// Advances the state to the final time, recording per-step diagnostics and
/// snapshots; fails fast on non-finite data or positivity loss.
pub fn run(setup: RunSetup) -> Result<RunOutput, SolverError> {
    let (output, err) = run_with_partial(setup);
    match err {
        None => Ok(output),
        Some(e) => Err(e),
    }
}

/// Like [`run`], but on failure also hands back everything recorded up to
/// the failing step, so drivers can keep partial outputs.
pub fn run_with_partial(mut setup: RunSetup) -> (RunOutput, Option<SolverError>) {
    let mut state = setup.initial.clone();
    let n = state.data.len();
    let m = state.n_comp;
    let mut k1 = vec![0.0; n];
    let mut bufs = StageBuffers::new(n);
    let mut diagnostics = Vec::new();
    let mut snapshots = Vec::new();
    let mut floor_events = 0u64;

    let mut snap_times: Vec<f64> = setup
        .snapshot_times
        .iter()
        .copied()
        .filter(|&s| s >= state.t && s <= setup.ctrl.t_final)
        .collect();
    snap_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    snap_times.dedup();
    let mut next_snap = 0usize;
    while next_snap < snap_times.len() && snap_times[next_snap] <= state.t + 1e-14 {
        snapshots.push(state.clone());
        next_snap += 1;
    }

    let mut steps = 0usize;
    while state.t < setup.ctrl.t_final - 1e-14 {
        if steps >= setup.max_steps {
            return (
                RunOutput { state, diagnostics, snapshots, floor_events, steps },
                Some(SolverError::Config(format!(
                    "exceeded step limit {} before reaching t_final",
                    setup.max_steps
                ))),
            );
        }
        let t = state.t;
        let stats = match setup.system.residual(&state.data, t, &mut k1) {
            Ok(stats) => stats,
            Err(e) => {
                return (
                    RunOutput { state, diagnostics, snapshots, floor_events, steps },
                    Some(e),
                )
            }
        };
        let t_stop = if next_snap < snap_times.len() {
            snap_times[next_snap]
        } else {
            setup.ctrl.t_final
        };
        let dt = setup.system.compute_dt(&stats, &setup.ctrl, t, t_stop);
        if !(dt > 0.0) || !dt.is_finite() {
            return (
                RunOutput { state, diagnostics, snapshots, floor_events, steps },
                Some(SolverError::Config(format!("non-positive dt = {dt} at t = {t}"))),
            );
        }

        let system = &mut setup.system;
        let step_result = match setup.integrator {
            Integrator::Rk4 => rk4_step(
                &mut state.data,
                t,
                dt,
                &k1,
                |u, ts, out| system.residual(u, ts, out).map(|_| ()),
                &mut bufs,
            ),
            Integrator::SspRk3 => ssprk3_step(
                &mut state.data,
                t,
                dt,
                &k1,
                |u, ts, out| system.residual(u, ts, out).map(|_| ()),
                &mut bufs,
            ),
        };
        if let Err(e) = step_result {
            return (
                RunOutput { state, diagnostics, snapshots, floor_events, steps },
                Some(e),
            );
        }
        state.t = t + dt;
        steps += 1;

        if let Some(floor) = setup.positivity_floor {
            floor_events += apply_floor(setup.system.law(), &mut state.data, floor);
        }

        // Diagnostics and the fail-fast checks.
        let mut mass = Vec::with_capacity(m);
        for s in 0..m {
            mass.push(setup.system.total_mass(&state.data, s));
        }
        let law = *setup.system.law();
        let (min_density, min_pressure) = if law.is_euler() {
            let mut min_rho = f64::INFINITY;
            let mut min_p = f64::INFINITY;
            let mut mean = [0.0f64; MAX_COMP];
            let mut bad_sv = None;
            for sv in 0..setup.system.n_sv() {
                setup.system.sv_mean_state(&state.data, sv, &mut mean[..m]);
                let rho = mean[0];
                let p = law.pressure(&mean[..m]).unwrap_or(f64::NEG_INFINITY);
                if !(rho > 0.0 && p > 0.0) || !rho.is_finite() || !p.is_finite() {
                    bad_sv = Some((sv, rho, p));
                    break;
                }
                min_rho = min_rho.min(rho);
                min_p = min_p.min(p);
            }
            if let Some((sv, rho, p)) = bad_sv {
                let err = if !state.is_finite() {
                    SolverError::Blowup { t: state.t }
                } else {
                    SolverError::PositivityFailure {
                        sv,
                        t: state.t,
                        what: format!("SV mean rho = {rho}, p = {p}"),
                    }
                };
                return (
                    RunOutput { state, diagnostics, snapshots, floor_events, steps },
                    Some(err),
                );
            }
            (min_rho, min_p)
        } else {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for v in state.data.iter() {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
            (lo, hi)
        };
        if !mass.iter().all(|v| v.is_finite()) || !min_density.is_finite() {
            let t_fail = state.t;
            return (
                RunOutput { state, diagnostics, snapshots, floor_events, steps },
                Some(SolverError::Blowup { t: t_fail }),
            );
        }
        diagnostics.push(StepDiag {
            t: state.t,
            dt,
            a0: stats.a0,
            mass,
            min_density,
            min_pressure,
        });

        while next_snap < snap_times.len() && state.t >= snap_times[next_snap] - 1e-12 {
            snapshots.push(state.clone());
            next_snap += 1;
        }
    }

    (
        RunOutput {
            state,
            diagnostics,
            snapshots,
            floor_events,
            steps,
        },
        None,
    )
}

/// Clamps CV-average density and pressure from below; returns the number of
/// adjusted CVs.
fn apply_floor(law: &ConservationLaw, data: &mut [f64], floor: f64) -> u64 {
    if !law.is_euler() {
        return 0;
    }
    let m = law.n_comp();
    let gamma = law.gamma();
    let mut events = 0;
    for cv in data.chunks_exact_mut(m) {
        let mut touched = false;
        if cv[0] < floor {
            cv[0] = floor;
            touched = true;
        }
        let kinetic = if m == 3 {
            0.5 * cv[1] * cv[1] / cv[0]
        } else {
            0.5 * (cv[1] * cv[1] + cv[2] * cv[2]) / cv[0]
        };
        let p = (gamma - 1.0) * (cv[m - 1] - kinetic);
        if p < floor {
            cv[m - 1] = kinetic + floor / (gamma - 1.0);
            touched = true;
        }
        if touched {
            events += 1;
        }
    }
    events
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Discretization1;
    use crate::geometry::{CvFamily, CvLayout, Mesh1D, Mesh2D};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn advection_system(n: usize, k: usize, damping: bool) -> System1 {
        let disc = Discretization1::new(
            Mesh1D::uniform(0.0, 2.0, n).unwrap(),
            CvLayout::new(k, CvFamily::GaussLegendre).unwrap(),
            1,
        );
        System1::new(
            disc,
            ConservationLaw::Advection1,
            FluxKind::Upwind,
            damping,
            (BcSide::Periodic, BcSide::Periodic),
        )
        .unwrap()
    }

    #[test]
    fn constant_state_is_steady() {
        let mut sys = advection_system(8, 2, true);
        let state = sys.disc.interpolate_initial(|_x, out| out[0] = 2.75);
        let mut rate = vec![0.0; sys.disc.n_dof()];
        let stats = sys.residual(&state.data, 0.0, &mut rate).unwrap();
        for &r in &rate {
            assert_abs_diff_eq!(r, 0.0, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(stats.a0, 0.0, epsilon = 1e-13);

        // Euler constant state, periodic.
        let disc = Discretization1::new(
            Mesh1D::uniform(0.0, 1.0, 6).unwrap(),
            CvLayout::new(2, CvFamily::GaussLegendre).unwrap(),
            3,
        );
        let mut sys = System1::new(
            disc,
            ConservationLaw::euler_1d(),
            FluxKind::Hllc,
            true,
            (BcSide::Periodic, BcSide::Periodic),
        )
        .unwrap();
        let prim = EulerPrim::new_1d(1.2, 0.5, 2.0).to_cons_1d(1.4);
        let state = sys.disc.interpolate_initial(|_x, out| out.copy_from_slice(&prim));
        let mut rate = vec![0.0; sys.disc.n_dof()];
        sys.residual(&state.data, 0.0, &mut rate).unwrap();
        for &r in &rate {
            assert_abs_diff_eq!(r, 0.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn polynomial_residual_is_minus_derivative_average() {
        // For a globally smooth degree-k polynomial the interior-SV residual
        // is the CV average of -u_x and sigma vanishes there.
        let k = 2;
        let n = 8;
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
            (BcSide::Transmissive, BcSide::Transmissive),
        )
        .unwrap();
        let f = |x: f64| 0.3 * x * x - 0.7 * x + 1.0;
        let state = sys.disc.interpolate_initial(|x, out| out[0] = f(x));
        let mut rate = vec![0.0; sys.disc.n_dof()];
        sys.residual(&state.data, 0.0, &mut rate).unwrap();
        for i in 1..n - 1 {
            for j in 0..=k {
                let xa = sys.disc.mesh.to_physical(i, sys.disc.layout.bounds[j]);
                let xb = sys.disc.mesh.to_physical(i, sys.disc.layout.bounds[j + 1]);
                // average of -u_x over the CV.
                let expect = -(f(xb) - f(xa)) / (xb - xa);
                assert_abs_diff_eq!(rate[i * (k + 1) + j], expect, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn residual_conserves_total_mass() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for damping in [false, true] {
            let mut sys = advection_system(12, 2, damping);
            let data: Vec<f64> = (0..sys.disc.n_dof()).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let mut rate = vec![0.0; data.len()];
            sys.residual(&data, 0.0, &mut rate).unwrap();
            let mut total = 0.0;
            for i in 0..12 {
                for j in 0..3 {
                    total += rate[i * 3 + j] * sys.disc.cv_width(i, j);
                }
            }
            assert_abs_diff_eq!(total, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sv_total_residual_telescopes_to_boundary_flux() {
        // Interior CV fluxes cancel: the SV-integrated rate equals the net
        // SV boundary flux (damping off to isolate the flux part).
        let mut sys = advection_system(6, 3, false);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let data: Vec<f64> = (0..sys.disc.n_dof()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut rate = vec![0.0; data.len()];
        sys.residual(&data, 0.0, &mut rate).unwrap();
        for i in 0..6 {
            let mut sv_rate = 0.0;
            for j in 0..4 {
                sv_rate += rate[i * 4 + j] * sys.disc.cv_width(i, j);
            }
            let net = sys.iface_flux[i + 1] - sys.iface_flux[i];
            assert_abs_diff_eq!(sv_rate, -net, epsilon = 1e-12);
        }
    }

    #[test]
    fn advection_transport_converges() {
        // One full period of 1 + 0.2 sin(pi x): the damped k=2 scheme must
        // come back close to the initial data, improving ~8x per refinement.
        let mut errors = Vec::new();
        for n in [8usize, 16] {
            let mut sys = advection_system(n, 2, true);
            let state = sys
                .disc
                .interpolate_initial(|x, out| out[0] = 1.0 + 0.2 * (PI * x).sin());
            let ctrl = StepControl::new(0.1, 2.0);
            let setup = RunSetup::new(System::One(Box::new(sys)), state.clone(), ctrl);
            let out = run(setup).unwrap();
            // Discrete error in the CV averages.
            let err: f64 = out
                .state
                .data
                .iter()
                .zip(&state.data)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            errors.push(err);
        }
        let ratio = errors[0] / errors[1];
        assert!(ratio > 5.0, "ratio {ratio}");
    }

    #[test]
    fn l2_norm_non_increasing_for_upwind_advection() {
        let mut sys = advection_system(16, 2, true);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let coeffs: Vec<(f64, f64)> = (1..4).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let state = sys.disc.interpolate_initial(|x, out| {
            out[0] = coeffs
                .iter()
                .enumerate()
                .map(|(i, (a, b))| a * ((i + 1) as f64 * PI * x).sin() + b * ((i + 1) as f64 * PI * x).cos())
                .sum();
        });
        let norm = |sys: &System1, data: &[f64]| {
            let field = sys.disc.reconstruct(data);
            let mut acc = 0.0;
            for i in 0..sys.disc.mesh.n {
                let h = sys.disc.mesh.h(i);
                for mode in 0..=2 {
                    let c = field.coeffs(i)[mode];
                    acc += c * c * (h / 2.0) * (2.0 / (2.0 * mode as f64 + 1.0));
                }
            }
            acc.sqrt()
        };
        let mut prev = norm(&sys, &state.data);
        let mut data = state.data.clone();
        let mut k1 = vec![0.0; data.len()];
        let mut bufs = StageBuffers::new(data.len());
        let ctrl = StepControl::new(0.4, 1.0);
        let mut t = 0.0;
        while t < 1.0 - 1e-12 {
            let stats = sys.residual(&data, t, &mut k1).unwrap();
            let dt = ctrl.compute_dt_1d(stats.alpha_x, stats.a0, sys.disc.mesh.min_h(), t, 1.0);
            rk4_step(&mut data, t, dt, &k1, |u, ts, out| sys.residual(u, ts, out).map(|_| ()), &mut bufs)
                .unwrap();
            t += dt;
            let next = norm(&sys, &data);
            assert!(next <= prev * (1.0 + 1e-10), "norm grew: {prev} -> {next}");
            prev = next;
        }
    }

    #[test]
    fn ghost_state_examples() {
        let law = ConservationLaw::euler_2d();
        let interior = EulerPrim::new_2d(1.0, 0.3, 0.2, 1.0).to_cons_2d(1.4);
        let mut ghost = [0.0; 4];

        ghost_state(&BcSide::ReflectingWall, &law, &interior, [0.0, -1.0], (0.5, 0.0), 0.0, &mut ghost)
            .unwrap();
        let expect = EulerPrim::new_2d(1.0, 0.3, -0.2, 1.0).to_cons_2d(1.4);
        for s in 0..4 {
            assert_abs_diff_eq!(ghost[s], expect[s], epsilon = 1e-14);
        }

        ghost_state(&BcSide::Transmissive, &law, &interior, [0.0, -1.0], (0.5, 0.0), 0.0, &mut ghost)
            .unwrap();
        assert_eq!(&ghost[..], &interior[..]);

        // Double Mach bottom ahead of the wall foot: exact post-shock state.
        ghost_state(&BcSide::DoubleMachBottom, &law, &interior, [0.0, -1.0], (0.1, 0.0), 0.0, &mut ghost)
            .unwrap();
        let post = double_mach_post_shock(1.4);
        for s in 0..4 {
            assert_abs_diff_eq!(ghost[s], post[s], epsilon = 1e-12);
        }
        // Behind the foot: reflecting wall.
        ghost_state(&BcSide::DoubleMachBottom, &law, &interior, [0.0, -1.0], (0.5, 0.0), 0.0, &mut ghost)
            .unwrap();
        for s in 0..4 {
            assert_abs_diff_eq!(ghost[s], expect[s], epsilon = 1e-14);
        }

        // Periodic sides never produce ghosts.
        assert!(ghost_state(&BcSide::Periodic, &law, &interior, [0.0, -1.0], (0.0, 0.0), 0.0, &mut ghost)
            .is_err());
    }

    #[test]
    fn run_with_zero_final_time_returns_initial() {
        let sys = advection_system(8, 2, true);
        let state = sys.disc.interpolate_initial(|x, out| out[0] = (PI * x).sin());
        let ctrl = StepControl::new(0.4, 0.0);
        let out = run(RunSetup::new(System::One(Box::new(sys)), state.clone(), ctrl)).unwrap();
        assert_eq!(out.state.data, state.data);
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn sod_run_completes_with_positive_density() {
        let disc = Discretization1::new(
            Mesh1D::uniform(0.0, 1.0, 50).unwrap(),
            CvLayout::new(2, CvFamily::GaussLegendre).unwrap(),
            3,
        );
        let sys = System1::new(
            disc,
            ConservationLaw::euler_1d(),
            FluxKind::Hllc,
            true,
            (BcSide::Transmissive, BcSide::Transmissive),
        )
        .unwrap();
        let gamma = 1.4;
        let state = sys.disc.average_initial(
            |x, out| {
                let prim = if x < 0.5 {
                    EulerPrim::new_1d(1.0, 0.0, 1.0)
                } else {
                    EulerPrim::new_1d(0.125, 0.0, 0.1)
                };
                out.copy_from_slice(&prim.to_cons_1d(gamma));
            },
            6,
        );
        // CFL 0.2: the start-up transient at the initial jump needs a
        // tighter step than smooth runs (see the shock presets).
        let ctrl = StepControl::new(0.2, 0.2);
        let out = run(RunSetup::new(System::One(Box::new(sys)), state, ctrl)).unwrap();
        assert!(out.diagnostics.iter().all(|d| d.min_density > 0.0));
        assert!(out.diagnostics.iter().all(|d| d.min_pressure > 0.0));
        assert_abs_diff_eq!(out.state.t, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn snapshots_land_on_requested_times() {
        let sys = advection_system(8, 2, false);
        let state = sys.disc.interpolate_initial(|x, out| out[0] = (PI * x).sin());
        let ctrl = StepControl::new(0.3, 1.0);
        let mut setup = RunSetup::new(System::One(Box::new(sys)), state, ctrl);
        setup.snapshot_times = vec![0.0, 0.37, 1.0];
        let out = run(setup).unwrap();
        assert_eq!(out.snapshots.len(), 3);
        assert_abs_diff_eq!(out.snapshots[0].t, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out.snapshots[1].t, 0.37, epsilon = 1e-10);
        assert_abs_diff_eq!(out.snapshots[2].t, 1.0, epsilon = 1e-10);
    }

    fn advection2_system(nx: usize, ny: usize, k: usize, damping: bool) -> System2 {
        let disc = Discretization2::new(
            Mesh2D::uniform((0.0, 2.0), (0.0, 2.0), nx, ny).unwrap(),
            CvLayout::new(k, CvFamily::GaussLegendre).unwrap(),
            1,
        );
        System2::new(
            disc,
            ConservationLaw::Advection2,
            FluxKind::Upwind,
            damping,
            (
                BcSide::Periodic,
                BcSide::Periodic,
                BcSide::Periodic,
                BcSide::Periodic,
            ),
        )
        .unwrap()
    }

    #[test]
    fn constant_state_is_steady_2d() {
        let mut sys = advection2_system(4, 3, 2, true);
        let state = sys.disc.interpolate_initial(|_x, _y, out| out[0] = -1.3);
        let mut rate = vec![0.0; sys.disc.n_dof()];
        let stats = sys.residual(&state.data, 0.0, &mut rate).unwrap();
        for &r in &rate {
            assert_abs_diff_eq!(r, 0.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(stats.a0, 0.0, epsilon = 1e-12);

        // Euler 2D constant state with mixed BCs (transmissive + wall).
        let disc = Discretization2::new(
            Mesh2D::uniform((0.0, 1.0), (0.0, 1.0), 3, 3).unwrap(),
            CvLayout::new(2, CvFamily::GaussLegendre).unwrap(),
            4,
        );
        let mut sys = System2::new(
            disc,
            ConservationLaw::euler_2d(),
            FluxKind::Hllc,
            true,
            (
                BcSide::Transmissive,
                BcSide::Transmissive,
                BcSide::ReflectingWall,
                BcSide::ReflectingWall,
            ),
        )
        .unwrap();
        // Zero normal velocity at the walls keeps the constant state steady.
        let prim = EulerPrim::new_2d(1.0, 0.7, 0.0, 1.5).to_cons_2d(1.4);
        let state = sys.disc.interpolate_initial(|_x, _y, out| out.copy_from_slice(&prim));
        let mut rate = vec![0.0; sys.disc.n_dof()];
        sys.residual(&state.data, 0.0, &mut rate).unwrap();
        for &r in &rate {
            assert_abs_diff_eq!(r, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn residual_conserves_total_mass_2d() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for damping in [false, true] {
            let mut sys = advection2_system(5, 4, 2, damping);
            let data: Vec<f64> = (0..sys.disc.n_dof()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut rate = vec![0.0; data.len()];
            sys.residual(&data, 0.0, &mut rate).unwrap();
            let n = 3;
            let mut total = 0.0;
            for iy in 0..4 {
                for ix in 0..5 {
                    let sv = iy * 5 + ix;
                    let hx = sys.disc.mesh.x.h(ix);
                    let hy = sys.disc.mesh.y.h(iy);
                    for jy in 0..n {
                        for jx in 0..n {
                            let area = 0.25
                                * sys.disc.layout.widths[jx]
                                * sys.disc.layout.widths[jy]
                                * hx
                                * hy;
                            total += rate[(sv * n * n + jy * n + jx)] * area;
                        }
                    }
                }
            }
            assert_abs_diff_eq!(total, 0.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn advection_2d_transport_converges() {
        let mut errors = Vec::new();
        for n in [4usize, 8] {
            let mut sys = advection2_system(n, n, 2, false);
            let state = sys
                .disc
                .interpolate_initial(|x, y, out| out[0] = (PI * (x + y)).sin());
            let ctrl = StepControl::new(0.2, 0.5);
            let mut data = state.data.clone();
            let mut k1 = vec![0.0; data.len()];
            let mut bufs = StageBuffers::new(data.len());
            let mut t = 0.0;
            while t < 0.5 - 1e-12 {
                let stats = sys.residual(&data, t, &mut k1).unwrap();
                let dt = ctrl.compute_dt_2d(
                    stats.alpha_x,
                    stats.alpha_y,
                    sys.disc.mesh.x.min_h(),
                    sys.disc.mesh.y.min_h(),
                    stats.a0,
                    t,
                    0.5,
                );
                rk4_step(&mut data, t, dt, &k1, |u, ts, out| sys.residual(u, ts, out).map(|_| ()), &mut bufs)
                    .unwrap();
                t += dt;
            }
            // Volume-weighted error of CV averages against the exact field.
            let exact = sys
                .disc
                .average_initial(|x, y, out| out[0] = (PI * (x + y - 2.0 * t)).sin(), 6);
            let mut err2 = 0.0;
            for iy in 0..n {
                for ix in 0..n {
                    let sv = iy * n + ix;
                    let hx = sys.disc.mesh.x.h(ix);
                    let hy = sys.disc.mesh.y.h(iy);
                    for jy in 0..3 {
                        for jx in 0..3 {
                            let idx = sv * 9 + jy * 3 + jx;
                            let d = data[idx] - exact.data[idx];
                            let area = 0.25
                                * sys.disc.layout.widths[jx]
                                * sys.disc.layout.widths[jy]
                                * hx
                                * hy;
                            err2 += d * d * area;
                        }
                    }
                }
            }
            errors.push(err2.sqrt());
        }
        let ratio = errors[0] / errors[1];
        assert!(ratio > 5.0, "ratio {ratio}");
    }

    #[test]
    fn double_mach_shock_position_moves() {
        assert_abs_diff_eq!(
            double_mach_top_shock_x(0.0),
            1.0 / 6.0 + 1.0 / 3.0f64.sqrt(),
            epsilon = 1e-14
        );
        let early = double_mach_top_shock_x(0.0);
        let late = double_mach_top_shock_x(0.2);
        assert_abs_diff_eq!(late - early, 4.0 / 3.0f64.sqrt(), epsilon = 1e-13);
    }
}
