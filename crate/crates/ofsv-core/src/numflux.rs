//! Interface fluxes.
//!
//! CV interfaces interior to an SV see a single-valued reconstruction, so the
//! smooth analytic flux applies there. SV interfaces carry two traces and use
//! a Riemann flux: exact upwind for scalar advection, local Lax-Friedrichs
//! (Rusanov) or HLLC for Euler.

use crate::geometry::QuadratureRule;
use crate::physics::{ConservationLaw, PhysicsError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FluxError {
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("vacuum-generating expansion detected (margin = {p_star})")]
    VacuumDetected { p_star: f64 },
    #[error("flux kind {0:?} is not applicable to this system")]
    Unsupported(FluxKind),
}

/// Riemann flux used at SV interfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxKind {
    /// Exact upwind for unit-speed scalar advection.
    Upwind,
    LaxFriedrichs,
    Hllc,
}

/// Smooth flux of the single-valued reconstruction at a CV interface strictly
/// inside an SV.
pub fn interior_flux(
    law: &ConservationLaw,
    u: &[f64],
    axis: usize,
    out: &mut [f64],
) -> Result<(), FluxError> {
    law.flux(u, axis, out)?;
    Ok(())
}

/// Local Lax-Friedrichs (Rusanov):
/// `0.5 (F(uL) + F(uR)) - 0.5 alpha (uR - uL)` with
/// `alpha = max(max_wavespeed(uL), max_wavespeed(uR))`.
pub fn lax_friedrichs(
    law: &ConservationLaw,
    left: &[f64],
    right: &[f64],
    axis: usize,
    out: &mut [f64],
) -> Result<(), FluxError> {
    let m = law.n_comp();
    let mut fl = [0.0f64; 4];
    let mut fr = [0.0f64; 4];
    law.flux(left, axis, &mut fl[..m])?;
    law.flux(right, axis, &mut fr[..m])?;
    let alpha = law
        .max_wavespeed(left, axis)?
        .max(law.max_wavespeed(right, axis)?);
    for s in 0..m {
        out[s] = 0.5 * (fl[s] + fr[s]) - 0.5 * alpha * (right[s] - left[s]);
    }
    Ok(())
}

/// HLLC flux for the Euler equations.
///
/// Wave-speed estimates use the Roe mean:
/// `S_L = min(u_L - c_L, u_hat - c_hat)`, `S_R = max(u_R + c_R, u_hat + c_hat)`,
/// and the contact speed follows Toro, Riemann Solvers and Numerical Methods
/// for Fluid Dynamics, ch. 10.
pub fn hllc(
    law: &ConservationLaw,
    left: &[f64],
    right: &[f64],
    axis: usize,
    out: &mut [f64],
) -> Result<(), FluxError> {
    if !law.is_euler() {
        return Err(FluxError::Unsupported(FluxKind::Hllc));
    }
    let m = law.n_comp();
    let gamma = law.gamma();
    let norm_idx = axis + 1;

    let rho_l = left[0];
    let rho_r = right[0];
    let p_l = law.pressure(left)?;
    let p_r = law.pressure(right)?;
    let u_l = left[norm_idx] / rho_l;
    let u_r = right[norm_idx] / rho_r;
    let c_l = (gamma * p_l / rho_l).sqrt();
    let c_r = (gamma * p_r / rho_r).sqrt();

    // Star-state pressure positivity: the Riemann problem generates vacuum
    // when the expansion exceeds 2 c_L/(g-1) + 2 c_R/(g-1).
    let du_crit = 2.0 * (c_l + c_r) / (gamma - 1.0);
    if u_r - u_l >= du_crit {
        return Err(FluxError::VacuumDetected {
            p_star: du_crit - (u_r - u_l),
        });
    }

    // Roe-mean normal velocity and sound speed.
    let mut mean = [0.0f64; 4];
    law.roe_average(left, right, &mut mean[..m])?;
    let u_hat = mean[norm_idx] / mean[0];
    let p_hat = law.pressure(&mean[..m])?;
    let c_hat = (gamma * p_hat / mean[0]).sqrt();

    let s_l = (u_l - c_l).min(u_hat - c_hat);
    let s_r = (u_r + c_r).max(u_hat + c_hat);
    let s_star = (p_r - p_l + rho_l * u_l * (s_l - u_l) - rho_r * u_r * (s_r - u_r))
        / (rho_l * (s_l - u_l) - rho_r * (s_r - u_r));
    if !s_star.is_finite() {
        return Err(FluxError::VacuumDetected { p_star: f64::NAN });
    }

    if s_l >= 0.0 {
        law.flux(left, axis, out)?;
        return Ok(());
    }
    if s_r <= 0.0 {
        law.flux(right, axis, out)?;
        return Ok(());
    }

    let star_flux = |state: &[f64], p_k: f64, s_k: f64, u_k: f64, out: &mut [f64]| {
        let rho_k = state[0];
        let factor = rho_k * (s_k - u_k) / (s_k - s_star);
        let mut u_star = [0.0f64; 4];
        u_star[0] = factor;
        u_star[norm_idx] = factor * s_star;
        // Tangential momentum is advected unchanged.
        if m == 4 {
            let tang_idx = 3 - norm_idx;
            u_star[tang_idx] = factor * state[tang_idx] / rho_k;
        }
        let e_k = state[m - 1] / rho_k;
        u_star[m - 1] = factor * (e_k + (s_star - u_k) * (s_star + p_k / (rho_k * (s_k - u_k))));
        let mut f_k = [0.0f64; 4];
        law.flux(state, axis, &mut f_k[..m]).map(|_| {
            for s in 0..m {
                out[s] = f_k[s] + s_k * (u_star[s] - state[s]);
            }
        })
    };

    if s_star >= 0.0 {
        star_flux(left, p_l, s_l, u_l, out)?;
    } else {
        star_flux(right, p_r, s_r, u_r, out)?;
    }
    Ok(())
}

/// Dispatches the configured Riemann flux.
pub fn riemann_flux(
    kind: FluxKind,
    law: &ConservationLaw,
    left: &[f64],
    right: &[f64],
    axis: usize,
    out: &mut [f64],
) -> Result<(), FluxError> {
    match kind {
        FluxKind::Upwind => {
            if law.is_euler() {
                return Err(FluxError::Unsupported(FluxKind::Upwind));
            }
            // Unit positive speed per axis: the upwind value is the left trace.
            out[0] = left[0];
            Ok(())
        }
        FluxKind::LaxFriedrichs => lax_friedrichs(law, left, right, axis, out),
        FluxKind::Hllc => {
            if law.is_euler() {
                hllc(law, left, right, axis, out)
            } else {
                out[0] = left[0];
                Ok(())
            }
        }
    }
}

/// One side of an Euler interface, decomposed once for the fused fast path.
#[derive(Clone, Copy)]
struct Side {
    rho: f64,
    un: f64,
    p: f64,
    c: f64,
    h: f64,
}

impl Side {
    #[inline]
    fn decompose(u: &[f64], m: usize, norm_idx: usize, gamma: f64) -> Result<Self, FluxError> {
        let rho = u[0];
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(FluxError::Physics(PhysicsError::InvalidState(format!(
                "rho = {rho}"
            ))));
        }
        let inv_rho = 1.0 / rho;
        let kinetic = if m == 3 {
            0.5 * u[1] * u[1] * inv_rho
        } else {
            0.5 * (u[1] * u[1] + u[2] * u[2]) * inv_rho
        };
        let p = (gamma - 1.0) * (u[m - 1] - kinetic);
        if !(p > 0.0) || !p.is_finite() {
            return Err(FluxError::Physics(PhysicsError::InvalidState(format!(
                "p = {p}"
            ))));
        }
        Ok(Self {
            rho,
            un: u[norm_idx] * inv_rho,
            p,
            c: (gamma * p * inv_rho).sqrt(),
            h: (u[m - 1] + p) * inv_rho,
        })
    }

    #[inline]
    fn flux(&self, u: &[f64], m: usize, norm_idx: usize, out: &mut [f64]) {
        let mass = u[norm_idx];
        out[0] = mass;
        for s in 1..m - 1 {
            out[s] = u[s] * self.un;
        }
        out[norm_idx] += self.p;
        out[m - 1] = (u[m - 1] + self.p) * self.un;
    }
}

/// Fused interface kernel for the solver hot path: writes the Riemann flux
/// and returns the larger `|u_n| + c` of the two traces, decomposing each
/// side into primitives exactly once.
pub fn riemann_flux_with_speed(
    kind: FluxKind,
    law: &ConservationLaw,
    left: &[f64],
    right: &[f64],
    axis: usize,
    out: &mut [f64],
) -> Result<f64, FluxError> {
    if !law.is_euler() {
        out[0] = match kind {
            FluxKind::LaxFriedrichs => 0.5 * (left[0] + right[0]) - 0.5 * (right[0] - left[0]),
            _ => left[0],
        };
        return Ok(1.0);
    }
    let m = law.n_comp();
    let gamma = law.gamma();
    let norm_idx = axis + 1;
    let l = Side::decompose(left, m, norm_idx, gamma)?;
    let r = Side::decompose(right, m, norm_idx, gamma)?;
    let speed = (l.un.abs() + l.c).max(r.un.abs() + r.c);

    match kind {
        FluxKind::LaxFriedrichs => {
            // alpha = max over sides of |u_n| + c, exactly as the reference.
            let mut fl = [0.0f64; 4];
            let mut fr = [0.0f64; 4];
            l.flux(left, m, norm_idx, &mut fl[..m]);
            r.flux(right, m, norm_idx, &mut fr[..m]);
            for s in 0..m {
                out[s] = 0.5 * (fl[s] + fr[s]) - 0.5 * speed * (right[s] - left[s]);
            }
            Ok(speed)
        }
        _ => {
            // HLLC with Roe-mean wave speeds.
            let du_crit = 2.0 * (l.c + r.c) / (gamma - 1.0);
            if r.un - l.un >= du_crit {
                return Err(FluxError::VacuumDetected {
                    p_star: du_crit - (r.un - l.un),
                });
            }
            let sl_w = l.rho.sqrt();
            let sr_w = r.rho.sqrt();
            let w = 1.0 / (sl_w + sr_w);
            let u_hat = (sl_w * l.un + sr_w * r.un) * w;
            let h_hat = (sl_w * l.h + sr_w * r.h) * w;
            // The Roe kinetic energy includes the averaged tangential speed.
            let ek_hat = if m == 3 {
                0.5 * u_hat * u_hat
            } else {
                let tl = left[3 - norm_idx] / left[0];
                let tr = right[3 - norm_idx] / right[0];
                let t_hat = (sl_w * tl + sr_w * tr) * w;
                0.5 * (u_hat * u_hat + t_hat * t_hat)
            };
            let c_hat2 = (gamma - 1.0) * (h_hat - ek_hat);
            if !(c_hat2 > 0.0) {
                return Err(FluxError::VacuumDetected { p_star: c_hat2 });
            }
            let c_hat = c_hat2.sqrt();

            let s_l = (l.un - l.c).min(u_hat - c_hat);
            let s_r = (r.un + r.c).max(u_hat + c_hat);
            let s_star = (r.p - l.p + l.rho * l.un * (s_l - l.un) - r.rho * r.un * (s_r - r.un))
                / (l.rho * (s_l - l.un) - r.rho * (s_r - r.un));
            if !s_star.is_finite() {
                return Err(FluxError::VacuumDetected { p_star: f64::NAN });
            }

            if s_l >= 0.0 {
                l.flux(left, m, norm_idx, out);
                return Ok(speed);
            }
            if s_r <= 0.0 {
                r.flux(right, m, norm_idx, out);
                return Ok(speed);
            }
            let (side, state, s_k) = if s_star >= 0.0 {
                (&l, left, s_l)
            } else {
                (&r, right, s_r)
            };
            side.flux(state, m, norm_idx, out);
            let factor = side.rho * (s_k - side.un) / (s_k - s_star);
            let mut u_star = [0.0f64; 4];
            u_star[0] = factor;
            u_star[norm_idx] = factor * s_star;
            if m == 4 {
                let tang = 3 - norm_idx;
                u_star[tang] = factor * state[tang] / side.rho;
            }
            let e_k = state[m - 1] / side.rho;
            u_star[m - 1] = factor
                * (e_k + (s_star - side.un) * (s_star + side.p / (side.rho * (s_k - side.un))));
            for s in 0..m {
                out[s] += s_k * (u_star[s] - state[s]);
            }
            Ok(speed)
        }
    }
}

/// Integrates per-node flux values over a face of the given length:
/// `sum_q w_q F(node_q) * (face_length / 2)`. 1D faces degenerate to a single
/// point evaluation (length 2 in reference units cancels the half).
pub fn face_flux_integral(
    node_fluxes: &[f64],
    n_comp: usize,
    face_length: f64,
    rule: &QuadratureRule,
    out: &mut [f64],
) {
    out[..n_comp].fill(0.0);
    for (q, &w) in rule.weights.iter().enumerate() {
        for s in 0..n_comp {
            out[s] += w * node_fluxes[q * n_comp + s];
        }
    }
    let half = 0.5 * face_length;
    for s in 0..n_comp {
        out[s] *= half;
    }
}
