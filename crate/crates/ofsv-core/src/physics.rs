//! Governing equations: linear advection (unit velocity per axis) and the
//! compressible Euler equations with ideal-gas closure.
//!
//! All hot-path routines operate on conservative-variable slices ordered
//! `(rho, rho*u[, rho*v], rho*E)`. Eigenvector normalization follows the
//! conventional enthalpy-based form.

use thiserror::Error;

pub const DEFAULT_GAMMA: f64 = 1.4;

#[derive(Debug, Error)]
pub enum PhysicsError {
    #[error("invalid state: {0}")]
    InvalidState(String),
}

/// Primitive Euler variables; `v` is ignored in 1D contexts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerPrim {
    pub rho: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
}

impl EulerPrim {
    pub fn new_1d(rho: f64, u: f64, p: f64) -> Self {
        Self { rho, u, v: 0.0, p }
    }

    pub fn new_2d(rho: f64, u: f64, v: f64, p: f64) -> Self {
        Self { rho, u, v, p }
    }

    pub fn sound_speed(&self, gamma: f64) -> f64 {
        (gamma * self.p / self.rho).sqrt()
    }

    /// Conservative vector `(rho, rho u, rho E)`.
    pub fn to_cons_1d(&self, gamma: f64) -> [f64; 3] {
        [
            self.rho,
            self.rho * self.u,
            0.5 * self.rho * self.u * self.u + self.p / (gamma - 1.0),
        ]
    }

    /// Conservative vector `(rho, rho u, rho v, rho E)`.
    pub fn to_cons_2d(&self, gamma: f64) -> [f64; 4] {
        [
            self.rho,
            self.rho * self.u,
            self.rho * self.v,
            0.5 * self.rho * (self.u * self.u + self.v * self.v) + self.p / (gamma - 1.0),
        ]
    }
}

/// The registered hyperbolic systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConservationLaw {
    /// `u_t + u_x = 0`.
    Advection1,
    /// `u_t + u_x + u_y = 0` (velocity `(1, 1)`).
    Advection2,
    Euler1 { gamma: f64 },
    Euler2 { gamma: f64 },
}

impl ConservationLaw {
    pub fn euler_1d() -> Self {
        Self::Euler1 {
            gamma: DEFAULT_GAMMA,
        }
    }

    pub fn euler_2d() -> Self {
        Self::Euler2 {
            gamma: DEFAULT_GAMMA,
        }
    }

    pub fn n_comp(&self) -> usize {
        match self {
            Self::Advection1 | Self::Advection2 => 1,
            Self::Euler1 { .. } => 3,
            Self::Euler2 { .. } => 4,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Advection1 | Self::Euler1 { .. } => 1,
            Self::Advection2 | Self::Euler2 { .. } => 2,
        }
    }

    pub fn is_euler(&self) -> bool {
        matches!(self, Self::Euler1 { .. } | Self::Euler2 { .. })
    }

    pub fn gamma(&self) -> f64 {
        match self {
            Self::Euler1 { gamma } | Self::Euler2 { gamma } => *gamma,
            _ => DEFAULT_GAMMA,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Advection1 => "advection1d",
            Self::Advection2 => "advection2d",
            Self::Euler1 { .. } => "euler1d",
            Self::Euler2 { .. } => "euler2d",
        }
    }

    /// Pressure of a conservative state (Euler); errors on non-physical input.
    pub fn pressure(&self, u: &[f64]) -> Result<f64, PhysicsError> {
        match self {
            Self::Euler1 { gamma } => {
                let rho = u[0];
                if rho <= 0.0 || !rho.is_finite() {
                    return Err(PhysicsError::InvalidState(format!("rho = {rho}")));
                }
                let p = (gamma - 1.0) * (u[2] - 0.5 * u[1] * u[1] / rho);
                if p <= 0.0 || !p.is_finite() {
                    return Err(PhysicsError::InvalidState(format!("p = {p}")));
                }
                Ok(p)
            }
            Self::Euler2 { gamma } => {
                let rho = u[0];
                if rho <= 0.0 || !rho.is_finite() {
                    return Err(PhysicsError::InvalidState(format!("rho = {rho}")));
                }
                let p = (gamma - 1.0) * (u[3] - 0.5 * (u[1] * u[1] + u[2] * u[2]) / rho);
                if p <= 0.0 || !p.is_finite() {
                    return Err(PhysicsError::InvalidState(format!("p = {p}")));
                }
                Ok(p)
            }
            _ => Err(PhysicsError::InvalidState(
                "pressure undefined for scalar laws".into(),
            )),
        }
    }

    /// Analytic flux in the given axis (0 = x, 1 = y).
    pub fn flux(&self, u: &[f64], axis: usize, out: &mut [f64]) -> Result<(), PhysicsError> {
        match self {
            Self::Advection1 | Self::Advection2 => {
                out[0] = u[0];
                Ok(())
            }
            Self::Euler1 { .. } => {
                let p = self.pressure(u)?;
                let vel = u[1] / u[0];
                out[0] = u[1];
                out[1] = u[1] * vel + p;
                out[2] = (u[2] + p) * vel;
                Ok(())
            }
            Self::Euler2 { .. } => {
                let p = self.pressure(u)?;
                let un = u[axis + 1] / u[0];
                out[0] = u[axis + 1];
                out[1] = u[1] * un;
                out[2] = u[2] * un;
                out[axis + 1] += p;
                out[3] = (u[3] + p) * un;
                Ok(())
            }
        }
    }

    /// `|u_axis| + c` for Euler, `1` for unit advection.
    pub fn max_wavespeed(&self, u: &[f64], axis: usize) -> Result<f64, PhysicsError> {
        match self {
            Self::Advection1 | Self::Advection2 => Ok(1.0),
            Self::Euler1 { gamma } => {
                let p = self.pressure(u)?;
                let c = (gamma * p / u[0]).sqrt();
                Ok((u[1] / u[0]).abs() + c)
            }
            Self::Euler2 { gamma } => {
                let p = self.pressure(u)?;
                let c = (gamma * p / u[0]).sqrt();
                let un = u[axis + 1] / u[0];
                Ok(un.abs() + c)
            }
        }
    }

    /// Density-square-root-weighted mean state used for interface
    /// linearizations. For scalar laws this is the identity on `left`.
    ///
    /// The returned conservative state has the Roe-averaged velocity and
    /// total enthalpy, so its eigensystem is the Roe linearization.
    pub fn roe_average(
        &self,
        left: &[f64],
        right: &[f64],
        out: &mut [f64],
    ) -> Result<(), PhysicsError> {
        match self {
            Self::Advection1 | Self::Advection2 => {
                out[0] = left[0];
                Ok(())
            }
            Self::Euler1 { gamma } => {
                let (rl, rr) = (left[0], right[0]);
                if rl <= 0.0 || rr <= 0.0 {
                    return Err(PhysicsError::InvalidState("rho <= 0 in Roe average".into()));
                }
                let pl = self.pressure(left)?;
                let pr = self.pressure(right)?;
                let (sl, sr) = (rl.sqrt(), rr.sqrt());
                let w = 1.0 / (sl + sr);
                let u_hat = (sl * left[1] / rl + sr * right[1] / rr) * w;
                let hl = (left[2] + pl) / rl;
                let hr = (right[2] + pr) / rr;
                let h_hat = (sl * hl + sr * hr) * w;
                let rho_hat = sl * sr;
                let p_hat = (gamma - 1.0) / gamma * rho_hat * (h_hat - 0.5 * u_hat * u_hat);
                if p_hat <= 0.0 {
                    return Err(PhysicsError::InvalidState("Roe enthalpy too small".into()));
                }
                let prim = EulerPrim::new_1d(rho_hat, u_hat, p_hat);
                out.copy_from_slice(&prim.to_cons_1d(*gamma));
                Ok(())
            }
            Self::Euler2 { gamma } => {
                let (rl, rr) = (left[0], right[0]);
                if rl <= 0.0 || rr <= 0.0 {
                    return Err(PhysicsError::InvalidState("rho <= 0 in Roe average".into()));
                }
                let pl = self.pressure(left)?;
                let pr = self.pressure(right)?;
                let (sl, sr) = (rl.sqrt(), rr.sqrt());
                let w = 1.0 / (sl + sr);
                let u_hat = (sl * left[1] / rl + sr * right[1] / rr) * w;
                let v_hat = (sl * left[2] / rl + sr * right[2] / rr) * w;
                let hl = (left[3] + pl) / rl;
                let hr = (right[3] + pr) / rr;
                let h_hat = (sl * hl + sr * hr) * w;
                let rho_hat = sl * sr;
                let p_hat = (gamma - 1.0) / gamma
                    * rho_hat
                    * (h_hat - 0.5 * (u_hat * u_hat + v_hat * v_hat));
                if p_hat <= 0.0 {
                    return Err(PhysicsError::InvalidState("Roe enthalpy too small".into()));
                }
                let prim = EulerPrim::new_2d(rho_hat, u_hat, v_hat, p_hat);
                out.copy_from_slice(&prim.to_cons_2d(*gamma));
                Ok(())
            }
        }
    }

    /// Right eigenvectors `R` (columns) and `R^{-1}` of the directional flux
    /// Jacobian `n . dF/dU` at `u`, written row-major into `r` and `rinv`
    /// (`m x m` each). Scalar laws give `R = R^{-1} = [1]`.
    pub fn eig_matrices(
        &self,
        u: &[f64],
        normal: [f64; 2],
        r: &mut [f64],
        rinv: &mut [f64],
    ) -> Result<(), PhysicsError> {
        match self {
            Self::Advection1 | Self::Advection2 => {
                r[0] = 1.0;
                rinv[0] = 1.0;
                Ok(())
            }
            Self::Euler1 { gamma } => {
                let rho = u[0];
                let p = self.pressure(u)?;
                let vel = u[1] / rho;
                let c = (gamma * p / rho).sqrt();
                let h = (u[2] + p) / rho;
                let ek = 0.5 * vel * vel;
                let g1 = gamma - 1.0;
                // Columns: (u - c, u, u + c).
                let cols = [
                    [1.0, vel - c, h - vel * c],
                    [1.0, vel, ek],
                    [1.0, vel + c, h + vel * c],
                ];
                for (row, r_row) in r.chunks_exact_mut(3).enumerate() {
                    for col in 0..3 {
                        r_row[col] = cols[col][row];
                    }
                }
                let b1 = g1 / (c * c);
                let b2 = b1 * ek;
                let rows = [
                    [
                        0.5 * (b2 + vel / c),
                        0.5 * (-b1 * vel - 1.0 / c),
                        0.5 * b1,
                    ],
                    [1.0 - b2, b1 * vel, -b1],
                    [
                        0.5 * (b2 - vel / c),
                        0.5 * (-b1 * vel + 1.0 / c),
                        0.5 * b1,
                    ],
                ];
                for (row, ri_row) in rinv.chunks_exact_mut(3).enumerate() {
                    ri_row.copy_from_slice(&rows[row]);
                }
                Ok(())
            }
            Self::Euler2 { gamma } => {
                let rho = u[0];
                let p = self.pressure(u)?;
                let (ux, uy) = (u[1] / rho, u[2] / rho);
                let c = (gamma * p / rho).sqrt();
                let h = (u[3] + p) / rho;
                let (nx, ny) = (normal[0], normal[1]);
                let qn = ux * nx + uy * ny;
                let qt = -ux * ny + uy * nx;
                let ek = 0.5 * (ux * ux + uy * uy);
                let g1 = gamma - 1.0;
                // Columns: (qn - c, entropy, shear, qn + c).
                let cols = [
                    [1.0, ux - c * nx, uy - c * ny, h - c * qn],
                    [1.0, ux, uy, ek],
                    [0.0, -ny, nx, qt],
                    [1.0, ux + c * nx, uy + c * ny, h + c * qn],
                ];
                for (row, r_row) in r.chunks_exact_mut(4).enumerate() {
                    for col in 0..4 {
                        r_row[col] = cols[col][row];
                    }
                }
                let b1 = g1 / (c * c);
                let b2 = b1 * ek;
                let rows = [
                    [
                        0.5 * (b2 + qn / c),
                        0.5 * (-b1 * ux - nx / c),
                        0.5 * (-b1 * uy - ny / c),
                        0.5 * b1,
                    ],
                    [1.0 - b2, b1 * ux, b1 * uy, -b1],
                    [-qt, -ny, nx, 0.0],
                    [
                        0.5 * (b2 - qn / c),
                        0.5 * (-b1 * ux + nx / c),
                        0.5 * (-b1 * uy + ny / c),
                        0.5 * b1,
                    ],
                ];
                for (row, ri_row) in rinv.chunks_exact_mut(4).enumerate() {
                    ri_row.copy_from_slice(&rows[row]);
                }
                Ok(())
            }
        }
    }
}

/// `out = rinv * values` (row-major `m x m` times `m`-vector). Applied
/// uniformly to solution values and each derivative order.
pub fn to_characteristic(rinv: &[f64], values: &[f64], out: &mut [f64]) {
    let m = values.len();
    for row in 0..m {
        let mut acc = 0.0;
        for col in 0..m {
            acc += rinv[row * m + col] * values[col];
        }
        out[row] = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn random_prim_1d(rng: &mut impl Rng) -> EulerPrim {
        EulerPrim::new_1d(
            rng.gen_range(0.1..10.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(0.1..10.0),
        )
    }

    fn random_prim_2d(rng: &mut impl Rng) -> EulerPrim {
        EulerPrim::new_2d(
            rng.gen_range(0.1..10.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(0.1..10.0),
        )
    }

    #[test]
    fn advection_flux_is_identity_and_linear() {
        let law = ConservationLaw::Advection1;
        let mut out = [0.0];
        law.flux(&[0.0], 0, &mut out).unwrap();
        assert_eq!(out[0], 0.0);
        law.flux(&[1.2], 0, &mut out).unwrap();
        assert_eq!(out[0], 1.2);
        let (a, b) = (0.7, -0.4);
        let mut fa = [0.0];
        let mut fb = [0.0];
        let mut fab = [0.0];
        law.flux(&[a], 0, &mut fa).unwrap();
        law.flux(&[b], 0, &mut fb).unwrap();
        law.flux(&[a + b], 0, &mut fab).unwrap();
        assert_abs_diff_eq!(fab[0], fa[0] + fb[0], epsilon = 1e-15);
    }

    #[test]
    fn euler_flux_examples() {
        let law = ConservationLaw::euler_1d();
        let mut out = [0.0; 3];

        let stagnant = EulerPrim::new_1d(1.0, 0.0, 1.0).to_cons_1d(1.4);
        law.flux(&stagnant, 0, &mut out).unwrap();
        assert_abs_diff_eq!(out[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[2], 0.0, epsilon = 1e-15);

        // Sod left and right states.
        let left = EulerPrim::new_1d(1.0, 0.0, 1.0).to_cons_1d(1.4);
        let right = EulerPrim::new_1d(0.125, 0.0, 0.1).to_cons_1d(1.4);
        law.flux(&left, 0, &mut out).unwrap();
        assert_abs_diff_eq!(out[1], 1.0, epsilon = 1e-15);
        law.flux(&right, 0, &mut out).unwrap();
        assert_abs_diff_eq!(out[1], 0.1, epsilon = 1e-15);

        // y-flux with V = 0 carries only the pressure term.
        let law2 = ConservationLaw::euler_2d();
        let state = EulerPrim::new_2d(1.3, 0.8, 0.0, 2.0).to_cons_2d(1.4);
        let mut out4 = [0.0; 4];
        law2.flux(&state, 1, &mut out4).unwrap();
        assert_abs_diff_eq!(out4[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out4[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out4[2], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out4[3], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn flux_rejects_invalid_states() {
        let law = ConservationLaw::euler_1d();
        let mut out = [0.0; 3];
        assert!(law.flux(&[-1.0, 0.0, 1.0], 0, &mut out).is_err());
        // Negative pressure: E below kinetic energy.
        assert!(law.flux(&[1.0, 2.0, 1.0], 0, &mut out).is_err());
    }

    #[test]
    fn wavespeed_examples() {
        let law = ConservationLaw::euler_1d();
        let u = EulerPrim::new_1d(1.0, 0.0, 1.0).to_cons_1d(1.4);
        assert_abs_diff_eq!(
            law.max_wavespeed(&u, 0).unwrap(),
            1.4f64.sqrt(),
            epsilon = 1e-14
        );
        assert_eq!(
            ConservationLaw::Advection1.max_wavespeed(&[0.3], 0).unwrap(),
            1.0
        );

        // c scales as sqrt(p) at fixed rho, u = 0.
        let u4 = EulerPrim::new_1d(1.0, 0.0, 4.0).to_cons_1d(1.4);
        assert_abs_diff_eq!(
            law.max_wavespeed(&u4, 0).unwrap(),
            2.0 * law.max_wavespeed(&u, 0).unwrap(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn roe_average_fixed_points() {
        let law = ConservationLaw::euler_1d();
        let gamma = 1.4;
        let state = EulerPrim::new_1d(1.7, 0.6, 2.2).to_cons_1d(gamma);
        let mut out = [0.0; 3];
        law.roe_average(&state, &state, &mut out).unwrap();
        for s in 0..3 {
            assert_abs_diff_eq!(out[s], state[s], epsilon = 1e-13);
        }

        // rho 1 and 4 with equal velocity: rho_hat = 2, u_hat = u.
        let vel = 0.9;
        let left = EulerPrim::new_1d(1.0, vel, 1.0).to_cons_1d(gamma);
        let right = EulerPrim::new_1d(4.0, vel, 1.0).to_cons_1d(gamma);
        law.roe_average(&left, &right, &mut out).unwrap();
        assert_abs_diff_eq!(out[0], 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(out[1] / out[0], vel, epsilon = 1e-13);
    }

    /// The Roe matrix property: `F(U_R) - F(U_L) = A(U_hat) (U_R - U_L)`
    /// with `A = R Lambda R^{-1}` assembled at the Roe mean.
    #[test]
    fn roe_matrix_property_random_pairs() {
        let law = ConservationLaw::euler_1d();
        let gamma = 1.4;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let left = random_prim_1d(&mut rng).to_cons_1d(gamma);
            let right = random_prim_1d(&mut rng).to_cons_1d(gamma);
            let mut mean = [0.0; 3];
            law.roe_average(&left, &right, &mut mean).unwrap();
            let mut r = [0.0; 9];
            let mut rinv = [0.0; 9];
            law.eig_matrices(&mean, [1.0, 0.0], &mut r, &mut rinv).unwrap();
            let c = (gamma * law.pressure(&mean).unwrap() / mean[0]).sqrt();
            let vel = mean[1] / mean[0];
            let lambda = [vel - c, vel, vel + c];

            let du = [right[0] - left[0], right[1] - left[1], right[2] - left[2]];
            let mut w = [0.0; 3];
            to_characteristic(&rinv, &du, &mut w);
            let mut adu = [0.0; 3];
            for row in 0..3 {
                for col in 0..3 {
                    adu[row] += r[row * 3 + col] * lambda[col] * w[col];
                }
            }
            let mut fl = [0.0; 3];
            let mut fr = [0.0; 3];
            law.flux(&left, 0, &mut fl).unwrap();
            law.flux(&right, 0, &mut fr).unwrap();
            let scale = adu
                .iter()
                .chain(fl.iter())
                .fold(1.0f64, |m, v| m.max(v.abs()));
            for s in 0..3 {
                assert!(
                    ((fr[s] - fl[s]) - adu[s]).abs() <= 1e-10 * scale,
                    "component {s}: {} vs {}",
                    fr[s] - fl[s],
                    adu[s]
                );
            }
        }
    }

    #[test]
    fn eigen_inverse_and_jacobian_1d() {
        let law = ConservationLaw::euler_1d();
        let gamma = 1.4;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let u = random_prim_1d(&mut rng).to_cons_1d(gamma);
            let mut r = [0.0; 9];
            let mut rinv = [0.0; 9];
            law.eig_matrices(&u, [1.0, 0.0], &mut r, &mut rinv).unwrap();
            // R * R^{-1} = I.
            for a in 0..3 {
                for b in 0..3 {
                    let mut acc = 0.0;
                    for c in 0..3 {
                        acc += r[a * 3 + c] * rinv[c * 3 + b];
                    }
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(acc, expect, epsilon = 1e-12);
                }
            }
            // A R = R Lambda with A from finite differences of the flux.
            let c = (gamma * law.pressure(&u).unwrap() / u[0]).sqrt();
            let vel = u[1] / u[0];
            let lambda = [vel - c, vel, vel + c];
            let eps = 1e-7;
            let mut jac = [0.0; 9];
            for col in 0..3 {
                let mut up = u;
                let mut dn = u;
                up[col] += eps;
                dn[col] -= eps;
                let mut fp = [0.0; 3];
                let mut fm = [0.0; 3];
                law.flux(&up, 0, &mut fp).unwrap();
                law.flux(&dn, 0, &mut fm).unwrap();
                for row in 0..3 {
                    jac[row * 3 + col] = (fp[row] - fm[row]) / (2.0 * eps);
                }
            }
            for col in 0..3 {
                for row in 0..3 {
                    let mut ar = 0.0;
                    for c2 in 0..3 {
                        ar += jac[row * 3 + c2] * r[c2 * 3 + col];
                    }
                    let rl = r[row * 3 + col] * lambda[col];
                    assert!(
                        (ar - rl).abs() <= 1e-5 * (1.0 + rl.abs()),
                        "A R mismatch at ({row},{col}): {ar} vs {rl}"
                    );
                }
            }
        }
    }

    #[test]
    fn eigen_inverse_and_jacobian_2d() {
        let law = ConservationLaw::euler_2d();
        let gamma = 1.4;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for trial in 0..100 {
            let u = random_prim_2d(&mut rng).to_cons_2d(gamma);
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            // Include the axis-aligned normals used by the solver.
            let normal = match trial % 4 {
                0 => [1.0, 0.0],
                1 => [0.0, 1.0],
                _ => [theta.cos(), theta.sin()],
            };
            let mut r = [0.0; 16];
            let mut rinv = [0.0; 16];
            law.eig_matrices(&u, normal, &mut r, &mut rinv).unwrap();
            for a in 0..4 {
                for b in 0..4 {
                    let mut acc = 0.0;
                    for c in 0..4 {
                        acc += r[a * 4 + c] * rinv[c * 4 + b];
                    }
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(acc, expect, epsilon = 1e-11);
                }
            }
            // Directional Jacobian by finite differences.
            let c = (gamma * law.pressure(&u).unwrap() / u[0]).sqrt();
            let qn = (u[1] * normal[0] + u[2] * normal[1]) / u[0];
            let lambda = [qn - c, qn, qn, qn + c];
            let eps = 1e-7;
            let mut jac = [0.0; 16];
            for col in 0..4 {
                let mut up = u;
                let mut dn = u;
                up[col] += eps;
                dn[col] -= eps;
                let mut fp = [0.0; 4];
                let mut fm = [0.0; 4];
                let mut gp = [0.0; 4];
                let mut gm = [0.0; 4];
                law.flux(&up, 0, &mut fp).unwrap();
                law.flux(&dn, 0, &mut fm).unwrap();
                law.flux(&up, 1, &mut gp).unwrap();
                law.flux(&dn, 1, &mut gm).unwrap();
                for row in 0..4 {
                    jac[row * 4 + col] = normal[0] * (fp[row] - fm[row]) / (2.0 * eps)
                        + normal[1] * (gp[row] - gm[row]) / (2.0 * eps);
                }
            }
            for col in 0..4 {
                for row in 0..4 {
                    let mut ar = 0.0;
                    for c2 in 0..4 {
                        ar += jac[row * 4 + c2] * r[c2 * 4 + col];
                    }
                    let rl = r[row * 4 + col] * lambda[col];
                    assert!(
                        (ar - rl).abs() <= 1e-5 * (1.0 + rl.abs()),
                        "A R mismatch at ({row},{col}): {ar} vs {rl}"
                    );
                }
            }
        }
    }

    #[test]
    fn characteristic_round_trip() {
        let law = ConservationLaw::euler_2d();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let u = random_prim_2d(&mut rng).to_cons_2d(1.4);
        let mut r = [0.0; 16];
        let mut rinv = [0.0; 16];
        law.eig_matrices(&u, [0.6, 0.8], &mut r, &mut rinv).unwrap();
        let vals = [0.3, -1.2, 0.5, 2.0];
        let mut w = [0.0; 4];
        let mut back = [0.0; 4];
        to_characteristic(&rinv, &vals, &mut w);
        to_characteristic(&r, &w, &mut back);
        for s in 0..4 {
            assert_abs_diff_eq!(back[s], vals[s], epsilon = 1e-12);
        }

        // Scalar case: identity.
        let scalar = ConservationLaw::Advection1;
        let mut r1 = [0.0];
        let mut ri1 = [0.0];
        scalar
            .eig_matrices(&[0.7], [1.0, 0.0], &mut r1, &mut ri1)
            .unwrap();
        assert_eq!(r1[0], 1.0);
        assert_eq!(ri1[0], 1.0);
    }
}
