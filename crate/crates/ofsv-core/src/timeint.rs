//! Explicit Runge-Kutta integrators and damping-aware CFL time-step control.

use serde::{Deserialize, Serialize};

/// Time-step control: `dt = CFL * dx_min / (alpha + a0)`, optionally scaled
/// by `dx_min^(q-1)` in accuracy-study mode so temporal error drops below
/// the spatial error, or pinned to a fixed value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepControl {
    pub cfl: f64,
    pub t_final: f64,
    #[serde(default)]
    pub fixed_dt: Option<f64>,
    /// Accuracy-study exponent `q`: `dt ∝ dx^q` (default off, i.e. `q = 1`).
    #[serde(default)]
    pub dt_exponent: Option<f64>,
}

impl StepControl {
    pub fn new(cfl: f64, t_final: f64) -> Self {
        assert!(cfl > 0.0 && t_final >= 0.0);
        Self {
            cfl,
            t_final,
            fixed_dt: None,
            dt_exponent: None,
        }
    }

    fn accuracy_scale(&self, dx_min: f64) -> f64 {
        match self.dt_exponent {
            Some(q) => dx_min.powf(q - 1.0),
            None => 1.0,
        }
    }

    fn clamp_to_final(&self, dt: f64, t: f64, t_stop: f64) -> f64 {
        let remaining = t_stop.min(self.t_final) - t;
        if dt >= remaining {
            remaining
        } else {
            dt
        }
    }

    /// 1D step size; `alpha` is the largest interface wavespeed and `a0` the
    /// damping contribution. Zero total speed returns the remaining time.
    pub fn compute_dt_1d(&self, alpha: f64, a0: f64, dx_min: f64, t: f64, t_stop: f64) -> f64 {
        if let Some(dt) = self.fixed_dt {
            return self.clamp_to_final(dt, t, t_stop);
        }
        let speed = alpha + a0;
        if speed <= 0.0 {
            return self.clamp_to_final(f64::INFINITY, t, t_stop);
        }
        let dt = self.cfl * dx_min / speed * self.accuracy_scale(dx_min);
        self.clamp_to_final(dt, t, t_stop)
    }

    /// 2D step size: `dt = CFL / (ax/dx + ay/dy + a0/min(dx, dy))`.
    #[allow(clippy::too_many_arguments)]
    pub fn compute_dt_2d(
        &self,
        alpha_x: f64,
        alpha_y: f64,
        dx: f64,
        dy: f64,
        a0: f64,
        t: f64,
        t_stop: f64,
    ) -> f64 {
        if let Some(dt) = self.fixed_dt {
            return self.clamp_to_final(dt, t, t_stop);
        }
        let dmin = dx.min(dy);
        let denom = alpha_x / dx + alpha_y / dy + a0 / dmin;
        if denom <= 0.0 {
            return self.clamp_to_final(f64::INFINITY, t, t_stop);
        }
        let dt = self.cfl / denom * self.accuracy_scale(dmin);
        self.clamp_to_final(dt, t, t_stop)
    }
}

/// Available explicit integrators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Rk4,
    SspRk3,
}

impl Integrator {
    pub fn n_stages(&self) -> usize {
        match self {
            Self::Rk4 => 4,
            Self::SspRk3 => 3,
        }
    }

    /// Stage abscissae `c_i` (times at which the residual is evaluated).
    pub fn stage_times(&self) -> &'static [f64] {
        match self {
            Self::Rk4 => &[0.0, 0.5, 0.5, 1.0],
            Self::SspRk3 => &[0.0, 1.0, 0.5],
        }
    }
}

/// Scratch buffers for stepping; sized to the flat state length.
#[derive(Debug, Clone)]
pub struct StageBuffers {
    pub rate: Vec<f64>,
    pub stage: Vec<f64>,
    pub acc: Vec<f64>,
}

impl StageBuffers {
    pub fn new(n: usize) -> Self {
        Self {
            rate: vec![0.0; n],
            stage: vec![0.0; n],
            acc: vec![0.0; n],
        }
    }
}

/// Classical 4-stage Runge-Kutta step.
///
/// `k1` must already hold the residual at `(u, t)`; the remaining stages are
/// produced through `f(state, stage_time, rate_out)`.
pub fn rk4_step<E, F>(
    u: &mut [f64],
    t: f64,
    dt: f64,
    k1: &[f64],
    mut f: F,
    buf: &mut StageBuffers,
) -> Result<(), E>
where
    F: FnMut(&[f64], f64, &mut [f64]) -> Result<(), E>,
{
    let n = u.len();
    // acc accumulates dt/6 * (k1 + 2 k2 + 2 k3 + k4).
    for i in 0..n {
        buf.acc[i] = k1[i];
        buf.stage[i] = u[i] + 0.5 * dt * k1[i];
    }
    f(&buf.stage, t + 0.5 * dt, &mut buf.rate)?; // k2
    for i in 0..n {
        buf.acc[i] += 2.0 * buf.rate[i];
        buf.stage[i] = u[i] + 0.5 * dt * buf.rate[i];
    }
    f(&buf.stage, t + 0.5 * dt, &mut buf.rate)?; // k3
    for i in 0..n {
        buf.acc[i] += 2.0 * buf.rate[i];
        buf.stage[i] = u[i] + dt * buf.rate[i];
    }
    f(&buf.stage, t + dt, &mut buf.rate)?; // k4
    for i in 0..n {
        u[i] += dt / 6.0 * (buf.acc[i] + buf.rate[i]);
    }
    Ok(())
}

/// Three-stage strong-stability-preserving Runge-Kutta step (convex
/// combinations of forward-Euler substeps).
pub fn ssprk3_step<E, F>(
    u: &mut [f64],
    t: f64,
    dt: f64,
    k1: &[f64],
    mut f: F,
    buf: &mut StageBuffers,
) -> Result<(), E>
where
    F: FnMut(&[f64], f64, &mut [f64]) -> Result<(), E>,
{
    let n = u.len();
    for i in 0..n {
        buf.stage[i] = u[i] + dt * k1[i];
    }
    f(&buf.stage, t + dt, &mut buf.rate)?;
    for i in 0..n {
        buf.stage[i] = 0.75 * u[i] + 0.25 * (buf.stage[i] + dt * buf.rate[i]);
    }
    f(&buf.stage, t + 0.5 * dt, &mut buf.rate)?;
    for i in 0..n {
        u[i] = u[i] / 3.0 + 2.0 / 3.0 * (buf.stage[i] + dt * buf.rate[i]);
    }
    Ok(())
}
