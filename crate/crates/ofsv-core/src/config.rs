//! Run configuration files and the initial-condition registry.
//!
//! A configuration is one JSON document with sections
//! `{law, discretization, mesh, time, boundary, initial, output}`; every
//! shipped benchmark preset is such a file.

use crate::basis::{Discretization1, Discretization2, SolutionState};
use crate::geometry::{CvFamily, CvLayout, Mesh1D, Mesh2D};
use crate::numflux::FluxKind;
use crate::physics::{ConservationLaw, EulerPrim, DEFAULT_GAMMA};
use crate::solver::{BcSide, RunSetup, System, System1, System2};
use crate::timeint::{Integrator, StepControl};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LawSection {
    /// One of `advection1d`, `advection2d`, `euler1d`, `euler2d`.
    pub id: String,
    #[serde(default)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscretizationSection {
    pub degree: usize,
    #[serde(default = "default_family")]
    pub family: CvFamily,
    /// Defaults to HLLC for Euler, exact upwind for scalar advection.
    #[serde(default)]
    pub flux: Option<FluxKind>,
    #[serde(default = "default_true")]
    pub damping: bool,
    /// Optional density/pressure floor (off by default).
    #[serde(default)]
    pub positivity_floor: Option<f64>,
}

fn default_family() -> CvFamily {
    CvFamily::GaussLegendre
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshSection {
    /// Domain extent along x: `[a, b]`.
    pub x: [f64; 2],
    pub nx: usize,
    #[serde(default)]
    pub y: Option<[f64; 2]>,
    #[serde(default)]
    pub ny: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeSection {
    pub t_final: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_integrator")]
    pub integrator: Integrator,
    #[serde(default)]
    pub fixed_dt: Option<f64>,
    #[serde(default)]
    pub dt_exponent: Option<f64>,
}

fn default_cfl() -> f64 {
    0.4
}

fn default_integrator() -> Integrator {
    Integrator::Rk4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundarySection {
    #[serde(default = "default_bc")]
    pub x_min: BcSide,
    #[serde(default = "default_bc")]
    pub x_max: BcSide,
    #[serde(default)]
    pub y_min: Option<BcSide>,
    #[serde(default)]
    pub y_max: Option<BcSide>,
}

fn default_bc() -> BcSide {
    BcSide::Periodic
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialSection {
    pub id: String,
    /// `interpolate` (smooth data) or `average` (discontinuous data);
    /// defaults per initial condition.
    #[serde(default)]
    pub mode: Option<InitMode>,
    #[serde(default)]
    pub quad_points: Option<usize>,
    #[serde(default)]
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    Interpolate,
    Average,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub prefix: Option<String>,
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub law: LawSection,
    pub discretization: DiscretizationSection,
    pub mesh: MeshSection,
    pub time: TimeSection,
    pub boundary: BoundarySection,
    pub initial: InitialSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn law(&self) -> Result<ConservationLaw, ConfigError> {
        let gamma = self.law.gamma.unwrap_or(DEFAULT_GAMMA);
        if !(gamma > 1.0) {
            return Err(invalid(format!("gamma must exceed 1, got {gamma}")));
        }
        match self.law.id.as_str() {
            "advection1d" => Ok(ConservationLaw::Advection1),
            "advection2d" => Ok(ConservationLaw::Advection2),
            "euler1d" => Ok(ConservationLaw::Euler1 { gamma }),
            "euler2d" => Ok(ConservationLaw::Euler2 { gamma }),
            other => Err(invalid(format!("unknown law id '{other}'"))),
        }
    }

    fn flux(&self, law: &ConservationLaw) -> FluxKind {
        self.discretization.flux.unwrap_or(if law.is_euler() {
            FluxKind::Hllc
        } else {
            FluxKind::Upwind
        })
    }

    fn validate(&self, law: &ConservationLaw) -> Result<(), ConfigError> {
        if self.discretization.damping && self.discretization.degree == 0 {
            return Err(invalid("damping requires degree >= 1"));
        }
        if self.mesh.nx == 0 {
            return Err(invalid("mesh.nx must be at least 1"));
        }
        if law.dim() == 2 {
            if self.mesh.y.is_none() || self.mesh.ny.is_none() {
                return Err(invalid("2D laws need mesh.y and mesh.ny"));
            }
            if self.boundary.y_min.is_none() || self.boundary.y_max.is_none() {
                return Err(invalid("2D laws need boundary.y_min and boundary.y_max"));
            }
        }
        if !(self.time.t_final >= 0.0) || !(self.time.cfl > 0.0) {
            return Err(invalid("time.t_final must be >= 0 and time.cfl > 0"));
        }
        if matches!(self.flux(law), FluxKind::Upwind) && law.is_euler() {
            return Err(invalid("upwind flux applies to scalar advection only"));
        }
        Ok(())
    }

    /// Builds the system and initial state this configuration describes.
    pub fn build(&self) -> Result<RunSetup, ConfigError> {
        let law = self.law()?;
        self.validate(&law)?;
        let k = self.discretization.degree;
        let layout = CvLayout::new(k, self.discretization.family)
            .map_err(|e| invalid(e.to_string()))?;
        let flux = self.flux(&law);
        let initial = InitialCondition::from_section(&self.initial, &law)?;
        let mode = self.initial.mode.unwrap_or(initial.default_mode);
        let quad = self
            .initial
            .quad_points
            .unwrap_or_else(|| (k + 2).max(6))
            .max(k + 2);

        let (system, state) = match law.dim() {
            1 => {
                let mesh = Mesh1D::uniform(self.mesh.x[0], self.mesh.x[1], self.mesh.nx)
                    .map_err(|e| invalid(e.to_string()))?;
                let disc = Discretization1::new(mesh, layout, law.n_comp());
                let f = &initial.field;
                let state = match mode {
                    InitMode::Interpolate => disc.interpolate_initial(|x, out| f(x, 0.0, out)),
                    InitMode::Average => disc.average_initial(|x, out| f(x, 0.0, out), quad),
                };
                let sys = System1::new(
                    disc,
                    law,
                    flux,
                    self.discretization.damping,
                    (self.boundary.x_min.clone(), self.boundary.x_max.clone()),
                )
                .map_err(|e| invalid(e.to_string()))?;
                (System::One(Box::new(sys)), state)
            }
            _ => {
                let y = self.mesh.y.unwrap();
                let ny = self.mesh.ny.unwrap();
                let mesh = Mesh2D::uniform(
                    (self.mesh.x[0], self.mesh.x[1]),
                    (y[0], y[1]),
                    self.mesh.nx,
                    ny,
                )
                .map_err(|e| invalid(e.to_string()))?;
                let disc = Discretization2::new(mesh, layout, law.n_comp());
                let f = &initial.field;
                let state = match mode {
                    InitMode::Interpolate => disc.interpolate_initial(|x, y, out| f(x, y, out)),
                    InitMode::Average => disc.average_initial(|x, y, out| f(x, y, out), quad),
                };
                let sys = System2::new(
                    disc,
                    law,
                    flux,
                    self.discretization.damping,
                    (
                        self.boundary.x_min.clone(),
                        self.boundary.x_max.clone(),
                        self.boundary.y_min.clone().unwrap(),
                        self.boundary.y_max.clone().unwrap(),
                    ),
                )
                .map_err(|e| invalid(e.to_string()))?;
                (System::Two(Box::new(sys)), state)
            }
        };

        let mut ctrl = StepControl::new(self.time.cfl, self.time.t_final);
        ctrl.fixed_dt = self.time.fixed_dt;
        ctrl.dt_exponent = self.time.dt_exponent;
        let mut setup = RunSetup::new(system, state, ctrl);
        setup.integrator = self.time.integrator;
        setup.snapshot_times = self.output.snapshots.clone();
        setup.positivity_floor = self.discretization.positivity_floor;
        Ok(setup)
    }

    /// A copy with a different mesh resolution (2D meshes scale both axes by
    /// the same factor, keeping the aspect ratio of the preset).
    pub fn with_resolution(&self, nx: usize) -> Self {
        let mut out = self.clone();
        if let Some(ny) = out.mesh.ny {
            let scaled = (ny as f64 * nx as f64 / out.mesh.nx as f64).round() as usize;
            out.mesh.ny = Some(scaled.max(1));
        }
        out.mesh.nx = nx;
        out
    }

    /// The exact solution field at time `t` for the smooth accuracy presets;
    /// `None` for benchmark problems without a closed form.
    pub fn exact_solution(&self, t: f64) -> Option<SpaceField> {
        let initial = InitialCondition::from_section(&self.initial, &self.law().ok()?).ok()?;
        initial.exact.map(|make| make(t))
    }
}

/// A conservative-variable field sampled in space.
pub type SpaceField = Box<dyn Fn(f64, f64, &mut [f64]) + Send + Sync>;
type ExactFactory = Box<dyn Fn(f64) -> SpaceField + Send + Sync>;

/// A registered initial condition: the sampled field, its preferred
/// initialization mode, and (for accuracy problems) the exact solution.
pub struct InitialCondition {
    pub field: SpaceField,
    pub default_mode: InitMode,
    exact: Option<ExactFactory>,
}

fn param_f64(params: &serde_json::Value, key: &str, default: f64) -> f64 {
    params.get(key).and_then(|v| v.as_f64()).unwrap_or(default)
}

impl InitialCondition {
    pub fn from_section(
        section: &InitialSection,
        law: &ConservationLaw,
    ) -> Result<Self, ConfigError> {
        let gamma = law.gamma();
        let params = &section.params;
        let require = |expected: &str| -> Result<(), ConfigError> {
            if law.label() != expected {
                Err(invalid(format!(
                    "initial condition '{}' needs law '{expected}', got '{}'",
                    section.id,
                    law.label()
                )))
            } else {
                Ok(())
            }
        };

        match section.id.as_str() {
            "constant" => {
                let state: Vec<f64> = params
                    .get("state")
                    .and_then(|v| serde_json::from_value(v.clone()).ok())
                    .ok_or_else(|| invalid("'constant' needs params.state"))?;
                if state.len() != law.n_comp() {
                    return Err(invalid("params.state has the wrong component count"));
                }
                Ok(Self {
                    field: Box::new(move |_x, _y, out| out.copy_from_slice(&state)),
                    default_mode: InitMode::Interpolate,
                    exact: None,
                })
            }
            "sine1d" => {
                require("advection1d")?;
                let offset = param_f64(params, "offset", 1.0);
                let amplitude = param_f64(params, "amplitude", 0.2);
                let wavenumber = param_f64(params, "wavenumber", 1.0);
                let profile = move |x: f64, t: f64| offset + amplitude * (wavenumber * PI * (x - t)).sin();
                Ok(Self {
                    field: Box::new(move |x, _y, out| out[0] = profile(x, 0.0)),
                    default_mode: InitMode::Interpolate,
                    exact: Some(Box::new(move |t| {
                        Box::new(move |x, _y, out| out[0] = profile(x, t))
                    })),
                })
            }
            "density_wave2d" => {
                require("euler2d")?;
                let amplitude = param_f64(params, "amplitude", 0.2);
                let field_at = move |x: f64, y: f64, t: f64, out: &mut [f64]| {
                    let rho = 1.0 + amplitude * (PI * (x + y - 2.0 * t)).sin();
                    out.copy_from_slice(&EulerPrim::new_2d(rho, 1.0, 1.0, 1.0).to_cons_2d(gamma));
                };
                Ok(Self {
                    field: Box::new(move |x, y, out| field_at(x, y, 0.0, out)),
                    default_mode: InitMode::Interpolate,
                    exact: Some(Box::new(move |t| {
                        Box::new(move |x, y, out| field_at(x, y, t, out))
                    })),
                })
            }
            "sod" => {
                require("euler1d")?;
                Ok(Self::riemann1d(
                    EulerPrim::new_1d(1.0, 0.0, 1.0),
                    EulerPrim::new_1d(0.125, 0.0, 0.1),
                    0.5,
                    gamma,
                ))
            }
            "lax" => {
                require("euler1d")?;
                Ok(Self::riemann1d(
                    EulerPrim::new_1d(0.445, 0.698, 3.528),
                    EulerPrim::new_1d(0.5, 0.0, 0.571),
                    0.5,
                    gamma,
                ))
            }
            "riemann1d" => {
                require("euler1d")?;
                let get = |key: &str| -> Result<[f64; 3], ConfigError> {
                    params
                        .get(key)
                        .and_then(|v| serde_json::from_value(v.clone()).ok())
                        .ok_or_else(|| invalid(format!("'riemann1d' needs params.{key} = [rho, u, p]")))
                };
                let l = get("left")?;
                let r = get("right")?;
                Ok(Self::riemann1d(
                    EulerPrim::new_1d(l[0], l[1], l[2]),
                    EulerPrim::new_1d(r[0], r[1], r[2]),
                    param_f64(params, "x0", 0.5),
                    gamma,
                ))
            }
            "shu_osher" => {
                require("euler1d")?;
                Ok(Self {
                    field: Box::new(move |x, _y, out| {
                        let prim = if x <= -4.0 {
                            EulerPrim::new_1d(3.857134, 2.629369, 10.33333)
                        } else {
                            EulerPrim::new_1d(1.0 + 0.2 * (5.0 * x).sin(), 0.0, 1.0)
                        };
                        out.copy_from_slice(&prim.to_cons_1d(gamma));
                    }),
                    default_mode: InitMode::Average,
                    exact: None,
                })
            }
            "titarev_toro" => {
                require("euler1d")?;
                Ok(Self {
                    field: Box::new(move |x, _y, out| {
                        let prim = if x <= -4.5 {
                            EulerPrim::new_1d(1.515695, 0.523346, 1.805)
                        } else {
                            EulerPrim::new_1d(1.0 + 0.1 * (20.0 * PI * x).sin(), 0.0, 1.0)
                        };
                        out.copy_from_slice(&prim.to_cons_1d(gamma));
                    }),
                    default_mode: InitMode::Average,
                    exact: None,
                })
            }
            "riemann2d_a" => {
                require("euler2d")?;
                // Four shocks meeting at (0.5, 0.5).
                let q = [
                    EulerPrim::new_2d(1.5, 0.0, 0.0, 1.5),          // x>0.5, y>0.5
                    EulerPrim::new_2d(0.5323, 1.206, 0.0, 0.3),     // x<0.5, y>0.5
                    EulerPrim::new_2d(0.138, 1.206, 1.206, 0.029),  // x<0.5, y<0.5
                    EulerPrim::new_2d(0.5323, 0.0, 1.206, 0.3),     // x>0.5, y<0.5
                ];
                Ok(Self::quadrants(q, gamma))
            }
            "riemann2d_b" => {
                require("euler2d")?;
                // Two contacts and two rarefactions.
                let q = [
                    EulerPrim::new_2d(1.0, 0.1, 0.1, 1.0),
                    EulerPrim::new_2d(0.5197, -0.6259, 0.1, 0.4),
                    EulerPrim::new_2d(0.8, 0.1, 0.1, 0.4),
                    EulerPrim::new_2d(0.5197, 0.1, -0.6259, 0.4),
                ];
                Ok(Self::quadrants(q, gamma))
            }
            "shock_vortex" => {
                require("euler2d")?;
                let kappa = param_f64(params, "kappa", 0.3);
                let mu = param_f64(params, "mu", 0.204);
                let rc = param_f64(params, "rc", 0.05);
                let mach = param_f64(params, "mach", 1.1);
                let x_shock = param_f64(params, "x_shock", 0.5);
                let xc = param_f64(params, "xc", 0.25);
                let yc = param_f64(params, "yc", 0.5);
                // Stationary normal shock: upstream (Ma^2, sqrt(gamma), 0, 1).
                let up = EulerPrim::new_2d(mach * mach, gamma.sqrt(), 0.0, 1.0);
                let p2 = up.p * (1.0 + 2.0 * gamma / (gamma + 1.0) * (mach * mach - 1.0));
                let rho2 =
                    up.rho * ((gamma + 1.0) * mach * mach) / ((gamma - 1.0) * mach * mach + 2.0);
                let u2 = up.u * up.rho / rho2;
                let down = EulerPrim::new_2d(rho2, u2, 0.0, p2);
                Ok(Self {
                    field: Box::new(move |x, y, out| {
                        let prim = if x < x_shock {
                            // Superpose the isentropic vortex on the upstream flow.
                            let dx = x - xc;
                            let dy = y - yc;
                            let r = (dx * dx + dy * dy).sqrt();
                            let eta = r / rc;
                            let theta = dy.atan2(dx);
                            let gain = kappa * eta * (mu * (1.0 - eta * eta)).exp();
                            let du = gain * theta.sin();
                            let dv = -gain * theta.cos();
                            let dtemp = -(gamma - 1.0) * kappa * kappa
                                / (4.0 * mu * gamma)
                                * (2.0 * mu * (1.0 - eta * eta)).exp();
                            let temp = up.p / up.rho + dtemp;
                            let entropy = up.p / up.rho.powf(gamma);
                            let rho = (temp / entropy).powf(1.0 / (gamma - 1.0));
                            EulerPrim::new_2d(rho, up.u + du, dv, temp * rho)
                        } else {
                            down
                        };
                        out.copy_from_slice(&prim.to_cons_2d(gamma));
                    }),
                    default_mode: InitMode::Average,
                    exact: None,
                })
            }
            "double_mach" => {
                require("euler2d")?;
                Ok(Self {
                    field: Box::new(move |x, y, out| {
                        let post = x < 1.0 / 6.0 + y / 3.0f64.sqrt();
                        let state = if post {
                            crate::solver::double_mach_post_shock(gamma)
                        } else {
                            crate::solver::double_mach_pre_shock(gamma)
                        };
                        out.copy_from_slice(&state);
                    }),
                    default_mode: InitMode::Average,
                    exact: None,
                })
            }
            other => Err(invalid(format!("unknown initial condition id '{other}'"))),
        }
    }

    fn riemann1d(left: EulerPrim, right: EulerPrim, x0: f64, gamma: f64) -> Self {
        Self {
            field: Box::new(move |x, _y, out| {
                let prim = if x < x0 { left } else { right };
                out.copy_from_slice(&prim.to_cons_1d(gamma));
            }),
            default_mode: InitMode::Average,
            exact: None,
        }
    }

    fn quadrants(q: [EulerPrim; 4], gamma: f64) -> Self {
        Self {
            field: Box::new(move |x, y, out| {
                let prim = match (x > 0.5, y > 0.5) {
                    (true, true) => q[0],
                    (false, true) => q[1],
                    (false, false) => q[2],
                    (true, false) => q[3],
                };
                out.copy_from_slice(&prim.to_cons_2d(gamma));
            }),
            default_mode: InitMode::Average,
            exact: None,
        }
    }
}

/// The solution state produced by this configuration's initializer, without
/// running; convenient for tests and tooling.
pub fn initial_state(config: &RunConfig) -> Result<SolutionState, ConfigError> {
    Ok(config.build()?.initial)
}
