//! Modal Legendre representation per spectral volume.
//!
//! The evolved degrees of freedom are control-volume averages. Each residual
//! evaluation reconstructs, per SV, the unique degree-`k` polynomial (tensor
//! polynomial in 2D) with those CV averages; everything downstream (traces,
//! derivative jumps, damping moments) reads the modal coefficients.

use crate::geometry::{CvLayout, Mesh1D, Mesh2D};
use crate::legendre;

/// CV averages of all components on the dual partition, plus the time they
/// belong to.
///
/// 1D layout: `data[(sv * (k+1) + cv) * n_comp + comp]`.
/// 2D layout: `sv = iy * nx + ix`, `cv = jy * (k+1) + jx`, same indexing.
#[derive(Debug, Clone)]
pub struct SolutionState {
    pub t: f64,
    pub n_comp: usize,
    pub data: Vec<f64>,
}

impl SolutionState {
    pub fn zeros(t: f64, n_comp: usize, n_dof: usize) -> Self {
        Self {
            t,
            n_comp,
            data: vec![0.0; n_dof],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Per-layout operator tables: CV averaging and its inverse, per-mode CV
/// integrals, and the interpolation solve used for smooth initial data.
///
/// `to_modal` is the exact inverse of the averaging operator: averaging the
/// reconstructed polynomial over each CV returns the input averages.
#[derive(Debug, Clone)]
pub struct ReconstructionOperator {
    pub degree: usize,
    /// `(k+1) x (k+1)`, row-major: `modal = to_modal * averages`.
    pub to_modal: Vec<f64>,
    /// Forward averaging matrix: `averages[j] = sum_m to_averages[j][m] c_m`.
    pub to_averages: Vec<f64>,
    /// `cv_integrals[m * (k+1) + j] = integral of L_m over reference CV j`.
    pub cv_integrals: Vec<f64>,
    /// Maps point values at the interpolation nodes (interior subdivision
    /// points plus the right SV edge) to modal coefficients.
    pub interp_to_modal: Vec<f64>,
    /// The interpolation nodes in reference coordinates.
    pub interp_nodes: Vec<f64>,
}

impl ReconstructionOperator {
    pub fn new(layout: &CvLayout) -> Self {
        let k = layout.degree;
        let n = k + 1;
        let mut cv_integrals = vec![0.0; n * n];
        let mut to_averages = vec![0.0; n * n];
        for m in 0..n {
            for j in 0..n {
                let integral = legendre::integral(m, layout.bounds[j], layout.bounds[j + 1]);
                cv_integrals[m * n + j] = integral;
                to_averages[j * n + m] = integral / layout.widths[j];
            }
        }
        let avg = nalgebra::DMatrix::from_row_slice(n, n, &to_averages);
        let to_modal_mat = avg
            .try_inverse()
            .expect("CV averaging matrix is nonsingular for distinct bounds");
        let to_modal = row_major(&to_modal_mat);

        let mut interp_nodes = layout.interior.clone();
        interp_nodes.push(1.0);
        let mut vand = nalgebra::DMatrix::zeros(n, n);
        for (q, &x) in interp_nodes.iter().enumerate() {
            let mut vals = vec![0.0; n];
            legendre::eval_all(x, &mut vals);
            for m in 0..n {
                vand[(q, m)] = vals[m];
            }
        }
        let interp_mat = vand
            .try_inverse()
            .expect("interpolation nodes are distinct");
        let interp_to_modal = row_major(&interp_mat);

        Self {
            degree: k,
            to_modal,
            to_averages,
            cv_integrals,
            interp_to_modal,
            interp_nodes,
        }
    }
}

fn row_major(m: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            out.push(m[(r, c)]);
        }
    }
    out
}

/// Reconstructs one SV: `averages` holds `(k+1) * n_comp` CV averages, the
/// modal coefficients land in `out` with the same interleaving.
pub fn reconstruct_sv_1d(
    op: &ReconstructionOperator,
    n_comp: usize,
    averages: &[f64],
    out: &mut [f64],
) {
    let n = op.degree + 1;
    for m in 0..n {
        let row = &op.to_modal[m * n..(m + 1) * n];
        for s in 0..n_comp {
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * averages[j * n_comp + s];
            }
            out[m * n_comp + s] = acc;
        }
    }
}

/// Reconstructs one 2D SV (tensor application of the 1D operator along x,
/// then along y). `averages` holds `(k+1)^2 * n_comp` values indexed
/// `(jy * (k+1) + jx) * n_comp + comp`; `out` gets modes
/// `(ny * (k+1) + mx) * n_comp + comp`.
pub fn reconstruct_sv_2d(
    op: &ReconstructionOperator,
    n_comp: usize,
    averages: &[f64],
    out: &mut [f64],
) {
    let n = op.degree + 1;
    let mut tmp = [0.0f64; 49]; // k <= 6
    for s in 0..n_comp {
        // x-transform per CV row.
        for jy in 0..n {
            for m in 0..n {
                let row = &op.to_modal[m * n..(m + 1) * n];
                let mut acc = 0.0;
                for jx in 0..n {
                    acc += row[jx] * averages[(jy * n + jx) * n_comp + s];
                }
                tmp[jy * n + m] = acc;
            }
        }
        // y-transform per x-mode.
        for ny in 0..n {
            let row = &op.to_modal[ny * n..(ny + 1) * n];
            for m in 0..n {
                let mut acc = 0.0;
                for jy in 0..n {
                    acc += row[jy] * tmp[jy * n + m];
                }
                out[(ny * n + m) * n_comp + s] = acc;
            }
        }
    }
}

/// Modal coefficients of every SV in a 1D field.
#[derive(Debug, Clone)]
pub struct ModalField1 {
    pub degree: usize,
    pub n_comp: usize,
    pub n_sv: usize,
    /// `data[(sv * (k+1) + mode) * n_comp + comp]`.
    pub data: Vec<f64>,
}

impl ModalField1 {
    pub fn zeros(degree: usize, n_comp: usize, n_sv: usize) -> Self {
        Self {
            degree,
            n_comp,
            n_sv,
            data: vec![0.0; n_sv * (degree + 1) * n_comp],
        }
    }

    pub fn coeffs(&self, sv: usize) -> &[f64] {
        let block = (self.degree + 1) * self.n_comp;
        &self.data[sv * block..(sv + 1) * block]
    }
}

/// Modal tensor coefficients of every SV in a 2D field.
#[derive(Debug, Clone)]
pub struct ModalField2 {
    pub degree: usize,
    pub n_comp: usize,
    pub n_sv: usize,
    /// `data[(sv * (k+1)^2 + (ny * (k+1) + mx)) * n_comp + comp]`.
    pub data: Vec<f64>,
}

impl ModalField2 {
    pub fn zeros(degree: usize, n_comp: usize, n_sv: usize) -> Self {
        let n = degree + 1;
        Self {
            degree,
            n_comp,
            n_sv,
            data: vec![0.0; n_sv * n * n * n_comp],
        }
    }

    pub fn coeffs(&self, sv: usize) -> &[f64] {
        let block = (self.degree + 1) * (self.degree + 1) * self.n_comp;
        &self.data[sv * block..(sv + 1) * block]
    }
}

/// Evaluates all components of a 1D modal coefficient block at `xi`.
pub fn eval_poly_1d(coeffs: &[f64], degree: usize, n_comp: usize, xi: f64, out: &mut [f64]) {
    let mut basis = [0.0f64; 8];
    legendre::eval_all(xi, &mut basis[..=degree]);
    for s in 0..n_comp {
        let mut acc = 0.0;
        for m in 0..=degree {
            acc += coeffs[m * n_comp + s] * basis[m];
        }
        out[s] = acc;
    }
}

/// Evaluates the order-`l` physical-space derivative of a 1D modal block at
/// `xi`; `h` is the SV extent, so the chain-rule factor is `(2/h)^l`.
pub fn eval_deriv_1d(
    coeffs: &[f64],
    degree: usize,
    n_comp: usize,
    h: f64,
    xi: f64,
    l: usize,
    out: &mut [f64],
) {
    let table = legendre::derivative_table(xi, degree, l);
    let row = &table[l * (degree + 1)..(l + 1) * (degree + 1)];
    let scale = (2.0 / h).powi(l as i32);
    for s in 0..n_comp {
        let mut acc = 0.0;
        for m in 0..=degree {
            acc += coeffs[m * n_comp + s] * row[m];
        }
        out[s] = acc * scale;
    }
}

/// Evaluates all components of a 2D modal tensor block at `(xi, eta)`.
pub fn eval_poly_2d(
    coeffs: &[f64],
    degree: usize,
    n_comp: usize,
    xi: f64,
    eta: f64,
    out: &mut [f64],
) {
    let n = degree + 1;
    let mut bx = [0.0f64; 8];
    let mut by = [0.0f64; 8];
    legendre::eval_all(xi, &mut bx[..n]);
    legendre::eval_all(eta, &mut by[..n]);
    for s in 0..n_comp {
        let mut acc = 0.0;
        for ny in 0..n {
            let mut inner = 0.0;
            for mx in 0..n {
                inner += coeffs[(ny * n + mx) * n_comp + s] * bx[mx];
            }
            acc += inner * by[ny];
        }
        out[s] = acc;
    }
}

/// Mixed physical derivative `d^{ax+ay} / dx^{ax} dy^{ay}` of a 2D modal
/// block at `(xi, eta)`.
pub fn eval_deriv_2d(
    coeffs: &[f64],
    degree: usize,
    n_comp: usize,
    (hx, hy): (f64, f64),
    xi: f64,
    eta: f64,
    (ax, ay): (usize, usize),
    out: &mut [f64],
) {
    let n = degree + 1;
    let tx = legendre::derivative_table(xi, degree, ax);
    let ty = legendre::derivative_table(eta, degree, ay);
    let rx = &tx[ax * n..(ax + 1) * n];
    let ry = &ty[ay * n..(ay + 1) * n];
    let scale = (2.0 / hx).powi(ax as i32) * (2.0 / hy).powi(ay as i32);
    for s in 0..n_comp {
        let mut acc = 0.0;
        for ny in 0..n {
            let mut inner = 0.0;
            for mx in 0..n {
                inner += coeffs[(ny * n + mx) * n_comp + s] * rx[mx];
            }
            acc += inner * ry[ny];
        }
        out[s] = acc * scale;
    }
}

/// A single-SV modal polynomial; mostly an API convenience for tests and
/// diagnostics, the solver works on [`ModalField1`]/[`ModalField2`] blocks.
#[derive(Debug, Clone)]
pub struct ModalPoly1 {
    pub degree: usize,
    pub n_comp: usize,
    /// Physical SV extent used for derivative scaling.
    pub extent: f64,
    pub coeffs: Vec<f64>,
}

impl ModalPoly1 {
    pub fn new(degree: usize, n_comp: usize, extent: f64, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), (degree + 1) * n_comp);
        Self {
            degree,
            n_comp,
            extent,
            coeffs,
        }
    }

    pub fn eval(&self, xi: f64, comp: usize) -> f64 {
        let mut out = vec![0.0; self.n_comp];
        eval_poly_1d(&self.coeffs, self.degree, self.n_comp, xi, &mut out);
        out[comp]
    }

    pub fn deriv(&self, xi: f64, l: usize, comp: usize) -> f64 {
        let mut out = vec![0.0; self.n_comp];
        eval_deriv_1d(
            &self.coeffs,
            self.degree,
            self.n_comp,
            self.extent,
            xi,
            l,
            &mut out,
        );
        out[comp]
    }
}

#[derive(Debug, Clone)]
pub struct ModalPoly2 {
    pub degree: usize,
    pub n_comp: usize,
    pub extent: (f64, f64),
    pub coeffs: Vec<f64>,
}

impl ModalPoly2 {
    pub fn new(degree: usize, n_comp: usize, extent: (f64, f64), coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), (degree + 1) * (degree + 1) * n_comp);
        Self {
            degree,
            n_comp,
            extent,
            coeffs,
        }
    }

    pub fn eval(&self, xi: f64, eta: f64, comp: usize) -> f64 {
        let mut out = vec![0.0; self.n_comp];
        eval_poly_2d(&self.coeffs, self.degree, self.n_comp, xi, eta, &mut out);
        out[comp]
    }
}

/// L2 projection onto polynomials of degree <= `level` (1D) or tensor modes
/// with `max(mx, ny) <= level` (2D). `level = -1` is treated as `level = 0`.
pub fn project_truncate_1d(poly: &ModalPoly1, level: isize) -> ModalPoly1 {
    let keep = level.max(0) as usize;
    let mut out = poly.clone();
    for m in 0..=poly.degree {
        if m > keep {
            for s in 0..poly.n_comp {
                out.coeffs[m * poly.n_comp + s] = 0.0;
            }
        }
    }
    out
}

pub fn project_truncate_2d(poly: &ModalPoly2, level: isize) -> ModalPoly2 {
    let keep = level.max(0) as usize;
    let n = poly.degree + 1;
    let mut out = poly.clone();
    for ny in 0..n {
        for mx in 0..n {
            if mx.max(ny) > keep {
                for s in 0..poly.n_comp {
                    out.coeffs[(ny * n + mx) * poly.n_comp + s] = 0.0;
                }
            }
        }
    }
    out
}

/// Exact integral of `p - P^{l-1} p` over reference CV `j`, scaled to the
/// physical CV (one value per component).
///
/// Deleting the projection leaves the modes of degree >= `max(l, 1)`, whose
/// CV integrals are tabulated in the reconstruction operator.
pub fn damping_moment_1d(
    poly: &ModalPoly1,
    op: &ReconstructionOperator,
    l: usize,
    j: usize,
    out: &mut [f64],
) {
    let n = poly.degree + 1;
    let lo = l.max(1);
    let scale = 0.5 * poly.extent;
    for s in 0..poly.n_comp {
        let mut acc = 0.0;
        for m in lo..n {
            acc += poly.coeffs[m * poly.n_comp + s] * op.cv_integrals[m * n + j];
        }
        out[s] = acc * scale;
    }
}

/// 2D analogue of [`damping_moment_1d`] for CV `(jx, jy)`.
pub fn damping_moment_2d(
    poly: &ModalPoly2,
    op: &ReconstructionOperator,
    l: usize,
    (jx, jy): (usize, usize),
    out: &mut [f64],
) {
    let n = poly.degree + 1;
    let lo = l.max(1);
    let scale = 0.25 * poly.extent.0 * poly.extent.1;
    for s in 0..poly.n_comp {
        let mut acc = 0.0;
        for ny in 0..n {
            for mx in 0..n {
                if mx.max(ny) >= lo {
                    acc += poly.coeffs[(ny * n + mx) * poly.n_comp + s]
                        * op.cv_integrals[mx * n + jx]
                        * op.cv_integrals[ny * n + jy];
                }
            }
        }
        out[s] = acc * scale;
    }
}

/// 1D discretization context: mesh, CV layout, and the operator tables.
#[derive(Debug, Clone)]
pub struct Discretization1 {
    pub mesh: Mesh1D,
    pub layout: CvLayout,
    pub op: ReconstructionOperator,
    pub n_comp: usize,
}

impl Discretization1 {
    pub fn new(mesh: Mesh1D, layout: CvLayout, n_comp: usize) -> Self {
        let op = ReconstructionOperator::new(&layout);
        Self {
            mesh,
            layout,
            op,
            n_comp,
        }
    }

    pub fn n_cv(&self) -> usize {
        self.layout.n_cv()
    }

    pub fn n_dof(&self) -> usize {
        self.mesh.n * self.n_cv() * self.n_comp
    }

    /// Physical width of CV `j` in SV `i`.
    pub fn cv_width(&self, i: usize, j: usize) -> f64 {
        0.5 * self.layout.widths[j] * self.mesh.h(i)
    }

    pub fn cv_center(&self, i: usize, j: usize) -> f64 {
        let mid = 0.5 * (self.layout.bounds[j] + self.layout.bounds[j + 1]);
        self.mesh.to_physical(i, mid)
    }

    pub fn reconstruct(&self, data: &[f64]) -> ModalField1 {
        let mut field = ModalField1::zeros(self.layout.degree, self.n_comp, self.mesh.n);
        self.reconstruct_into(data, &mut field);
        field
    }

    pub fn reconstruct_into(&self, data: &[f64], field: &mut ModalField1) {
        let block = self.n_cv() * self.n_comp;
        for i in 0..self.mesh.n {
            reconstruct_sv_1d(
                &self.op,
                self.n_comp,
                &data[i * block..(i + 1) * block],
                &mut field.data[i * block..(i + 1) * block],
            );
        }
    }

    /// Initializes by degree-`k` Lagrange interpolation at the interior
    /// subdivision points plus the right SV edge, storing the interpolant's
    /// exact CV averages.
    pub fn interpolate_initial<F: Fn(f64, &mut [f64])>(&self, f: F) -> SolutionState {
        let n = self.n_cv();
        let m = self.n_comp;
        let mut state = SolutionState::zeros(0.0, m, self.n_dof());
        let mut vals = vec![0.0; n * m];
        let mut modal = vec![0.0; n * m];
        for i in 0..self.mesh.n {
            for (q, &xi) in self.op.interp_nodes.iter().enumerate() {
                f(self.mesh.to_physical(i, xi), &mut vals[q * m..(q + 1) * m]);
            }
            for mode in 0..n {
                let row = &self.op.interp_to_modal[mode * n..(mode + 1) * n];
                for s in 0..m {
                    modal[mode * m + s] = (0..n).map(|q| row[q] * vals[q * m + s]).sum();
                }
            }
            for j in 0..n {
                let row = &self.op.to_averages[j * n..(j + 1) * n];
                for s in 0..m {
                    state.data[(i * n + j) * m + s] =
                        (0..n).map(|mode| row[mode] * modal[mode * m + s]).sum();
                }
            }
        }
        state
    }

    /// Initializes by per-CV Gauss quadrature of `f` with `quad_points`
    /// nodes; suited to discontinuous data.
    pub fn average_initial<F: Fn(f64, &mut [f64])>(
        &self,
        f: F,
        quad_points: usize,
    ) -> SolutionState {
        let rule = crate::geometry::QuadratureRule::gauss(quad_points)
            .expect("quadrature point count within supported range");
        let n = self.n_cv();
        let m = self.n_comp;
        let mut state = SolutionState::zeros(0.0, m, self.n_dof());
        let mut vals = vec![0.0; m];
        for i in 0..self.mesh.n {
            for j in 0..n {
                let xa = self.mesh.to_physical(i, self.layout.bounds[j]);
                let xb = self.mesh.to_physical(i, self.layout.bounds[j + 1]);
                let dst = &mut state.data[(i * n + j) * m..(i * n + j + 1) * m];
                for (&xq, &wq) in rule.nodes.iter().zip(&rule.weights) {
                    let x = 0.5 * (xa + xb) + 0.5 * (xb - xa) * xq;
                    f(x, &mut vals);
                    for s in 0..m {
                        dst[s] += 0.5 * wq * vals[s];
                    }
                }
            }
        }
        state
    }

    /// Volume mean of one component over SV `i`.
    pub fn sv_mean(&self, data: &[f64], i: usize, comp: usize) -> f64 {
        let n = self.n_cv();
        let mut acc = 0.0;
        for j in 0..n {
            acc += data[(i * n + j) * self.n_comp + comp] * self.layout.widths[j];
        }
        0.5 * acc
    }

    /// Mean conservative state over SV `i` (all components).
    pub fn sv_mean_state(&self, data: &[f64], i: usize, out: &mut [f64]) {
        for s in 0..self.n_comp {
            out[s] = self.sv_mean(data, i, s);
        }
    }

    pub fn total_mass(&self, data: &[f64], comp: usize) -> f64 {
        (0..self.mesh.n)
            .map(|i| self.sv_mean(data, i, comp) * self.mesh.h(i))
            .sum()
    }
}

/// 2D discretization context (tensor layout shared by both axes).
#[derive(Debug, Clone)]
pub struct Discretization2 {
    pub mesh: Mesh2D,
    pub layout: CvLayout,
    pub op: ReconstructionOperator,
    pub n_comp: usize,
}

impl Discretization2 {
    pub fn new(mesh: Mesh2D, layout: CvLayout, n_comp: usize) -> Self {
        let op = ReconstructionOperator::new(&layout);
        Self {
            mesh,
            layout,
            op,
            n_comp,
        }
    }

    pub fn n_cv(&self) -> usize {
        let n = self.layout.n_cv();
        n * n
    }

    pub fn n_dof(&self) -> usize {
        self.mesh.n_sv() * self.n_cv() * self.n_comp
    }

    #[inline]
    pub fn sv_index(&self, ix: usize, iy: usize) -> usize {
        iy * self.mesh.x.n + ix
    }

    pub fn reconstruct(&self, data: &[f64]) -> ModalField2 {
        let mut field = ModalField2::zeros(self.layout.degree, self.n_comp, self.mesh.n_sv());
        self.reconstruct_into(data, &mut field);
        field
    }

    pub fn reconstruct_into(&self, data: &[f64], field: &mut ModalField2) {
        let block = self.n_cv() * self.n_comp;
        for i in 0..self.mesh.n_sv() {
            reconstruct_sv_2d(
                &self.op,
                self.n_comp,
                &data[i * block..(i + 1) * block],
                &mut field.data[i * block..(i + 1) * block],
            );
        }
    }

    pub fn interpolate_initial<F: Fn(f64, f64, &mut [f64])>(&self, f: F) -> SolutionState {
        let n = self.layout.n_cv();
        let m = self.n_comp;
        let mut state = SolutionState::zeros(0.0, m, self.n_dof());
        let mut vals = vec![0.0; n * n * m];
        let mut modal_x = vec![0.0; n * n * m];
        let mut modal = vec![0.0; n * n * m];
        for iy in 0..self.mesh.y.n {
            for ix in 0..self.mesh.x.n {
                let sv = self.sv_index(ix, iy);
                for (qy, &eta) in self.op.interp_nodes.iter().enumerate() {
                    let y = self.mesh.y.to_physical(iy, eta);
                    for (qx, &xi) in self.op.interp_nodes.iter().enumerate() {
                        let x = self.mesh.x.to_physical(ix, xi);
                        f(x, y, &mut vals[(qy * n + qx) * m..(qy * n + qx + 1) * m]);
                    }
                }
                // Interpolation solve along x, then along y.
                for qy in 0..n {
                    for mode in 0..n {
                        let row = &self.op.interp_to_modal[mode * n..(mode + 1) * n];
                        for s in 0..m {
                            modal_x[(qy * n + mode) * m + s] =
                                (0..n).map(|qx| row[qx] * vals[(qy * n + qx) * m + s]).sum();
                        }
                    }
                }
                for ny in 0..n {
                    let row = &self.op.interp_to_modal[ny * n..(ny + 1) * n];
                    for mx in 0..n {
                        for s in 0..m {
                            modal[(ny * n + mx) * m + s] = (0..n)
                                .map(|qy| row[qy] * modal_x[(qy * n + mx) * m + s])
                                .sum();
                        }
                    }
                }
                // Tensor averaging back to CV means.
                for jy in 0..n {
                    let ry = &self.op.to_averages[jy * n..(jy + 1) * n];
                    for jx in 0..n {
                        let rx = &self.op.to_averages[jx * n..(jx + 1) * n];
                        let base = (sv * n * n + jy * n + jx) * m;
                        for s in 0..m {
                            let mut acc = 0.0;
                            for ny in 0..n {
                                for mx in 0..n {
                                    acc += ry[ny] * rx[mx] * modal[(ny * n + mx) * m + s];
                                }
                            }
                            state.data[base + s] = acc;
                        }
                    }
                }
            }
        }
        state
    }

    pub fn average_initial<F: Fn(f64, f64, &mut [f64])>(
        &self,
        f: F,
        quad_points: usize,
    ) -> SolutionState {
        let rule = crate::geometry::QuadratureRule::gauss(quad_points)
            .expect("quadrature point count within supported range");
        let n = self.layout.n_cv();
        let m = self.n_comp;
        let mut state = SolutionState::zeros(0.0, m, self.n_dof());
        let mut vals = vec![0.0; m];
        for iy in 0..self.mesh.y.n {
            for ix in 0..self.mesh.x.n {
                let sv = self.sv_index(ix, iy);
                for jy in 0..n {
                    let ya = self.mesh.y.to_physical(iy, self.layout.bounds[jy]);
                    let yb = self.mesh.y.to_physical(iy, self.layout.bounds[jy + 1]);
                    for jx in 0..n {
                        let xa = self.mesh.x.to_physical(ix, self.layout.bounds[jx]);
                        let xb = self.mesh.x.to_physical(ix, self.layout.bounds[jx + 1]);
                        let base = (sv * n * n + jy * n + jx) * m;
                        for (&yq, &wy) in rule.nodes.iter().zip(&rule.weights) {
                            let y = 0.5 * (ya + yb) + 0.5 * (yb - ya) * yq;
                            for (&xq, &wx) in rule.nodes.iter().zip(&rule.weights) {
                                let x = 0.5 * (xa + xb) + 0.5 * (xb - xa) * xq;
                                f(x, y, &mut vals);
                                for s in 0..m {
                                    state.data[base + s] += 0.25 * wx * wy * vals[s];
                                }
                            }
                        }
                    }
                }
            }
        }
        state
    }

    /// Volume mean of one component over SV `sv`.
    pub fn sv_mean(&self, data: &[f64], sv: usize, comp: usize) -> f64 {
        let n = self.layout.n_cv();
        let mut acc = 0.0;
        for jy in 0..n {
            for jx in 0..n {
                acc += data[(sv * n * n + jy * n + jx) * self.n_comp + comp]
                    * self.layout.widths[jx]
                    * self.layout.widths[jy];
            }
        }
        0.25 * acc
    }

    pub fn sv_mean_state(&self, data: &[f64], sv: usize, out: &mut [f64]) {
        for s in 0..self.n_comp {
            out[s] = self.sv_mean(data, sv, s);
        }
    }

    pub fn total_mass(&self, data: &[f64], comp: usize) -> f64 {
        let mut acc = 0.0;
        for iy in 0..self.mesh.y.n {
            for ix in 0..self.mesh.x.n {
                let sv = self.sv_index(ix, iy);
                acc += self.sv_mean(data, sv, comp) * self.mesh.x.h(ix) * self.mesh.y.h(iy);
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CvFamily, CvLayout, Mesh1D, Mesh2D, QuadratureRule};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn layout(k: usize, family: CvFamily) -> CvLayout {
        CvLayout::new(k, family).unwrap()
    }

    #[test]
    fn operator_inverts_averaging() {
        for family in [CvFamily::GaussLegendre, CvFamily::RightRadau] {
            for k in 0..=6 {
                let op = ReconstructionOperator::new(&layout(k, family));
                let n = k + 1;
                for a in 0..n {
                    for b in 0..n {
                        let mut acc = 0.0;
                        for c in 0..n {
                            acc += op.to_averages[a * n + c] * op.to_modal[c * n + b];
                        }
                        let expect = if a == b { 1.0 } else { 0.0 };
                        assert_abs_diff_eq!(acc, expect, epsilon = 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn constant_averages_reconstruct_to_constant_mode() {
        let op = ReconstructionOperator::new(&layout(3, CvFamily::GaussLegendre));
        let averages = [2.5; 4];
        let mut modal = [0.0; 4];
        reconstruct_sv_1d(&op, 1, &averages, &mut modal);
        assert_abs_diff_eq!(modal[0], 2.5, epsilon = 1e-13);
        for m in 1..4 {
            assert_abs_diff_eq!(modal[m], 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn linear_function_reconstructs_to_first_mode() {
        // Averages of f(xi) = xi over the two k=1 Gauss CVs [-1,0], [0,1].
        let op = ReconstructionOperator::new(&layout(1, CvFamily::GaussLegendre));
        let averages = [-0.5, 0.5];
        let mut modal = [0.0; 2];
        reconstruct_sv_1d(&op, 1, &averages, &mut modal);
        assert_abs_diff_eq!(modal[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(modal[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn random_polynomial_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for family in [CvFamily::GaussLegendre, CvFamily::RightRadau] {
            for k in 0..=5 {
                let lay = layout(k, family);
                let op = ReconstructionOperator::new(&lay);
                let n = k + 1;
                let coeffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                // Average the polynomial exactly over each CV, then invert.
                let averages: Vec<f64> = (0..n)
                    .map(|j| {
                        (0..n)
                            .map(|m| coeffs[m] * op.cv_integrals[m * n + j])
                            .sum::<f64>()
                            / lay.widths[j]
                    })
                    .collect();
                let mut modal = vec![0.0; n];
                reconstruct_sv_1d(&op, 1, &averages, &mut modal);
                for m in 0..n {
                    assert_abs_diff_eq!(modal[m], coeffs[m], epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn evaluate_legendre_facts() {
        let poly = ModalPoly1::new(2, 1, 2.0, vec![0.0, 0.0, 1.0]); // p = L_2
        assert_abs_diff_eq!(poly.eval(1.0, 0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(poly.deriv(0.0, 1, 0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let k = 3;
        let h = 0.37;
        let coeffs: Vec<f64> = (0..=k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let poly = ModalPoly1::new(k, 1, h, coeffs);
        let xi = 0.3;
        let eps = 1e-6;
        // Finite difference in physical space: dxi = 2 dx / h.
        let fd =
            (poly.eval(xi + 2.0 * eps / h, 0) - poly.eval(xi - 2.0 * eps / h, 0)) / (2.0 * eps);
        let an = poly.deriv(xi, 1, 0);
        assert!((fd - an).abs() <= 1e-8 * an.abs().max(1.0));
    }

    #[test]
    fn projection_idempotent_and_orthogonal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let k = 4;
        let coeffs: Vec<f64> = (0..=k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let poly = ModalPoly1::new(k, 1, 2.0, coeffs);

        // Degree <= level: unchanged.
        let low = ModalPoly1::new(k, 1, 2.0, vec![0.3, -0.1, 0.0, 0.0, 0.0]);
        let proj = project_truncate_1d(&low, 1);
        assert_eq!(proj.coeffs, low.coeffs);

        // P^{-1} = P^0.
        assert_eq!(
            project_truncate_1d(&poly, -1).coeffs,
            project_truncate_1d(&poly, 0).coeffs
        );

        // Idempotence and orthogonality of the residual against low modes.
        let p1 = project_truncate_1d(&poly, 2);
        let p2 = project_truncate_1d(&p1, 2);
        assert_eq!(p1.coeffs, p2.coeffs);
        let rule = QuadratureRule::gauss(8).unwrap();
        for q in 0..=2usize {
            let orth = rule.integrate(-1.0, 1.0, |x| {
                (poly.eval(x, 0) - p1.eval(x, 0)) * crate::legendre::eval(q, x)
            });
            assert_abs_diff_eq!(orth, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn damping_moment_properties() {
        let lay = layout(2, CvFamily::GaussLegendre);
        let op = ReconstructionOperator::new(&lay);

        // Constant polynomial: all moments vanish.
        let constant = ModalPoly1::new(2, 1, 2.0, vec![4.2, 0.0, 0.0]);
        let mut out = [0.0];
        for l in 0..=2 {
            for j in 0..3 {
                damping_moment_1d(&constant, &op, l, j, &mut out);
                assert_abs_diff_eq!(out[0], 0.0, epsilon = 1e-14);
            }
        }

        // Sum over CVs vanishes: each deleted mode has zero SV mean.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let poly = ModalPoly1::new(2, 1, 1.3, (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect());
        for l in 0..=2 {
            let mut total = 0.0;
            for j in 0..3 {
                damping_moment_1d(&poly, &op, l, j, &mut out);
                total += out[0];
            }
            assert_abs_diff_eq!(total, 0.0, epsilon = 1e-14);
        }

        // p = L_2, l = 2, j = 0: integral of L_2 over [-1, -1/sqrt(3)].
        // Independent oracle: Gauss quadrature of L_2 over that CV.
        let rule = QuadratureRule::gauss(6).unwrap();
        let expect = rule.integrate(-1.0, lay.bounds[1], |x| crate::legendre::eval(2, x));
        let l2 = ModalPoly1::new(2, 1, 2.0, vec![0.0, 0.0, 1.0]);
        damping_moment_1d(&l2, &op, 2, 0, &mut out);
        assert_abs_diff_eq!(out[0], expect, epsilon = 1e-14);
        assert_abs_diff_eq!(out[0], 0.19245008972987523, epsilon = 1e-14);

        // Vanishes identically when p has degree <= l - 1.
        let linear = ModalPoly1::new(2, 1, 2.0, vec![0.7, -0.2, 0.0]);
        damping_moment_1d(&linear, &op, 2, 1, &mut out);
        assert_abs_diff_eq!(out[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let mesh = Mesh1D::uniform(0.0, 2.0, 5).unwrap();
        let disc = Discretization1::new(mesh, layout(2, CvFamily::GaussLegendre), 1);

        let constant = disc.interpolate_initial(|_x, out| out[0] = 3.25);
        for &v in &constant.data {
            assert_abs_diff_eq!(v, 3.25, epsilon = 1e-13);
        }

        // Quadratic reproduced exactly: compare reconstructed poly to f.
        let f = |x: f64| 0.5 * x * x - 1.7 * x + 0.3;
        let state = disc.interpolate_initial(|x, out| out[0] = f(x));
        let field = disc.reconstruct(&state.data);
        for i in 0..disc.mesh.n {
            let poly = ModalPoly1::new(2, 1, disc.mesh.h(i), field.coeffs(i).to_vec());
            for &xi in &[-1.0, -0.33, 0.41, 1.0] {
                let x = disc.mesh.to_physical(i, xi);
                assert_abs_diff_eq!(poly.eval(xi, 0), f(x), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn interpolation_error_decays_at_high_order() {
        // f = 1 + 0.2 sin(pi x) on [0, 2], k = 2: L2 error should fall ~8x
        // per refinement.
        let f = |x: f64| 1.0 + 0.2 * (std::f64::consts::PI * x).sin();
        let rule = QuadratureRule::gauss(8).unwrap();
        let mut errors = Vec::new();
        for n in [16usize, 32, 64] {
            let mesh = Mesh1D::uniform(0.0, 2.0, n).unwrap();
            let disc = Discretization1::new(mesh, layout(2, CvFamily::GaussLegendre), 1);
            let state = disc.interpolate_initial(|x, out| out[0] = f(x));
            let field = disc.reconstruct(&state.data);
            let mut err2 = 0.0;
            for i in 0..disc.mesh.n {
                let h = disc.mesh.h(i);
                let poly = ModalPoly1::new(2, 1, h, field.coeffs(i).to_vec());
                err2 += rule.integrate(-1.0, 1.0, |xi| {
                    let d = poly.eval(xi, 0) - f(disc.mesh.to_physical(i, xi));
                    d * d
                }) * 0.5
                    * h;
            }
            errors.push(err2.sqrt());
        }
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 6.0 && ratio < 10.0, "ratio {ratio}");
        }
    }

    #[test]
    fn averaging_initializer_is_exact_for_polynomials() {
        let mesh = Mesh1D::uniform(-1.0, 3.0, 4).unwrap();
        let disc = Discretization1::new(mesh, layout(2, CvFamily::RightRadau), 1);

        let constant = disc.average_initial(|_x, out| out[0] = -0.75, 4);
        for &v in &constant.data {
            assert_abs_diff_eq!(v, -0.75, epsilon = 1e-14);
        }

        // Degree-5 polynomial is integrated exactly by 4-point Gauss.
        let f = |x: f64| x.powi(5) - 2.0 * x.powi(3) + x;
        let state = disc.average_initial(|x, out| out[0] = f(x), 4);
        for i in 0..disc.mesh.n {
            for j in 0..3 {
                let xa = disc.mesh.to_physical(i, disc.layout.bounds[j]);
                let xb = disc.mesh.to_physical(i, disc.layout.bounds[j + 1]);
                let exact = (xb.powi(6) / 6.0 - xb.powi(4) / 2.0 + xb * xb / 2.0
                    - (xa.powi(6) / 6.0 - xa.powi(4) / 2.0 + xa * xa / 2.0))
                    / (xb - xa);
                assert_abs_diff_eq!(state.data[i * 3 + j], exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn step_aligned_to_sv_edge_has_no_mixed_cvs() {
        let mesh = Mesh1D::uniform(0.0, 1.0, 50).unwrap();
        let disc = Discretization1::new(mesh, layout(2, CvFamily::GaussLegendre), 1);
        let state = disc.average_initial(|x, out| out[0] = if x < 0.5 { 1.0 } else { 0.125 }, 6);
        for i in 0..disc.mesh.n {
            for j in 0..3 {
                let v = state.data[i * 3 + j];
                let expect = if disc.cv_center(i, j) < 0.5 { 1.0 } else { 0.125 };
                assert_abs_diff_eq!(v, expect, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn tensor_round_trip_2d() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        for k in [1usize, 2, 3] {
            let lay = layout(k, CvFamily::GaussLegendre);
            let op = ReconstructionOperator::new(&lay);
            let n = k + 1;
            let coeffs: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            // Exact tensor averages of the random polynomial.
            let mut averages = vec![0.0; n * n];
            for jy in 0..n {
                for jx in 0..n {
                    let mut acc = 0.0;
                    for ny in 0..n {
                        for mx in 0..n {
                            acc += coeffs[ny * n + mx]
                                * op.cv_integrals[mx * n + jx]
                                * op.cv_integrals[ny * n + jy];
                        }
                    }
                    averages[jy * n + jx] = acc / (lay.widths[jx] * lay.widths[jy]);
                }
            }
            let mut modal = vec![0.0; n * n];
            reconstruct_sv_2d(&op, 1, &averages, &mut modal);
            for idx in 0..n * n {
                assert_abs_diff_eq!(modal[idx], coeffs[idx], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn interpolation_2d_reproduces_tensor_polynomials() {
        let mesh = Mesh2D::uniform((0.0, 1.0), (0.0, 2.0), 3, 2).unwrap();
        let disc = Discretization2::new(mesh, layout(2, CvFamily::GaussLegendre), 1);
        let f = |x: f64, y: f64| (1.0 + x + 0.5 * x * x) * (2.0 - y + 0.25 * y * y);
        let state = disc.interpolate_initial(|x, y, out| out[0] = f(x, y));
        let field = disc.reconstruct(&state.data);
        for iy in 0..disc.mesh.y.n {
            for ix in 0..disc.mesh.x.n {
                let sv = disc.sv_index(ix, iy);
                let mut out = [0.0];
                for &(xi, eta) in &[(-1.0, -1.0), (0.3, -0.6), (1.0, 1.0), (0.0, 0.5)] {
                    eval_poly_2d(field.coeffs(sv), 2, 1, xi, eta, &mut out);
                    let x = disc.mesh.x.to_physical(ix, xi);
                    let y = disc.mesh.y.to_physical(iy, eta);
                    assert_abs_diff_eq!(out[0], f(x, y), epsilon = 1e-11);
                }
            }
        }
    }

    #[test]
    fn projection_2d_truncates_tensor_modes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let k = 3;
        let n = k + 1;
        let coeffs: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let poly = ModalPoly2::new(k, 1, (2.0, 2.0), coeffs);
        let proj = project_truncate_2d(&poly, 1);
        for ny in 0..n {
            for mx in 0..n {
                let kept = mx.max(ny) <= 1;
                let v = proj.coeffs[ny * n + mx];
                if kept {
                    assert_eq!(v, poly.coeffs[ny * n + mx]);
                } else {
                    assert_eq!(v, 0.0);
                }
            }
        }
        assert_eq!(
            project_truncate_2d(&poly, -1).coeffs,
            project_truncate_2d(&poly, 0).coeffs
        );
    }

    #[test]
    fn total_mass_matches_quadrature() {
        let mesh = Mesh1D::uniform(0.0, 2.0, 8).unwrap();
        let disc = Discretization1::new(mesh, layout(2, CvFamily::GaussLegendre), 1);
        let f = |x: f64| 1.0 + 0.2 * (std::f64::consts::PI * x).sin();
        let state = disc.average_initial(|x, out| out[0] = f(x), 6);
        // Sine integrates to zero over a full period on [0, 2].
        assert_abs_diff_eq!(disc.total_mass(&state.data, 0), 2.0, epsilon = 1e-12);
    }
}
