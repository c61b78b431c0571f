//! Structured spectral-volume meshes, control-volume layouts, and Gauss /
//! right-Radau quadrature.
//!
//! A spectral volume (SV) is one mesh interval (1D) or rectangle (2D). Each SV
//! is subdivided into `k + 1` control volumes (CVs) per axis at either the
//! Gauss-Legendre points or the interior right-Radau points of the reference
//! interval `[-1, 1]`.

use crate::legendre;
use thiserror::Error;

/// Convergence tolerance for Newton node solves, in reference coordinates.
const NODE_TOL: f64 = 1e-15;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid extent: need b > a and at least one cell (a={a}, b={b}, n={n})")]
    InvalidExtent { a: f64, b: f64, n: usize },
    #[error("unsupported degree {0} for this operation")]
    UnsupportedDegree(usize),
    #[error("unsupported quadrature point count {0}")]
    UnsupportedCount(usize),
}

/// Which family of interior subdivision points a CV layout uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvFamily {
    /// Roots of the Legendre polynomial `L_k`.
    GaussLegendre,
    /// Roots of `L_{k+1} - L_k` excluding the right endpoint.
    RightRadau,
}

/// Uniformly-spaced 1D mesh of `n` spectral volumes on `[a, b]`.
#[derive(Debug, Clone)]
pub struct Mesh1D {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    /// `n + 1` strictly increasing SV edges, `edges[0] = a`, `edges[n] = b`.
    pub edges: Vec<f64>,
}

impl Mesh1D {
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self, GeometryError> {
        if !(b > a) || n == 0 {
            return Err(GeometryError::InvalidExtent { a, b, n });
        }
        let h = (b - a) / n as f64;
        let mut edges: Vec<f64> = (0..=n).map(|i| a + i as f64 * h).collect();
        // Pin the endpoints so the domain is reproduced exactly.
        edges[0] = a;
        edges[n] = b;
        Ok(Self { a, b, n, edges })
    }

    #[inline]
    pub fn h(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        0.5 * (self.edges[i] + self.edges[i + 1])
    }

    pub fn min_h(&self) -> f64 {
        (0..self.n).map(|i| self.h(i)).fold(f64::INFINITY, f64::min)
    }

    /// Maps a reference coordinate `xi in [-1, 1]` into SV `i`.
    #[inline]
    pub fn to_physical(&self, i: usize, xi: f64) -> f64 {
        self.center(i) + 0.5 * self.h(i) * xi
    }
}

/// Tensor product of two 1D meshes.
#[derive(Debug, Clone)]
pub struct Mesh2D {
    pub x: Mesh1D,
    pub y: Mesh1D,
}

impl Mesh2D {
    pub fn uniform(
        (ax, bx): (f64, f64),
        (ay, by): (f64, f64),
        nx: usize,
        ny: usize,
    ) -> Result<Self, GeometryError> {
        Ok(Self {
            x: Mesh1D::uniform(ax, bx, nx)?,
            y: Mesh1D::uniform(ay, by, ny)?,
        })
    }

    pub fn n_sv(&self) -> usize {
        self.x.n * self.y.n
    }
}

/// Reference-element subdivision of one SV into `k + 1` control volumes.
#[derive(Debug, Clone)]
pub struct CvLayout {
    pub degree: usize,
    pub family: CvFamily,
    /// The `k` interior subdivision points, ascending.
    pub interior: Vec<f64>,
    /// `k + 2` CV bounds: `-1`, interior points, `+1`.
    pub bounds: Vec<f64>,
    /// `k + 1` CV widths in reference coordinates; they sum to 2.
    pub widths: Vec<f64>,
}

impl CvLayout {
    pub fn new(degree: usize, family: CvFamily) -> Result<Self, GeometryError> {
        let interior = if degree == 0 {
            Vec::new()
        } else {
            match family {
                CvFamily::GaussLegendre => gauss_interior_points(degree)?,
                CvFamily::RightRadau => right_radau_interior_points(degree)?,
            }
        };
        let mut bounds = Vec::with_capacity(degree + 2);
        bounds.push(-1.0);
        bounds.extend_from_slice(&interior);
        bounds.push(1.0);
        let widths = bounds.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self {
            degree,
            family,
            interior,
            bounds,
            widths,
        })
    }

    pub fn n_cv(&self) -> usize {
        self.degree + 1
    }
}

/// Interior Gauss points for degree `k`: the roots of `L_k`, ascending.
pub fn gauss_interior_points(k: usize) -> Result<Vec<f64>, GeometryError> {
    if k == 0 {
        return Err(GeometryError::UnsupportedDegree(0));
    }
    let mut nodes = vec![0.0; k];
    for i in 0..k {
        // Chebyshev-like initial guess, then Newton on L_k.
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        for _ in 0..100 {
            let table = legendre::derivative_table(x, k, 1);
            let f = table[k];
            let df = table[k + 1 + k];
            let dx = f / df;
            x -= dx;
            if dx.abs() <= NODE_TOL {
                break;
            }
        }
        nodes[i] = x;
    }
    // Enforce exact symmetry of the root set.
    for i in 0..k / 2 {
        let s = 0.5 * (nodes[i] - nodes[k - 1 - i]);
        nodes[i] = s;
        nodes[k - 1 - i] = -s;
    }
    if k % 2 == 1 {
        nodes[k / 2] = 0.0;
    }
    Ok(nodes)
}

/// Interior right-Radau points for degree `k`: the roots of `L_{k+1} - L_k`
/// in `(-1, 1)`, ascending. The remaining root `+1` is excluded.
pub fn right_radau_interior_points(k: usize) -> Result<Vec<f64>, GeometryError> {
    if k == 0 {
        return Err(GeometryError::UnsupportedDegree(0));
    }
    let f = |x: f64| {
        let mut vals = vec![0.0; k + 2];
        legendre::eval_all(x, &mut vals);
        vals[k + 1] - vals[k]
    };
    // Bracket the k interior roots on a fine grid, then refine by safeguarded
    // Newton (bisection fallback keeps the iterate inside its bracket).
    let samples = 64 * (k + 1);
    let upper = 1.0 - 1e-9; // exclude the root at +1
    let mut roots = Vec::with_capacity(k);
    let mut xa = -1.0;
    let mut fa = f(xa);
    for s in 1..=samples {
        let xb = -1.0 + (upper + 1.0) * s as f64 / samples as f64;
        let fb = f(xb);
        if fa == 0.0 {
            roots.push(xa);
        } else if fa * fb < 0.0 {
            roots.push(refine_root(&f, k, xa, xb));
        }
        xa = xb;
        fa = fb;
    }
    assert_eq!(roots.len(), k, "right-Radau bracketing must find k roots");
    Ok(roots)
}

fn refine_root(f: &dyn Fn(f64) -> f64, k: usize, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let table = legendre::derivative_table(x, k + 1, 1);
        let fx = table[k + 1] - table[k];
        let dfx = table[(k + 2) + k + 1] - table[(k + 2) + k];
        if fx == 0.0 {
            return x;
        }
        if fx * flo < 0.0 {
            hi = x;
        } else {
            lo = x;
            flo = fx;
        }
        let mut next = x - fx / dfx;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= NODE_TOL {
            return next;
        }
        x = next;
    }
    x
}

/// Gauss-Legendre quadrature nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// `n`-point Gauss rule, exact for polynomials of degree `2n - 1`.
    pub fn gauss(n: usize) -> Result<Self, GeometryError> {
        if n == 0 || n > 16 {
            return Err(GeometryError::UnsupportedCount(n));
        }
        let nodes = if n == 1 {
            vec![0.0]
        } else {
            gauss_interior_points(n)?
        };
        let weights = nodes
            .iter()
            .map(|&x| {
                let table = legendre::derivative_table(x, n, 1);
                let dp = table[n + 1 + n];
                2.0 / ((1.0 - x * x) * dp * dp)
            })
            .collect();
        Ok(Self { nodes, weights })
    }

    /// `n`-point right-Radau rule (nodes: interior right-Radau points plus
    /// `+1`), exact for polynomials of degree `2n - 2`.
    pub fn right_radau(n: usize) -> Result<Self, GeometryError> {
        if n == 0 || n > 16 {
            return Err(GeometryError::UnsupportedCount(n));
        }
        let mut nodes = if n == 1 {
            Vec::new()
        } else {
            right_radau_interior_points(n - 1)?
        };
        nodes.push(1.0);
        // Weights by moment matching in the Legendre basis:
        // sum_q w_q L_m(x_q) = 2 delta_{m0}, m = 0..n-1.
        let mut vand = nalgebra::DMatrix::zeros(n, n);
        for (q, &x) in nodes.iter().enumerate() {
            let mut vals = vec![0.0; n];
            legendre::eval_all(x, &mut vals);
            for m in 0..n {
                vand[(m, q)] = vals[m];
            }
        }
        let mut rhs = nalgebra::DVector::zeros(n);
        rhs[0] = 2.0;
        let weights = vand
            .lu()
            .solve(&rhs)
            .expect("right-Radau moment system is nonsingular")
            .iter()
            .copied()
            .collect();
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}
