//! Legendre polynomials on the reference interval `[-1, 1]`: values,
//! derivatives of arbitrary order, and antiderivatives.
//!
//! Everything here works off the three-term recurrence
//! `(m+1) L_{m+1} = (2m+1) x L_m - m L_{m-1}`.

/// Evaluates `L_0(x) .. L_k(x)` into `out` (`out.len() == k + 1`).
pub fn eval_all(x: f64, out: &mut [f64]) {
    let k = out.len() - 1;
    out[0] = 1.0;
    if k == 0 {
        return;
    }
    out[1] = x;
    for m in 1..k {
        let mf = m as f64;
        out[m + 1] = ((2.0 * mf + 1.0) * x * out[m] - mf * out[m - 1]) / (mf + 1.0);
    }
}

/// Evaluates `L_m(x)`.
pub fn eval(m: usize, x: f64) -> f64 {
    let mut vals = vec![0.0; m + 1];
    eval_all(x, &mut vals);
    vals[m]
}

/// Table of derivatives `d^l L_m / dx^l` for `l = 0..=l_max`, `m = 0..=k`.
///
/// Row-major layout: `table[l * (k + 1) + m]`. Obtained by differentiating
/// the recurrence `l` times:
/// `(m+1) L^{(l)}_{m+1} = (2m+1)(x L^{(l)}_m + l L^{(l-1)}_m) - m L^{(l)}_{m-1}`.
pub fn derivative_table(x: f64, k: usize, l_max: usize) -> Vec<f64> {
    let width = k + 1;
    let mut table = vec![0.0; (l_max + 1) * width];
    eval_all(x, &mut table[..width]);
    for l in 1..=l_max {
        let (lower, upper) = table.split_at_mut(l * width);
        let prev = &lower[(l - 1) * width..l * width];
        let row = &mut upper[..width];
        // L_0^{(l)} = 0 and L_1^{(l)} = delta_{l,1}; recurrence fills the rest.
        row[0] = 0.0;
        if k >= 1 {
            row[1] = if l == 1 { 1.0 } else { 0.0 };
        }
        for m in 1..k {
            let mf = m as f64;
            row[m + 1] = ((2.0 * mf + 1.0) * (x * row[m] + l as f64 * prev[m])
                - mf * row[m - 1])
                / (mf + 1.0);
        }
    }
    table
}

/// First derivative `L_m'(x)`.
pub fn deriv(m: usize, x: f64) -> f64 {
    derivative_table(x, m, 1)[m + 1 + m]
}

/// Exact integral of `L_m` over `[a, b] ⊆ [-1, 1]`.
///
/// Uses the antiderivative `(L_{m+1} - L_{m-1}) / (2m + 1)` for `m ≥ 1`
/// and `x` for `m = 0`.
pub fn integral(m: usize, a: f64, b: f64) -> f64 {
    if m == 0 {
        return b - a;
    }
    let prim = |x: f64| {
        let mut vals = vec![0.0; m + 2];
        eval_all(x, &mut vals);
        (vals[m + 1] - vals[m - 1]) / (2.0 * m as f64 + 1.0)
    };
    prim(b) - prim(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn endpoint_values() {
        for m in 0..8 {
            assert_abs_diff_eq!(eval(m, 1.0), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(eval(m, -1.0), (-1.0f64).powi(m as i32), epsilon = 1e-14);
        }
    }

    #[test]
    fn low_degree_closed_forms() {
        let x = 0.37;
        assert_abs_diff_eq!(eval(2, x), (3.0 * x * x - 1.0) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(eval(3, x), (5.0 * x * x * x - 3.0 * x) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let x = -0.42;
        let eps = 1e-6;
        for m in 0..7 {
            let fd = (eval(m, x + eps) - eval(m, x - eps)) / (2.0 * eps);
            assert_abs_diff_eq!(deriv(m, x), fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn second_derivative_recurrence() {
        // L_2'' = 3 and L_3''(x) = 15 x.
        let x = 0.21;
        let table = derivative_table(x, 3, 2);
        assert_abs_diff_eq!(table[2 * 4 + 2], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(table[2 * 4 + 3], 15.0 * x, epsilon = 1e-13);
    }

    #[test]
    fn integrals_reduce_to_orthogonality() {
        // Full-interval integrals vanish for m >= 1.
        for m in 1..8 {
            assert_abs_diff_eq!(integral(m, -1.0, 1.0), 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(integral(0, -1.0, 1.0), 2.0, epsilon = 1e-15);
        // Sub-interval integral of L_1 is (b^2 - a^2) / 2.
        assert_abs_diff_eq!(integral(1, -0.3, 0.8), (0.64 - 0.09) / 2.0, epsilon = 1e-15);
    }
}
