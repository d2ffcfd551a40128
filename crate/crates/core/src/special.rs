//! Special-function helpers shared by the quadrature and transform layers:
//! Gauss-Legendre rules and Bessel functions of integer order.

/// Gauss-Legendre nodes and weights on (-1, 1), nodes ascending.
///
/// Newton iteration on the Legendre recurrence; accurate to ~1e-15 for the
/// rule sizes used here (tested up to n = 2048). A rule of size n integrates
/// polynomials of degree 2n-1 exactly.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess for the i-th root (counting from +1 side).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P'_n by recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 1..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        // The middle node is exactly zero; the loop above already set it.
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Bessel functions J_0(x) .. J_{m_max}(x) by Miller's downward recurrence.
///
/// Stable for the whole range used by the far-field transform (orders to
/// ~1024, arguments to ~300). Orders far above the argument underflow to
/// zero, which is the correct asymptotic behaviour.
pub fn bessel_j_upto(m_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; m_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    // Start the downward recurrence well above both the order and the
    // argument so the unnormalized solution has converged onto J.
    let start = {
        let base = m_max.max(ax.ceil() as usize);
        let pad = 16 + (2.0 * (base as f64).sqrt()).ceil() as usize;
        (base + pad + 1) & !1 // even
    };
    let mut jp = 0.0f64; // J_{k+1} (unnormalized)
    let mut j = 1e-30f64; // J_k
    let mut norm = 0.0f64; // accumulates J_0 + 2 sum J_{2k}
    for k in (0..=start).rev() {
        let jm = (2.0 * (k as f64 + 1.0) / ax) * j - jp;
        jp = j;
        j = jm;
        // Rescale to avoid overflow of the unnormalized solution.
        if j.abs() > 1e250 {
            let s = 1e-250;
            j *= s;
            jp *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
        if k <= m_max {
            out[k] = j;
        }
        if k % 2 == 0 {
            norm += if k == 0 { j } else { 2.0 * j };
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    if x < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_five_point_reference() {
        // Abramowitz & Stegun 25.4.30 values for n = 5.
        let (x, w) = gauss_legendre(5);
        assert_abs_diff_eq!(x[0], -0.906179845938664, epsilon = 1e-14);
        assert_abs_diff_eq!(x[2], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w[0], 0.236926885056189, epsilon = 1e-14);
        assert_abs_diff_eq!(w[2], 0.568888888888889, epsilon = 1e-14);
    }

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        let (x, w) = gauss_legendre(8);
        // degree 15 is the highest exactly integrated polynomial
        let quad: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(14)).sum();
        assert_abs_diff_eq!(quad, 2.0 / 15.0, epsilon = 1e-14);
        let total: f64 = w.iter().sum();
        assert_abs_diff_eq!(total, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn gauss_legendre_large_rule_integrates_gaussian() {
        let (x, w) = gauss_legendre(128);
        let quad: f64 = x
            .iter()
            .zip(&w)
            .map(|(xi, wi)| wi * (-8.0 * xi * xi).exp())
            .sum();
        // int_{-1}^{1} exp(-8 x^2) dx = sqrt(pi/8) erf(2*sqrt(2))
        let exact = 0.6266173746426142;
        assert_abs_diff_eq!(quad, exact, epsilon = 1e-13);
    }

    #[test]
    fn bessel_reference_values() {
        let j = bessel_j_upto(10, 1.0);
        assert_abs_diff_eq!(j[0], 0.7651976865579666, epsilon = 1e-13);
        assert_abs_diff_eq!(j[1], 0.4400505857449335, epsilon = 1e-13);
        let j = bessel_j_upto(5, 2.0);
        assert_abs_diff_eq!(j[5], 0.007039629755871685, epsilon = 1e-13);
        let j = bessel_j_upto(20, 20.0);
        assert_abs_diff_eq!(j[10], 0.18648255802394512, epsilon = 1e-12);
        assert_abs_diff_eq!(j[20], 0.16474777377532653, epsilon = 1e-12);
    }

    #[test]
    fn bessel_high_order_underflows_cleanly() {
        let j = bessel_j_upto(512, 10.0);
        assert!(j[400].abs() < 1e-300 || j[400] == 0.0);
        assert!(j.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn bessel_negative_argument_parity() {
        let jp = bessel_j_upto(6, 3.0);
        let jn = bessel_j_upto(6, -3.0);
        for k in 0..=6 {
            let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
            assert_abs_diff_eq!(jn[k], sign * jp[k], epsilon = 1e-15);
        }
    }
}
