use std::f64::consts::PI;

/// Gauss–Legendre rule mapped to the reference interval `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Five points per element: exact up to degree 9, which covers the
    /// cubic·cubic·cubic integrand of the weighted mass matrix.
    pub fn default_rule() -> Self {
        Self::gauss_legendre(5)
    }

    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn gauss_legendre(n: usize) -> Self {
        assert!(n >= 1, "quadrature needs at least one point");
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Chebyshev-like initial guess, then Newton on P_n.
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            // map [-1, 1] -> [0, 1]
            points[i] = 0.5 * (1.0 - z);
            points[n - 1 - i] = 0.5 * (1.0 + z);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn order(&self) -> usize {
        2 * self.points.len() - 1
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let len = b - a;
        self.iter().map(|(s, w)| w * f(a + s * len)).sum::<f64>() * len
    }
}

/// Legendre polynomial `P_n(z)` and its derivative.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_positive_and_sum_to_one() {
        for n in 1..=8 {
            let q = QuadratureRule::gauss_legendre(n);
            assert!(q.weights().iter().all(|&w| w > 0.0));
            let s: f64 = q.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "n={n}: {s}");
        }
    }

    #[test]
    fn exact_on_monomials_up_to_declared_order() {
        for n in 1..=6 {
            let q = QuadratureRule::gauss_legendre(n);
            for k in 0..=q.order() {
                let got = q.integrate(0.0, 1.0, |x| x.powi(k as i32));
                let exact = 1.0 / (k as f64 + 1.0);
                assert!((got - exact).abs() < 1e-14, "n={n} k={k}");
            }
            // one degree beyond is not exact
            let k = q.order() + 1;
            let got = q.integrate(0.0, 1.0, |x| x.powi(k as i32));
            assert!((got - 1.0 / (k as f64 + 1.0)).abs() > 1e-12);
        }
    }

    #[test]
    fn five_point_nodes_match_tabulated_values() {
        let q = QuadratureRule::default_rule();
        // 0.5 * (1 - 0.9061798459386640) etc.
        assert!((q.points()[0] - 0.046910077030668).abs() < 1e-14);
        assert!((q.points()[2] - 0.5).abs() < 1e-15);
        assert!((q.weights()[2] - 0.5 * 0.568888888888889).abs() < 1e-14);
    }
}
