//! Quadrature on the reference triangle (barycentric points, weights
//! summing to one) and on intervals.

/// A rule on the reference triangle. Integrals over a cell `K` are
/// `|K| * sum_q weights[q] * g(points[q])`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    /// Seven-point symmetric rule exact for total degree 5 (Radon).
    ///
    /// Every spatial integral of the scheme uses this rule: the highest
    /// degree integrand is the trilinear convection form (2 + 1 + 2).
    pub fn degree5() -> Self {
        let s15 = 15f64.sqrt();
        let a1 = (6.0 - s15) / 21.0;
        let b1 = (9.0 + 2.0 * s15) / 21.0;
        let a2 = (6.0 + s15) / 21.0;
        let b2 = (9.0 - 2.0 * s15) / 21.0;
        let w1 = (155.0 - s15) / 1200.0;
        let w2 = (155.0 + s15) / 1200.0;
        let third = 1.0 / 3.0;
        QuadratureRule {
            points: vec![
                [third, third, third],
                [a1, a1, b1],
                [a1, b1, a1],
                [b1, a1, a1],
                [a2, a2, b2],
                [a2, b2, a2],
                [b2, a2, a2],
            ],
            weights: vec![9.0 / 40.0, w1, w1, w1, w2, w2, w2],
            degree: 5,
        }
    }

    /// Collapsed (conical product) Gauss rule exact for total degree `degree`.
    ///
    /// Used for integrals with an analytic, non-P2 integrand where the
    /// seven-point rule is not exact.
    pub fn collapsed_gauss(degree: usize) -> Self {
        // in the collapsed direction the Jacobian adds one polynomial degree
        let n = (degree + 2).div_ceil(2);
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            let s = 0.5 * (x[i] + 1.0);
            for j in 0..n {
                let t = 0.5 * (x[j] + 1.0);
                let xi = s;
                let eta = t * (1.0 - s);
                points.push([1.0 - xi - eta, xi, eta]);
                // 0.25 maps [-1,1]^2 to [0,1]^2, factor 2 normalizes by the reference area
                weights.push(0.5 * w[i] * w[j] * (1.0 - s));
            }
        }
        QuadratureRule { points, weights, degree }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration
/// on the three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Three-point Gauss rule mapped to `[a, b]`, weights normalized to sum to one.
pub fn gauss3_interval(a: f64, b: f64) -> [(f64, f64); 3] {
    let r = (0.6f64).sqrt();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    [(mid - half * r, 5.0 / 18.0), (mid, 8.0 / 18.0), (mid + half * r, 5.0 / 18.0)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Closed form of the integral of x^a y^b over the unit right triangle.
    fn monomial_integral(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    fn check_exactness(rule: &QuadratureRule, degree: u32, tol: f64) {
        assert!(rule.weights.iter().all(|&w| w > 0.0));
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for a in 0..=degree {
            for b in 0..=(degree - a) {
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * p[1].powi(a as i32) * p[2].powi(b as i32))
                    .sum::<f64>()
                    * 0.5;
                let exact = monomial_integral(a, b);
                assert!((q - exact).abs() <= tol * exact, "x^{a} y^{b}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn degree5_is_exact_on_all_monomials() {
        let rule = QuadratureRule::degree5();
        assert_eq!(rule.len(), 7);
        check_exactness(&rule, 5, 1e-14);
    }

    #[test]
    fn degree5_is_not_exact_at_degree6() {
        let rule = QuadratureRule::degree5();
        let q: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * p[1].powi(6)).sum::<f64>() * 0.5;
        assert!((q - monomial_integral(6, 0)).abs() > 1e-8);
    }

    #[test]
    fn collapsed_rules_are_exact() {
        for d in [1, 4, 8, 13] {
            check_exactness(&QuadratureRule::collapsed_gauss(d), d as u32, 1e-12);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..10 {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn time_rule_matches_sine_average() {
        // (1/dt) * int sin t dt = (cos a - cos b)/(b - a)
        for &(a, dt) in &[(0.0, 0.1), (0.3, 0.05), (2.0, 0.1)] {
            let b = a + dt;
            let avg: f64 = gauss3_interval(a, b).iter().map(|&(t, w)| w * f64::sin(t)).sum();
            let exact = (f64::cos(a) - f64::cos(b)) / (b - a);
            assert!((avg - exact).abs() <= 1e-10);
        }
    }
}
