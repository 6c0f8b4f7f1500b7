//! Quadrature rules on triangles (barycentric) and on edges.

/// Quadrature on a triangle: barycentric points with weights summing to one.
/// Integrals are `area * sum_q w_q f(x_q)`.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Symmetric 6-point rule, exact for polynomials of total degree 4.
    pub fn degree4() -> Self {
        const A1: f64 = 0.445_948_490_915_964_9;
        const W1: f64 = 0.223_381_589_678_011_47;
        const A2: f64 = 0.091_576_213_509_770_74;
        const W2: f64 = 0.109_951_743_655_321_87;
        let mut points = Vec::with_capacity(6);
        let mut weights = Vec::with_capacity(6);
        for (a, w) in [(A1, W1), (A2, W2)] {
            let b = 1.0 - 2.0 * a;
            points.extend([[b, a, a], [a, b, a], [a, a, b]]);
            weights.extend([w; 3]);
        }
        TriangleRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss-Legendre rule on the unit interval `[0, 1]`.
#[derive(Debug, Clone)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl EdgeRule {
    /// Three-point Gauss rule, exact through degree 5.
    pub fn gauss3() -> Self {
        let d = 0.5 * (3.0f64 / 5.0).sqrt();
        EdgeRule { points: vec![0.5 - d, 0.5, 0.5 + d], weights: vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn triangle_rule_exact_through_degree_four() {
        // Reference triangle (0,0), (1,0), (0,1): x = l1, y = l2.
        // Exact monomial integral a! b! / (a + b + 2)!.
        let rule = TriangleRule::degree4();
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                let approx: f64 = 0.5
                    * rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(l, w)| w * l[1].powi(a as i32) * l[2].powi(b as i32))
                        .sum::<f64>();
                assert!((approx - exact).abs() < 1e-15, "x^{a} y^{b}: {approx} vs {exact}");
            }
        }
    }

    #[test]
    fn triangle_rule_not_exact_at_degree_six() {
        let rule = TriangleRule::degree4();
        let exact = factorial(6) / factorial(8);
        let approx: f64 = 0.5 * rule.points.iter().zip(&rule.weights).map(|(l, w)| w * l[1].powi(6)).sum::<f64>();
        assert!((approx - exact).abs() > 1e-8);
    }

    #[test]
    fn edge_rule_exact_through_degree_five() {
        let rule = EdgeRule::gauss3();
        for k in 0..=5 {
            let approx: f64 = rule.points.iter().zip(&rule.weights).map(|(s, w)| w * s.powi(k)).sum();
            assert!((approx - 1.0 / (k as f64 + 1.0)).abs() < 1e-15);
        }
    }
}
