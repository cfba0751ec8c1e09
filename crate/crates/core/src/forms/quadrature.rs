use crate::scalar::Real;

/// Quadrature on the reference triangle in barycentric coordinates.
/// Weights sum to the reference area 1/2.
#[derive(Clone, Debug)]
pub struct TriangleRule<T> {
    pub points: Vec<[T; 3]>,
    pub weights: Vec<T>,
    pub degree: usize,
}

/// Gauss-Legendre rule on `[0, 1]`; weights sum to 1.
#[derive(Clone, Debug)]
pub struct EdgeRule<T> {
    pub points: Vec<T>,
    pub weights: Vec<T>,
    pub degree: usize,
}

impl<T: Real> TriangleRule<T> {
    /// Seven-point rule exact for polynomials of degree 5.
    pub fn degree5() -> Self {
        let s15 = T::lit(15.0).sqrt();
        let c = |v: f64| T::lit(v);
        let a1 = (c(6.0) - s15) / c(21.0);
        let b1 = (c(9.0) + c(2.0) * s15) / c(21.0);
        let w1 = (c(155.0) - s15) / c(1200.0);
        let a2 = (c(6.0) + s15) / c(21.0);
        let b2 = (c(9.0) - c(2.0) * s15) / c(21.0);
        let w2 = (c(155.0) + s15) / c(1200.0);
        let third = c(1.0) / c(3.0);
        let points = vec![
            [third, third, third],
            [b1, a1, a1],
            [a1, b1, a1],
            [a1, a1, b1],
            [b2, a2, a2],
            [a2, b2, a2],
            [a2, a2, b2],
        ];
        let half = c(0.5);
        let weights = vec![c(9.0) / c(40.0) * half, w1 * half, w1 * half, w1 * half, w2 * half, w2 * half, w2 * half];
        TriangleRule { points, weights, degree: 5 }
    }
}

impl<T: Real> EdgeRule<T> {
    /// Three-point Gauss-Legendre, exact for degree 5.
    pub fn gauss3() -> Self {
        let h = T::lit(0.5);
        let off = T::lit(0.6).sqrt() * h;
        EdgeRule {
            points: vec![h - off, h, h + off],
            weights: vec![T::lit(5.0 / 18.0), T::lit(8.0 / 18.0), T::lit(5.0 / 18.0)],
            degree: 5,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn triangle_rule_is_exact_to_degree_five() {
        let rule = TriangleRule::<f64>::degree5();
        assert!(rule.weights.iter().all(|&w| w > 0.0));
        assert!((rule.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        // Integral of x^a y^b over the reference triangle is a! b! / (a + b + 2)!.
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                let approx: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(l, w)| w * l[1].powi(a as i32) * l[2].powi(b as i32))
                    .sum();
                assert!((approx - exact).abs() < 1e-15, "x^{a} y^{b}");
            }
        }
    }

    #[test]
    fn edge_rule_is_exact_to_degree_five() {
        let rule = EdgeRule::<f64>::gauss3();
        assert!(rule.weights.iter().all(|&w| w > 0.0));
        for p in 0..=5 {
            let approx: f64 = rule.points.iter().zip(&rule.weights).map(|(s, w)| w * s.powi(p)).sum();
            assert!((approx - 1.0 / (p as f64 + 1.0)).abs() < 1e-15);
        }
    }
}
