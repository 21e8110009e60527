use crate::Point;

/// A complex polynomial `f(z) = sum a_k z^k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexPoly {
    pub coeffs: Vec<Point>,
}

impl ComplexPoly {
    pub fn new(coeffs: Vec<Point>) -> Self {
        let mut p = Self { coeffs };
        while p.coeffs.last().is_some_and(|c| *c == Point::new(0.0, 0.0)) {
            p.coeffs.pop();
        }
        p
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, z: Point) -> Point {
        self.coeffs
            .iter()
            .rev()
            .fold(Point::new(0.0, 0.0), |acc, a| acc * z + a)
    }

    pub fn derivative(&self) -> ComplexPoly {
        ComplexPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, a)| a * k as f64)
                .collect(),
        )
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, z: Point) -> (Point, Point) {
        let zero = Point::new(0.0, 0.0);
        let mut f = zero;
        let mut df = zero;
        for a in self.coeffs.iter().rev() {
            df = df * z + f;
            f = f * z + a;
        }
        (f, df)
    }

    /// All complex roots of `f(z) - w`, by Aberth iteration.
    pub fn solve(&self, w: Point) -> Vec<Point> {
        let mut c = self.coeffs.clone();
        if c.is_empty() {
            return Vec::new();
        }
        c[0] -= w;
        let p = ComplexPoly::new(c);
        let n = p.degree();
        if n == 0 {
            return Vec::new();
        }
        let lead = p.coeffs[n];
        let bound = 1.0
            + p.coeffs[..n]
                .iter()
                .map(|a| (a / lead).norm())
                .fold(0.0, f64::max);
        let mut roots: Vec<Point> = (0..n)
            .map(|k| Point::from_polar(bound * 0.5, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect();
        for _ in 0..500 {
            let mut max_step: f64 = 0.0;
            for i in 0..n {
                let (f, df) = p.eval_with_derivative(roots[i]);
                if f.norm() == 0.0 {
                    continue;
                }
                let ratio = f / df;
                let repulsion: Point = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| Point::new(1.0, 0.0) / (roots[i] - roots[j]))
                    .sum();
                let step = ratio / (Point::new(1.0, 0.0) - ratio * repulsion);
                roots[i] -= step;
                max_step = max_step.max(step.norm());
            }
            if max_step < 1e-15 * bound {
                break;
            }
        }
        roots
    }
}

/// Harmonic function `h = Re f` for a complex polynomial `f`; the conjugate
/// `h* = Im f` satisfies the Cauchy-Riemann relations with `h`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HarmonicPoly {
    pub poly: ComplexPoly,
}

impl HarmonicPoly {
    pub fn new(coeffs: Vec<Point>) -> Self {
        Self {
            poly: ComplexPoly::new(coeffs),
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![Point::new(c, 0.0)])
    }

    pub fn is_zero(&self) -> bool {
        self.poly.coeffs.is_empty()
    }

    pub fn h(&self, z: Point) -> f64 {
        self.poly.eval(z).re
    }

    pub fn conjugate(&self, z: Point) -> f64 {
        self.poly.eval(z).im
    }

    /// Gradient of `h` packed as `h_x + i h_y`, which is `conj(f'(z))`.
    pub fn gradient(&self, z: Point) -> Point {
        self.poly.eval_with_derivative(z).1.conj()
    }

    /// `h(a z + b) + shift`, again harmonic.
    pub fn compose_affine(&self, a: Point, b: Point, shift: f64) -> Self {
        // Expand sum c_k (a z + b)^k by repeated multiplication.
        let n = self.poly.coeffs.len();
        let mut out = vec![Point::new(0.0, 0.0); n.max(1)];
        let mut power = vec![Point::new(1.0, 0.0)];
        for c in &self.poly.coeffs {
            for (k, p) in power.iter().enumerate() {
                out[k] += c * p;
            }
            let mut next = vec![Point::new(0.0, 0.0); power.len() + 1];
            for (k, p) in power.iter().enumerate() {
                next[k] += p * b;
                next[k + 1] += p * a;
            }
            power = next;
        }
        out[0] += Point::new(shift, 0.0);
        Self::new(out)
    }
}

/// `h*(z1) - h*(z2)`: the flux of `h` across any arc from `z1` to `z2`.
pub fn conjugate_diff(h: &HarmonicPoly, z1: Point, z2: Point) -> f64 {
    h.conjugate(z1) - h.conjugate(z2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn conjugate_diff_examples() {
        let re_z = HarmonicPoly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(conjugate_diff(&re_z, c(0.0, 0.0), c(0.0, 1.0)), -1.0);
        let constant = HarmonicPoly::constant(3.5);
        assert_eq!(conjugate_diff(&constant, c(0.2, 7.0), c(-1.0, 2.0)), 0.0);
        let re_z2 = HarmonicPoly::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!((conjugate_diff(&re_z2, c(1.0, 0.0), c(1.0, 1.0)) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn cauchy_riemann_and_laplacian_by_finite_differences() {
        let h = HarmonicPoly::new(vec![c(0.3, -1.0), c(1.0, 2.0), c(-0.5, 0.25), c(0.1, 0.7), c(0.02, -0.3)]);
        let e = 1e-4;
        for z in [c(0.1, 0.2), c(-0.7, 0.4), c(1.1, -0.9)] {
            let hx = (h.h(z + e) - h.h(z - e)) / (2.0 * e);
            let hy = (h.h(z + c(0.0, e)) - h.h(z - c(0.0, e))) / (2.0 * e);
            let sx = (h.conjugate(z + e) - h.conjugate(z - e)) / (2.0 * e);
            let sy = (h.conjugate(z + c(0.0, e)) - h.conjugate(z - c(0.0, e))) / (2.0 * e);
            assert!((hx - sy).abs() < 1e-6);
            assert!((hy + sx).abs() < 1e-6);
            let g = h.gradient(z);
            assert!((g.re - hx).abs() < 1e-6 && (g.im - hy).abs() < 1e-6);
            let e2 = 1e-3;
            let lap = (h.h(z + e2) + h.h(z - e2) + h.h(z + c(0.0, e2)) + h.h(z - c(0.0, e2)) - 4.0 * h.h(z))
                / (e2 * e2);
            assert!(lap.abs() < 1e-5, "laplacian {lap}");
        }
    }

    #[test]
    fn compose_affine_matches_direct() {
        let h = HarmonicPoly::new(vec![c(1.0, 0.0), c(0.5, -0.2), c(0.0, 1.0), c(0.3, 0.3)]);
        let (a, b) = (c(0.4, 0.1), c(-0.2, 0.9));
        let g = h.compose_affine(a, b, 0.75);
        for z in [c(0.0, 0.0), c(0.3, -0.6), c(1.2, 0.5)] {
            assert!((g.h(z) - h.h(a * z + b) - 0.75).abs() < 1e-13);
        }
    }

    #[test]
    fn roots_of_square() {
        let sq = ComplexPoly::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let mut r = sq.solve(c(0.0, 4.0));
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        let s = 2f64.sqrt();
        assert!((r[0] - c(-s, -s)).norm() < 1e-12);
        assert!((r[1] - c(s, s)).norm() < 1e-12);
    }
}
